// Copyright Contributors to the gsreg Project
// SPDX-License-Identifier: Apache-2.0

#include "gsreg/gaussian.hpp"

#include <cmath>
#include <stdexcept>

namespace gsreg {

Eigen::Matrix3d quaternion_to_matrix(const Eigen::Vector4d &q) {
    const double n = q.norm();
    if (!(n > 0.0) || !std::isfinite(n))
        throw std::invalid_argument("quaternion_to_matrix: zero or non-finite quaternion");
    const double w = q[0] / n, x = q[1] / n, y = q[2] / n, z = q[3] / n;

    Eigen::Matrix3d r;
    r(0, 0) = 1 - 2 * (y * y + z * z);
    r(0, 1) = 2 * (x * y - w * z);
    r(0, 2) = 2 * (x * z + w * y);
    r(1, 0) = 2 * (x * y + w * z);
    r(1, 1) = 1 - 2 * (x * x + z * z);
    r(1, 2) = 2 * (y * z - w * x);
    r(2, 0) = 2 * (x * z - w * y);
    r(2, 1) = 2 * (y * z + w * x);
    r(2, 2) = 1 - 2 * (x * x + y * y);
    return r;
}

Covariance3D covariance_from_scale_rotation(const Eigen::Vector3d &scale,
                                            const Eigen::Vector4d &rotation) {
    if (!scale.allFinite() || !rotation.allFinite())
        throw std::invalid_argument("covariance_from_scale_rotation: non-finite input");
    if (!(scale.minCoeff() > 0.0))
        throw std::invalid_argument("covariance_from_scale_rotation: scale must be positive");

    const Eigen::Matrix3d r = quaternion_to_matrix(rotation);
    const Eigen::Matrix3d m = r * scale.asDiagonal();
    Covariance3D out;
    out.matrix = m * m.transpose();
    return out;
}

std::optional<Gaussian2D> project_gaussian(const GaussianPrimitive &p,
                                           const Camera &cam) {
    const Eigen::Vector3d t = cam.world_to_camera(p.mu);
    if (!(t.z() > kZNear))
        return std::nullopt;

    const double fx = cam.focal.x(), fy = cam.focal.y();
    const double inv_z = 1.0 / t.z();

    Gaussian2D g;
    g.mean2d = Eigen::Vector2d(fx * t.x() * inv_z + cam.principal_point.x(),
                               fy * t.y() * inv_z + cam.principal_point.y());

    // Jacobian of the perspective map at t.
    Eigen::Matrix<double, 2, 3> jac;
    jac << fx * inv_z, 0, -fx * t.x() * inv_z * inv_z,
           0, fy * inv_z, -fy * t.y() * inv_z * inv_z;

    const Eigen::Matrix3d sigma = covariance_from_scale_rotation(p.scale, p.rotation).matrix;
    const Eigen::Matrix3d w = cam.rotation();
    g.cov2d = jac * w * sigma * w.transpose() * jac.transpose();
    g.cov2d(0, 0) += kLowPass;
    g.cov2d(1, 1) += kLowPass;

    const double det = g.cov2d.determinant();
    if (!std::isfinite(det) || det <= 1e-12)
        return std::nullopt;

    g.view_depth = (p.mu - cam.center()).norm();
    return g;
}

double eval_gaussian_2d(const Gaussian2D &g, const Eigen::Vector2d &pixel) {
    const double a = g.cov2d(0, 0), b = g.cov2d(0, 1), c = g.cov2d(1, 1);
    const double det = a * c - b * b;
    if (!(std::abs(det) > 1e-300))
        throw std::runtime_error("eval_gaussian_2d: singular covariance");
    const Eigen::Vector2d d = pixel - g.mean2d;
    const double quad = (c * d.x() * d.x() - 2 * b * d.x() * d.y() + a * d.y() * d.y()) / det;
    return std::exp(-0.5 * quad);
}

} // namespace gsreg
