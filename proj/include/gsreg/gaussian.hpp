// Copyright Contributors to the gsreg Project
// SPDX-License-Identifier: Apache-2.0

#ifndef GSREG_GAUSSIAN_HPP
#define GSREG_GAUSSIAN_HPP

#include <Eigen/Core>
#include <Eigen/Geometry>
#include <optional>
#include <vector>

namespace gsreg {

/// One anisotropic 3D Gaussian. The quaternion is stored (w, x, y, z) and is
/// kept unit-length by the optimizer; opacity lives in (0,1); color in [0,1]^3
/// is enforced by clamping at render time only.
struct GaussianPrimitive {
    Eigen::Vector3d mu = Eigen::Vector3d::Zero();
    Eigen::Vector3d scale = Eigen::Vector3d::Ones();
    Eigen::Vector4d rotation = Eigen::Vector4d(1, 0, 0, 0); // (w,x,y,z)
    double opacity = 0.5;
    Eigen::Vector3d color = Eigen::Vector3d(0.5, 0.5, 0.5);
};

/// 3x3 symmetric positive semi-definite world-space covariance.
struct Covariance3D {
    Eigen::Matrix3d matrix = Eigen::Matrix3d::Identity();
};

/// Pinhole camera. `pose` maps world points into the camera frame
/// (x right, y down, z forward); `center()` is the camera origin in world
/// coordinates.
struct Camera {
    Eigen::Matrix4d pose = Eigen::Matrix4d::Identity(); // world -> camera
    Eigen::Vector2d focal = Eigen::Vector2d(1, 1);      // pixels
    Eigen::Vector2d principal_point = Eigen::Vector2d(0, 0);
    int height = 1;
    int width = 1;

    Eigen::Matrix3d rotation() const { return pose.topLeftCorner<3, 3>(); }
    Eigen::Vector3d translation() const { return pose.topRightCorner<3, 1>(); }

    /// Camera origin o in world coordinates: o = -R^T t.
    Eigen::Vector3d center() const {
        return -rotation().transpose() * translation();
    }

    Eigen::Vector3d world_to_camera(const Eigen::Vector3d &p) const {
        return rotation() * p + translation();
    }
};

/// Projected footprint of one primitive on the image plane.
struct Gaussian2D {
    Eigen::Vector2d mean2d = Eigen::Vector2d::Zero(); // pixels
    Eigen::Matrix2d cov2d = Eigen::Matrix2d::Identity();
    double view_depth = 0.0; // ||mu - o||, world units
};

struct Scene {
    std::vector<GaussianPrimitive> primitives;
    Eigen::Vector3d background = Eigen::Vector3d::Zero();
};

/// Primitives with camera-space z below this are culled from rendering.
inline constexpr double kZNear = 0.01;

/// Additive low-pass term on the projected covariance diagonal (pixels^2).
/// Keeps sub-pixel footprints invertible.
inline constexpr double kLowPass = 0.3;

/// Rotation matrix of a (w,x,y,z) quaternion. The quaternion is normalized
/// internally, so any nonzero 4-vector is accepted.
Eigen::Matrix3d quaternion_to_matrix(const Eigen::Vector4d &q);

/// Sigma = R diag(scale)^2 R^T. Throws std::invalid_argument on non-finite
/// input, non-positive scale, or a zero quaternion.
Covariance3D covariance_from_scale_rotation(const Eigen::Vector3d &scale,
                                            const Eigen::Vector4d &rotation);

/// EWA-style projection: perspective mean, first-order covariance
/// J W Sigma W^T J^T plus the low-pass term, and view_depth = ||mu - o||.
/// Returns nullopt when the primitive is behind the near plane or the
/// regularized footprint is degenerate.
std::optional<Gaussian2D> project_gaussian(const GaussianPrimitive &p,
                                           const Camera &cam);

/// exp(-1/2 (x - mean)^T cov2d^{-1} (x - mean)). Throws if cov2d is singular.
double eval_gaussian_2d(const Gaussian2D &g, const Eigen::Vector2d &pixel);

} // namespace gsreg

#endif
