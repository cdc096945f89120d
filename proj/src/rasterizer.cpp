// Copyright Contributors to the gsreg Project
// SPDX-License-Identifier: Apache-2.0

#include "gsreg/rasterizer.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace gsreg {

namespace {

struct Splat {
    int prim = -1;                 // index into Scene::primitives
    Eigen::Vector2d mean2d;
    Eigen::Matrix2d cov2d;
    Eigen::Matrix2d conic;         // cov2d^{-1}
    Eigen::Vector3d color;         // clamped to [0,1]
    Eigen::Vector3d color_raw;
    double opacity = 0.0;
    double view_depth = 0.0;
    Eigen::Vector3d t_cam;         // camera-space center, for the Jacobian
    int x0 = 0, x1 = -1, y0 = 0, y1 = -1; // inclusive pixel bounds
};

struct ProjectedScene {
    std::vector<Splat> splats;     // sorted by (view_depth, prim)
    double quad_max = 0.0;         // exponent cutoff: skip if quad > quad_max
};

ProjectedScene project_scene(const Scene &scene, const Camera &cam,
                             const RenderOptions &opts) {
    if (scene.primitives.empty())
        throw std::invalid_argument("render: empty scene");

    ProjectedScene ps;
    ps.quad_max = -2.0 * std::log(opts.cull_eps);
    const double radius_k = std::sqrt(ps.quad_max);

    ps.splats.reserve(scene.primitives.size());
    for (size_t i = 0; i < scene.primitives.size(); ++i) {
        const GaussianPrimitive &p = scene.primitives[i];
        const bool finite = p.mu.allFinite() && p.scale.allFinite() &&
                            p.rotation.allFinite() && std::isfinite(p.opacity) &&
                            p.color.allFinite();
        if (!finite)
            throw std::runtime_error("render: non-finite parameter in primitive " +
                                     std::to_string(i));

        auto proj = project_gaussian(p, cam);
        if (!proj)
            continue;

        Splat s;
        s.prim = static_cast<int>(i);
        s.mean2d = proj->mean2d;
        s.cov2d = proj->cov2d;
        const double det = s.cov2d.determinant();
        s.conic << s.cov2d(1, 1) / det, -s.cov2d(0, 1) / det,
                   -s.cov2d(1, 0) / det, s.cov2d(0, 0) / det;
        s.color_raw = p.color;
        s.color = p.color.cwiseMax(0.0).cwiseMin(1.0);
        s.opacity = p.opacity;
        s.view_depth = proj->view_depth;
        s.t_cam = cam.world_to_camera(p.mu);

        const double rx = radius_k * std::sqrt(s.cov2d(0, 0));
        const double ry = radius_k * std::sqrt(s.cov2d(1, 1));
        s.x0 = std::max(0, static_cast<int>(std::floor(s.mean2d.x() - rx)));
        s.x1 = std::min(cam.width - 1, static_cast<int>(std::ceil(s.mean2d.x() + rx)));
        s.y0 = std::max(0, static_cast<int>(std::floor(s.mean2d.y() - ry)));
        s.y1 = std::min(cam.height - 1, static_cast<int>(std::ceil(s.mean2d.y() + ry)));
        if (s.x0 > s.x1 || s.y0 > s.y1)
            continue; // footprint entirely off-raster

        ps.splats.push_back(s);
    }

    std::sort(ps.splats.begin(), ps.splats.end(), [](const Splat &a, const Splat &b) {
        if (a.view_depth != b.view_depth)
            return a.view_depth < b.view_depth;
        return a.prim < b.prim;
    });
    return ps;
}

// Quadratic form d^T conic d.
inline double quad_form(const Eigen::Matrix2d &conic, double dx, double dy) {
    return conic(0, 0) * dx * dx + 2.0 * conic(0, 1) * dx * dy +
           conic(1, 1) * dy * dy;
}

struct ForwardTargets {
    ImageBuffer *color = nullptr;
    DepthMap *depth = nullptr;
};

void forward_standard(const ProjectedScene &ps, const Scene &scene,
                      const Camera &cam, const RenderOptions &opts,
                      const ForwardTargets &out) {
    const int h = cam.height, w = cam.width;
    for (int r = 0; r < h; ++r) {
        for (int c = 0; c < w; ++c) {
            const double px = c, py = r;
            double transmittance = 1.0;
            Eigen::Vector3d col = Eigen::Vector3d::Zero();
            double depth = 0.0, alpha_sum = 0.0;
            for (const Splat &s : ps.splats) {
                if (c < s.x0 || c > s.x1 || r < s.y0 || r > s.y1)
                    continue;
                const double q = quad_form(s.conic, px - s.mean2d.x(), py - s.mean2d.y());
                if (q > ps.quad_max)
                    continue;
                const double g = std::exp(-0.5 * q);
                const double a = std::min(s.opacity * g, opts.alpha_clamp);
                const double wgt = a * transmittance;
                col += s.color * wgt;
                depth += s.view_depth * wgt;
                alpha_sum += wgt;
                transmittance *= 1.0 - a;
                if (transmittance < opts.transmittance_floor)
                    break;
            }
            if (out.color) {
                col += scene.background * transmittance;
                out.color->at(r, c, 0) = col[0];
                out.color->at(r, c, 1) = col[1];
                out.color->at(r, c, 2) = col[2];
            }
            if (out.depth) {
                out.depth->at(r, c) = depth;
                out.depth->alpha_at(r, c) = alpha_sum;
            }
        }
    }
}

void forward_enhanced(const ProjectedScene &ps, const Camera &cam,
                      double omega, DepthMap &out) {
    // Rank weights omega*(1-omega)^n are fixed per splat across all pixels.
    std::vector<double> rank_weight(ps.splats.size());
    double wr = omega;
    for (size_t n = 0; n < ps.splats.size(); ++n) {
        rank_weight[n] = wr;
        wr *= 1.0 - omega;
    }
    const int h = cam.height, w = cam.width;
    for (int r = 0; r < h; ++r) {
        for (int c = 0; c < w; ++c) {
            double depth = 0.0, weight_sum = 0.0;
            for (size_t n = 0; n < ps.splats.size(); ++n) {
                const Splat &s = ps.splats[n];
                if (c < s.x0 || c > s.x1 || r < s.y0 || r > s.y1)
                    continue;
                const double q = quad_form(s.conic, c - s.mean2d.x(), r - s.mean2d.y());
                if (q > ps.quad_max)
                    continue;
                const double g = std::exp(-0.5 * q);
                depth += rank_weight[n] * g * s.view_depth;
                weight_sum += rank_weight[n] * g;
            }
            out.at(r, c) = depth;
            out.alpha_at(r, c) = weight_sum;
        }
    }
}

// Per-splat accumulators for the image-space part of the backward pass.
struct SplatGrads {
    std::vector<Eigen::Vector2d> mean2d;
    std::vector<Eigen::Matrix2d> cov2d;
    std::vector<double> view_depth;
    std::vector<double> opacity;
    std::vector<Eigen::Vector3d> color;

    explicit SplatGrads(size_t n)
        : mean2d(n, Eigen::Vector2d::Zero()), cov2d(n, Eigen::Matrix2d::Zero()),
          view_depth(n, 0.0), opacity(n, 0.0),
          color(n, Eigen::Vector3d::Zero()) {}
};

struct Contribution {
    int splat = 0;
    double g = 0.0;
    double alpha = 0.0;
    bool clamped = false;
};

void backward_standard(const ProjectedScene &ps, const Scene &scene,
                       const Camera &cam, const RenderOptions &opts,
                       const ImageBuffer *grad_color, const DepthMap *grad_depth,
                       SplatGrads &sg) {
    const int h = cam.height, w = cam.width;
    std::vector<Contribution> contribs;
    contribs.reserve(ps.splats.size());

    for (int r = 0; r < h; ++r) {
        for (int c = 0; c < w; ++c) {
            Eigen::Vector3d gc = Eigen::Vector3d::Zero();
            double gd = 0.0, ga = 0.0;
            if (grad_color)
                gc = Eigen::Vector3d(grad_color->at(r, c, 0), grad_color->at(r, c, 1),
                                     grad_color->at(r, c, 2));
            if (grad_depth) {
                gd = grad_depth->at(r, c);
                ga = grad_depth->alpha_at(r, c);
            }
            if (gc.isZero(0.0) && gd == 0.0 && ga == 0.0)
                continue;

            // Replay the forward compositing for this pixel.
            contribs.clear();
            double transmittance = 1.0;
            for (size_t n = 0; n < ps.splats.size(); ++n) {
                const Splat &s = ps.splats[n];
                if (c < s.x0 || c > s.x1 || r < s.y0 || r > s.y1)
                    continue;
                const double q = quad_form(s.conic, c - s.mean2d.x(), r - s.mean2d.y());
                if (q > ps.quad_max)
                    continue;
                const double g = std::exp(-0.5 * q);
                const double raw = s.opacity * g;
                Contribution ct;
                ct.splat = static_cast<int>(n);
                ct.g = g;
                ct.clamped = raw > opts.alpha_clamp;
                ct.alpha = ct.clamped ? opts.alpha_clamp : raw;
                contribs.push_back(ct);
                transmittance *= 1.0 - ct.alpha;
                if (transmittance < opts.transmittance_floor)
                    break;
            }

            // Suffix accumulators: everything composited behind splat k,
            // including the background term for color.
            Eigen::Vector3d suffix_c = scene.background * transmittance;
            double suffix_d = 0.0, suffix_a = 0.0;
            double t_after = transmittance;

            for (auto it = contribs.rbegin(); it != contribs.rend(); ++it) {
                const Contribution &ct = *it;
                const Splat &s = ps.splats[ct.splat];
                const double one_minus = 1.0 - ct.alpha;
                const double t_here = t_after / one_minus; // transmittance in front of k
                const double wgt = ct.alpha * t_here;

                double d_alpha = gc.dot(s.color * t_here - suffix_c / one_minus);
                d_alpha += gd * (s.view_depth * t_here - suffix_d / one_minus);
                d_alpha += ga * (t_here - suffix_a / one_minus);

                sg.color[ct.splat] += gc * wgt;
                sg.view_depth[ct.splat] += gd * wgt;

                suffix_c += s.color * wgt;
                suffix_d += s.view_depth * wgt;
                suffix_a += wgt;
                t_after = t_here;

                if (!ct.clamped) {
                    sg.opacity[ct.splat] += d_alpha * ct.g;
                    const double d_g = d_alpha * s.opacity;
                    // G = exp(-q/2): dG/dd = -G * conic * d, d = pixel - mean2d
                    const Eigen::Vector2d dvec(c - s.mean2d.x(), r - s.mean2d.y());
                    const Eigen::Vector2d cd = s.conic * dvec;
                    sg.mean2d[ct.splat] += d_g * ct.g * cd;
                    sg.cov2d[ct.splat] += (0.5 * d_g * ct.g) * (cd * cd.transpose());
                }
            }
        }
    }
}

void backward_enhanced(const ProjectedScene &ps, const Camera &cam,
                       double omega, const DepthMap &grad_depth, SplatGrads &sg) {
    std::vector<double> rank_weight(ps.splats.size());
    double wr = omega;
    for (size_t n = 0; n < ps.splats.size(); ++n) {
        rank_weight[n] = wr;
        wr *= 1.0 - omega;
    }
    const int h = cam.height, w = cam.width;
    for (int r = 0; r < h; ++r) {
        for (int c = 0; c < w; ++c) {
            const double gd = grad_depth.at(r, c);
            const double ga = grad_depth.alpha_at(r, c);
            if (gd == 0.0 && ga == 0.0)
                continue;
            for (size_t n = 0; n < ps.splats.size(); ++n) {
                const Splat &s = ps.splats[n];
                if (c < s.x0 || c > s.x1 || r < s.y0 || r > s.y1)
                    continue;
                const double q = quad_form(s.conic, c - s.mean2d.x(), r - s.mean2d.y());
                if (q > ps.quad_max)
                    continue;
                const double g = std::exp(-0.5 * q);
                const double d_g = rank_weight[n] * (gd * s.view_depth + ga);
                sg.view_depth[n] += gd * rank_weight[n] * g;
                const Eigen::Vector2d dvec(c - s.mean2d.x(), r - s.mean2d.y());
                const Eigen::Vector2d cd = s.conic * dvec;
                sg.mean2d[n] += d_g * g * cd;
                sg.cov2d[n] += (0.5 * d_g * g) * (cd * cd.transpose());
            }
        }
    }
}

// Partial derivatives of the rotation matrix w.r.t. the unit quaternion.
void rotation_matrix_jacobian(const Eigen::Vector4d &q, Eigen::Matrix3d dR[4]) {
    const double w = q[0], x = q[1], y = q[2], z = q[3];
    dR[0] << 0, -z, y, z, 0, -x, -y, x, 0;
    dR[1] << 0, y, z, y, -2 * x, -w, z, w, -2 * x;
    dR[2] << -2 * y, x, w, x, 0, z, -w, z, -2 * y;
    dR[3] << -2 * z, -w, x, w, -2 * z, y, x, y, 0;
    for (int k = 0; k < 4; ++k)
        dR[k] *= 2.0;
}

// Pulls the image-space splat gradients back into primitive parameters.
void backprop_projection(const ProjectedScene &ps, const Scene &scene,
                         const Camera &cam, const SplatGrads &sg,
                         RenderGradients &out) {
    const Eigen::Matrix3d w_rot = cam.rotation();
    const Eigen::Vector3d cam_center = cam.center();
    const double fx = cam.focal.x(), fy = cam.focal.y();

    for (size_t n = 0; n < ps.splats.size(); ++n) {
        const Splat &s = ps.splats[n];
        const GaussianPrimitive &p = scene.primitives[s.prim];

        Eigen::Vector3d g_mu = Eigen::Vector3d::Zero();

        // view_depth = ||mu - o||
        if (sg.view_depth[n] != 0.0) {
            const Eigen::Vector3d diff = p.mu - cam_center;
            g_mu += sg.view_depth[n] * diff / s.view_depth;
        }

        const Eigen::Vector3d t = s.t_cam;
        const double inv_z = 1.0 / t.z();
        Eigen::Matrix<double, 2, 3> jac;
        jac << fx * inv_z, 0, -fx * t.x() * inv_z * inv_z,
               0, fy * inv_z, -fy * t.y() * inv_z * inv_z;

        // mean2d = pi(t); the forward stores d = pixel - mean2d, and
        // sg.mean2d already carries the sign for d/d(mean2d).
        Eigen::Vector3d g_t = jac.transpose() * sg.mean2d[n];

        // cov2d = J M J^T + lowpass, M = W Sigma W^T
        const Eigen::Matrix2d &g_cov = sg.cov2d[n];
        const Eigen::Matrix3d sigma =
            covariance_from_scale_rotation(p.scale, p.rotation).matrix;
        const Eigen::Matrix3d m_mat = w_rot * sigma * w_rot.transpose();

        const Eigen::Matrix<double, 2, 3> gj = (g_cov + g_cov.transpose()) * jac * m_mat;
        const double inv_z2 = inv_z * inv_z;
        g_t.x() += gj(0, 2) * (-fx * inv_z2);
        g_t.y() += gj(1, 2) * (-fy * inv_z2);
        g_t.z() += gj(0, 0) * (-fx * inv_z2) + gj(1, 1) * (-fy * inv_z2) +
                   gj(0, 2) * (2 * fx * t.x() * inv_z2 * inv_z) +
                   gj(1, 2) * (2 * fy * t.y() * inv_z2 * inv_z);

        g_mu += w_rot.transpose() * g_t;

        const Eigen::Matrix3d g_m = jac.transpose() * g_cov * jac;
        const Eigen::Matrix3d g_sigma = w_rot.transpose() * g_m * w_rot;

        // Sigma = V V^T with V = R diag(scale)
        const Eigen::Matrix3d rot = quaternion_to_matrix(p.rotation);
        const Eigen::Matrix3d v = rot * p.scale.asDiagonal();
        const Eigen::Matrix3d g_v = (g_sigma + g_sigma.transpose()) * v;

        Eigen::Vector3d g_scale;
        for (int k = 0; k < 3; ++k)
            g_scale[k] = g_v.col(k).dot(rot.col(k));

        Eigen::Matrix3d g_rot3 = g_v * p.scale.asDiagonal();

        Eigen::Matrix3d dR[4];
        const Eigen::Vector4d q_unit = p.rotation / p.rotation.norm();
        rotation_matrix_jacobian(q_unit, dR);
        Eigen::Vector4d g_q_unit;
        for (int k = 0; k < 4; ++k)
            g_q_unit[k] = (g_rot3.array() * dR[k].array()).sum();
        // Through the normalization q_unit = q / ||q||.
        const Eigen::Vector4d g_q =
            (g_q_unit - q_unit * q_unit.dot(g_q_unit)) / p.rotation.norm();

        Eigen::Vector3d g_color;
        for (int ch = 0; ch < 3; ++ch) {
            const bool inside = s.color_raw[ch] >= 0.0 && s.color_raw[ch] <= 1.0;
            g_color[ch] = inside ? sg.color[n][ch] : 0.0;
        }

        out.mu[s.prim] += g_mu;
        out.scale[s.prim] += g_scale;
        out.rotation[s.prim] += g_q;
        out.opacity[s.prim] += sg.opacity[n];
        out.color[s.prim] += g_color;
    }
}

} // namespace

void RenderGradients::resize_zero(size_t n) {
    mu.assign(n, Eigen::Vector3d::Zero());
    scale.assign(n, Eigen::Vector3d::Zero());
    rotation.assign(n, Eigen::Vector4d::Zero());
    opacity.assign(n, 0.0);
    color.assign(n, Eigen::Vector3d::Zero());
}

void RenderGradients::add(const RenderGradients &other) {
    for (size_t i = 0; i < mu.size(); ++i) {
        mu[i] += other.mu[i];
        scale[i] += other.scale[i];
        rotation[i] += other.rotation[i];
        opacity[i] += other.opacity[i];
        color[i] += other.color[i];
    }
}

ImageBuffer render_color(const Scene &scene, const Camera &cam,
                         const RenderOptions &opts) {
    const ProjectedScene ps = project_scene(scene, cam, opts);
    ImageBuffer img(cam.height, cam.width);
    ForwardTargets tgt;
    tgt.color = &img;
    forward_standard(ps, scene, cam, opts, tgt);
    return img;
}

DepthMap render_depth(const Scene &scene, const Camera &cam,
                      const RenderOptions &opts) {
    const ProjectedScene ps = project_scene(scene, cam, opts);
    DepthMap d(cam.height, cam.width);
    ForwardTargets tgt;
    tgt.depth = &d;
    forward_standard(ps, scene, cam, opts, tgt);
    return d;
}

DepthMap render_depth_enhanced(const Scene &scene, const Camera &cam,
                               double omega, const RenderOptions &opts) {
    if (!(omega > 0.0 && omega < 1.0))
        throw std::invalid_argument("render_depth_enhanced: omega must be in (0,1)");
    const ProjectedScene ps = project_scene(scene, cam, opts);
    DepthMap d(cam.height, cam.width);
    forward_enhanced(ps, cam, omega, d);
    return d;
}

RenderOutputs render_all(const Scene &scene, const Camera &cam,
                         std::optional<double> omega, const RenderOptions &opts) {
    if (omega && !(*omega > 0.0 && *omega < 1.0))
        throw std::invalid_argument("render_all: omega must be in (0,1)");
    const ProjectedScene ps = project_scene(scene, cam, opts);
    RenderOutputs out;
    out.color = ImageBuffer(cam.height, cam.width);
    out.depth = DepthMap(cam.height, cam.width);
    ForwardTargets tgt;
    tgt.color = &out.color;
    tgt.depth = &out.depth;
    forward_standard(ps, scene, cam, opts, tgt);
    if (omega) {
        out.depth_enhanced = DepthMap(cam.height, cam.width);
        forward_enhanced(ps, cam, *omega, *out.depth_enhanced);
    }
    return out;
}

RenderGradients render_vjp_fused(const Scene &scene, const Camera &cam,
                                 const ImageBuffer *grad_color,
                                 const DepthMap *grad_depth_std,
                                 const DepthMap *grad_depth_enh,
                                 std::optional<double> omega,
                                 const RenderOptions &opts) {
    if (grad_color && (grad_color->height != cam.height || grad_color->width != cam.width))
        throw std::invalid_argument("render_vjp: color cotangent shape mismatch");
    if (grad_depth_std &&
        (grad_depth_std->height != cam.height || grad_depth_std->width != cam.width))
        throw std::invalid_argument("render_vjp: depth cotangent shape mismatch");
    if (grad_depth_enh) {
        if (!omega || !(*omega > 0.0 && *omega < 1.0))
            throw std::invalid_argument("render_vjp: enhanced cotangent requires omega in (0,1)");
        if (grad_depth_enh->height != cam.height || grad_depth_enh->width != cam.width)
            throw std::invalid_argument("render_vjp: depth cotangent shape mismatch");
    }
    for (const auto *img : {grad_color}) {
        if (img && !std::all_of(img->data.begin(), img->data.end(),
                                [](double v) { return std::isfinite(v); }))
            throw std::invalid_argument("render_vjp: non-finite cotangent");
    }

    const ProjectedScene ps = project_scene(scene, cam, opts);
    RenderGradients out;
    out.resize_zero(scene.primitives.size());

    SplatGrads sg(ps.splats.size());
    if (grad_color || grad_depth_std)
        backward_standard(ps, scene, cam, opts, grad_color, grad_depth_std, sg);
    if (grad_depth_enh)
        backward_enhanced(ps, cam, *omega, *grad_depth_enh, sg);
    backprop_projection(ps, scene, cam, sg, out);
    return out;
}

RenderGradients render_vjp(const Scene &scene, const Camera &cam,
                           const ImageBuffer &grad_color,
                           const DepthMap &grad_depth, DepthMode mode,
                           double omega, const RenderOptions &opts) {
    if (mode == DepthMode::standard)
        return render_vjp_fused(scene, cam, &grad_color, &grad_depth, nullptr,
                                std::nullopt, opts);
    return render_vjp_fused(scene, cam, &grad_color, nullptr, &grad_depth, omega,
                            opts);
}

} // namespace gsreg
