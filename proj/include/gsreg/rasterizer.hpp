// Copyright Contributors to the gsreg Project
// SPDX-License-Identifier: Apache-2.0

#ifndef GSREG_RASTERIZER_HPP
#define GSREG_RASTERIZER_HPP

#include "gsreg/gaussian.hpp"
#include "gsreg/image.hpp"

#include <optional>

namespace gsreg {

/// Depth-sorted front-to-back alpha compositing over per-pixel loops.
/// No tile binning: instances stay at desk scale. A per-axis bounding box
/// plus an exponent cutoff skip contributions below cull_eps, which keeps
/// rendered values exact to well under the test tolerances.
struct RenderOptions {
    double cull_eps = 1e-14;           // skip contributions with G below this
    double alpha_clamp = 0.99;         // per-contribution ceiling on alpha*G
    double transmittance_floor = 1e-15; // stop compositing once T drops below
};

enum class DepthMode { standard, enhanced };

/// Per-primitive parameter gradients, index-aligned with Scene::primitives.
/// Culled primitives keep all-zero rows. Rotation gradients are taken through
/// the internal quaternion normalization, so they are orthogonal to the
/// stored unit quaternion.
struct RenderGradients {
    std::vector<Eigen::Vector3d> mu;
    std::vector<Eigen::Vector3d> scale;
    std::vector<Eigen::Vector4d> rotation;
    std::vector<double> opacity;
    std::vector<Eigen::Vector3d> color;

    void resize_zero(size_t n);
    void add(const RenderGradients &other);
};

ImageBuffer render_color(const Scene &scene, const Camera &cam,
                         const RenderOptions &opts = {});

DepthMap render_depth(const Scene &scene, const Camera &cam,
                      const RenderOptions &opts = {});

/// Depth render with fixed boosted opacity omega: the n-th nearest primitive
/// receives weight omega*(1-omega)^(n-1), n being its rank in the depth-sorted
/// list of in-front primitives. accumulated_alpha stores the sum of
/// weight * G per pixel.
DepthMap render_depth_enhanced(const Scene &scene, const Camera &cam,
                               double omega, const RenderOptions &opts = {});

/// Fused forward used by the trainer: color and standard depth always,
/// enhanced depth when omega is given. One projection pass.
struct RenderOutputs {
    ImageBuffer color;
    DepthMap depth;
    std::optional<DepthMap> depth_enhanced;
};
RenderOutputs render_all(const Scene &scene, const Camera &cam,
                         std::optional<double> omega = std::nullopt,
                         const RenderOptions &opts = {});

/// Reverse-mode gradients of the forward renders. grad_color pairs with
/// render_color; grad_depth pairs with the depth render selected by `mode`
/// (its accumulated_alpha field is an additional cotangent). The depth sort
/// is treated as a fixed permutation at the evaluated point.
RenderGradients render_vjp(const Scene &scene, const Camera &cam,
                           const ImageBuffer &grad_color,
                           const DepthMap &grad_depth, DepthMode mode,
                           double omega = 0.99, const RenderOptions &opts = {});

/// Full cotangent set in one backward pass; null pointers mean "no cotangent".
/// grad_depth_enh requires omega.
RenderGradients render_vjp_fused(const Scene &scene, const Camera &cam,
                                 const ImageBuffer *grad_color,
                                 const DepthMap *grad_depth_std,
                                 const DepthMap *grad_depth_enh,
                                 std::optional<double> omega,
                                 const RenderOptions &opts = {});

} // namespace gsreg

#endif
