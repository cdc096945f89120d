// Copyright Contributors to the gsreg Project
// SPDX-License-Identifier: Apache-2.0

#ifndef GSREG_DEPTH_SUPERVISION_HPP
#define GSREG_DEPTH_SUPERVISION_HPP

#include "gsreg/image.hpp"

namespace gsreg {

/// Non-overlapping tiling of the pixel grid anchored at (0,0). Edge tiles are
/// ragged when the resolution is not divisible by patch_size; every pixel
/// belongs to exactly one tile.
struct PatchGrid {
    int patch_size = 1;
};

/// Dimensionless normalized depth field.
struct NormalizedDepth {
    int height = 0;
    int width = 0;
    std::vector<double> data;

    double at(int r, int c) const { return data[static_cast<size_t>(r) * width + c]; }
};

/// Per-tile zero-mean unit-std transform: (D - mu_P) / (sigma_P + delta),
/// with population statistics over each tile.
NormalizedDepth patch_normalize(const DepthMap &d, const PatchGrid &grid,
                                double delta);

/// Patch-wise mean subtraction divided by the image-wide population std:
/// (D - mu_P) / sigma_I. A near-constant image (sigma_I < 1e-8) normalizes
/// to all zeros instead of erroring.
NormalizedDepth image_normalize(const DepthMap &d, const PatchGrid &grid);

/// Dual-scale depth loss against a prior depth map:
///   L = gamma * mean(h(D_patch - prior_patch)) + eta * mean(h(D_image - prior_image))
/// with the dead-zone penalty h(r) = max(|r| - tolerance, 0)^2. The returned
/// gradient is w.r.t. the rendered depth d and, unless stop_statistics is set,
/// flows through the normalization statistics of d.
struct DepthLossResult {
    double loss = 0.0;
    DepthMap grad;
};
DepthLossResult depth_loss(const DepthMap &d, const DepthMap &prior,
                           const PatchGrid &grid, double gamma, double eta,
                           double tolerance, double delta = 1e-8,
                           bool stop_statistics = false);

} // namespace gsreg

#endif
