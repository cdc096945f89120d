// Copyright Contributors to the gsreg Project
// SPDX-License-Identifier: Apache-2.0

#ifndef GSREG_TV_REG_HPP
#define GSREG_TV_REG_HPP

#include "gsreg/image.hpp"

namespace gsreg {

/// Forward-difference gradients per channel. Horizontal entries live on
/// H x (W-1) x 3, vertical on (H-1) x W x 3; the last column/row has no
/// forward neighbor and is dropped.
struct GradientField {
    int height = 0, width = 0; // of the source image
    std::vector<double> horizontal; // H*(W-1)*3
    std::vector<double> vertical;   // (H-1)*W*3

    double h_at(int r, int c, int ch) const {
        return horizontal[(static_cast<size_t>(r) * (width - 1) + c) * 3 + ch];
    }
    double v_at(int r, int c, int ch) const {
        return vertical[(static_cast<size_t>(r) * width + c) * 3 + ch];
    }
};

GradientField directional_gradients(const ImageBuffer &img);

/// Binary masks from the ground-truth gradients: M(x) = 1 iff the
/// max-over-channels |gradient| stays below tau_edge. One mask per direction,
/// shared across channels.
struct GradientMasks {
    int height = 0, width = 0;
    std::vector<uint8_t> horizontal; // H*(W-1)
    std::vector<uint8_t> vertical;   // (H-1)*W

    uint8_t h_at(int r, int c) const {
        return horizontal[static_cast<size_t>(r) * (width - 1) + c];
    }
    uint8_t v_at(int r, int c) const {
        return vertical[static_cast<size_t>(r) * width + c];
    }
};

GradientMasks gradient_masks(const ImageBuffer &gt, double tau_edge = 1e-2);

/// Edge-preserving TV loss:
///   L = (1/(H*W)) * sum over unmasked positions and channels of
///       max(|grad pred| - tau_smooth, 0)
/// with the sign subgradient (zero inside the dead zone) as gradient.
struct TvLossResult {
    double loss = 0.0;
    ImageBuffer grad;
};
TvLossResult tv_loss(const ImageBuffer &pred, const ImageBuffer &gt,
                     double tau_edge = 1e-2, double tau_smooth = 1e-4);

} // namespace gsreg

#endif
