// Copyright Contributors to the gsreg Project
// SPDX-License-Identifier: Apache-2.0

#ifndef GSREG_EDGE_OPS_HPP
#define GSREG_EDGE_OPS_HPP

#include "gsreg/image.hpp"

namespace gsreg {

/// ITU-R 601 luma on a 0..255 scale.
std::vector<double> rgb_to_luma255(const ImageBuffer &img);

/// 5x5 Gaussian blur (sigma 1.4), replicate border.
std::vector<double> gaussian_blur_5x5(const std::vector<double> &field, int h,
                                      int w, double sigma = 1.4);

/// 3x3 Sobel gradients, replicate border.
struct SobelField {
    std::vector<double> gx, gy, magnitude; // magnitude = sqrt(gx^2+gy^2)
};
SobelField sobel_gradients(const std::vector<double> &field, int h, int w);

/// 4-sector non-maximum suppression; non-maxima get magnitude 0.
std::vector<double> non_max_suppression(const SobelField &grad, int h, int w);

/// Double threshold plus 8-connected hysteresis from strong seeds.
EdgeMask hysteresis_threshold(const std::vector<double> &mag, int h, int w,
                              double low, double high);

/// Classic Canny pipeline: luma, blur, Sobel, non-max suppression, double
/// threshold with hysteresis. Thresholds live on the 0..255 gradient
/// magnitude scale.
EdgeMask canny(const ImageBuffer &img, double low = 20.0, double high = 200.0);

/// m(x) = 1 where E(x) = 0, else 0.
EdgeMask non_edge_mask(const EdgeMask &e);

/// Masked mean over the cross neighborhood {center, up, down, left, right},
/// clipped at the borders:
///   Dbar(x) = sum_j D(j) m(j) / (sum_j m(j) + epsilon).
/// The accumulated_alpha field of the result is left zero.
DepthMap masked_local_mean(const DepthMap &d, const EdgeMask &m,
                           double epsilon = 1e-8);

/// L = (1/P) sum_i m(i) |D(i) - Dbar(i)|^2, P = number of m=1 pixels.
/// The gradient differentiates through Dbar's dependence on D. P = 0 gives
/// loss 0 with zero gradient.
struct EdgeLossResult {
    double loss = 0.0;
    DepthMap grad;
};
EdgeLossResult edge_loss(const DepthMap &d, const EdgeMask &m,
                         double epsilon = 1e-8);

} // namespace gsreg

#endif
