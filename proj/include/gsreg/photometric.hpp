// Copyright Contributors to the gsreg Project
// SPDX-License-Identifier: Apache-2.0

#ifndef GSREG_PHOTOMETRIC_HPP
#define GSREG_PHOTOMETRIC_HPP

#include "gsreg/image.hpp"

#include <algorithm>

namespace gsreg {

/// All objective weights and thresholds in one place.
struct LossWeights {
    double lambda_dssim = 0.2; // D-SSIM share of the color loss
    double gamma = 0.1;        // patch-scale depth weight
    double eta = 1.0;          // image-scale depth weight
    double beta = 0.1;         // edge-aware depth regularization weight
    double phi = 0.8;          // TV weight
    double omega = 0.99;       // enhanced-opacity depth boost
    double tau_edge = 1e-2;
    double tau_smooth = 1e-4;
    double delta = 1e-8;       // patch-normalization stabilizer
    double epsilon = 1e-8;     // masked-mean stabilizer
    double tolerance = 0.05;   // depth-loss dead zone, normalized units

    void validate() const;
};

struct PhotometricLossResult {
    double loss = 0.0;
    ImageBuffer grad;
};

/// Mean absolute error over pixels and channels; sign subgradient.
PhotometricLossResult l1_loss(const ImageBuffer &pred, const ImageBuffer &gt);

/// (1 - SSIM)/2 with the standard 11x11 Gaussian window (sigma 1.5),
/// C1 = 0.01^2, C2 = 0.03^2, channel-averaged over valid window positions.
/// Requires H, W >= 11.
PhotometricLossResult dssim_loss(const ImageBuffer &pred, const ImageBuffer &gt);

/// l1 + lambda * dssim.
PhotometricLossResult color_loss(const ImageBuffer &pred, const ImageBuffer &gt,
                                 double lambda);

/// 10*log10(1/MSE) for [0,1] range; +infinity when MSE is 0.
double psnr(const ImageBuffer &pred, const ImageBuffer &gt);

/// Mean SSIM as in dssim_loss.
double ssim(const ImageBuffer &pred, const ImageBuffer &gt);

/// PSNR as written into reports: the infinite sentinel caps at 99 dB.
inline double report_psnr(double value) { return std::min(value, 99.0); }

} // namespace gsreg

#endif
