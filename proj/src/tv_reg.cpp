// Copyright Contributors to the gsreg Project
// SPDX-License-Identifier: Apache-2.0

#include "gsreg/tv_reg.hpp"

#include <cmath>
#include <stdexcept>

namespace gsreg {

GradientField directional_gradients(const ImageBuffer &img) {
    if (img.height < 2 || img.width < 2)
        throw std::invalid_argument("directional_gradients: image must be at least 2x2");

    GradientField out;
    out.height = img.height;
    out.width = img.width;
    out.horizontal.resize(static_cast<size_t>(img.height) * (img.width - 1) * 3);
    out.vertical.resize(static_cast<size_t>(img.height - 1) * img.width * 3);

    for (int r = 0; r < img.height; ++r)
        for (int c = 0; c + 1 < img.width; ++c)
            for (int ch = 0; ch < 3; ++ch)
                out.horizontal[(static_cast<size_t>(r) * (img.width - 1) + c) * 3 + ch] =
                    img.at(r, c + 1, ch) - img.at(r, c, ch);

    for (int r = 0; r + 1 < img.height; ++r)
        for (int c = 0; c < img.width; ++c)
            for (int ch = 0; ch < 3; ++ch)
                out.vertical[(static_cast<size_t>(r) * img.width + c) * 3 + ch] =
                    img.at(r + 1, c, ch) - img.at(r, c, ch);
    return out;
}

GradientMasks gradient_masks(const ImageBuffer &gt, double tau_edge) {
    if (!(tau_edge > 0.0))
        throw std::invalid_argument("gradient_masks: tau_edge must be positive");
    const GradientField g = directional_gradients(gt);

    GradientMasks out;
    out.height = gt.height;
    out.width = gt.width;
    out.horizontal.resize(static_cast<size_t>(gt.height) * (gt.width - 1));
    out.vertical.resize(static_cast<size_t>(gt.height - 1) * gt.width);

    for (int r = 0; r < gt.height; ++r)
        for (int c = 0; c + 1 < gt.width; ++c) {
            double mx = 0.0;
            for (int ch = 0; ch < 3; ++ch)
                mx = std::max(mx, std::abs(g.h_at(r, c, ch)));
            out.horizontal[static_cast<size_t>(r) * (gt.width - 1) + c] =
                mx < tau_edge ? 1 : 0;
        }
    for (int r = 0; r + 1 < gt.height; ++r)
        for (int c = 0; c < gt.width; ++c) {
            double mx = 0.0;
            for (int ch = 0; ch < 3; ++ch)
                mx = std::max(mx, std::abs(g.v_at(r, c, ch)));
            out.vertical[static_cast<size_t>(r) * gt.width + c] = mx < tau_edge ? 1 : 0;
        }
    return out;
}

TvLossResult tv_loss(const ImageBuffer &pred, const ImageBuffer &gt,
                     double tau_edge, double tau_smooth) {
    require_same_shape(pred, gt, "tv_loss");
    if (!(tau_edge > 0.0) || !(tau_smooth > 0.0))
        throw std::invalid_argument("tv_loss: thresholds must be positive");

    const GradientField gp = directional_gradients(pred);
    const GradientMasks masks = gradient_masks(gt, tau_edge);
    const double inv_omega = 1.0 / (static_cast<double>(pred.height) * pred.width);

    TvLossResult res;
    res.grad = ImageBuffer(pred.height, pred.width);

    for (int r = 0; r < pred.height; ++r)
        for (int c = 0; c + 1 < pred.width; ++c) {
            if (!masks.h_at(r, c))
                continue;
            for (int ch = 0; ch < 3; ++ch) {
                const double g = gp.h_at(r, c, ch);
                const double excess = std::abs(g) - tau_smooth;
                if (excess <= 0.0)
                    continue;
                res.loss += inv_omega * excess;
                const double s = (g > 0.0 ? 1.0 : -1.0) * inv_omega;
                res.grad.at(r, c + 1, ch) += s;
                res.grad.at(r, c, ch) -= s;
            }
        }
    for (int r = 0; r + 1 < pred.height; ++r)
        for (int c = 0; c < pred.width; ++c) {
            if (!masks.v_at(r, c))
                continue;
            for (int ch = 0; ch < 3; ++ch) {
                const double g = gp.v_at(r, c, ch);
                const double excess = std::abs(g) - tau_smooth;
                if (excess <= 0.0)
                    continue;
                res.loss += inv_omega * excess;
                const double s = (g > 0.0 ? 1.0 : -1.0) * inv_omega;
                res.grad.at(r + 1, c, ch) += s;
                res.grad.at(r, c, ch) -= s;
            }
        }
    return res;
}

} // namespace gsreg
