// Copyright Contributors to the gsreg Project
// SPDX-License-Identifier: Apache-2.0

#include "gsreg/edge_ops.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>

namespace gsreg {

namespace {

inline int clampi(int v, int lo, int hi) { return v < lo ? lo : (v > hi ? hi : v); }

inline double sample_replicate(const std::vector<double> &f, int h, int w, int r,
                               int c) {
    return f[static_cast<size_t>(clampi(r, 0, h - 1)) * w + clampi(c, 0, w - 1)];
}

} // namespace

std::vector<double> rgb_to_luma255(const ImageBuffer &img) {
    if (img.height < 1 || img.width < 1)
        throw std::invalid_argument("rgb_to_luma255: empty image");
    std::vector<double> luma(static_cast<size_t>(img.height) * img.width);
    for (int r = 0; r < img.height; ++r)
        for (int c = 0; c < img.width; ++c)
            luma[static_cast<size_t>(r) * img.width + c] =
                255.0 * (0.299 * img.at(r, c, 0) + 0.587 * img.at(r, c, 1) +
                         0.114 * img.at(r, c, 2));
    return luma;
}

std::vector<double> gaussian_blur_5x5(const std::vector<double> &field, int h,
                                      int w, double sigma) {
    double kernel[5];
    double sum = 0.0;
    for (int i = -2; i <= 2; ++i) {
        kernel[i + 2] = std::exp(-0.5 * i * i / (sigma * sigma));
        sum += kernel[i + 2];
    }
    for (double &k : kernel)
        k /= sum;

    std::vector<double> tmp(field.size()), out(field.size());
    for (int r = 0; r < h; ++r)
        for (int c = 0; c < w; ++c) {
            double acc = 0.0;
            for (int i = -2; i <= 2; ++i)
                acc += kernel[i + 2] * sample_replicate(field, h, w, r, c + i);
            tmp[static_cast<size_t>(r) * w + c] = acc;
        }
    for (int r = 0; r < h; ++r)
        for (int c = 0; c < w; ++c) {
            double acc = 0.0;
            for (int i = -2; i <= 2; ++i)
                acc += kernel[i + 2] * sample_replicate(tmp, h, w, r + i, c);
            out[static_cast<size_t>(r) * w + c] = acc;
        }
    return out;
}

SobelField sobel_gradients(const std::vector<double> &field, int h, int w) {
    SobelField out;
    out.gx.resize(field.size());
    out.gy.resize(field.size());
    out.magnitude.resize(field.size());
    for (int r = 0; r < h; ++r)
        for (int c = 0; c < w; ++c) {
            const double tl = sample_replicate(field, h, w, r - 1, c - 1);
            const double tc = sample_replicate(field, h, w, r - 1, c);
            const double tr = sample_replicate(field, h, w, r - 1, c + 1);
            const double ml = sample_replicate(field, h, w, r, c - 1);
            const double mr = sample_replicate(field, h, w, r, c + 1);
            const double bl = sample_replicate(field, h, w, r + 1, c - 1);
            const double bc = sample_replicate(field, h, w, r + 1, c);
            const double br = sample_replicate(field, h, w, r + 1, c + 1);
            const double gx = (tr + 2 * mr + br) - (tl + 2 * ml + bl);
            const double gy = (bl + 2 * bc + br) - (tl + 2 * tc + tr);
            const size_t idx = static_cast<size_t>(r) * w + c;
            out.gx[idx] = gx;
            out.gy[idx] = gy;
            out.magnitude[idx] = std::sqrt(gx * gx + gy * gy);
        }
    return out;
}

std::vector<double> non_max_suppression(const SobelField &grad, int h, int w) {
    std::vector<double> out(grad.magnitude.size(), 0.0);
    const auto mag_at = [&](int r, int c) -> double {
        if (r < 0 || r >= h || c < 0 || c >= w)
            return 0.0;
        return grad.magnitude[static_cast<size_t>(r) * w + c];
    };

    constexpr double pi = std::numbers::pi;
    for (int r = 0; r < h; ++r)
        for (int c = 0; c < w; ++c) {
            const size_t idx = static_cast<size_t>(r) * w + c;
            const double m = grad.magnitude[idx];
            if (m == 0.0)
                continue;
            double angle = std::atan2(grad.gy[idx], grad.gx[idx]);
            if (angle < 0)
                angle += pi; // fold to [0, pi)

            // prev/next neighbors along the gradient line; rows grow downward.
            int dr, dc;
            if (angle < pi / 8 || angle >= 7 * pi / 8) {
                dr = 0; dc = 1;          // horizontal gradient
            } else if (angle < 3 * pi / 8) {
                dr = 1; dc = 1;          // diagonal
            } else if (angle < 5 * pi / 8) {
                dr = 1; dc = 0;          // vertical gradient
            } else {
                dr = 1; dc = -1;         // anti-diagonal
            }
            const double prev = mag_at(r - dr, c - dc);
            const double next = mag_at(r + dr, c + dc);
            if (m > prev && m >= next)
                out[idx] = m;
        }
    return out;
}

EdgeMask hysteresis_threshold(const std::vector<double> &mag, int h, int w,
                              double low, double high) {
    EdgeMask mask(h, w, 0);
    std::vector<int> stack;
    stack.reserve(mag.size() / 8);
    for (int r = 0; r < h; ++r)
        for (int c = 0; c < w; ++c) {
            const size_t idx = static_cast<size_t>(r) * w + c;
            if (mag[idx] >= high && mask.data[idx] == 0) {
                mask.data[idx] = 1;
                stack.push_back(static_cast<int>(idx));
            }
        }
    // Grow over weak pixels, 8-connected. The result is the fixed point of
    // the growth and does not depend on traversal order.
    while (!stack.empty()) {
        const int idx = stack.back();
        stack.pop_back();
        const int r = idx / w, c = idx % w;
        for (int dr = -1; dr <= 1; ++dr)
            for (int dc = -1; dc <= 1; ++dc) {
                if (dr == 0 && dc == 0)
                    continue;
                const int rr = r + dr, cc = c + dc;
                if (rr < 0 || rr >= h || cc < 0 || cc >= w)
                    continue;
                const size_t nidx = static_cast<size_t>(rr) * w + cc;
                if (mask.data[nidx] == 0 && mag[nidx] >= low) {
                    mask.data[nidx] = 1;
                    stack.push_back(static_cast<int>(nidx));
                }
            }
    }
    return mask;
}

EdgeMask canny(const ImageBuffer &img, double low, double high) {
    if (img.height < 1 || img.width < 1)
        throw std::invalid_argument("canny: empty image");
    if (!(low >= 0.0 && low < high && high <= 255.0))
        throw std::invalid_argument("canny: need 0 <= low < high <= 255");

    const std::vector<double> luma = rgb_to_luma255(img);
    const std::vector<double> blurred =
        gaussian_blur_5x5(luma, img.height, img.width);
    const SobelField grad = sobel_gradients(blurred, img.height, img.width);
    const std::vector<double> thin =
        non_max_suppression(grad, img.height, img.width);
    EdgeMask mask = hysteresis_threshold(thin, img.height, img.width, low, high);
    mask.provenance = EdgeMask::Provenance::canny;
    return mask;
}

EdgeMask non_edge_mask(const EdgeMask &e) {
    EdgeMask m(e.height, e.width, 0);
    m.provenance = e.provenance;
    for (size_t i = 0; i < e.data.size(); ++i)
        m.data[i] = e.data[i] == 0 ? 1 : 0;
    return m;
}

namespace {

constexpr int kCrossOffsets[5][2] = {{0, 0}, {-1, 0}, {1, 0}, {0, -1}, {0, 1}};

void require_mask_shape(const DepthMap &d, const EdgeMask &m, const char *what) {
    if (d.height != m.height || d.width != m.width)
        throw std::invalid_argument(std::string(what) + ": depth/mask shape mismatch");
}

} // namespace

DepthMap masked_local_mean(const DepthMap &d, const EdgeMask &m, double epsilon) {
    require_mask_shape(d, m, "masked_local_mean");
    DepthMap out(d.height, d.width);
    for (int r = 0; r < d.height; ++r)
        for (int c = 0; c < d.width; ++c) {
            double num = 0.0, den = epsilon;
            for (const auto &off : kCrossOffsets) {
                const int rr = r + off[0], cc = c + off[1];
                if (rr < 0 || rr >= d.height || cc < 0 || cc >= d.width)
                    continue;
                const double mv = m.at(rr, cc);
                num += d.at(rr, cc) * mv;
                den += mv;
            }
            out.at(r, c) = num / den;
        }
    return out;
}

EdgeLossResult edge_loss(const DepthMap &d, const EdgeMask &m, double epsilon) {
    require_mask_shape(d, m, "edge_loss");

    size_t valid = 0;
    for (uint8_t v : m.data)
        valid += v;

    EdgeLossResult res;
    res.grad = DepthMap(d.height, d.width);
    if (valid == 0)
        return res;

    const DepthMap dbar = masked_local_mean(d, m, epsilon);
    const double inv_p = 1.0 / static_cast<double>(valid);

    // e(i) = dL/dDbar-residual at i; scattered back through Dbar below.
    DepthMap e(d.height, d.width);
    for (int r = 0; r < d.height; ++r)
        for (int c = 0; c < d.width; ++c) {
            if (m.at(r, c) == 0)
                continue;
            const double diff = d.at(r, c) - dbar.at(r, c);
            res.loss += inv_p * diff * diff;
            e.at(r, c) = 2.0 * inv_p * diff;
            res.grad.at(r, c) += e.at(r, c);
        }

    for (int r = 0; r < d.height; ++r)
        for (int c = 0; c < d.width; ++c) {
            const double ei = e.at(r, c);
            if (ei == 0.0)
                continue;
            double den = epsilon;
            for (const auto &off : kCrossOffsets) {
                const int rr = r + off[0], cc = c + off[1];
                if (rr < 0 || rr >= d.height || cc < 0 || cc >= d.width)
                    continue;
                den += m.at(rr, cc);
            }
            for (const auto &off : kCrossOffsets) {
                const int rr = r + off[0], cc = c + off[1];
                if (rr < 0 || rr >= d.height || cc < 0 || cc >= d.width)
                    continue;
                if (m.at(rr, cc) == 0)
                    continue;
                res.grad.at(rr, cc) -= ei / den;
            }
        }
    return res;
}

} // namespace gsreg
