// Copyright Contributors to the gsreg Project
// SPDX-License-Identifier: Apache-2.0

#include "gsreg/photometric.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

namespace gsreg {

void LossWeights::validate() const {
    const double nonneg[] = {lambda_dssim, gamma, eta, beta, phi, tau_edge,
                             tau_smooth, delta, epsilon, tolerance};
    for (double v : nonneg)
        if (!(v >= 0.0) || !std::isfinite(v))
            throw std::invalid_argument("LossWeights: weights must be finite and >= 0");
    if (!(omega > 0.0 && omega < 1.0))
        throw std::invalid_argument("LossWeights: omega must be in (0,1)");
    if (!(tau_edge > tau_smooth))
        throw std::invalid_argument("LossWeights: tau_edge must exceed tau_smooth");
}

PhotometricLossResult l1_loss(const ImageBuffer &pred, const ImageBuffer &gt) {
    require_same_shape(pred, gt, "l1_loss");
    PhotometricLossResult res;
    res.grad = ImageBuffer(pred.height, pred.width);
    const double inv_n = 1.0 / static_cast<double>(pred.size());
    for (size_t i = 0; i < pred.size(); ++i) {
        const double diff = pred.data[i] - gt.data[i];
        res.loss += std::abs(diff) * inv_n;
        res.grad.data[i] = (diff > 0.0 ? 1.0 : (diff < 0.0 ? -1.0 : 0.0)) * inv_n;
    }
    return res;
}

namespace {

constexpr int kWin = 11;
constexpr double kC1 = 0.01 * 0.01;
constexpr double kC2 = 0.03 * 0.03;

struct Window {
    double k1d[kWin];
    Window() {
        const double sigma = 1.5;
        double sum = 0.0;
        for (int i = 0; i < kWin; ++i) {
            const double d = i - (kWin - 1) / 2.0;
            k1d[i] = std::exp(-0.5 * d * d / (sigma * sigma));
            sum += k1d[i];
        }
        for (double &v : k1d)
            v /= sum;
    }
    double at(int u, int v) const { return k1d[u] * k1d[v]; }
};

const Window &window() {
    static const Window w;
    return w;
}

// Valid separable correlation with the 11x11 window; output (h-10) x (w-10).
std::vector<double> conv_valid(const std::vector<double> &f, int h, int w) {
    const Window &win = window();
    const int ow = w - kWin + 1, oh = h - kWin + 1;
    std::vector<double> rows(static_cast<size_t>(h) * ow);
    for (int r = 0; r < h; ++r)
        for (int c = 0; c < ow; ++c) {
            double acc = 0.0;
            for (int i = 0; i < kWin; ++i)
                acc += win.k1d[i] * f[static_cast<size_t>(r) * w + c + i];
            rows[static_cast<size_t>(r) * ow + c] = acc;
        }
    std::vector<double> out(static_cast<size_t>(oh) * ow);
    for (int r = 0; r < oh; ++r)
        for (int c = 0; c < ow; ++c) {
            double acc = 0.0;
            for (int i = 0; i < kWin; ++i)
                acc += win.k1d[i] * rows[static_cast<size_t>(r + i) * ow + c];
            out[static_cast<size_t>(r) * ow + c] = acc;
        }
    return out;
}

// Adjoint of conv_valid: spread a location field back onto pixels.
void scatter_add(const std::vector<double> &loc, int oh, int ow,
                 std::vector<double> &pix, int h, int w, double scale) {
    const Window &win = window();
    std::vector<double> rows(static_cast<size_t>(oh) * w, 0.0);
    for (int r = 0; r < oh; ++r)
        for (int c = 0; c < ow; ++c) {
            const double v = loc[static_cast<size_t>(r) * ow + c] * scale;
            if (v == 0.0)
                continue;
            for (int i = 0; i < kWin; ++i)
                rows[static_cast<size_t>(r) * w + c + i] += win.k1d[i] * v;
        }
    for (int r = 0; r < oh; ++r)
        for (int c = 0; c < w; ++c) {
            const double v = rows[static_cast<size_t>(r) * w + c];
            if (v == 0.0)
                continue;
            for (int i = 0; i < kWin; ++i)
                pix[static_cast<size_t>(r + i) * w + c] += win.k1d[i] * v;
        }
}

std::vector<double> channel_of(const ImageBuffer &img, int ch) {
    std::vector<double> out(static_cast<size_t>(img.height) * img.width);
    for (int r = 0; r < img.height; ++r)
        for (int c = 0; c < img.width; ++c)
            out[static_cast<size_t>(r) * img.width + c] = img.at(r, c, ch);
    return out;
}

// Shared SSIM machinery; grad (when non-null) receives d(meanSSIM)/d(pred).
double ssim_impl(const ImageBuffer &pred, const ImageBuffer &gt,
                 ImageBuffer *grad) {
    require_same_shape(pred, gt, "ssim");
    if (pred.height < kWin || pred.width < kWin)
        throw std::invalid_argument("ssim: image smaller than the 11x11 window");

    const int h = pred.height, w = pred.width;
    const int oh = h - kWin + 1, ow = w - kWin + 1;
    const size_t nloc = static_cast<size_t>(oh) * ow;
    const double inv_count = 1.0 / (3.0 * static_cast<double>(nloc));

    double total = 0.0;
    for (int ch = 0; ch < 3; ++ch) {
        const std::vector<double> x = channel_of(pred, ch);
        const std::vector<double> y = channel_of(gt, ch);
        std::vector<double> xx(x.size()), yy(x.size()), xy(x.size());
        for (size_t i = 0; i < x.size(); ++i) {
            xx[i] = x[i] * x[i];
            yy[i] = y[i] * y[i];
            xy[i] = x[i] * y[i];
        }
        const std::vector<double> mu_x = conv_valid(x, h, w);
        const std::vector<double> mu_y = conv_valid(y, h, w);
        const std::vector<double> m_xx = conv_valid(xx, h, w);
        const std::vector<double> m_yy = conv_valid(yy, h, w);
        const std::vector<double> m_xy = conv_valid(xy, h, w);

        std::vector<double> q0, p1, p2;
        if (grad) {
            q0.assign(nloc, 0.0);
            p1.assign(nloc, 0.0);
            p2.assign(nloc, 0.0);
        }

        for (size_t i = 0; i < nloc; ++i) {
            const double sx = m_xx[i] - mu_x[i] * mu_x[i];
            const double sy = m_yy[i] - mu_y[i] * mu_y[i];
            const double sxy = m_xy[i] - mu_x[i] * mu_y[i];
            const double a1 = 2.0 * mu_x[i] * mu_y[i] + kC1;
            const double a2 = 2.0 * sxy + kC2;
            const double b1 = mu_x[i] * mu_x[i] + mu_y[i] * mu_y[i] + kC1;
            const double b2 = sx + sy + kC2;
            const double common = 1.0 / (b1 * b2);
            const double s = a1 * a2 * common;
            total += s;
            if (grad) {
                const double c0 = 2.0 * (common * mu_y[i] * a2 - s * mu_x[i] / b1);
                const double c1 = 2.0 * common * a1;       // times (y_k - mu_y)
                const double c2 = -2.0 * s / b2;            // times (x_k - mu_x)
                q0[i] = c0 - c1 * mu_y[i] - c2 * mu_x[i];
                p1[i] = c1;
                p2[i] = c2;
            }
        }

        if (grad) {
            std::vector<double> acc(x.size(), 0.0);
            scatter_add(q0, oh, ow, acc, h, w, inv_count);
            std::vector<double> accy(x.size(), 0.0);
            scatter_add(p1, oh, ow, accy, h, w, inv_count);
            std::vector<double> accx(x.size(), 0.0);
            scatter_add(p2, oh, ow, accx, h, w, inv_count);
            for (int r = 0; r < h; ++r)
                for (int c = 0; c < w; ++c) {
                    const size_t i = static_cast<size_t>(r) * w + c;
                    grad->at(r, c, ch) += acc[i] + accy[i] * y[i] + accx[i] * x[i];
                }
        }
    }
    return total * inv_count;
}

} // namespace

double ssim(const ImageBuffer &pred, const ImageBuffer &gt) {
    return ssim_impl(pred, gt, nullptr);
}

PhotometricLossResult dssim_loss(const ImageBuffer &pred, const ImageBuffer &gt) {
    PhotometricLossResult res;
    res.grad = ImageBuffer(pred.height, pred.width);
    const double s = ssim_impl(pred, gt, &res.grad);
    res.loss = 0.5 * (1.0 - s);
    for (double &v : res.grad.data)
        v *= -0.5;
    return res;
}

PhotometricLossResult color_loss(const ImageBuffer &pred, const ImageBuffer &gt,
                                 double lambda) {
    PhotometricLossResult l1 = l1_loss(pred, gt);
    if (lambda == 0.0)
        return l1;
    const PhotometricLossResult ds = dssim_loss(pred, gt);
    l1.loss += lambda * ds.loss;
    for (size_t i = 0; i < l1.grad.data.size(); ++i)
        l1.grad.data[i] += lambda * ds.grad.data[i];
    return l1;
}

double psnr(const ImageBuffer &pred, const ImageBuffer &gt) {
    require_same_shape(pred, gt, "psnr");
    double mse = 0.0;
    for (size_t i = 0; i < pred.size(); ++i) {
        const double d = pred.data[i] - gt.data[i];
        mse += d * d;
    }
    mse /= static_cast<double>(pred.size());
    if (mse == 0.0)
        return std::numeric_limits<double>::infinity();
    return 10.0 * std::log10(1.0 / mse);
}

} // namespace gsreg
