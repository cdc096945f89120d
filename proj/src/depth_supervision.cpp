// Copyright Contributors to the gsreg Project
// SPDX-License-Identifier: Apache-2.0

#include "gsreg/depth_supervision.hpp"

#include <cmath>
#include <stdexcept>

namespace gsreg {

namespace {

constexpr double kSigmaImageGuard = 1e-8;
constexpr double kSigmaPatchGuard = 1e-12;

struct Tile {
    int r0, r1, c0, c1; // half-open pixel ranges
    int count() const { return (r1 - r0) * (c1 - c0); }
};

void for_each_tile(int h, int w, int patch_size, auto &&fn) {
    for (int r0 = 0; r0 < h; r0 += patch_size)
        for (int c0 = 0; c0 < w; c0 += patch_size)
            fn(Tile{r0, std::min(r0 + patch_size, h), c0,
                    std::min(c0 + patch_size, w)});
}

void validate(const DepthMap &d, const PatchGrid &grid, const char *what) {
    if (grid.patch_size < 1)
        throw std::invalid_argument(std::string(what) + ": patch_size must be >= 1");
    if (d.height < 1 || d.width < 1)
        throw std::invalid_argument(std::string(what) + ": empty depth map");
}

struct TileStats {
    double mean = 0.0;
    double std = 0.0; // population
};

TileStats tile_stats(const DepthMap &d, const Tile &t) {
    double sum = 0.0;
    for (int r = t.r0; r < t.r1; ++r)
        for (int c = t.c0; c < t.c1; ++c)
            sum += d.at(r, c);
    const double mean = sum / t.count();
    double var = 0.0;
    for (int r = t.r0; r < t.r1; ++r)
        for (int c = t.c0; c < t.c1; ++c) {
            const double dv = d.at(r, c) - mean;
            var += dv * dv;
        }
    TileStats s;
    s.mean = mean;
    s.std = std::sqrt(var / t.count());
    return s;
}

} // namespace

NormalizedDepth patch_normalize(const DepthMap &d, const PatchGrid &grid,
                                double delta) {
    validate(d, grid, "patch_normalize");
    if (!(delta > 0.0))
        throw std::invalid_argument("patch_normalize: delta must be positive");

    NormalizedDepth out;
    out.height = d.height;
    out.width = d.width;
    out.data.assign(d.size(), 0.0);
    for_each_tile(d.height, d.width, grid.patch_size, [&](const Tile &t) {
        const TileStats s = tile_stats(d, t);
        const double inv = 1.0 / (s.std + delta);
        for (int r = t.r0; r < t.r1; ++r)
            for (int c = t.c0; c < t.c1; ++c)
                out.data[static_cast<size_t>(r) * d.width + c] =
                    (d.at(r, c) - s.mean) * inv;
    });
    return out;
}

NormalizedDepth image_normalize(const DepthMap &d, const PatchGrid &grid) {
    validate(d, grid, "image_normalize");

    const size_t n = d.size();
    double sum = 0.0;
    for (double v : d.data)
        sum += v;
    const double mu_i = sum / n;
    double var = 0.0;
    for (double v : d.data)
        var += (v - mu_i) * (v - mu_i);
    const double sigma_i = std::sqrt(var / n);

    NormalizedDepth out;
    out.height = d.height;
    out.width = d.width;
    out.data.assign(n, 0.0);
    if (sigma_i < kSigmaImageGuard)
        return out; // constant image: all zeros

    const double inv = 1.0 / sigma_i;
    for_each_tile(d.height, d.width, grid.patch_size, [&](const Tile &t) {
        const TileStats s = tile_stats(d, t);
        for (int r = t.r0; r < t.r1; ++r)
            for (int c = t.c0; c < t.c1; ++c)
                out.data[static_cast<size_t>(r) * d.width + c] =
                    (d.at(r, c) - s.mean) * inv;
    });
    return out;
}

DepthLossResult depth_loss(const DepthMap &d, const DepthMap &prior,
                           const PatchGrid &grid, double gamma, double eta,
                           double tolerance, double delta,
                           bool stop_statistics) {
    require_same_shape(d, prior, "depth_loss");
    validate(d, grid, "depth_loss");
    if (gamma < 0 || eta < 0 || tolerance < 0)
        throw std::invalid_argument("depth_loss: weights and tolerance must be >= 0");

    const size_t n = d.size();
    const double inv_n = 1.0 / static_cast<double>(n);
    const auto hinge = [tolerance](double r) {
        const double a = std::abs(r) - tolerance;
        return a > 0.0 ? a * a : 0.0;
    };
    const auto hinge_d = [tolerance](double r) {
        const double a = std::abs(r) - tolerance;
        return a > 0.0 ? 2.0 * a * (r > 0.0 ? 1.0 : -1.0) : 0.0;
    };

    DepthLossResult res;
    res.grad = DepthMap(d.height, d.width);
    double loss = 0.0;

    // Patch scale.
    if (gamma > 0.0) {
        const NormalizedDepth pn = patch_normalize(prior, grid, delta);
        for_each_tile(d.height, d.width, grid.patch_size, [&](const Tile &t) {
            const TileStats s = tile_stats(d, t);
            const double inv = 1.0 / (s.std + delta);
            double u_sum = 0.0, b = 0.0;
            const int m = t.count();
            // First sweep: loss and the upstream cotangents u(x).
            std::vector<double> u(static_cast<size_t>(m));
            int k = 0;
            for (int r = t.r0; r < t.r1; ++r)
                for (int c = t.c0; c < t.c1; ++c, ++k) {
                    const double centered = d.at(r, c) - s.mean;
                    const double val = centered * inv;
                    const double resid = val - pn.at(r, c);
                    loss += gamma * inv_n * hinge(resid);
                    u[k] = gamma * inv_n * hinge_d(resid);
                    u_sum += u[k];
                    b += u[k] * centered;
                }
            const double u_mean = u_sum / m;
            const bool through_sigma = !stop_statistics && s.std > kSigmaPatchGuard;
            const double sigma_coef =
                through_sigma ? b * inv * inv / (m * s.std) : 0.0;
            k = 0;
            for (int r = t.r0; r < t.r1; ++r)
                for (int c = t.c0; c < t.c1; ++c, ++k) {
                    double g = stop_statistics ? u[k] * inv : (u[k] - u_mean) * inv;
                    if (through_sigma)
                        g -= sigma_coef * (d.at(r, c) - s.mean);
                    res.grad.at(r, c) += g;
                }
        });
    }

    // Image scale.
    if (eta > 0.0) {
        const NormalizedDepth pi = image_normalize(prior, grid);

        double sum = 0.0;
        for (double v : d.data)
            sum += v;
        const double mu_i = sum * inv_n;
        double var = 0.0;
        for (double v : d.data)
            var += (v - mu_i) * (v - mu_i);
        const double sigma_i = std::sqrt(var * inv_n);

        if (sigma_i >= kSigmaImageGuard) {
            const double inv = 1.0 / sigma_i;
            std::vector<double> v_cot(n, 0.0);
            std::vector<double> centered(n, 0.0);
            double c_coef = 0.0;

            for_each_tile(d.height, d.width, grid.patch_size, [&](const Tile &t) {
                const TileStats s = tile_stats(d, t);
                double v_sum = 0.0;
                for (int r = t.r0; r < t.r1; ++r)
                    for (int c = t.c0; c < t.c1; ++c) {
                        const size_t idx = static_cast<size_t>(r) * d.width + c;
                        centered[idx] = d.at(r, c) - s.mean;
                        const double val = centered[idx] * inv;
                        const double resid = val - pi.data[idx];
                        loss += eta * inv_n * hinge(resid);
                        v_cot[idx] = eta * inv_n * hinge_d(resid);
                        v_sum += v_cot[idx];
                        c_coef += v_cot[idx] * centered[idx];
                    }
                const double v_mean = v_sum / t.count();
                if (!stop_statistics)
                    for (int r = t.r0; r < t.r1; ++r)
                        for (int c = t.c0; c < t.c1; ++c)
                            res.grad.at(r, c) +=
                                (v_cot[static_cast<size_t>(r) * d.width + c] - v_mean) * inv;
                else
                    for (int r = t.r0; r < t.r1; ++r)
                        for (int c = t.c0; c < t.c1; ++c)
                            res.grad.at(r, c) +=
                                v_cot[static_cast<size_t>(r) * d.width + c] * inv;
            });

            if (!stop_statistics) {
                const double scale = c_coef * inv * inv * inv * inv_n;
                for (size_t idx = 0; idx < n; ++idx)
                    res.grad.data[idx] -= scale * (d.data[idx] - mu_i);
            }
        }
        // else: rendered depth is constant; its normalization is the zero
        // field with zero gradient, so only the (constant) loss term applies.
        if (sigma_i < kSigmaImageGuard) {
            for (size_t idx = 0; idx < n; ++idx)
                loss += eta * inv_n * hinge(0.0 - pi.data[idx]);
        }
    }

    res.loss = loss;
    return res;
}

} // namespace gsreg
