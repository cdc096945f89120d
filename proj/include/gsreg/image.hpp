// Copyright Contributors to the gsreg Project
// SPDX-License-Identifier: Apache-2.0

#ifndef GSREG_IMAGE_HPP
#define GSREG_IMAGE_HPP

#include <cstddef>
#include <stdexcept>
#include <vector>

namespace gsreg {

/// Dense H x W x 3 raster, row-major, channel-interleaved. Values are
/// nominally in [0,1] after render finalization but the container itself
/// does not clamp.
struct ImageBuffer {
    int height = 0;
    int width = 0;
    std::vector<double> data; // size height*width*3

    ImageBuffer() = default;
    ImageBuffer(int h, int w, double fill = 0.0)
        : height(h), width(w), data(static_cast<size_t>(h) * w * 3, fill) {}

    double &at(int r, int c, int ch) {
        return data[(static_cast<size_t>(r) * width + c) * 3 + ch];
    }
    double at(int r, int c, int ch) const {
        return data[(static_cast<size_t>(r) * width + c) * 3 + ch];
    }
    size_t size() const { return data.size(); }
    bool same_shape(const ImageBuffer &o) const {
        return height == o.height && width == o.width;
    }
};

/// Dense H x W depth raster plus the per-pixel accumulated blending weight.
/// Depth is 0 where nothing contributed.
struct DepthMap {
    int height = 0;
    int width = 0;
    std::vector<double> data;              // size height*width
    std::vector<double> accumulated_alpha; // size height*width

    DepthMap() = default;
    DepthMap(int h, int w, double fill = 0.0)
        : height(h), width(w), data(static_cast<size_t>(h) * w, fill),
          accumulated_alpha(static_cast<size_t>(h) * w, 0.0) {}

    double &at(int r, int c) { return data[static_cast<size_t>(r) * width + c]; }
    double at(int r, int c) const { return data[static_cast<size_t>(r) * width + c]; }
    double &alpha_at(int r, int c) {
        return accumulated_alpha[static_cast<size_t>(r) * width + c];
    }
    double alpha_at(int r, int c) const {
        return accumulated_alpha[static_cast<size_t>(r) * width + c];
    }
    size_t size() const { return data.size(); }
    bool same_shape(const DepthMap &o) const {
        return height == o.height && width == o.width;
    }
};

/// Binary H x W mask. Values are exactly 0 or 1.
struct EdgeMask {
    enum class Provenance { canny, synthetic };

    int height = 0;
    int width = 0;
    std::vector<uint8_t> data; // size height*width, each 0 or 1
    Provenance provenance = Provenance::synthetic;

    EdgeMask() = default;
    EdgeMask(int h, int w, uint8_t fill = 0)
        : height(h), width(w), data(static_cast<size_t>(h) * w, fill) {}

    uint8_t &at(int r, int c) { return data[static_cast<size_t>(r) * width + c]; }
    uint8_t at(int r, int c) const { return data[static_cast<size_t>(r) * width + c]; }
    size_t size() const { return data.size(); }
};

inline void require_same_shape(const ImageBuffer &a, const ImageBuffer &b,
                               const char *what) {
    if (!a.same_shape(b))
        throw std::invalid_argument(std::string(what) + ": image shape mismatch");
}

inline void require_same_shape(const DepthMap &a, const DepthMap &b,
                               const char *what) {
    if (!a.same_shape(b))
        throw std::invalid_argument(std::string(what) + ": depth shape mismatch");
}

} // namespace gsreg

#endif
