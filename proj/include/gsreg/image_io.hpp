// Copyright Contributors to the gsreg Project
// SPDX-License-Identifier: Apache-2.0

#ifndef GSREG_IMAGE_IO_HPP
#define GSREG_IMAGE_IO_HPP

#include "gsreg/image.hpp"

#include <string>

namespace gsreg {

// PFM: 32-bit float rasters, little-endian (negative scale), rows stored
// bottom-up. `PF` carries three channels, `Pf` one.

void write_pfm(const ImageBuffer &img, const std::string &path);
void write_pfm(const DepthMap &depth, const std::string &path);
ImageBuffer read_pfm_color(const std::string &path);
DepthMap read_pfm_depth(const std::string &path);

// PNG: 8-bit, for viewing. Values are clamped to [0,1] and quantized.

void write_png(const ImageBuffer &img, const std::string &path);
void write_png_mask(const EdgeMask &mask, const std::string &path);
ImageBuffer read_png(const std::string &path);

} // namespace gsreg

#endif
