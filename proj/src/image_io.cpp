// Copyright Contributors to the gsreg Project
// SPDX-License-Identifier: Apache-2.0

#include "gsreg/image_io.hpp"

#include <png.h>

#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace gsreg {

namespace {

void write_pfm_raw(const std::string &path, const char *magic, int h, int w,
                   const std::vector<float> &samples) {
    std::ofstream out(path, std::ios::binary);
    if (!out)
        throw std::runtime_error("write_pfm: cannot open " + path);
    out << magic << "\n" << w << " " << h << "\n" << "-1.0\n";
    const int chans = std::strcmp(magic, "PF") == 0 ? 3 : 1;
    // Bottom row first.
    for (int r = h - 1; r >= 0; --r)
        out.write(reinterpret_cast<const char *>(
                      samples.data() + static_cast<size_t>(r) * w * chans),
                  static_cast<std::streamsize>(sizeof(float)) * w * chans);
    if (!out)
        throw std::runtime_error("write_pfm: failed writing " + path);
}

struct PfmData {
    int h = 0, w = 0, chans = 0;
    std::vector<float> samples; // top row first
};

PfmData read_pfm_raw(const std::string &path) {
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw std::runtime_error("read_pfm: cannot open " + path);
    std::string magic;
    in >> magic;
    PfmData out;
    if (magic == "PF")
        out.chans = 3;
    else if (magic == "Pf")
        out.chans = 1;
    else
        throw std::runtime_error("read_pfm: bad magic in " + path);
    double scale;
    in >> out.w >> out.h >> scale;
    if (out.w < 1 || out.h < 1)
        throw std::runtime_error("read_pfm: bad dimensions in " + path);
    if (scale >= 0)
        throw std::runtime_error("read_pfm: big-endian files are not supported");
    in.get(); // single whitespace after the scale line
    out.samples.resize(static_cast<size_t>(out.h) * out.w * out.chans);
    for (int r = out.h - 1; r >= 0; --r)
        in.read(reinterpret_cast<char *>(out.samples.data() +
                                         static_cast<size_t>(r) * out.w * out.chans),
                static_cast<std::streamsize>(sizeof(float)) * out.w * out.chans);
    if (!in)
        throw std::runtime_error("read_pfm: truncated file " + path);
    return out;
}

} // namespace

void write_pfm(const ImageBuffer &img, const std::string &path) {
    std::vector<float> samples(img.data.size());
    for (size_t i = 0; i < img.data.size(); ++i)
        samples[i] = static_cast<float>(img.data[i]);
    write_pfm_raw(path, "PF", img.height, img.width, samples);
}

void write_pfm(const DepthMap &depth, const std::string &path) {
    std::vector<float> samples(depth.data.size());
    for (size_t i = 0; i < depth.data.size(); ++i)
        samples[i] = static_cast<float>(depth.data[i]);
    write_pfm_raw(path, "Pf", depth.height, depth.width, samples);
}

ImageBuffer read_pfm_color(const std::string &path) {
    const PfmData d = read_pfm_raw(path);
    if (d.chans != 3)
        throw std::runtime_error("read_pfm_color: " + path + " is not a color PFM");
    ImageBuffer img(d.h, d.w);
    for (size_t i = 0; i < img.data.size(); ++i)
        img.data[i] = d.samples[i];
    return img;
}

DepthMap read_pfm_depth(const std::string &path) {
    const PfmData d = read_pfm_raw(path);
    if (d.chans != 1)
        throw std::runtime_error("read_pfm_depth: " + path + " is not a grayscale PFM");
    DepthMap depth(d.h, d.w);
    for (size_t i = 0; i < depth.data.size(); ++i)
        depth.data[i] = d.samples[i];
    return depth;
}

namespace {

uint8_t to_byte(double v) {
    const double clamped = v < 0.0 ? 0.0 : (v > 1.0 ? 1.0 : v);
    return static_cast<uint8_t>(std::lround(clamped * 255.0));
}

void write_png_bytes(const std::string &path, int h, int w, int format,
                     const std::vector<uint8_t> &bytes) {
    png_image image;
    std::memset(&image, 0, sizeof(image));
    image.version = PNG_IMAGE_VERSION;
    image.width = static_cast<png_uint_32>(w);
    image.height = static_cast<png_uint_32>(h);
    image.format = static_cast<png_uint_32>(format);
    if (!png_image_write_to_file(&image, path.c_str(), 0, bytes.data(), 0, nullptr))
        throw std::runtime_error("write_png: " + path + ": " + image.message);
}

} // namespace

void write_png(const ImageBuffer &img, const std::string &path) {
    std::vector<uint8_t> bytes(img.data.size());
    for (size_t i = 0; i < img.data.size(); ++i)
        bytes[i] = to_byte(img.data[i]);
    write_png_bytes(path, img.height, img.width, PNG_FORMAT_RGB, bytes);
}

void write_png_mask(const EdgeMask &mask, const std::string &path) {
    std::vector<uint8_t> bytes(mask.data.size());
    for (size_t i = 0; i < mask.data.size(); ++i)
        bytes[i] = mask.data[i] ? 255 : 0;
    write_png_bytes(path, mask.height, mask.width, PNG_FORMAT_GRAY, bytes);
}

ImageBuffer read_png(const std::string &path) {
    png_image image;
    std::memset(&image, 0, sizeof(image));
    image.version = PNG_IMAGE_VERSION;
    if (!png_image_begin_read_from_file(&image, path.c_str()))
        throw std::runtime_error("read_png: " + path + ": " + image.message);
    image.format = PNG_FORMAT_RGB;
    std::vector<uint8_t> bytes(PNG_IMAGE_SIZE(image));
    if (!png_image_finish_read(&image, nullptr, bytes.data(), 0, nullptr))
        throw std::runtime_error("read_png: " + path + ": " + image.message);

    ImageBuffer img(static_cast<int>(image.height), static_cast<int>(image.width));
    for (size_t i = 0; i < img.data.size(); ++i)
        img.data[i] = bytes[i] / 255.0;
    return img;
}

} // namespace gsreg
