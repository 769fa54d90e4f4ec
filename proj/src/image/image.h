#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "core/real.h"

namespace canonify {

// 8-bit interleaved RGB image, the interchange format for PNG files.
struct ImageU8 {
    int w = 0, h = 0;
    std::vector<std::uint8_t> data;  // h * w * 3, row-major RGB

    ImageU8() = default;
    ImageU8(int width, int height) : w(width), h(height) {
        data.assign(static_cast<size_t>(w) * h * 3, 0);
    }
    std::uint8_t* px(int y, int x) { return data.data() + (static_cast<size_t>(y) * w + x) * 3; }
    const std::uint8_t* px(int y, int x) const {
        return data.data() + (static_cast<size_t>(y) * w + x) * 3;
    }
};

enum class ImageSpace { raw01, normalized };

// Planar CHW float image. raw01 values live in [0, 1]; normalized values are
// (raw01 - mean) / std per channel.
struct ImageF {
    int c = 0, h = 0, w = 0;
    std::vector<real> data;  // c * h * w planar
    ImageSpace space = ImageSpace::raw01;

    ImageF() = default;
    ImageF(int channels, int height, int width, ImageSpace sp = ImageSpace::raw01)
        : c(channels), h(height), w(width), space(sp) {
        data.assign(static_cast<size_t>(c) * h * w, real(0));
    }
    real& at(int ch, int y, int x) {
        return data[(static_cast<size_t>(ch) * h + y) * w + x];
    }
    real at(int ch, int y, int x) const {
        return data[(static_cast<size_t>(ch) * h + y) * w + x];
    }
    const real* plane(int ch) const { return data.data() + static_cast<size_t>(ch) * h * w; }
    real* plane(int ch) { return data.data() + static_cast<size_t>(ch) * h * w; }
};

struct Normalization {
    real mean[3] = {0, 0, 0};
    real stdev[3] = {1, 1, 1};
};

ImageF to_float(const ImageU8& img);           // u8 -> raw01
ImageU8 to_u8(const ImageF& img);              // raw01 -> u8, clamped and rounded
void normalize(ImageF& img, const Normalization& n);
void denormalize(ImageF& img, const Normalization& n);
void clamp01(ImageF& img);

// Bilinear resize with half-pixel center alignment; edges clamp.
ImageF resize_bilinear(const ImageF& img, int out_h, int out_w);

// Scales so the shorter axis equals target, preserving aspect ratio.
ImageF resize_shorter(const ImageF& img, int target);

// Crop offset is floor((dim - size) / 2) on each axis.
ImageF center_crop(const ImageF& img, int out_h, int out_w);

}  // namespace canonify
