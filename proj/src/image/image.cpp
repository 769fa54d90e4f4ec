#include "image/image.h"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace canonify {

ImageF to_float(const ImageU8& img) {
    ImageF out(3, img.h, img.w, ImageSpace::raw01);
    const real inv = real(1) / real(255);
    for (int y = 0; y < img.h; ++y) {
        for (int x = 0; x < img.w; ++x) {
            const std::uint8_t* p = img.px(y, x);
            for (int ch = 0; ch < 3; ++ch) out.at(ch, y, x) = static_cast<real>(p[ch]) * inv;
        }
    }
    return out;
}

ImageU8 to_u8(const ImageF& img) {
    if (img.space != ImageSpace::raw01) {
        throw std::logic_error("to_u8: image must be in raw01 space");
    }
    ImageU8 out(img.w, img.h);
    for (int y = 0; y < img.h; ++y) {
        for (int x = 0; x < img.w; ++x) {
            std::uint8_t* p = out.px(y, x);
            for (int ch = 0; ch < 3; ++ch) {
                const real v = std::clamp(img.at(ch, y, x), real(0), real(1));
                p[ch] = static_cast<std::uint8_t>(std::lround(v * real(255)));
            }
        }
    }
    return out;
}

void normalize(ImageF& img, const Normalization& n) {
    if (img.space != ImageSpace::raw01) {
        throw std::logic_error("normalize: image already normalized");
    }
    for (int ch = 0; ch < img.c; ++ch) {
        const real m = n.mean[ch], inv = real(1) / n.stdev[ch];
        real* p = img.plane(ch);
        const size_t np = static_cast<size_t>(img.h) * img.w;
        for (size_t i = 0; i < np; ++i) p[i] = (p[i] - m) * inv;
    }
    img.space = ImageSpace::normalized;
}

void denormalize(ImageF& img, const Normalization& n) {
    if (img.space != ImageSpace::normalized) {
        throw std::logic_error("denormalize: image not normalized");
    }
    for (int ch = 0; ch < img.c; ++ch) {
        const real m = n.mean[ch], s = n.stdev[ch];
        real* p = img.plane(ch);
        const size_t np = static_cast<size_t>(img.h) * img.w;
        for (size_t i = 0; i < np; ++i) p[i] = p[i] * s + m;
    }
    img.space = ImageSpace::raw01;
}

void clamp01(ImageF& img) {
    for (auto& v : img.data) v = std::clamp(v, real(0), real(1));
}

ImageF resize_bilinear(const ImageF& img, int out_h, int out_w) {
    if (img.h <= 0 || img.w <= 0) throw std::invalid_argument("resize: empty image");
    if (out_h <= 0 || out_w <= 0) throw std::invalid_argument("resize: empty target");
    ImageF out(img.c, out_h, out_w, img.space);
    const double sy = static_cast<double>(img.h) / out_h;
    const double sx = static_cast<double>(img.w) / out_w;
    for (int oy = 0; oy < out_h; ++oy) {
        double fy = (oy + 0.5) * sy - 0.5;
        fy = std::clamp(fy, 0.0, static_cast<double>(img.h - 1));
        const int y0 = static_cast<int>(fy);
        const int y1 = std::min(y0 + 1, img.h - 1);
        const real wy = static_cast<real>(fy - y0);
        for (int ox = 0; ox < out_w; ++ox) {
            double fx = (ox + 0.5) * sx - 0.5;
            fx = std::clamp(fx, 0.0, static_cast<double>(img.w - 1));
            const int x0 = static_cast<int>(fx);
            const int x1 = std::min(x0 + 1, img.w - 1);
            const real wx = static_cast<real>(fx - x0);
            for (int ch = 0; ch < img.c; ++ch) {
                const real a = img.at(ch, y0, x0), b = img.at(ch, y0, x1);
                const real c = img.at(ch, y1, x0), d = img.at(ch, y1, x1);
                if (wx == real(0) && wy == real(0)) {
                    out.at(ch, oy, ox) = a;
                } else {
                    out.at(ch, oy, ox) =
                        (1 - wy) * ((1 - wx) * a + wx * b) + wy * ((1 - wx) * c + wx * d);
                }
            }
        }
    }
    return out;
}

ImageF resize_shorter(const ImageF& img, int target) {
    if (target < 1) throw std::invalid_argument("resize_shorter: target must be positive");
    if (img.h <= 0 || img.w <= 0) throw std::invalid_argument("resize_shorter: empty image");
    int out_h, out_w;
    if (img.h <= img.w) {
        out_h = target;
        out_w = static_cast<int>(std::lround(static_cast<double>(img.w) * target / img.h));
    } else {
        out_w = target;
        out_h = static_cast<int>(std::lround(static_cast<double>(img.h) * target / img.w));
    }
    if (out_h == img.h && out_w == img.w) return img;
    return resize_bilinear(img, out_h, out_w);
}

ImageF center_crop(const ImageF& img, int out_h, int out_w) {
    if (img.h < out_h || img.w < out_w) {
        throw std::invalid_argument("center_crop: image smaller than crop");
    }
    const int oy = (img.h - out_h) / 2;
    const int ox = (img.w - out_w) / 2;
    ImageF out(img.c, out_h, out_w, img.space);
    for (int ch = 0; ch < img.c; ++ch) {
        for (int y = 0; y < out_h; ++y) {
            std::copy_n(img.plane(ch) + static_cast<size_t>(oy + y) * img.w + ox, out_w,
                        out.plane(ch) + static_cast<size_t>(y) * out_w);
        }
    }
    return out;
}

}  // namespace canonify
