#include "distortion.h"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "core/kernels.h"
#include "image/color.h"

namespace canonify {
namespace {

constexpr double kPi = 3.14159265358979323846;

struct Mat3 {
    // Row-major 3x3 homogeneous transform.
    double m[9] = {1, 0, 0, 0, 1, 0, 0, 0, 1};

    static Mat3 rotation(double deg) {
        const double a = deg * kPi / 180.0;
        Mat3 r;
        r.m[0] = std::cos(a);
        r.m[1] = -std::sin(a);
        r.m[3] = std::sin(a);
        r.m[4] = std::cos(a);
        return r;
    }
    static Mat3 shear_x(double deg) {
        Mat3 r;
        r.m[1] = std::tan(deg * kPi / 180.0);
        return r;
    }
    static Mat3 scale(double k) {
        Mat3 r;
        r.m[0] = k;
        r.m[4] = k;
        return r;
    }
    static Mat3 translation(double tx, double ty) {
        Mat3 r;
        r.m[2] = tx;
        r.m[5] = ty;
        return r;
    }
    Mat3 operator*(const Mat3& o) const {
        Mat3 r;
        for (int i = 0; i < 3; ++i) {
            for (int j = 0; j < 3; ++j) {
                double acc = 0;
                for (int k = 0; k < 3; ++k) acc += m[i * 3 + k] * o.m[k * 3 + j];
                r.m[i * 3 + j] = acc;
            }
        }
        return r;
    }
};

real luminance(real r, real g, real b) {
    return real(0.299) * r + real(0.587) * g + real(0.114) * b;
}

int reflect_index(int i, int n) {
    // Symmetric reflection with edge duplication: -1 -> 0, n -> n-1.
    while (i < 0 || i >= n) {
        if (i < 0) i = -i - 1;
        if (i >= n) i = 2 * n - i - 1;
    }
    return i;
}

}  // namespace

void DistortionSpec::validate() const {
    if (rot_deg < 0 || translate_frac < 0 || shear_deg < 0) {
        throw std::invalid_argument("distortion: ranges must be non-negative");
    }
    if (scale_min > scale_max || scale_min <= 0) {
        throw std::invalid_argument("distortion: empty or non-positive scale range");
    }
    auto jitter_ok = [](real f) { return f >= 0 && f < 1; };
    if (!jitter_ok(brightness) || !jitter_ok(saturation) || !jitter_ok(contrast)) {
        throw std::invalid_argument("distortion: jitter factors must lie in [0, 1)");
    }
    if (hue < 0 || hue > real(0.5)) {
        throw std::invalid_argument("distortion: hue factor must lie in [0, 0.5]");
    }
    if (blur_sigma_min < 0 || blur_sigma_min > blur_sigma_max) {
        throw std::invalid_argument("distortion: empty blur range");
    }
}

AffineParams affine_from_draw(const AffineDraw& d) {
    const Mat3 t = Mat3::rotation(-d.rot_deg) * Mat3::shear_x(-d.shear_deg) *
                   Mat3::scale(1.0 / d.scale) *
                   Mat3::translation(-2.0 * d.tx, -2.0 * d.ty);
    AffineParams p;
    p.draw = d;
    for (int i = 0; i < 6; ++i) p.theta[i] = static_cast<real>(t.m[i]);
    return p;
}

AffineParams compose_affine(const AffineParams& a, const AffineParams& b) {
    Mat3 ma, mb;
    for (int i = 0; i < 6; ++i) {
        ma.m[i] = a.theta[i];
        mb.m[i] = b.theta[i];
    }
    const Mat3 m = ma * mb;
    AffineParams out;
    for (int i = 0; i < 6; ++i) out.theta[i] = static_cast<real>(m.m[i]);
    return out;
}

AffineParams sample_affine(const DistortionSpec& spec, RngStream& rng) {
    AffineDraw d;
    d.rot_deg = rng.uniform(-spec.rot_deg, spec.rot_deg);
    d.tx = rng.uniform(-spec.translate_frac, spec.translate_frac);
    d.ty = rng.uniform(-spec.translate_frac, spec.translate_frac);
    d.scale = rng.uniform(spec.scale_min, spec.scale_max);
    d.shear_deg = rng.uniform(-spec.shear_deg, spec.shear_deg);
    return affine_from_draw(d);
}

JitterDraw sample_jitter(const DistortionSpec& spec, RngStream& rng) {
    JitterDraw j;
    j.brightness = rng.uniform(1 - spec.brightness, 1 + spec.brightness);
    j.contrast = rng.uniform(1 - spec.contrast, 1 + spec.contrast);
    j.saturation = rng.uniform(1 - spec.saturation, 1 + spec.saturation);
    j.hue = rng.uniform(-spec.hue, spec.hue);
    return j;
}

ImageF apply_affine(const ImageF& img, const AffineParams& params) {
    ImageF out(img.c, img.h, img.w, img.space);
    const real* t = params.theta;
    for (int oy = 0; oy < img.h; ++oy) {
        const real yn = normalize_coord(oy, img.h);
        for (int ox = 0; ox < img.w; ++ox) {
            const real xn = normalize_coord(ox, img.w);
            const real sx = t[0] * xn + t[1] * yn + t[2];
            const real sy = t[3] * xn + t[4] * yn + t[5];
            const double px = unnormalize_coord(sx, img.w);
            const double py = unnormalize_coord(sy, img.h);
            for (int ch = 0; ch < img.c; ++ch) {
                out.at(ch, oy, ox) = bilinear_read(img.plane(ch), img.h, img.w, py, px);
            }
        }
    }
    return out;
}

ImageF color_jitter(const ImageF& img, const JitterDraw& draw) {
    if (img.space != ImageSpace::raw01) {
        throw std::logic_error("color_jitter: expects a raw01 image");
    }
    if (img.c != 3) throw std::invalid_argument("color_jitter: expects 3 channels");
    ImageF out = img;
    const size_t np = static_cast<size_t>(img.h) * img.w;

    if (draw.brightness != 1) {
        for (auto& v : out.data) v = std::clamp(v * draw.brightness, real(0), real(1));
    }
    if (draw.contrast != 1) {
        double acc = 0;
        for (size_t i = 0; i < np; ++i) {
            acc += luminance(out.data[i], out.data[np + i], out.data[2 * np + i]);
        }
        const real mean_luma = static_cast<real>(acc / static_cast<double>(np));
        for (auto& v : out.data) {
            v = std::clamp(mean_luma + draw.contrast * (v - mean_luma), real(0), real(1));
        }
    }
    if (draw.saturation != 1 || draw.hue != 0) {
        for (size_t i = 0; i < np; ++i) {
            real h, s, v;
            rgb_to_hsv(out.data[i], out.data[np + i], out.data[2 * np + i], h, s, v);
            s = std::clamp(s * draw.saturation, real(0), real(1));
            h += draw.hue;
            if (h < 0) h += 1;
            if (h >= 1) h -= 1;
            real r, g, b;
            hsv_to_rgb(h, s, v, r, g, b);
            out.data[i] = std::clamp(r, real(0), real(1));
            out.data[np + i] = std::clamp(g, real(0), real(1));
            out.data[2 * np + i] = std::clamp(b, real(0), real(1));
        }
    }
    return out;
}

std::vector<real> gaussian_kernel(real sigma) {
    const int radius = static_cast<int>(std::ceil(3 * static_cast<double>(sigma)));
    std::vector<real> k(static_cast<size_t>(2 * radius + 1));
    double sum = 0;
    for (int i = -radius; i <= radius; ++i) {
        const double w = std::exp(-0.5 * (static_cast<double>(i) * i) /
                                  (static_cast<double>(sigma) * sigma));
        k[static_cast<size_t>(i + radius)] = static_cast<real>(w);
        sum += w;
    }
    for (auto& v : k) v = static_cast<real>(v / sum);
    return k;
}

ImageF gaussian_blur(const ImageF& img, real sigma) {
    if (sigma < 0) throw std::invalid_argument("gaussian_blur: sigma must be >= 0");
    if (sigma == 0) return img;
    const auto k = gaussian_kernel(sigma);
    const int radius = static_cast<int>(k.size() / 2);

    ImageF tmp(img.c, img.h, img.w, img.space);
    for (int ch = 0; ch < img.c; ++ch) {
        for (int y = 0; y < img.h; ++y) {
            for (int x = 0; x < img.w; ++x) {
                real acc = 0;
                for (int i = -radius; i <= radius; ++i) {
                    acc += k[static_cast<size_t>(i + radius)] *
                           img.at(ch, y, reflect_index(x + i, img.w));
                }
                tmp.at(ch, y, x) = acc;
            }
        }
    }
    ImageF out(img.c, img.h, img.w, img.space);
    for (int ch = 0; ch < img.c; ++ch) {
        for (int y = 0; y < img.h; ++y) {
            for (int x = 0; x < img.w; ++x) {
                real acc = 0;
                for (int i = -radius; i <= radius; ++i) {
                    acc += k[static_cast<size_t>(i + radius)] *
                           tmp.at(ch, reflect_index(y + i, img.h), x);
                }
                out.at(ch, y, x) = acc;
            }
        }
    }
    return out;
}

TrainingPair make_training_pair(const ImageU8& raw, const DistortionSpec& spec,
                                const PairSizes& sizes, const Normalization& norm,
                                RngStream& rng) {
    if (raw.w < 1 || raw.h < 1) throw std::invalid_argument("make_training_pair: empty image");
    const ImageF src = to_float(raw);

    TrainingPair pair;
    pair.y = center_crop(resize_shorter(src, sizes.resize_canonical), sizes.crop_canonical,
                         sizes.crop_canonical);
    normalize(pair.y, norm);

    ImageF x = center_crop(resize_shorter(src, sizes.resize_distorted), sizes.crop_distorted,
                           sizes.crop_distorted);
    const AffineParams affine = sample_affine(spec, rng);
    x = apply_affine(x, affine);
    const JitterDraw jitter = sample_jitter(spec, rng);
    x = color_jitter(x, jitter);
    if (spec.blur_enabled()) {
        pair.blur_sigma = rng.uniform(spec.blur_sigma_min, spec.blur_sigma_max);
        x = gaussian_blur(x, pair.blur_sigma);
    }
    normalize(x, norm);
    pair.x = std::move(x);
    pair.affine = affine.draw;
    pair.jitter = jitter;
    return pair;
}

}  // namespace canonify
