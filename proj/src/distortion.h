#pragma once

#include <cstdint>

#include "core/rng.h"
#include "image/image.h"

namespace canonify {

// Randomization ranges for the distortion simulator. Each range is symmetric
// about the identity except scale, which is an explicit interval.
struct DistortionSpec {
    real rot_deg = real(5);           // rotation in [-rot_deg, +rot_deg]
    real translate_frac = real(0.05); // +-fraction of image extent per axis
    real scale_min = real(0.8);
    real scale_max = real(1.1);       // content scale; < 1 shrinks and leaves borders
    real shear_deg = real(5);         // x-axis shear angle in [-shear_deg, +shear_deg]
    real brightness = real(0.25);     // multiplicative factor in [1-f, 1+f]
    real saturation = real(0.25);
    real contrast = real(0.25);
    real hue = real(0.1);             // rotation by a fraction of the hue circle
    real blur_sigma_min = real(0);    // 0..0 disables the optional blur stage
    real blur_sigma_max = real(0);
    std::uint64_t seed = 0;

    void validate() const;
    bool blur_enabled() const { return blur_sigma_max > 0; }
};

struct AffineDraw {
    real rot_deg = 0, tx = 0, ty = 0, scale = 1, shear_deg = 0;
};

// theta maps normalized output coordinates to normalized source coordinates
// (the sampling direction). It is rebuilt from the draw as
//   theta = Rot(-r) * Shear(-w) * Scale(1/s) * Translate(-2 tx, -2 ty)
// about the image center, so the visible content appears rotated by +r,
// sheared by +w, scaled by s and shifted by (tx, ty) image extents.
struct AffineParams {
    real theta[6] = {1, 0, 0, 0, 1, 0};  // row-major 2x3
    AffineDraw draw;
};

struct JitterDraw {
    real brightness = 1, contrast = 1, saturation = 1, hue = 0;
};

AffineParams affine_from_draw(const AffineDraw& d);
AffineParams compose_affine(const AffineParams& a, const AffineParams& b);  // theta_a * theta_b
AffineParams sample_affine(const DistortionSpec& spec, RngStream& rng);
JitterDraw sample_jitter(const DistortionSpec& spec, RngStream& rng);

// Inverse warp with bilinear sampling; out-of-bounds source reads are zero.
// Works in either color space (space is preserved).
ImageF apply_affine(const ImageF& img, const AffineParams& params);

// Fixed stage order brightness -> contrast -> saturation -> hue, raw01 only.
// Contrast blends toward the image's mean luminance; saturation and hue act
// in HSV. Output is clamped to [0, 1].
ImageF color_jitter(const ImageF& img, const JitterDraw& draw);

// Separable Gaussian, kernel radius ceil(3 sigma), reflect padding.
ImageF gaussian_blur(const ImageF& img, real sigma);
std::vector<real> gaussian_kernel(real sigma);

struct PairSizes {
    int resize_canonical = 72;
    int crop_canonical = 64;
    int resize_distorted = 72;
    int crop_distorted = 72;
};

struct TrainingPair {
    ImageF y;  // canonical target, crop_canonical square, normalized
    ImageF x;  // distorted input, crop_distorted square, normalized
    AffineDraw affine;
    JitterDraw jitter;
    real blur_sigma = 0;
};

// Full pair protocol: y = normalize(crop(resize(img))); x follows the same
// resize/crop, then affine warp and color jitter in raw01, optional blur,
// then normalization. One RngStream drives all draws in a fixed order, so a
// pair is a pure function of (image bytes, stream key).
TrainingPair make_training_pair(const ImageU8& raw, const DistortionSpec& spec,
                                const PairSizes& sizes, const Normalization& norm,
                                RngStream& rng);

// Per-sample stream key policy: (seed, epoch, batch, sample).
inline RngStream pair_stream(std::uint64_t seed, std::uint64_t epoch, std::uint64_t batch,
                             std::uint64_t sample) {
    return RngStream(seed, epoch + 1, batch + 1, sample + 1);
}

}  // namespace canonify
