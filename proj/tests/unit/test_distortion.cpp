#include <doctest.h>

#include <array>
#include <cmath>
#include <set>
#include <stdexcept>

#include "core/rng.h"
#include "distortion.h"

using namespace canonify;

namespace {

ImageF ramp_image(int size) {
    // Smooth two-axis gradient, values well inside [0, 1].
    ImageF img(3, size, size);
    for (int ch = 0; ch < 3; ++ch) {
        for (int y = 0; y < size; ++y) {
            for (int x = 0; x < size; ++x) {
                img.at(ch, y, x) = real(0.1) + real(0.4) * x / size + real(0.35) * y / size +
                                   real(0.05) * ch;
            }
        }
    }
    return img;
}

DistortionSpec identity_spec() {
    DistortionSpec s;
    s.rot_deg = 0;
    s.translate_frac = 0;
    s.scale_min = s.scale_max = 1;
    s.shear_deg = 0;
    s.brightness = s.saturation = s.contrast = 0;
    s.hue = 0;
    return s;
}

}  // namespace

TEST_CASE("sample_affine identity and determinism") {
    auto spec = identity_spec();
    RngStream rng(1);
    auto p = sample_affine(spec, rng);
    CHECK(p.theta[0] == 1);
    CHECK(p.theta[1] == 0);
    CHECK(p.theta[2] == 0);
    CHECK(p.theta[3] == 0);
    CHECK(p.theta[4] == 1);
    CHECK(p.theta[5] == 0);

    DistortionSpec full;
    RngStream a(42, 1, 2, 3), b(42, 1, 2, 3);
    auto pa = sample_affine(full, a);
    auto pb = sample_affine(full, b);
    for (int i = 0; i < 6; ++i) CHECK(pa.theta[i] == pb.theta[i]);
}

TEST_CASE("sample_affine draws stay in spec ranges over 10^4 samples") {
    DistortionSpec spec;
    RngStream rng(7);
    real rot_lo = 99, rot_hi = -99, sc_lo = 99, sc_hi = -99, t_lo = 99, t_hi = -99;
    for (int i = 0; i < 10000; ++i) {
        auto p = sample_affine(spec, rng);
        rot_lo = std::min(rot_lo, p.draw.rot_deg);
        rot_hi = std::max(rot_hi, p.draw.rot_deg);
        sc_lo = std::min(sc_lo, p.draw.scale);
        sc_hi = std::max(sc_hi, p.draw.scale);
        t_lo = std::min({t_lo, p.draw.tx, p.draw.ty});
        t_hi = std::max({t_hi, p.draw.tx, p.draw.ty});
        CHECK(std::abs(p.draw.shear_deg) <= spec.shear_deg);
    }
    // bounds respected and nearly attained
    CHECK(rot_lo >= -spec.rot_deg);
    CHECK(rot_hi <= spec.rot_deg);
    CHECK(rot_lo < real(-4.9));
    CHECK(rot_hi > real(4.9));
    CHECK(sc_lo >= spec.scale_min);
    CHECK(sc_hi <= spec.scale_max);
    CHECK(sc_lo < real(0.81));
    CHECK(sc_hi > real(1.09));
    CHECK(t_lo >= -spec.translate_frac);
    CHECK(t_hi <= spec.translate_frac);
}

TEST_CASE("apply_affine identity is exact") {
    auto img = ramp_image(17);
    AffineParams id;
    auto out = apply_affine(img, id);
    CHECK(out.data == img.data);
}

TEST_CASE("apply_affine one-pixel translation shifts exactly") {
    const int n = 9;
    auto img = ramp_image(n);
    AffineParams p;
    // source x = x_out - 1 px in normalized units
    p.theta[2] = real(-2.0 / (n - 1));
    auto out = apply_affine(img, p);
    for (int ch = 0; ch < 3; ++ch) {
        for (int y = 0; y < n; ++y) {
            CHECK(out.at(ch, y, 0) == 0);  // zero-filled edge column
            for (int x = 1; x < n; ++x) {
                CHECK(out.at(ch, y, x) == img.at(ch, y, x - 1));
            }
        }
    }
}

TEST_CASE("rotate forward then back nearly restores a smooth image") {
    auto img = ramp_image(48);
    auto fwd = apply_affine(img, affine_from_draw({5, 0, 0, 1, 0}));
    auto back = apply_affine(fwd, affine_from_draw({-5, 0, 0, 1, 0}));
    real max_diff = 0;
    for (int ch = 0; ch < 3; ++ch) {
        for (int y = 8; y < 40; ++y) {
            for (int x = 8; x < 40; ++x) {
                max_diff = std::max(max_diff, std::abs(back.at(ch, y, x) - img.at(ch, y, x)));
            }
        }
    }
    CHECK(max_diff < real(0.02));
}

TEST_CASE("composed affine matches sequential application on smooth images") {
    auto img = ramp_image(48);
    auto pa = affine_from_draw({3, real(0.02), real(-0.01), real(1.05), 2});
    auto pb = affine_from_draw({-2, real(-0.015), real(0.02), real(0.95), -3});
    // apply(img, B) reads img at theta_B p; applying A afterwards reads at
    // theta_B (theta_A p), i.e. the single warp with theta_B * theta_A.
    auto seq = apply_affine(apply_affine(img, pb), pa);
    auto one = apply_affine(img, compose_affine(pb, pa));
    real max_diff = 0;
    for (int ch = 0; ch < 3; ++ch) {
        for (int y = 8; y < 40; ++y) {
            for (int x = 8; x < 40; ++x) {
                max_diff = std::max(max_diff, std::abs(seq.at(ch, y, x) - one.at(ch, y, x)));
            }
        }
    }
    CHECK(max_diff < real(0.02));
}

TEST_CASE("color_jitter identity and fixed points") {
    auto img = ramp_image(12);
    JitterDraw id;
    auto out = color_jitter(img, id);
    CHECK(out.data == img.data);

    // hue shift by half the circle turns pure red into pure cyan
    ImageF red(3, 2, 2);
    for (int y = 0; y < 2; ++y)
        for (int x = 0; x < 2; ++x) red.at(0, y, x) = 1;
    JitterDraw hue_half;
    hue_half.hue = real(0.5);
    auto cyan = color_jitter(red, hue_half);
    for (int y = 0; y < 2; ++y) {
        for (int x = 0; x < 2; ++x) {
            CHECK(cyan.at(0, y, x) == doctest::Approx(0.0));
            CHECK(cyan.at(1, y, x) == doctest::Approx(1.0));
            CHECK(cyan.at(2, y, x) == doctest::Approx(1.0));
        }
    }

    // gray images are invariant under saturation and hue jitter
    ImageF gray(3, 3, 3);
    for (auto& v : gray.data) v = real(0.42);
    JitterDraw sat_hue;
    sat_hue.saturation = real(1.2);
    sat_hue.hue = real(0.07);
    auto still_gray = color_jitter(gray, sat_hue);
    CHECK(still_gray.data == gray.data);

    // contract: normalized-space input is rejected
    auto norm = ramp_image(4);
    norm.space = ImageSpace::normalized;
    CHECK_THROWS_AS(color_jitter(norm, id), std::logic_error);
}

TEST_CASE("gaussian blur") {
    auto img = ramp_image(16);
    auto same = gaussian_blur(img, 0);
    CHECK(same.data == img.data);

    ImageF flat(3, 8, 8);
    for (auto& v : flat.data) v = real(0.7);
    auto blurred = gaussian_blur(flat, real(1.3));
    for (real v : blurred.data) CHECK(v == doctest::Approx(0.7));

    for (real sigma : {real(0.4), real(1.0), real(2.7)}) {
        auto k = gaussian_kernel(sigma);
        CHECK(static_cast<int>(k.size()) == 2 * static_cast<int>(std::ceil(3 * sigma)) + 1);
        real sum = 0;
        for (real v : k) sum += v;
        CHECK(std::abs(sum - 1) < real(1e-6));
    }
}

TEST_CASE("make_training_pair with identity spec aligns x and y") {
    RngStream img_rng(11);
    ImageU8 raw(96, 96);
    for (auto& b : raw.data) b = static_cast<std::uint8_t>(img_rng.uniform_index(256));

    auto spec = identity_spec();
    Normalization norm;
    norm.mean[0] = real(0.5);
    norm.mean[1] = real(0.5);
    norm.mean[2] = real(0.5);
    norm.stdev[0] = norm.stdev[1] = norm.stdev[2] = real(0.25);
    PairSizes sizes;

    RngStream rng(1, 2, 3, 4);
    auto pair = make_training_pair(raw, spec, sizes, norm, rng);
    CHECK(pair.y.h == 64);
    CHECK(pair.x.h == 72);

    // x's center region is pixel-equal to y
    auto xc = center_crop(pair.x, 64, 64);
    CHECK(xc.data == pair.y.data);
}

TEST_CASE("make_training_pair is deterministic in the stream key") {
    RngStream img_rng(12);
    ImageU8 raw(80, 100);
    for (auto& b : raw.data) b = static_cast<std::uint8_t>(img_rng.uniform_index(256));
    DistortionSpec spec;
    Normalization norm;
    PairSizes sizes;

    auto s1 = pair_stream(9, 1, 2, 3);
    auto s2 = pair_stream(9, 1, 2, 3);
    auto p1 = make_training_pair(raw, spec, sizes, norm, s1);
    auto p2 = make_training_pair(raw, spec, sizes, norm, s2);
    CHECK(p1.x.data == p2.x.data);
    CHECK(p1.y.data == p2.y.data);

    auto s3 = pair_stream(9, 1, 2, 4);
    auto p3 = make_training_pair(raw, spec, sizes, norm, s3);
    CHECK(p1.x.data != p3.x.data);
}

TEST_CASE("affine draws never collide across 1000 batch keys") {
    DistortionSpec spec;
    std::set<std::array<real, 5>> seen;
    for (int batch = 0; batch < 1000; ++batch) {
        auto rng = pair_stream(123, 0, static_cast<std::uint64_t>(batch), 0);
        auto p = sample_affine(spec, rng);
        std::array<real, 5> key{p.draw.rot_deg, p.draw.tx, p.draw.ty, p.draw.scale,
                                p.draw.shear_deg};
        CHECK(seen.insert(key).second);
    }
}

TEST_CASE("spec validation") {
    DistortionSpec bad;
    bad.scale_min = real(1.2);
    bad.scale_max = real(0.9);
    CHECK_THROWS_AS(bad.validate(), std::invalid_argument);

    DistortionSpec bad2;
    bad2.hue = real(0.7);
    CHECK_THROWS_AS(bad2.validate(), std::invalid_argument);

    DistortionSpec ok;
    CHECK_NOTHROW(ok.validate());
}
