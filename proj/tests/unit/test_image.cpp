#include <doctest.h>

#include <cstdio>
#include <filesystem>

#include "core/rng.h"
#include "image/color.h"
#include "image/image.h"
#include "image/png_io.h"

using namespace canonify;

namespace {

ImageU8 random_image(int w, int h, RngStream& rng) {
    ImageU8 img(w, h);
    for (auto& b : img.data) b = static_cast<std::uint8_t>(rng.uniform_index(256));
    return img;
}

}  // namespace

TEST_CASE("resize_shorter") {
    RngStream rng(1);
    // shorter axis already at target -> unchanged
    auto img = to_float(random_image(512, 256, rng));
    auto same = resize_shorter(img, 256);
    CHECK(same.h == 256);
    CHECK(same.w == 512);
    CHECK(same.data == img.data);

    // aspect preserved
    auto img2 = to_float(random_image(200, 100, rng));
    auto small = resize_shorter(img2, 50);
    CHECK(small.h == 50);
    CHECK(small.w == 100);

    // constant image stays constant for any target
    ImageF flat(3, 37, 61);
    for (auto& v : flat.data) v = real(0.25);
    for (int target : {10, 37, 90}) {
        auto r = resize_shorter(flat, target);
        for (real v : r.data) CHECK(v == doctest::Approx(0.25));
    }

    CHECK_THROWS(resize_shorter(flat, 0));
}

TEST_CASE("center_crop") {
    // 256 -> 224 picks offset 16
    ImageF img(1, 256, 256);
    for (int y = 0; y < 256; ++y)
        for (int x = 0; x < 256; ++x) img.at(0, y, x) = static_cast<real>(y * 1000 + x);
    auto c = center_crop(img, 224, 224);
    CHECK(c.at(0, 0, 0) == doctest::Approx(16 * 1000 + 16));
    CHECK(c.at(0, 223, 223) == doctest::Approx(239 * 1000 + 239));

    // size == dims is the identity
    auto full = center_crop(img, 256, 256);
    CHECK(full.data == img.data);

    // crop of crop equals the single larger-to-smaller crop for even sizes
    auto two_step = center_crop(center_crop(img, 128, 128), 64, 64);
    auto one_step = center_crop(img, 64, 64);
    CHECK(two_step.data == one_step.data);

    CHECK_THROWS_AS(center_crop(img, 300, 300), std::invalid_argument);
}

TEST_CASE("normalization round trip") {
    RngStream rng(2);
    auto img = to_float(random_image(8, 8, rng));
    Normalization n;
    n.mean[0] = real(0.5);
    n.mean[1] = real(0.4);
    n.mean[2] = real(0.6);
    n.stdev[0] = real(0.2);
    n.stdev[1] = real(0.3);
    n.stdev[2] = real(0.25);
    auto copy = img;
    normalize(copy, n);
    CHECK(copy.space == ImageSpace::normalized);
    CHECK_THROWS_AS(normalize(copy, n), std::logic_error);
    denormalize(copy, n);
    for (size_t i = 0; i < img.data.size(); ++i) {
        CHECK(copy.data[i] == doctest::Approx(img.data[i]).epsilon(1e-5));
    }
}

TEST_CASE("png round trip") {
    RngStream rng(3);
    for (auto [w, h] : {std::pair{1, 1}, std::pair{17, 5}, std::pair{64, 64}, std::pair{96, 41}}) {
        auto img = random_image(w, h, rng);
        auto bytes = encode_png(img);
        auto back = decode_png(bytes);
        CHECK(back.w == img.w);
        CHECK(back.h == img.h);
        CHECK(back.data == img.data);
    }
}

TEST_CASE("png error paths") {
    CHECK_THROWS(decode_png({1, 2, 3}));

    RngStream rng(4);
    auto bytes = encode_png(random_image(16, 16, rng));
    auto truncated = std::vector<std::uint8_t>(bytes.begin(), bytes.begin() + 40);
    CHECK_THROWS(decode_png(truncated));

    // corrupting the pixel stream breaks the zlib checksum
    auto corrupt = bytes;
    corrupt[60] ^= 0xFF;
    CHECK_THROWS(decode_png(corrupt));
}

TEST_CASE("png file io") {
    namespace fs = std::filesystem;
    const auto dir = fs::temp_directory_path() / "canonify_png_test";
    fs::create_directories(dir);
    RngStream rng(5);
    auto img = random_image(24, 24, rng);
    const auto path = (dir / "t.png").string();
    save_png(path, img);
    auto back = load_png(path);
    CHECK(back.data == img.data);
    CHECK_THROWS(load_png((dir / "missing.png").string()));
    fs::remove_all(dir);
}

TEST_CASE("rgb-hsv round trip on 17^3 lattice") {
    real max_err = 0;
    for (int ri = 0; ri < 17; ++ri) {
        for (int gi = 0; gi < 17; ++gi) {
            for (int bi = 0; bi < 17; ++bi) {
                const real r = static_cast<real>(ri) / 16;
                const real g = static_cast<real>(gi) / 16;
                const real b = static_cast<real>(bi) / 16;
                real h, s, v, r2, g2, b2;
                rgb_to_hsv(r, g, b, h, s, v);
                hsv_to_rgb(h, s, v, r2, g2, b2);
                max_err = std::max({max_err, std::abs(r - r2), std::abs(g - g2),
                                    std::abs(b - b2)});
            }
        }
    }
    CHECK(max_err < real(1e-5));
}

TEST_CASE("hsv specifics") {
    real h, s, v;
    rgb_to_hsv(1, 0, 0, h, s, v);
    CHECK(h == doctest::Approx(0.0));
    CHECK(s == doctest::Approx(1.0));
    CHECK(v == doctest::Approx(1.0));

    // gray is a fixed point
    real r, g, b;
    rgb_to_hsv(real(0.5), real(0.5), real(0.5), h, s, v);
    CHECK(s == 0);
    hsv_to_rgb(h, s, v, r, g, b);
    CHECK(r == real(0.5));
    CHECK(g == real(0.5));
    CHECK(b == real(0.5));
}
