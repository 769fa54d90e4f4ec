#include <doctest.h>

#include <cmath>

#include "core/gradcheck.h"
#include "core/kernels.h"
#include "core/rng.h"
#include "stn.h"

using namespace canonify;

namespace {

TensorPtr random_batch(int b, int c, int h, int w, RngStream& rng, real lo = 0, real hi = 1) {
    auto t = make_tensor({b, c, h, w});
    for (auto& v : t->data) v = rng.uniform(lo, hi);
    return t;
}

TensorPtr identity_theta(int b) {
    auto t = make_tensor({b, 2, 3});
    for (int i = 0; i < b; ++i) {
        t->data[i * 6 + 0] = 1;
        t->data[i * 6 + 4] = 1;
    }
    return t;
}

}  // namespace

TEST_CASE("affine_grid identity and simple transforms") {
    auto grid = affine_grid(identity_theta(1), 5, 7);
    CHECK(grid->shape == std::vector<int>{1, 5, 7, 2});
    for (int i = 0; i < 5; ++i) {
        for (int j = 0; j < 7; ++j) {
            CHECK(grid->data[(i * 7 + j) * 2 + 0] == normalize_coord(j, 7));
            CHECK(grid->data[(i * 7 + j) * 2 + 1] == normalize_coord(i, 5));
        }
    }

    // Tx = 0.5 shifts every x coordinate by +0.5
    auto theta = identity_theta(1);
    theta->data[2] = real(0.5);
    auto shifted = affine_grid(theta, 5, 7);
    for (int i = 0; i < 5 * 7; ++i) {
        CHECK(shifted->data[i * 2] ==
              doctest::Approx(grid->data[i * 2] + real(0.5)).epsilon(1e-6));
        CHECK(shifted->data[i * 2 + 1] == grid->data[i * 2 + 1]);
    }

    // pure scale 0.5 spans [-0.5, 0.5]
    auto half = make_tensor({1, 2, 3});
    half->data = {real(0.5), 0, 0, 0, real(0.5), 0};
    auto zoom = affine_grid(half, 4, 4);
    real lo = 99, hi = -99;
    for (int i = 0; i < 4 * 4; ++i) {
        lo = std::min(lo, zoom->data[i * 2]);
        hi = std::max(hi, zoom->data[i * 2]);
    }
    CHECK(lo == doctest::Approx(-0.5));
    CHECK(hi == doctest::Approx(0.5));
}

TEST_CASE("affine_grid is linear in theta") {
    RngStream rng(3);
    auto t1 = make_tensor({2, 2, 3});
    auto t2 = make_tensor({2, 2, 3});
    for (auto& v : t1->data) v = rng.uniform(-1, 1);
    for (auto& v : t2->data) v = rng.uniform(-1, 1);
    const real a = real(0.7), b = real(-1.3);
    auto combo = make_tensor({2, 2, 3});
    for (size_t i = 0; i < combo->data.size(); ++i) {
        combo->data[i] = a * t1->data[i] + b * t2->data[i];
    }
    auto g1 = affine_grid(t1, 6, 6);
    auto g2 = affine_grid(t2, 6, 6);
    auto gc = affine_grid(combo, 6, 6);
    for (size_t i = 0; i < gc->data.size(); ++i) {
        CHECK(gc->data[i] == doctest::Approx(a * g1->data[i] + b * g2->data[i]).epsilon(1e-4));
    }
}

TEST_CASE("grid_sample identity is bitwise exact") {
    RngStream rng(5);
    for (int size : {4, 7, 64, 72}) {
        auto x = random_batch(2, 3, size, size, rng);
        auto y = grid_sample(x, affine_grid(identity_theta(2), size, size));
        CHECK(y->data == x->data);
    }
}

TEST_CASE("grid_sample far out of bounds yields zeros") {
    RngStream rng(6);
    auto x = random_batch(1, 2, 4, 4, rng);
    auto grid = make_tensor({1, 3, 3, 2});
    std::fill(grid->data.begin(), grid->data.end(), real(-5));
    auto y = grid_sample(x, grid);
    for (real v : y->data) CHECK(v == 0);
}

TEST_CASE("grid_sample gradients match finite differences") {
    RngStream rng(7);
    auto x = random_batch(1, 1, 4, 4, rng);
    x->requires_grad = true;

    // fractional positions clear of pixel-center kinks
    auto grid = make_tensor({1, 3, 3, 2}, true);
    for (size_t i = 0; i < grid->data.size(); ++i) {
        real frac = rng.uniform(real(0.25), real(0.75));
        const int cell = static_cast<int>(rng.uniform_index(3));
        // normalized position of pixel center `cell` plus an interior offset
        grid->data[i] = normalize_coord(cell + frac, 4);
    }
    auto target = random_batch(1, 1, 3, 3, rng);

    const real eps = kRealIsDouble ? real(1e-6) : real(5e-3);
    auto res = grad_check([&] { return mse_loss(grid_sample(x, grid), target); }, {x, grid}, eps,
                          12, 99);
    CHECK(res.max_rel_err < (kRealIsDouble ? real(1e-6) : real(1e-3)));
}

TEST_CASE("grid_sample composition approximates the composed affine") {
    // smooth image
    auto img = make_tensor({1, 1, 48, 48});
    for (int y = 0; y < 48; ++y)
        for (int x = 0; x < 48; ++x)
            img->data[y * 48 + x] = real(0.2) + real(0.3) * x / 48 + real(0.4) * y / 48;

    auto ta = make_tensor({1, 2, 3});
    ta->data = {real(0.98), real(0.05), real(0.02), real(-0.04), real(1.01), real(-0.03)};
    auto tb = make_tensor({1, 2, 3});
    tb->data = {real(1.03), real(-0.03), real(-0.01), real(0.05), real(0.97), real(0.02)};

    // sample(sample(img, A), B) == sample(img, A*B) up to bilinear error
    auto two = grid_sample(grid_sample(img, affine_grid(ta, 48, 48)), affine_grid(tb, 48, 48));
    auto composed = make_tensor({1, 2, 3});
    // A*B in homogeneous form
    const auto& A = ta->data;
    const auto& B = tb->data;
    composed->data = {A[0] * B[0] + A[1] * B[3], A[0] * B[1] + A[1] * B[4],
                      A[0] * B[2] + A[1] * B[5] + A[2], A[3] * B[0] + A[4] * B[3],
                      A[3] * B[1] + A[4] * B[4], A[3] * B[2] + A[4] * B[5] + A[5]};
    auto one = grid_sample(img, affine_grid(composed, 48, 48));
    real max_diff = 0;
    for (int y = 8; y < 40; ++y) {
        for (int x = 8; x < 40; ++x) {
            max_diff = std::max(max_diff, std::abs(two->data[y * 48 + x] - one->data[y * 48 + x]));
        }
    }
    CHECK(max_diff < real(0.02));
}

TEST_CASE("fresh localization network predicts the identity") {
    RngStream rng(11);
    LocConfig cfg;
    cfg.in_size = 24;
    auto net = LocalizationNet::create(cfg, rng);
    auto x = random_batch(3, 3, 24, 24, rng);
    auto theta = net.forward(x);
    CHECK(theta->shape == std::vector<int>{3, 2, 3});
    for (int b = 0; b < 3; ++b) {
        CHECK(theta->data[b * 6 + 0] == 1);
        CHECK(theta->data[b * 6 + 1] == 0);
        CHECK(theta->data[b * 6 + 2] == 0);
        CHECK(theta->data[b * 6 + 3] == 0);
        CHECK(theta->data[b * 6 + 4] == 1);
        CHECK(theta->data[b * 6 + 5] == 0);
    }
}

TEST_CASE("localization is batch equivariant") {
    RngStream rng(13);
    LocConfig cfg;
    cfg.in_size = 16;
    auto net = LocalizationNet::create(cfg, rng);
    // give the zero-initialized final layer real weights for this probe
    for (auto& v : net.f2.w->data) v = rng.uniform(real(-0.1), real(0.1));

    auto x = random_batch(2, 3, 16, 16, rng);
    auto swapped = make_tensor({2, 3, 16, 16});
    const size_t img = 3 * 16 * 16;
    std::copy_n(x->data.begin(), img, swapped->data.begin() + img);
    std::copy_n(x->data.begin() + img, img, swapped->data.begin());

    auto t1 = net.forward(x);
    auto t2 = net.forward(swapped);
    for (int k = 0; k < 6; ++k) {
        CHECK(t1->data[k] == t2->data[6 + k]);
        CHECK(t1->data[6 + k] == t2->data[k]);
    }
}

TEST_CASE("fresh stn is an exact center crop") {
    RngStream rng(17);
    LocConfig cfg;
    cfg.in_size = 24;
    auto stn = Stn::create(cfg, 16, rng);
    auto x = random_batch(2, 3, 24, 24, rng);
    auto x_s = stn.forward(x);
    CHECK(x_s->shape == std::vector<int>{2, 3, 16, 16});
    auto expect = center_crop_nchw(x, 16, 16);
    CHECK(x_s->data == expect->data);
}

TEST_CASE("one training step moves localization weights") {
    RngStream rng(19);
    LocConfig cfg;
    cfg.in_size = 16;
    auto stn = Stn::create(cfg, 16, rng);

    auto x = random_batch(2, 3, 16, 16, rng);
    // target: the same content shifted by two pixels
    auto target = make_tensor({2, 3, 16, 16});
    for (int bc = 0; bc < 6; ++bc) {
        for (int y = 0; y < 16; ++y) {
            for (int xx = 0; xx < 16; ++xx) {
                target->data[(bc * 16 + y) * 16 + xx] =
                    xx >= 2 ? x->data[(bc * 16 + y) * 16 + xx - 2] : real(0);
            }
        }
    }
    NamedTensors params;
    stn.params("stn", params);
    auto loss = mse_loss(stn.forward(x), target);
    backward(loss);
    real grad_mag = 0;
    for (auto& [name, t] : params.items) {
        if (t->grad.empty()) continue;
        for (real g : t->grad) grad_mag += std::abs(g);
    }
    CHECK(grad_mag > 0);
}

TEST_CASE("stn rejects oversized crops and bad sizes") {
    RngStream rng(23);
    LocConfig cfg;
    cfg.in_size = 16;
    CHECK_THROWS_AS(Stn::create(cfg, 24, rng), std::invalid_argument);
    LocConfig bad;
    bad.in_size = 15;
    CHECK_THROWS_AS(LocalizationNet::create(bad, rng), std::invalid_argument);
}
