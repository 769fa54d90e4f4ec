#include <doctest.h>

#include <cmath>

#include "core/adam.h"
#include "core/rng.h"
#include "gan.h"
#include "stn.h"
#include "unet.h"

using namespace canonify;

namespace {

TensorPtr random_batch(int b, int c, int h, int w, RngStream& rng, real lo = -1, real hi = 1) {
    auto t = make_tensor({b, c, h, w});
    for (auto& v : t->data) v = rng.uniform(lo, hi);
    return t;
}

std::vector<TensorPtr> param_list(const NamedTensors& named) {
    std::vector<TensorPtr> out;
    for (auto& [n, t] : named.items) out.push_back(t);
    return out;
}

}  // namespace

TEST_CASE("discriminator shape and batch equivariance") {
    RngStream rng(41);
    DiscConfig cfg;
    cfg.in_size = 16;
    auto d = Discriminator::create(cfg, rng);
    auto x = random_batch(5, 3, 16, 16, rng);
    auto logits = d.forward(x, /*train=*/false);
    CHECK(logits->shape == std::vector<int>{5, 1});

    auto swapped = make_tensor({5, 3, 16, 16});
    swapped->data = x->data;
    const size_t img = 3 * 16 * 16;
    std::copy_n(x->data.begin(), img, swapped->data.begin() + 2 * img);
    std::copy_n(x->data.begin() + 2 * img, img, swapped->data.begin());
    auto logits2 = d.forward(swapped, false);
    CHECK(logits->data[0] == logits2->data[2]);
    CHECK(logits->data[2] == logits2->data[0]);
    CHECK(logits->data[1] == logits2->data[1]);
}

TEST_CASE("d_loss values") {
    auto perfect_real = tensor_of({2, 1}, {30, 30});
    auto perfect_fake = tensor_of({2, 1}, {-30, -30});
    CHECK(d_loss(perfect_real, perfect_fake)->data[0] < real(1e-6));

    auto zeros_r = make_tensor({2, 1});
    auto zeros_f = make_tensor({2, 1});
    CHECK(d_loss(zeros_r, zeros_f)->data[0] == doctest::Approx(2 * std::log(2.0)));
}

TEST_CASE("d_loss gradient pushes fake logits down") {
    auto fake = tensor_of({3, 1}, {real(0.5), real(-1), real(2)}, true);
    auto real_logits = tensor_of({3, 1}, {1, 1, 1});
    backward(d_loss(real_logits, fake));
    for (real g : fake->grad) CHECK(g > 0);  // increasing a fake logit raises the loss
}

TEST_CASE("g_loss forms") {
    RngStream rng(42);
    auto y = random_batch(2, 3, 8, 8, rng);
    auto y_hat = random_batch(2, 3, 8, 8, rng);
    auto fake = tensor_of({2, 1}, {real(0.3), real(-0.7)});

    // lambda = 0 reduces exactly to mse
    auto l0 = g_loss(y, y_hat, fake, 0);
    auto m = mse_loss(y_hat, y);
    CHECK(l0->data[0] == m->data[0]);

    // default weighting adds 0.25 * bce(fake, 1)
    auto l = g_loss(y, y_hat, fake, real(0.25));
    auto ones = tensor_of({2, 1}, {1, 1});
    const real expect = m->data[0] + real(0.25) * bce_with_logits(fake, ones)->data[0];
    CHECK(l->data[0] == doctest::Approx(expect));

    // perfect reconstruction and a fooled discriminator drive the loss to 0
    auto fooled = tensor_of({2, 1}, {40, 40});
    auto lp = g_loss(y, y, fooled, real(0.25));
    CHECK(lp->data[0] < real(1e-6));

    // saturating form is the literal log(1 - D(G(x))) term
    auto ls = g_loss(y, y_hat, fake, real(0.25), /*saturating=*/true);
    auto zeros = make_tensor({2, 1});
    const real expect_s = m->data[0] - real(0.25) * bce_with_logits(fake, zeros)->data[0];
    CHECK(ls->data[0] == doctest::Approx(expect_s));
}

TEST_CASE("discriminator-only backward leaves generator grads at zero") {
    RngStream rng(43);
    LocConfig loc_cfg;
    loc_cfg.in_size = 16;
    auto stn = Stn::create(loc_cfg, 16, rng);
    UNetConfig ucfg;
    ucfg.depth = 2;
    ucfg.base_channels = 4;
    auto unet = UNet::create(ucfg, rng, false);
    DiscConfig dc;
    dc.in_size = 16;
    auto disc = Discriminator::create(dc, rng);

    auto x = random_batch(2, 3, 16, 16, rng, 0, 1);
    auto y = random_batch(2, 3, 16, 16, rng, 0, 1);
    auto y_hat = unet.correct(stn.forward(x));

    NamedTensors g_params;
    stn.params("stn", g_params);
    unet.params("unet", g_params);
    for (auto& [n, t] : g_params.items) {
        t->ensure_grad();
        t->zero_grad();
    }

    auto loss = d_loss(disc.forward(y, true), disc.forward(detach(y_hat), true));
    backward(loss);

    for (auto& [n, t] : g_params.items) {
        for (real g : t->grad) CHECK(g == 0);
    }

    // discriminator received gradient
    NamedTensors d_params;
    disc.params("d", d_params);
    real mag = 0;
    for (auto& [n, t] : d_params.items) {
        for (real g : t->grad) mag += std::abs(g);
    }
    CHECK(mag > 0);
}

TEST_CASE("discriminator separates trivially separable data") {
    RngStream rng(44);
    DiscConfig cfg;
    cfg.in_size = 16;
    auto d = Discriminator::create(cfg, rng);
    NamedTensors named;
    d.params("d", named);
    Adam opt(param_list(named), real(1e-3), real(0.5), real(0.999));

    // real: dark images, fake: bright images, slight noise
    auto make_data = [&](real base) {
        auto t = make_tensor({8, 3, 16, 16});
        for (auto& v : t->data) v = base + rng.uniform(real(-0.05), real(0.05));
        return t;
    };
    for (int step = 0; step < 200; ++step) {
        auto real_b = make_data(real(-0.5));
        auto fake_b = make_data(real(0.5));
        opt.zero_grad();
        backward(d_loss(d.forward(real_b, true), d.forward(fake_b, true)));
        opt.step();
    }
    // accuracy as logged during training: train-mode forwards (batch-norm uses
    // batch statistics there; constant probe images carry no eval-mode signal)
    auto real_b = make_data(real(-0.5));
    auto fake_b = make_data(real(0.5));
    const real acc = d_accuracy(d.forward(real_b, true), d.forward(fake_b, true));
    CHECK(acc > real(0.95));

    // parameter shapes and count unchanged by training
    NamedTensors after;
    d.params("d", after);
    REQUIRE(after.items.size() == named.items.size());
    for (size_t i = 0; i < after.items.size(); ++i) {
        CHECK(after.items[i].second->shape == named.items[i].second->shape);
    }
}
