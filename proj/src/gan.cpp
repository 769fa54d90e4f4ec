#include "gan.h"

#include <stdexcept>

namespace canonify {

Discriminator Discriminator::create(const DiscConfig& cfg, RngStream& rng) {
    if (cfg.in_size % 8 != 0) {
        throw std::invalid_argument("discriminator: input size must be divisible by 8");
    }
    Discriminator d;
    d.cfg = cfg;
    d.c1 = Conv2d::create(3, cfg.channels[0], 3, 2, 1, rng);
    d.c2 = Conv2d::create(cfg.channels[0], cfg.channels[1], 3, 2, 1, rng);
    d.c3 = Conv2d::create(cfg.channels[1], cfg.channels[2], 3, 2, 1, rng);
    d.bn1 = BatchNorm2d::create(cfg.channels[0]);
    d.bn2 = BatchNorm2d::create(cfg.channels[1]);
    d.bn3 = BatchNorm2d::create(cfg.channels[2]);
    const int spatial = cfg.in_size / 8;
    d.head = Linear::create(cfg.channels[2] * spatial * spatial, 1, rng);
    return d;
}

TensorPtr Discriminator::forward(const TensorPtr& x, bool train) const {
    if (x->ndim() != 4 || x->dim(1) != 3 || x->dim(2) != cfg.in_size ||
        x->dim(3) != cfg.in_size) {
        throw std::invalid_argument("discriminator: expected Bx3x" +
                                    std::to_string(cfg.in_size) + "x" +
                                    std::to_string(cfg.in_size) + ", got " +
                                    shape_str(x->shape));
    }
    auto h = bn1.forward(relu(c1(x)), train);
    h = bn2.forward(relu(c2(h)), train);
    h = bn3.forward(relu(c3(h)), train);
    const int spatial = cfg.in_size / 8;
    h = reshape(h, {x->dim(0), cfg.channels[2] * spatial * spatial});
    return head(h);
}

void Discriminator::params(const std::string& prefix, NamedTensors& out) const {
    c1.params(prefix + ".c1", out);
    bn1.params(prefix + ".bn1", out);
    c2.params(prefix + ".c2", out);
    bn2.params(prefix + ".bn2", out);
    c3.params(prefix + ".c3", out);
    bn3.params(prefix + ".bn3", out);
    head.params(prefix + ".head", out);
}

void Discriminator::buffers(const std::string& prefix, NamedTensors& out) const {
    bn1.buffers(prefix + ".bn1", out);
    bn2.buffers(prefix + ".bn2", out);
    bn3.buffers(prefix + ".bn3", out);
}

namespace {

TensorPtr const_labels(const TensorPtr& like, real value) {
    auto t = make_tensor(like->shape);
    std::fill(t->data.begin(), t->data.end(), value);
    return t;
}

}  // namespace

TensorPtr d_loss(const TensorPtr& real_logits, const TensorPtr& fake_logits) {
    return add(bce_with_logits(real_logits, const_labels(real_logits, 1)),
               bce_with_logits(fake_logits, const_labels(fake_logits, 0)));
}

TensorPtr g_loss(const TensorPtr& y, const TensorPtr& y_hat, const TensorPtr& fake_logits,
                 real lambda, bool saturating) {
    auto rec = mse_loss(y_hat, y);
    if (lambda == 0) return rec;
    TensorPtr adv;
    if (saturating) {
        // minimize log(1 - D(G(x))): the negative of bce against the fake label
        adv = scale(bce_with_logits(fake_logits, const_labels(fake_logits, 0)), real(-1));
    } else {
        adv = bce_with_logits(fake_logits, const_labels(fake_logits, 1));
    }
    return add(rec, scale(adv, lambda));
}

real d_accuracy(const TensorPtr& real_logits, const TensorPtr& fake_logits) {
    std::int64_t correct = 0;
    for (real v : real_logits->data) correct += v > 0 ? 1 : 0;
    for (real v : fake_logits->data) correct += v < 0 ? 1 : 0;
    return static_cast<real>(correct) /
           static_cast<real>(real_logits->numel() + fake_logits->numel());
}

}  // namespace canonify
