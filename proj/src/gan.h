#pragma once

#include <array>

#include "core/nn.h"

namespace canonify {

struct DiscConfig {
    int in_size = 64;
    std::array<int, 3> channels{16, 32, 64};
};

// Three conv blocks (conv -> relu -> batch norm, stride 2) and a linear head
// producing one real-vs-fake logit per sample.
struct Discriminator {
    DiscConfig cfg;
    Conv2d c1, c2, c3;
    BatchNorm2d bn1, bn2, bn3;
    Linear head;

    static Discriminator create(const DiscConfig& cfg, RngStream& rng);
    TensorPtr forward(const TensorPtr& x, bool train) const;
    void params(const std::string& prefix, NamedTensors& out) const;
    void buffers(const std::string& prefix, NamedTensors& out) const;
};

// bce(real, 1) + bce(fake, 0), both terms unweighted. Callers sever the
// generator graph on the fake side (detach).
TensorPtr d_loss(const TensorPtr& real_logits, const TensorPtr& fake_logits);

// mse(y_hat, y) + lambda * adversarial term. The default non-saturating form
// maximizes log D(G(x)); saturating = true uses the literal log(1 - D(G(x))).
// lambda = 0 returns the mse term alone.
TensorPtr g_loss(const TensorPtr& y, const TensorPtr& y_hat, const TensorPtr& fake_logits,
                 real lambda, bool saturating = false);

// Fraction of correct real/fake decisions at threshold logit 0.
real d_accuracy(const TensorPtr& real_logits, const TensorPtr& fake_logits);

}  // namespace canonify
