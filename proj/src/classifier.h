#pragma once

#include <array>

#include "core/nn.h"

namespace canonify {

struct ClassifierConfig {
    int in_size = 64;
    std::array<int, 3> channels{16, 32, 64};
    int hidden = 64;
    int num_classes = 8;
};

// Three conv-relu-maxpool blocks and a two-layer head. Trained on canonical
// images only; deliberately unaugmented.
struct Classifier {
    ClassifierConfig cfg;
    Conv2d c1, c2, c3;
    Linear f1, f2;

    static Classifier create(const ClassifierConfig& cfg, RngStream& rng);
    TensorPtr forward(const TensorPtr& x) const;  // B x num_classes logits
    void params(const std::string& prefix, NamedTensors& out) const;
};

}  // namespace canonify
