#pragma once

#include <array>

#include "core/nn.h"

namespace canonify {

struct LocConfig {
    int in_size = 72;                        // D; must be divisible by 8
    std::array<int, 3> channels{8, 16, 32};  // conv-relu-maxpool blocks
    int hidden = 32;
};

// Predicts a 2x3 affine per sample. The final layer starts at zero weights
// with an identity-transform bias, so a fresh network is an exact no-op.
struct LocalizationNet {
    LocConfig cfg;
    Conv2d c1, c2, c3;
    Linear f1, f2;

    static LocalizationNet create(const LocConfig& cfg, RngStream& rng);
    TensorPtr forward(const TensorPtr& x) const;  // B x 2 x 3
    void params(const std::string& prefix, NamedTensors& out) const;
};

// Localization -> grid -> bilinear sampler -> center crop to crop_size.
struct Stn {
    LocalizationNet loc;
    int crop_size = 64;

    static Stn create(const LocConfig& cfg, int crop_size, RngStream& rng);
    TensorPtr forward(const TensorPtr& x) const;
    void params(const std::string& prefix, NamedTensors& out) const {
        loc.params(prefix + ".loc", out);
    }
};

}  // namespace canonify
