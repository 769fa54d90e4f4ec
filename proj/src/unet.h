#pragma once

#include <vector>

#include "core/nn.h"

namespace canonify {

struct UNetConfig {
    int depth = 3;
    int base_channels = 16;
    int in_channels = 6;
    int out_channels = 3;
};

// Encoder/decoder with skip concatenation: per level two 3x3 conv-relu, maxpool
// down, nearest-neighbor up. The final 1x1 head has no activation and starts
// at zero, so a fresh network contributes a zero residual.
struct UNet {
    UNetConfig cfg;
    std::vector<Conv2d> enc_a, enc_b;  // level 0 = full resolution
    Conv2d mid_a, mid_b;
    std::vector<Conv2d> dec_a, dec_b;  // indexed like the encoder levels
    Conv2d head;

    static UNet create(const UNetConfig& cfg, RngStream& rng, bool zero_head = true);

    // ablate_skip_level >= 0 zeroes that level's skip tensor before the
    // decoder concatenation (sensitivity probes only).
    TensorPtr forward(const TensorPtr& x, int ablate_skip_level = -1) const;

    // y_hat = x_s + residual(concat(x_s, channel std maps)). No clamping;
    // export paths clamp after denormalization.
    TensorPtr correct(const TensorPtr& x_s) const;

    void params(const std::string& prefix, NamedTensors& out) const;
};

}  // namespace canonify
