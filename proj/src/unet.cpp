#include "unet.h"

#include <stdexcept>

namespace canonify {

UNet UNet::create(const UNetConfig& cfg, RngStream& rng, bool zero_head) {
    if (cfg.depth < 1) throw std::invalid_argument("unet: depth must be >= 1");
    UNet net;
    net.cfg = cfg;
    int ch_in = cfg.in_channels;
    for (int level = 0; level < cfg.depth; ++level) {
        const int ch_out = cfg.base_channels << level;
        net.enc_a.push_back(Conv2d::create(ch_in, ch_out, 3, 1, 1, rng));
        net.enc_b.push_back(Conv2d::create(ch_out, ch_out, 3, 1, 1, rng));
        ch_in = ch_out;
    }
    const int ch_mid = cfg.base_channels << cfg.depth;
    net.mid_a = Conv2d::create(ch_in, ch_mid, 3, 1, 1, rng);
    net.mid_b = Conv2d::create(ch_mid, ch_mid, 3, 1, 1, rng);
    net.dec_a.resize(static_cast<size_t>(cfg.depth));
    net.dec_b.resize(static_cast<size_t>(cfg.depth));
    for (int level = cfg.depth - 1; level >= 0; --level) {
        const int ch_skip = cfg.base_channels << level;
        const int ch_up = cfg.base_channels << (level + 1);
        net.dec_a[static_cast<size_t>(level)] =
            Conv2d::create(ch_up + ch_skip, ch_skip, 3, 1, 1, rng);
        net.dec_b[static_cast<size_t>(level)] = Conv2d::create(ch_skip, ch_skip, 3, 1, 1, rng);
    }
    if (zero_head) {
        net.head = Conv2d::zeros(cfg.base_channels, cfg.out_channels, 1, 1, 0);
    } else {
        net.head = Conv2d::create(cfg.base_channels, cfg.out_channels, 1, 1, 0, rng);
    }
    return net;
}

TensorPtr UNet::forward(const TensorPtr& x, int ablate_skip_level) const {
    if (x->ndim() != 4 || x->dim(1) != cfg.in_channels) {
        throw std::invalid_argument("unet: expected " + std::to_string(cfg.in_channels) +
                                    " input channels, got " + shape_str(x->shape));
    }
    const int div = 1 << cfg.depth;
    if (x->dim(2) % div != 0 || x->dim(3) % div != 0) {
        throw std::invalid_argument("unet: spatial size " + shape_str(x->shape) +
                                    " not divisible by " + std::to_string(div));
    }

    std::vector<TensorPtr> skips;
    TensorPtr h = x;
    for (int level = 0; level < cfg.depth; ++level) {
        h = relu(enc_a[static_cast<size_t>(level)](h));
        h = relu(enc_b[static_cast<size_t>(level)](h));
        skips.push_back(h);
        h = maxpool2x2(h);
    }
    h = relu(mid_a(h));
    h = relu(mid_b(h));
    for (int level = cfg.depth - 1; level >= 0; --level) {
        h = upsample2x(h);
        TensorPtr skip = skips[static_cast<size_t>(level)];
        if (level == ablate_skip_level) skip = scale(skip, real(0));
        h = concat_channels(h, skip);
        h = relu(dec_a[static_cast<size_t>(level)](h));
        h = relu(dec_b[static_cast<size_t>(level)](h));
    }
    return head(h);
}

TensorPtr UNet::correct(const TensorPtr& x_s) const {
    auto x6 = concat_channels(x_s, channel_std_maps(x_s));
    return add(x_s, forward(x6));
}

void UNet::params(const std::string& prefix, NamedTensors& out) const {
    for (int level = 0; level < cfg.depth; ++level) {
        enc_a[static_cast<size_t>(level)].params(prefix + ".enc" + std::to_string(level) + "a",
                                                 out);
        enc_b[static_cast<size_t>(level)].params(prefix + ".enc" + std::to_string(level) + "b",
                                                 out);
    }
    mid_a.params(prefix + ".mid_a", out);
    mid_b.params(prefix + ".mid_b", out);
    for (int level = 0; level < cfg.depth; ++level) {
        dec_a[static_cast<size_t>(level)].params(prefix + ".dec" + std::to_string(level) + "a",
                                                 out);
        dec_b[static_cast<size_t>(level)].params(prefix + ".dec" + std::to_string(level) + "b",
                                                 out);
    }
    head.params(prefix + ".head", out);
}

}  // namespace canonify
