#include "stn.h"

#include <stdexcept>

namespace canonify {

LocalizationNet LocalizationNet::create(const LocConfig& cfg, RngStream& rng) {
    if (cfg.in_size % 8 != 0) {
        throw std::invalid_argument("localization: input size must be divisible by 8");
    }
    LocalizationNet net;
    net.cfg = cfg;
    net.c1 = Conv2d::create(3, cfg.channels[0], 3, 1, 1, rng);
    net.c2 = Conv2d::create(cfg.channels[0], cfg.channels[1], 3, 1, 1, rng);
    net.c3 = Conv2d::create(cfg.channels[1], cfg.channels[2], 3, 1, 1, rng);
    const int spatial = cfg.in_size / 8;
    net.f1 = Linear::create(cfg.channels[2] * spatial * spatial, cfg.hidden, rng);
    net.f2 = Linear::zeros(cfg.hidden, 6);
    net.f2.b->data = {1, 0, 0, 0, 1, 0};  // identity transform
    return net;
}

TensorPtr LocalizationNet::forward(const TensorPtr& x) const {
    if (x->ndim() != 4 || x->dim(1) != 3 || x->dim(2) != cfg.in_size || x->dim(3) != cfg.in_size) {
        throw std::invalid_argument("localization: expected Bx3x" + std::to_string(cfg.in_size) +
                                    "x" + std::to_string(cfg.in_size) + ", got " +
                                    shape_str(x->shape));
    }
    auto h = maxpool2x2(relu(c1(x)));
    h = maxpool2x2(relu(c2(h)));
    h = maxpool2x2(relu(c3(h)));
    const int spatial = cfg.in_size / 8;
    h = reshape(h, {x->dim(0), cfg.channels[2] * spatial * spatial});
    h = relu(f1(h));
    h = f2(h);
    return reshape(h, {x->dim(0), 2, 3});
}

void LocalizationNet::params(const std::string& prefix, NamedTensors& out) const {
    c1.params(prefix + ".c1", out);
    c2.params(prefix + ".c2", out);
    c3.params(prefix + ".c3", out);
    f1.params(prefix + ".f1", out);
    f2.params(prefix + ".f2", out);
}

Stn Stn::create(const LocConfig& cfg, int crop_size, RngStream& rng) {
    if (crop_size > cfg.in_size) {
        throw std::invalid_argument("stn: crop size exceeds input size");
    }
    Stn stn;
    stn.loc = LocalizationNet::create(cfg, rng);
    stn.crop_size = crop_size;
    return stn;
}

TensorPtr Stn::forward(const TensorPtr& x) const {
    auto theta = loc.forward(x);
    auto grid = affine_grid(theta, x->dim(2), x->dim(3));
    auto warped = grid_sample(x, grid);
    return center_crop_nchw(warped, crop_size, crop_size);
}

}  // namespace canonify
