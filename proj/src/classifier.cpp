#include "classifier.h"

#include <stdexcept>

namespace canonify {

Classifier Classifier::create(const ClassifierConfig& cfg, RngStream& rng) {
    if (cfg.in_size % 8 != 0) {
        throw std::invalid_argument("classifier: input size must be divisible by 8");
    }
    if (cfg.num_classes < 2) {
        throw std::invalid_argument("classifier: need at least 2 classes");
    }
    Classifier clf;
    clf.cfg = cfg;
    clf.c1 = Conv2d::create(3, cfg.channels[0], 3, 1, 1, rng);
    clf.c2 = Conv2d::create(cfg.channels[0], cfg.channels[1], 3, 1, 1, rng);
    clf.c3 = Conv2d::create(cfg.channels[1], cfg.channels[2], 3, 1, 1, rng);
    const int spatial = cfg.in_size / 8;
    clf.f1 = Linear::create(cfg.channels[2] * spatial * spatial, cfg.hidden, rng);
    clf.f2 = Linear::create(cfg.hidden, cfg.num_classes, rng);
    return clf;
}

TensorPtr Classifier::forward(const TensorPtr& x) const {
    if (x->ndim() != 4 || x->dim(1) != 3 || x->dim(2) != cfg.in_size ||
        x->dim(3) != cfg.in_size) {
        throw std::invalid_argument("classifier: expected Bx3x" + std::to_string(cfg.in_size) +
                                    "x" + std::to_string(cfg.in_size) + ", got " +
                                    shape_str(x->shape));
    }
    auto h = maxpool2x2(relu(c1(x)));
    h = maxpool2x2(relu(c2(h)));
    h = maxpool2x2(relu(c3(h)));
    const int spatial = cfg.in_size / 8;
    h = reshape(h, {x->dim(0), cfg.channels[2] * spatial * spatial});
    h = relu(f1(h));
    return f2(h);
}

void Classifier::params(const std::string& prefix, NamedTensors& out) const {
    c1.params(prefix + ".c1", out);
    c2.params(prefix + ".c2", out);
    c3.params(prefix + ".c3", out);
    f1.params(prefix + ".f1", out);
    f2.params(prefix + ".f2", out);
}

}  // namespace canonify
