#include "core/nn.h"

#include <cmath>

namespace canonify {

void init_he_uniform(Tensor& t, int fan_in, RngStream& rng) {
    const real bound = std::sqrt(real(6) / static_cast<real>(fan_in));
    for (auto& v : t.data) v = rng.uniform(-bound, bound);
}

Conv2d Conv2d::create(int cin, int cout, int k, int stride, int pad, RngStream& rng) {
    Conv2d c;
    c.w = make_tensor({cout, cin, k, k}, true);
    c.b = make_tensor({cout}, true);
    c.stride = stride;
    c.pad = pad;
    init_he_uniform(*c.w, cin * k * k, rng);
    return c;
}

Conv2d Conv2d::zeros(int cin, int cout, int k, int stride, int pad) {
    Conv2d c;
    c.w = make_tensor({cout, cin, k, k}, true);
    c.b = make_tensor({cout}, true);
    c.stride = stride;
    c.pad = pad;
    return c;
}

Linear Linear::create(int in, int out, RngStream& rng) {
    Linear l;
    l.w = make_tensor({out, in}, true);
    l.b = make_tensor({out}, true);
    init_he_uniform(*l.w, in, rng);
    return l;
}

Linear Linear::zeros(int in, int out) {
    Linear l;
    l.w = make_tensor({out, in}, true);
    l.b = make_tensor({out}, true);
    return l;
}

BatchNorm2d BatchNorm2d::create(int channels) {
    BatchNorm2d bn;
    bn.gamma = make_tensor({channels}, true);
    bn.beta = make_tensor({channels}, true);
    bn.running_mean = make_tensor({channels});
    bn.running_var = make_tensor({channels});
    std::fill(bn.gamma->data.begin(), bn.gamma->data.end(), real(1));
    std::fill(bn.running_var->data.begin(), bn.running_var->data.end(), real(1));
    return bn;
}

}  // namespace canonify
