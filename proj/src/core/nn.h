#pragma once

#include <string>
#include <utility>
#include <vector>

#include "core/ops.h"
#include "core/rng.h"
#include "core/tensor.h"

namespace canonify {

// Ordered name -> tensor view used by the optimizer and the checkpoint code.
struct NamedTensors {
    std::vector<std::pair<std::string, TensorPtr>> items;

    void add(const std::string& name, const TensorPtr& t) { items.emplace_back(name, t); }
    TensorPtr find(const std::string& name) const {
        for (const auto& [n, t] : items) {
            if (n == name) return t;
        }
        return nullptr;
    }
};

// He-uniform initialization, bound = sqrt(6 / fan_in).
void init_he_uniform(Tensor& t, int fan_in, RngStream& rng);

struct Conv2d {
    TensorPtr w, b;
    int stride = 1;
    int pad = 1;

    static Conv2d create(int cin, int cout, int k, int stride, int pad, RngStream& rng);
    static Conv2d zeros(int cin, int cout, int k, int stride, int pad);
    TensorPtr operator()(const TensorPtr& x) const { return conv2d(x, w, b, stride, pad); }
    void params(const std::string& prefix, NamedTensors& out) const {
        out.add(prefix + ".w", w);
        out.add(prefix + ".b", b);
    }
};

struct Linear {
    TensorPtr w, b;

    static Linear create(int in, int out, RngStream& rng);
    static Linear zeros(int in, int out);
    TensorPtr operator()(const TensorPtr& x) const { return linear(x, w, b); }
    void params(const std::string& prefix, NamedTensors& out) const {
        out.add(prefix + ".w", w);
        out.add(prefix + ".b", b);
    }
};

struct BatchNorm2d {
    TensorPtr gamma, beta, running_mean, running_var;
    real momentum = real(0.1);
    real eps = real(1e-5);

    static BatchNorm2d create(int channels);
    TensorPtr forward(const TensorPtr& x, bool train) const {
        return batch_norm(x, gamma, beta, running_mean, running_var, train, momentum, eps);
    }
    void params(const std::string& prefix, NamedTensors& out) const {
        out.add(prefix + ".gamma", gamma);
        out.add(prefix + ".beta", beta);
    }
    void buffers(const std::string& prefix, NamedTensors& out) const {
        out.add(prefix + ".running_mean", running_mean);
        out.add(prefix + ".running_var", running_var);
    }
};

}  // namespace canonify
