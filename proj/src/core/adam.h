#pragma once

#include <cstdint>
#include <vector>

#include "core/tensor.h"

namespace canonify {

// Standard Adam with bias correction, updating parameters in place.
class Adam {
public:
    Adam(std::vector<TensorPtr> params, real lr, real beta1 = real(0.9), real beta2 = real(0.999),
         real eps = real(1e-8));

    void zero_grad();
    void step();

    std::int64_t step_count() const { return t_; }
    void set_step_count(std::int64_t t) { t_ = t; }
    const std::vector<TensorPtr>& params() const { return params_; }
    std::vector<real>& m(size_t i) { return m_[i]; }
    std::vector<real>& v(size_t i) { return v_[i]; }
    real lr() const { return lr_; }
    void set_lr(real lr) { lr_ = lr; }

private:
    std::vector<TensorPtr> params_;
    std::vector<std::vector<real>> m_, v_;
    std::int64_t t_ = 0;
    real lr_, beta1_, beta2_, eps_;
};

}  // namespace canonify
