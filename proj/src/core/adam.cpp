#include "core/adam.h"

#include <cmath>

namespace canonify {

Adam::Adam(std::vector<TensorPtr> params, real lr, real beta1, real beta2, real eps)
    : params_(std::move(params)), lr_(lr), beta1_(beta1), beta2_(beta2), eps_(eps) {
    m_.reserve(params_.size());
    v_.reserve(params_.size());
    for (const auto& p : params_) {
        m_.emplace_back(p->data.size(), real(0));
        v_.emplace_back(p->data.size(), real(0));
    }
}

void Adam::zero_grad() {
    for (auto& p : params_) {
        p->ensure_grad();
        p->zero_grad();
    }
}

void Adam::step() {
    ++t_;
    const real bc1 = real(1) - std::pow(beta1_, static_cast<real>(t_));
    const real bc2 = real(1) - std::pow(beta2_, static_cast<real>(t_));
    for (size_t i = 0; i < params_.size(); ++i) {
        Tensor& p = *params_[i];
        if (p.grad.empty()) continue;
        real* m = m_[i].data();
        real* v = v_[i].data();
        const real* g = p.grad.data();
        real* x = p.data.data();
        const size_t n = p.data.size();
        for (size_t k = 0; k < n; ++k) {
            m[k] = beta1_ * m[k] + (real(1) - beta1_) * g[k];
            v[k] = beta2_ * v[k] + (real(1) - beta2_) * g[k] * g[k];
            const real mhat = m[k] / bc1;
            const real vhat = v[k] / bc2;
            x[k] -= lr_ * mhat / (std::sqrt(vhat) + eps_);
        }
    }
}

}  // namespace canonify
