#include "core/gradcheck.h"

#include <algorithm>
#include <cmath>

#include "core/rng.h"

namespace canonify {

GradCheckResult grad_check(const std::function<TensorPtr()>& build,
                           const std::vector<TensorPtr>& params, real eps,
                           int max_coords_per_param, std::uint64_t seed, real min_analytic,
                           bool exclude_kinks) {
    // Analytic pass.
    TensorPtr loss = build();
    zero_all_grads(loss);
    for (const auto& p : params) {
        p->ensure_grad();
        p->zero_grad();
    }
    backward(loss);
    std::vector<std::vector<real>> analytic;
    analytic.reserve(params.size());
    for (const auto& p : params) analytic.push_back(p->grad);
    loss.reset();

    GradCheckResult result;
    for (size_t pi = 0; pi < params.size(); ++pi) {
        Tensor& p = *params[pi];
        const std::int64_t n = p.numel();
        std::vector<std::int64_t> eligible;
        for (std::int64_t i = 0; i < n; ++i) {
            if (std::abs(analytic[pi][static_cast<size_t>(i)]) >= min_analytic) {
                eligible.push_back(i);
            }
        }
        if (eligible.empty()) continue;
        std::vector<std::int64_t> coords;
        if (static_cast<int>(eligible.size()) <= max_coords_per_param) {
            coords = eligible;
        } else {
            RngStream rng(seed, 0x67726164, pi);
            rng.shuffle(eligible);
            coords.assign(eligible.begin(), eligible.begin() + max_coords_per_param);
        }
        auto analytic_at = [&](Tensor& param, std::int64_t ci) {
            TensorPtr l = build();
            zero_all_grads(l);
            for (const auto& q : params) {
                q->ensure_grad();
                q->zero_grad();
            }
            backward(l);
            return static_cast<double>(param.grad[static_cast<size_t>(ci)]);
        };
        for (std::int64_t ci : coords) {
            const real saved = p.data[ci];
            if (exclude_kinks) {
                // relu and max-pool make the loss piecewise smooth; when a
                // boundary lies inside the probe window the one-sided
                // gradients disagree by the slope jump, wherever it sits.
                p.data[ci] = saved + eps;
                const double g_plus = analytic_at(p, ci);
                p.data[ci] = saved - eps;
                const double g_minus = analytic_at(p, ci);
                p.data[ci] = saved;
                const double agree = std::max({std::abs(g_plus), std::abs(g_minus), 1e-6});
                if (std::abs(g_plus - g_minus) > 0.003 * agree) {
                    ++result.coords_skipped;
                    continue;
                }
            }
            p.data[ci] = saved + eps;
            const double f_plus = build()->item();
            p.data[ci] = saved - eps;
            const double f_minus = build()->item();
            p.data[ci] = saved;
            const double numeric = (f_plus - f_minus) / (2.0 * static_cast<double>(eps));
            ++result.coords_checked;
            const double a = analytic[pi][ci];
            const double denom = std::max({std::abs(a), std::abs(numeric), 1e-8});
            const double rel = std::abs(a - numeric) / denom;
            if (rel > result.max_rel_err) {
                result.max_rel_err = static_cast<real>(rel);
                result.worst = "param " + std::to_string(pi) + " coord " + std::to_string(ci) +
                               " analytic=" + std::to_string(a) +
                               " numeric=" + std::to_string(numeric);
            }
        }
    }
    return result;
}

}  // namespace canonify
