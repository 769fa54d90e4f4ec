#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "core/tensor.h"

namespace canonify {

struct GradCheckResult {
    real max_rel_err = 0;
    std::string worst;  // "param#/coord analytic=... numeric=..."
    int coords_checked = 0;
    int coords_skipped = 0;  // kink-contaminated coordinates (exclude_kinks)
};

// Compares reverse-mode gradients against central finite differences on a
// sampled subset of coordinates. build must deterministically reconstruct the
// scalar loss from the current parameter values. Relative error uses
// |a - n| / max(|a|, |n|, 1e-8).
//
// min_analytic restricts sampling to coordinates whose analytic gradient
// magnitude reaches the floor; in f32 the central difference of a rounded
// loss cannot resolve gradients much below the loss's own quantization, so
// near-zero coordinates carry no verification signal. Parameters with no
// eligible coordinate are skipped.
// exclude_kinks re-evaluates each coordinate at eps/2: where a relu or pool
// boundary falls inside the probe window, the two slopes disagree and the
// coordinate is skipped rather than falsely flagged.
GradCheckResult grad_check(const std::function<TensorPtr()>& build,
                           const std::vector<TensorPtr>& params, real eps,
                           int max_coords_per_param = 8, std::uint64_t seed = 0,
                           real min_analytic = 0, bool exclude_kinks = false);

}  // namespace canonify
