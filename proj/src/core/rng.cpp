#include "core/rng.h"

#include <cmath>

namespace canonify {

real RngStream::normal() {
    if (has_cached_) {
        has_cached_ = false;
        return cached_;
    }
    // u1 in (0, 1] keeps the log finite.
    const real u1 = real(1) - uniform();
    const real u2 = uniform();
    const real r = std::sqrt(real(-2) * std::log(u1));
    const real a = real(2) * real(3.14159265358979323846) * u2;
    cached_ = r * std::sin(a);
    has_cached_ = true;
    return r * std::cos(a);
}

}  // namespace canonify
