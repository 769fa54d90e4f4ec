#pragma once

namespace canonify {

// Scalar type of every tensor and image buffer. The double build exists for
// tight gradient-check tolerances; the shipped library is single precision.
#ifdef CANONIFY_REAL_DOUBLE
using real = double;
#else
using real = float;
#endif

inline constexpr bool kRealIsDouble = sizeof(real) == sizeof(double);

}  // namespace canonify
