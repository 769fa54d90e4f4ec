#pragma once

#include "core/real.h"

namespace canonify {

// RGB <-> HSV on [0, 1] components. Hue is a fraction of the full circle.
// Gray inputs (r == g == b) map to s = 0, h = 0 and convert back exactly.
void rgb_to_hsv(real r, real g, real b, real& h, real& s, real& v);
void hsv_to_rgb(real h, real s, real v, real& r, real& g, real& b);

}  // namespace canonify
