#include "image/color.h"

#include <algorithm>
#include <cmath>

namespace canonify {

void rgb_to_hsv(real r, real g, real b, real& h, real& s, real& v) {
    const real mx = std::max({r, g, b});
    const real mn = std::min({r, g, b});
    const real delta = mx - mn;
    v = mx;
    s = mx > 0 ? delta / mx : real(0);
    if (delta == 0) {
        h = 0;
        return;
    }
    real hue;
    if (mx == r) {
        hue = (g - b) / delta;
        if (hue < 0) hue += 6;
    } else if (mx == g) {
        hue = (b - r) / delta + 2;
    } else {
        hue = (r - g) / delta + 4;
    }
    h = hue / 6;
    if (h >= 1) h -= 1;
}

void hsv_to_rgb(real h, real s, real v, real& r, real& g, real& b) {
    if (s == 0) {
        r = g = b = v;
        return;
    }
    real h6 = h * 6;
    if (h6 >= 6) h6 -= 6;
    const int i = static_cast<int>(h6);
    const real f = h6 - i;
    const real p = v * (1 - s);
    const real q = v * (1 - s * f);
    const real t = v * (1 - s * (1 - f));
    switch (i) {
        case 0: r = v, g = t, b = p; break;
        case 1: r = q, g = v, b = p; break;
        case 2: r = p, g = v, b = t; break;
        case 3: r = p, g = q, b = v; break;
        case 4: r = t, g = p, b = v; break;
        default: r = v, g = p, b = q; break;
    }
}

}  // namespace canonify
