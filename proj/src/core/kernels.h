#pragma once

#include <cmath>
#include <cstdint>

#include "core/real.h"

namespace canonify {

// Test hook: flips the sign of the sampler's coordinate gradient so the
// verification suite can prove it detects an injected bug.
namespace testing {
extern bool bilinear_coord_grad_sign_flip;
}

// Normalized coordinates use the pixel-center convention: -1 maps to the
// center of the first pixel, +1 to the center of the last one,
//   p = (xn + 1) / 2 * (size - 1).
// Positions within 1e-4 px of a pixel center snap to it, which keeps
// identity grids exact despite f32 rounding of the normalized values.
inline double unnormalize_coord(real xn, int size) {
    const double p = (static_cast<double>(xn) + 1.0) * 0.5 * static_cast<double>(size - 1);
    const double r = std::nearbyint(p);
    return std::abs(p - r) <= 1e-4 ? r : p;
}

inline real normalize_coord(double p, int size) {
    if (size <= 1) return real(0);
    return static_cast<real>(2.0 * p / static_cast<double>(size - 1) - 1.0);
}

// y = x conv w + b, NCHW, square kernel.
void conv2d_forward(const real* x, const real* w, const real* b, real* y, int B, int Cin, int H,
                    int W, int Cout, int K, int stride, int pad);
void conv2d_backward_input(const real* w, const real* dy, real* dx, int B, int Cin, int H, int W,
                           int Cout, int K, int stride, int pad);
void conv2d_backward_weight(const real* x, const real* dy, real* dw, real* db, int B, int Cin,
                            int H, int W, int Cout, int K, int stride, int pad);

inline int conv_out_dim(int in, int k, int stride, int pad) {
    return (in + 2 * pad - k) / stride + 1;
}

// 2x2 max pooling, stride 2; even input dims required. idx stores the winning
// corner (0..3) per output element; ties break on scan order.
void maxpool2x2_forward(const real* x, real* y, std::uint8_t* idx, int planes, int H, int W);
void maxpool2x2_backward(const real* dy, const std::uint8_t* idx, real* dx, int planes, int H,
                         int W);

// Nearest-neighbor 2x upsampling; backward sums each 2x2 block.
void upsample2x_forward(const real* x, real* y, int planes, int H, int W);
void upsample2x_backward(const real* dy, real* dx, int planes, int H, int W);

// Bilinear sampling with zero padding: out-of-range corner reads contribute 0.
// grid is B x Ho x Wo x 2 normalized (x, y) pairs.
void grid_sample_forward(const real* x, const real* grid, real* y, int B, int C, int H, int W,
                         int Ho, int Wo);
// dgrid may be null when the grid needs no gradient.
void grid_sample_backward(const real* x, const real* grid, const real* dy, real* dx, real* dgrid,
                          int B, int C, int H, int W, int Ho, int Wo);

// Single fractional-pixel read of one image plane, zero padding.
real bilinear_read(const real* plane, int H, int W, double py, double px);

}  // namespace canonify
