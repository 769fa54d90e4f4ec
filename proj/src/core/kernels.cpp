#include "core/kernels.h"

#include <algorithm>

#include "core/parallel.h"

namespace canonify {

namespace testing {
bool bilinear_coord_grad_sign_flip = false;
}

namespace {

inline void axpy(int n, real a, const real* __restrict__ x, real* __restrict__ y) {
    for (int i = 0; i < n; ++i) y[i] += a * x[i];
}

inline void axpy_strided(int n, real a, const real* __restrict__ x, int xstride,
                         real* __restrict__ y) {
    for (int i = 0; i < n; ++i) y[i] += a * x[i * xstride];
}

inline void scatter_axpy_strided(int n, real a, const real* __restrict__ x, real* __restrict__ y,
                                 int ystride) {
    for (int i = 0; i < n; ++i) y[i * ystride] += a * x[i];
}

// Eight independent accumulators keep the reduction order fixed while
// breaking the dependency chain.
inline real dot(int n, const real* __restrict__ x, const real* __restrict__ y) {
    real acc[8] = {};
    int i = 0;
    for (; i + 8 <= n; i += 8) {
        for (int j = 0; j < 8; ++j) acc[j] += x[i + j] * y[i + j];
    }
    for (int j = 0; i < n; ++i, ++j) acc[j & 7] += x[i] * y[i];
    return ((acc[0] + acc[1]) + (acc[2] + acc[3])) + ((acc[4] + acc[5]) + (acc[6] + acc[7]));
}

inline real dot_strided(int n, const real* __restrict__ x, int xstride,
                        const real* __restrict__ y) {
    real acc[8] = {};
    int i = 0;
    for (; i + 8 <= n; i += 8) {
        for (int j = 0; j < 8; ++j) acc[j] += x[(i + j) * xstride] * y[i + j];
    }
    for (int j = 0; i < n; ++i, ++j) acc[j & 7] += x[i * xstride] * y[i];
    return ((acc[0] + acc[1]) + (acc[2] + acc[3])) + ((acc[4] + acc[5]) + (acc[6] + acc[7]));
}

// Valid output-column range so that iw = ow*stride + kw - pad lies in [0, W).
inline void ow_range(int W, int Wo, int kw, int stride, int pad, int& lo, int& hi) {
    const int a = pad - kw;  // need ow*stride >= a
    lo = a <= 0 ? 0 : (a + stride - 1) / stride;
    const int b = W - 1 - kw + pad;  // need ow*stride <= b
    hi = b < 0 ? 0 : std::min(Wo, b / stride + 1);
    lo = std::min(lo, hi);
}

// Same-size stride-1 convolutions run over whole planes as one flat span per
// kernel tap: out[p] += wv * in[p + dh*W + dw]. The span is clipped so every
// read stays inside the input plane; the first/last |dw| columns of each row
// then received a neighbor-row value and are corrected afterwards. The
// undo-add pairs cancel to within one ulp, which the conv oracle tolerance
// absorbs, and exactly for zero weights.
struct FlatTap {
    std::int64_t p0, p1;  // flat output span
    std::int64_t off;     // input offset relative to output index
    int dw;
    int row_lo, row_hi;
};

inline FlatTap flat_tap(int H, int W, int kh, int kw, int pad) {
    const int dh = kh - pad, dw = kw - pad;
    FlatTap t;
    t.dw = dw;
    t.row_lo = std::max(0, -dh);
    t.row_hi = H - std::max(0, dh);
    t.off = static_cast<std::int64_t>(dh) * W + dw;
    t.p0 = static_cast<std::int64_t>(t.row_lo) * W + std::max(0, -dw);
    t.p1 = static_cast<std::int64_t>(t.row_hi) * W - std::max(0, dw);
    return t;
}

// Calls fn(p) for every flat position inside the span whose column makes the
// shifted read wrap into a neighboring row.
template <typename F>
inline void for_each_wrong_column(const FlatTap& t, int W, F&& fn) {
    if (t.dw == 0) return;
    for (int r = t.row_lo; r < t.row_hi; ++r) {
        if (t.dw > 0) {
            for (int c = W - t.dw; c < W; ++c) {
                const std::int64_t p = static_cast<std::int64_t>(r) * W + c;
                if (p < t.p1) fn(p);
            }
        } else {
            for (int c = 0; c < -t.dw; ++c) {
                const std::int64_t p = static_cast<std::int64_t>(r) * W + c;
                if (p >= t.p0) fn(p);
            }
        }
    }
}

}  // namespace

void conv2d_forward(const real* x, const real* w, const real* b, real* y, int B, int Cin, int H,
                    int W, int Cout, int K, int stride, int pad) {
    const int Ho = conv_out_dim(H, K, stride, pad);
    const int Wo = conv_out_dim(W, K, stride, pad);
    const std::int64_t in_img = static_cast<std::int64_t>(Cin) * H * W;
    const std::int64_t out_img = static_cast<std::int64_t>(Cout) * Ho * Wo;
    const bool same_size = stride == 1 && Ho == H && Wo == W && K - 1 - pad < W;

    parallel_for_each(static_cast<std::int64_t>(B) * Cout, [&](std::int64_t unit) {
        const int bi = static_cast<int>(unit / Cout);
        const int oc = static_cast<int>(unit % Cout);
        const real* xb = x + bi * in_img;
        real* yp = y + bi * out_img + static_cast<std::int64_t>(oc) * Ho * Wo;
        std::fill(yp, yp + static_cast<std::int64_t>(Ho) * Wo, b ? b[oc] : real(0));
        const real* wo = w + static_cast<std::int64_t>(oc) * Cin * K * K;
        for (int ic = 0; ic < Cin; ++ic) {
            const real* xc = xb + static_cast<std::int64_t>(ic) * H * W;
            for (int kh = 0; kh < K; ++kh) {
                for (int kw = 0; kw < K; ++kw) {
                    const real wv = wo[(ic * K + kh) * K + kw];
                    if (same_size) {
                        const FlatTap t = flat_tap(H, W, kh, kw, pad);
                        if (t.p1 > t.p0) {
                            axpy(static_cast<int>(t.p1 - t.p0), wv, xc + t.p0 + t.off,
                                 yp + t.p0);
                            for_each_wrong_column(t, W, [&](std::int64_t p) {
                                yp[p] -= wv * xc[p + t.off];
                            });
                        }
                        continue;
                    }
                    int lo, hi;
                    ow_range(W, Wo, kw, stride, pad, lo, hi);
                    for (int oh = 0; oh < Ho; ++oh) {
                        const int ih = oh * stride + kh - pad;
                        if (ih < 0 || ih >= H) continue;
                        const real* xrow = xc + static_cast<std::int64_t>(ih) * W + lo * stride +
                                           kw - pad;
                        real* yrow = yp + static_cast<std::int64_t>(oh) * Wo + lo;
                        if (stride == 1) {
                            axpy(hi - lo, wv, xrow, yrow);
                        } else {
                            axpy_strided(hi - lo, wv, xrow, stride, yrow);
                        }
                    }
                }
            }
        }
    });
}

void conv2d_backward_input(const real* w, const real* dy, real* dx, int B, int Cin, int H, int W,
                           int Cout, int K, int stride, int pad) {
    const int Ho = conv_out_dim(H, K, stride, pad);
    const int Wo = conv_out_dim(W, K, stride, pad);
    const std::int64_t in_img = static_cast<std::int64_t>(Cin) * H * W;
    const std::int64_t out_img = static_cast<std::int64_t>(Cout) * Ho * Wo;

    const bool same_size = stride == 1 && Ho == H && Wo == W && K - 1 - pad < W;
    parallel_for_each(static_cast<std::int64_t>(B) * Cin, [&](std::int64_t unit) {
        const int bi = static_cast<int>(unit / Cin);
        const int ic = static_cast<int>(unit % Cin);
        real* dxc = dx + bi * in_img + static_cast<std::int64_t>(ic) * H * W;
        for (int oc = 0; oc < Cout; ++oc) {
            const real* dyp = dy + bi * out_img + static_cast<std::int64_t>(oc) * Ho * Wo;
            const real* wo = w + (static_cast<std::int64_t>(oc) * Cin + ic) * K * K;
            for (int kh = 0; kh < K; ++kh) {
                for (int kw = 0; kw < K; ++kw) {
                    const real wv = wo[kh * K + kw];
                    if (same_size) {
                        const FlatTap t = flat_tap(H, W, kh, kw, pad);
                        if (t.p1 > t.p0) {
                            axpy(static_cast<int>(t.p1 - t.p0), wv, dyp + t.p0,
                                 dxc + t.p0 + t.off);
                            for_each_wrong_column(t, W, [&](std::int64_t p) {
                                dxc[p + t.off] -= wv * dyp[p];
                            });
                        }
                        continue;
                    }
                    int lo, hi;
                    ow_range(W, Wo, kw, stride, pad, lo, hi);
                    for (int oh = 0; oh < Ho; ++oh) {
                        const int ih = oh * stride + kh - pad;
                        if (ih < 0 || ih >= H) continue;
                        real* dxrow = dxc + static_cast<std::int64_t>(ih) * W + lo * stride + kw -
                                      pad;
                        const real* dyrow = dyp + static_cast<std::int64_t>(oh) * Wo + lo;
                        if (stride == 1) {
                            axpy(hi - lo, wv, dyrow, dxrow);
                        } else {
                            scatter_axpy_strided(hi - lo, wv, dyrow, dxrow, stride);
                        }
                    }
                }
            }
        }
    });
}

void conv2d_backward_weight(const real* x, const real* dy, real* dw, real* db, int B, int Cin,
                            int H, int W, int Cout, int K, int stride, int pad) {
    const int Ho = conv_out_dim(H, K, stride, pad);
    const int Wo = conv_out_dim(W, K, stride, pad);
    const std::int64_t in_img = static_cast<std::int64_t>(Cin) * H * W;
    const std::int64_t out_img = static_cast<std::int64_t>(Cout) * Ho * Wo;

    const bool same_size = stride == 1 && Ho == H && Wo == W && K - 1 - pad < W;
    // One worker owns all of dw[oc] / db[oc]; the batch reduction order is
    // fixed regardless of thread count.
    parallel_for_each(Cout, [&](std::int64_t ocl) {
        const int oc = static_cast<int>(ocl);
        real* dwo = dw ? dw + static_cast<std::int64_t>(oc) * Cin * K * K : nullptr;
        for (int bi = 0; bi < B; ++bi) {
            const real* xb = x + bi * in_img;
            const real* dyp = dy + bi * out_img + static_cast<std::int64_t>(oc) * Ho * Wo;
            for (int ic = 0; dwo && ic < Cin; ++ic) {
                const real* xc = xb + static_cast<std::int64_t>(ic) * H * W;
                for (int kh = 0; kh < K; ++kh) {
                    for (int kw = 0; kw < K; ++kw) {
                        real acc = 0;
                        if (same_size) {
                            const FlatTap t = flat_tap(H, W, kh, kw, pad);
                            if (t.p1 > t.p0) {
                                acc = dot(static_cast<int>(t.p1 - t.p0), xc + t.p0 + t.off,
                                          dyp + t.p0);
                                for_each_wrong_column(t, W, [&](std::int64_t p) {
                                    acc -= xc[p + t.off] * dyp[p];
                                });
                            }
                            dwo[(ic * K + kh) * K + kw] += acc;
                            continue;
                        }
                        int lo, hi;
                        ow_range(W, Wo, kw, stride, pad, lo, hi);
                        for (int oh = 0; oh < Ho; ++oh) {
                            const int ih = oh * stride + kh - pad;
                            if (ih < 0 || ih >= H) continue;
                            const real* xrow = xc + static_cast<std::int64_t>(ih) * W +
                                               lo * stride + kw - pad;
                            const real* dyrow = dyp + static_cast<std::int64_t>(oh) * Wo + lo;
                            acc += stride == 1 ? dot(hi - lo, xrow, dyrow)
                                               : dot_strided(hi - lo, xrow, stride, dyrow);
                        }
                        dwo[(ic * K + kh) * K + kw] += acc;
                    }
                }
            }
            if (db) {
                real acc = 0;
                for (std::int64_t i = 0; i < static_cast<std::int64_t>(Ho) * Wo; ++i)
                    acc += dyp[i];
                db[oc] += acc;
            }
        }
    });
}

void maxpool2x2_forward(const real* x, real* y, std::uint8_t* idx, int planes, int H, int W) {
    const int Ho = H / 2, Wo = W / 2;
    parallel_for_each(planes, [&](std::int64_t p) {
        const real* xp = x + p * static_cast<std::int64_t>(H) * W;
        real* yp = y + p * static_cast<std::int64_t>(Ho) * Wo;
        std::uint8_t* ip = idx + p * static_cast<std::int64_t>(Ho) * Wo;
        for (int oh = 0; oh < Ho; ++oh) {
            for (int ow = 0; ow < Wo; ++ow) {
                const real* cell = xp + (2 * oh) * W + 2 * ow;
                real best = cell[0];
                std::uint8_t which = 0;
                if (cell[1] > best) best = cell[1], which = 1;
                if (cell[W] > best) best = cell[W], which = 2;
                if (cell[W + 1] > best) best = cell[W + 1], which = 3;
                yp[oh * Wo + ow] = best;
                ip[oh * Wo + ow] = which;
            }
        }
    });
}

void maxpool2x2_backward(const real* dy, const std::uint8_t* idx, real* dx, int planes, int H,
                         int W) {
    const int Ho = H / 2, Wo = W / 2;
    parallel_for_each(planes, [&](std::int64_t p) {
        const real* dyp = dy + p * static_cast<std::int64_t>(Ho) * Wo;
        const std::uint8_t* ip = idx + p * static_cast<std::int64_t>(Ho) * Wo;
        real* dxp = dx + p * static_cast<std::int64_t>(H) * W;
        for (int oh = 0; oh < Ho; ++oh) {
            for (int ow = 0; ow < Wo; ++ow) {
                const std::uint8_t which = ip[oh * Wo + ow];
                const int ih = 2 * oh + (which >> 1);
                const int iw = 2 * ow + (which & 1);
                dxp[ih * W + iw] += dyp[oh * Wo + ow];
            }
        }
    });
}

void upsample2x_forward(const real* x, real* y, int planes, int H, int W) {
    parallel_for_each(planes, [&](std::int64_t p) {
        const real* xp = x + p * static_cast<std::int64_t>(H) * W;
        real* yp = y + p * static_cast<std::int64_t>(H) * W * 4;
        const int Wo = 2 * W;
        for (int i = 0; i < H; ++i) {
            for (int j = 0; j < W; ++j) {
                const real v = xp[i * W + j];
                real* o = yp + (2 * i) * Wo + 2 * j;
                o[0] = v;
                o[1] = v;
                o[Wo] = v;
                o[Wo + 1] = v;
            }
        }
    });
}

void upsample2x_backward(const real* dy, real* dx, int planes, int H, int W) {
    parallel_for_each(planes, [&](std::int64_t p) {
        const real* dyp = dy + p * static_cast<std::int64_t>(H) * W * 4;
        real* dxp = dx + p * static_cast<std::int64_t>(H) * W;
        const int Wo = 2 * W;
        for (int i = 0; i < H; ++i) {
            for (int j = 0; j < W; ++j) {
                const real* o = dyp + (2 * i) * Wo + 2 * j;
                dxp[i * W + j] += (o[0] + o[1]) + (o[Wo] + o[Wo + 1]);
            }
        }
    });
}

real bilinear_read(const real* plane, int H, int W, double py, double px) {
    const int x0 = static_cast<int>(std::floor(px));
    const int y0 = static_cast<int>(std::floor(py));
    const real wx = static_cast<real>(px - x0);
    const real wy = static_cast<real>(py - y0);
    const bool x0v = x0 >= 0 && x0 < W, x1v = x0 + 1 >= 0 && x0 + 1 < W;
    const bool y0v = y0 >= 0 && y0 < H, y1v = y0 + 1 >= 0 && y0 + 1 < H;
    if (wx == real(0) && wy == real(0)) return x0v && y0v ? plane[y0 * W + x0] : real(0);
    real v = 0;
    if (y0v && x0v) v += (1 - wy) * (1 - wx) * plane[y0 * W + x0];
    if (y0v && x1v) v += (1 - wy) * wx * plane[y0 * W + x0 + 1];
    if (y1v && x0v) v += wy * (1 - wx) * plane[(y0 + 1) * W + x0];
    if (y1v && x1v) v += wy * wx * plane[(y0 + 1) * W + x0 + 1];
    return v;
}

void grid_sample_forward(const real* x, const real* grid, real* y, int B, int C, int H, int W,
                         int Ho, int Wo) {
    const std::int64_t in_img = static_cast<std::int64_t>(C) * H * W;
    const std::int64_t out_plane = static_cast<std::int64_t>(Ho) * Wo;

    parallel_for_each(static_cast<std::int64_t>(B) * Ho, [&](std::int64_t unit) {
        const int bi = static_cast<int>(unit / Ho);
        const int oh = static_cast<int>(unit % Ho);
        const real* g = grid + ((static_cast<std::int64_t>(bi) * Ho + oh) * Wo) * 2;
        const real* xb = x + bi * in_img;
        real* yb = y + static_cast<std::int64_t>(bi) * C * out_plane + oh * Wo;
        for (int ow = 0; ow < Wo; ++ow) {
            const double px = unnormalize_coord(g[2 * ow], W);
            const double py = unnormalize_coord(g[2 * ow + 1], H);
            const int x0 = static_cast<int>(std::floor(px));
            const int y0 = static_cast<int>(std::floor(py));
            const real wx = static_cast<real>(px - x0);
            const real wy = static_cast<real>(py - y0);
            const bool x0v = x0 >= 0 && x0 < W, x1v = x0 + 1 >= 0 && x0 + 1 < W;
            const bool y0v = y0 >= 0 && y0 < H, y1v = y0 + 1 >= 0 && y0 + 1 < H;
            if (wx == real(0) && wy == real(0)) {
                // Exact pixel center: bitwise copy.
                for (int c = 0; c < C; ++c) {
                    yb[c * out_plane + ow] = x0v && y0v ? xb[c * H * W + y0 * W + x0] : real(0);
                }
                continue;
            }
            const real w00 = (1 - wy) * (1 - wx), w01 = (1 - wy) * wx;
            const real w10 = wy * (1 - wx), w11 = wy * wx;
            for (int c = 0; c < C; ++c) {
                const real* plane = xb + static_cast<std::int64_t>(c) * H * W;
                real v = 0;
                if (y0v && x0v) v += w00 * plane[y0 * W + x0];
                if (y0v && x1v) v += w01 * plane[y0 * W + x0 + 1];
                if (y1v && x0v) v += w10 * plane[(y0 + 1) * W + x0];
                if (y1v && x1v) v += w11 * plane[(y0 + 1) * W + x0 + 1];
                yb[c * out_plane + ow] = v;
            }
        }
    });
}

void grid_sample_backward(const real* x, const real* grid, const real* dy, real* dx, real* dgrid,
                          int B, int C, int H, int W, int Ho, int Wo) {
    const std::int64_t in_img = static_cast<std::int64_t>(C) * H * W;
    const std::int64_t out_plane = static_cast<std::int64_t>(Ho) * Wo;
    const real gsign = testing::bilinear_coord_grad_sign_flip ? real(-1) : real(1);
    // d(pixel coord)/d(normalized coord)
    const real sx = gsign * real(0.5) * (W - 1);
    const real sy = gsign * real(0.5) * (H - 1);

    // dx[b] and dgrid[b] are written by the worker owning batch element b.
    parallel_for_each(B, [&](std::int64_t bi) {
        const real* g = grid + bi * out_plane * 2;
        const real* xb = x + bi * in_img;
        const real* dyb = dy + bi * C * out_plane;
        real* dxb = dx ? dx + bi * in_img : nullptr;
        real* dgb = dgrid ? dgrid + bi * out_plane * 2 : nullptr;
        for (int oh = 0; oh < Ho; ++oh) {
            for (int ow = 0; ow < Wo; ++ow) {
                const std::int64_t oi = static_cast<std::int64_t>(oh) * Wo + ow;
                const double px = unnormalize_coord(g[2 * oi], W);
                const double py = unnormalize_coord(g[2 * oi + 1], H);
                const int x0 = static_cast<int>(std::floor(px));
                const int y0 = static_cast<int>(std::floor(py));
                const real wx = static_cast<real>(px - x0);
                const real wy = static_cast<real>(py - y0);
                const bool x0v = x0 >= 0 && x0 < W, x1v = x0 + 1 >= 0 && x0 + 1 < W;
                const bool y0v = y0 >= 0 && y0 < H, y1v = y0 + 1 >= 0 && y0 + 1 < H;
                real gx = 0, gy = 0;
                for (int c = 0; c < C; ++c) {
                    const real go = dyb[c * out_plane + oi];
                    if (go == real(0)) continue;
                    const real* plane = xb + static_cast<std::int64_t>(c) * H * W;
                    const real a = y0v && x0v ? plane[y0 * W + x0] : real(0);
                    const real b = y0v && x1v ? plane[y0 * W + x0 + 1] : real(0);
                    const real c2 = y1v && x0v ? plane[(y0 + 1) * W + x0] : real(0);
                    const real d = y1v && x1v ? plane[(y0 + 1) * W + x0 + 1] : real(0);
                    if (dxb) {
                        real* dplane = dxb + static_cast<std::int64_t>(c) * H * W;
                        if (y0v && x0v) dplane[y0 * W + x0] += go * (1 - wy) * (1 - wx);
                        if (y0v && x1v) dplane[y0 * W + x0 + 1] += go * (1 - wy) * wx;
                        if (y1v && x0v) dplane[(y0 + 1) * W + x0] += go * wy * (1 - wx);
                        if (y1v && x1v) dplane[(y0 + 1) * W + x0 + 1] += go * wy * wx;
                    }
                    gx += go * ((1 - wy) * (b - a) + wy * (d - c2));
                    gy += go * ((1 - wx) * (c2 - a) + wx * (d - b));
                }
                if (dgb) {
                    dgb[2 * oi] += gx * sx;
                    dgb[2 * oi + 1] += gy * sy;
                }
            }
        }
    });
}

}  // namespace canonify
