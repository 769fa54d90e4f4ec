#include "core/ops.h"

#include <algorithm>
#include <cmath>

#include "core/kernels.h"
#include "core/parallel.h"

namespace canonify {
namespace {

void require(bool cond, const std::string& msg) {
    if (!cond) throw std::invalid_argument(msg);
}

TensorPtr result_of(const char* op, std::vector<int> shape, std::vector<TensorPtr> inputs) {
    auto out = make_tensor(std::move(shape));
    out->op = op;
    bool req = false;
    for (const auto& in : inputs) req = req || in->requires_grad;
    if (req) {
        out->requires_grad = true;
        out->inputs = std::move(inputs);
    }
    return out;
}

inline real sigmoid_scalar(real z) {
    if (z >= 0) {
        return real(1) / (real(1) + std::exp(-z));
    }
    const real e = std::exp(z);
    return e / (real(1) + e);
}

}  // namespace

TensorPtr add(const TensorPtr& a, const TensorPtr& b) {
    require(same_shape(*a, *b), "add: shape mismatch " + shape_str(a->shape) + " vs " +
                                    shape_str(b->shape));
    auto out = result_of("add", a->shape, {a, b});
    const std::int64_t n = out->numel();
    for (std::int64_t i = 0; i < n; ++i) out->data[i] = a->data[i] + b->data[i];
    if (out->requires_grad) {
        Tensor *ap = a.get(), *bp = b.get();
        out->backward_fn = [ap, bp, n](Tensor& self) {
            if (ap->requires_grad)
                for (std::int64_t i = 0; i < n; ++i) ap->grad[i] += self.grad[i];
            if (bp->requires_grad)
                for (std::int64_t i = 0; i < n; ++i) bp->grad[i] += self.grad[i];
        };
    }
    return out;
}

TensorPtr sub(const TensorPtr& a, const TensorPtr& b) {
    require(same_shape(*a, *b), "sub: shape mismatch");
    auto out = result_of("sub", a->shape, {a, b});
    const std::int64_t n = out->numel();
    for (std::int64_t i = 0; i < n; ++i) out->data[i] = a->data[i] - b->data[i];
    if (out->requires_grad) {
        Tensor *ap = a.get(), *bp = b.get();
        out->backward_fn = [ap, bp, n](Tensor& self) {
            if (ap->requires_grad)
                for (std::int64_t i = 0; i < n; ++i) ap->grad[i] += self.grad[i];
            if (bp->requires_grad)
                for (std::int64_t i = 0; i < n; ++i) bp->grad[i] -= self.grad[i];
        };
    }
    return out;
}

TensorPtr mul(const TensorPtr& a, const TensorPtr& b) {
    require(same_shape(*a, *b), "mul: shape mismatch");
    auto out = result_of("mul", a->shape, {a, b});
    const std::int64_t n = out->numel();
    for (std::int64_t i = 0; i < n; ++i) out->data[i] = a->data[i] * b->data[i];
    if (out->requires_grad) {
        Tensor *ap = a.get(), *bp = b.get();
        out->backward_fn = [ap, bp, n](Tensor& self) {
            if (ap->requires_grad)
                for (std::int64_t i = 0; i < n; ++i) ap->grad[i] += self.grad[i] * bp->data[i];
            if (bp->requires_grad)
                for (std::int64_t i = 0; i < n; ++i) bp->grad[i] += self.grad[i] * ap->data[i];
        };
    }
    return out;
}

TensorPtr scale(const TensorPtr& a, real s) {
    auto out = result_of("scale", a->shape, {a});
    const std::int64_t n = out->numel();
    for (std::int64_t i = 0; i < n; ++i) out->data[i] = a->data[i] * s;
    if (out->requires_grad) {
        Tensor* ap = a.get();
        out->backward_fn = [ap, s, n](Tensor& self) {
            for (std::int64_t i = 0; i < n; ++i) ap->grad[i] += self.grad[i] * s;
        };
    }
    return out;
}

TensorPtr relu(const TensorPtr& x) {
    auto out = result_of("relu", x->shape, {x});
    const std::int64_t n = out->numel();
    for (std::int64_t i = 0; i < n; ++i) out->data[i] = x->data[i] > 0 ? x->data[i] : real(0);
    if (out->requires_grad) {
        Tensor* xp = x.get();
        out->backward_fn = [xp, n](Tensor& self) {
            for (std::int64_t i = 0; i < n; ++i) {
                if (xp->data[i] > 0) xp->grad[i] += self.grad[i];
            }
        };
    }
    return out;
}

TensorPtr sigmoid_op(const TensorPtr& x) {
    auto out = result_of("sigmoid", x->shape, {x});
    const std::int64_t n = out->numel();
    for (std::int64_t i = 0; i < n; ++i) out->data[i] = sigmoid_scalar(x->data[i]);
    if (out->requires_grad) {
        Tensor* xp = x.get();
        std::vector<real> y = out->data;
        out->backward_fn = [xp, y = std::move(y), n](Tensor& self) {
            for (std::int64_t i = 0; i < n; ++i) {
                xp->grad[i] += self.grad[i] * y[i] * (real(1) - y[i]);
            }
        };
    }
    return out;
}

TensorPtr tanh_op(const TensorPtr& x) {
    auto out = result_of("tanh", x->shape, {x});
    const std::int64_t n = out->numel();
    for (std::int64_t i = 0; i < n; ++i) out->data[i] = std::tanh(x->data[i]);
    if (out->requires_grad) {
        Tensor* xp = x.get();
        std::vector<real> y = out->data;
        out->backward_fn = [xp, y = std::move(y), n](Tensor& self) {
            for (std::int64_t i = 0; i < n; ++i) {
                xp->grad[i] += self.grad[i] * (real(1) - y[i] * y[i]);
            }
        };
    }
    return out;
}

TensorPtr activation(const TensorPtr& x, Activation kind) {
    switch (kind) {
        case Activation::relu: return relu(x);
        case Activation::sigmoid: return sigmoid_op(x);
        case Activation::tanh: return tanh_op(x);
    }
    throw std::invalid_argument("activation: unknown kind");
}

TensorPtr reshape(const TensorPtr& x, std::vector<int> shape) {
    std::int64_t n = 1;
    for (int d : shape) n *= d;
    require(n == x->numel(), "reshape: element count mismatch");
    auto out = result_of("reshape", std::move(shape), {x});
    out->data = x->data;
    if (out->requires_grad) {
        Tensor* xp = x.get();
        out->backward_fn = [xp, n](Tensor& self) {
            for (std::int64_t i = 0; i < n; ++i) xp->grad[i] += self.grad[i];
        };
    }
    return out;
}

TensorPtr concat_channels(const TensorPtr& a, const TensorPtr& b) {
    require(a->ndim() == 4 && b->ndim() == 4, "concat_channels: expected NCHW");
    require(a->dim(0) == b->dim(0) && a->dim(2) == b->dim(2) && a->dim(3) == b->dim(3),
            "concat_channels: shape mismatch " + shape_str(a->shape) + " vs " +
                shape_str(b->shape));
    const int B = a->dim(0), Ca = a->dim(1), Cb = b->dim(1), H = a->dim(2), W = a->dim(3);
    auto out = result_of("concat", {B, Ca + Cb, H, W}, {a, b});
    const std::int64_t plane = static_cast<std::int64_t>(H) * W;
    for (int bi = 0; bi < B; ++bi) {
        std::copy_n(a->data.data() + bi * Ca * plane, Ca * plane,
                    out->data.data() + bi * (Ca + Cb) * plane);
        std::copy_n(b->data.data() + bi * Cb * plane, Cb * plane,
                    out->data.data() + (bi * (Ca + Cb) + Ca) * plane);
    }
    if (out->requires_grad) {
        Tensor *ap = a.get(), *bp = b.get();
        out->backward_fn = [ap, bp, B, Ca, Cb, plane](Tensor& self) {
            for (int bi = 0; bi < B; ++bi) {
                const real* g = self.grad.data() + bi * (Ca + Cb) * plane;
                if (ap->requires_grad) {
                    real* ga = ap->grad.data() + bi * Ca * plane;
                    for (std::int64_t i = 0; i < Ca * plane; ++i) ga[i] += g[i];
                }
                if (bp->requires_grad) {
                    real* gb = bp->grad.data() + bi * Cb * plane;
                    for (std::int64_t i = 0; i < Cb * plane; ++i) gb[i] += g[Ca * plane + i];
                }
            }
        };
    }
    return out;
}

TensorPtr concat_batch(const TensorPtr& a, const TensorPtr& b) {
    require(a->ndim() >= 1 && a->ndim() == b->ndim(), "concat_batch: rank mismatch");
    for (int i = 1; i < a->ndim(); ++i) {
        require(a->dim(i) == b->dim(i), "concat_batch: shape mismatch " + shape_str(a->shape) +
                                            " vs " + shape_str(b->shape));
    }
    std::vector<int> shape = a->shape;
    shape[0] += b->dim(0);
    auto out = result_of("concat_batch", std::move(shape), {a, b});
    std::copy(a->data.begin(), a->data.end(), out->data.begin());
    std::copy(b->data.begin(), b->data.end(),
              out->data.begin() + static_cast<std::ptrdiff_t>(a->data.size()));
    if (out->requires_grad) {
        Tensor *ap = a.get(), *bp = b.get();
        out->backward_fn = [ap, bp](Tensor& self) {
            const size_t na = ap->data.size();
            if (ap->requires_grad) {
                for (size_t i = 0; i < na; ++i) ap->grad[i] += self.grad[i];
            }
            if (bp->requires_grad) {
                for (size_t i = 0; i < bp->data.size(); ++i) bp->grad[i] += self.grad[na + i];
            }
        };
    }
    return out;
}

TensorPtr slice_batch(const TensorPtr& x, int from, int to) {
    require(x->ndim() >= 1 && from >= 0 && to > from && to <= x->dim(0),
            "slice_batch: bad range");
    std::vector<int> shape = x->shape;
    shape[0] = to - from;
    auto out = result_of("slice_batch", std::move(shape), {x});
    const std::int64_t stride = x->numel() / x->dim(0);
    std::copy_n(x->data.begin() + from * stride, static_cast<std::int64_t>(to - from) * stride,
                out->data.begin());
    if (out->requires_grad) {
        Tensor* xp = x.get();
        out->backward_fn = [xp, from, stride](Tensor& self) {
            real* gx = xp->grad.data() + from * stride;
            for (size_t i = 0; i < self.grad.size(); ++i) gx[i] += self.grad[i];
        };
    }
    return out;
}

TensorPtr center_crop_nchw(const TensorPtr& x, int out_h, int out_w) {
    require(x->ndim() == 4, "center_crop: expected NCHW");
    const int B = x->dim(0), C = x->dim(1), H = x->dim(2), W = x->dim(3);
    require(H >= out_h && W >= out_w, "center_crop: crop larger than input");
    const int oy = (H - out_h) / 2;
    const int ox = (W - out_w) / 2;
    auto out = result_of("center_crop", {B, C, out_h, out_w}, {x});
    for (int p = 0; p < B * C; ++p) {
        const real* src = x->data.data() + static_cast<std::int64_t>(p) * H * W;
        real* dst = out->data.data() + static_cast<std::int64_t>(p) * out_h * out_w;
        for (int i = 0; i < out_h; ++i) {
            std::copy_n(src + (oy + i) * W + ox, out_w, dst + i * out_w);
        }
    }
    if (out->requires_grad) {
        Tensor* xp = x.get();
        out->backward_fn = [xp, B, C, H, W, out_h, out_w, oy, ox](Tensor& self) {
            for (int p = 0; p < B * C; ++p) {
                real* gx = xp->grad.data() + static_cast<std::int64_t>(p) * H * W;
                const real* go = self.grad.data() + static_cast<std::int64_t>(p) * out_h * out_w;
                for (int i = 0; i < out_h; ++i) {
                    for (int j = 0; j < out_w; ++j) {
                        gx[(oy + i) * W + ox + j] += go[i * out_w + j];
                    }
                }
            }
        };
    }
    return out;
}

TensorPtr conv2d(const TensorPtr& x, const TensorPtr& w, const TensorPtr& b, int stride, int pad) {
    require(x->ndim() == 4, "conv2d: input must be NCHW, got " + shape_str(x->shape));
    require(w->ndim() == 4 && w->dim(2) == w->dim(3), "conv2d: weight must be OIKK");
    require(stride >= 1, "conv2d: stride must be >= 1");
    const int B = x->dim(0), Cin = x->dim(1), H = x->dim(2), W = x->dim(3);
    const int Cout = w->dim(0), K = w->dim(2);
    require(w->dim(1) == Cin, "conv2d: input channels " + std::to_string(Cin) +
                                  " do not match weight channels " + std::to_string(w->dim(1)));
    require(b->numel() == Cout, "conv2d: bias size mismatch");
    require(K <= H + 2 * pad && K <= W + 2 * pad, "conv2d: kernel larger than padded input");
    const int Ho = conv_out_dim(H, K, stride, pad);
    const int Wo = conv_out_dim(W, K, stride, pad);

    auto out = result_of("conv2d", {B, Cout, Ho, Wo}, {x, w, b});
    conv2d_forward(x->data.data(), w->data.data(), b->data.data(), out->data.data(), B, Cin, H, W,
                   Cout, K, stride, pad);
    if (out->requires_grad) {
        Tensor *xp = x.get(), *wp = w.get(), *bp = b.get();
        out->backward_fn = [xp, wp, bp, B, Cin, H, W, Cout, K, stride, pad](Tensor& self) {
            if (xp->requires_grad) {
                conv2d_backward_input(wp->data.data(), self.grad.data(), xp->grad.data(), B, Cin,
                                      H, W, Cout, K, stride, pad);
            }
            if (wp->requires_grad || bp->requires_grad) {
                conv2d_backward_weight(xp->data.data(), self.grad.data(),
                                       wp->requires_grad ? wp->grad.data() : nullptr,
                                       bp->requires_grad ? bp->grad.data() : nullptr, B, Cin, H, W,
                                       Cout, K, stride, pad);
            }
        };
    }
    return out;
}

TensorPtr linear(const TensorPtr& x, const TensorPtr& w, const TensorPtr& b) {
    require(x->ndim() == 2 && w->ndim() == 2, "linear: expected 2-d input and weight");
    const int B = x->dim(0), N = x->dim(1), M = w->dim(0);
    require(w->dim(1) == N, "linear: inner dimensions " + std::to_string(N) + " vs " +
                                std::to_string(w->dim(1)));
    require(b->numel() == M, "linear: bias size mismatch");
    auto out = result_of("linear", {B, M}, {x, w, b});
    parallel_for_each(B, [&](std::int64_t bi) {
        const real* xr = x->data.data() + bi * N;
        real* yr = out->data.data() + bi * M;
        for (int m = 0; m < M; ++m) {
            const real* wr = w->data.data() + static_cast<std::int64_t>(m) * N;
            real acc = b->data[m];
            for (int i = 0; i < N; ++i) acc += wr[i] * xr[i];
            yr[m] = acc;
        }
    });
    if (out->requires_grad) {
        Tensor *xp = x.get(), *wp = w.get(), *bp = b.get();
        out->backward_fn = [xp, wp, bp, B, N, M](Tensor& self) {
            if (xp->requires_grad) {
                parallel_for_each(B, [&](std::int64_t bi) {
                    real* gx = xp->grad.data() + bi * N;
                    const real* gy = self.grad.data() + bi * M;
                    for (int m = 0; m < M; ++m) {
                        const real g = gy[m];
                        const real* wr = wp->data.data() + static_cast<std::int64_t>(m) * N;
                        for (int i = 0; i < N; ++i) gx[i] += g * wr[i];
                    }
                });
            }
            if (wp->requires_grad) {
                parallel_for_each(M, [&](std::int64_t m) {
                    real* gw = wp->grad.data() + m * N;
                    for (int bi = 0; bi < B; ++bi) {
                        const real g = self.grad[bi * M + m];
                        const real* xr = xp->data.data() + static_cast<std::int64_t>(bi) * N;
                        for (int i = 0; i < N; ++i) gw[i] += g * xr[i];
                    }
                });
            }
            if (bp->requires_grad) {
                for (int bi = 0; bi < B; ++bi) {
                    for (int m = 0; m < M; ++m) bp->grad[m] += self.grad[bi * M + m];
                }
            }
        };
    }
    return out;
}

TensorPtr batch_norm(const TensorPtr& x, const TensorPtr& gamma, const TensorPtr& beta,
                     const TensorPtr& running_mean, const TensorPtr& running_var, bool train,
                     real momentum, real eps) {
    require(x->ndim() == 4, "batch_norm: expected NCHW");
    const int B = x->dim(0), C = x->dim(1), H = x->dim(2), W = x->dim(3);
    require(gamma->numel() == C && beta->numel() == C, "batch_norm: parameter size mismatch");
    require(running_mean->numel() == C && running_var->numel() == C,
            "batch_norm: running stats size mismatch");
    const std::int64_t n = static_cast<std::int64_t>(B) * H * W;
    if (train && n <= 1) {
        throw std::invalid_argument("batch_norm: degenerate batch (B*H*W must exceed 1)");
    }

    auto out = result_of("batch_norm", x->shape, {x, gamma, beta});
    std::vector<real> mean_c(C), invstd_c(C);
    const std::int64_t plane = static_cast<std::int64_t>(H) * W;

    parallel_for_each(C, [&](std::int64_t c) {
        real mean, invstd;
        if (train) {
            double sum = 0;
            for (int bi = 0; bi < B; ++bi) {
                const real* p = x->data.data() + (bi * C + c) * plane;
                for (std::int64_t i = 0; i < plane; ++i) sum += p[i];
            }
            mean = static_cast<real>(sum / static_cast<double>(n));
            double sq = 0;
            for (int bi = 0; bi < B; ++bi) {
                const real* p = x->data.data() + (bi * C + c) * plane;
                for (std::int64_t i = 0; i < plane; ++i) {
                    const double d = static_cast<double>(p[i]) - mean;
                    sq += d * d;
                }
            }
            const real var = static_cast<real>(sq / static_cast<double>(n));
            invstd = real(1) / std::sqrt(var + eps);
            running_mean->data[c] = (real(1) - momentum) * running_mean->data[c] + momentum * mean;
            running_var->data[c] = (real(1) - momentum) * running_var->data[c] + momentum * var;
        } else {
            mean = running_mean->data[c];
            invstd = real(1) / std::sqrt(running_var->data[c] + eps);
        }
        mean_c[c] = mean;
        invstd_c[c] = invstd;
        const real g = gamma->data[c], bta = beta->data[c];
        for (int bi = 0; bi < B; ++bi) {
            const real* p = x->data.data() + (bi * C + c) * plane;
            real* o = out->data.data() + (bi * C + c) * plane;
            for (std::int64_t i = 0; i < plane; ++i) o[i] = g * ((p[i] - mean) * invstd) + bta;
        }
    });

    if (out->requires_grad) {
        Tensor *xp = x.get(), *gp = gamma.get(), *bp = beta.get();
        out->backward_fn = [xp, gp, bp, B, C, plane, n, train, mean_c = std::move(mean_c),
                            invstd_c = std::move(invstd_c)](Tensor& self) {
            parallel_for_each(C, [&](std::int64_t c) {
                const real mean = mean_c[c], invstd = invstd_c[c];
                const real g = gp->data[c];
                // Channel reductions over dy and dy * xhat.
                double sum_dy = 0, sum_dy_xhat = 0;
                for (int bi = 0; bi < B; ++bi) {
                    const real* dy = self.grad.data() + (bi * C + c) * plane;
                    const real* xv = xp->data.data() + (bi * C + c) * plane;
                    for (std::int64_t i = 0; i < plane; ++i) {
                        const real xhat = (xv[i] - mean) * invstd;
                        sum_dy += dy[i];
                        sum_dy_xhat += static_cast<double>(dy[i]) * xhat;
                    }
                }
                if (gp->requires_grad) gp->grad[c] += static_cast<real>(sum_dy_xhat);
                if (bp->requires_grad) bp->grad[c] += static_cast<real>(sum_dy);
                if (xp->requires_grad) {
                    const real mdy = static_cast<real>(sum_dy / static_cast<double>(n));
                    const real mdyx = static_cast<real>(sum_dy_xhat / static_cast<double>(n));
                    for (int bi = 0; bi < B; ++bi) {
                        const real* dy = self.grad.data() + (bi * C + c) * plane;
                        const real* xv = xp->data.data() + (bi * C + c) * plane;
                        real* gx = xp->grad.data() + (bi * C + c) * plane;
                        if (train) {
                            for (std::int64_t i = 0; i < plane; ++i) {
                                const real xhat = (xv[i] - mean) * invstd;
                                gx[i] += g * invstd * (dy[i] - mdy - xhat * mdyx);
                            }
                        } else {
                            for (std::int64_t i = 0; i < plane; ++i) {
                                gx[i] += g * invstd * dy[i];
                            }
                        }
                    }
                }
            });
        };
    }
    return out;
}

TensorPtr maxpool2x2(const TensorPtr& x) {
    require(x->ndim() == 4, "maxpool2x2: expected NCHW");
    const int B = x->dim(0), C = x->dim(1), H = x->dim(2), W = x->dim(3);
    require(H % 2 == 0 && W % 2 == 0, "maxpool2x2: spatial dims must be even, got " +
                                          shape_str(x->shape));
    auto out = result_of("maxpool2x2", {B, C, H / 2, W / 2}, {x});
    auto idx = std::make_shared<std::vector<std::uint8_t>>(
        static_cast<size_t>(out->numel()));
    maxpool2x2_forward(x->data.data(), out->data.data(), idx->data(), B * C, H, W);
    if (out->requires_grad) {
        Tensor* xp = x.get();
        out->backward_fn = [xp, idx, B, C, H, W](Tensor& self) {
            maxpool2x2_backward(self.grad.data(), idx->data(), xp->grad.data(), B * C, H, W);
        };
    }
    return out;
}

TensorPtr upsample2x(const TensorPtr& x) {
    require(x->ndim() == 4, "upsample2x: expected NCHW");
    const int B = x->dim(0), C = x->dim(1), H = x->dim(2), W = x->dim(3);
    auto out = result_of("upsample2x", {B, C, 2 * H, 2 * W}, {x});
    upsample2x_forward(x->data.data(), out->data.data(), B * C, H, W);
    if (out->requires_grad) {
        Tensor* xp = x.get();
        out->backward_fn = [xp, B, C, H, W](Tensor& self) {
            upsample2x_backward(self.grad.data(), xp->grad.data(), B * C, H, W);
        };
    }
    return out;
}

TensorPtr affine_grid(const TensorPtr& theta, int out_h, int out_w) {
    require(theta->ndim() == 3 && theta->dim(1) == 2 && theta->dim(2) == 3,
            "affine_grid: theta must be Bx2x3, got " + shape_str(theta->shape));
    const int B = theta->dim(0);
    auto out = result_of("affine_grid", {B, out_h, out_w, 2}, {theta});
    // Normalized output-pixel coordinates, shared across the batch.
    std::vector<real> xs(static_cast<size_t>(out_w)), ys(static_cast<size_t>(out_h));
    for (int j = 0; j < out_w; ++j) xs[j] = normalize_coord(j, out_w);
    for (int i = 0; i < out_h; ++i) ys[i] = normalize_coord(i, out_h);

    for (int bi = 0; bi < B; ++bi) {
        const real* t = theta->data.data() + bi * 6;
        real* g = out->data.data() + static_cast<std::int64_t>(bi) * out_h * out_w * 2;
        for (int i = 0; i < out_h; ++i) {
            const real yn = ys[i];
            for (int j = 0; j < out_w; ++j) {
                const real xn = xs[j];
                g[(i * out_w + j) * 2 + 0] = t[0] * xn + t[1] * yn + t[2];
                g[(i * out_w + j) * 2 + 1] = t[3] * xn + t[4] * yn + t[5];
            }
        }
    }
    if (out->requires_grad) {
        Tensor* tp = theta.get();
        out->backward_fn = [tp, B, out_h, out_w, xs = std::move(xs), ys = std::move(ys)](
                               Tensor& self) {
            for (int bi = 0; bi < B; ++bi) {
                const real* g = self.grad.data() +
                                static_cast<std::int64_t>(bi) * out_h * out_w * 2;
                real* dt = tp->grad.data() + bi * 6;
                double acc[6] = {};
                for (int i = 0; i < out_h; ++i) {
                    const real yn = ys[i];
                    for (int j = 0; j < out_w; ++j) {
                        const real xn = xs[j];
                        const real gx = g[(i * out_w + j) * 2 + 0];
                        const real gy = g[(i * out_w + j) * 2 + 1];
                        acc[0] += static_cast<double>(gx) * xn;
                        acc[1] += static_cast<double>(gx) * yn;
                        acc[2] += gx;
                        acc[3] += static_cast<double>(gy) * xn;
                        acc[4] += static_cast<double>(gy) * yn;
                        acc[5] += gy;
                    }
                }
                for (int k = 0; k < 6; ++k) dt[k] += static_cast<real>(acc[k]);
            }
        };
    }
    return out;
}

TensorPtr grid_sample(const TensorPtr& x, const TensorPtr& grid) {
    require(x->ndim() == 4, "grid_sample: input must be NCHW");
    require(grid->ndim() == 4 && grid->dim(3) == 2, "grid_sample: grid must be BxHxWx2");
    require(x->dim(0) == grid->dim(0), "grid_sample: batch mismatch " + shape_str(x->shape) +
                                           " vs " + shape_str(grid->shape));
    const int B = x->dim(0), C = x->dim(1), H = x->dim(2), W = x->dim(3);
    const int Ho = grid->dim(1), Wo = grid->dim(2);
    auto out = result_of("grid_sample", {B, C, Ho, Wo}, {x, grid});
    grid_sample_forward(x->data.data(), grid->data.data(), out->data.data(), B, C, H, W, Ho, Wo);
    if (out->requires_grad) {
        Tensor *xp = x.get(), *gp = grid.get();
        out->backward_fn = [xp, gp, B, C, H, W, Ho, Wo](Tensor& self) {
            grid_sample_backward(xp->data.data(), gp->data.data(), self.grad.data(),
                                 xp->requires_grad ? xp->grad.data() : nullptr,
                                 gp->requires_grad ? gp->grad.data() : nullptr, B, C, H, W, Ho,
                                 Wo);
        };
    }
    return out;
}

TensorPtr sum(const TensorPtr& x) {
    auto out = result_of("sum", {1}, {x});
    double acc = 0;
    for (real v : x->data) acc += v;
    out->data[0] = static_cast<real>(acc);
    if (out->requires_grad) {
        Tensor* xp = x.get();
        out->backward_fn = [xp](Tensor& self) {
            const real g = self.grad[0];
            for (auto& gi : xp->grad) gi += g;
        };
    }
    return out;
}

TensorPtr mean(const TensorPtr& x) {
    auto out = result_of("mean", {1}, {x});
    double acc = 0;
    for (real v : x->data) acc += v;
    const std::int64_t n = x->numel();
    out->data[0] = static_cast<real>(acc / static_cast<double>(n));
    if (out->requires_grad) {
        Tensor* xp = x.get();
        out->backward_fn = [xp, n](Tensor& self) {
            const real g = self.grad[0] / static_cast<real>(n);
            for (auto& gi : xp->grad) gi += g;
        };
    }
    return out;
}

TensorPtr mse_loss(const TensorPtr& pred, const TensorPtr& target) {
    require(same_shape(*pred, *target), "mse_loss: shape mismatch " + shape_str(pred->shape) +
                                            " vs " + shape_str(target->shape));
    auto out = result_of("mse_loss", {1}, {pred, target});
    const std::int64_t n = pred->numel();
    double acc = 0;
    for (std::int64_t i = 0; i < n; ++i) {
        const double d = static_cast<double>(pred->data[i]) - target->data[i];
        acc += d * d;
    }
    out->data[0] = static_cast<real>(acc / static_cast<double>(n));
    if (out->requires_grad) {
        Tensor *pp = pred.get(), *tp = target.get();
        out->backward_fn = [pp, tp, n](Tensor& self) {
            const real g = self.grad[0] * real(2) / static_cast<real>(n);
            if (pp->requires_grad) {
                for (std::int64_t i = 0; i < n; ++i) {
                    pp->grad[i] += g * (pp->data[i] - tp->data[i]);
                }
            }
            if (tp->requires_grad) {
                for (std::int64_t i = 0; i < n; ++i) {
                    tp->grad[i] -= g * (pp->data[i] - tp->data[i]);
                }
            }
        };
    }
    return out;
}

TensorPtr bce_with_logits(const TensorPtr& logit, const TensorPtr& label01) {
    require(same_shape(*logit, *label01), "bce_with_logits: shape mismatch");
    auto out = result_of("bce_with_logits", {1}, {logit, label01});
    const std::int64_t n = logit->numel();
    double acc = 0;
    for (std::int64_t i = 0; i < n; ++i) {
        const double z = logit->data[i], y = label01->data[i];
        // max(z,0) - z*y + log(1 + exp(-|z|)) is stable for large |z|.
        acc += std::max(z, 0.0) - z * y + std::log1p(std::exp(-std::abs(z)));
    }
    out->data[0] = static_cast<real>(acc / static_cast<double>(n));
    if (out->requires_grad) {
        Tensor *zp = logit.get(), *yp = label01.get();
        require(!yp->requires_grad, "bce_with_logits: labels must not require grad");
        out->backward_fn = [zp, yp, n](Tensor& self) {
            const real g = self.grad[0] / static_cast<real>(n);
            for (std::int64_t i = 0; i < n; ++i) {
                zp->grad[i] += g * (sigmoid_scalar(zp->data[i]) - yp->data[i]);
            }
        };
    }
    return out;
}

TensorPtr softmax_cross_entropy(const TensorPtr& logits, const std::vector<int>& labels) {
    require(logits->ndim() == 2, "softmax_cross_entropy: expected BxK logits");
    const int B = logits->dim(0), K = logits->dim(1);
    require(static_cast<int>(labels.size()) == B, "softmax_cross_entropy: label count mismatch");
    auto out = result_of("softmax_ce", {1}, {logits});
    auto probs = std::make_shared<std::vector<real>>(static_cast<size_t>(logits->numel()));
    double acc = 0;
    for (int bi = 0; bi < B; ++bi) {
        require(labels[bi] >= 0 && labels[bi] < K, "softmax_cross_entropy: label out of range");
        const real* z = logits->data.data() + static_cast<std::int64_t>(bi) * K;
        real* p = probs->data() + static_cast<std::int64_t>(bi) * K;
        real m = z[0];
        for (int k = 1; k < K; ++k) m = std::max(m, z[k]);
        double denom = 0;
        for (int k = 0; k < K; ++k) denom += std::exp(static_cast<double>(z[k]) - m);
        const double lse = m + std::log(denom);
        for (int k = 0; k < K; ++k) {
            p[k] = static_cast<real>(std::exp(static_cast<double>(z[k]) - lse));
        }
        acc += lse - z[labels[bi]];
    }
    out->data[0] = static_cast<real>(acc / B);
    if (out->requires_grad) {
        Tensor* zp = logits.get();
        out->backward_fn = [zp, probs, labels, B, K](Tensor& self) {
            const real g = self.grad[0] / static_cast<real>(B);
            for (int bi = 0; bi < B; ++bi) {
                const real* p = probs->data() + static_cast<std::int64_t>(bi) * K;
                real* gz = zp->grad.data() + static_cast<std::int64_t>(bi) * K;
                for (int k = 0; k < K; ++k) {
                    gz[k] += g * (p[k] - (k == labels[bi] ? real(1) : real(0)));
                }
            }
        };
    }
    return out;
}

TensorPtr channel_std_maps(const TensorPtr& x) {
    require(x->ndim() == 4, "channel_std_maps: expected NCHW");
    const int B = x->dim(0), C = x->dim(1);
    const std::int64_t plane = static_cast<std::int64_t>(x->dim(2)) * x->dim(3);
    auto out = make_tensor(x->shape);
    out->op = "channel_std_maps";
    for (int bc = 0; bc < B * C; ++bc) {
        const real* p = x->data.data() + bc * plane;
        double sum = 0;
        for (std::int64_t i = 0; i < plane; ++i) sum += p[i];
        const double mean = sum / static_cast<double>(plane);
        double sq = 0;
        for (std::int64_t i = 0; i < plane; ++i) {
            const double d = p[i] - mean;
            sq += d * d;
        }
        const real sd = static_cast<real>(std::sqrt(sq / static_cast<double>(plane)));
        real* o = out->data.data() + bc * plane;
        std::fill(o, o + plane, sd);
    }
    return out;
}

}  // namespace canonify
