#pragma once

#include <vector>

#include "core/tensor.h"

namespace canonify {

enum class Activation { relu, sigmoid, tanh };

// Elementwise / structural
TensorPtr add(const TensorPtr& a, const TensorPtr& b);
TensorPtr sub(const TensorPtr& a, const TensorPtr& b);
TensorPtr mul(const TensorPtr& a, const TensorPtr& b);
TensorPtr scale(const TensorPtr& a, real s);
TensorPtr activation(const TensorPtr& x, Activation kind);
TensorPtr relu(const TensorPtr& x);
TensorPtr sigmoid_op(const TensorPtr& x);
TensorPtr tanh_op(const TensorPtr& x);
TensorPtr reshape(const TensorPtr& x, std::vector<int> shape);
TensorPtr concat_channels(const TensorPtr& a, const TensorPtr& b);
TensorPtr concat_batch(const TensorPtr& a, const TensorPtr& b);
TensorPtr slice_batch(const TensorPtr& x, int from, int to);
TensorPtr center_crop_nchw(const TensorPtr& x, int out_h, int out_w);

// Layers
TensorPtr conv2d(const TensorPtr& x, const TensorPtr& w, const TensorPtr& b, int stride, int pad);
TensorPtr linear(const TensorPtr& x, const TensorPtr& w, const TensorPtr& b);
TensorPtr batch_norm(const TensorPtr& x, const TensorPtr& gamma, const TensorPtr& beta,
                     const TensorPtr& running_mean, const TensorPtr& running_var, bool train,
                     real momentum, real eps);
TensorPtr maxpool2x2(const TensorPtr& x);
TensorPtr upsample2x(const TensorPtr& x);

// Spatial transformer pieces
TensorPtr affine_grid(const TensorPtr& theta, int out_h, int out_w);
TensorPtr grid_sample(const TensorPtr& x, const TensorPtr& grid);

// Reductions / losses
TensorPtr sum(const TensorPtr& x);
TensorPtr mean(const TensorPtr& x);
TensorPtr mse_loss(const TensorPtr& pred, const TensorPtr& target);
TensorPtr bce_with_logits(const TensorPtr& logit, const TensorPtr& label01);
TensorPtr softmax_cross_entropy(const TensorPtr& logits, const std::vector<int>& labels);

// Per-sample, per-channel spatial standard deviation (population form),
// broadcast to a constant map. The branch is a gradient stop: the result is a
// leaf regardless of the input's requires_grad.
TensorPtr channel_std_maps(const TensorPtr& x);

}  // namespace canonify
