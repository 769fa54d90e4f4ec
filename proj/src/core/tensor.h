#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <stdexcept>
#include <string>
#include <vector>

#include "core/real.h"

namespace canonify {

class Tensor;
using TensorPtr = std::shared_ptr<Tensor>;

// Dense row-major f32 (or f64) tensor participating in a reverse-mode graph.
// Non-leaf tensors record their inputs and a backward rule; backward() walks
// the graph in reverse topological order and accumulates into .grad.
class Tensor {
public:
    std::vector<int> shape;
    std::vector<real> data;
    std::vector<real> grad;  // allocated on first accumulation
    bool requires_grad = false;

    std::vector<TensorPtr> inputs;
    std::function<void(Tensor&)> backward_fn;  // null for leaves
    const char* op = "leaf";

    Tensor() = default;
    explicit Tensor(std::vector<int> s, bool req = false) : shape(std::move(s)), requires_grad(req) {
        data.assign(static_cast<size_t>(numel()), real(0));
    }

    std::int64_t numel() const {
        std::int64_t n = 1;
        for (int d : shape) n *= d;
        return n;
    }
    int ndim() const { return static_cast<int>(shape.size()); }
    int dim(int i) const { return shape[static_cast<size_t>(i)]; }
    bool is_leaf() const { return inputs.empty(); }

    void ensure_grad() {
        if (grad.size() != data.size()) grad.assign(data.size(), real(0));
    }
    void zero_grad() {
        if (!grad.empty()) grad.assign(grad.size(), real(0));
    }

    real item() const {
        if (numel() != 1) throw std::logic_error("item() on non-scalar tensor");
        return data[0];
    }
};

TensorPtr make_tensor(std::vector<int> shape, bool requires_grad = false);
TensorPtr tensor_of(std::vector<int> shape, std::vector<real> values, bool requires_grad = false);
TensorPtr scalar_tensor(real v, bool requires_grad = false);

inline bool same_shape(const Tensor& a, const Tensor& b) { return a.shape == b.shape; }

std::string shape_str(const std::vector<int>& s);

// Accumulates d(loss)/dx into every reachable tensor with requires_grad set.
// loss must be scalar. Repeated calls without zeroing grads accumulate.
void backward(const TensorPtr& loss);

// Leaf copy of a tensor's values with the graph severed.
TensorPtr detach(const TensorPtr& t);

// Zeroes grads of every tensor reachable from root (the root included).
void zero_all_grads(const TensorPtr& root);

}  // namespace canonify
