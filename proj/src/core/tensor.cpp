#include "core/tensor.h"

#include <unordered_set>

namespace canonify {

TensorPtr make_tensor(std::vector<int> shape, bool requires_grad) {
    return std::make_shared<Tensor>(std::move(shape), requires_grad);
}

TensorPtr tensor_of(std::vector<int> shape, std::vector<real> values, bool requires_grad) {
    auto t = std::make_shared<Tensor>(std::move(shape), requires_grad);
    if (static_cast<std::int64_t>(values.size()) != t->numel()) {
        throw std::invalid_argument("tensor_of: value count does not match shape " +
                                    shape_str(t->shape));
    }
    t->data = std::move(values);
    return t;
}

TensorPtr scalar_tensor(real v, bool requires_grad) {
    auto t = std::make_shared<Tensor>(std::vector<int>{1}, requires_grad);
    t->data[0] = v;
    return t;
}

std::string shape_str(const std::vector<int>& s) {
    std::string out = "[";
    for (size_t i = 0; i < s.size(); ++i) {
        if (i) out += "x";
        out += std::to_string(s[i]);
    }
    return out + "]";
}

namespace {

// Iterative post-order DFS over input edges. The input order of each node is
// fixed at construction, so the resulting order is deterministic.
void topo_order(Tensor* root, std::vector<Tensor*>& order) {
    std::unordered_set<Tensor*> visited;
    std::vector<std::pair<Tensor*, size_t>> stack;
    stack.emplace_back(root, 0);
    visited.insert(root);
    while (!stack.empty()) {
        auto& [node, next] = stack.back();
        if (next < node->inputs.size()) {
            Tensor* child = node->inputs[next++].get();
            if (child->requires_grad && visited.insert(child).second) {
                stack.emplace_back(child, 0);
            }
        } else {
            order.push_back(node);
            stack.pop_back();
        }
    }
}

}  // namespace

void backward(const TensorPtr& loss) {
    if (!loss) throw std::invalid_argument("backward: null tensor");
    if (loss->numel() != 1) {
        throw std::logic_error("backward: loss must be scalar, got " + shape_str(loss->shape));
    }
    if (!loss->requires_grad) return;

    std::vector<Tensor*> order;
    topo_order(loss.get(), order);

    // Each pass recomputes intermediate grads from scratch and accumulates
    // into leaves, so repeated passes sum like independent ones.
    for (Tensor* node : order) {
        if (!node->is_leaf()) {
            node->ensure_grad();
            node->zero_grad();
        }
    }

    loss->ensure_grad();
    loss->grad[0] += real(1);

    for (auto it = order.rbegin(); it != order.rend(); ++it) {
        Tensor* node = *it;
        if (node->backward_fn) {
            for (auto& in : node->inputs) {
                if (in->requires_grad) in->ensure_grad();
            }
            node->backward_fn(*node);
        }
    }
}

TensorPtr detach(const TensorPtr& t) {
    auto out = std::make_shared<Tensor>();
    out->shape = t->shape;
    out->data = t->data;
    return out;
}

void zero_all_grads(const TensorPtr& root) {
    std::unordered_set<Tensor*> visited;
    std::vector<Tensor*> stack{root.get()};
    visited.insert(root.get());
    while (!stack.empty()) {
        Tensor* node = stack.back();
        stack.pop_back();
        node->zero_grad();
        for (auto& in : node->inputs) {
            if (visited.insert(in.get()).second) stack.push_back(in.get());
        }
    }
}

}  // namespace canonify
