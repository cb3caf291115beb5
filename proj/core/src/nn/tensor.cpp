#include "melvq/nn/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <unordered_set>

#include "melvq/errors.hpp"

namespace melvq::nn {

int numel(const std::vector<int>& shape) {
    int n = 1;
    for (int d : shape) {
        if (d <= 0) throw DimensionError("tensor dimensions must be positive");
        n *= d;
    }
    return n;
}

Tensor::Tensor(std::vector<int> shape_, bool requires_grad_)
    : shape(std::move(shape_)),
      data(static_cast<std::size_t>(numel(shape)), 0.0),
      requires_grad(requires_grad_) {}

Tensor::Tensor(std::vector<int> shape_, std::vector<double> data_, bool requires_grad_)
    : shape(std::move(shape_)), data(std::move(data_)), requires_grad(requires_grad_) {
    if (static_cast<int>(data.size()) != numel(shape)) {
        throw DimensionError("tensor data length does not match shape");
    }
}

void Tensor::ensure_grad() {
    if (grad.size() != data.size()) grad.assign(data.size(), 0.0);
}

void Tensor::zero_grad() {
    if (!grad.empty()) std::fill(grad.begin(), grad.end(), 0.0);
}

TensorPtr make_tensor(std::vector<int> shape, bool requires_grad) {
    return std::make_shared<Tensor>(std::move(shape), requires_grad);
}

TensorPtr make_tensor(std::vector<int> shape, std::vector<double> data, bool requires_grad) {
    return std::make_shared<Tensor>(std::move(shape), std::move(data), requires_grad);
}

TensorPtr scalar_tensor(double v) {
    return make_tensor({1}, std::vector<double>{v});
}

TensorPtr randn(std::vector<int> shape, Rng& rng, double stddev, bool requires_grad) {
    auto t = make_tensor(std::move(shape), requires_grad);
    for (auto& x : t->data) x = stddev * rng.normal();
    return t;
}

TensorPtr randu(std::vector<int> shape, Rng& rng, double lo, double hi, bool requires_grad) {
    auto t = make_tensor(std::move(shape), requires_grad);
    for (auto& x : t->data) x = rng.uniform(lo, hi);
    return t;
}

TensorPtr kaiming_uniform(std::vector<int> shape, int fan_in, Rng& rng, bool requires_grad) {
    if (fan_in <= 0) throw DimensionError("kaiming_uniform: fan_in must be positive");
    const double bound = std::sqrt(6.0 / static_cast<double>(fan_in));
    return randu(std::move(shape), rng, -bound, bound, requires_grad);
}

void backward(const TensorPtr& root) {
    if (!root) throw UsageError("backward: null root");
    if (root->size() != 1) throw UsageError("backward: root must be a scalar");
    if (!root->requires_grad) return;  // nothing upstream requires grad

    // Reverse topological order via iterative post-order DFS.
    std::vector<Tensor*> order;
    std::unordered_set<Tensor*> visited;
    std::vector<std::pair<Tensor*, std::size_t>> stack;
    stack.emplace_back(root.get(), 0);
    visited.insert(root.get());
    while (!stack.empty()) {
        auto& [node, next] = stack.back();
        if (next < node->parents.size()) {
            Tensor* parent = node->parents[next++].get();
            if (visited.insert(parent).second) stack.emplace_back(parent, 0);
        } else {
            order.push_back(node);
            stack.pop_back();
        }
    }

    for (Tensor* node : order) {
        if (node->requires_grad) node->ensure_grad();
    }
    root->grad[0] = 1.0;
    for (auto it = order.rbegin(); it != order.rend(); ++it) {
        Tensor* node = *it;
        if (node->requires_grad && node->backward_fn) node->backward_fn();
    }
}

}  // namespace melvq::nn
