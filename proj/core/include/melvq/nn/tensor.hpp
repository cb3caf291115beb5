#pragma once

#include <functional>
#include <memory>
#include <vector>

#include "melvq/rng.hpp"

namespace melvq::nn {

struct Tensor;
using TensorPtr = std::shared_ptr<Tensor>;

int numel(const std::vector<int>& shape);

// Dense row-major tensor that doubles as an autodiff graph node. Ops in
// ops.hpp build a DAG of these; backward() walks it in reverse topological
// order. Interior nodes require grad iff any parent does.
struct Tensor : std::enable_shared_from_this<Tensor> {
    std::vector<int> shape;
    std::vector<double> data;
    std::vector<double> grad;  // sized like data once ensure_grad() runs; empty otherwise
    bool requires_grad = false;

    std::vector<TensorPtr> parents;
    std::function<void()> backward_fn;

    Tensor() = default;
    Tensor(std::vector<int> shape_, bool requires_grad_);
    Tensor(std::vector<int> shape_, std::vector<double> data_, bool requires_grad_ = false);

    int size() const { return static_cast<int>(data.size()); }
    int rank() const { return static_cast<int>(shape.size()); }
    int dim(int i) const { return shape[static_cast<std::size_t>(i)]; }

    void ensure_grad();
    void zero_grad();
    bool same_shape(const Tensor& other) const { return shape == other.shape; }
};

TensorPtr make_tensor(std::vector<int> shape, bool requires_grad = false);
TensorPtr make_tensor(std::vector<int> shape, std::vector<double> data, bool requires_grad = false);
TensorPtr scalar_tensor(double v);
TensorPtr randn(std::vector<int> shape, Rng& rng, double stddev, bool requires_grad = false);
TensorPtr randu(std::vector<int> shape, Rng& rng, double lo, double hi, bool requires_grad = false);
// Uniform(-sqrt(6/fan_in), +sqrt(6/fan_in)); conv and linear weight init.
TensorPtr kaiming_uniform(std::vector<int> shape, int fan_in, Rng& rng, bool requires_grad = true);

// Reverse-mode accumulation from a scalar root (seeds d(root)/d(root) = 1).
void backward(const TensorPtr& root);

}  // namespace melvq::nn
