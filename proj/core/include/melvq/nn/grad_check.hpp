#pragma once

#include <functional>
#include <vector>

#include "melvq/nn/tensor.hpp"

namespace melvq::nn {

// Compares analytic gradients against central finite differences.
//
// `f` must rebuild the graph from the given leaves on every call and return a
// scalar root; it is evaluated once with backward() for the analytic side and
// 2 * numel(leaves) times for the numeric side. Returns
//   max over leaf coordinates of |analytic - numeric| / max(1, |analytic|).
double grad_check(const std::function<TensorPtr()>& f, const std::vector<TensorPtr>& leaves,
                  double eps = 1e-5);

}  // namespace melvq::nn
