#pragma once

#include <utility>
#include <vector>

#include "melvq/nn/tensor.hpp"

namespace melvq::nn {

// Allocates an op result wired to its parents; requires_grad propagates up.
inline TensorPtr result_node(std::vector<int> shape, std::vector<TensorPtr> parents) {
    auto out = make_tensor(std::move(shape));
    for (const auto& p : parents) {
        if (p->requires_grad) out->requires_grad = true;
    }
    out->parents = std::move(parents);
    return out;
}

}  // namespace melvq::nn
