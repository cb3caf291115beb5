#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "melvq/nn/tensor.hpp"

namespace melvq::nn {

struct AdamConfig {
    double lr = 3e-4;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
};

// A learnable tensor plus its optimizer state.
struct Parameter {
    std::string name;
    TensorPtr value;        // requires_grad = true
    std::vector<double> m;  // first moment, sized like value on first step
    std::vector<double> v;  // second moment
    std::int64_t step = 0;

    Parameter() = default;
    Parameter(std::string name_, TensorPtr value_);
};

// Bias-corrected Adam update using each parameter's accumulated grad.
// Throws NumericError naming the parameter if its gradient contains NaN.
void adam_step(const std::vector<Parameter*>& params, const AdamConfig& cfg);

void zero_grads(const std::vector<Parameter*>& params);

}  // namespace melvq::nn
