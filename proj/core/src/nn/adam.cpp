#include "melvq/nn/adam.hpp"

#include <cmath>

#include "melvq/errors.hpp"

namespace melvq::nn {

Parameter::Parameter(std::string name_, TensorPtr value_)
    : name(std::move(name_)), value(std::move(value_)) {
    value->requires_grad = true;
}

void adam_step(const std::vector<Parameter*>& params, const AdamConfig& cfg) {
    if (cfg.lr <= 0.0 || cfg.eps <= 0.0 || cfg.beta1 <= 0.0 || cfg.beta1 >= 1.0 ||
        cfg.beta2 <= 0.0 || cfg.beta2 >= 1.0) {
        throw ConfigError("adam_step: invalid optimizer configuration");
    }
    for (Parameter* p : params) {
        auto& t = *p->value;
        t.ensure_grad();
        const std::size_t n = t.data.size();
        if (p->m.size() != n) p->m.assign(n, 0.0);
        if (p->v.size() != n) p->v.assign(n, 0.0);
        for (std::size_t i = 0; i < n; ++i) {
            if (std::isnan(t.grad[i])) {
                throw NumericError("adam_step: NaN gradient in parameter '" + p->name + "'");
            }
        }
        p->step += 1;
        const double bc1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(p->step));
        const double bc2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(p->step));
        for (std::size_t i = 0; i < n; ++i) {
            const double g = t.grad[i];
            p->m[i] = cfg.beta1 * p->m[i] + (1.0 - cfg.beta1) * g;
            p->v[i] = cfg.beta2 * p->v[i] + (1.0 - cfg.beta2) * g * g;
            const double mhat = p->m[i] / bc1;
            const double vhat = p->v[i] / bc2;
            t.data[i] -= cfg.lr * mhat / (std::sqrt(vhat) + cfg.eps);
        }
    }
}

void zero_grads(const std::vector<Parameter*>& params) {
    for (Parameter* p : params) p->value->zero_grad();
}

}  // namespace melvq::nn
