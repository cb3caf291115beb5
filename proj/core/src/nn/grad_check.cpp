#include "melvq/nn/grad_check.hpp"

#include <algorithm>
#include <cmath>

#include "melvq/errors.hpp"

namespace melvq::nn {

double grad_check(const std::function<TensorPtr()>& f, const std::vector<TensorPtr>& leaves,
                  double eps) {
    if (eps < 1e-6 || eps > 1e-3) throw ConfigError("grad_check: eps must be in [1e-6, 1e-3]");

    for (const auto& leaf : leaves) {
        leaf->requires_grad = true;
        leaf->zero_grad();
    }
    auto root = f();
    if (root->size() != 1) throw UsageError("grad_check: f must return a scalar");
    backward(root);

    double worst = 0.0;
    for (const auto& leaf : leaves) {
        leaf->ensure_grad();
        for (int i = 0; i < leaf->size(); ++i) {
            const double saved = leaf->data[i];
            leaf->data[i] = saved + eps;
            const double fp = f()->data[0];
            leaf->data[i] = saved - eps;
            const double fm = f()->data[0];
            leaf->data[i] = saved;
            const double numeric = (fp - fm) / (2.0 * eps);
            const double analytic = leaf->grad[i];
            const double err = std::abs(analytic - numeric) / std::max(1.0, std::abs(analytic));
            worst = std::max(worst, err);
        }
    }
    return worst;
}

}  // namespace melvq::nn
