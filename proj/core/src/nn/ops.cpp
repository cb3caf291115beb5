#include "melvq/nn/ops.hpp"

#include <cmath>
#include <cstddef>
#include <utility>

#include "melvq/errors.hpp"
#include "eigen_util.hpp"
#include "node_util.hpp"

namespace melvq::nn {

namespace {

constexpr double kInvSqrt2 = 0.70710678118654752440;
constexpr double kInvSqrt2Pi = 0.39894228040143267794;

void check_same_shape(const TensorPtr& a, const TensorPtr& b, const char* op) {
    if (a->shape != b->shape) {
        throw DimensionError(std::string(op) + ": operand shapes differ");
    }
}

}  // namespace

// ---------------------------------------------------------------------------
// Elementwise
// ---------------------------------------------------------------------------

TensorPtr add(const TensorPtr& a, const TensorPtr& b) {
    check_same_shape(a, b, "add");
    auto out = result_node(a->shape, {a, b});
    const int n = out->size();
    for (int i = 0; i < n; ++i) out->data[i] = a->data[i] + b->data[i];
    auto* o = out.get();
    out->backward_fn = [o, a, b] {
        if (a->requires_grad) {
            a->ensure_grad();
            for (int i = 0; i < o->size(); ++i) a->grad[i] += o->grad[i];
        }
        if (b->requires_grad) {
            b->ensure_grad();
            for (int i = 0; i < o->size(); ++i) b->grad[i] += o->grad[i];
        }
    };
    return out;
}

TensorPtr sub(const TensorPtr& a, const TensorPtr& b) {
    check_same_shape(a, b, "sub");
    auto out = result_node(a->shape, {a, b});
    const int n = out->size();
    for (int i = 0; i < n; ++i) out->data[i] = a->data[i] - b->data[i];
    auto* o = out.get();
    out->backward_fn = [o, a, b] {
        if (a->requires_grad) {
            a->ensure_grad();
            for (int i = 0; i < o->size(); ++i) a->grad[i] += o->grad[i];
        }
        if (b->requires_grad) {
            b->ensure_grad();
            for (int i = 0; i < o->size(); ++i) b->grad[i] -= o->grad[i];
        }
    };
    return out;
}

TensorPtr mul(const TensorPtr& a, const TensorPtr& b) {
    check_same_shape(a, b, "mul");
    auto out = result_node(a->shape, {a, b});
    const int n = out->size();
    for (int i = 0; i < n; ++i) out->data[i] = a->data[i] * b->data[i];
    auto* o = out.get();
    out->backward_fn = [o, a, b] {
        if (a->requires_grad) {
            a->ensure_grad();
            for (int i = 0; i < o->size(); ++i) a->grad[i] += o->grad[i] * b->data[i];
        }
        if (b->requires_grad) {
            b->ensure_grad();
            for (int i = 0; i < o->size(); ++i) b->grad[i] += o->grad[i] * a->data[i];
        }
    };
    return out;
}

TensorPtr scale(const TensorPtr& a, double s) {
    auto out = result_node(a->shape, {a});
    const int n = out->size();
    for (int i = 0; i < n; ++i) out->data[i] = a->data[i] * s;
    auto* o = out.get();
    out->backward_fn = [o, a, s] {
        if (!a->requires_grad) return;
        a->ensure_grad();
        for (int i = 0; i < o->size(); ++i) a->grad[i] += o->grad[i] * s;
    };
    return out;
}

TensorPtr add_row_bias(const TensorPtr& x, const TensorPtr& bias) {
    if (x->rank() != 2 || bias->rank() != 1 || x->dim(1) != bias->dim(0)) {
        throw DimensionError("add_row_bias: expected [N, D] and [D]");
    }
    auto out = result_node(x->shape, {x, bias});
    const int rows = x->dim(0), cols = x->dim(1);
    for (int r = 0; r < rows; ++r) {
        for (int c = 0; c < cols; ++c) {
            out->data[static_cast<std::size_t>(r) * cols + c] =
                x->data[static_cast<std::size_t>(r) * cols + c] + bias->data[c];
        }
    }
    auto* o = out.get();
    out->backward_fn = [o, x, bias, rows, cols] {
        if (x->requires_grad) {
            x->ensure_grad();
            for (int i = 0; i < o->size(); ++i) x->grad[i] += o->grad[i];
        }
        if (bias->requires_grad) {
            bias->ensure_grad();
            for (int r = 0; r < rows; ++r) {
                for (int c = 0; c < cols; ++c) {
                    bias->grad[c] += o->grad[static_cast<std::size_t>(r) * cols + c];
                }
            }
        }
    };
    return out;
}

TensorPtr add_channel_bias(const TensorPtr& x, const TensorPtr& bias) {
    if (x->rank() != 4 || bias->rank() != 1 || x->dim(1) != bias->dim(0)) {
        throw DimensionError("add_channel_bias: expected [B, C, H, W] and [C]");
    }
    auto out = result_node(x->shape, {x, bias});
    const int batch = x->dim(0), channels = x->dim(1), hw = x->dim(2) * x->dim(3);
    std::size_t idx = 0;
    for (int b = 0; b < batch; ++b) {
        for (int c = 0; c < channels; ++c) {
            const double bc = bias->data[c];
            for (int i = 0; i < hw; ++i, ++idx) out->data[idx] = x->data[idx] + bc;
        }
    }
    auto* o = out.get();
    out->backward_fn = [o, x, bias, batch, channels, hw] {
        if (x->requires_grad) {
            x->ensure_grad();
            for (int i = 0; i < o->size(); ++i) x->grad[i] += o->grad[i];
        }
        if (bias->requires_grad) {
            bias->ensure_grad();
            std::size_t idx = 0;
            for (int b = 0; b < batch; ++b) {
                for (int c = 0; c < channels; ++c) {
                    double acc = 0.0;
                    for (int i = 0; i < hw; ++i, ++idx) acc += o->grad[idx];
                    bias->grad[c] += acc;
                }
            }
        }
    };
    return out;
}

TensorPtr relu(const TensorPtr& x) {
    auto out = result_node(x->shape, {x});
    const int n = out->size();
    for (int i = 0; i < n; ++i) out->data[i] = x->data[i] > 0.0 ? x->data[i] : 0.0;
    auto* o = out.get();
    out->backward_fn = [o, x] {
        if (!x->requires_grad) return;
        x->ensure_grad();
        for (int i = 0; i < o->size(); ++i) {
            if (x->data[i] > 0.0) x->grad[i] += o->grad[i];
        }
    };
    return out;
}

TensorPtr gelu(const TensorPtr& x) {
    auto out = result_node(x->shape, {x});
    const int n = out->size();
    for (int i = 0; i < n; ++i) {
        const double v = x->data[i];
        out->data[i] = 0.5 * v * (1.0 + std::erf(v * kInvSqrt2));
    }
    auto* o = out.get();
    out->backward_fn = [o, x] {
        if (!x->requires_grad) return;
        x->ensure_grad();
        for (int i = 0; i < o->size(); ++i) {
            const double v = x->data[i];
            const double cdf = 0.5 * (1.0 + std::erf(v * kInvSqrt2));
            const double pdf = kInvSqrt2Pi * std::exp(-0.5 * v * v);
            x->grad[i] += o->grad[i] * (cdf + v * pdf);
        }
    };
    return out;
}

TensorPtr sigmoid(const TensorPtr& x) {
    auto out = result_node(x->shape, {x});
    const int n = out->size();
    for (int i = 0; i < n; ++i) out->data[i] = 1.0 / (1.0 + std::exp(-x->data[i]));
    auto* o = out.get();
    out->backward_fn = [o, x] {
        if (!x->requires_grad) return;
        x->ensure_grad();
        for (int i = 0; i < o->size(); ++i) {
            const double y = o->data[i];
            x->grad[i] += o->grad[i] * y * (1.0 - y);
        }
    };
    return out;
}

TensorPtr reshape(const TensorPtr& x, std::vector<int> new_shape) {
    if (numel(new_shape) != x->size()) {
        throw DimensionError("reshape: element count mismatch");
    }
    auto out = result_node(std::move(new_shape), {x});
    out->data = x->data;
    auto* o = out.get();
    out->backward_fn = [o, x] {
        if (!x->requires_grad) return;
        x->ensure_grad();
        for (int i = 0; i < o->size(); ++i) x->grad[i] += o->grad[i];
    };
    return out;
}

TensorPtr sum(const TensorPtr& x) {
    auto out = result_node({1}, {x});
    double acc = 0.0;
    for (double v : x->data) acc += v;
    out->data[0] = acc;
    auto* o = out.get();
    out->backward_fn = [o, x] {
        if (!x->requires_grad) return;
        x->ensure_grad();
        const double g = o->grad[0];
        for (auto& gv : x->grad) gv += g;
    };
    return out;
}

TensorPtr mean(const TensorPtr& x) {
    auto out = sum(x);
    return scale(out, 1.0 / x->size());
}

// ---------------------------------------------------------------------------
// Linear algebra
// ---------------------------------------------------------------------------

TensorPtr matmul(const TensorPtr& a, const TensorPtr& b) {
    if (a->rank() != 2 || b->rank() != 2 || a->dim(1) != b->dim(0)) {
        throw DimensionError("matmul: expected [M, K] x [K, N]");
    }
    const int m = a->dim(0), k = a->dim(1), n = b->dim(1);
    auto out = result_node({m, n}, {a, b});
    map_mat(out->data.data(), m, n).noalias() =
        map_mat(a->data.data(), m, k) * map_mat(b->data.data(), k, n);
    auto* o = out.get();
    out->backward_fn = [o, a, b, m, k, n] {
        auto dout = map_mat(o->grad.data(), m, n);
        if (a->requires_grad) {
            a->ensure_grad();
            map_mat(a->grad.data(), m, k).noalias() +=
                dout * map_mat(b->data.data(), k, n).transpose();
        }
        if (b->requires_grad) {
            b->ensure_grad();
            map_mat(b->grad.data(), k, n).noalias() +=
                map_mat(a->data.data(), m, k).transpose() * dout;
        }
    };
    return out;
}

TensorPtr softmax_lastdim(const TensorPtr& x) {
    if (x->rank() < 1) throw DimensionError("softmax_lastdim: rank must be >= 1");
    const int cols = x->dim(x->rank() - 1);
    const int rows = x->size() / cols;
    auto out = result_node(x->shape, {x});
    for (int r = 0; r < rows; ++r) {
        const double* in = x->data.data() + static_cast<std::size_t>(r) * cols;
        double* y = out->data.data() + static_cast<std::size_t>(r) * cols;
        double mx = in[0];
        for (int c = 1; c < cols; ++c) mx = std::max(mx, in[c]);
        double denom = 0.0;
        for (int c = 0; c < cols; ++c) {
            y[c] = std::exp(in[c] - mx);
            denom += y[c];
        }
        for (int c = 0; c < cols; ++c) y[c] /= denom;
    }
    auto* o = out.get();
    out->backward_fn = [o, x, rows, cols] {
        if (!x->requires_grad) return;
        x->ensure_grad();
        for (int r = 0; r < rows; ++r) {
            const double* y = o->data.data() + static_cast<std::size_t>(r) * cols;
            const double* dy = o->grad.data() + static_cast<std::size_t>(r) * cols;
            double* dx = x->grad.data() + static_cast<std::size_t>(r) * cols;
            double dot = 0.0;
            for (int c = 0; c < cols; ++c) dot += dy[c] * y[c];
            for (int c = 0; c < cols; ++c) dx[c] += y[c] * (dy[c] - dot);
        }
    };
    return out;
}

TensorPtr layer_norm(const TensorPtr& x, const TensorPtr& gamma, const TensorPtr& beta,
                     double eps) {
    const int cols = x->dim(x->rank() - 1);
    if (gamma->size() != cols || beta->size() != cols) {
        throw DimensionError("layer_norm: gamma/beta must match the last dimension");
    }
    const int rows = x->size() / cols;
    auto out = result_node(x->shape, {x, gamma, beta});
    // Stash per-row mean and inverse stddev for the backward pass.
    auto stats = std::make_shared<std::vector<double>>(static_cast<std::size_t>(rows) * 2);
    for (int r = 0; r < rows; ++r) {
        const double* in = x->data.data() + static_cast<std::size_t>(r) * cols;
        double* y = out->data.data() + static_cast<std::size_t>(r) * cols;
        double mu = 0.0;
        for (int c = 0; c < cols; ++c) mu += in[c];
        mu /= cols;
        double var = 0.0;
        for (int c = 0; c < cols; ++c) var += (in[c] - mu) * (in[c] - mu);
        var /= cols;
        const double inv_std = 1.0 / std::sqrt(var + eps);
        (*stats)[2 * r] = mu;
        (*stats)[2 * r + 1] = inv_std;
        for (int c = 0; c < cols; ++c) {
            y[c] = gamma->data[c] * (in[c] - mu) * inv_std + beta->data[c];
        }
    }
    auto* o = out.get();
    out->backward_fn = [o, x, gamma, beta, rows, cols, stats] {
        if (gamma->requires_grad) gamma->ensure_grad();
        if (beta->requires_grad) beta->ensure_grad();
        if (x->requires_grad) x->ensure_grad();
        for (int r = 0; r < rows; ++r) {
            const double mu = (*stats)[2 * r];
            const double inv_std = (*stats)[2 * r + 1];
            const double* in = x->data.data() + static_cast<std::size_t>(r) * cols;
            const double* dy = o->grad.data() + static_cast<std::size_t>(r) * cols;
            if (gamma->requires_grad || beta->requires_grad) {
                for (int c = 0; c < cols; ++c) {
                    const double xhat = (in[c] - mu) * inv_std;
                    if (gamma->requires_grad) gamma->grad[c] += dy[c] * xhat;
                    if (beta->requires_grad) beta->grad[c] += dy[c];
                }
            }
            if (x->requires_grad) {
                double* dx = x->grad.data() + static_cast<std::size_t>(r) * cols;
                double sum_dxhat = 0.0, sum_dxhat_xhat = 0.0;
                for (int c = 0; c < cols; ++c) {
                    const double xhat = (in[c] - mu) * inv_std;
                    const double dxhat = dy[c] * gamma->data[c];
                    sum_dxhat += dxhat;
                    sum_dxhat_xhat += dxhat * xhat;
                }
                for (int c = 0; c < cols; ++c) {
                    const double xhat = (in[c] - mu) * inv_std;
                    const double dxhat = dy[c] * gamma->data[c];
                    dx[c] += inv_std *
                             (dxhat - (sum_dxhat + xhat * sum_dxhat_xhat) / cols);
                }
            }
        }
    };
    return out;
}

TensorPtr embedding(const TensorPtr& table, const std::vector<int>& ids) {
    if (table->rank() != 2) throw DimensionError("embedding: table must be [V, D]");
    const int vocab = table->dim(0), dim = table->dim(1);
    for (int id : ids) {
        if (id < 0 || id >= vocab) throw RangeError("embedding: id out of range");
    }
    const int n = static_cast<int>(ids.size());
    auto out = result_node({n, dim}, {table});
    for (int i = 0; i < n; ++i) {
        const double* src = table->data.data() + static_cast<std::size_t>(ids[i]) * dim;
        std::copy(src, src + dim, out->data.data() + static_cast<std::size_t>(i) * dim);
    }
    auto* o = out.get();
    auto ids_copy = std::make_shared<std::vector<int>>(ids);
    out->backward_fn = [o, table, ids_copy, n, dim] {
        if (!table->requires_grad) return;
        table->ensure_grad();
        for (int i = 0; i < n; ++i) {
            double* dst = table->grad.data() + static_cast<std::size_t>((*ids_copy)[i]) * dim;
            const double* src = o->grad.data() + static_cast<std::size_t>(i) * dim;
            for (int d = 0; d < dim; ++d) dst[d] += src[d];
        }
    };
    return out;
}

TensorPtr pairwise_sqdist(const TensorPtr& x, const TensorPtr& y) {
    if (x->rank() != 2 || y->rank() != 2 || x->dim(1) != y->dim(1)) {
        throw DimensionError("pairwise_sqdist: expected [M, L] and [N, L]");
    }
    const int m = x->dim(0), n = y->dim(0), l = x->dim(1);
    auto out = result_node({m, n}, {x, y});
    for (int i = 0; i < m; ++i) {
        const double* xi = x->data.data() + static_cast<std::size_t>(i) * l;
        for (int j = 0; j < n; ++j) {
            const double* yj = y->data.data() + static_cast<std::size_t>(j) * l;
            double acc = 0.0;
            for (int c = 0; c < l; ++c) {
                const double d = xi[c] - yj[c];
                acc += d * d;
            }
            out->data[static_cast<std::size_t>(i) * n + j] = acc;
        }
    }
    auto* o = out.get();
    out->backward_fn = [o, x, y, m, n, l] {
        auto dd = map_mat(o->grad.data(), m, n);
        auto xm = map_mat(x->data.data(), m, l);
        auto ym = map_mat(y->data.data(), n, l);
        if (x->requires_grad) {
            x->ensure_grad();
            auto dx = map_mat(x->grad.data(), m, l);
            dx.noalias() += 2.0 * (dd.rowwise().sum().asDiagonal() * xm - dd * ym);
        }
        if (y->requires_grad) {
            y->ensure_grad();
            auto dy = map_mat(y->grad.data(), n, l);
            dy.noalias() += 2.0 * (dd.colwise().sum().asDiagonal() * ym - dd.transpose() * xm);
        }
    };
    return out;
}

// ---------------------------------------------------------------------------
// Losses
// ---------------------------------------------------------------------------

TensorPtr mse(const TensorPtr& a, const TensorPtr& b) {
    check_same_shape(a, b, "mse");
    auto out = result_node({1}, {a, b});
    const int n = a->size();
    double acc = 0.0;
    for (int i = 0; i < n; ++i) {
        const double d = a->data[i] - b->data[i];
        acc += d * d;
    }
    out->data[0] = acc / n;
    auto* o = out.get();
    out->backward_fn = [o, a, b, n] {
        const double g = o->grad[0] * 2.0 / n;
        if (a->requires_grad) {
            a->ensure_grad();
            for (int i = 0; i < n; ++i) a->grad[i] += g * (a->data[i] - b->data[i]);
        }
        if (b->requires_grad) {
            b->ensure_grad();
            for (int i = 0; i < n; ++i) b->grad[i] -= g * (a->data[i] - b->data[i]);
        }
    };
    return out;
}

TensorPtr cross_entropy(const TensorPtr& logits, const std::vector<int>& targets) {
    if (logits->rank() != 2) throw DimensionError("cross_entropy: logits must be [N, V]");
    const int n = logits->dim(0), vocab = logits->dim(1);
    if (static_cast<int>(targets.size()) != n) {
        throw UsageError("cross_entropy: one target per logits row required");
    }
    for (int t : targets) {
        if (t < 0 || t >= vocab) throw RangeError("cross_entropy: target out of range");
    }
    auto out = result_node({1}, {logits});
    // Softmax probabilities are kept for the backward pass.
    auto probs = std::make_shared<std::vector<double>>(logits->data.size());
    double total = 0.0;
    for (int r = 0; r < n; ++r) {
        const double* in = logits->data.data() + static_cast<std::size_t>(r) * vocab;
        double* p = probs->data() + static_cast<std::size_t>(r) * vocab;
        double mx = in[0];
        for (int c = 1; c < vocab; ++c) mx = std::max(mx, in[c]);
        double denom = 0.0;
        for (int c = 0; c < vocab; ++c) {
            p[c] = std::exp(in[c] - mx);
            denom += p[c];
        }
        const double log_denom = std::log(denom);
        for (int c = 0; c < vocab; ++c) p[c] /= denom;
        total += log_denom + mx - in[targets[r]];
    }
    out->data[0] = total / n;
    auto* o = out.get();
    auto targets_copy = std::make_shared<std::vector<int>>(targets);
    out->backward_fn = [o, logits, probs, targets_copy, n, vocab] {
        if (!logits->requires_grad) return;
        logits->ensure_grad();
        const double g = o->grad[0] / n;
        for (int r = 0; r < n; ++r) {
            const double* p = probs->data() + static_cast<std::size_t>(r) * vocab;
            double* dl = logits->grad.data() + static_cast<std::size_t>(r) * vocab;
            for (int c = 0; c < vocab; ++c) dl[c] += g * p[c];
            dl[(*targets_copy)[r]] -= g;
        }
    };
    return out;
}

TensorPtr straight_through(const TensorPtr& z, const std::vector<double>& values) {
    if (static_cast<int>(values.size()) != z->size()) {
        throw DimensionError("straight_through: value count must match z");
    }
    auto out = result_node(z->shape, {z});
    out->data = values;
    auto* o = out.get();
    out->backward_fn = [o, z] {
        if (!z->requires_grad) return;
        z->ensure_grad();
        for (int i = 0; i < o->size(); ++i) z->grad[i] += o->grad[i];
    };
    return out;
}

}  // namespace melvq::nn
