#include <cmath>
#include <cstddef>
#include <memory>
#include <vector>

#include "melvq/errors.hpp"
#include "melvq/nn/ops.hpp"
#include "eigen_util.hpp"
#include "node_util.hpp"

namespace melvq::nn {

namespace {

// Gathers head h of [B, T, D] into a contiguous [T, dh] buffer.
void gather_head(const double* src, int t_len, int d_model, int head, int dh, double* dst) {
    for (int t = 0; t < t_len; ++t) {
        const double* row = src + static_cast<std::size_t>(t) * d_model + head * dh;
        std::copy(row, row + dh, dst + static_cast<std::size_t>(t) * dh);
    }
}

void scatter_head_add(const double* src, int t_len, int d_model, int head, int dh, double* dst) {
    for (int t = 0; t < t_len; ++t) {
        double* row = dst + static_cast<std::size_t>(t) * d_model + head * dh;
        const double* s = src + static_cast<std::size_t>(t) * dh;
        for (int c = 0; c < dh; ++c) row[c] += s[c];
    }
}

}  // namespace

TensorPtr attention_core(const TensorPtr& q, const TensorPtr& k, const TensorPtr& v,
                         int n_heads) {
    if (q->rank() != 3 || k->shape != q->shape || v->shape != q->shape) {
        throw DimensionError("attention_core: q, k, v must share shape [B, T, D]");
    }
    const int batch = q->dim(0), t_len = q->dim(1), d_model = q->dim(2);
    if (n_heads < 1 || d_model % n_heads != 0) {
        throw ConfigError("attention_core: embed dim must be divisible by n_heads");
    }
    const int dh = d_model / n_heads;
    const double inv_sqrt_dh = 1.0 / std::sqrt(static_cast<double>(dh));

    auto out = result_node(q->shape, {q, k, v});
    // Attention probabilities are kept (as f32, they live in [0, 1]) for the
    // backward pass; everything else is re-gathered on demand.
    auto probs = std::make_shared<std::vector<float>>(
        static_cast<std::size_t>(batch) * n_heads * t_len * t_len);

    const std::size_t plane = static_cast<std::size_t>(t_len) * d_model;
    std::vector<double> qh(static_cast<std::size_t>(t_len) * dh), kh(qh.size()), vh(qh.size()),
        oh(qh.size());
    std::vector<double> scores(static_cast<std::size_t>(t_len) * t_len);
    for (int b = 0; b < batch; ++b) {
        for (int h = 0; h < n_heads; ++h) {
            gather_head(q->data.data() + b * plane, t_len, d_model, h, dh, qh.data());
            gather_head(k->data.data() + b * plane, t_len, d_model, h, dh, kh.data());
            gather_head(v->data.data() + b * plane, t_len, d_model, h, dh, vh.data());
            map_mat(scores.data(), t_len, t_len).noalias() =
                inv_sqrt_dh * (map_mat(qh.data(), t_len, dh) *
                               map_mat(kh.data(), t_len, dh).transpose());
            // Causal softmax: row i sees columns 0..i; the rest stay zero.
            float* p = probs->data() +
                       (static_cast<std::size_t>(b) * n_heads + h) * t_len * t_len;
            for (int i = 0; i < t_len; ++i) {
                double* srow = scores.data() + static_cast<std::size_t>(i) * t_len;
                double mx = srow[0];
                for (int j = 1; j <= i; ++j) mx = std::max(mx, srow[j]);
                double denom = 0.0;
                for (int j = 0; j <= i; ++j) {
                    srow[j] = std::exp(srow[j] - mx);
                    denom += srow[j];
                }
                float* prow = p + static_cast<std::size_t>(i) * t_len;
                for (int j = 0; j <= i; ++j) {
                    srow[j] /= denom;
                    prow[j] = static_cast<float>(srow[j]);
                }
                for (int j = i + 1; j < t_len; ++j) {
                    srow[j] = 0.0;
                    prow[j] = 0.0f;
                }
            }
            map_mat(oh.data(), t_len, dh).noalias() =
                map_mat(scores.data(), t_len, t_len) * map_mat(vh.data(), t_len, dh);
            double* dst = out->data.data() + b * plane;
            for (int t = 0; t < t_len; ++t) {
                std::copy(oh.data() + static_cast<std::size_t>(t) * dh,
                          oh.data() + static_cast<std::size_t>(t + 1) * dh,
                          dst + static_cast<std::size_t>(t) * d_model + h * dh);
            }
        }
    }

    auto* o = out.get();
    out->backward_fn = [o, q, k, v, probs, batch, t_len, d_model, n_heads, dh, inv_sqrt_dh] {
        const std::size_t plane = static_cast<std::size_t>(t_len) * d_model;
        if (q->requires_grad) q->ensure_grad();
        if (k->requires_grad) k->ensure_grad();
        if (v->requires_grad) v->ensure_grad();
        std::vector<double> qh(static_cast<std::size_t>(t_len) * dh), kh(qh.size()),
            vh(qh.size()), doh(qh.size()), dqh(qh.size()), dkh(qh.size()), dvh(qh.size());
        std::vector<double> pmat(static_cast<std::size_t>(t_len) * t_len), dp(pmat.size()),
            ds(pmat.size());
        for (int b = 0; b < batch; ++b) {
            for (int h = 0; h < n_heads; ++h) {
                gather_head(q->data.data() + b * plane, t_len, d_model, h, dh, qh.data());
                gather_head(k->data.data() + b * plane, t_len, d_model, h, dh, kh.data());
                gather_head(v->data.data() + b * plane, t_len, d_model, h, dh, vh.data());
                gather_head(o->grad.data() + b * plane, t_len, d_model, h, dh, doh.data());
                const float* p = probs->data() +
                                 (static_cast<std::size_t>(b) * n_heads + h) * t_len * t_len;
                for (std::size_t i = 0; i < pmat.size(); ++i) pmat[i] = p[i];

                auto pm = map_mat(pmat.data(), t_len, t_len);
                // dV = P^T dO
                map_mat(dvh.data(), t_len, dh).noalias() =
                    pm.transpose() * map_mat(doh.data(), t_len, dh);
                // dP = dO V^T
                map_mat(dp.data(), t_len, t_len).noalias() =
                    map_mat(doh.data(), t_len, dh) * map_mat(vh.data(), t_len, dh).transpose();
                // dS = P o (dP - rowsum(dP o P)); masked entries stay zero.
                for (int i = 0; i < t_len; ++i) {
                    const double* prow = pmat.data() + static_cast<std::size_t>(i) * t_len;
                    const double* dprow = dp.data() + static_cast<std::size_t>(i) * t_len;
                    double* dsrow = ds.data() + static_cast<std::size_t>(i) * t_len;
                    double dot = 0.0;
                    for (int j = 0; j <= i; ++j) dot += dprow[j] * prow[j];
                    for (int j = 0; j <= i; ++j) dsrow[j] = prow[j] * (dprow[j] - dot);
                    for (int j = i + 1; j < t_len; ++j) dsrow[j] = 0.0;
                }
                auto dsm = map_mat(ds.data(), t_len, t_len);
                map_mat(dqh.data(), t_len, dh).noalias() =
                    inv_sqrt_dh * (dsm * map_mat(kh.data(), t_len, dh));
                map_mat(dkh.data(), t_len, dh).noalias() =
                    inv_sqrt_dh * (dsm.transpose() * map_mat(qh.data(), t_len, dh));
                if (q->requires_grad) {
                    scatter_head_add(dqh.data(), t_len, d_model, h, dh, q->grad.data() + b * plane);
                }
                if (k->requires_grad) {
                    scatter_head_add(dkh.data(), t_len, d_model, h, dh, k->grad.data() + b * plane);
                }
                if (v->requires_grad) {
                    scatter_head_add(dvh.data(), t_len, d_model, h, dh, v->grad.data() + b * plane);
                }
            }
        }
    };
    return out;
}

TensorPtr causal_self_attention(const TensorPtr& x, const AttentionParams& p, int n_heads) {
    if (x->rank() != 3) throw DimensionError("causal_self_attention: x must be [B, T, D]");
    const int batch = x->dim(0), t_len = x->dim(1), d_model = x->dim(2);
    if (n_heads < 1 || d_model % n_heads != 0) {
        throw ConfigError("causal_self_attention: embed dim must be divisible by n_heads");
    }
    auto flat = reshape(x, {batch * t_len, d_model});
    auto q = reshape(add_row_bias(matmul(flat, p.wq), p.bq), {batch, t_len, d_model});
    auto k = reshape(add_row_bias(matmul(flat, p.wk), p.bk), {batch, t_len, d_model});
    auto v = reshape(add_row_bias(matmul(flat, p.wv), p.bv), {batch, t_len, d_model});
    auto core = attention_core(q, k, v, n_heads);
    auto proj = add_row_bias(matmul(reshape(core, {batch * t_len, d_model}), p.wo), p.bo);
    return reshape(proj, {batch, t_len, d_model});
}

}  // namespace melvq::nn
