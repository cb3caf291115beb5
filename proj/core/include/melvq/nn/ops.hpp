#pragma once

#include <vector>

#include "melvq/nn/tensor.hpp"

namespace melvq::nn {

// ---------------------------------------------------------------------------
// Elementwise and shape ops
// ---------------------------------------------------------------------------

TensorPtr add(const TensorPtr& a, const TensorPtr& b);  // same shape
TensorPtr sub(const TensorPtr& a, const TensorPtr& b);
TensorPtr mul(const TensorPtr& a, const TensorPtr& b);
TensorPtr scale(const TensorPtr& a, double s);

// x: [N, D] + bias [D], broadcast over rows.
TensorPtr add_row_bias(const TensorPtr& x, const TensorPtr& bias);
// x: [B, C, H, W] + bias [C], broadcast over batch and spatial dims.
TensorPtr add_channel_bias(const TensorPtr& x, const TensorPtr& bias);

TensorPtr relu(const TensorPtr& x);
TensorPtr gelu(const TensorPtr& x);     // exact erf form
TensorPtr sigmoid(const TensorPtr& x);

TensorPtr reshape(const TensorPtr& x, std::vector<int> new_shape);

TensorPtr sum(const TensorPtr& x);   // -> scalar
TensorPtr mean(const TensorPtr& x);  // -> scalar

// ---------------------------------------------------------------------------
// Linear algebra
// ---------------------------------------------------------------------------

// [M, K] x [K, N] -> [M, N]
TensorPtr matmul(const TensorPtr& a, const TensorPtr& b);

// Softmax over the last dimension.
TensorPtr softmax_lastdim(const TensorPtr& x);

// Normalizes the last dimension; gamma/beta: [D].
TensorPtr layer_norm(const TensorPtr& x, const TensorPtr& gamma, const TensorPtr& beta,
                     double eps = 1e-5);

// table: [V, D], ids in [0, V) -> [N, D]
TensorPtr embedding(const TensorPtr& table, const std::vector<int>& ids);

// Squared L2 distances between row vectors: x [M, L], y [N, L] -> [M, N].
TensorPtr pairwise_sqdist(const TensorPtr& x, const TensorPtr& y);

// ---------------------------------------------------------------------------
// Losses
// ---------------------------------------------------------------------------

TensorPtr mse(const TensorPtr& a, const TensorPtr& b);  // mean over all elements
// logits: [N, V], targets: N class ids -> mean negative log-likelihood (nats)
TensorPtr cross_entropy(const TensorPtr& logits, const std::vector<int>& targets);

// Forward emits `values`; backward copies the output gradient to z unchanged.
TensorPtr straight_through(const TensorPtr& z, const std::vector<double>& values);

// ---------------------------------------------------------------------------
// Convolutions
// ---------------------------------------------------------------------------

// x: [B, C, H, W], kernel: [O, C, kH, kW] -> [B, O, H', W']
// H' = (H + 2*pad - kH) / stride + 1
TensorPtr conv2d(const TensorPtr& x, const TensorPtr& kernel, int stride, int padding);

// x: [B, C, H, W], kernel: [C, O, kH, kW] -> [B, O, (H-1)*stride - 2*pad + kH, ...]
// Adjoint of conv2d in its input for a shared kernel layout.
TensorPtr conv_transpose2d(const TensorPtr& x, const TensorPtr& kernel, int stride, int padding);

// ---------------------------------------------------------------------------
// Attention
// ---------------------------------------------------------------------------

struct AttentionParams {
    TensorPtr wq, bq;  // [D, D], [D]
    TensorPtr wk, bk;
    TensorPtr wv, bv;
    TensorPtr wo, bo;
};

// Masked softmax(Q Kh^T / sqrt(D/heads)) V per head. q, k, v: [B, T, D].
// Position t attends to positions <= t only.
TensorPtr attention_core(const TensorPtr& q, const TensorPtr& k, const TensorPtr& v, int n_heads);

// Full block: QKV projections, masked multi-head core, output projection.
TensorPtr causal_self_attention(const TensorPtr& x, const AttentionParams& p, int n_heads);

}  // namespace melvq::nn
