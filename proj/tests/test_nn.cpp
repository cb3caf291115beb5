#include <cmath>
#include <vector>

#include "doctest.h"
#include "melvq/errors.hpp"
#include "melvq/nn/adam.hpp"
#include "melvq/nn/grad_check.hpp"
#include "melvq/nn/io.hpp"
#include "melvq/nn/ops.hpp"
#include "melvq/nn/tensor.hpp"
#include "test_util.hpp"

using namespace melvq;
using namespace melvq::nn;

// ---------------------------------------------------------------------------
// Independent oracles. These reimplement the operations with naive loops and
// never touch the library's kernel paths.
// ---------------------------------------------------------------------------

namespace {

// Six nested loops of direct correlation.
std::vector<double> conv2d_oracle(const std::vector<double>& x, int B, int C, int H, int W,
                                  const std::vector<double>& k, int O, int kH, int kW, int stride,
                                  int pad, int& oH, int& oW) {
    oH = (H + 2 * pad - kH) / stride + 1;
    oW = (W + 2 * pad - kW) / stride + 1;
    std::vector<double> out(static_cast<std::size_t>(B) * O * oH * oW, 0.0);
    for (int b = 0; b < B; ++b)
        for (int o = 0; o < O; ++o)
            for (int y = 0; y < oH; ++y)
                for (int xo = 0; xo < oW; ++xo) {
                    double acc = 0.0;
                    for (int c = 0; c < C; ++c)
                        for (int i = 0; i < kH; ++i)
                            for (int j = 0; j < kW; ++j) {
                                const int sy = y * stride - pad + i;
                                const int sx = xo * stride - pad + j;
                                if (sy < 0 || sy >= H || sx < 0 || sx >= W) continue;
                                acc += x[((static_cast<std::size_t>(b) * C + c) * H + sy) * W + sx] *
                                       k[((static_cast<std::size_t>(o) * C + c) * kH + i) * kW + j];
                            }
                    out[((static_cast<std::size_t>(b) * O + o) * oH + y) * oW + xo] = acc;
                }
    return out;
}

// Naive scatter-add transposed convolution; kernel laid out [C, O, kH, kW].
std::vector<double> conv_transpose2d_oracle(const std::vector<double>& x, int B, int C, int H,
                                            int W, const std::vector<double>& k, int O, int kH,
                                            int kW, int stride, int pad, int& oH, int& oW) {
    oH = (H - 1) * stride - 2 * pad + kH;
    oW = (W - 1) * stride - 2 * pad + kW;
    std::vector<double> out(static_cast<std::size_t>(B) * O * oH * oW, 0.0);
    for (int b = 0; b < B; ++b)
        for (int c = 0; c < C; ++c)
            for (int y = 0; y < H; ++y)
                for (int xo = 0; xo < W; ++xo) {
                    const double v = x[((static_cast<std::size_t>(b) * C + c) * H + y) * W + xo];
                    for (int o = 0; o < O; ++o)
                        for (int i = 0; i < kH; ++i)
                            for (int j = 0; j < kW; ++j) {
                                const int ty = y * stride - pad + i;
                                const int tx = xo * stride - pad + j;
                                if (ty < 0 || ty >= oH || tx < 0 || tx >= oW) continue;
                                out[((static_cast<std::size_t>(b) * O + o) * oH + ty) * oW + tx] +=
                                    v * k[((static_cast<std::size_t>(c) * O + o) * kH + i) * kW + j];
                            }
                }
    return out;
}

// Explicit per-head masked attention with projections, all plain loops.
std::vector<double> causal_attention_oracle(const std::vector<double>& x, int B, int T, int D,
                                            int heads, const AttentionParams& p) {
    const int dh = D / heads;
    auto project = [&](const TensorPtr& w, const TensorPtr& bias) {
        std::vector<double> r(static_cast<std::size_t>(B) * T * D, 0.0);
        for (int b = 0; b < B; ++b)
            for (int t = 0; t < T; ++t)
                for (int oc = 0; oc < D; ++oc) {
                    double acc = bias->data[oc];
                    for (int ic = 0; ic < D; ++ic) {
                        acc += x[(static_cast<std::size_t>(b) * T + t) * D + ic] *
                               w->data[static_cast<std::size_t>(ic) * D + oc];
                    }
                    r[(static_cast<std::size_t>(b) * T + t) * D + oc] = acc;
                }
        return r;
    };
    const auto q = project(p.wq, p.bq);
    const auto k = project(p.wk, p.bk);
    const auto v = project(p.wv, p.bv);
    std::vector<double> core(static_cast<std::size_t>(B) * T * D, 0.0);
    for (int b = 0; b < B; ++b)
        for (int h = 0; h < heads; ++h)
            for (int t = 0; t < T; ++t) {
                std::vector<double> scores(static_cast<std::size_t>(t) + 1);
                for (int j = 0; j <= t; ++j) {
                    double acc = 0.0;
                    for (int c = 0; c < dh; ++c) {
                        acc += q[(static_cast<std::size_t>(b) * T + t) * D + h * dh + c] *
                               k[(static_cast<std::size_t>(b) * T + j) * D + h * dh + c];
                    }
                    scores[j] = acc / std::sqrt(static_cast<double>(dh));
                }
                double mx = scores[0];
                for (double s : scores) mx = std::max(mx, s);
                double denom = 0.0;
                for (double& s : scores) {
                    s = std::exp(s - mx);
                    denom += s;
                }
                for (double& s : scores) s /= denom;
                for (int c = 0; c < dh; ++c) {
                    double acc = 0.0;
                    for (int j = 0; j <= t; ++j) {
                        acc += scores[j] *
                               v[(static_cast<std::size_t>(b) * T + j) * D + h * dh + c];
                    }
                    core[(static_cast<std::size_t>(b) * T + t) * D + h * dh + c] = acc;
                }
            }
    // Output projection.
    std::vector<double> out(core.size(), 0.0);
    for (int b = 0; b < B; ++b)
        for (int t = 0; t < T; ++t)
            for (int oc = 0; oc < D; ++oc) {
                double acc = p.bo->data[oc];
                for (int ic = 0; ic < D; ++ic) {
                    acc += core[(static_cast<std::size_t>(b) * T + t) * D + ic] *
                           p.wo->data[static_cast<std::size_t>(ic) * D + oc];
                }
                out[(static_cast<std::size_t>(b) * T + t) * D + oc] = acc;
            }
    return out;
}

AttentionParams random_attention_params(int d, Rng& rng) {
    AttentionParams p;
    p.wq = randn({d, d}, rng, 0.3);
    p.bq = randn({d}, rng, 0.1);
    p.wk = randn({d, d}, rng, 0.3);
    p.bk = randn({d}, rng, 0.1);
    p.wv = randn({d, d}, rng, 0.3);
    p.bv = randn({d}, rng, 0.1);
    p.wo = randn({d, d}, rng, 0.3);
    p.bo = randn({d}, rng, 0.1);
    return p;
}

double inner(const std::vector<double>& a, const std::vector<double>& b) {
    double acc = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) acc += a[i] * b[i];
    return acc;
}

}  // namespace

// ---------------------------------------------------------------------------
// conv2d
// ---------------------------------------------------------------------------

TEST_CASE("conv2d identity kernel passes input through") {
    auto x = make_tensor({1, 1, 3, 3}, std::vector<double>(9, 1.0));
    auto k = make_tensor({1, 1, 1, 1}, std::vector<double>{1.0});
    auto y = conv2d(x, k, 1, 0);
    CHECK(y->shape == std::vector<int>{1, 1, 3, 3});
    CHECK(testutil::max_abs_diff(y->data, x->data) == 0.0);
}

TEST_CASE("conv2d 2x2 ones kernel at stride 2 sum-pools") {
    auto x = make_tensor({1, 1, 4, 4}, std::vector<double>(16, 1.0));
    auto k = make_tensor({1, 1, 2, 2}, std::vector<double>(4, 1.0));
    auto y = conv2d(x, k, 2, 0);
    CHECK(y->shape == std::vector<int>{1, 1, 2, 2});
    for (double v : y->data) CHECK(v == doctest::Approx(4.0));
}

TEST_CASE("conv2d matches the naive loop oracle on random input") {
    Rng rng(2024);
    auto x = randn({1, 2, 5, 5}, rng, 1.0);
    auto k = randn({3, 2, 3, 3}, rng, 1.0);
    for (auto [stride, pad] : {std::pair{1, 0}, {1, 1}, {2, 1}}) {
        auto y = conv2d(x, k, stride, pad);
        int oh = 0, ow = 0;
        auto ref = conv2d_oracle(x->data, 1, 2, 5, 5, k->data, 3, 3, 3, stride, pad, oh, ow);
        CHECK(y->shape == std::vector<int>{1, 3, oh, ow});
        CHECK(testutil::max_abs_diff(y->data, ref) < 1e-6);
    }
}

TEST_CASE("conv2d rejects channel mismatch") {
    auto x = make_tensor({1, 2, 4, 4});
    auto k = make_tensor({1, 3, 2, 2});
    CHECK_THROWS_AS((void)conv2d(x, k, 1, 0), DimensionError);
}

// ---------------------------------------------------------------------------
// conv_transpose2d
// ---------------------------------------------------------------------------

TEST_CASE("conv_transpose2d unit kernel is the identity") {
    Rng rng(7);
    auto x = randn({1, 1, 2, 2}, rng, 1.0);
    auto k = make_tensor({1, 1, 1, 1}, std::vector<double>{1.0});
    auto y = conv_transpose2d(x, k, 1, 0);
    CHECK(y->shape == x->shape);
    CHECK(testutil::max_abs_diff(y->data, x->data) == 0.0);
}

TEST_CASE("conv_transpose2d stride-2 ones kernel tiles without overlap") {
    auto x = make_tensor({1, 1, 2, 2}, std::vector<double>(4, 1.0));
    auto k = make_tensor({1, 1, 2, 2}, std::vector<double>(4, 1.0));
    auto y = conv_transpose2d(x, k, 2, 0);
    int oh = 0, ow = 0;
    auto ref = conv_transpose2d_oracle(x->data, 1, 1, 2, 2, k->data, 1, 2, 2, 2, 0, oh, ow);
    CHECK(y->shape == std::vector<int>{1, 1, 4, 4});
    CHECK(testutil::max_abs_diff(y->data, ref) == 0.0);
    for (double v : y->data) CHECK(v == doctest::Approx(1.0));
}

TEST_CASE("conv_transpose2d matches the scatter-add oracle on random shapes") {
    Rng rng(11);
    auto x = randn({2, 3, 4, 5}, rng, 1.0);
    auto k = randn({3, 2, 3, 3}, rng, 1.0);
    for (auto [stride, pad] : {std::pair{1, 0}, {2, 1}, {2, 0}}) {
        auto y = conv_transpose2d(x, k, stride, pad);
        int oh = 0, ow = 0;
        auto ref = conv_transpose2d_oracle(x->data, 2, 3, 4, 5, k->data, 2, 3, 3, stride, pad, oh, ow);
        CHECK(y->shape == std::vector<int>{2, 2, oh, ow});
        CHECK(testutil::max_abs_diff(y->data, ref) < 1e-6);
    }
}

TEST_CASE("conv2d and conv_transpose2d satisfy the adjoint identity") {
    Rng rng(99);
    // Geometry must be exact (no rows discarded by the floor in conv2d's
    // output size) for the transpose to land back on the input shape.
    const struct { int stride, pad, ksize; } trials[] = {{1, 0, 3}, {1, 1, 3}, {2, 1, 4}, {2, 0, 4}};
    for (auto [stride, pad, ksize] : trials) {
        auto x = randn({2, 3, 8, 12}, rng, 1.0);
        auto k = randn({4, 3, ksize, ksize}, rng, 1.0);
        auto y = conv2d(x, k, stride, pad);
        auto u = randn(y->shape, rng, 1.0);
        auto xt = conv_transpose2d(u, k, stride, pad);
        // <conv(x, k), u> == <x, convT(u, k)>
        const double lhs = inner(y->data, u->data);
        const double rhs = inner(x->data, xt->data);
        CHECK(std::abs(lhs - rhs) / std::max(1.0, std::abs(lhs)) < 1e-6);
    }
}

// ---------------------------------------------------------------------------
// attention
// ---------------------------------------------------------------------------

TEST_CASE("causal_self_attention with T=1 reduces to the value path") {
    Rng rng(5);
    const int d = 4;
    auto p = random_attention_params(d, rng);
    auto x = randn({1, 1, d}, rng, 1.0);
    auto y = causal_self_attention(x, p, 2);
    // Softmax over one element is 1, so out = (x Wv + bv) Wo + bo.
    std::vector<double> v(d, 0.0), expect(d, 0.0);
    for (int oc = 0; oc < d; ++oc) {
        v[oc] = p.bv->data[oc];
        for (int ic = 0; ic < d; ++ic) v[oc] += x->data[ic] * p.wv->data[ic * d + oc];
    }
    for (int oc = 0; oc < d; ++oc) {
        expect[oc] = p.bo->data[oc];
        for (int ic = 0; ic < d; ++ic) expect[oc] += v[ic] * p.wo->data[ic * d + oc];
    }
    CHECK(testutil::max_abs_diff(y->data, expect) < 1e-12);
}

TEST_CASE("causal_self_attention ignores future positions bitwise") {
    Rng rng(17);
    const int b = 1, t = 8, d = 8;
    auto p = random_attention_params(d, rng);
    auto x = randn({b, t, d}, rng, 1.0);
    auto y1 = causal_self_attention(x, p, 2);
    auto x2 = make_tensor(x->shape, x->data);
    for (int c = 0; c < d; ++c) x2->data[(5 * d) + c] += 3.25;  // perturb position 5
    auto y2 = causal_self_attention(x2, p, 2);
    for (int pos = 0; pos < 5; ++pos) {
        for (int c = 0; c < d; ++c) {
            CHECK(y1->data[pos * d + c] == y2->data[pos * d + c]);
        }
    }
}

TEST_CASE("causal_self_attention matches the per-head oracle") {
    Rng rng(23);
    const int b = 1, t = 3, d = 4, heads = 2;
    auto p = random_attention_params(d, rng);
    auto x = randn({b, t, d}, rng, 1.0);
    auto y = causal_self_attention(x, p, heads);
    auto ref = causal_attention_oracle(x->data, b, t, d, heads, p);
    CHECK(testutil::max_abs_diff(y->data, ref) < 1e-6);
}

TEST_CASE("causal_self_attention rejects indivisible head count") {
    Rng rng(1);
    auto p = random_attention_params(6, rng);
    auto x = randn({1, 2, 6}, rng, 1.0);
    CHECK_THROWS_AS((void)causal_self_attention(x, p, 4), ConfigError);
}

// ---------------------------------------------------------------------------
// adam
// ---------------------------------------------------------------------------

TEST_CASE("adam_step with zero gradients leaves values unchanged") {
    Rng rng(3);
    Parameter p("w", randn({4}, rng, 1.0));
    const auto before = p.value->data;
    p.value->ensure_grad();
    adam_step({&p}, {});
    CHECK(testutil::max_abs_diff(p.value->data, before) == 0.0);
}

TEST_CASE("adam first step moves by lr under bias correction") {
    Parameter p("w", make_tensor({1}, std::vector<double>{1.0}));
    p.value->ensure_grad();
    p.value->grad[0] = 1.0;
    AdamConfig cfg;
    cfg.lr = 0.1;
    adam_step({&p}, cfg);
    CHECK(p.value->data[0] == doctest::Approx(0.9).epsilon(1e-6));
}

TEST_CASE("adam reproduces a scripted two-iteration recurrence") {
    Parameter p("w", make_tensor({1}, std::vector<double>{1.0}));
    AdamConfig cfg;
    cfg.lr = 0.1;

    // Hand recurrence, same update rule written out longhand.
    double x = 1.0, m = 0.0, v = 0.0;
    const double g = 0.7;
    for (int step = 1; step <= 2; ++step) {
        m = cfg.beta1 * m + (1.0 - cfg.beta1) * g;
        v = cfg.beta2 * v + (1.0 - cfg.beta2) * g * g;
        const double mhat = m / (1.0 - std::pow(cfg.beta1, step));
        const double vhat = v / (1.0 - std::pow(cfg.beta2, step));
        x -= cfg.lr * mhat / (std::sqrt(vhat) + cfg.eps);
    }

    for (int step = 0; step < 2; ++step) {
        p.value->ensure_grad();
        p.value->grad[0] = g;
        adam_step({&p}, cfg);
        p.value->zero_grad();
    }
    CHECK(std::abs(p.value->data[0] - x) < 1e-12);
}

TEST_CASE("adam aborts on NaN gradient naming the parameter") {
    Parameter p("encoder.conv1", make_tensor({2}, std::vector<double>{1.0, 2.0}));
    p.value->ensure_grad();
    p.value->grad[0] = std::nan("");
    try {
        adam_step({&p}, {});
        FAIL("expected NumericError");
    } catch (const NumericError& e) {
        CHECK(std::string(e.what()).find("encoder.conv1") != std::string::npos);
    }
}

// ---------------------------------------------------------------------------
// grad_check
// ---------------------------------------------------------------------------

TEST_CASE("grad_check on sum of squares") {
    Rng rng(31);
    auto x = randn({3, 4}, rng, 1.0);
    const double err = grad_check([&] { return sum(mul(x, x)); }, {x}, 1e-5);
    CHECK(err < 1e-6);
}

TEST_CASE("grad_check on cross-entropy of a linear layer") {
    Rng rng(37);
    auto w = randn({5, 7}, rng, 0.5);
    auto x = randn({4, 5}, rng, 1.0);
    const std::vector<int> targets{1, 0, 6, 3};
    const double err =
        grad_check([&] { return cross_entropy(matmul(x, w), targets); }, {w, x}, 1e-5);
    CHECK(err < 1e-4);
}

TEST_CASE("every differentiable op passes grad_check on random instances") {
    for (std::uint64_t seed : {101u, 202u, 303u}) {
        Rng rng(seed);
        auto a = randn({2, 6}, rng, 1.0);
        auto b = randn({2, 6}, rng, 1.0);
        CHECK(grad_check([&] { return sum(add(a, b)); }, {a, b}) < 1e-4);
        CHECK(grad_check([&] { return sum(sub(a, b)); }, {a, b}) < 1e-4);
        CHECK(grad_check([&] { return sum(mul(a, b)); }, {a, b}) < 1e-4);
        CHECK(grad_check([&] { return sum(scale(a, -1.7)); }, {a}) < 1e-4);
        CHECK(grad_check([&] { return sum(relu(a)); }, {a}) < 1e-3);  // ~kink tolerance
        CHECK(grad_check([&] { return sum(gelu(a)); }, {a}) < 1e-4);
        CHECK(grad_check([&] { return sum(sigmoid(a)); }, {a}) < 1e-4);
        CHECK(grad_check([&] { return mse(a, b); }, {a, b}) < 1e-4);
        CHECK(grad_check([&] { return sum(mul(softmax_lastdim(a), b)); }, {a}) < 1e-4);

        auto w = randn({6, 3}, rng, 0.7);
        auto bias = randn({3}, rng, 0.5);
        CHECK(grad_check([&] { return sum(add_row_bias(matmul(a, w), bias)); }, {a, w, bias}) <
              1e-4);

        auto gamma = randn({6}, rng, 0.5);
        auto beta = randn({6}, rng, 0.5);
        CHECK(grad_check([&] { return sum(mul(layer_norm(a, gamma, beta), b)); },
                         {a, gamma, beta}) < 1e-4);

        auto table = randn({5, 3}, rng, 1.0);
        const std::vector<int> ids{0, 3, 3, 1};
        auto sel = randn({4, 3}, rng, 1.0);
        CHECK(grad_check([&] { return sum(mul(embedding(table, ids), sel)); }, {table}) < 1e-4);

        auto pts = randn({3, 4}, rng, 1.0);
        auto code = randn({5, 4}, rng, 1.0);
        auto wgt = randn({3, 5}, rng, 1.0);
        CHECK(grad_check([&] { return sum(mul(pairwise_sqdist(pts, code), wgt)); }, {pts, code}) <
              1e-4);

        auto img = randn({2, 2, 5, 5}, rng, 1.0);
        auto ker = randn({3, 2, 3, 3}, rng, 0.5);
        auto sel2 = randn({2, 3, 3, 3}, rng, 1.0);
        CHECK(grad_check([&] { return sum(mul(conv2d(img, ker, 2, 1), sel2)); }, {img, ker}) <
              1e-4);

        auto kt = randn({2, 3, 3, 3}, rng, 0.5);
        auto lat = randn({1, 2, 3, 3}, rng, 1.0);
        auto sel3 = randn({1, 3, 5, 5}, rng, 1.0);
        CHECK(grad_check([&] { return sum(mul(conv_transpose2d(lat, kt, 2, 1), sel3)); },
                         {lat, kt}) < 1e-4);

        auto cb = randn({2}, rng, 1.0);
        CHECK(grad_check([&] { return sum(mul(add_channel_bias(img, cb), img)); }, {img, cb}) <
              1e-3);

        const int dd = 6;
        auto px = randn({2, 4, dd}, rng, 0.8);
        auto ap = random_attention_params(dd, rng);
        auto selattn = randn({2, 4, dd}, rng, 1.0);
        CHECK(grad_check(
                  [&] { return sum(mul(causal_self_attention(px, ap, 2), selattn)); },
                  {px, ap.wq, ap.bq, ap.wk, ap.bk, ap.wv, ap.bv, ap.wo, ap.bo}) < 1e-4);

        const std::vector<int> tg{2, 0, 1, 2};
        auto logits_in = randn({4, 6}, rng, 1.0);
        auto wl = randn({6, 3}, rng, 0.7);
        CHECK(grad_check([&] { return cross_entropy(matmul(logits_in, wl), tg); },
                         {logits_in, wl}) < 1e-4);
    }
}

TEST_CASE("straight_through passes gradients to z unchanged") {
    Rng rng(41);
    auto z = randn({2, 3}, rng, 1.0);
    std::vector<double> quantized{1, 2, 3, 4, 5, 6};
    auto sel = randn({2, 3}, rng, 1.0);
    z->requires_grad = true;
    auto out = sum(mul(straight_through(z, quantized), sel));
    CHECK(testutil::max_abs_diff(out->parents[0]->parents[0]->data, quantized) == 0.0);
    backward(out);
    CHECK(testutil::max_abs_diff(z->grad, sel->data) == 0.0);
}

// ---------------------------------------------------------------------------
// softmax / misc invariants
// ---------------------------------------------------------------------------

TEST_CASE("softmax rows are nonnegative and sum to one") {
    Rng rng(53);
    auto x = randn({7, 9}, rng, 3.0);
    auto y = softmax_lastdim(x);
    for (int r = 0; r < 7; ++r) {
        double acc = 0.0;
        for (int c = 0; c < 9; ++c) {
            const double v = y->data[r * 9 + c];
            CHECK(v >= 0.0);
            acc += v;
        }
        CHECK(std::abs(acc - 1.0) < 1e-6);
    }
}

TEST_CASE("forward passes are deterministic for a fixed seed") {
    auto run = [] {
        Rng rng(77);
        auto x = randn({2, 3, 8}, rng, 1.0);
        auto p = random_attention_params(8, rng);
        return causal_self_attention(x, p, 4)->data;
    };
    CHECK(run() == run());
}

// ---------------------------------------------------------------------------
// tensor container io
// ---------------------------------------------------------------------------

TEST_CASE("tensor container round-trips f32 and f64") {
    Rng rng(61);
    auto t = randn({3, 4, 2}, rng, 1.0);
    const auto dir = std::filesystem::temp_directory_path() / "melvq_io_test";
    std::filesystem::create_directories(dir);

    save_tensor_file(dir / "a.vqt", TensorBlob::from_tensor(*t, DType::F64));
    auto back64 = load_tensor_file(dir / "a.vqt");
    CHECK(back64.dtype == DType::F64);
    CHECK(back64.to_doubles() == t->data);

    save_tensor_file(dir / "b.vqt", TensorBlob::from_tensor(*t, DType::F32));
    auto back32 = load_tensor_file(dir / "b.vqt");
    CHECK(back32.dims == std::vector<std::uint64_t>{3, 4, 2});
    CHECK(testutil::max_abs_diff(back32.to_doubles(), t->data) < 1e-6);
}

TEST_CASE("checkpoint sections round-trip with header") {
    Rng rng(67);
    Checkpoint ckpt;
    ckpt.header_json = R"({"kind":"test","epoch":3})";
    auto w = randn({4, 4}, rng, 1.0);
    ckpt.sections.emplace_back("weights", TensorBlob::from_tensor(*w, DType::F64));
    const auto dir = std::filesystem::temp_directory_path() / "melvq_io_test";
    std::filesystem::create_directories(dir);
    save_checkpoint(dir / "model.ckpt", ckpt);
    auto back = load_checkpoint(dir / "model.ckpt");
    CHECK(back.header_json == ckpt.header_json);
    REQUIRE(back.has_section("weights"));
    CHECK(back.section("weights").to_doubles() == w->data);
}

TEST_CASE("malformed tensor container raises a parse error") {
    const auto dir = std::filesystem::temp_directory_path() / "melvq_io_test";
    std::filesystem::create_directories(dir);
    atomic_write_file(dir / "junk.vqt", "NOTAMAGIC-and-then-some");
    CHECK_THROWS_AS((void)load_tensor_file(dir / "junk.vqt"), ParseError);
}
