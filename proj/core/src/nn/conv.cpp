#include <cstddef>
#include <vector>

#include "melvq/errors.hpp"
#include "melvq/nn/ops.hpp"
#include "eigen_util.hpp"
#include "node_util.hpp"

namespace melvq::nn {

namespace {

// Geometry linking an image [C, H, W] to patch columns [(C*kH*kW) x (oH*oW)]
// through out(y, x) <-> in(y*stride - pad + i, x*stride - pad + j).
struct ConvGeom {
    int channels, h, w;    // image side
    int kh, kw;            // kernel window
    int stride, pad;
    int oh, ow;            // column-grid side

    int cols() const { return oh * ow; }
    int patch() const { return channels * kh * kw; }
};

void im2col(const double* img, const ConvGeom& g, double* cols) {
    for (int c = 0; c < g.channels; ++c) {
        const double* plane = img + static_cast<std::size_t>(c) * g.h * g.w;
        for (int i = 0; i < g.kh; ++i) {
            for (int j = 0; j < g.kw; ++j) {
                double* row = cols + static_cast<std::size_t>((c * g.kh + i) * g.kw + j) * g.cols();
                for (int y = 0; y < g.oh; ++y) {
                    const int sy = y * g.stride - g.pad + i;
                    if (sy < 0 || sy >= g.h) {
                        for (int x = 0; x < g.ow; ++x) row[y * g.ow + x] = 0.0;
                        continue;
                    }
                    for (int x = 0; x < g.ow; ++x) {
                        const int sx = x * g.stride - g.pad + j;
                        row[y * g.ow + x] =
                            (sx >= 0 && sx < g.w) ? plane[sy * g.w + sx] : 0.0;
                    }
                }
            }
        }
    }
}

void col2im_add(const double* cols, const ConvGeom& g, double* img) {
    for (int c = 0; c < g.channels; ++c) {
        double* plane = img + static_cast<std::size_t>(c) * g.h * g.w;
        for (int i = 0; i < g.kh; ++i) {
            for (int j = 0; j < g.kw; ++j) {
                const double* row =
                    cols + static_cast<std::size_t>((c * g.kh + i) * g.kw + j) * g.cols();
                for (int y = 0; y < g.oh; ++y) {
                    const int sy = y * g.stride - g.pad + i;
                    if (sy < 0 || sy >= g.h) continue;
                    for (int x = 0; x < g.ow; ++x) {
                        const int sx = x * g.stride - g.pad + j;
                        if (sx >= 0 && sx < g.w) plane[sy * g.w + sx] += row[y * g.ow + x];
                    }
                }
            }
        }
    }
}

int out_extent(int in, int k, int stride, int pad) {
    return (in + 2 * pad - k) / stride + 1;
}

}  // namespace

TensorPtr conv2d(const TensorPtr& x, const TensorPtr& kernel, int stride, int padding) {
    if (x->rank() != 4 || kernel->rank() != 4) {
        throw DimensionError("conv2d: expected x [B, C, H, W] and kernel [O, C, kH, kW]");
    }
    if (x->dim(1) != kernel->dim(1)) {
        throw DimensionError("conv2d: input channels do not match kernel channels");
    }
    if (stride < 1) throw ConfigError("conv2d: stride must be >= 1");
    if (padding < 0) throw ConfigError("conv2d: padding must be >= 0");
    const int batch = x->dim(0), in_ch = x->dim(1), h = x->dim(2), w = x->dim(3);
    const int out_ch = kernel->dim(0), kh = kernel->dim(2), kw = kernel->dim(3);
    if (kh > h + 2 * padding || kw > w + 2 * padding) {
        throw DimensionError("conv2d: kernel larger than padded input");
    }
    const int oh = out_extent(h, kh, stride, padding);
    const int ow = out_extent(w, kw, stride, padding);
    const ConvGeom geom{in_ch, h, w, kh, kw, stride, padding, oh, ow};

    auto out = result_node({batch, out_ch, oh, ow}, {x, kernel});
    {
        std::vector<double> cols(static_cast<std::size_t>(geom.patch()) * geom.cols());
        auto kmat = map_mat(kernel->data.data(), out_ch, geom.patch());
        const std::size_t in_plane = static_cast<std::size_t>(in_ch) * h * w;
        const std::size_t out_plane = static_cast<std::size_t>(out_ch) * oh * ow;
        for (int b = 0; b < batch; ++b) {
            im2col(x->data.data() + b * in_plane, geom, cols.data());
            map_mat(out->data.data() + b * out_plane, out_ch, geom.cols()).noalias() =
                kmat * map_mat(cols.data(), geom.patch(), geom.cols());
        }
    }
    auto* o = out.get();
    out->backward_fn = [o, x, kernel, geom, batch, in_ch, out_ch, h, w] {
        const std::size_t in_plane = static_cast<std::size_t>(in_ch) * h * w;
        const std::size_t out_plane = static_cast<std::size_t>(out_ch) * geom.oh * geom.ow;
        std::vector<double> cols(static_cast<std::size_t>(geom.patch()) * geom.cols());
        if (x->requires_grad) x->ensure_grad();
        if (kernel->requires_grad) kernel->ensure_grad();
        for (int b = 0; b < batch; ++b) {
            auto dout = map_mat(o->grad.data() + b * out_plane, out_ch, geom.cols());
            if (kernel->requires_grad) {
                im2col(x->data.data() + b * in_plane, geom, cols.data());
                map_mat(kernel->grad.data(), out_ch, geom.patch()).noalias() +=
                    dout * map_mat(cols.data(), geom.patch(), geom.cols()).transpose();
            }
            if (x->requires_grad) {
                map_mat(cols.data(), geom.patch(), geom.cols()).noalias() =
                    map_mat(kernel->data.data(), out_ch, geom.patch()).transpose() * dout;
                col2im_add(cols.data(), geom, x->grad.data() + b * in_plane);
            }
        }
    };
    return out;
}

TensorPtr conv_transpose2d(const TensorPtr& x, const TensorPtr& kernel, int stride, int padding) {
    if (x->rank() != 4 || kernel->rank() != 4) {
        throw DimensionError(
            "conv_transpose2d: expected x [B, C, H, W] and kernel [C, O, kH, kW]");
    }
    if (x->dim(1) != kernel->dim(0)) {
        throw DimensionError("conv_transpose2d: input channels do not match kernel");
    }
    if (stride < 1) throw ConfigError("conv_transpose2d: stride must be >= 1");
    if (padding < 0) throw ConfigError("conv_transpose2d: padding must be >= 0");
    const int batch = x->dim(0), in_ch = x->dim(1), h = x->dim(2), w = x->dim(3);
    const int out_ch = kernel->dim(1), kh = kernel->dim(2), kw = kernel->dim(3);
    const int oh = (h - 1) * stride - 2 * padding + kh;
    const int ow = (w - 1) * stride - 2 * padding + kw;
    if (oh <= 0 || ow <= 0) throw DimensionError("conv_transpose2d: non-positive output size");
    // The scatter geometry is the conv2d gather geometry with the roles of the
    // two grids swapped: the *output* image plays ConvGeom's [C, H, W] side.
    const ConvGeom geom{out_ch, oh, ow, kh, kw, stride, padding, h, w};

    auto out = result_node({batch, out_ch, oh, ow}, {x, kernel});
    {
        std::vector<double> cols(static_cast<std::size_t>(geom.patch()) * geom.cols());
        const std::size_t in_plane = static_cast<std::size_t>(in_ch) * h * w;
        const std::size_t out_plane = static_cast<std::size_t>(out_ch) * oh * ow;
        auto kmat = map_mat(kernel->data.data(), in_ch, geom.patch());
        for (int b = 0; b < batch; ++b) {
            map_mat(cols.data(), geom.patch(), geom.cols()).noalias() =
                kmat.transpose() * map_mat(x->data.data() + b * in_plane, in_ch, geom.cols());
            col2im_add(cols.data(), geom, out->data.data() + b * out_plane);
        }
    }
    auto* o = out.get();
    out->backward_fn = [o, x, kernel, geom, batch, in_ch, out_ch, h, w] {
        const std::size_t in_plane = static_cast<std::size_t>(in_ch) * h * w;
        const std::size_t out_plane = static_cast<std::size_t>(out_ch) * geom.h * geom.w;
        std::vector<double> cols(static_cast<std::size_t>(geom.patch()) * geom.cols());
        if (x->requires_grad) x->ensure_grad();
        if (kernel->requires_grad) kernel->ensure_grad();
        for (int b = 0; b < batch; ++b) {
            im2col(o->grad.data() + b * out_plane, geom, cols.data());
            auto colmat = map_mat(cols.data(), geom.patch(), geom.cols());
            if (x->requires_grad) {
                map_mat(x->grad.data() + b * in_plane, in_ch, geom.cols()).noalias() +=
                    map_mat(kernel->data.data(), in_ch, geom.patch()) * colmat;
            }
            if (kernel->requires_grad) {
                map_mat(kernel->grad.data(), in_ch, geom.patch()).noalias() +=
                    map_mat(x->data.data() + b * in_plane, in_ch, geom.cols()) *
                    colmat.transpose();
            }
        }
    };
    return out;
}

}  // namespace melvq::nn
