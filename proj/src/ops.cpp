#include "qcnn/ops.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace qcnn::nn {

namespace {

void check_conv_args(const Tensor& input, const Tensor& weight, const Tensor& bias, int stride,
                     int padding) {
    if (input.rank() != 3) {
        throw ShapeError("conv2d input must be CxHxW, got " + input.shape_string());
    }
    if (weight.rank() != 4 || weight.dim(2) != weight.dim(3)) {
        throw ShapeError("conv2d weight must be OxCxKxK, got " + weight.shape_string());
    }
    if (weight.dim(1) != input.dim(0)) {
        throw ShapeError("conv2d channel mismatch: input " + input.shape_string() + " vs weight " +
                         weight.shape_string());
    }
    if (bias.rank() != 1 || bias.dim(0) != weight.dim(0)) {
        throw ShapeError("conv2d bias must be length " + std::to_string(weight.dim(0)) + ", got " +
                         bias.shape_string());
    }
    if (stride < 1) throw ContractError("conv2d stride must be >= 1");
    if (padding < 0) throw ContractError("conv2d padding must be >= 0");
    const int k = weight.dim(2);
    if (k > input.dim(1) + 2 * padding || k > input.dim(2) + 2 * padding) {
        throw ShapeError("conv2d kernel " + std::to_string(k) + " exceeds padded input " +
                         input.shape_string() + " with padding " + std::to_string(padding));
    }
}

struct ConvPlan {
    int in_c, in_h, in_w;
    int out_c, out_h, out_w;
    int k, stride, padding;
};

ConvPlan conv_plan(const Tensor& input, const Tensor& weight, int stride, int padding) {
    ConvPlan p;
    p.in_c = input.dim(0);
    p.in_h = input.dim(1);
    p.in_w = input.dim(2);
    p.out_c = weight.dim(0);
    p.k = weight.dim(2);
    p.stride = stride;
    p.padding = padding;
    p.out_h = (p.in_h + 2 * padding - p.k) / stride + 1;
    p.out_w = (p.in_w + 2 * padding - p.k) / stride + 1;
    return p;
}

// Valid output range [lo, hi) for one kernel offset: positions whose input
// index ky - padding + y*stride lands inside [0, extent).
inline void out_range(int kpos, int padding, int stride, int extent, int out_extent, int& lo,
                      int& hi) {
    const int shift = padding - kpos; // input index = y*stride - shift
    lo = shift <= 0 ? 0 : (shift + stride - 1) / stride;
    const int last = extent - 1 + shift; // need y*stride <= last
    hi = last < 0 ? 0 : std::min(out_extent, last / stride + 1);
}

} // namespace

Tensor conv2d_forward(const Tensor& input, const Tensor& weight, const Tensor& bias, int stride,
                      int padding) {
    check_conv_args(input, weight, bias, stride, padding);
    const ConvPlan p = conv_plan(input, weight, stride, padding);

    Tensor out({p.out_c, p.out_h, p.out_w});
    float* od = out.data();
    const float* id = input.data();
    const float* wd = weight.data();

    for (int o = 0; o < p.out_c; ++o) {
        float* oc = od + static_cast<std::size_t>(o) * p.out_h * p.out_w;
        const float b = bias[static_cast<std::size_t>(o)];
        for (int i = 0; i < p.out_h * p.out_w; ++i) oc[i] = b;
        for (int c = 0; c < p.in_c; ++c) {
            const float* ic = id + static_cast<std::size_t>(c) * p.in_h * p.in_w;
            for (int ky = 0; ky < p.k; ++ky) {
                int y_lo, y_hi;
                out_range(ky, padding, stride, p.in_h, p.out_h, y_lo, y_hi);
                for (int kx = 0; kx < p.k; ++kx) {
                    int x_lo, x_hi;
                    out_range(kx, padding, stride, p.in_w, p.out_w, x_lo, x_hi);
                    const float w =
                        wd[((static_cast<std::size_t>(o) * p.in_c + c) * p.k + ky) * p.k + kx];
                    for (int y = y_lo; y < y_hi; ++y) {
                        const int iy = y * stride - padding + ky;
                        const float* irow = ic + static_cast<std::size_t>(iy) * p.in_w;
                        float* orow = oc + static_cast<std::size_t>(y) * p.out_w;
                        for (int x = x_lo; x < x_hi; ++x) {
                            orow[x] += w * irow[x * stride - padding + kx];
                        }
                    }
                }
            }
        }
    }
    return out;
}

Conv2dGrads conv2d_backward(const Tensor& grad_out, const Tensor& input, const Tensor& weight,
                            int stride, int padding) {
    const ConvPlan p = conv_plan(input, weight, stride, padding);
    if (grad_out.rank() != 3 || grad_out.dim(0) != p.out_c || grad_out.dim(1) != p.out_h ||
        grad_out.dim(2) != p.out_w) {
        throw ShapeError("conv2d grad_out shape " + grad_out.shape_string() +
                         " does not match forward output [" + std::to_string(p.out_c) + "x" +
                         std::to_string(p.out_h) + "x" + std::to_string(p.out_w) + "]");
    }

    Conv2dGrads g{Tensor(input.shape()), Tensor(weight.shape()),
                  Tensor(std::vector<int>{p.out_c})};
    const float* gd = grad_out.data();
    const float* id = input.data();
    const float* wd = weight.data();
    float* gi = g.input.data();
    float* gw = g.weight.data();

    for (int o = 0; o < p.out_c; ++o) {
        const float* gc = gd + static_cast<std::size_t>(o) * p.out_h * p.out_w;
        double bias_acc = 0.0;
        for (int i = 0; i < p.out_h * p.out_w; ++i) bias_acc += gc[i];
        g.bias[static_cast<std::size_t>(o)] = static_cast<float>(bias_acc);

        for (int c = 0; c < p.in_c; ++c) {
            const float* ic = id + static_cast<std::size_t>(c) * p.in_h * p.in_w;
            float* gic = gi + static_cast<std::size_t>(c) * p.in_h * p.in_w;
            for (int ky = 0; ky < p.k; ++ky) {
                int y_lo, y_hi;
                out_range(ky, padding, stride, p.in_h, p.out_h, y_lo, y_hi);
                for (int kx = 0; kx < p.k; ++kx) {
                    int x_lo, x_hi;
                    out_range(kx, padding, stride, p.in_w, p.out_w, x_lo, x_hi);
                    const std::size_t widx =
                        ((static_cast<std::size_t>(o) * p.in_c + c) * p.k + ky) * p.k + kx;
                    const float w = wd[widx];
                    float w_acc = 0.0f;
                    for (int y = y_lo; y < y_hi; ++y) {
                        const int iy = y * stride - padding + ky;
                        const float* irow = ic + static_cast<std::size_t>(iy) * p.in_w;
                        float* girow = gic + static_cast<std::size_t>(iy) * p.in_w;
                        const float* grow = gc + static_cast<std::size_t>(y) * p.out_w;
                        for (int x = x_lo; x < x_hi; ++x) {
                            const int ix = x * stride - padding + kx;
                            w_acc += grow[x] * irow[ix];
                            girow[ix] += grow[x] * w;
                        }
                    }
                    gw[widx] += w_acc;
                }
            }
        }
    }
    return g;
}

MaxPoolResult maxpool2d_forward(const Tensor& input) {
    if (input.rank() != 3) {
        throw ShapeError("maxpool2d input must be CxHxW, got " + input.shape_string());
    }
    const int c_n = input.dim(0), h = input.dim(1), w = input.dim(2);
    if (h < 2 || w < 2) {
        throw ShapeError("maxpool2d needs spatial extent >= 2, got " + input.shape_string());
    }
    const int oh = h / 2, ow = w / 2; // floor policy: odd trailing row/col dropped

    MaxPoolResult r{Tensor({c_n, oh, ow}), {}};
    r.argmax.resize(r.output.numel());
    const float* id = input.data();
    float* od = r.output.data();

    std::size_t oi = 0;
    for (int c = 0; c < c_n; ++c) {
        const float* ic = id + static_cast<std::size_t>(c) * h * w;
        for (int y = 0; y < oh; ++y) {
            for (int x = 0; x < ow; ++x, ++oi) {
                const std::size_t base = static_cast<std::size_t>(2 * y) * w + 2 * x;
                std::size_t best = base;
                float best_v = ic[base];
                const std::size_t cand[3] = {base + 1, base + w, base + w + 1};
                for (std::size_t k = 0; k < 3; ++k) {
                    if (ic[cand[k]] > best_v) { // strict: first max wins ties
                        best_v = ic[cand[k]];
                        best = cand[k];
                    }
                }
                od[oi] = best_v;
                r.argmax[oi] = static_cast<std::size_t>(c) * h * w + best;
            }
        }
    }
    return r;
}

Tensor maxpool2d_backward(const Tensor& grad_out, const std::vector<std::size_t>& argmax,
                          const std::vector<int>& input_shape) {
    if (grad_out.numel() != argmax.size()) {
        throw ShapeError("maxpool2d grad_out " + grad_out.shape_string() + " does not match " +
                         std::to_string(argmax.size()) + " pooled elements");
    }
    Tensor g(input_shape);
    for (std::size_t i = 0; i < argmax.size(); ++i) {
        g[argmax[i]] += grad_out[i];
    }
    return g;
}

Tensor relu_forward(const Tensor& input) {
    Tensor out(input.shape());
    for (std::size_t i = 0; i < input.numel(); ++i) {
        out[i] = input[i] > 0.0f ? input[i] : 0.0f;
    }
    return out;
}

Tensor relu_backward(const Tensor& grad_out, const Tensor& input) {
    if (!grad_out.same_shape(input)) {
        throw ShapeError("relu grad shape " + grad_out.shape_string() + " vs input " +
                         input.shape_string());
    }
    Tensor g(input.shape());
    for (std::size_t i = 0; i < input.numel(); ++i) {
        g[i] = input[i] > 0.0f ? grad_out[i] : 0.0f;
    }
    return g;
}

DropoutResult dropout_forward(const Tensor& input, float rate, bool train, Rng* rng) {
    if (!(rate >= 0.0f && rate < 1.0f)) {
        throw ContractError("dropout rate must lie in [0, 1), got " + std::to_string(rate));
    }
    if (!train || rate == 0.0f) {
        return DropoutResult{input, Tensor{}};
    }
    if (rng == nullptr) {
        throw ContractError("dropout in train mode requires an rng");
    }
    const float scale = 1.0f / (1.0f - rate);
    DropoutResult r{Tensor(input.shape()), Tensor(input.shape())};
    for (std::size_t i = 0; i < input.numel(); ++i) {
        const bool keep = rng->uniform() >= rate;
        r.mask[i] = keep ? scale : 0.0f;
        r.output[i] = input[i] * r.mask[i];
    }
    return r;
}

Tensor dropout_backward(const Tensor& grad_out, const Tensor& mask) {
    if (mask.empty()) {
        return grad_out; // eval mode / rate 0: identity
    }
    if (!grad_out.same_shape(mask)) {
        throw ShapeError("dropout grad shape " + grad_out.shape_string() + " vs mask " +
                         mask.shape_string());
    }
    Tensor g(grad_out.shape());
    for (std::size_t i = 0; i < grad_out.numel(); ++i) {
        g[i] = grad_out[i] * mask[i];
    }
    return g;
}

Tensor linear_forward(const Tensor& input, const Tensor& weight, const Tensor& bias) {
    if (input.rank() != 1 || weight.rank() != 2 || bias.rank() != 1) {
        throw ShapeError("linear expects vector/matrix/vector, got " + input.shape_string() + ", " +
                         weight.shape_string() + ", " + bias.shape_string());
    }
    const int n = input.dim(0), m = weight.dim(0);
    if (weight.dim(1) != n || bias.dim(0) != m) {
        throw ShapeError("linear shape mismatch: input " + input.shape_string() + " vs weight " +
                         weight.shape_string());
    }
    Tensor out({m});
    const float* xd = input.data();
    const float* wd = weight.data();
    for (int i = 0; i < m; ++i) {
        const float* wrow = wd + static_cast<std::size_t>(i) * n;
        float acc = bias[static_cast<std::size_t>(i)];
        for (int j = 0; j < n; ++j) acc += wrow[j] * xd[j];
        out[static_cast<std::size_t>(i)] = acc;
    }
    return out;
}

LinearGrads linear_backward(const Tensor& grad_out, const Tensor& input, const Tensor& weight) {
    const int n = input.dim(0), m = weight.dim(0);
    if (grad_out.rank() != 1 || grad_out.dim(0) != m) {
        throw ShapeError("linear grad_out " + grad_out.shape_string() + " does not match output " +
                         std::to_string(m));
    }
    LinearGrads g{Tensor({n}), Tensor(weight.shape()), Tensor({m})};
    const float* gd = grad_out.data();
    const float* xd = input.data();
    const float* wd = weight.data();
    float* gi = g.input.data();
    float* gw = g.weight.data();
    for (int i = 0; i < m; ++i) {
        const float gv = gd[i];
        g.bias[static_cast<std::size_t>(i)] = gv;
        const float* wrow = wd + static_cast<std::size_t>(i) * n;
        float* gwrow = gw + static_cast<std::size_t>(i) * n;
        for (int j = 0; j < n; ++j) {
            gwrow[j] = gv * xd[j];
            gi[j] += gv * wrow[j];
        }
    }
    return g;
}

namespace {

void check_probs(const std::array<double, 2>& probs) {
    if (probs[0] < 0.0 || probs[1] < 0.0) {
        throw ContractError("nll_loss probabilities must be non-negative, got [" +
                            std::to_string(probs[0]) + ", " + std::to_string(probs[1]) + "]");
    }
    const double sum = probs[0] + probs[1];
    if (std::abs(sum - 1.0) > kProbSumTolerance) {
        throw ContractError("nll_loss probabilities must sum to 1 within 1e-6, got sum " +
                            std::to_string(sum));
    }
}

void check_target(int target) {
    if (target != 0 && target != 1) {
        throw ContractError("nll_loss target must be 0 or 1, got " + std::to_string(target));
    }
}

} // namespace

double nll_loss(const std::array<double, 2>& probs, int target) {
    check_target(target);
    check_probs(probs);
    return -std::log(std::max(probs[static_cast<std::size_t>(target)], kNllEpsilon));
}

std::array<double, 2> nll_loss_backward(const std::array<double, 2>& probs, int target) {
    check_target(target);
    check_probs(probs);
    std::array<double, 2> g{0.0, 0.0};
    g[static_cast<std::size_t>(target)] =
        -1.0 / std::max(probs[static_cast<std::size_t>(target)], kNllEpsilon);
    return g;
}

double nll_loss(const Tensor& probs, int target) {
    if (probs.rank() != 1 || probs.dim(0) != 2) {
        throw ShapeError("nll_loss expects a 2-vector, got " + probs.shape_string());
    }
    return nll_loss(std::array<double, 2>{probs[0], probs[1]}, target);
}

Tensor nll_loss_backward(const Tensor& probs, int target) {
    if (probs.rank() != 1 || probs.dim(0) != 2) {
        throw ShapeError("nll_loss expects a 2-vector, got " + probs.shape_string());
    }
    const auto g = nll_loss_backward(std::array<double, 2>{probs[0], probs[1]}, target);
    return Tensor({2}, {static_cast<float>(g[0]), static_cast<float>(g[1])});
}

} // namespace qcnn::nn
