#include "baf/ops.hpp"

#include <cmath>
#include <cstring>

namespace baf::ops {

namespace {

void check_conv_shapes(const Tensor& input, const Tensor& kernels) {
    if (input.shape.size() != 3)
        throw ContractError("conv2d: input must be C x H x W");
    if (kernels.shape.size() != 4 || kernels.shape[2] != 3 || kernels.shape[3] != 3)
        throw ContractError("conv2d: kernels must be C_out x C_in x 3 x 3");
    if (kernels.shape[1] != input.shape[0])
        throw ContractError("conv2d: kernel C_in " + std::to_string(kernels.shape[1]) +
                            " does not match input channels " + std::to_string(input.shape[0]));
    if (input.shape[1] < 1 || input.shape[2] < 1)
        throw ContractError("conv2d: empty spatial dims");
}

}  // namespace

Tensor conv2d_forward(const Tensor& input, const Tensor& kernels) {
    check_conv_shapes(input, kernels);
    const std::ptrdiff_t ci = static_cast<std::ptrdiff_t>(input.shape[0]);
    const std::ptrdiff_t h = static_cast<std::ptrdiff_t>(input.shape[1]);
    const std::ptrdiff_t w = static_cast<std::ptrdiff_t>(input.shape[2]);
    const std::ptrdiff_t co = static_cast<std::ptrdiff_t>(kernels.shape[0]);

    Tensor out({static_cast<std::size_t>(co), static_cast<std::size_t>(h),
                static_cast<std::size_t>(w)});
    const float* in = input.data.data();
    const float* kn = kernels.data.data();
    float* op = out.data.data();

#pragma omp parallel for schedule(static)
    for (std::ptrdiff_t o = 0; o < co; ++o) {
        for (std::ptrdiff_t y = 0; y < h; ++y) {
            for (std::ptrdiff_t x = 0; x < w; ++x) {
                float acc = 0.0f;
                for (std::ptrdiff_t i = 0; i < ci; ++i) {
                    const float* kb = kn + ((o * ci + i) * 9);
                    const float* ib = in + i * h * w;
                    for (std::ptrdiff_t dy = 0; dy < 3; ++dy) {
                        const std::ptrdiff_t sy = y + dy - 1;
                        if (sy < 0 || sy >= h) continue;
                        const float* row = ib + sy * w;
                        const float* kr = kb + dy * 3;
                        if (x >= 1 && x + 1 < w) {
                            acc += row[x - 1] * kr[0] + row[x] * kr[1] + row[x + 1] * kr[2];
                        } else {
                            for (std::ptrdiff_t dx = 0; dx < 3; ++dx) {
                                const std::ptrdiff_t sx = x + dx - 1;
                                if (sx < 0 || sx >= w) continue;
                                acc += row[sx] * kr[dx];
                            }
                        }
                    }
                }
                op[(o * h + y) * w + x] = acc;
            }
        }
    }
    return out;
}

Tensor conv2d_grad_input(const Tensor& kernels, const Tensor& grad_out) {
    // Gradient wrt input is correlation with the kernels flipped in both
    // spatial directions and with in/out channel roles swapped.
    const std::ptrdiff_t co = static_cast<std::ptrdiff_t>(kernels.shape[0]);
    const std::ptrdiff_t ci = static_cast<std::ptrdiff_t>(kernels.shape[1]);
    const std::ptrdiff_t h = static_cast<std::ptrdiff_t>(grad_out.shape[1]);
    const std::ptrdiff_t w = static_cast<std::ptrdiff_t>(grad_out.shape[2]);

    Tensor gin({static_cast<std::size_t>(ci), static_cast<std::size_t>(h),
                static_cast<std::size_t>(w)});
    const float* go = grad_out.data.data();
    const float* kn = kernels.data.data();
    float* gp = gin.data.data();

#pragma omp parallel for schedule(static)
    for (std::ptrdiff_t i = 0; i < ci; ++i) {
        for (std::ptrdiff_t y = 0; y < h; ++y) {
            for (std::ptrdiff_t x = 0; x < w; ++x) {
                float acc = 0.0f;
                for (std::ptrdiff_t o = 0; o < co; ++o) {
                    const float* kb = kn + ((o * ci + i) * 9);
                    const float* gb = go + o * h * w;
                    for (std::ptrdiff_t dy = 0; dy < 3; ++dy) {
                        const std::ptrdiff_t sy = y - (dy - 1);
                        if (sy < 0 || sy >= h) continue;
                        const float* row = gb + sy * w;
                        const float* kr = kb + dy * 3;
                        for (std::ptrdiff_t dx = 0; dx < 3; ++dx) {
                            const std::ptrdiff_t sx = x - (dx - 1);
                            if (sx < 0 || sx >= w) continue;
                            acc += row[sx] * kr[dx];
                        }
                    }
                }
                gp[(i * h + y) * w + x] = acc;
            }
        }
    }
    return gin;
}

Conv2dGrads conv2d_backward(const Tensor& input, const Tensor& kernels,
                            const Tensor& grad_out, bool need_kernel_grads) {
    check_conv_shapes(input, kernels);
    if (grad_out.shape.size() != 3 || grad_out.shape[0] != kernels.shape[0] ||
        grad_out.shape[1] != input.shape[1] || grad_out.shape[2] != input.shape[2])
        throw ContractError("conv2d_backward: grad_out shape mismatch");

    Conv2dGrads g;
    g.grad_input = conv2d_grad_input(kernels, grad_out);
    if (!need_kernel_grads) return g;

    const std::ptrdiff_t co = static_cast<std::ptrdiff_t>(kernels.shape[0]);
    const std::ptrdiff_t ci = static_cast<std::ptrdiff_t>(input.shape[0]);
    const std::ptrdiff_t h = static_cast<std::ptrdiff_t>(input.shape[1]);
    const std::ptrdiff_t w = static_cast<std::ptrdiff_t>(input.shape[2]);

    g.grad_kernels = Tensor(kernels.shape);
    const float* in = input.data.data();
    const float* go = grad_out.data.data();
    float* gk = g.grad_kernels.data.data();

#pragma omp parallel for schedule(static)
    for (std::ptrdiff_t o = 0; o < co; ++o) {
        const float* gb = go + o * h * w;
        for (std::ptrdiff_t i = 0; i < ci; ++i) {
            const float* ib = in + i * h * w;
            float* kb = gk + (o * ci + i) * 9;
            for (std::ptrdiff_t dy = 0; dy < 3; ++dy) {
                for (std::ptrdiff_t dx = 0; dx < 3; ++dx) {
                    float acc = 0.0f;
                    for (std::ptrdiff_t y = 0; y < h; ++y) {
                        const std::ptrdiff_t sy = y + dy - 1;
                        if (sy < 0 || sy >= h) continue;
                        const float* irow = ib + sy * w;
                        const float* grow = gb + y * w;
                        for (std::ptrdiff_t x = 0; x < w; ++x) {
                            const std::ptrdiff_t sx = x + dx - 1;
                            if (sx < 0 || sx >= w) continue;
                            acc += irow[sx] * grow[x];
                        }
                    }
                    kb[dy * 3 + dx] = acc;
                }
            }
        }
    }
    return g;
}

Tensor bias_add_forward(const Tensor& input, const std::vector<float>& bias) {
    if (input.shape.size() != 3)
        throw ContractError("bias_add: input must be C x H x W");
    if (bias.size() != input.shape[0])
        throw ContractError("bias_add: bias length " + std::to_string(bias.size()) +
                            " does not match channel count " + std::to_string(input.shape[0]));
    Tensor out = input;
    const std::size_t plane = input.shape[1] * input.shape[2];
    for (std::size_t c = 0; c < bias.size(); ++c) {
        float* p = out.data.data() + c * plane;
        const float b = bias[c];
        for (std::size_t k = 0; k < plane; ++k) p[k] += b;
    }
    return out;
}

std::vector<float> bias_add_grad(const Tensor& grad_out) {
    const std::size_t plane = grad_out.shape[1] * grad_out.shape[2];
    std::vector<float> g(grad_out.shape[0], 0.0f);
    for (std::size_t c = 0; c < g.size(); ++c) {
        const float* p = grad_out.data.data() + c * plane;
        float acc = 0.0f;
        for (std::size_t k = 0; k < plane; ++k) acc += p[k];
        g[c] = acc;
    }
    return g;
}

Tensor leaky_relu(const Tensor& input, float slope) {
    Tensor out = input;
    for (float& v : out.data)
        if (v < 0.0f) v *= slope;
    return out;
}

Tensor leaky_relu_backward(const Tensor& pre_act, const Tensor& grad_out, float slope) {
    if (!pre_act.same_shape(grad_out))
        throw ContractError("leaky_relu_backward: shape mismatch");
    Tensor g = grad_out;
    for (std::size_t k = 0; k < g.data.size(); ++k)
        if (pre_act.data[k] < 0.0f) g.data[k] *= slope;
    return g;
}

MseResult mse_loss(const Tensor& pred, const Tensor& target) {
    if (!pred.same_shape(target))
        throw ContractError("mse_loss: shape mismatch");
    const std::size_t n = pred.numel();
    double acc = 0.0;
    Tensor grad(pred.shape);
    const float inv = 2.0f / static_cast<float>(n);
    for (std::size_t k = 0; k < n; ++k) {
        const float d = pred.data[k] - target.data[k];
        acc += static_cast<double>(d) * d;
        grad.data[k] = d * inv;
    }
    return {static_cast<float>(acc / static_cast<double>(n)), std::move(grad)};
}

void check_finite(const Tensor& t, const char* where) {
    for (float v : t.data)
        if (!std::isfinite(v))
            throw Error(std::string("non-finite value in ") + where);
}

}  // namespace baf::ops
