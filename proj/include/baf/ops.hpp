#pragma once

#include <cmath>
#include <utility>

#include "baf/tensor.hpp"

namespace baf::ops {

// 3x3 convolution, stride 1, zero padding 1: output spatial size equals input.
// kernels shape is [C_out, C_in, 3, 3]; no bias term.
Tensor conv2d_forward(const Tensor& input, const Tensor& kernels);

struct Conv2dGrads {
    Tensor grad_input;
    Tensor grad_kernels;  // empty when skipped
};
Tensor conv2d_grad_input(const Tensor& kernels, const Tensor& grad_out);
Conv2dGrads conv2d_backward(const Tensor& input, const Tensor& kernels,
                            const Tensor& grad_out, bool need_kernel_grads = true);

Tensor bias_add_forward(const Tensor& input, const std::vector<float>& bias);
// d(loss)/d(bias[c]) is the spatial sum of grad_out over channel c.
std::vector<float> bias_add_grad(const Tensor& grad_out);

Tensor leaky_relu(const Tensor& input, float slope);
// pre_act is the tensor the forward pass saw.
Tensor leaky_relu_backward(const Tensor& pre_act, const Tensor& grad_out, float slope);

struct MseResult {
    float loss;
    Tensor grad_pred;
};
MseResult mse_loss(const Tensor& pred, const Tensor& target);

void check_finite(const Tensor& t, const char* where);

}  // namespace baf::ops

// Naive reference kernels, kept serial. Used by tests and the benchmark.
namespace baf::ops::serial {
Tensor conv2d_forward(const Tensor& input, const Tensor& kernels);
Conv2dGrads conv2d_backward(const Tensor& input, const Tensor& kernels,
                            const Tensor& grad_out);
}  // namespace baf::ops::serial
