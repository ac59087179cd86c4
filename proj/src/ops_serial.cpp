#include "baf/ops.hpp"

namespace baf::ops::serial {

// Straight quadruple-loop formulation. Slow, obviously correct, serial.

Tensor conv2d_forward(const Tensor& input, const Tensor& kernels) {
    if (kernels.shape.size() != 4 || kernels.shape[1] != input.shape[0])
        throw ContractError("serial conv2d: shape mismatch");
    const std::ptrdiff_t co = static_cast<std::ptrdiff_t>(kernels.shape[0]);
    const std::ptrdiff_t ci = static_cast<std::ptrdiff_t>(input.shape[0]);
    const std::ptrdiff_t h = static_cast<std::ptrdiff_t>(input.shape[1]);
    const std::ptrdiff_t w = static_cast<std::ptrdiff_t>(input.shape[2]);

    Tensor out({static_cast<std::size_t>(co), static_cast<std::size_t>(h),
                static_cast<std::size_t>(w)});
    for (std::ptrdiff_t o = 0; o < co; ++o)
        for (std::ptrdiff_t y = 0; y < h; ++y)
            for (std::ptrdiff_t x = 0; x < w; ++x) {
                float acc = 0.0f;
                for (std::ptrdiff_t i = 0; i < ci; ++i)
                    for (std::ptrdiff_t dy = 0; dy < 3; ++dy)
                        for (std::ptrdiff_t dx = 0; dx < 3; ++dx) {
                            const std::ptrdiff_t sy = y + dy - 1;
                            const std::ptrdiff_t sx = x + dx - 1;
                            if (sy < 0 || sy >= h || sx < 0 || sx >= w) continue;
                            acc += input.data[(i * h + sy) * w + sx] *
                                   kernels.data[((o * ci + i) * 3 + dy) * 3 + dx];
                        }
                out.data[(o * h + y) * w + x] = acc;
            }
    return out;
}

Conv2dGrads conv2d_backward(const Tensor& input, const Tensor& kernels,
                            const Tensor& grad_out) {
    const std::ptrdiff_t co = static_cast<std::ptrdiff_t>(kernels.shape[0]);
    const std::ptrdiff_t ci = static_cast<std::ptrdiff_t>(input.shape[0]);
    const std::ptrdiff_t h = static_cast<std::ptrdiff_t>(input.shape[1]);
    const std::ptrdiff_t w = static_cast<std::ptrdiff_t>(input.shape[2]);

    Conv2dGrads g;
    g.grad_input = Tensor(input.shape);
    g.grad_kernels = Tensor(kernels.shape);
    for (std::ptrdiff_t o = 0; o < co; ++o)
        for (std::ptrdiff_t y = 0; y < h; ++y)
            for (std::ptrdiff_t x = 0; x < w; ++x) {
                const float go = grad_out.data[(o * h + y) * w + x];
                for (std::ptrdiff_t i = 0; i < ci; ++i)
                    for (std::ptrdiff_t dy = 0; dy < 3; ++dy)
                        for (std::ptrdiff_t dx = 0; dx < 3; ++dx) {
                            const std::ptrdiff_t sy = y + dy - 1;
                            const std::ptrdiff_t sx = x + dx - 1;
                            if (sy < 0 || sy >= h || sx < 0 || sx >= w) continue;
                            g.grad_input.data[(i * h + sy) * w + sx] +=
                                go * kernels.data[((o * ci + i) * 3 + dy) * 3 + dx];
                            g.grad_kernels.data[((o * ci + i) * 3 + dy) * 3 + dx] +=
                                go * input.data[(i * h + sy) * w + sx];
                        }
            }
    return g;
}

}  // namespace baf::ops::serial
