#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "baf/tensor.hpp"

namespace baf {

struct NetConfig {
    std::uint32_t n_filters = 16;
    std::uint32_t n_blocks = 3;
    float leaky_slope = 0.3f;
    std::uint64_t seed = 0;

    bool operator==(const NetConfig& o) const {
        return n_filters == o.n_filters && n_blocks == o.n_blocks;
    }
};

struct ParamCounts {
    std::size_t kernel_count;
    std::size_t bias_count;
};

// kernel_count = 9*(4F + (B-1)F^2 + 3F), bias_count = B*F + 3
ParamCounts count_params(const NetConfig& config);

// Post-processing filter: input block (conv 4->F, bias, LeakyReLU),
// n_blocks-1 residual blocks on F channels, output conv F->3 with bias,
// global skip adding the YUV input channels to the output.
struct FilterNet {
    NetConfig config;
    std::vector<Tensor> kernel_layers;            // n_blocks + 1 conv kernels
    std::vector<std::vector<float>> bias_layers;  // one bias vector per conv

    std::size_t bias_count() const { return count_params(config).bias_count; }
};

struct NetGrads {
    std::vector<Tensor> kernel_grads;  // empty in bias-only mode
    std::vector<std::vector<float>> bias_grads;
};

FilterNet build_network(const NetConfig& config);

Tensor forward(const FilterNet& net, const Tensor& input);

// Forward + MSE loss + backward in one pass. Kernel gradients are skipped
// when kernels are frozen.
struct TrainStep {
    float loss;
    NetGrads grads;
};
TrainStep forward_backward(const FilterNet& net, const Tensor& input,
                           const Tensor& target, bool need_kernel_grads);

std::vector<float> extract_biases(const FilterNet& net);
void set_biases(FilterNet& net, const std::vector<float>& biases);

// Checkpoint: "BAFN", version u16, n_filters u32, n_blocks u32,
// leaky_slope f32, parameters as LE f32, CRC-32 trailer.
std::vector<std::uint8_t> serialize_network(const FilterNet& net);
FilterNet deserialize_network(const std::vector<std::uint8_t>& bytes);
void save_network(const FilterNet& net, const std::string& path);
FilterNet load_network(const std::string& path);

}  // namespace baf
