#include "baf/filter_net.hpp"

#include <cmath>
#include <random>

#include "baf/binio.hpp"
#include "baf/ops.hpp"

namespace baf {

namespace {

constexpr char kMagic[4] = {'B', 'A', 'F', 'N'};
constexpr std::uint16_t kVersion = 1;

void check_config(const NetConfig& c) {
    if (c.n_filters == 0) throw ContractError("net config: n_filters must be positive");
    if (c.n_blocks < 2) throw ContractError("net config: n_blocks must be >= 2");
    if (!(c.leaky_slope > 0.0f && c.leaky_slope < 1.0f))
        throw ContractError("net config: leaky_slope must be in (0,1)");
}

double uniform01(std::mt19937_64& rng) {
    return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

Tensor init_kernel(std::size_t c_out, std::size_t c_in, std::mt19937_64& rng) {
    // fan-in scaled uniform, biases stay at zero
    Tensor k({c_out, c_in, 3, 3});
    const double limit = std::sqrt(1.0 / (static_cast<double>(c_in) * 9.0));
    for (float& v : k.data)
        v = static_cast<float>((2.0 * uniform01(rng) - 1.0) * limit);
    return k;
}

}  // namespace

ParamCounts count_params(const NetConfig& config) {
    check_config(config);
    const std::size_t f = config.n_filters;
    const std::size_t b = config.n_blocks;
    return {9 * (4 * f + (b - 1) * f * f + 3 * f), b * f + 3};
}

FilterNet build_network(const NetConfig& config) {
    check_config(config);
    const std::size_t f = config.n_filters;
    const std::size_t b = config.n_blocks;

    std::mt19937_64 rng(config.seed);
    FilterNet net;
    net.config = config;
    net.kernel_layers.reserve(b + 1);
    net.kernel_layers.push_back(init_kernel(f, 4, rng));
    for (std::size_t i = 1; i < b; ++i)
        net.kernel_layers.push_back(init_kernel(f, f, rng));
    net.kernel_layers.push_back(init_kernel(3, f, rng));

    for (std::size_t i = 0; i < b; ++i)
        net.bias_layers.emplace_back(f, 0.0f);
    net.bias_layers.emplace_back(3, 0.0f);
    return net;
}

namespace {

struct ForwardCache {
    std::vector<Tensor> conv_inputs;  // input to each conv layer
    std::vector<Tensor> pre_acts;     // conv+bias output per activated layer
    Tensor output;
};

ForwardCache run_forward(const FilterNet& net, const Tensor& input) {
    if (input.shape.size() != 3 || input.shape[0] != 4)
        throw ContractError("filter net: input must have 4 channels");
    if (input.shape[1] < 3 || input.shape[2] < 3)
        throw ContractError("filter net: input spatial dims must be >= 3");

    const std::size_t b = net.config.n_blocks;
    const float slope = net.config.leaky_slope;
    ForwardCache cache;
    cache.conv_inputs.reserve(b + 1);
    cache.pre_acts.reserve(b);

    // input block
    cache.conv_inputs.push_back(input);
    Tensor z = ops::bias_add_forward(
        ops::conv2d_forward(input, net.kernel_layers[0]), net.bias_layers[0]);
    Tensor h = ops::leaky_relu(z, slope);
    cache.pre_acts.push_back(std::move(z));

    // residual blocks
    for (std::size_t i = 1; i < b; ++i) {
        cache.conv_inputs.push_back(h);
        Tensor zi = ops::bias_add_forward(
            ops::conv2d_forward(h, net.kernel_layers[i]), net.bias_layers[i]);
        Tensor a = ops::leaky_relu(zi, slope);
        cache.pre_acts.push_back(std::move(zi));
        for (std::size_t k = 0; k < h.data.size(); ++k) a.data[k] += h.data[k];
        h = std::move(a);
    }

    // output conv + global skip over the YUV channels
    cache.conv_inputs.push_back(h);
    Tensor out = ops::bias_add_forward(
        ops::conv2d_forward(cache.conv_inputs.back(), net.kernel_layers[b]),
        net.bias_layers[b]);
    const std::size_t plane = input.shape[1] * input.shape[2];
    for (std::size_t k = 0; k < 3 * plane; ++k) out.data[k] += input.data[k];
    cache.output = std::move(out);
    return cache;
}

}  // namespace

Tensor forward(const FilterNet& net, const Tensor& input) {
    return run_forward(net, input).output;
}

TrainStep forward_backward(const FilterNet& net, const Tensor& input,
                           const Tensor& target, bool need_kernel_grads) {
    ForwardCache cache = run_forward(net, input);
    auto [loss, grad] = ops::mse_loss(cache.output, target);

    const std::size_t b = net.config.n_blocks;
    const float slope = net.config.leaky_slope;

    NetGrads grads;
    grads.bias_grads.resize(b + 1);
    if (need_kernel_grads) grads.kernel_grads.resize(b + 1);

    // output layer (no activation)
    grads.bias_grads[b] = ops::bias_add_grad(grad);
    auto gout = ops::conv2d_backward(cache.conv_inputs[b], net.kernel_layers[b],
                                     grad, need_kernel_grads);
    if (need_kernel_grads) grads.kernel_grads[b] = std::move(gout.grad_kernels);
    Tensor gh = std::move(gout.grad_input);

    // residual blocks, reverse order
    for (std::size_t i = b - 1; i >= 1; --i) {
        Tensor gz = ops::leaky_relu_backward(cache.pre_acts[i], gh, slope);
        grads.bias_grads[i] = ops::bias_add_grad(gz);
        auto gi = ops::conv2d_backward(cache.conv_inputs[i], net.kernel_layers[i],
                                       gz, need_kernel_grads);
        if (need_kernel_grads) grads.kernel_grads[i] = std::move(gi.grad_kernels);
        // skip branch adds gh through unchanged
        for (std::size_t k = 0; k < gh.data.size(); ++k)
            gh.data[k] += gi.grad_input.data[k];
    }

    // input block (input gradient not needed)
    Tensor gz0 = ops::leaky_relu_backward(cache.pre_acts[0], gh, slope);
    grads.bias_grads[0] = ops::bias_add_grad(gz0);
    if (need_kernel_grads) {
        auto g0 = ops::conv2d_backward(cache.conv_inputs[0], net.kernel_layers[0],
                                       gz0, true);
        grads.kernel_grads[0] = std::move(g0.grad_kernels);
    }
    return {loss, std::move(grads)};
}

std::vector<float> extract_biases(const FilterNet& net) {
    std::vector<float> out;
    out.reserve(net.bias_count());
    for (const auto& layer : net.bias_layers)
        out.insert(out.end(), layer.begin(), layer.end());
    return out;
}

void set_biases(FilterNet& net, const std::vector<float>& biases) {
    const std::size_t expect = net.bias_count();
    if (biases.size() != expect)
        throw ContractError("set_biases: expected " + std::to_string(expect) +
                            " values, got " + std::to_string(biases.size()));
    std::size_t pos = 0;
    for (auto& layer : net.bias_layers) {
        std::copy(biases.begin() + static_cast<std::ptrdiff_t>(pos),
                  biases.begin() + static_cast<std::ptrdiff_t>(pos + layer.size()),
                  layer.begin());
        pos += layer.size();
    }
}

std::vector<std::uint8_t> serialize_network(const FilterNet& net) {
    std::vector<std::uint8_t> out;
    out.insert(out.end(), kMagic, kMagic + 4);
    binio::put<std::uint16_t>(out, kVersion);
    binio::put<std::uint32_t>(out, net.config.n_filters);
    binio::put<std::uint32_t>(out, net.config.n_blocks);
    binio::put<float>(out, net.config.leaky_slope);
    for (const auto& k : net.kernel_layers)
        for (float v : k.data) binio::put<float>(out, v);
    for (const auto& b : net.bias_layers)
        for (float v : b) binio::put<float>(out, v);
    binio::put<std::uint32_t>(out, binio::crc32(out.data(), out.size()));
    return out;
}

FilterNet deserialize_network(const std::vector<std::uint8_t>& bytes) {
    std::size_t pos = 0;
    if (bytes.size() < 4 || std::memcmp(bytes.data(), kMagic, 4) != 0)
        throw FormatError("network checkpoint: bad magic");
    pos = 4;
    const auto version = binio::get<std::uint16_t>(bytes, pos);
    if (version != kVersion)
        throw FormatError("network checkpoint: unsupported version " +
                          std::to_string(version));
    NetConfig cfg;
    cfg.n_filters = binio::get<std::uint32_t>(bytes, pos);
    cfg.n_blocks = binio::get<std::uint32_t>(bytes, pos);
    cfg.leaky_slope = binio::get<float>(bytes, pos);

    FilterNet net = build_network(cfg);
    for (auto& k : net.kernel_layers)
        for (float& v : k.data) v = binio::get<float>(bytes, pos);
    for (auto& b : net.bias_layers)
        for (float& v : b) v = binio::get<float>(bytes, pos);

    if (pos + 4 != bytes.size())
        throw FormatError("network checkpoint: trailing bytes");
    const auto stored = binio::get<std::uint32_t>(bytes, pos);
    if (stored != binio::crc32(bytes.data(), bytes.size() - 4))
        throw FormatError("network checkpoint: CRC mismatch");
    return net;
}

void save_network(const FilterNet& net, const std::string& path) {
    binio::write_file(path, serialize_network(net));
}

FilterNet load_network(const std::string& path) {
    return deserialize_network(binio::read_file(path));
}

}  // namespace baf
