#pragma once

#include <cstddef>
#include <cstdint>
#include <numeric>
#include <stdexcept>
#include <string>
#include <vector>

namespace baf {

// Error categories map 1:1 to CLI exit codes (2/3/4).
struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};
// Violated call contract: bad shapes, out-of-range arguments.
struct ContractError : Error {
    using Error::Error;
};
// Malformed external data: bad magic, checksum, truncation.
struct FormatError : Error {
    using Error::Error;
};
// Filesystem failures.
struct IoError : Error {
    using Error::Error;
};

// Dense row-major f32 tensor.
struct Tensor {
    std::vector<std::size_t> shape;
    std::vector<float> data;

    Tensor() = default;
    explicit Tensor(std::vector<std::size_t> s)
        : shape(std::move(s)), data(numel_of(shape), 0.0f) {}
    Tensor(std::vector<std::size_t> s, std::vector<float> d)
        : shape(std::move(s)), data(std::move(d)) {
        if (numel_of(shape) != data.size())
            throw ContractError("tensor: shape/data size mismatch");
    }

    static std::size_t numel_of(const std::vector<std::size_t>& s) {
        std::size_t n = 1;
        for (std::size_t d : s) n *= d;
        return s.empty() ? 0 : n;
    }

    std::size_t numel() const { return data.size(); }
    std::size_t dim(std::size_t i) const { return shape.at(i); }

    float& at3(std::size_t c, std::size_t y, std::size_t x) {
        return data[(c * shape[1] + y) * shape[2] + x];
    }
    float at3(std::size_t c, std::size_t y, std::size_t x) const {
        return data[(c * shape[1] + y) * shape[2] + x];
    }

    bool same_shape(const Tensor& o) const { return shape == o.shape; }
};

}  // namespace baf
