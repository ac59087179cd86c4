#pragma once

#include <cstdint>
#include <vector>

#include "baf/filter_net.hpp"

namespace baf {

// Bias update payload: "BAUP", version u16, n_filters u32, n_blocks u32,
// count u32, crc32 u32 over the uncompressed body, then the body (count
// LE f64 values) compressed with LZMA. Header is 22 bytes.
constexpr std::size_t kPayloadHeaderSize = 22;

std::vector<std::uint8_t> encode_payload(const std::vector<float>& biases,
                                         const NetConfig& config);

struct DecodedPayload {
    std::vector<float> biases;
    std::uint32_t n_filters;
    std::uint32_t n_blocks;
};
DecodedPayload decode_payload(const std::vector<std::uint8_t>& bytes);

// Installs the payload biases into a copy of the pretrained network.
FilterNet apply_update(const FilterNet& pretrained,
                       const std::vector<std::uint8_t>& payload_bytes);

}  // namespace baf
