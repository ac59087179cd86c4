#pragma once

#include "baf/yuv.hpp"

namespace baf {

// Synthetic block-codec stand-in: 8x8 DCT, uniform quantization with step
// 2^((qp-4)/6), inverse DCT. Deterministic, no entropy coding.
struct DegradeConfig {
    int qp = 32;
    static constexpr std::size_t block_size = 8;
};

struct DegradeResult {
    Frame420 frame;
    std::size_t nonzero_coeffs = 0;
};

DegradeResult degrade_frame_counted(const Frame420& frame, const DegradeConfig& config);
Frame420 degrade_frame(const Frame420& frame, const DegradeConfig& config);

struct DegradeSequenceResult {
    Sequence sequence;
    // synthetic rate proxy: nonzero quantized coefficients * 6 bits,
    // expressed as kbps at 30 fps
    double pseudo_bitrate_kbps = 0.0;
};
DegradeSequenceResult degrade_sequence(const Sequence& seq, int qp);

}  // namespace baf
