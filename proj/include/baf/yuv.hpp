#pragma once

#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "baf/tensor.hpp"

namespace baf {

// One 8-bit YUV 4:2:0 frame: full-resolution luma, half-resolution chroma.
struct Frame420 {
    std::size_t width = 0;
    std::size_t height = 0;
    std::vector<std::uint8_t> y;
    std::vector<std::uint8_t> u;
    std::vector<std::uint8_t> v;

    Frame420() = default;
    Frame420(std::size_t w, std::size_t h);
    std::size_t byte_size() const { return width * height * 3 / 2; }
};

struct Sequence {
    std::vector<Frame420> frames;
    std::size_t width = 0;
    std::size_t height = 0;
    int qp = -1;
};

// max_frames < 0 reads the whole file.
Sequence read_yuv420(const std::string& path, std::size_t width, std::size_t height,
                     long max_frames = -1);
void write_yuv420(const Sequence& seq, const std::string& path);

// nearest-neighbor 2x replication
std::vector<std::uint8_t> upsample_chroma(const std::vector<std::uint8_t>& plane,
                                          std::size_t half_w, std::size_t half_h);
// 2x2 mean, rounded half away from zero
std::vector<std::uint8_t> downsample_chroma(const std::vector<std::uint8_t>& plane,
                                            std::size_t w, std::size_t h);

// 4-channel input tensor: Y/255, upsampled U/255, upsampled V/255, qp/63.
Tensor make_input_tensor(const Frame420& patch, int qp);
// 3-channel target tensor from an original patch (Y, upsampled U, V, /255).
Tensor make_target_tensor(const Frame420& patch);

// Grid mode tiles a reflect-padded frame; random mode crops inside the frame
// at even offsets.
std::vector<Frame420> extract_patches_grid(const Frame420& frame,
                                           std::size_t patch = 128);
std::vector<Frame420> extract_patches_random(const Frame420& frame,
                                             std::mt19937_64& rng, std::size_t n,
                                             std::size_t patch = 128);

Frame420 reassemble(const std::vector<Tensor>& patches, std::size_t width,
                    std::size_t height, std::size_t patch = 128);

}  // namespace baf
