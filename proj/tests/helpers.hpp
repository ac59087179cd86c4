#pragma once

#include <cmath>
#include <random>
#include <vector>

#include "baf/filter_net.hpp"
#include "baf/tensor.hpp"
#include "baf/yuv.hpp"

namespace testutil {

inline double urand(std::mt19937_64& rng) {
    return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

inline baf::Tensor random_tensor(std::vector<std::size_t> shape, std::mt19937_64& rng,
                                 float lo = -1.0f, float hi = 1.0f) {
    baf::Tensor t(std::move(shape));
    for (float& v : t.data)
        v = lo + static_cast<float>(urand(rng)) * (hi - lo);
    return t;
}

// Natural-image-like test content: smooth gradients plus sinusoidal texture
// and a little deterministic noise.
inline baf::Frame420 synth_frame(std::size_t w, std::size_t h, std::size_t t,
                                 std::uint64_t seed = 7) {
    std::mt19937_64 rng(seed * 1000003 + t);
    const double px = 0.5 + urand(rng), py = 0.5 + urand(rng);
    baf::Frame420 f(w, h);
    for (std::size_t y = 0; y < h; ++y)
        for (std::size_t x = 0; x < w; ++x) {
            const double v = 110.0 + 60.0 * std::sin(0.09 * px * x + 0.04 * t) +
                             45.0 * std::cos(0.07 * py * y - 0.03 * t) +
                             20.0 * std::sin(0.21 * (x + y)) + 8.0 * (urand(rng) - 0.5);
            f.y[y * w + x] =
                static_cast<std::uint8_t>(std::clamp(v, 0.0, 255.0));
        }
    for (std::size_t y = 0; y < h / 2; ++y)
        for (std::size_t x = 0; x < w / 2; ++x) {
            const double u = 128.0 + 40.0 * std::sin(0.06 * x + 0.02 * t) +
                             6.0 * (urand(rng) - 0.5);
            const double v = 128.0 + 40.0 * std::cos(0.05 * y - 0.02 * t) +
                             6.0 * (urand(rng) - 0.5);
            f.u[y * (w / 2) + x] =
                static_cast<std::uint8_t>(std::clamp(u, 0.0, 255.0));
            f.v[y * (w / 2) + x] =
                static_cast<std::uint8_t>(std::clamp(v, 0.0, 255.0));
        }
    return f;
}

inline baf::Sequence synth_sequence(std::size_t n, std::size_t w, std::size_t h,
                                    std::uint64_t seed = 7) {
    baf::Sequence s;
    s.width = w;
    s.height = h;
    for (std::size_t t = 0; t < n; ++t) s.frames.push_back(synth_frame(w, h, t, seed));
    return s;
}

}  // namespace testutil
