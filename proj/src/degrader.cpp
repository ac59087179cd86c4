#include "baf/degrader.hpp"

#include <algorithm>
#include <array>
#include <cmath>

namespace baf {

namespace {

constexpr std::size_t N = DegradeConfig::block_size;

// orthonormal DCT-II basis, C[k][n] = s(k) * cos(pi*(2n+1)*k/16)
const std::array<std::array<double, N>, N>& dct_basis() {
    static const auto basis = [] {
        std::array<std::array<double, N>, N> b{};
        for (std::size_t k = 0; k < N; ++k) {
            const double s = (k == 0) ? std::sqrt(1.0 / N) : std::sqrt(2.0 / N);
            for (std::size_t n = 0; n < N; ++n)
                b[k][n] = s * std::cos(M_PI * (2.0 * n + 1.0) * k / (2.0 * N));
        }
        return b;
    }();
    return basis;
}

double round_half_away(double v) {
    return v >= 0.0 ? std::floor(v + 0.5) : std::ceil(v - 0.5);
}

std::size_t mirror8(std::size_t i, std::size_t n) {
    return i < n ? i : 2 * n - 1 - i;  // padding is < block size, one fold suffices
}

void degrade_plane(const std::vector<std::uint8_t>& in, std::vector<std::uint8_t>& out,
                   std::size_t w, std::size_t h, double step, std::size_t& nnz) {
    const auto& C = dct_basis();
    const std::size_t bw = (w + N - 1) / N, bh = (h + N - 1) / N;
    std::vector<double> block(N * N), tmp(N * N), coeffs(N * N);

    for (std::size_t by = 0; by < bh; ++by)
        for (std::size_t bx = 0; bx < bw; ++bx) {
            for (std::size_t y = 0; y < N; ++y)
                for (std::size_t x = 0; x < N; ++x)
                    block[y * N + x] = static_cast<double>(
                        in[mirror8(by * N + y, h) * w + mirror8(bx * N + x, w)]);

            // 2D DCT: rows then columns
            for (std::size_t y = 0; y < N; ++y)
                for (std::size_t k = 0; k < N; ++k) {
                    double acc = 0.0;
                    for (std::size_t n = 0; n < N; ++n) acc += C[k][n] * block[y * N + n];
                    tmp[y * N + k] = acc;
                }
            for (std::size_t x = 0; x < N; ++x)
                for (std::size_t k = 0; k < N; ++k) {
                    double acc = 0.0;
                    for (std::size_t n = 0; n < N; ++n) acc += C[k][n] * tmp[n * N + x];
                    coeffs[k * N + x] = acc;
                }

            for (double& c : coeffs) {
                const double q = round_half_away(c / step);
                if (q != 0.0) ++nnz;
                c = q * step;
            }

            // inverse DCT: columns then rows
            for (std::size_t x = 0; x < N; ++x)
                for (std::size_t n = 0; n < N; ++n) {
                    double acc = 0.0;
                    for (std::size_t k = 0; k < N; ++k) acc += C[k][n] * coeffs[k * N + x];
                    tmp[n * N + x] = acc;
                }
            for (std::size_t y = 0; y < N; ++y)
                for (std::size_t n = 0; n < N; ++n) {
                    double acc = 0.0;
                    for (std::size_t k = 0; k < N; ++k) acc += C[k][n] * tmp[y * N + k];
                    block[y * N + n] = acc;
                }

            for (std::size_t y = 0; y < N && by * N + y < h; ++y)
                for (std::size_t x = 0; x < N && bx * N + x < w; ++x)
                    out[(by * N + y) * w + bx * N + x] = static_cast<std::uint8_t>(
                        std::clamp(round_half_away(block[y * N + x]), 0.0, 255.0));
        }
}

}  // namespace

DegradeResult degrade_frame_counted(const Frame420& frame, const DegradeConfig& config) {
    if (config.qp < 0 || config.qp > 63)
        throw ContractError("degrade: qp must be in 0..63");
    const double step = std::exp2((static_cast<double>(config.qp) - 4.0) / 6.0);

    DegradeResult r;
    r.frame = Frame420(frame.width, frame.height);
    degrade_plane(frame.y, r.frame.y, frame.width, frame.height, step, r.nonzero_coeffs);
    degrade_plane(frame.u, r.frame.u, frame.width / 2, frame.height / 2, step,
                  r.nonzero_coeffs);
    degrade_plane(frame.v, r.frame.v, frame.width / 2, frame.height / 2, step,
                  r.nonzero_coeffs);
    return r;
}

Frame420 degrade_frame(const Frame420& frame, const DegradeConfig& config) {
    return degrade_frame_counted(frame, config).frame;
}

DegradeSequenceResult degrade_sequence(const Sequence& seq, int qp) {
    DegradeConfig cfg;
    cfg.qp = qp;
    DegradeSequenceResult out;
    out.sequence.width = seq.width;
    out.sequence.height = seq.height;
    out.sequence.qp = qp;
    std::size_t nnz = 0;
    for (const auto& fr : seq.frames) {
        auto r = degrade_frame_counted(fr, cfg);
        nnz += r.nonzero_coeffs;
        out.sequence.frames.push_back(std::move(r.frame));
    }
    if (!seq.frames.empty()) {
        const double bits = static_cast<double>(nnz) * 6.0;
        out.pseudo_bitrate_kbps =
            bits * 30.0 / static_cast<double>(seq.frames.size()) / 1000.0;
    }
    return out;
}

}  // namespace baf
