#include "baf/update_codec.hpp"

#include <lzma.h>

#include <cstring>

#include "baf/binio.hpp"

namespace baf {

namespace {

constexpr char kMagic[4] = {'B', 'A', 'U', 'P'};
constexpr std::uint16_t kVersion = 1;

std::vector<std::uint8_t> lzma_compress(const std::vector<std::uint8_t>& raw) {
    std::vector<std::uint8_t> out(lzma_stream_buffer_bound(raw.size()));
    std::size_t out_pos = 0;
    const lzma_ret rc = lzma_easy_buffer_encode(
        9 | LZMA_PRESET_EXTREME, LZMA_CHECK_CRC32, nullptr, raw.data(), raw.size(),
        out.data(), &out_pos, out.size());
    if (rc != LZMA_OK) throw Error("lzma compression failed");
    out.resize(out_pos);
    return out;
}

std::vector<std::uint8_t> lzma_decompress(const std::uint8_t* data, std::size_t len,
                                          std::size_t expected_size) {
    std::vector<std::uint8_t> out(expected_size);
    std::uint64_t memlimit = UINT64_MAX;
    std::size_t in_pos = 0, out_pos = 0;
    const lzma_ret rc = lzma_stream_buffer_decode(
        &memlimit, 0, nullptr, data, &in_pos, len, out.data(), &out_pos, out.size());
    if (rc != LZMA_OK || in_pos != len)
        throw FormatError("bias payload: corrupt compressed body");
    out.resize(out_pos);
    return out;
}

}  // namespace

std::vector<std::uint8_t> encode_payload(const std::vector<float>& biases,
                                         const NetConfig& config) {
    const std::size_t expect = count_params(config).bias_count;
    if (biases.size() != expect)
        throw ContractError("encode_payload: bias count " + std::to_string(biases.size()) +
                            " does not match config bias count " + std::to_string(expect));

    // body: biases widened to f64, little-endian
    std::vector<std::uint8_t> body;
    body.reserve(biases.size() * 8);
    for (float v : biases) binio::put<double>(body, static_cast<double>(v));

    std::vector<std::uint8_t> out;
    out.insert(out.end(), kMagic, kMagic + 4);
    binio::put<std::uint16_t>(out, kVersion);
    binio::put<std::uint32_t>(out, config.n_filters);
    binio::put<std::uint32_t>(out, config.n_blocks);
    binio::put<std::uint32_t>(out, static_cast<std::uint32_t>(biases.size()));
    binio::put<std::uint32_t>(out, binio::crc32(body.data(), body.size()));

    const auto compressed = lzma_compress(body);
    out.insert(out.end(), compressed.begin(), compressed.end());
    return out;
}

DecodedPayload decode_payload(const std::vector<std::uint8_t>& bytes) {
    if (bytes.size() < kPayloadHeaderSize)
        throw FormatError("bias payload: truncated header");
    if (std::memcmp(bytes.data(), kMagic, 4) != 0)
        throw FormatError("bias payload: bad magic");
    std::size_t pos = 4;
    const auto version = binio::get<std::uint16_t>(bytes, pos);
    if (version != kVersion)
        throw FormatError("bias payload: unsupported version " + std::to_string(version));
    DecodedPayload p;
    p.n_filters = binio::get<std::uint32_t>(bytes, pos);
    p.n_blocks = binio::get<std::uint32_t>(bytes, pos);
    const auto count = binio::get<std::uint32_t>(bytes, pos);
    const auto crc = binio::get<std::uint32_t>(bytes, pos);

    // header cross-check catches flips in the config fields
    NetConfig cfg;
    cfg.n_filters = p.n_filters;
    cfg.n_blocks = p.n_blocks;
    std::size_t expect = 0;
    try {
        expect = count_params(cfg).bias_count;
    } catch (const ContractError&) {
        throw FormatError("bias payload: invalid config fields");
    }
    if (count != expect)
        throw FormatError("bias payload: count field inconsistent with config");

    const auto body = lzma_decompress(bytes.data() + pos, bytes.size() - pos,
                                      static_cast<std::size_t>(count) * 8);
    if (body.size() != static_cast<std::size_t>(count) * 8)
        throw FormatError("bias payload: body length mismatch");
    if (binio::crc32(body.data(), body.size()) != crc)
        throw FormatError("bias payload: CRC mismatch, body corrupted");

    p.biases.resize(count);
    std::size_t bpos = 0;
    for (auto& v : p.biases)
        v = static_cast<float>(binio::get<double>(body, bpos));
    return p;
}

FilterNet apply_update(const FilterNet& pretrained,
                       const std::vector<std::uint8_t>& payload_bytes) {
    DecodedPayload p = decode_payload(payload_bytes);
    if (p.n_filters != pretrained.config.n_filters ||
        p.n_blocks != pretrained.config.n_blocks)
        throw ContractError(
            "apply_update: payload config (" + std::to_string(p.n_filters) + "," +
            std::to_string(p.n_blocks) + ") does not match network config (" +
            std::to_string(pretrained.config.n_filters) + "," +
            std::to_string(pretrained.config.n_blocks) + ")");
    FilterNet net = pretrained;
    set_biases(net, p.biases);
    return net;
}

}  // namespace baf
