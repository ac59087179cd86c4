#include "baf/yuv.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

namespace baf {

namespace {

std::uint8_t quantize_byte(float v) {
    const float c = std::clamp(v, 0.0f, 255.0f);
    return static_cast<std::uint8_t>(std::lround(c));
}

// symmetric reflection, folds indefinitely for small planes
std::size_t mirror(long i, std::size_t n) {
    const long period = 2 * static_cast<long>(n);
    long j = i % period;
    if (j < 0) j += period;
    if (j >= static_cast<long>(n)) j = period - 1 - j;
    return static_cast<std::size_t>(j);
}

}  // namespace

Frame420::Frame420(std::size_t w, std::size_t h) : width(w), height(h) {
    if (w == 0 || h == 0 || w % 2 != 0 || h % 2 != 0)
        throw ContractError("Frame420: dimensions must be positive and even");
    y.assign(w * h, 0);
    u.assign(w / 2 * (h / 2), 0);
    v.assign(w / 2 * (h / 2), 0);
}

Sequence read_yuv420(const std::string& path, std::size_t width, std::size_t height,
                     long max_frames) {
    if (width == 0 || height == 0 || width % 2 != 0 || height % 2 != 0)
        throw ContractError("read_yuv420: dimensions must be positive and even");
    std::ifstream f(path, std::ios::binary);
    if (!f) throw IoError("cannot open: " + path);
    f.seekg(0, std::ios::end);
    const auto file_size = static_cast<std::size_t>(f.tellg());
    f.seekg(0, std::ios::beg);

    const std::size_t frame_size = width * height * 3 / 2;
    if (file_size % frame_size != 0)
        throw FormatError("file size " + std::to_string(file_size) +
                          " is not a multiple of the I420 frame size " +
                          std::to_string(frame_size) + ": " + path);

    std::size_t n = file_size / frame_size;
    if (max_frames >= 0) n = std::min(n, static_cast<std::size_t>(max_frames));

    Sequence seq;
    seq.width = width;
    seq.height = height;
    seq.frames.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
        Frame420 fr(width, height);
        f.read(reinterpret_cast<char*>(fr.y.data()), static_cast<std::streamsize>(fr.y.size()));
        f.read(reinterpret_cast<char*>(fr.u.data()), static_cast<std::streamsize>(fr.u.size()));
        f.read(reinterpret_cast<char*>(fr.v.data()), static_cast<std::streamsize>(fr.v.size()));
        if (!f) throw IoError("read failed: " + path);
        seq.frames.push_back(std::move(fr));
    }
    return seq;
}

void write_yuv420(const Sequence& seq, const std::string& path) {
    std::ofstream f(path, std::ios::binary | std::ios::trunc);
    if (!f) throw IoError("cannot open for writing: " + path);
    for (const auto& fr : seq.frames) {
        f.write(reinterpret_cast<const char*>(fr.y.data()), static_cast<std::streamsize>(fr.y.size()));
        f.write(reinterpret_cast<const char*>(fr.u.data()), static_cast<std::streamsize>(fr.u.size()));
        f.write(reinterpret_cast<const char*>(fr.v.data()), static_cast<std::streamsize>(fr.v.size()));
    }
    if (!f) throw IoError("write failed: " + path);
}

std::vector<std::uint8_t> upsample_chroma(const std::vector<std::uint8_t>& plane,
                                          std::size_t half_w, std::size_t half_h) {
    if (plane.size() != half_w * half_h)
        throw ContractError("upsample_chroma: plane size mismatch");
    std::vector<std::uint8_t> out(half_w * 2 * half_h * 2);
    for (std::size_t y = 0; y < half_h * 2; ++y)
        for (std::size_t x = 0; x < half_w * 2; ++x)
            out[y * half_w * 2 + x] = plane[(y / 2) * half_w + x / 2];
    return out;
}

std::vector<std::uint8_t> downsample_chroma(const std::vector<std::uint8_t>& plane,
                                            std::size_t w, std::size_t h) {
    if (w % 2 != 0 || h % 2 != 0)
        throw ContractError("downsample_chroma: dimensions must be even");
    if (plane.size() != w * h)
        throw ContractError("downsample_chroma: plane size mismatch");
    std::vector<std::uint8_t> out(w / 2 * (h / 2));
    for (std::size_t y = 0; y < h / 2; ++y)
        for (std::size_t x = 0; x < w / 2; ++x) {
            const unsigned s = plane[(2 * y) * w + 2 * x] + plane[(2 * y) * w + 2 * x + 1] +
                               plane[(2 * y + 1) * w + 2 * x] +
                               plane[(2 * y + 1) * w + 2 * x + 1];
            // mean with round half away from zero
            out[y * (w / 2) + x] = static_cast<std::uint8_t>((s + 2) / 4);
        }
    return out;
}

Tensor make_input_tensor(const Frame420& patch, int qp) {
    if (qp < 0 || qp > 63)
        throw ContractError("make_input_tensor: qp must be in 0..63");
    const std::size_t w = patch.width, h = patch.height;
    Tensor t({4, h, w});
    const auto uu = upsample_chroma(patch.u, w / 2, h / 2);
    const auto vv = upsample_chroma(patch.v, w / 2, h / 2);
    const float qn = static_cast<float>(qp) / 63.0f;
    for (std::size_t k = 0; k < w * h; ++k) {
        t.data[k] = static_cast<float>(patch.y[k]) / 255.0f;
        t.data[w * h + k] = static_cast<float>(uu[k]) / 255.0f;
        t.data[2 * w * h + k] = static_cast<float>(vv[k]) / 255.0f;
        t.data[3 * w * h + k] = qn;
    }
    return t;
}

Tensor make_target_tensor(const Frame420& patch) {
    const std::size_t w = patch.width, h = patch.height;
    Tensor t({3, h, w});
    const auto uu = upsample_chroma(patch.u, w / 2, h / 2);
    const auto vv = upsample_chroma(patch.v, w / 2, h / 2);
    for (std::size_t k = 0; k < w * h; ++k) {
        t.data[k] = static_cast<float>(patch.y[k]) / 255.0f;
        t.data[w * h + k] = static_cast<float>(uu[k]) / 255.0f;
        t.data[2 * w * h + k] = static_cast<float>(vv[k]) / 255.0f;
    }
    return t;
}

namespace {

Frame420 crop_mirrored(const Frame420& frame, std::size_t ox, std::size_t oy,
                       std::size_t patch) {
    Frame420 out(patch, patch);
    for (std::size_t y = 0; y < patch; ++y)
        for (std::size_t x = 0; x < patch; ++x)
            out.y[y * patch + x] =
                frame.y[mirror(static_cast<long>(oy + y), frame.height) * frame.width +
                        mirror(static_cast<long>(ox + x), frame.width)];
    const std::size_t cw = frame.width / 2, ch = frame.height / 2, cp = patch / 2;
    for (std::size_t y = 0; y < cp; ++y)
        for (std::size_t x = 0; x < cp; ++x) {
            const std::size_t sy = mirror(static_cast<long>(oy / 2 + y), ch);
            const std::size_t sx = mirror(static_cast<long>(ox / 2 + x), cw);
            out.u[y * cp + x] = frame.u[sy * cw + sx];
            out.v[y * cp + x] = frame.v[sy * cw + sx];
        }
    return out;
}

}  // namespace

std::vector<Frame420> extract_patches_grid(const Frame420& frame, std::size_t patch) {
    if (patch == 0 || patch % 2 != 0)
        throw ContractError("extract_patches_grid: patch size must be positive and even");
    const std::size_t tx = (frame.width + patch - 1) / patch;
    const std::size_t ty = (frame.height + patch - 1) / patch;
    std::vector<Frame420> out;
    out.reserve(tx * ty);
    for (std::size_t j = 0; j < ty; ++j)
        for (std::size_t i = 0; i < tx; ++i)
            out.push_back(crop_mirrored(frame, i * patch, j * patch, patch));
    return out;
}

std::vector<Frame420> extract_patches_random(const Frame420& frame,
                                             std::mt19937_64& rng, std::size_t n,
                                             std::size_t patch) {
    if (frame.width < patch || frame.height < patch)
        throw ContractError("extract_patches_random: frame smaller than patch size");
    std::vector<Frame420> out;
    out.reserve(n);
    for (std::size_t k = 0; k < n; ++k) {
        // even offsets keep chroma aligned
        const std::size_t ox = (rng() % (frame.width - patch + 1)) & ~std::size_t{1};
        const std::size_t oy = (rng() % (frame.height - patch + 1)) & ~std::size_t{1};
        out.push_back(crop_mirrored(frame, ox, oy, patch));
    }
    return out;
}

Frame420 reassemble(const std::vector<Tensor>& patches, std::size_t width,
                    std::size_t height, std::size_t patch) {
    const std::size_t tx = (width + patch - 1) / patch;
    const std::size_t ty = (height + patch - 1) / patch;
    if (patches.size() != tx * ty)
        throw ContractError("reassemble: expected " + std::to_string(tx * ty) +
                            " patches, got " + std::to_string(patches.size()));

    const std::size_t pw = tx * patch, ph = ty * patch;
    std::vector<float> canvas(3 * pw * ph, 0.0f);
    for (std::size_t j = 0; j < ty; ++j)
        for (std::size_t i = 0; i < tx; ++i) {
            const Tensor& t = patches[j * tx + i];
            if (t.shape.size() != 3 || t.shape[0] != 3 || t.shape[1] != patch ||
                t.shape[2] != patch)
                throw ContractError("reassemble: patch tensor must be 3 x patch x patch");
            for (std::size_t c = 0; c < 3; ++c)
                for (std::size_t y = 0; y < patch; ++y)
                    for (std::size_t x = 0; x < patch; ++x)
                        canvas[(c * ph + j * patch + y) * pw + i * patch + x] =
                            t.at3(c, y, x);
        }

    Frame420 out(width, height);
    std::vector<std::uint8_t> uf(width * height), vf(width * height);
    for (std::size_t y = 0; y < height; ++y)
        for (std::size_t x = 0; x < width; ++x) {
            out.y[y * width + x] = quantize_byte(canvas[y * pw + x] * 255.0f);
            uf[y * width + x] = quantize_byte(canvas[(ph + y) * pw + x] * 255.0f);
            vf[y * width + x] = quantize_byte(canvas[(2 * ph + y) * pw + x] * 255.0f);
        }
    out.u = downsample_chroma(uf, width, height);
    out.v = downsample_chroma(vf, width, height);
    return out;
}

}  // namespace baf
