#include <CLI11.hpp>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#ifdef _OPENMP
#include <omp.h>
#endif

#include "baf/binio.hpp"
#include "baf/degrader.hpp"
#include "baf/filter_net.hpp"
#include "baf/metrics.hpp"
#include "baf/training.hpp"
#include "baf/update_codec.hpp"
#include "baf/yuv.hpp"

namespace fs = std::filesystem;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitUsage = 2;
constexpr int kExitIo = 3;
constexpr int kExitFormat = 4;

using KvList = std::vector<std::pair<std::string, std::string>>;

// Reproducibility sidecar: key=value lines plus a hash of them, written
// next to every output artifact.
void write_manifest(const std::string& artifact_path, const std::string& subcommand,
                    const KvList& kv) {
    std::string body = "subcommand=" + subcommand + "\n";
    for (const auto& [k, v] : kv) body += k + "=" + v + "\n";
    const auto hash = baf::binio::crc32(
        reinterpret_cast<const std::uint8_t*>(body.data()), body.size());
    char buf[16];
    std::snprintf(buf, sizeof(buf), "%08x", hash);
    body += std::string("config_hash=") + buf + "\n";

    std::ofstream f(artifact_path + ".manifest", std::ios::trunc);
    if (!f) throw baf::IoError("cannot write manifest for " + artifact_path);
    f << body;
}

std::string fmt(double v) {
    std::ostringstream ss;
    ss << v;
    return ss.str();
}

baf::NetConfig parse_net_config(const std::string& spec, float slope,
                                std::uint64_t seed) {
    baf::NetConfig cfg;
    cfg.leaky_slope = slope;
    cfg.seed = seed;
    const auto x = spec.find('x');
    if (x == std::string::npos)
        throw baf::ContractError("--config must look like FILTERSxBLOCKS, e.g. 16x3");
    try {
        cfg.n_filters = static_cast<std::uint32_t>(std::stoul(spec.substr(0, x)));
        cfg.n_blocks = static_cast<std::uint32_t>(std::stoul(spec.substr(x + 1)));
    } catch (const std::exception&) {
        throw baf::ContractError("--config must look like FILTERSxBLOCKS, e.g. 16x3");
    }
    return cfg;
}

std::vector<int> parse_qp_list(const std::string& s) {
    std::vector<int> out;
    std::istringstream ss(s);
    std::string tok;
    while (std::getline(ss, tok, ',')) {
        if (tok.empty()) continue;
        out.push_back(std::stoi(tok));
    }
    if (out.empty()) throw baf::ContractError("--qps: empty list");
    for (int q : out)
        if (q < 0 || q > 63)
            throw baf::ContractError("--qps: qp " + std::to_string(q) +
                                     " out of valid range 0..63");
    return out;
}

baf::Sequence filter_sequence(const baf::FilterNet& net, const baf::Sequence& in,
                              int qp, std::size_t patch) {
    baf::Sequence out;
    out.width = in.width;
    out.height = in.height;
    out.qp = qp;
    for (const auto& frame : in.frames) {
        auto patches = baf::extract_patches_grid(frame, patch);
        std::vector<baf::Tensor> filtered;
        filtered.reserve(patches.size());
        for (const auto& p : patches)
            filtered.push_back(baf::forward(net, baf::make_input_tensor(p, qp)));
        out.frames.push_back(baf::reassemble(filtered, in.width, in.height, patch));
    }
    return out;
}

int cmd_degrade(const std::string& in, std::size_t w, std::size_t h, long frames,
                int qp, const std::string& out) {
    if (qp < 0 || qp > 63) {
        std::cerr << "error: --qp " << qp << " out of valid range 0..63\n";
        return kExitUsage;
    }
    auto seq = baf::read_yuv420(in, w, h, frames);
    auto result = baf::degrade_sequence(seq, qp);
    baf::write_yuv420(result.sequence, out);

    auto sp = baf::sequence_psnr(result.sequence, seq);
    baf::write_rd_csv({{qp, result.pseudo_bitrate_kbps, sp.y_db, sp.u_db, sp.v_db}},
                      out + ".rate.csv");
    write_manifest(out, "degrade",
                   {{"in", in},
                    {"w", std::to_string(w)},
                    {"h", std::to_string(h)},
                    {"frames", std::to_string(frames)},
                    {"qp", std::to_string(qp)},
                    {"out", out}});
    std::cout << "degraded " << seq.frames.size() << " frames at qp " << qp
              << ", pseudo-bitrate " << result.pseudo_bitrate_kbps << " kbps\n";
    return kExitOk;
}

int cmd_pretrain(const std::string& originals, std::size_t w, std::size_t h,
                 long frames, const std::string& qps_str, const std::string& config_str,
                 std::size_t epochs, std::size_t batch, std::size_t batches_per_epoch,
                 double lr, std::size_t patch, float slope, std::uint64_t seed,
                 const std::string& out) {
    const auto qps = parse_qp_list(qps_str);
    const auto cfg = parse_net_config(config_str, slope, seed);

    std::vector<fs::path> files;
    for (const auto& e : fs::directory_iterator(originals))
        if (e.is_regular_file() && e.path().extension() == ".yuv")
            files.push_back(e.path());
    std::sort(files.begin(), files.end());
    if (files.empty()) {
        std::cerr << "error: no .yuv files in " << originals << "\n";
        return kExitIo;
    }

    baf::PatchPairSet dataset;
    std::size_t next_source = 0;
    for (const auto& f : files) {
        auto orig = baf::read_yuv420(f.string(), w, h, frames);
        for (int qp : qps) {
            auto deg = baf::degrade_sequence(orig, qp).sequence;
            auto pairs = baf::make_pairs_grid(deg, orig, qp, patch);
            for (auto& p : pairs.pairs) {
                p.source_id += next_source;
                dataset.pairs.push_back(std::move(p));
            }
            next_source += orig.frames.size();
        }
    }

    baf::TrainConfig tc;
    tc.mode = baf::TrainMode::pretrain;
    tc.epochs = epochs;
    tc.batch_size = batch;
    tc.batches_per_epoch = batches_per_epoch;
    tc.initial_lr = static_cast<float>(lr);
    tc.seed = seed;

    auto [net, reports] = baf::pretrain(baf::build_network(cfg), dataset, tc);
    baf::save_network(net, out);
    baf::write_history_csv(reports, out + ".history.csv");
    write_manifest(out, "pretrain",
                   {{"originals", originals},
                    {"w", std::to_string(w)},
                    {"h", std::to_string(h)},
                    {"frames", std::to_string(frames)},
                    {"qps", qps_str},
                    {"config", config_str},
                    {"epochs", std::to_string(epochs)},
                    {"batch", std::to_string(batch)},
                    {"batches_per_epoch", std::to_string(batches_per_epoch)},
                    {"lr", fmt(lr)},
                    {"patch", std::to_string(patch)},
                    {"slope", fmt(slope)},
                    {"seed", std::to_string(seed)},
                    {"out", out}});
    if (!reports.empty())
        std::cout << "pretrained " << epochs << " epochs, final mean loss "
                  << reports.back().mean_loss << "\n";
    return kExitOk;
}

int cmd_finetune(const std::string& pretrained, const std::string& degraded,
                 const std::string& original, std::size_t w, std::size_t h,
                 long frames, int qp, std::size_t epochs, std::size_t batch, double lr,
                 std::size_t patch, long segment_frames, std::uint64_t seed,
                 const std::string& out) {
    auto net = baf::load_network(pretrained);
    auto deg = baf::read_yuv420(degraded, w, h, frames);
    auto orig = baf::read_yuv420(original, w, h, frames);
    if (deg.frames.size() != orig.frames.size()) {
        std::cerr << "error: degraded has " << deg.frames.size()
                  << " frames but original has " << orig.frames.size() << "\n";
        return kExitFormat;
    }

    const std::size_t total = deg.frames.size();
    const std::size_t seg_len =
        segment_frames > 0 ? static_cast<std::size_t>(segment_frames) : total;
    const std::size_t n_segments = (total + seg_len - 1) / seg_len;

    for (std::size_t s = 0; s < n_segments; ++s) {
        baf::Sequence dseg, oseg;
        dseg.width = oseg.width = w;
        dseg.height = oseg.height = h;
        dseg.qp = qp;
        for (std::size_t f = s * seg_len; f < std::min(total, (s + 1) * seg_len); ++f) {
            dseg.frames.push_back(deg.frames[f]);
            oseg.frames.push_back(orig.frames[f]);
        }
        auto dataset = baf::make_pairs_grid(dseg, oseg, qp, patch);

        baf::TrainConfig tc;
        tc.mode = baf::TrainMode::finetune;
        tc.epochs = epochs;
        tc.batch_size = batch;
        tc.initial_lr = static_cast<float>(lr);
        tc.seed = seed + s;

        auto [tuned, reports] = baf::finetune(net, dataset, tc);
        const auto payload =
            baf::encode_payload(baf::extract_biases(tuned), tuned.config);

        const std::string path = n_segments == 1 ? out : out + ".seg" + std::to_string(s);
        baf::binio::write_file(path, payload);
        baf::write_history_csv(reports, path + ".history.csv");
        write_manifest(path, "finetune",
                       {{"pretrained", pretrained},
                        {"degraded", degraded},
                        {"original", original},
                        {"w", std::to_string(w)},
                        {"h", std::to_string(h)},
                        {"frames", std::to_string(frames)},
                        {"qp", std::to_string(qp)},
                        {"epochs", std::to_string(epochs)},
                        {"batch", std::to_string(batch)},
                        {"lr", fmt(lr)},
                        {"patch", std::to_string(patch)},
                        {"segment_frames", std::to_string(segment_frames)},
                        {"segment", std::to_string(s)},
                        {"seed", std::to_string(seed)},
                        {"out", out}});
        if (!reports.empty())
            std::cout << "segment " << s << ": " << payload.size()
                      << " payload bytes, final mean loss " << reports.back().mean_loss
                      << "\n";
    }
    return kExitOk;
}

int cmd_apply(const std::string& pretrained, const std::string& payload_path,
              const std::string& in, std::size_t w, std::size_t h, long frames, int qp,
              std::size_t patch, const std::string& out) {
    auto net = baf::load_network(pretrained);
    if (!payload_path.empty()) {
        const auto bytes = baf::binio::read_file(payload_path);
        const auto decoded = baf::decode_payload(bytes);
        if (decoded.n_filters != net.config.n_filters ||
            decoded.n_blocks != net.config.n_blocks) {
            std::cerr << "error: payload config (" << decoded.n_filters << ","
                      << decoded.n_blocks << ") does not match checkpoint config ("
                      << net.config.n_filters << "," << net.config.n_blocks << ")\n";
            return kExitFormat;
        }
        net = baf::apply_update(net, bytes);
    }
    auto seq = baf::read_yuv420(in, w, h, frames);
    baf::write_yuv420(filter_sequence(net, seq, qp, patch), out);
    write_manifest(out, "apply",
                   {{"pretrained", pretrained},
                    {"payload", payload_path},
                    {"in", in},
                    {"w", std::to_string(w)},
                    {"h", std::to_string(h)},
                    {"frames", std::to_string(frames)},
                    {"qp", std::to_string(qp)},
                    {"patch", std::to_string(patch)},
                    {"out", out}});
    std::cout << "filtered " << seq.frames.size() << " frames\n";
    return kExitOk;
}

std::string db_str(double v) {
    if (std::isinf(v)) return "inf";
    if (std::fabs(v) < 5e-5) v = 0.0;  // avoid "-0.0000"
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.4f", v);
    return buf;
}

int cmd_eval(const std::string& a, const std::string& b, std::size_t w, std::size_t h,
             long frames) {
    auto sa = baf::read_yuv420(a, w, h, frames);
    auto sb = baf::read_yuv420(b, w, h, frames);
    if (sa.frames.size() != sb.frames.size()) {
        std::cerr << "error: frame counts differ (" << sa.frames.size() << " vs "
                  << sb.frames.size() << ")\n";
        return kExitFormat;
    }
    auto p = baf::sequence_psnr(sa, sb);
    std::cout << "Y-PSNR: " << db_str(p.y_db) << "\n"
              << "U-PSNR: " << db_str(p.u_db) << "\n"
              << "V-PSNR: " << db_str(p.v_db) << "\n"
              << "YUV-PSNR: " << db_str(p.weighted_db) << "\n";
    return kExitOk;
}

int cmd_bdrate(const std::string& anchor_path, const std::string& test_path) {
    const auto anchor = baf::read_rd_csv(anchor_path);
    const auto test = baf::read_rd_csv(test_path);
    if (anchor.size() < 4 || test.size() < 4) {
        std::cerr << "error: BD metrics require at least 4 RD points per curve (got "
                  << anchor.size() << " and " << test.size() << ")\n";
        return kExitUsage;
    }
    auto curve = [](const std::vector<baf::RDRow>& rows, auto pick) {
        baf::RDCurve c;
        for (const auto& r : rows) c.points.push_back({r.bitrate, pick(r)});
        return c;
    };
    auto weighted = [](const baf::RDRow& r) {
        return baf::yuv_weighted_psnr(r.y_psnr, r.u_psnr, r.v_psnr);
    };
    const auto channels = {
        std::make_pair(std::string("Y"),
                       std::function<double(const baf::RDRow&)>(
                           [](const baf::RDRow& r) { return r.y_psnr; })),
        std::make_pair(std::string("U"),
                       std::function<double(const baf::RDRow&)>(
                           [](const baf::RDRow& r) { return r.u_psnr; })),
        std::make_pair(std::string("V"),
                       std::function<double(const baf::RDRow&)>(
                           [](const baf::RDRow& r) { return r.v_psnr; })),
        std::make_pair(std::string("YUV"),
                       std::function<double(const baf::RDRow&)>(weighted)),
    };
    for (const auto& [name, pick] : channels) {
        const auto ca = curve(anchor, pick);
        const auto ct = curve(test, pick);
        std::cout << name << " BD-Rate: " << db_str(baf::bd_rate(ca, ct)) << " %\n";
        std::cout << name << " BD-PSNR: " << db_str(baf::bd_psnr(ca, ct)) << " dB\n";
    }
    return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"content-adaptive neural post-filter pipeline"};
    app.require_subcommand(1);
    // --h is a real option below, so keep help on the long flag only
    app.set_help_flag("--help", "print help");

    int threads = 0;
    app.add_option("--threads", threads, "OpenMP thread count (0 = runtime default)");

    // degrade
    std::string d_in, d_out;
    std::size_t d_w = 0, d_h = 0;
    long d_frames = -1;
    int d_qp = 32;
    auto* degrade = app.add_subcommand("degrade", "apply the synthetic block codec");
    degrade->set_help_flag("--help", "print help");
    degrade->add_option("--in", d_in)->required();
    degrade->add_option("--w", d_w)->required();
    degrade->add_option("--h", d_h)->required();
    degrade->add_option("--frames", d_frames);
    degrade->add_option("--qp", d_qp)->required();
    degrade->add_option("--out", d_out)->required();

    // pretrain
    std::string p_originals, p_qps = "22,27,32,37", p_config = "16x3", p_out;
    std::size_t p_w = 0, p_h = 0, p_epochs = 2000, p_batch = 64, p_bpe = 512,
                p_patch = 128;
    long p_frames = -1;
    double p_lr = 1e-3;
    float p_slope = 0.3f;
    std::uint64_t p_seed = 0;
    bool p_desk = false;
    auto* pretrain = app.add_subcommand("pretrain", "pretrain the filter network");
    pretrain->set_help_flag("--help", "print help");
    pretrain->add_option("--originals", p_originals)->required();
    pretrain->add_option("--w", p_w)->required();
    pretrain->add_option("--h", p_h)->required();
    pretrain->add_option("--frames", p_frames);
    pretrain->add_option("--qps", p_qps);
    pretrain->add_option("--config", p_config);
    auto* p_epochs_opt = pretrain->add_option("--epochs", p_epochs);
    auto* p_batch_opt = pretrain->add_option("--batch", p_batch);
    auto* p_bpe_opt = pretrain->add_option("--batches-per-epoch", p_bpe);
    pretrain->add_option("--lr", p_lr);
    auto* p_patch_opt = pretrain->add_option("--patch", p_patch);
    pretrain->add_option("--slope", p_slope);
    pretrain->add_option("--seed", p_seed);
    pretrain->add_flag("--desk-scale", p_desk, "shrink defaults for fast runs");
    pretrain->add_option("--out", p_out)->required();

    // finetune
    std::string f_pretrained, f_degraded, f_original, f_out;
    std::size_t f_w = 0, f_h = 0, f_epochs = 110, f_batch = 64, f_patch = 128;
    long f_frames = -1, f_segment = 0;
    int f_qp = 32;
    double f_lr = 1e-3;
    std::uint64_t f_seed = 0;
    bool f_desk = false;
    auto* finetune = app.add_subcommand("finetune", "bias-only adaptation to a sequence");
    finetune->set_help_flag("--help", "print help");
    finetune->add_option("--pretrained", f_pretrained)->required();
    finetune->add_option("--degraded", f_degraded)->required();
    finetune->add_option("--original", f_original)->required();
    finetune->add_option("--w", f_w)->required();
    finetune->add_option("--h", f_h)->required();
    finetune->add_option("--frames", f_frames);
    finetune->add_option("--qp", f_qp)->required();
    auto* f_epochs_opt = finetune->add_option("--epochs", f_epochs);
    finetune->add_option("--batch", f_batch);
    finetune->add_option("--lr", f_lr);
    auto* f_patch_opt = finetune->add_option("--patch", f_patch);
    finetune->add_option("--segment-frames", f_segment);
    finetune->add_option("--seed", f_seed);
    finetune->add_flag("--desk-scale", f_desk, "shrink defaults for fast runs");
    finetune->add_option("--out", f_out)->required();

    // apply
    std::string a_pretrained, a_payload, a_in, a_out;
    std::size_t a_w = 0, a_h = 0, a_patch = 128;
    long a_frames = -1;
    int a_qp = 32;
    auto* apply = app.add_subcommand("apply", "run the filter decoder-side");
    apply->set_help_flag("--help", "print help");
    apply->add_option("--pretrained", a_pretrained)->required();
    apply->add_option("--payload", a_payload);
    apply->add_option("--in", a_in)->required();
    apply->add_option("--w", a_w)->required();
    apply->add_option("--h", a_h)->required();
    apply->add_option("--frames", a_frames);
    apply->add_option("--qp", a_qp)->required();
    apply->add_option("--patch", a_patch);
    apply->add_option("--out", a_out)->required();

    // eval
    std::string e_a, e_b;
    std::size_t e_w = 0, e_h = 0;
    long e_frames = -1;
    auto* eval = app.add_subcommand("eval", "PSNR between two sequences");
    eval->set_help_flag("--help", "print help");
    eval->add_option("--a", e_a)->required();
    eval->add_option("--b", e_b)->required();
    eval->add_option("--w", e_w)->required();
    eval->add_option("--h", e_h)->required();
    eval->add_option("--frames", e_frames);

    // bdrate
    std::string b_anchor, b_test;
    auto* bdrate = app.add_subcommand("bdrate", "BD-rate / BD-PSNR of two RD curves");
    bdrate->set_help_flag("--help", "print help");
    bdrate->add_option("--anchor", b_anchor)->required();
    bdrate->add_option("--test", b_test)->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e) == 0 ? 0 : kExitUsage;
    }

#ifdef _OPENMP
    if (threads > 0) omp_set_num_threads(threads);
#endif

    if (p_desk) {
        if (p_epochs_opt->count() == 0) p_epochs = 30;
        if (p_batch_opt->count() == 0) p_batch = 8;
        if (p_bpe_opt->count() == 0) p_bpe = 8;
        if (p_patch_opt->count() == 0) p_patch = 64;
    }
    if (f_desk) {
        if (f_epochs_opt->count() == 0) f_epochs = 10;
        if (f_patch_opt->count() == 0) f_patch = 64;
    }

    try {
        if (degrade->parsed())
            return cmd_degrade(d_in, d_w, d_h, d_frames, d_qp, d_out);
        if (pretrain->parsed())
            return cmd_pretrain(p_originals, p_w, p_h, p_frames, p_qps, p_config,
                                p_epochs, p_batch, p_bpe, p_lr, p_patch, p_slope,
                                p_seed, p_out);
        if (finetune->parsed())
            return cmd_finetune(f_pretrained, f_degraded, f_original, f_w, f_h,
                                f_frames, f_qp, f_epochs, f_batch, f_lr, f_patch,
                                f_segment, f_seed, f_out);
        if (apply->parsed())
            return cmd_apply(a_pretrained, a_payload, a_in, a_w, a_h, a_frames, a_qp,
                             a_patch, a_out);
        if (eval->parsed()) return cmd_eval(e_a, e_b, e_w, e_h, e_frames);
        if (bdrate->parsed()) return cmd_bdrate(b_anchor, b_test);
    } catch (const baf::IoError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitIo;
    } catch (const baf::FormatError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitFormat;
    } catch (const baf::ContractError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitUsage;
    } catch (const baf::Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitFormat;
    }
    return kExitUsage;
}
