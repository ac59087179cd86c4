#include <doctest.h>

#include <array>
#include <cstdio>
#include <cstdlib>
#include <sys/wait.h>
#include <unistd.h>
#include <filesystem>
#include <fstream>
#include <string>

#include "baf/binio.hpp"
#include "baf/filter_net.hpp"
#include "baf/metrics.hpp"
#include "baf/update_codec.hpp"
#include "baf/yuv.hpp"
#include "helpers.hpp"

namespace fs = std::filesystem;

namespace {

struct RunResult {
    int exit_code;
    std::string output;
};

RunResult run_cli(const std::string& args) {
    const std::string cmd = std::string(BAF_CLI_PATH) + " " + args + " 2>&1";
    FILE* pipe = popen(cmd.c_str(), "r");
    REQUIRE(pipe != nullptr);
    std::string out;
    std::array<char, 512> buf;
    while (fgets(buf.data(), buf.size(), pipe)) out += buf.data();
    const int status = pclose(pipe);
    return {WEXITSTATUS(status), out};
}

struct Workspace {
    fs::path dir;
    Workspace() {
        dir = fs::temp_directory_path() / ("baf_cli_test_" + std::to_string(::getpid()));
        fs::create_directories(dir);
    }
    ~Workspace() { fs::remove_all(dir); }
    std::string file(const std::string& name) const { return (dir / name).string(); }
};

void write_synth(const std::string& path, std::size_t n, std::size_t w, std::size_t h) {
    baf::write_yuv420(testutil::synth_sequence(n, w, h), path);
}

}  // namespace

TEST_CASE("cli degrade") {
    Workspace ws;
    write_synth(ws.file("in.yuv"), 2, 32, 32);

    SUBCASE("invalid qp exits 2 and names the range") {
        auto r = run_cli("degrade --in " + ws.file("in.yuv") +
                         " --w 32 --h 32 --qp 70 --out " + ws.file("out.yuv"));
        CHECK(r.exit_code == 2);
        CHECK(r.output.find("0..63") != std::string::npos);
    }
    SUBCASE("valid run preserves the file size and is deterministic") {
        const std::string args = "degrade --in " + ws.file("in.yuv") +
                                 " --w 32 --h 32 --qp 32 --out " + ws.file("out.yuv");
        CHECK(run_cli(args).exit_code == 0);
        CHECK(fs::file_size(ws.file("out.yuv")) == fs::file_size(ws.file("in.yuv")));
        CHECK(fs::exists(ws.file("out.yuv.manifest")));
        CHECK(fs::exists(ws.file("out.yuv.rate.csv")));

        auto first = baf::binio::read_file(ws.file("out.yuv"));
        CHECK(run_cli(args).exit_code == 0);
        CHECK(baf::binio::read_file(ws.file("out.yuv")) == first);
    }
    SUBCASE("missing input exits 3") {
        auto r = run_cli("degrade --in " + ws.file("nope.yuv") +
                         " --w 32 --h 32 --qp 32 --out " + ws.file("out.yuv"));
        CHECK(r.exit_code == 3);
    }
    SUBCASE("bad file size exits 4") {
        std::ofstream(ws.file("bad.yuv"), std::ios::binary) << "short";
        auto r = run_cli("degrade --in " + ws.file("bad.yuv") +
                         " --w 32 --h 32 --qp 32 --out " + ws.file("out.yuv"));
        CHECK(r.exit_code == 4);
    }
}

TEST_CASE("cli eval") {
    Workspace ws;
    write_synth(ws.file("a.yuv"), 1, 32, 32);

    SUBCASE("identical files print inf") {
        auto r = run_cli("eval --a " + ws.file("a.yuv") + " --b " + ws.file("a.yuv") +
                         " --w 32 --h 32");
        CHECK(r.exit_code == 0);
        CHECK(r.output.find("Y-PSNR: inf") != std::string::npos);
        CHECK(r.output.find("YUV-PSNR: inf") != std::string::npos);
    }
    SUBCASE("differs-by-one construction gives the closed form") {
        auto seq = baf::read_yuv420(ws.file("a.yuv"), 32, 32);
        for (auto& fr : seq.frames) {
            for (auto& v : fr.y) v = static_cast<std::uint8_t>(v < 255 ? v + 1 : v - 1);
            for (auto& v : fr.u) v = static_cast<std::uint8_t>(v < 255 ? v + 1 : v - 1);
            for (auto& v : fr.v) v = static_cast<std::uint8_t>(v < 255 ? v + 1 : v - 1);
        }
        baf::write_yuv420(seq, ws.file("b.yuv"));
        auto r = run_cli("eval --a " + ws.file("a.yuv") + " --b " + ws.file("b.yuv") +
                         " --w 32 --h 32");
        CHECK(r.exit_code == 0);
        CHECK(r.output.find("Y-PSNR: 48.13") != std::string::npos);
    }
    SUBCASE("mismatched frame counts exit 4") {
        write_synth(ws.file("c.yuv"), 2, 32, 32);
        auto r = run_cli("eval --a " + ws.file("a.yuv") + " --b " + ws.file("c.yuv") +
                         " --w 32 --h 32");
        CHECK(r.exit_code == 4);
    }
}

TEST_CASE("cli bdrate") {
    Workspace ws;
    std::vector<baf::RDRow> anchor{{22, 6000, 39.0, 41.0, 42.0},
                                   {27, 3200, 36.8, 39.5, 40.5},
                                   {32, 1800, 34.5, 38.0, 39.0},
                                   {37, 1000, 32.0, 36.5, 37.5}};
    baf::write_rd_csv(anchor, ws.file("anchor.csv"));

    SUBCASE("identical curves give zero") {
        auto r = run_cli("bdrate --anchor " + ws.file("anchor.csv") + " --test " +
                         ws.file("anchor.csv"));
        CHECK(r.exit_code == 0);
        CHECK(r.output.find("Y BD-Rate: 0.0000 %") != std::string::npos);
        CHECK(r.output.find("YUV BD-PSNR: 0.0000 dB") != std::string::npos);
    }
    SUBCASE("rate-scaled fixture gives +10%") {
        auto test = anchor;
        for (auto& row : test) row.bitrate *= 1.10;
        baf::write_rd_csv(test, ws.file("test.csv"));
        auto r = run_cli("bdrate --anchor " + ws.file("anchor.csv") + " --test " +
                         ws.file("test.csv"));
        CHECK(r.exit_code == 0);
        CHECK(r.output.find("Y BD-Rate: 10.0000 %") != std::string::npos);
    }
    SUBCASE("3-point curves exit 2 and mention the minimum") {
        baf::write_rd_csv({anchor[0], anchor[1], anchor[2]}, ws.file("short.csv"));
        auto r = run_cli("bdrate --anchor " + ws.file("short.csv") + " --test " +
                         ws.file("anchor.csv"));
        CHECK(r.exit_code == 2);
        CHECK(r.output.find("4") != std::string::npos);
    }
}

// End-to-end pipeline at desk scale: pretrain, finetune, apply, eval.
TEST_CASE("cli pipeline smoke test") {
    Workspace ws;
    fs::create_directories(ws.dir / "orig");
    write_synth((ws.dir / "orig" / "seq.yuv").string(), 2, 64, 64);

    auto r = run_cli("pretrain --originals " + (ws.dir / "orig").string() +
                     " --w 64 --h 64 --config 4x2 --qps 32 --epochs 2 --batch 2 "
                     "--batches-per-epoch 2 --patch 32 --seed 1 --out " +
                     ws.file("net.ckpt"));
    CHECK(r.exit_code == 0);
    REQUIRE(fs::exists(ws.file("net.ckpt")));
    CHECK(fs::exists(ws.file("net.ckpt.history.csv")));
    CHECK(fs::exists(ws.file("net.ckpt.manifest")));

    SUBCASE("epochs 0 reproduces the freshly built network") {
        auto r0 = run_cli("pretrain --originals " + (ws.dir / "orig").string() +
                          " --w 64 --h 64 --config 4x2 --qps 32 --epochs 0 --patch 32 "
                          "--seed 5 --out " +
                          ws.file("fresh.ckpt"));
        CHECK(r0.exit_code == 0);
        baf::NetConfig cfg;
        cfg.n_filters = 4;
        cfg.n_blocks = 2;
        cfg.seed = 5;
        CHECK(baf::binio::read_file(ws.file("fresh.ckpt")) ==
              baf::serialize_network(baf::build_network(cfg)));
    }

    SUBCASE("finetune then apply round trips through the payload") {
        write_synth(ws.file("target.yuv"), 2, 64, 64);
        CHECK(run_cli("degrade --in " + ws.file("target.yuv") +
                      " --w 64 --h 64 --qp 32 --out " + ws.file("deg.yuv"))
                  .exit_code == 0);

        auto rf = run_cli("finetune --pretrained " + ws.file("net.ckpt") +
                          " --degraded " + ws.file("deg.yuv") + " --original " +
                          ws.file("target.yuv") +
                          " --w 64 --h 64 --qp 32 --epochs 2 --patch 32 --seed 2 "
                          "--out " +
                          ws.file("update.bup"));
        CHECK(rf.exit_code == 0);
        REQUIRE(fs::exists(ws.file("update.bup")));

        // payload decodes and matches the checkpoint config
        auto payload = baf::binio::read_file(ws.file("update.bup"));
        auto decoded = baf::decode_payload(payload);
        CHECK(decoded.n_filters == 4);
        CHECK(decoded.n_blocks == 2);
        CHECK(decoded.biases.size() == 11);

        auto ra = run_cli("apply --pretrained " + ws.file("net.ckpt") + " --payload " +
                          ws.file("update.bup") + " --in " + ws.file("deg.yuv") +
                          " --w 64 --h 64 --qp 32 --patch 32 --out " +
                          ws.file("filtered.yuv"));
        CHECK(ra.exit_code == 0);
        CHECK(fs::file_size(ws.file("filtered.yuv")) == fs::file_size(ws.file("deg.yuv")));

        // omitting --payload applies the pretrained baseline
        auto rb = run_cli("apply --pretrained " + ws.file("net.ckpt") + " --in " +
                          ws.file("deg.yuv") + " --w 64 --h 64 --qp 32 --patch 32 --out " +
                          ws.file("baseline.yuv"));
        CHECK(rb.exit_code == 0);

        auto re = run_cli("eval --a " + ws.file("filtered.yuv") + " --b " +
                          ws.file("target.yuv") + " --w 64 --h 64");
        CHECK(re.exit_code == 0);
        CHECK(re.output.find("YUV-PSNR:") != std::string::npos);
    }

    SUBCASE("apply with a mismatched payload exits 4") {
        baf::NetConfig other;
        other.n_filters = 8;
        other.n_blocks = 2;
        auto payload = baf::encode_payload(std::vector<float>(19, 0.1f), other);
        baf::binio::write_file(ws.file("wrong.bup"), payload);
        write_synth(ws.file("in2.yuv"), 1, 64, 64);
        auto r4 = run_cli("apply --pretrained " + ws.file("net.ckpt") + " --payload " +
                          ws.file("wrong.bup") + " --in " + ws.file("in2.yuv") +
                          " --w 64 --h 64 --qp 32 --patch 32 --out " + ws.file("o.yuv"));
        CHECK(r4.exit_code == 4);
    }

    SUBCASE("pretrain rerun with the same seed is bit-identical") {
        auto r2 = run_cli("pretrain --originals " + (ws.dir / "orig").string() +
                          " --w 64 --h 64 --config 4x2 --qps 32 --epochs 2 --batch 2 "
                          "--batches-per-epoch 2 --patch 32 --seed 1 --out " +
                          ws.file("net2.ckpt"));
        CHECK(r2.exit_code == 0);
        CHECK(baf::binio::read_file(ws.file("net.ckpt")) ==
              baf::binio::read_file(ws.file("net2.ckpt")));
    }
}

TEST_CASE("cli finetune segmenting produces one payload per segment") {
    Workspace ws;
    write_synth(ws.file("orig.yuv"), 4, 32, 32);
    CHECK(run_cli("degrade --in " + ws.file("orig.yuv") +
                  " --w 32 --h 32 --qp 37 --out " + ws.file("deg.yuv"))
              .exit_code == 0);

    baf::NetConfig cfg;
    cfg.n_filters = 4;
    cfg.n_blocks = 2;
    cfg.seed = 11;
    baf::save_network(baf::build_network(cfg), ws.file("net.ckpt"));

    auto r = run_cli("finetune --pretrained " + ws.file("net.ckpt") + " --degraded " +
                     ws.file("deg.yuv") + " --original " + ws.file("orig.yuv") +
                     " --w 32 --h 32 --qp 37 --epochs 1 --patch 16 --segment-frames 2 "
                     "--out " +
                     ws.file("u.bup"));
    CHECK(r.exit_code == 0);
    CHECK(fs::exists(ws.file("u.bup.seg0")));
    CHECK(fs::exists(ws.file("u.bup.seg1")));
    CHECK(fs::exists(ws.file("u.bup.seg0.manifest")));
}
