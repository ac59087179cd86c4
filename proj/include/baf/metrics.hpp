#pragma once

#include <limits>
#include <string>
#include <vector>

#include "baf/yuv.hpp"

namespace baf {

struct RDPoint {
    double bitrate;  // any consistent unit, > 0
    double psnr;     // dB
};

struct RDCurve {
    std::vector<RDPoint> points;  // >= 4, one per QP
};

// 10*log10(peak^2/MSE); +inf when the planes are identical.
double psnr(const std::vector<std::uint8_t>& plane_a,
            const std::vector<std::uint8_t>& plane_b, double peak = 255.0);

// (6*y + u + v) / 8; rejects infinite inputs.
double yuv_weighted_psnr(double y_db, double u_db, double v_db);

// Bjontegaard delta metrics from cubic fits over the common interval.
double bd_rate(const RDCurve& anchor, const RDCurve& test);
double bd_psnr(const RDCurve& anchor, const RDCurve& test);

struct SequencePsnr {
    double y_db;
    double u_db;
    double v_db;
    double weighted_db;  // +inf when any channel is lossless
};
// MSE pooled over all frames per channel, then converted to dB.
SequencePsnr sequence_psnr(const Sequence& filtered, const Sequence& original);

// CSV rows: qp, bitrate, y_psnr, u_psnr, v_psnr (header line included).
struct RDRow {
    int qp;
    double bitrate;
    double y_psnr;
    double u_psnr;
    double v_psnr;
};
std::vector<RDRow> read_rd_csv(const std::string& path);
void write_rd_csv(const std::vector<RDRow>& rows, const std::string& path);

}  // namespace baf
