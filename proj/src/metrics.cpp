#include "baf/metrics.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <fstream>
#include <sstream>

namespace baf {

double psnr(const std::vector<std::uint8_t>& plane_a,
            const std::vector<std::uint8_t>& plane_b, double peak) {
    if (plane_a.size() != plane_b.size() || plane_a.empty())
        throw ContractError("psnr: plane size mismatch");
    double acc = 0.0;
    for (std::size_t i = 0; i < plane_a.size(); ++i) {
        const double d = static_cast<double>(plane_a[i]) - static_cast<double>(plane_b[i]);
        acc += d * d;
    }
    const double mse = acc / static_cast<double>(plane_a.size());
    if (mse == 0.0) return std::numeric_limits<double>::infinity();
    return 10.0 * std::log10(peak * peak / mse);
}

double yuv_weighted_psnr(double y_db, double u_db, double v_db) {
    if (!std::isfinite(y_db) || !std::isfinite(u_db) || !std::isfinite(v_db))
        throw ContractError("yuv_weighted_psnr: inputs must be finite");
    return (6.0 * y_db + u_db + v_db) / 8.0;
}

namespace {

struct Cubic {
    std::array<double, 4> c;  // c0 + c1 x + c2 x^2 + c3 x^3
    double integrate(double lo, double hi) const {
        auto F = [&](double x) {
            return ((c[3] / 4.0 * x + c[2] / 3.0) * x + c[1] / 2.0) * x * x + c[0] * x;
        };
        return F(hi) - F(lo);
    }
};

// least-squares cubic; interpolating for exactly 4 points
Cubic fit_cubic(const std::vector<double>& x, const std::vector<double>& y) {
    std::array<std::array<double, 5>, 4> a{};  // augmented normal equations
    for (std::size_t k = 0; k < x.size(); ++k) {
        double p[4] = {1.0, x[k], x[k] * x[k], x[k] * x[k] * x[k]};
        for (int i = 0; i < 4; ++i) {
            for (int j = 0; j < 4; ++j) a[i][j] += p[i] * p[j];
            a[i][4] += p[i] * y[k];
        }
    }
    // Gaussian elimination with partial pivoting
    for (int col = 0; col < 4; ++col) {
        int piv = col;
        for (int r = col + 1; r < 4; ++r)
            if (std::fabs(a[r][col]) > std::fabs(a[piv][col])) piv = r;
        std::swap(a[col], a[piv]);
        if (std::fabs(a[col][col]) < 1e-14)
            throw Error("bd fit: singular system (degenerate curve)");
        for (int r = 0; r < 4; ++r) {
            if (r == col) continue;
            const double f = a[r][col] / a[col][col];
            for (int j = col; j < 5; ++j) a[r][j] -= f * a[col][j];
        }
    }
    Cubic out;
    for (int i = 0; i < 4; ++i) out.c[i] = a[i][4] / a[i][i];
    return out;
}

void validate_curve(const RDCurve& c) {
    if (c.points.size() < 4)
        throw ContractError("rd curve: at least 4 points required, got " +
                            std::to_string(c.points.size()));
    for (const auto& p : c.points)
        if (!(p.bitrate > 0.0))
            throw ContractError("rd curve: bitrates must be positive");
    auto rates = c.points;
    std::sort(rates.begin(), rates.end(),
              [](const RDPoint& a, const RDPoint& b) { return a.bitrate < b.bitrate; });
    for (std::size_t i = 1; i < rates.size(); ++i)
        if (rates[i].bitrate == rates[i - 1].bitrate)
            throw ContractError("rd curve: duplicate bitrates");
}

// Mean difference of two cubic fits of y(x) over the common x interval.
// x values are shifted to a common origin before fitting.
double mean_fit_difference(std::vector<double> x1, std::vector<double> y1,
                           std::vector<double> x2, std::vector<double> y2,
                           const char* what) {
    const double lo = std::max(*std::min_element(x1.begin(), x1.end()),
                               *std::min_element(x2.begin(), x2.end()));
    const double hi = std::min(*std::max_element(x1.begin(), x1.end()),
                               *std::max_element(x2.begin(), x2.end()));
    if (!(hi > lo)) throw Error(std::string("bd: empty overlap interval in ") + what);
    const double shift = (lo + hi) / 2.0;
    for (double& v : x1) v -= shift;
    for (double& v : x2) v -= shift;
    const Cubic f1 = fit_cubic(x1, y1);
    const Cubic f2 = fit_cubic(x2, y2);
    return (f2.integrate(lo - shift, hi - shift) - f1.integrate(lo - shift, hi - shift)) /
           (hi - lo);
}

}  // namespace

double bd_rate(const RDCurve& anchor, const RDCurve& test) {
    validate_curve(anchor);
    validate_curve(test);
    std::vector<double> xa, ya, xt, yt;
    for (const auto& p : anchor.points) {
        xa.push_back(p.psnr);
        ya.push_back(std::log10(p.bitrate));
    }
    for (const auto& p : test.points) {
        xt.push_back(p.psnr);
        yt.push_back(std::log10(p.bitrate));
    }
    const double d = mean_fit_difference(std::move(xa), std::move(ya), std::move(xt),
                                         std::move(yt), "psnr");
    return (std::pow(10.0, d) - 1.0) * 100.0;
}

double bd_psnr(const RDCurve& anchor, const RDCurve& test) {
    validate_curve(anchor);
    validate_curve(test);
    std::vector<double> xa, ya, xt, yt;
    for (const auto& p : anchor.points) {
        xa.push_back(std::log10(p.bitrate));
        ya.push_back(p.psnr);
    }
    for (const auto& p : test.points) {
        xt.push_back(std::log10(p.bitrate));
        yt.push_back(p.psnr);
    }
    return mean_fit_difference(std::move(xa), std::move(ya), std::move(xt),
                               std::move(yt), "log-rate");
}

SequencePsnr sequence_psnr(const Sequence& filtered, const Sequence& original) {
    if (filtered.frames.size() != original.frames.size() ||
        filtered.width != original.width || filtered.height != original.height ||
        filtered.frames.empty())
        throw ContractError("sequence_psnr: sequence dimensions or frame counts differ");

    auto pooled = [](const Sequence& a, const Sequence& b, auto plane) {
        double acc = 0.0;
        std::size_t n = 0;
        for (std::size_t f = 0; f < a.frames.size(); ++f) {
            const auto& pa = plane(a.frames[f]);
            const auto& pb = plane(b.frames[f]);
            for (std::size_t i = 0; i < pa.size(); ++i) {
                const double d = static_cast<double>(pa[i]) - static_cast<double>(pb[i]);
                acc += d * d;
            }
            n += pa.size();
        }
        const double mse = acc / static_cast<double>(n);
        if (mse == 0.0) return std::numeric_limits<double>::infinity();
        return 10.0 * std::log10(255.0 * 255.0 / mse);
    };

    SequencePsnr out{};
    out.y_db = pooled(filtered, original, [](const Frame420& f) -> const auto& { return f.y; });
    out.u_db = pooled(filtered, original, [](const Frame420& f) -> const auto& { return f.u; });
    out.v_db = pooled(filtered, original, [](const Frame420& f) -> const auto& { return f.v; });
    // weighted combination is undefined on lossless channels; the infinity
    // sentinel propagates and callers must handle it
    if (std::isfinite(out.y_db) && std::isfinite(out.u_db) && std::isfinite(out.v_db))
        out.weighted_db = yuv_weighted_psnr(out.y_db, out.u_db, out.v_db);
    else
        out.weighted_db = std::numeric_limits<double>::infinity();
    return out;
}

std::vector<RDRow> read_rd_csv(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw IoError("cannot open: " + path);
    std::vector<RDRow> rows;
    std::string line;
    while (std::getline(f, line)) {
        if (line.empty()) continue;
        if (line.find_first_of("0123456789") != 0) continue;  // header
        std::istringstream ss(line);
        RDRow r{};
        char comma;
        if (!(ss >> r.qp >> comma >> r.bitrate >> comma >> r.y_psnr >> comma >>
              r.u_psnr >> comma >> r.v_psnr))
            throw FormatError("rd csv: malformed line: " + line);
        rows.push_back(r);
    }
    return rows;
}

void write_rd_csv(const std::vector<RDRow>& rows, const std::string& path) {
    std::ofstream f(path, std::ios::trunc);
    if (!f) throw IoError("cannot open for writing: " + path);
    f << "qp,bitrate,y_psnr,u_psnr,v_psnr\n";
    for (const auto& r : rows)
        f << r.qp << "," << r.bitrate << "," << r.y_psnr << "," << r.u_psnr << ","
          << r.v_psnr << "\n";
    if (!f) throw IoError("write failed: " + path);
}

}  // namespace baf
