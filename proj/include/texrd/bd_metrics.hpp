#pragma once

#include <array>
#include <iosfwd>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include "texrd/rd_model.hpp"

namespace texrd::bd {

struct BdResult {
    double value = std::numeric_limits<double>::quiet_NaN();  // dB for BD-PSNR, percent for BD-rate
    double overlap_lo = 0.0;  // log10-rate (BD-PSNR) or PSNR (BD-rate) interval
    double overlap_hi = 0.0;
};

/// Cubic least-squares fits of PSNR(log10 R), averaged difference test - reference
/// over the common log-rate range.
BdResult bd_psnr(const rd::RdCurve& reference, const rd::RdCurve& test);
/// Cubic fits of log10 R(PSNR); (10^mean_delta - 1) * 100 over the common PSNR range.
BdResult bd_rate(const rd::RdCurve& reference, const rd::RdCurve& test);

/// Least-squares polynomial of degree `degree`, coefficients lowest power first.
std::vector<double> polyfit(std::span<const double> x, std::span<const double> y, int degree);
/// Integral of the polynomial over [a, b].
double polyint(std::span<const double> c, double a, double b);

/// Per-QP arithmetic mean of rate and PSNR over curves sharing one QP set.
rd::RdCurve mean_curve(std::span<const rd::RdCurve> curves);

/// Samples a fitted model at the given rates, keeping the QP labels of `like`.
rd::RdCurve sample_curve(const rd::RdFit& fit, const rd::RdCurve& like);

struct BdRow {
    std::string sequence_id;
    int gop_index = 0;
    double bd_psnr = 0.0;
    double bd_rate = 0.0;
};

/// `sequence_id,gop_index,bd_psnr_db,bd_rate_pct` followed by `mean` and `std`
/// summary rows over the finite entries.
void write_bd_report(std::ostream& out, std::span<const BdRow> rows, std::span<const std::string> metadata = {});

}  // namespace texrd::bd
