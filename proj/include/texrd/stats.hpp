#pragma once

#include <cstdint>
#include <span>
#include <vector>

namespace texrd {

/// Moment summary of a sample population plus the Shannon entropy (bits) of
/// its histogram. `degenerate` is set when the population has zero variance,
/// in which case skewness and kurtosis are reported as 0.
struct StatMoments {
    double mean = 0.0;
    double std = 0.0;       // sample (n-1) standard deviation
    double skewness = 0.0;  // g1
    double kurtosis = 0.0;  // Pearson, non-excess
    double entropy = 0.0;
    bool degenerate = false;
};

double mean(std::span<const double> v);
/// n-1 denominator; 0 for fewer than two values.
double sample_std(std::span<const double> v);

/// Entropy in bits of a `bins`-bin histogram over [lo, hi]. Values outside the
/// range are clamped into the edge bins.
double histogram_entropy(std::span<const double> v, double lo, double hi, int bins = 64);

StatMoments describe(std::span<const double> v, double hist_lo, double hist_hi, int bins = 64);

/// NaN when either side has zero variance or fewer than two samples.
double pearson(std::span<const double> x, std::span<const double> y);
double spearman(std::span<const double> x, std::span<const double> y);

/// 1-based ranks with ties resolved to their average rank.
std::vector<double> average_ranks(std::span<const double> v);

/// Linear-interpolation quantile (Hyndman-Fan type 7) of an ascending sample.
double quantile_type7(std::span<const double> sorted, double p);

/// Stateless 64-bit mixer used to derive independent RNG streams from a seed.
std::uint64_t splitmix64(std::uint64_t x);
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream);

}  // namespace texrd
