#pragma once

#include <filesystem>
#include <limits>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

namespace texrd::rd {

struct RdPoint {
    int qp = 0;
    double rate = 0.0;  // bpp
    double psnr = 0.0;  // dB, luma
};

struct RdCurve {
    std::string sequence_id;
    int gop_index = 0;
    std::vector<RdPoint> points;  // ascending rate
};

enum class RdModelKind { Lin, Poly2, Poly3, Exp };

inline constexpr RdModelKind kAllKinds[] = {RdModelKind::Lin, RdModelKind::Poly2, RdModelKind::Poly3,
                                            RdModelKind::Exp};

std::string_view to_string(RdModelKind k);
RdModelKind parse_kind(std::string_view s);  // case-insensitive
std::size_t param_count(RdModelKind k);
/// "alpha1", "beta1", ... in coefficient order.
std::vector<std::string> param_names(RdModelKind k);
/// Indices of the regressed (anchor) parameters; the rest follow from the relations.
std::vector<std::size_t> anchor_indices(RdModelKind k);

struct RdFit {
    RdModelKind kind = RdModelKind::Lin;
    std::vector<double> params;  // alpha first
    double r_squared = std::numeric_limits<double>::quiet_NaN();
    double rmse = std::numeric_limits<double>::quiet_NaN();
};

struct GoodnessOfFit {
    double r_squared = 0.0;
    double rmse = 0.0;
};

/// Non-fatal problems with a curve (too few points, unsorted rates, PSNR not
/// decreasing in QP). Throws ValidationError for non-positive rates or
/// non-finite PSNR.
std::vector<std::string> check_curve(const RdCurve& curve);

/// Lin/Poly2/Poly3: OLS on log10(rate). Exp: Q = a*exp(b*log10 R), log-linear
/// start then Gauss-Newton in the PSNR domain.
RdFit fit_rd(const RdCurve& curve, RdModelKind kind);
double eval_rd(const RdFit& fit, double rate);
/// When all PSNR values are equal, r_squared is 1 for a zero residual and -inf otherwise.
GoodnessOfFit goodness_of_fit(const RdFit& fit, const RdCurve& curve);

// Relations between fitted parameters.

struct RelationEquation {
    std::string_view key;                 // e.g. "lin.beta1"
    std::string_view argument;            // parameter it is a function of
    std::span<const double> coefficients; // polynomial: highest power first; power law: a, p, c
    bool power_law = false;               // a * x^p + c
};

/// Every relation equation with its compiled-in coefficients, including the
/// ones not needed by relation_estimate.
std::span<const RelationEquation> relation_table();
double eval_relation(const RelationEquation& eq, double x);

/// Completes a parameter vector from its anchor parameters. `known` must hold
/// exactly the anchor names of the kind. `log_base` is the base the relation
/// coefficients are assumed to have been fitted in; parameters are converted
/// to it and back, so base 10 is the identity.
std::vector<double> relation_estimate(RdModelKind kind, const std::map<std::string, double>& known,
                                      double log_base = 10.0);
/// Same with anchors given positionally in anchor_indices order.
std::vector<double> relation_complete(RdModelKind kind, std::span<const double> anchors, double log_base = 10.0);

struct ParamCorrelation {
    std::size_t a = 0, b = 0;
    double pcc = 0.0;
    double srocc = 0.0;
};

ParamCorrelation param_correlation(std::span<const RdFit> fits, std::size_t a, std::size_t b);
/// All pairs a < b. Needs >= 3 fits of one kind; throws NumericError on a zero-variance parameter.
std::vector<ParamCorrelation> param_correlations(std::span<const RdFit> fits);

/// `sequence_id,gop_index,qp,rate_bpp,psnr_db`; curves sorted by (sequence, gop),
/// points by rate.
std::vector<RdCurve> read_rd_points(const std::filesystem::path& path);

nlohmann::json fit_to_json(const RdFit& fit, const std::string& sequence_id, int gop_index);
RdFit fit_from_json(const nlohmann::json& j);

}  // namespace texrd::rd
