#include "texrd/rd_model.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <array>
#include <cctype>
#include <cmath>
#include <set>
#include <tuple>

#include "texrd/csv.hpp"
#include "texrd/error.hpp"
#include "texrd/stats.hpp"

namespace texrd::rd {

std::string_view to_string(RdModelKind k) {
    switch (k) {
        case RdModelKind::Lin: return "Lin";
        case RdModelKind::Poly2: return "Poly2";
        case RdModelKind::Poly3: return "Poly3";
        case RdModelKind::Exp: return "Exp";
    }
    return "?";
}

RdModelKind parse_kind(std::string_view s) {
    std::string low(s);
    for (auto& c : low) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    if (low == "lin") return RdModelKind::Lin;
    if (low == "poly2") return RdModelKind::Poly2;
    if (low == "poly3") return RdModelKind::Poly3;
    if (low == "exp") return RdModelKind::Exp;
    throw ValidationError("unknown RD model '" + std::string(s) + "'");
}

std::size_t param_count(RdModelKind k) {
    switch (k) {
        case RdModelKind::Lin: return 2;
        case RdModelKind::Poly2: return 3;
        case RdModelKind::Poly3: return 4;
        case RdModelKind::Exp: return 2;
    }
    return 0;
}

std::vector<std::string> param_names(RdModelKind k) {
    static const char* greek[] = {"alpha", "beta", "gamma", "delta"};
    const int idx = static_cast<int>(k) + 1;
    std::vector<std::string> out;
    for (std::size_t i = 0; i < param_count(k); ++i) out.push_back(greek[i] + std::to_string(idx));
    return out;
}

std::vector<std::size_t> anchor_indices(RdModelKind k) {
    switch (k) {
        case RdModelKind::Lin: return {0};
        case RdModelKind::Poly2: return {1};
        case RdModelKind::Poly3: return {0, 1, 2};
        case RdModelKind::Exp: return {0};
    }
    return {};
}

namespace {

// Power of log(R) multiplying each parameter; used for log-base conversion.
std::vector<int> log_powers(RdModelKind k) {
    switch (k) {
        case RdModelKind::Lin: return {1, 0};
        case RdModelKind::Poly2: return {2, 1, 0};
        case RdModelKind::Poly3: return {3, 2, 1, 0};
        case RdModelKind::Exp: return {0, 1};
    }
    return {};
}

double sse(const RdFit& fit, const RdCurve& curve) {
    double s = 0.0;
    for (const auto& p : curve.points) {
        const double r = p.psnr - eval_rd(fit, p.rate);
        s += r * r;
    }
    return s;
}

}  // namespace

std::vector<std::string> check_curve(const RdCurve& curve) {
    const std::string where = curve.sequence_id + "/gop " + std::to_string(curve.gop_index);
    for (const auto& p : curve.points) {
        if (!(p.rate > 0.0) || !std::isfinite(p.rate))
            throw ValidationError(where + ": rate must be positive and finite");
        if (!std::isfinite(p.psnr)) throw ValidationError(where + ": PSNR must be finite");
    }
    std::vector<std::string> warn;
    if (curve.points.size() < 4) warn.push_back(where + ": fewer than 4 RD points");
    for (std::size_t i = 1; i < curve.points.size(); ++i)
        if (!(curve.points[i].rate > curve.points[i - 1].rate)) {
            warn.push_back(where + ": rates not strictly increasing");
            break;
        }
    auto byqp = curve.points;
    std::sort(byqp.begin(), byqp.end(), [](const RdPoint& a, const RdPoint& b) { return a.qp < b.qp; });
    for (std::size_t i = 1; i < byqp.size(); ++i)
        if (!(byqp[i].psnr < byqp[i - 1].psnr)) {
            warn.push_back(where + ": PSNR not strictly decreasing in QP");
            break;
        }
    return warn;
}

RdFit fit_rd(const RdCurve& curve, RdModelKind kind) {
    const std::size_t n = curve.points.size();
    const std::size_t np = param_count(kind);
    if (n < np)
        throw ValidationError("underdetermined: " + std::to_string(n) + " points for " + std::to_string(np) +
                              " parameters");
    for (const auto& p : curve.points)
        if (!(p.rate > 0.0)) throw ValidationError("rate must be positive");

    RdFit fit;
    fit.kind = kind;

    if (kind != RdModelKind::Exp) {
        Eigen::MatrixXd X(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(np));
        Eigen::VectorXd y(static_cast<Eigen::Index>(n));
        for (std::size_t i = 0; i < n; ++i) {
            const double l = std::log10(curve.points[i].rate);
            for (std::size_t j = 0; j < np; ++j)
                X(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) =
                    std::pow(l, static_cast<double>(np - 1 - j));
            y(static_cast<Eigen::Index>(i)) = curve.points[i].psnr;
        }
        Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(X);
        qr.setThreshold(1e-12);
        if (qr.rank() < static_cast<Eigen::Index>(np))
            throw NumericError("singular normal equations (collinear rates)");
        const Eigen::VectorXd b = qr.solve(y);
        fit.params.assign(b.data(), b.data() + b.size());
    } else {
        std::vector<double> L(n), Q(n);
        std::set<double> distinct;
        for (std::size_t i = 0; i < n; ++i) {
            L[i] = std::log10(curve.points[i].rate);
            Q[i] = curve.points[i].psnr;
            if (!(Q[i] > 0.0)) throw NumericError("Exp fit needs positive PSNR values");
            distinct.insert(L[i]);
        }
        if (distinct.size() < 2) throw NumericError("singular normal equations (collinear rates)");

        // log-linear start: ln Q = ln a + b L
        const double lm = mean(L);
        std::vector<double> lnq(n);
        for (std::size_t i = 0; i < n; ++i) lnq[i] = std::log(Q[i]);
        const double qm = mean(lnq);
        double sxy = 0.0, sxx = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            sxy += (L[i] - lm) * (lnq[i] - qm);
            sxx += (L[i] - lm) * (L[i] - lm);
        }
        double b = sxy / sxx;
        double a = std::exp(qm - b * lm);
        fit.params = {a, b};

        double cur = sse(fit, curve);
        for (int it = 0; it < 20; ++it) {
            Eigen::Matrix2d JtJ = Eigen::Matrix2d::Zero();
            Eigen::Vector2d Jtr = Eigen::Vector2d::Zero();
            for (std::size_t i = 0; i < n; ++i) {
                const double e = std::exp(b * L[i]);
                const Eigen::Vector2d j(e, a * L[i] * e);
                JtJ += j * j.transpose();
                Jtr += j * (Q[i] - a * e);
            }
            const Eigen::Vector2d step = JtJ.ldlt().solve(Jtr);
            if (!step.allFinite()) break;
            double t = 1.0;
            RdFit trial = fit;
            double next = cur;
            for (int h = 0; h < 30; ++h, t *= 0.5) {
                trial.params = {a + t * step(0), b + t * step(1)};
                next = sse(trial, curve);
                if (next <= cur) break;
            }
            if (!(next <= cur)) break;
            const double gain = cur - next;
            a = trial.params[0];
            b = trial.params[1];
            fit.params = trial.params;
            cur = next;
            if (gain < 1e-10) break;
        }
    }

    const auto g = goodness_of_fit(fit, curve);
    fit.r_squared = g.r_squared;
    fit.rmse = g.rmse;
    return fit;
}

double eval_rd(const RdFit& fit, double rate) {
    if (!(rate > 0.0)) throw ValidationError("eval_rd: rate must be positive");
    if (fit.params.size() != param_count(fit.kind)) throw ValidationError("eval_rd: wrong parameter count");
    const double l = std::log10(rate);
    if (fit.kind == RdModelKind::Exp) return fit.params[0] * std::exp(fit.params[1] * l);
    double acc = 0.0;
    for (double p : fit.params) acc = acc * l + p;
    return acc;
}

GoodnessOfFit goodness_of_fit(const RdFit& fit, const RdCurve& curve) {
    if (curve.points.empty()) throw ValidationError("goodness_of_fit: empty curve");
    const std::size_t n = curve.points.size();
    double ym = 0.0;
    for (const auto& p : curve.points) ym += p.psnr;
    ym /= static_cast<double>(n);
    double ss_res = 0.0, ss_tot = 0.0;
    for (const auto& p : curve.points) {
        const double r = p.psnr - eval_rd(fit, p.rate);
        ss_res += r * r;
        ss_tot += (p.psnr - ym) * (p.psnr - ym);
    }
    GoodnessOfFit g;
    g.rmse = std::sqrt(ss_res / static_cast<double>(n));
    if (ss_tot == 0.0)
        g.r_squared = ss_res == 0.0 ? 1.0 : -std::numeric_limits<double>::infinity();
    else
        g.r_squared = 1.0 - ss_res / ss_tot;
    return g;
}

namespace {

// Printed coefficients, highest power first.
constexpr double kLinBeta1[] = {.8571, -6.796, -8.117, 40.95};
constexpr double kPoly2Alpha2[] = {1.43e-7, 4.22e-6, -1.64e-4, -3.08e-2, 5.21e-2};
constexpr double kPoly2Gamma2[] = {-4.94e-5, -1.97e-3, 4.56e-2, -7.38, 22.53};
constexpr double kPoly3Alpha3[] = {-1.14e-9, -2.01e-7, -7.63e-6, -1.57e-4, -.02, 1.59e-3};
constexpr double kPoly3Delta3[] = {8.26e-12, -1.94e-8, 1.03e-5, 2.53e-3, -6.21, 26.64};
constexpr double kExpBeta4[] = {-.551, .064, .711};

const std::array<RelationEquation, 6> kRelations{{
    {"lin.beta1", "alpha1", kLinBeta1, false},
    {"poly2.alpha2", "beta2", kPoly2Alpha2, false},
    {"poly2.gamma2", "beta2", kPoly2Gamma2, false},
    {"poly3.alpha3", "beta3", kPoly3Alpha3, false},
    {"poly3.delta3", "gamma3", kPoly3Delta3, false},
    {"exp.beta4", "alpha4", kExpBeta4, true},
}};

const RelationEquation& relation(std::string_view key) {
    for (const auto& r : kRelations)
        if (r.key == key) return r;
    throw Error("missing relation " + std::string(key));
}

}  // namespace

std::span<const RelationEquation> relation_table() { return kRelations; }

double eval_relation(const RelationEquation& eq, double x) {
    if (eq.power_law) {
        if (!(x > 0.0))
            throw ValidationError(std::string(eq.key) + ": " + std::string(eq.argument) +
                                  " must be positive for the power law");
        return eq.coefficients[0] * std::pow(x, eq.coefficients[1]) + eq.coefficients[2];
    }
    double acc = 0.0;
    for (double c : eq.coefficients) acc = acc * x + c;
    return acc;
}

std::vector<double> relation_complete(RdModelKind kind, std::span<const double> anchors, double log_base) {
    const auto idx = anchor_indices(kind);
    if (anchors.size() != idx.size())
        throw ValidationError("relation_estimate: expected " + std::to_string(idx.size()) + " anchor values");
    if (!(log_base > 0.0) || log_base == 1.0 || !std::isfinite(log_base))
        throw ValidationError("relation log base must be positive and not 1");
    for (double a : anchors)
        if (!std::isfinite(a)) throw ValidationError("relation_estimate: non-finite anchor");

    const auto pw = log_powers(kind);
    const double f = std::log10(log_base);
    auto to_base = [&](std::size_t i, double v) { return v * std::pow(f, pw[i]); };
    auto from_base = [&](std::size_t i, double v) { return v / std::pow(f, pw[i]); };

    std::vector<double> p(param_count(kind), 0.0);
    for (std::size_t k = 0; k < idx.size(); ++k) p[idx[k]] = to_base(idx[k], anchors[k]);
    switch (kind) {
        case RdModelKind::Lin: p[1] = eval_relation(relation("lin.beta1"), p[0]); break;
        case RdModelKind::Poly2:
            p[0] = eval_relation(relation("poly2.alpha2"), p[1]);
            p[2] = eval_relation(relation("poly2.gamma2"), p[1]);
            break;
        case RdModelKind::Poly3: p[3] = eval_relation(relation("poly3.delta3"), p[2]); break;
        case RdModelKind::Exp: p[1] = eval_relation(relation("exp.beta4"), p[0]); break;
    }
    for (std::size_t i = 0; i < p.size(); ++i) p[i] = from_base(i, p[i]);
    // Anchors pass through untouched.
    for (std::size_t k = 0; k < idx.size(); ++k) p[idx[k]] = anchors[k];
    return p;
}

std::vector<double> relation_estimate(RdModelKind kind, const std::map<std::string, double>& known,
                                      double log_base) {
    const auto names = param_names(kind);
    const auto idx = anchor_indices(kind);
    if (known.size() != idx.size())
        throw ValidationError("relation_estimate: " + std::string(to_string(kind)) + " takes exactly " +
                              std::to_string(idx.size()) + " anchor parameter(s)");
    std::vector<double> anchors;
    for (std::size_t i : idx) {
        auto it = known.find(names[i]);
        if (it == known.end()) throw ValidationError("relation_estimate: missing anchor " + names[i]);
        anchors.push_back(it->second);
    }
    return relation_complete(kind, anchors, log_base);
}

ParamCorrelation param_correlation(std::span<const RdFit> fits, std::size_t a, std::size_t b) {
    if (fits.size() < 3) throw ValidationError("param_correlations needs at least 3 fits");
    const RdModelKind kind = fits.front().kind;
    std::vector<double> x, y;
    for (const auto& f : fits) {
        if (f.kind != kind) throw ValidationError("param_correlations: mixed model kinds");
        if (a >= f.params.size() || b >= f.params.size()) throw ValidationError("parameter index out of range");
        x.push_back(f.params[a]);
        y.push_back(f.params[b]);
    }
    if (sample_std(x) == 0.0 || sample_std(y) == 0.0) throw NumericError("zero-variance parameter");
    return {a, b, pearson(x, y), spearman(x, y)};
}

std::vector<ParamCorrelation> param_correlations(std::span<const RdFit> fits) {
    if (fits.empty()) throw ValidationError("param_correlations needs at least 3 fits");
    const std::size_t np = param_count(fits.front().kind);
    std::vector<ParamCorrelation> out;
    for (std::size_t a = 0; a < np; ++a)
        for (std::size_t b = a + 1; b < np; ++b) out.push_back(param_correlation(fits, a, b));
    return out;
}

std::vector<RdCurve> read_rd_points(const std::filesystem::path& path) {
    const auto t = csv::read_file(path);
    const char* cols[] = {"sequence_id", "gop_index", "qp", "rate_bpp", "psnr_db"};
    std::array<std::size_t, 5> c{};
    for (int i = 0; i < 5; ++i) {
        auto k = t.column(cols[i]);
        if (!k) throw ParseError(path.string() + ": missing column " + cols[i]);
        c[static_cast<std::size_t>(i)] = *k;
    }
    std::map<std::pair<std::string, int>, RdCurve> groups;
    for (const auto& r : t.rows) {
        RdPoint p;
        const std::string sid = r[c[0]];
        const int gop = static_cast<int>(csv::parse_int_strict(r[c[1]], "gop_index"));
        p.qp = static_cast<int>(csv::parse_int_strict(r[c[2]], "qp"));
        p.rate = csv::parse_double_strict(r[c[3]], "rate_bpp");
        p.psnr = csv::parse_double_strict(r[c[4]], "psnr_db");
        if (!(p.rate > 0.0) || !std::isfinite(p.rate))
            throw ValidationError(path.string() + ": " + sid + "/" + std::to_string(gop) + ": rate must be > 0");
        if (!std::isfinite(p.psnr))
            throw ValidationError(path.string() + ": " + sid + "/" + std::to_string(gop) + ": PSNR not finite");
        auto& g = groups[{sid, gop}];
        g.sequence_id = sid;
        g.gop_index = gop;
        g.points.push_back(p);
    }
    std::vector<RdCurve> out;
    for (auto& [key, curve] : groups) {
        std::stable_sort(curve.points.begin(), curve.points.end(),
                         [](const RdPoint& a, const RdPoint& b) { return a.rate < b.rate; });
        out.push_back(std::move(curve));
    }
    return out;
}

nlohmann::json fit_to_json(const RdFit& fit, const std::string& sequence_id, int gop_index) {
    nlohmann::json j;
    j["sequence_id"] = sequence_id;
    j["gop_index"] = gop_index;
    j["kind"] = std::string(to_string(fit.kind));
    j["params"] = fit.params;
    // JSON has no NaN/inf; such values are written as null.
    auto num = [](double v) { return std::isfinite(v) ? nlohmann::json(v) : nlohmann::json(nullptr); };
    j["r2"] = num(fit.r_squared);
    j["rmse"] = num(fit.rmse);
    return j;
}

RdFit fit_from_json(const nlohmann::json& j) {
    try {
        RdFit f;
        f.kind = parse_kind(j.at("kind").get<std::string>());
        f.params = j.at("params").get<std::vector<double>>();
        if (f.params.size() != param_count(f.kind)) throw ValidationError("fit record has wrong parameter count");
        auto num = [&](const char* k) {
            if (!j.contains(k) || j.at(k).is_null()) return std::numeric_limits<double>::quiet_NaN();
            return j.at(k).get<double>();
        };
        f.r_squared = num("r2");
        f.rmse = num("rmse");
        return f;
    } catch (const nlohmann::json::exception& e) {
        throw ParseError(std::string("fit record: ") + e.what());
    }
}

}  // namespace texrd::rd
