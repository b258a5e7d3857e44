#include "texrd/bd_metrics.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <map>
#include <ostream>
#include <set>

#include "texrd/csv.hpp"
#include "texrd/error.hpp"
#include "texrd/stats.hpp"

namespace texrd::bd {

std::vector<double> polyfit(std::span<const double> x, std::span<const double> y, int degree) {
    const auto n = static_cast<Eigen::Index>(x.size());
    const Eigen::Index m = degree + 1;
    if (x.size() != y.size() || n < m) throw ValidationError("polyfit: need at least degree+1 points");
    if (std::set<double>(x.begin(), x.end()).size() < static_cast<std::size_t>(m))
        throw NumericError("polyfit: collinear abscissae");
    Eigen::MatrixXd X(n, m);
    Eigen::VectorXd Y(n);
    for (Eigen::Index i = 0; i < n; ++i) {
        double p = 1.0;
        for (Eigen::Index j = 0; j < m; ++j, p *= x[static_cast<std::size_t>(i)]) X(i, j) = p;
        Y(i) = y[static_cast<std::size_t>(i)];
    }
    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(X);
    if (qr.rank() < m) throw NumericError("polyfit: singular system");
    const Eigen::VectorXd c = qr.solve(Y);
    return {c.data(), c.data() + c.size()};
}

double polyint(std::span<const double> c, double a, double b) {
    double ia = 0.0, ib = 0.0;
    for (std::size_t k = c.size(); k-- > 0;) {
        const double d = static_cast<double>(k + 1);
        ia = ia * a + c[k] / d;
        ib = ib * b + c[k] / d;
    }
    return ib * b - ia * a;
}

namespace {

struct Axes {
    std::vector<double> logr, psnr;
};

Axes axes(const rd::RdCurve& c, const char* which) {
    if (c.points.size() < 4)
        throw ValidationError(std::string(which) + " curve needs at least 4 points");
    Axes a;
    for (const auto& p : c.points) {
        if (!(p.rate > 0.0)) throw ValidationError(std::string(which) + " curve has a non-positive rate");
        if (!std::isfinite(p.psnr)) throw ValidationError(std::string(which) + " curve has a non-finite PSNR");
        a.logr.push_back(std::log10(p.rate));
        a.psnr.push_back(p.psnr);
    }
    return a;
}

double lo(std::span<const double> v) { return *std::min_element(v.begin(), v.end()); }
double hi(std::span<const double> v) { return *std::max_element(v.begin(), v.end()); }

}  // namespace

BdResult bd_psnr(const rd::RdCurve& reference, const rd::RdCurve& test) {
    const Axes r = axes(reference, "reference"), t = axes(test, "test");
    const double a = std::max(lo(r.logr), lo(t.logr));
    const double b = std::min(hi(r.logr), hi(t.logr));
    if (!(b > a)) throw NumericError("BD-PSNR: rate ranges do not overlap");
    const auto pr = polyfit(r.logr, r.psnr, 3);
    const auto pt = polyfit(t.logr, t.psnr, 3);
    BdResult res;
    res.value = (polyint(pt, a, b) - polyint(pr, a, b)) / (b - a);
    res.overlap_lo = a;
    res.overlap_hi = b;
    return res;
}

BdResult bd_rate(const rd::RdCurve& reference, const rd::RdCurve& test) {
    const Axes r = axes(reference, "reference"), t = axes(test, "test");
    for (const Axes* ax : {&r, &t}) {
        std::vector<std::size_t> order(ax->logr.size());
        for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
        std::sort(order.begin(), order.end(), [&](std::size_t i, std::size_t j) { return ax->logr[i] < ax->logr[j]; });
        for (std::size_t k = 1; k < order.size(); ++k)
            if (!(ax->psnr[order[k]] > ax->psnr[order[k - 1]]))
                throw NumericError("BD-rate: PSNR does not increase with rate (non-invertible curve)");
    }
    const double a = std::max(lo(r.psnr), lo(t.psnr));
    const double b = std::min(hi(r.psnr), hi(t.psnr));
    if (!(b > a)) throw NumericError("BD-rate: PSNR ranges do not overlap");
    const auto pr = polyfit(r.psnr, r.logr, 3);
    const auto pt = polyfit(t.psnr, t.logr, 3);
    const double delta = (polyint(pt, a, b) - polyint(pr, a, b)) / (b - a);
    BdResult res;
    res.value = (std::pow(10.0, delta) - 1.0) * 100.0;
    res.overlap_lo = a;
    res.overlap_hi = b;
    return res;
}

rd::RdCurve mean_curve(std::span<const rd::RdCurve> curves) {
    if (curves.empty()) throw ValidationError("mean_curve: no curves");
    std::map<int, std::pair<double, double>> sums;
    std::set<int> qps;
    for (const auto& p : curves.front().points) qps.insert(p.qp);
    for (const auto& c : curves) {
        std::set<int> q;
        for (const auto& p : c.points) {
            q.insert(p.qp);
            sums[p.qp].first += p.rate;
            sums[p.qp].second += p.psnr;
        }
        if (q != qps || q.size() != c.points.size())
            throw ValidationError("mean_curve: curves of " + c.sequence_id + " use different QP sets");
    }
    rd::RdCurve out;
    out.sequence_id = curves.front().sequence_id;
    out.gop_index = -1;
    const auto n = static_cast<double>(curves.size());
    for (const auto& [qp, s] : sums) out.points.push_back({qp, s.first / n, s.second / n});
    std::sort(out.points.begin(), out.points.end(),
              [](const rd::RdPoint& a, const rd::RdPoint& b) { return a.rate < b.rate; });
    return out;
}

rd::RdCurve sample_curve(const rd::RdFit& fit, const rd::RdCurve& like) {
    rd::RdCurve out;
    out.sequence_id = like.sequence_id;
    out.gop_index = like.gop_index;
    for (const auto& p : like.points) out.points.push_back({p.qp, p.rate, rd::eval_rd(fit, p.rate)});
    return out;
}

void write_bd_report(std::ostream& out, std::span<const BdRow> rows, std::span<const std::string> metadata) {
    for (const auto& m : metadata) out << "# " << m << '\n';
    out << "sequence_id,gop_index,bd_psnr_db,bd_rate_pct\n";
    std::vector<double> ps, rs;
    for (const auto& r : rows) {
        out << r.sequence_id << ',' << r.gop_index << ',' << csv::format_double(r.bd_psnr) << ','
            << csv::format_double(r.bd_rate) << '\n';
        if (std::isfinite(r.bd_psnr)) ps.push_back(r.bd_psnr);
        if (std::isfinite(r.bd_rate)) rs.push_back(r.bd_rate);
    }
    auto m = [](const std::vector<double>& v) {
        return v.empty() ? std::numeric_limits<double>::quiet_NaN() : mean(v);
    };
    auto s = [](const std::vector<double>& v) {
        return v.empty() ? std::numeric_limits<double>::quiet_NaN() : sample_std(v);
    };
    out << "mean,," << csv::format_double(m(ps)) << ',' << csv::format_double(m(rs)) << '\n';
    out << "std,," << csv::format_double(s(ps)) << ',' << csv::format_double(s(rs)) << '\n';
}

}  // namespace texrd::bd
