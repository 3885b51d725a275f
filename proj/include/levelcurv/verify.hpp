#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "levelcurv/errors.hpp"
#include "levelcurv/geometry.hpp"
#include "levelcurv/solver.hpp"
#include "levelcurv/symfun.hpp"

namespace levelcurv {

// n equispaced levels from lo to hi inclusive.
inline std::vector<double> level_grid(double lo, double hi, int n)
{
    if (n < 1 || !(lo <= hi))
        throw ArgError("level grid needs n >= 1 and lo <= hi");
    if (n == 1)
        return {lo};
    std::vector<double> c(static_cast<std::size_t>(n));
    for (int k = 0; k < n; ++k)
        c[static_cast<std::size_t>(k)] = lo + (hi - lo) * k / (n - 1);
    return c;
}

// Equispaced grid of eta values from 0 to hi.
inline std::vector<double> eta_grid(double hi, int n)
{
    return level_grid(0.0, hi, n);
}

template <int Dim>
std::vector<LevelCurve<Dim>> extract_levels(const ScalarField<Dim>& field, const std::vector<double>& levels,
                                            const LevelOptions& opt = {})
{
    std::vector<LevelCurve<Dim>> out;
    out.reserve(levels.size());
    for (double c : levels)
        out.push_back(extract_level_set(field, c, opt));
    return out;
}

// ---------------------------------------------------------------- rank

struct LevelRank {
    double level = 0.0;
    std::vector<int> ranks;  // one per sample
    int min_rank = 0;
    int max_rank = 0;
    std::optional<double> phi_min;  // phi at l = min_rank, when l < n - 1
    std::optional<double> phi_max;
};

struct TimeRank {
    double time = 0.0;
    int l = 0;              // minimal rank over all levels
    bool constant = true;   // every sample on every level has rank l
    std::vector<LevelRank> levels;
};

struct RankProfile {
    double tolerance = 0.0;
    std::vector<TimeRank> times;
};

template <int Dim>
TimeRank rank_at(const std::vector<LevelCurve<Dim>>& curves, double time, double tol)
{
    TimeRank tr;
    tr.time = time;
    tr.l = std::numeric_limits<int>::max();
    for (const auto& curve : curves) {
        LevelRank lr;
        lr.level = curve.level;
        lr.min_rank = std::numeric_limits<int>::max();
        lr.max_rank = 0;
        for (const auto& s : curve.samples) {
            const int r = rank_split(Spectrum(s.weingarten.curvatures), tol).l;
            lr.ranks.push_back(r);
            lr.min_rank = std::min(lr.min_rank, r);
            lr.max_rank = std::max(lr.max_rank, r);
        }
        if (lr.ranks.empty())
            throw LevelError("no annotated samples on level " + std::to_string(curve.level));
        if (lr.min_rank < Dim - 1) {
            for (const auto& s : curve.samples) {
                const double v = phi(Spectrum(s.weingarten.curvatures), lr.min_rank).phi;
                lr.phi_min = std::min(lr.phi_min.value_or(v), v);
                lr.phi_max = std::max(lr.phi_max.value_or(v), v);
            }
        }
        tr.l = std::min(tr.l, lr.min_rank);
        tr.levels.push_back(std::move(lr));
    }
    for (const auto& lr : tr.levels)
        tr.constant = tr.constant && lr.min_rank == tr.l && lr.max_rank == tr.l;
    return tr;
}

template <int Dim>
RankProfile rank_profile(const std::vector<Snapshot<Dim>>& snapshots, const std::vector<double>& levels, double tol,
                         const LevelOptions& opt = {})
{
    RankProfile p;
    p.tolerance = tol;
    for (const auto& s : snapshots)
        p.times.push_back(rank_at(extract_levels(s.field, levels, opt), s.field.time(), tol));
    return p;
}

struct MonotonicityCheck {
    bool pass = true;
    std::optional<std::pair<double, double>> witness;  // (s, t) with s < t and l(s) > l(t)
};

// l(t) must be nondecreasing; input is (t, l(t)) in increasing time.
inline MonotonicityCheck check_rank_monotonicity(const std::vector<std::pair<double, int>>& l)
{
    if (l.size() < 2)
        throw ArgError("rank monotonicity needs at least two times");
    MonotonicityCheck r;
    std::size_t best = 0;
    for (std::size_t k = 1; k < l.size(); ++k) {
        if (l[k].second < l[best].second) {
            r.pass = false;
            r.witness = std::make_pair(l[best].first, l[k].first);
            return r;
        }
        if (l[k].second > l[best].second)
            best = k;
    }
    return r;
}

inline MonotonicityCheck check_rank_monotonicity(const RankProfile& profile)
{
    std::vector<std::pair<double, int>> l;
    for (const auto& t : profile.times)
        l.emplace_back(t.time, t.l);
    return check_rank_monotonicity(l);
}

// ---------------------------------------------------------------- kappa

template <int Dim>
struct KappaPoint {
    double level = 0.0;
    double kappa = 0.0;  // infimum of the smallest principal curvature
    Vec<Dim> location = Vec<Dim>::Zero();
    std::size_t samples = 0;
    SkipCounts skipped;
};

template <int Dim>
KappaPoint<Dim> kappa_of(const LevelCurve<Dim>& curve, std::size_t min_samples)
{
    KappaPoint<Dim> k;
    k.level = curve.level;
    k.samples = curve.samples.size();
    k.skipped = curve.skipped;
    if (curve.samples.empty())
        throw LevelError("every sample on level " + std::to_string(curve.level) + " was skipped");
    if (curve.samples.size() < min_samples)
        throw LevelError("level " + std::to_string(curve.level) + " has " + std::to_string(curve.samples.size())
                         + " samples, fewer than " + std::to_string(min_samples));
    k.kappa = std::numeric_limits<double>::infinity();
    for (const auto& s : curve.samples) {
        if (s.weingarten.kappa_min() < k.kappa) {
            k.kappa = s.weingarten.kappa_min();
            k.location = s.location;
        }
    }
    return k;
}

template <int Dim>
std::vector<KappaPoint<Dim>> kappa_curve(const std::vector<LevelCurve<Dim>>& curves, std::size_t min_samples = 64)
{
    std::vector<KappaPoint<Dim>> out;
    for (const auto& c : curves)
        out.push_back(kappa_of(c, min_samples));
    return out;
}

template <int Dim>
std::vector<KappaPoint<Dim>> kappa_curve(const ScalarField<Dim>& field, const std::vector<double>& levels,
                                         std::size_t min_samples = 64, const LevelOptions& opt = {})
{
    return kappa_curve(extract_levels(field, levels, opt), min_samples);
}

// ---------------------------------------------------------------- bound

struct BoundOptions {
    double a_max = 10.0;
    double fit_tol = 1e-9;  // absolute slack on margins
    double eq_tol = 0.03;   // equality when |margin| <= eq_tol * bound
};

struct BoundLevel {
    double level = 0.0;
    double kappa = 0.0;
    double bound = 0.0;
    double margin = 0.0;
    bool equality = false;
};

struct BoundFit {
    double A = 0.0;
    double kappa0 = 0.0;
    double kappa1 = 0.0;
    double a_lo = 0.0;
    std::vector<BoundLevel> levels;
    double min_margin = 0.0;
    bool interior_equality = false;  // some level other than the extremes is an equality level
    bool all_equality = false;
    bool propagation_holds = true;   // interior equality implies equality everywhere
    bool monotone_path = true;       // bound values never increased along the search path
};

inline double bound_value(double c, double A, double kappa0, double kappa1)
{
    return std::min(kappa0, kappa1 * std::exp(-A)) * std::exp(A * c);
}

// Smallest A in [max(0, ln(kappa1/kappa0)), a_max] with
// kappa(c) >= min{kappa0, kappa1 e^-A} e^{Ac} - fit_tol at every level.
inline BoundFit fit_A_and_check_bound(std::vector<std::pair<double, double>> curve, double kappa0, double kappa1,
                                      const BoundOptions& opt = {})
{
    if (curve.empty())
        throw ArgError("bound fit needs a nonempty curve");
    if (!(kappa0 > 0.0) || !(kappa1 > 0.0))
        throw ArgError("kappa0 and kappa1 must be positive");
    std::sort(curve.begin(), curve.end());
    BoundFit fit;
    fit.kappa0 = kappa0;
    fit.kappa1 = kappa1;
    fit.a_lo = std::max(0.0, std::log(kappa1 / kappa0));
    if (fit.a_lo > opt.a_max)
        throw FitError("lower end of the search range " + std::to_string(fit.a_lo) + " exceeds a_max");

    std::vector<double> last_bound;
    auto min_margin = [&](double A) {
        double worst = std::numeric_limits<double>::infinity();
        std::vector<double> b;
        for (const auto& [c, k] : curve) {
            b.push_back(bound_value(c, A, kappa0, kappa1));
            worst = std::min(worst, k - b.back());
        }
        return std::make_pair(worst, b);
    };
    // Path points are visited in arbitrary order; monotonicity is checked
    // over the sorted set at the end.
    std::vector<std::pair<double, std::vector<double>>> path;
    auto feasible = [&](double A) {
        auto [m, b] = min_margin(A);
        path.emplace_back(A, std::move(b));
        return m >= -opt.fit_tol;
    };

    double A = fit.a_lo;
    if (!feasible(fit.a_lo)) {
        if (!feasible(opt.a_max))
            throw FitError("no feasible A in [" + std::to_string(fit.a_lo) + ", " + std::to_string(opt.a_max)
                           + "]; minimal violation " + std::to_string(-min_margin(opt.a_max).first));
        double lo = fit.a_lo, hi = opt.a_max;
        while (hi - lo > 1e-13 * (1.0 + hi)) {
            const double mid = 0.5 * (lo + hi);
            (feasible(mid) ? hi : lo) = mid;
        }
        A = hi;
    }
    std::sort(path.begin(), path.end(), [](const auto& a, const auto& b) { return a.first < b.first; });
    for (std::size_t k = 1; k < path.size(); ++k)
        for (std::size_t i = 0; i < curve.size(); ++i)
            fit.monotone_path = fit.monotone_path
                                && path[k].second[i] <= path[k - 1].second[i] * (1.0 + 1e-14) + 1e-300;

    fit.A = A;
    fit.min_margin = std::numeric_limits<double>::infinity();
    fit.all_equality = true;
    for (std::size_t i = 0; i < curve.size(); ++i) {
        BoundLevel bl;
        bl.level = curve[i].first;
        bl.kappa = curve[i].second;
        bl.bound = bound_value(bl.level, A, kappa0, kappa1);
        bl.margin = bl.kappa - bl.bound;
        bl.equality = std::abs(bl.margin) <= opt.eq_tol * bl.bound;
        fit.min_margin = std::min(fit.min_margin, bl.margin);
        fit.all_equality = fit.all_equality && bl.equality;
        if (i > 0 && i + 1 < curve.size())
            fit.interior_equality = fit.interior_equality || bl.equality;
        fit.levels.push_back(bl);
    }
    fit.propagation_holds = !fit.interior_equality || fit.all_equality;
    return fit;
}

// Fit on a kappa curve, with kappa0/kappa1 taken at its extreme levels.
template <int Dim>
BoundFit fit_bound_on_curve(const std::vector<KappaPoint<Dim>>& kc, const BoundOptions& opt = {})
{
    if (kc.empty())
        throw ArgError("bound fit needs a nonempty curve");
    std::vector<std::pair<double, double>> curve;
    for (const auto& k : kc)
        curve.emplace_back(k.level, k.kappa);
    std::sort(curve.begin(), curve.end());
    return fit_A_and_check_bound(curve, curve.front().second, curve.back().second, opt);
}

// ---------------------------------------------------------------- quasiconcavity

struct DefectEntry {
    double time = 0.0;
    double level = 0.0;
    double defect = 0.0;
    bool pass = true;
};

struct QuasiconcavityReport {
    std::string measure;  // "turn_defect" in 2D, "negative_curvature" in 3D
    double tolerance = 0.0;
    double worst = 0.0;
    bool pass = true;
    std::vector<DefectEntry> entries;
};

// 2D: turn defect of each level curve in units of h, pass when <= defect_tol.
// 3D: largest negative part of the smallest principal curvature over the
// samples, pass when <= psd_tol.
template <int Dim>
void add_quasiconcavity(QuasiconcavityReport& rep, const std::vector<LevelCurve<Dim>>& curves, double time)
{
    for (const auto& curve : curves) {
        DefectEntry e;
        e.time = time;
        e.level = curve.level;
        if constexpr (Dim == 2) {
            e.defect = convexity_defect(curve);
        } else {
            double kmin = 0.0;
            for (const auto& s : curve.samples)
                kmin = std::min(kmin, s.weingarten.kappa_min());
            e.defect = -kmin;
        }
        e.pass = e.defect <= rep.tolerance;
        rep.worst = std::max(rep.worst, e.defect);
        rep.pass = rep.pass && e.pass;
        rep.entries.push_back(e);
    }
}

template <int Dim>
QuasiconcavityReport make_quasiconcavity_report(double defect_tol, double psd_tol)
{
    QuasiconcavityReport rep;
    rep.measure = Dim == 2 ? "turn_defect" : "negative_curvature";
    rep.tolerance = Dim == 2 ? defect_tol : psd_tol;
    return rep;
}

template <int Dim>
QuasiconcavityReport quasiconcavity_scan(const std::vector<Snapshot<Dim>>& snapshots, const std::vector<double>& levels,
                                         double defect_tol = 5.0, double psd_tol = 1e-3, const LevelOptions& opt = {})
{
    auto rep = make_quasiconcavity_report<Dim>(defect_tol, psd_tol);
    LevelOptions lo = opt;
    lo.annotate = Dim == 3;
    for (const auto& s : snapshots)
        add_quasiconcavity(rep, extract_levels(s.field, levels, lo), s.field.time());
    return rep;
}

// ---------------------------------------------------------------- degeneracy

template <int Dim>
struct DegeneracySample {
    Vec<Dim> location = Vec<Dim>::Zero();
    double level = 0.0;
    double kappa_min = 0.0;
};

struct LevelEta {
    double level = 0.0;
    double eta = 0.0;  // min over the level of kappa e^{-A c}
    bool crossing = false;
};

template <int Dim>
struct DegeneracyReport {
    double A = 0.0;
    bool crossed = false;
    double eta0 = 0.0;        // interpolated crossing, or the last grid value when none
    double eta_exact = 0.0;   // min over samples of kappa e^{-A u}
    Vec<Dim> location = Vec<Dim>::Zero();
    double crossing_level = 0.0;
    bool interior = false;    // crossing sample lies strictly between the extreme levels
    bool simultaneous = false;
    double simultaneity = 0.0;
    std::vector<LevelEta> levels;
};

// Smallest eta0 on the grid at which min over samples of the smallest
// eigenvalue of a - eta0 e^{Au} I reaches zero.
template <int Dim>
DegeneracyReport<Dim> degeneracy_scan(const std::vector<DegeneracySample<Dim>>& samples, double A,
                                      const std::vector<double>& grid, double simultaneity = 0.02)
{
    if (samples.empty())
        throw ArgError("degeneracy scan needs samples");
    if (grid.empty() || grid.front() < 0.0)
        throw ArgError("eta grid must be nonempty and start at a nonnegative value");
    for (std::size_t k = 1; k < grid.size(); ++k)
        if (!(grid[k] > grid[k - 1]))
            throw ArgError("eta grid must be strictly ascending");

    DegeneracyReport<Dim> rep;
    rep.A = A;
    rep.simultaneity = simultaneity;
    auto weight = [&](const DegeneracySample<Dim>& s) { return std::exp(A * s.level); };
    auto lowest = [&](double eta) {
        std::size_t arg = 0;
        double m = std::numeric_limits<double>::infinity();
        for (std::size_t i = 0; i < samples.size(); ++i) {
            const double v = samples[i].kappa_min - eta * weight(samples[i]);
            if (v < m) {
                m = v;
                arg = i;
            }
        }
        return std::make_pair(m, arg);
    };

    rep.eta_exact = std::numeric_limits<double>::infinity();
    for (const auto& s : samples)
        rep.eta_exact = std::min(rep.eta_exact, s.kappa_min / weight(s));

    double prev_eta = grid.front();
    auto [prev_m, prev_arg] = lowest(prev_eta);
    std::size_t arg = prev_arg;
    if (prev_m <= 0.0) {
        rep.crossed = true;
        rep.eta0 = prev_eta;
    } else {
        for (std::size_t k = 1; k < grid.size(); ++k) {
            const auto [m, a] = lowest(grid[k]);
            if (m <= 0.0) {
                rep.crossed = true;
                rep.eta0 = prev_eta + prev_m * (grid[k] - prev_eta) / (prev_m - m);
                arg = a;
                break;
            }
            prev_eta = grid[k];
            prev_m = m;
        }
    }
    if (!rep.crossed)
        rep.eta0 = grid.back();

    double lo_level = std::numeric_limits<double>::infinity(), hi_level = -lo_level;
    for (const auto& s : samples) {
        lo_level = std::min(lo_level, s.level);
        hi_level = std::max(hi_level, s.level);
    }
    rep.location = samples[arg].location;
    rep.crossing_level = samples[arg].level;
    rep.interior = rep.crossing_level > lo_level && rep.crossing_level < hi_level;

    std::vector<double> levels;
    for (const auto& s : samples)
        levels.push_back(s.level);
    std::sort(levels.begin(), levels.end());
    levels.erase(std::unique(levels.begin(), levels.end()), levels.end());
    rep.simultaneous = rep.crossed;
    for (double c : levels) {
        LevelEta le;
        le.level = c;
        le.eta = std::numeric_limits<double>::infinity();
        for (const auto& s : samples)
            if (s.level == c)
                le.eta = std::min(le.eta, s.kappa_min / weight(s));
        le.crossing = rep.crossed && std::abs(le.eta - rep.eta0) <= simultaneity * std::abs(rep.eta0);
        rep.simultaneous = rep.simultaneous && le.crossing;
        rep.levels.push_back(le);
    }
    return rep;
}

template <int Dim>
std::vector<DegeneracySample<Dim>> degeneracy_samples(const std::vector<LevelCurve<Dim>>& curves)
{
    std::vector<DegeneracySample<Dim>> out;
    for (const auto& curve : curves)
        for (const auto& s : curve.samples)
            out.push_back({s.location, curve.level, s.weingarten.kappa_min()});
    return out;
}

template <int Dim>
DegeneracyReport<Dim> degeneracy_scan(const ScalarField<Dim>& field, double A, const std::vector<double>& grid,
                                      const std::vector<double>& levels, double simultaneity = 0.02,
                                      const LevelOptions& opt = {})
{
    return degeneracy_scan(degeneracy_samples(extract_levels(field, levels, opt)), A, grid, simultaneity);
}

} // namespace levelcurv
