#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>
#include <vector>

#include <json.hpp>

#include "levelcurv/config.hpp"
#include "levelcurv/structure.hpp"
#include "levelcurv/verify.hpp"

namespace levelcurv {

using Json = nlohmann::ordered_json;

namespace detail {

// JSON has no infinities; they are written as null like NaN.
inline Json number(double v)
{
    return std::isfinite(v) ? Json(v) : Json(nullptr);
}

template <int Dim>
Json point(const Vec<Dim>& x)
{
    Json a = Json::array();
    for (int i = 0; i < Dim; ++i)
        a.push_back(x[i]);
    return a;
}

inline Json flag(bool pass, double measured, double threshold, const std::string& relation, bool gating)
{
    Json f;
    f["pass"] = pass;
    f["measured"] = number(measured);
    f["threshold"] = number(threshold);
    f["relation"] = relation;
    f["gating"] = gating;
    return f;
}

} // namespace detail

inline LevelOptions level_options(const Config& cfg)
{
    LevelOptions o;
    o.gradient_floor = cfg.gradient_floor;
    o.corner_exclusion = cfg.corner_exclusion;
    return o;
}

inline Json rank_json(const RankProfile& p)
{
    Json j;
    j["tolerance"] = p.tolerance;
    Json times = Json::array();
    for (const auto& t : p.times) {
        Json jt;
        jt["time"] = t.time;
        jt["l"] = t.l;
        jt["constant"] = t.constant;
        Json levels = Json::array();
        for (const auto& lr : t.levels) {
            Json jl;
            jl["c"] = lr.level;
            jl["samples"] = lr.ranks.size();
            jl["min_rank"] = lr.min_rank;
            jl["max_rank"] = lr.max_rank;
            Json counts = Json::array();
            for (int r = 0; r <= lr.max_rank; ++r)
                counts.push_back(std::count(lr.ranks.begin(), lr.ranks.end(), r));
            jl["rank_counts"] = counts;
            jl["phi_min"] = lr.phi_min ? detail::number(*lr.phi_min) : Json(nullptr);
            jl["phi_max"] = lr.phi_max ? detail::number(*lr.phi_max) : Json(nullptr);
            levels.push_back(jl);
        }
        jt["levels"] = levels;
        times.push_back(jt);
    }
    j["times"] = times;
    return j;
}

inline Json bound_json(const BoundFit& f)
{
    Json j;
    j["A"] = f.A;
    j["kappa0"] = f.kappa0;
    j["kappa1"] = f.kappa1;
    j["a_lo"] = f.a_lo;
    j["min_margin"] = detail::number(f.min_margin);
    j["interior_equality"] = f.interior_equality;
    j["all_equality"] = f.all_equality;
    j["propagation_holds"] = f.propagation_holds;
    j["monotone_path"] = f.monotone_path;
    Json levels = Json::array();
    for (const auto& l : f.levels) {
        Json jl;
        jl["c"] = l.level;
        jl["kappa_u"] = l.kappa;
        jl["bound_value"] = l.bound;
        jl["margin"] = l.margin;
        jl["equality"] = l.equality;
        levels.push_back(jl);
    }
    j["levels"] = levels;
    return j;
}

template <int Dim>
Json structure_json(const ConcavityReport<Dim>& r)
{
    Json j;
    j["samples"] = r.samples.size();
    j["skipped"] = r.skipped;
    j["worst_hessian_margin"] = detail::number(r.worst_hessian_margin);
    j["worst_q"] = detail::number(r.worst_q);
    j["lambda_min"] = detail::number(r.lambda_min);
    Json v = Json::array();
    for (const auto& s : r.violations) {
        Json e;
        e["location"] = detail::point<Dim>(s.location);
        e["time"] = s.time;
        e["margin"] = s.margin;
        e["tolerance"] = s.tolerance;
        v.push_back(e);
    }
    j["violations"] = v;
    return j;
}

template <int Dim>
Json degeneracy_json(const DegeneracyReport<Dim>& d)
{
    Json j;
    j["A"] = d.A;
    j["crossed"] = d.crossed;
    j[d.crossed ? "eta0" : "eta0_exceeds"] = d.eta0;
    j["eta_exact"] = detail::number(d.eta_exact);
    j["location"] = detail::point<Dim>(d.location);
    j["crossing_level"] = d.crossing_level;
    j["location_kind"] = d.interior ? "interior" : "boundary";
    j["simultaneous"] = d.simultaneous;
    j["simultaneity"] = d.simultaneity;
    Json levels = Json::array();
    for (const auto& l : d.levels) {
        Json jl;
        jl["c"] = l.level;
        jl["eta"] = detail::number(l.eta);
        jl["crossing"] = l.crossing;
        levels.push_back(jl);
    }
    j["levels"] = levels;
    return j;
}

template <int Dim>
Json scenario_json(const Config& cfg, const Scenario<Dim>& sc, const SolveResult<Dim>& r)
{
    Json j;
    j["config"] = cfg.source.filename().string();
    j["dim"] = Dim;
    j["outer"] = cfg.outer;
    j["inner"] = cfg.inner;
    j["resolution"] = sc.resolution;
    j["operator"] = sc.op.describe();
    j["initial"] = to_string(sc.initial);
    j["t_end"] = sc.t_end;
    j["cfl_factor"] = sc.cfl_factor;
    j["snapshot_every"] = sc.snapshot_every;
    j["steady_tol"] = sc.steady_tol;
    j["dt_max"] = r.dt_max;
    j["steps"] = r.steps;
    j["steady"] = r.steady;
    j["steady_time"] = r.steady ? Json(r.steady_time) : Json(nullptr);
    j["final_time"] = r.snapshots.back().field.time();
    j["final_residual"] = r.snapshots.back().max_residual;
    j["snapshots"] = r.snapshots.size();
    j["warnings"] = r.warnings;
    return j;
}

struct Verification {
    Json report;
    bool pass = true;
};

// Runs every check on the snapshots of a finished solve. Rank constancy and
// the bound are gated on the snapshots with t > 0 (all snapshots when none
// has t > 0); the initial data is only assumed quasiconcave.
template <int Dim>
Verification verify_solution(const Config& cfg, const Scenario<Dim>& sc, const SolveResult<Dim>& res)
{
    const auto levels = cfg.analysis_levels();
    const auto lopt = level_options(cfg);
    const auto& snaps = res.snapshots;
    bool any_positive = false;
    for (const auto& s : snaps)
        any_positive = any_positive || s.field.time() > 0.0;
    auto gated = [&](double t) { return !any_positive || t > 0.0; };

    RankProfile rank;
    rank.tolerance = cfg.rank_tol;
    auto qc = make_quasiconcavity_report<Dim>(cfg.defect_tol, cfg.psd_tol);
    Json bounds = Json::array();
    BoundOptions bopt{cfg.a_max, cfg.fit_tol, cfg.eq_tol};
    double worst_margin = std::numeric_limits<double>::infinity();
    bool bound_ok = true;
    std::size_t propagation_failures = 0;
    std::optional<BoundFit> last_fit;
    std::vector<LevelCurve<Dim>> last_curves;

    for (const auto& s : snaps) {
        const double t = s.field.time();
        auto curves = extract_levels(s.field, levels, lopt);
        rank.times.push_back(rank_at(curves, t, cfg.rank_tol));
        add_quasiconcavity(qc, curves, t);
        Json jb;
        jb["time"] = t;
        jb["gating"] = gated(t);
        try {
            const auto kc = kappa_curve(curves, static_cast<std::size_t>(cfg.min_samples));
            const auto fit = fit_bound_on_curve(kc, bopt);
            Json body = bound_json(fit);
            for (auto it = body.begin(); it != body.end(); ++it)
                jb[it.key()] = it.value();
            if (gated(t)) {
                worst_margin = std::min(worst_margin, fit.min_margin);
                if (!fit.propagation_holds)
                    ++propagation_failures;
            }
            last_fit = fit;
        } catch (const Error& e) {
            jb["error"] = e.what();
            if (gated(t))
                bound_ok = false;
            last_fit.reset();
        }
        bounds.push_back(jb);
        last_curves = std::move(curves);
    }

    Json report;
    report["scenario"] = scenario_json(cfg, sc, res);
    report["rank"] = rank_json(rank);

    Json bound;
    bound["levels"] = levels;
    bound["a_max"] = cfg.a_max;
    bound["fit_tol"] = cfg.fit_tol;
    bound["eq_tol"] = cfg.eq_tol;
    bound["times"] = bounds;
    report["bound"] = bound;

    Json jq;
    jq["measure"] = qc.measure;
    jq["tolerance"] = qc.tolerance;
    jq["worst"] = qc.worst;
    jq["pass"] = qc.pass;
    Json entries = Json::array();
    for (const auto& e : qc.entries) {
        Json je;
        je["time"] = e.time;
        je["c"] = e.level;
        je["defect"] = e.defect;
        entries.push_back(je);
    }
    jq["entries"] = entries;
    report["quasiconcavity"] = jq;

    ScanOptions so;
    so.samples_per_snapshot = cfg.structure_samples;
    so.directions = cfg.structure_directions;
    so.gradient_floor = cfg.gradient_floor;
    so.corner_exclusion = cfg.corner_exclusion;
    const auto structure = concavity_scan(sc.op, snaps, so);
    report["structure"] = structure_json(structure);

    Json jd;
    std::optional<DegeneracyReport<Dim>> deg;
    const std::optional<double> deg_a = cfg.degeneracy_a ? cfg.degeneracy_a
                                        : last_fit        ? std::optional<double>(last_fit->A)
                                                          : std::nullopt;
    if (deg_a) {
        const auto samples = degeneracy_samples(last_curves);
        std::vector<double> grid = cfg.eta_grid;
        if (grid.empty()) {
            double top = 0.0;
            for (const auto& s : samples)
                top = std::max(top, s.kappa_min);
            grid = eta_grid(1.05 * std::max(top, 1e-12), 401);
        }
        if (!samples.empty()) {
            deg = degeneracy_scan(samples, *deg_a, grid, cfg.simultaneity);
            jd = degeneracy_json(*deg);
            jd["time"] = snaps.back().field.time();
        } else {
            jd["error"] = "no samples on the final snapshot";
        }
    } else {
        jd["error"] = "no bound fit on the final snapshot and no degeneracy_a given";
    }
    report["degeneracy"] = jd;

    // Flags.
    std::vector<std::pair<double, int>> lt;
    std::size_t nonconstant = 0;
    for (const auto& t : rank.times) {
        if (!gated(t.time))
            continue;
        lt.emplace_back(t.time, t.l);
        if (!t.constant)
            ++nonconstant;
    }
    std::vector<std::pair<double, int>> all_lt;
    for (const auto& t : rank.times)
        all_lt.emplace_back(t.time, t.l);
    Json flags;
    {
        const auto mono = all_lt.size() >= 2 ? check_rank_monotonicity(all_lt) : MonotonicityCheck{};
        Json f = detail::flag(mono.pass, mono.pass ? 0.0 : 1.0, 0.0, "decreases <= threshold", true);
        if (mono.witness)
            f["witness"] = {mono.witness->first, mono.witness->second};
        flags["rank_monotone"] = f;
    }
    flags["rank_constant"] =
        detail::flag(nonconstant == 0, static_cast<double>(nonconstant), 0.0, "nonconstant times <= threshold", true);
    flags["quasiconcavity"] = detail::flag(qc.pass, qc.worst, qc.tolerance, "worst <= threshold", true);
    flags["bound"] = detail::flag(bound_ok && worst_margin >= -cfg.fit_tol, bound_ok ? worst_margin : -std::numeric_limits<double>::infinity(),
                                  -cfg.fit_tol, "min margin >= threshold", true);
    {
        double frac = 0.0;
        if (last_fit) {
            std::size_t eq = 0;
            for (const auto& l : last_fit->levels)
                eq += l.equality ? 1 : 0;
            frac = static_cast<double>(eq) / static_cast<double>(last_fit->levels.size());
        }
        Json f = detail::flag(last_fit && last_fit->all_equality, frac, 1.0, "equality fraction >= threshold", false);
        f["eq_tol"] = cfg.eq_tol;
        flags["all_equality"] = f;
    }
    flags["equality_propagation"] = detail::flag(propagation_failures == 0, static_cast<double>(propagation_failures),
                                                 0.0, "failures <= threshold", false);
    flags["steady"] = detail::flag(res.steady, snaps.back().max_residual, sc.steady_tol, "residual < threshold", false);
    {
        double excess = -std::numeric_limits<double>::infinity();
        for (const auto& smp : structure.samples)
            excess = std::max(excess, smp.margin - smp.tolerance);
        flags["structure_concave"] = detail::flag(structure.violations.empty(), excess, 0.0,
                                                  "worst (margin - tolerance) <= threshold", false);
    }
    {
        double frac = 0.0;
        if (deg && !deg->levels.empty()) {
            std::size_t n = 0;
            for (const auto& l : deg->levels)
                n += l.crossing ? 1 : 0;
            frac = static_cast<double>(n) / static_cast<double>(deg->levels.size());
        }
        Json f = detail::flag(deg && deg->simultaneous, frac, 1.0, "crossing fraction >= threshold", false);
        f["simultaneity"] = cfg.simultaneity;
        flags["degeneracy_simultaneous"] = f;
    }
    report["flags"] = flags;

    Verification v;
    for (const Json& f : flags)
        if (f["gating"].get<bool>() && !f["pass"].get<bool>())
            v.pass = false;
    v.report = std::move(report);
    return v;
}

} // namespace levelcurv
