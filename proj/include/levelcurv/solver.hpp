#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>
#include <vector>

#include "levelcurv/domain.hpp"
#include "levelcurv/errors.hpp"
#include "levelcurv/grid.hpp"
#include "levelcurv/jets.hpp"
#include "levelcurv/operators.hpp"

namespace levelcurv {

enum class InitialKind { Radial, Gauge, Presolve };

inline const char* to_string(InitialKind kind)
{
    switch (kind) {
    case InitialKind::Radial:
        return "radial";
    case InitialKind::Gauge:
        return "gauge";
    case InitialKind::Presolve:
        return "presolve";
    }
    return "?";
}

template <int Dim>
struct Scenario {
    ConvexRing<Dim> ring;
    int resolution = 64;
    OperatorSpec<Dim> op = OperatorSpec<Dim>::heat();
    InitialKind initial = InitialKind::Gauge;
    double t_end = 1.0;
    double cfl_factor = 0.9;
    double snapshot_every = 0.0;  // <= 0: only t = 0 and the final time
    double steady_tol = 1e-8;
};

template <int Dim>
struct Snapshot {
    ScalarField<Dim> field;
    double max_residual = 0.0;  // max |u_t| over Interior nodes
    bool steady = false;
};

namespace detail {

// Sets boundary nodes to their Dirichlet values: 0 outer, 1 inner.
template <int Dim>
void impose_dirichlet(const Mask<Dim>& mask, std::vector<double>& v)
{
    for (std::size_t i = 0; i < v.size(); ++i) {
        const NodeKind k = mask.kind(i);
        if (k == NodeKind::OuterBoundary)
            v[i] = 0.0;
        else if (k == NodeKind::InnerBoundary)
            v[i] = 1.0;
    }
}

template <int Dim>
ScalarField<Dim> field_from(MaskPtr<Dim> mask, const std::function<double(const Vec<Dim>&)>& f, double time)
{
    const auto& grid = mask->grid();
    std::vector<double> v(grid.size(), std::numeric_limits<double>::quiet_NaN());
    for (std::size_t i : mask->interior_nodes())
        v[i] = f(grid.position(i));
    impose_dirichlet(*mask, v);
    return ScalarField<Dim>(std::move(mask), std::move(v), time);
}

// min over directions nu of (h0(nu) - <x,nu>) / (h0(nu) - h1(nu)), the gauge
// of the Minkowski interpolation (1-c) outer + c inner.
inline double gauge_ratio(const ConvexRing<2>& ring, const Vec<2>& x, double theta)
{
    const Vec<2> nu(std::cos(theta), std::sin(theta));
    const double h0 = ring.outer().support(nu);
    const double h1 = ring.inner().support(nu);
    return (h0 - x.dot(nu)) / (h0 - h1);
}

inline double gauge_ratio(const ConvexRing<3>& ring, const Vec<3>& x, const Vec<3>& nu)
{
    const double h0 = ring.outer().support(nu);
    const double h1 = ring.inner().support(nu);
    return (h0 - x.dot(nu)) / (h0 - h1);
}

struct GaugeTable2 {
    std::vector<double> angles;
};

inline double gauge_value(const ConvexRing<2>& ring, const GaugeTable2& table, const Vec<2>& x)
{
    double best = std::numeric_limits<double>::infinity();
    double best_theta = 0.0;
    for (double th : table.angles) {
        const double g = gauge_ratio(ring, x, th);
        if (g < best) {
            best = g;
            best_theta = th;
        }
    }
    // Golden-section refinement around the best sampled direction.
    const double step = 2.0 * M_PI / 720.0;
    double a = best_theta - step;
    double b = best_theta + step;
    const double phi = 0.5 * (std::sqrt(5.0) - 1.0);
    double c = b - phi * (b - a);
    double d = a + phi * (b - a);
    double fc = gauge_ratio(ring, x, c);
    double fd = gauge_ratio(ring, x, d);
    for (int it = 0; it < 60; ++it) {
        if (fc < fd) {
            b = d;
            d = c;
            fd = fc;
            c = b - phi * (b - a);
            fc = gauge_ratio(ring, x, c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + phi * (b - a);
            fd = gauge_ratio(ring, x, d);
        }
    }
    best = std::min({best, fc, fd});
    return std::clamp(best, 0.0, 1.0);
}

inline double gauge_value(const ConvexRing<3>& ring, const std::vector<Vec<3>>& dirs, const Vec<3>& x)
{
    double best = std::numeric_limits<double>::infinity();
    Vec<3> nu = dirs.front();
    for (const auto& d : dirs) {
        const double g = gauge_ratio(ring, x, d);
        if (g < best) {
            best = g;
            nu = d;
        }
    }
    // Pattern search on the sphere in a tangent frame at the best direction.
    double step = 0.1;
    while (step > 1e-9) {
        bool moved = false;
        Vec<3> t1 = nu.unitOrthogonal();
        Vec<3> t2 = nu.cross(t1);
        for (const Vec<3>& t : {t1, Vec<3>(-t1), t2, Vec<3>(-t2)}) {
            const Vec<3> cand = (nu + step * t).normalized();
            const double g = gauge_ratio(ring, x, cand);
            if (g < best) {
                best = g;
                nu = cand;
                moved = true;
                break;
            }
        }
        if (!moved)
            step *= 0.5;
    }
    return std::clamp(best, 0.0, 1.0);
}

} // namespace detail

// Linearized discrete operator: per Interior node, the stencil weights of
// tr(M D^2 u) and of the gradient. Every line stencil has zero weight sum, so
// F is evaluated in difference form sum_j w_j (u_j - u_i), which stays well
// conditioned when a boundary arm is tiny and the weights are huge.
template <int Dim>
class DiscreteOperator {
public:
    DiscreteOperator(MaskPtr<Dim> mask, const OperatorSpec<Dim>& spec) : mask_(std::move(mask)), spec_(spec)
    {
        const auto& grid = mask_->grid();
        const auto& h = grid.spacing;
        const Mat<Dim>& m = spec_.matrix();
        const bool gradient = spec_.kind() == OperatorKind::GradAugmented && spec_.beta() != 0.0;
        const auto& nodes = mask_->interior_nodes();
        row_start_.reserve(nodes.size() + 1);
        row_start_.push_back(0);
        std::vector<std::pair<std::size_t, double>> row;
        for (std::size_t node : nodes) {
            const auto& lines = mask_->lines(node);
            row.clear();
            auto add = [&](std::size_t col, double w) {
                if (w == 0.0)
                    return;
                for (auto& e : row)
                    if (e.first == col) {
                        e.second += w;
                        return;
                    }
                row.emplace_back(col, w);
            };
            for (int a = 0; a < Dim; ++a) {
                const LineArms& l = lines[static_cast<std::size_t>(a)];
                const LineStencil s = line_stencil(l.arm_bwd, l.arm_fwd);
                const double scale = m(a, a) / (h[a] * h[a]);
                add(l.bwd, scale * s.second.bwd);
                add(l.fwd, scale * s.second.fwd);
            }
            for (int i = 0; i < Dim; ++i) {
                for (int j = i + 1; j < Dim; ++j) {
                    const double mij = m(i, j) + m(j, i);
                    if (mij == 0.0)
                        continue;
                    const double scale = mij / (4.0 * h[i] * h[j]);
                    for (int sign : {+1, -1}) {
                        const LineArms& l = lines[static_cast<std::size_t>(diagonal_line<Dim>(i, j, sign))];
                        const LineStencil s = line_stencil(l.arm_bwd, l.arm_fwd);
                        add(l.bwd, sign * scale * s.second.bwd);
                        add(l.fwd, sign * scale * s.second.fwd);
                    }
                }
            }
            double total = 0.0;
            for (const auto& e : row) {
                cols_.push_back(e.first);
                weights_.push_back(e.second);
                total += e.second;
            }
            row_start_.push_back(cols_.size());
            weight_sum_.push_back(total);
            if (gradient) {
                for (int a = 0; a < Dim; ++a) {
                    const LineArms& l = lines[static_cast<std::size_t>(a)];
                    const LineStencil s = line_stencil(l.arm_bwd, l.arm_fwd);
                    grad_cols_.push_back(l.bwd);
                    grad_w_.push_back(s.first.bwd / h[a]);
                    grad_cols_.push_back(l.fwd);
                    grad_w_.push_back(s.first.fwd / h[a]);
                }
            }
        }
    }

    const Mask<Dim>& mask() const { return *mask_; }
    const OperatorSpec<Dim>& spec() const { return spec_; }

    // Explicit bound h_min^2 / (2 n Lambda) with Lambda the largest
    // eigenvalue of dF/dr.
    double stability_bound() const
    {
        const double h = mask_->grid().min_spacing();
        return h * h / (2.0 * Dim * spec_.max_eigenvalue());
    }

    // F at the r-th Interior node.
    double apply(std::size_t r, const std::vector<double>& u) const
    {
        const double ui = u[mask_->interior_nodes()[r]];
        double acc = 0.0;
        for (std::size_t k = row_start_[r]; k < row_start_[r + 1]; ++k)
            acc += weights_[k] * (u[cols_[k]] - ui);
        if (!grad_w_.empty()) {
            double g2 = 0.0;
            for (int a = 0; a < Dim; ++a) {
                const std::size_t b = 2 * (r * Dim + static_cast<std::size_t>(a));
                const double g = grad_w_[b] * (u[grad_cols_[b]] - ui) + grad_w_[b + 1] * (u[grad_cols_[b + 1]] - ui);
                g2 += g * g;
            }
            acc += spec_.beta() * g2;
        }
        return acc;
    }

    // Rate (u^{k+1} - u^k) / dt of row r under a step of size dt. Regular
    // rows give F; rows whose diagonal weight would make the explicit update
    // non-monotone (short boundary arms) take the diagonal term implicitly,
    // giving F / (1 + dt W) with W the row weight sum. Steady states are
    // those of F either way.
    double rate(std::size_t r, const std::vector<double>& u, double dt) const
    {
        const double f = apply(r, u);
        const double w = dt * weight_sum_[r];
        return w <= 1.0 ? f : f / (1.0 + w);
    }

    // max |u_t| over Interior nodes for a step of size dt.
    double residual(const std::vector<double>& u, double dt) const
    {
        double worst = 0.0;
        for (std::size_t r = 0; r < weight_sum_.size(); ++r)
            worst = std::max(worst, std::abs(rate(r, u, dt)));
        return worst;
    }

    // One step; returns max |u_t| evaluated on the input.
    double step(const std::vector<double>& u, double dt, std::vector<double>& out) const
    {
        out = u;
        const auto& nodes = mask_->interior_nodes();
        double worst = 0.0;
        for (std::size_t r = 0; r < nodes.size(); ++r) {
            const std::size_t i = nodes[r];
            const double ut = rate(r, u, dt);
            worst = std::max(worst, std::abs(ut));
            const double next = u[i] + dt * ut;
            if (!std::isfinite(next))
                throw BlowupError("non-finite value at node " + std::to_string(i));
            out[i] = next;
        }
        return worst;
    }

private:
    MaskPtr<Dim> mask_;
    OperatorSpec<Dim> spec_;
    std::vector<std::size_t> row_start_;
    std::vector<std::size_t> cols_;
    std::vector<double> weights_;
    std::vector<double> weight_sum_;
    std::vector<std::size_t> grad_cols_;
    std::vector<double> grad_w_;
};

// Quasiconcave initial data satisfying u = 0 on the outer and u = 1 on the
// inner boundary.
template <int Dim>
ScalarField<Dim> initial_data(MaskPtr<Dim> mask, InitialKind kind)
{
    const auto& ring = mask->ring();
    if (kind == InitialKind::Radial) {
        if (!ring.concentric_balls())
            throw ArgError("radial initial data needs concentric balls");
        const Vec<Dim> c = ring.outer().center();
        const double r0 = ring.outer().semi_axes()[0];
        const double r1 = ring.inner().semi_axes()[0];
        return detail::field_from<Dim>(
            mask,
            [&](const Vec<Dim>& x) {
                const double r = (x - c).norm();
                if constexpr (Dim == 2)
                    return std::log(r0 / r) / std::log(r0 / r1);
                else
                    return (1.0 / r - 1.0 / r0) / (1.0 / r1 - 1.0 / r0);
            },
            0.0);
    }
    if (kind == InitialKind::Gauge) {
        if constexpr (Dim == 2) {
            detail::GaugeTable2 table;
            for (int k = 0; k < 720; ++k)
                table.angles.push_back(2.0 * M_PI * k / 720.0);
            for (const auto& body : {ring.outer(), ring.inner()})
                for (const Vec<2>& n : body.edge_normals())
                    table.angles.push_back(std::atan2(n[1], n[0]));
            return detail::field_from<2>(
                mask, [&](const Vec<2>& x) { return detail::gauge_value(ring, table, x); }, 0.0);
        } else {
            const auto dirs = ConvexBody<3>::unit_directions(600);
            return detail::field_from<3>(
                mask, [&](const Vec<3>& x) { return detail::gauge_value(ring, dirs, x); }, 0.0);
        }
    }
    throw ArgError("presolve initial data is built by solve_scenario");
}

// One forward step of u_t = F at Interior nodes with Dirichlet values kept.
template <int Dim>
ScalarField<Dim> advance(const ScalarField<Dim>& field, const OperatorSpec<Dim>& spec, double dt)
{
    DiscreteOperator<Dim> op(field.mask_ptr(), spec);
    if (!(dt > 0.0) || dt > op.stability_bound() * (1.0 + 1e-12))
        throw StabilityError("dt = " + std::to_string(dt) + " exceeds the explicit bound "
                             + std::to_string(op.stability_bound()));
    std::vector<double> out;
    op.step(field.values(), dt, out);
    detail::impose_dirichlet(field.mask(), out);
    return ScalarField<Dim>(field.mask_ptr(), std::move(out), field.time() + dt);
}

template <int Dim>
struct SolveResult {
    MaskPtr<Dim> mask;
    std::vector<Snapshot<Dim>> snapshots;
    bool steady = false;
    double steady_time = 0.0;
    std::size_t steps = 0;
    double dt_max = 0.0;
    double initial_min_F = 0.0;
    std::vector<std::string> warnings;
};

namespace detail {

// Runs the flow on [t0, t_end] (or until steady), calling emit at t0, at
// each cadence time and at the final time.
template <int Dim, typename Emit>
bool integrate(const DiscreteOperator<Dim>& op, std::vector<double>& u, double t0, double t_end, double every,
               double dt_max, double steady_tol, std::size_t& steps, double& t_final, Emit&& emit)
{
    std::vector<double> next;
    double dt = dt_max;
    double t = t0;
    double res = op.residual(u, dt_max);
    emit(u, t, res, res < steady_tol);
    if (res < steady_tol) {
        t_final = t;
        return true;
    }
    const double span = t_end - t0;
    if (!(span > 0.0)) {
        t_final = t;
        return false;
    }
    const double interval = (every > 0.0 && every < span) ? every : span;
    const auto intervals = static_cast<std::size_t>(std::ceil(span / interval - 1e-9));
    for (std::size_t k = 0; k < intervals; ++k) {
        const double a = t0 + static_cast<double>(k) * interval;
        const double b = (k + 1 == intervals) ? t_end : t0 + static_cast<double>(k + 1) * interval;
        const auto n = static_cast<std::size_t>(std::ceil((b - a) / dt_max - 1e-12));
        dt = (b - a) / static_cast<double>(n);
        for (std::size_t s = 0; s < n; ++s) {
            res = op.step(u, dt, next);
            if (res < steady_tol) {
                t_final = a + static_cast<double>(s) * dt;
                emit(u, t_final, res, true);
                return true;
            }
            u.swap(next);
            ++steps;
        }
        t = b;
        res = op.residual(u, dt);
        const bool steady = res < steady_tol;
        emit(u, t, res, steady);
        if (steady) {
            t_final = t;
            return true;
        }
    }
    t_final = t;
    return false;
}

} // namespace detail

template <int Dim>
SolveResult<Dim> solve_scenario(const Scenario<Dim>& sc)
{
    if (!(sc.t_end >= 0.0))
        throw ArgError("t_end must be nonnegative");
    if (!(sc.cfl_factor > 0.0 && sc.cfl_factor <= 1.0))
        throw ArgError("cfl_factor must lie in (0, 1]");
    if (!(sc.steady_tol > 0.0))
        throw ArgError("steady_tol must be positive");
    SolveResult<Dim> result;
    result.mask = build_grid(sc.ring, sc.resolution);
    DiscreteOperator<Dim> op(result.mask, sc.op);
    result.dt_max = sc.cfl_factor * op.stability_bound();

    ScalarField<Dim> init = initial_data(result.mask,
                                         sc.initial == InitialKind::Presolve ? InitialKind::Gauge : sc.initial);
    std::vector<double> u = init.values();
    if (sc.initial == InitialKind::Presolve) {
        // Flow the gauge data to steady state and restart the clock.
        std::size_t steps = 0;
        double t_final = 0.0;
        const double horizon = 50.0 / sc.op.min_eigenvalue();
        const bool steady = detail::integrate(op, u, 0.0, horizon, 0.0, result.dt_max, sc.steady_tol, steps, t_final,
                                              [](const std::vector<double>&, double, double, bool) {});
        if (!steady)
            result.warnings.push_back("presolve did not reach steady_tol before t = " + std::to_string(horizon));
    }

    double min_f = std::numeric_limits<double>::infinity();
    for (std::size_t r = 0; r < result.mask->interior_nodes().size(); ++r)
        min_f = std::min(min_f, op.apply(r, u));
    result.initial_min_F = min_f;
    if (!(min_f > 0.0))
        result.warnings.push_back("initial data has min F = " + std::to_string(min_f) + " <= 0");

    double t_final = 0.0;
    result.steady = detail::integrate(
        op, u, 0.0, sc.t_end, sc.snapshot_every, result.dt_max, sc.steady_tol, result.steps, t_final,
        [&](const std::vector<double>& v, double t, double res, bool steady) {
            std::vector<double> copy = v;
            detail::impose_dirichlet(*result.mask, copy);
            result.snapshots.push_back({ScalarField<Dim>(result.mask, std::move(copy), t), res, steady});
        });
    result.steady_time = t_final;
    return result;
}

} // namespace levelcurv
