#pragma once

#include <cmath>
#include <random>
#include <string>
#include <vector>

#include "levelcurv/errors.hpp"
#include "levelcurv/jets.hpp"
#include "levelcurv/linalg.hpp"
#include "levelcurv/operators.hpp"
#include "levelcurv/solver.hpp"

namespace levelcurv {

// A state (r, p, u, t) written as (s^2 A, s theta, u, t) with s = |p|.
template <int Dim>
struct StructState {
    Mat<Dim> A = Mat<Dim>::Zero();
    double s = 1.0;
    Vec<Dim> theta = Vec<Dim>::UnitX();
    double u = 0.0;
    double t = 0.0;
};

template <int Dim>
StructState<Dim> lift_state(const Jet<Dim>& jet, double u, double t, double gradient_floor = 1e-8)
{
    const double s = jet.gradient.norm();
    if (!(s > gradient_floor))
        throw CriticalPointError("|grad u| = " + std::to_string(s) + " at or below the floor");
    StructState<Dim> st;
    st.s = s;
    st.theta = jet.gradient / s;
    st.A = jet.hessian / (s * s);
    st.A = (0.5 * (st.A + st.A.transpose())).eval();
    st.u = u;
    st.t = t;
    return st;
}

template <int Dim>
Jet<Dim> reconstruct(const StructState<Dim>& st)
{
    Jet<Dim> j;
    j.value = st.u;
    j.gradient = st.s * st.theta;
    j.hessian = st.s * st.s * st.A;
    j.time = st.t;
    return j;
}

// Coordinates of the (A, s) space: diagonal entries of A, then the strict
// upper triangle row by row, then s.
template <int Dim>
constexpr int kStructCoords = Dim * (Dim + 1) / 2 + 1;

template <int Dim>
using StructVec = Eigen::Matrix<double, kStructCoords<Dim>, 1>;

template <int Dim>
using StructMat = Eigen::Matrix<double, kStructCoords<Dim>, kStructCoords<Dim>>;

namespace detail {

template <int Dim>
std::vector<std::pair<int, int>> struct_entries()
{
    std::vector<std::pair<int, int>> e;
    for (int a = 0; a < Dim; ++a)
        e.emplace_back(a, a);
    for (int a = 0; a < Dim; ++a)
        for (int b = a + 1; b < Dim; ++b)
            e.emplace_back(a, b);
    return e;
}

template <int Dim>
std::pair<Mat<Dim>, double> split_coords(const StructVec<Dim>& v)
{
    const auto entries = struct_entries<Dim>();
    Mat<Dim> x = Mat<Dim>::Zero();
    for (std::size_t k = 0; k < entries.size(); ++k) {
        const auto [a, b] = entries[k];
        x(a, b) = v[static_cast<int>(k)];
        x(b, a) = v[static_cast<int>(k)];
    }
    return {x, v[kStructCoords<Dim> - 1]};
}

} // namespace detail

// F~(A, s) = F(s^2 A, s theta, u, t).
template <int Dim>
double ftilde_value(const OperatorSpec<Dim>& spec, const StructState<Dim>& st, const Mat<Dim>& A, double s)
{
    return operator_value(spec, Mat<Dim>(s * s * A), Vec<Dim>(s * st.theta), st.u, st.t);
}

// Q(V, V) for V built from (Xt, Yt) through X = s^2 Xt + 2 s A Yt, Y = Yt.
template <int Dim>
double q_form(const OperatorSpec<Dim>& spec, const StructState<Dim>& st, const Mat<Dim>& Xt, double Yt)
{
    if (asymmetry(Xt) > 1e-12 * (1.0 + Xt.cwiseAbs().maxCoeff()))
        throw ArgError("Xtilde must be symmetric");
    const auto e = eval_operator(spec, Mat<Dim>(st.s * st.s * st.A), Vec<Dim>(st.s * st.theta), st.u, st.t);
    const Mat<Dim> X = st.s * st.s * Xt + 2.0 * st.s * st.A * Yt;
    const double Y = Yt;
    Eigen::Matrix<double, Dim * Dim, 1> xf;
    for (int a = 0; a < Dim; ++a)
        for (int b = 0; b < Dim; ++b)
            xf[a * Dim + b] = X(a, b);
    double q = xf.dot(e.d2F_drdr * xf);
    q += 2.0 * xf.dot(e.d2F_drdp * st.theta) * Y;
    q += st.theta.dot(e.d2F_dpdp * st.theta) * Y * Y;
    q += 4.0 / st.s * e.dF_dr.cwiseProduct(X).sum() * Y;
    q -= 6.0 * e.dF_dr.cwiseProduct(st.A).sum() * Y * Y;
    return q;
}

template <int Dim>
struct ConcavityResult {
    StructMat<Dim> hessian = StructMat<Dim>::Zero();
    double margin = 0.0;     // largest eigenvalue of the Hessian
    double tolerance = 0.0;  // concave when margin <= tolerance
    bool concave() const { return margin <= tolerance; }
};

// Hessian of F~ over the (A, s) coordinates by central differences.
template <int Dim>
ConcavityResult<Dim> ftilde_concavity(const OperatorSpec<Dim>& spec, const StructState<Dim>& st, double step = 0.0)
{
    constexpr int N = kStructCoords<Dim>;
    const double d = step > 0.0 ? step : 1e-4 * (1.0 + st.A.norm() + st.s);
    StructVec<Dim> z;
    {
        const auto entries = detail::struct_entries<Dim>();
        for (std::size_t k = 0; k < entries.size(); ++k)
            z[static_cast<int>(k)] = st.A(entries[k].first, entries[k].second);
        z[N - 1] = st.s;
    }
    auto f = [&](const StructVec<Dim>& v) {
        const auto [A, s] = detail::split_coords<Dim>(v);
        const double val = ftilde_value(spec, st, A, s);
        if (!std::isfinite(val))
            throw NumericsError("non-finite F~ evaluation");
        return val;
    };
    const double f0 = f(z);
    ConcavityResult<Dim> r;
    for (int i = 0; i < N; ++i) {
        StructVec<Dim> ei = StructVec<Dim>::Zero();
        ei[i] = d;
        r.hessian(i, i) = (f(z + ei) - 2.0 * f0 + f(z - ei)) / (d * d);
        for (int j = i + 1; j < N; ++j) {
            StructVec<Dim> ej = StructVec<Dim>::Zero();
            ej[j] = d;
            const double v = (f(z + ei + ej) - f(z + ei - ej) - f(z - ei + ej) + f(z - ei - ej)) / (4.0 * d * d);
            r.hessian(i, j) = v;
            r.hessian(j, i) = v;
        }
    }
    Eigen::MatrixXd h = r.hessian;
    r.margin = symmetric_eigenvalues(h).back();
    r.tolerance = 1e-8 * (1.0 + r.hessian.norm());
    return r;
}

// Exact Hessian of F~ for the catalog operators, where
// F~ = s^2 tr(M A) + beta s^2.
template <int Dim>
StructMat<Dim> ftilde_hessian_exact(const OperatorSpec<Dim>& spec, const StructState<Dim>& st)
{
    constexpr int N = kStructCoords<Dim>;
    const Mat<Dim>& M = spec.matrix();
    StructMat<Dim> h = StructMat<Dim>::Zero();
    const auto entries = detail::struct_entries<Dim>();
    for (std::size_t k = 0; k < entries.size(); ++k) {
        const auto [a, b] = entries[k];
        const double coeff = a == b ? M(a, a) : M(a, b) + M(b, a);
        h(static_cast<int>(k), N - 1) = 2.0 * st.s * coeff;
        h(N - 1, static_cast<int>(k)) = 2.0 * st.s * coeff;
    }
    double hss = 2.0 * M.cwiseProduct(st.A).sum();
    if (spec.kind() == OperatorKind::GradAugmented)
        hss += 2.0 * spec.beta();
    h(N - 1, N - 1) = hss;
    return h;
}

template <int Dim>
struct ConcavitySample {
    Vec<Dim> location = Vec<Dim>::Zero();
    double time = 0.0;
    double margin = 0.0;
    double tolerance = 0.0;
    double q_max = 0.0;
};

template <int Dim>
struct ConcavityReport {
    std::vector<ConcavitySample<Dim>> samples;
    double worst_hessian_margin = -std::numeric_limits<double>::infinity();
    double worst_q = -std::numeric_limits<double>::infinity();
    double lambda_min = std::numeric_limits<double>::infinity();
    std::vector<ConcavitySample<Dim>> violations;
    std::size_t skipped = 0;
};

struct ScanOptions {
    int samples_per_snapshot = 32;
    int directions = 64;
    double gradient_floor = 1e-8;
    double corner_exclusion = 3.0;  // in units of the largest spacing
    std::uint64_t seed = 0x5eed;
};

// Unit directions in the (A, s) coordinates, fixed by the seed.
template <int Dim>
std::vector<StructVec<Dim>> struct_directions(int count, std::uint64_t seed)
{
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> normal(0.0, 1.0);
    std::vector<StructVec<Dim>> dirs;
    while (static_cast<int>(dirs.size()) < count) {
        StructVec<Dim> v;
        for (int i = 0; i < kStructCoords<Dim>; ++i)
            v[i] = normal(rng);
        if (v.norm() > 1e-6)
            dirs.push_back(v / v.norm());
    }
    return dirs;
}

template <int Dim>
double max_q_over(const OperatorSpec<Dim>& spec, const StructState<Dim>& st, const std::vector<StructVec<Dim>>& dirs)
{
    double best = -std::numeric_limits<double>::infinity();
    for (const auto& v : dirs) {
        const auto [X, Y] = detail::split_coords<Dim>(v);
        best = std::max(best, q_form(spec, st, X, Y));
    }
    return best;
}

// Samples interior nodes of every snapshot along a golden-ratio sequence,
// skipping nodes near corners and near critical points.
template <int Dim>
ConcavityReport<Dim> concavity_scan(const OperatorSpec<Dim>& spec, const std::vector<Snapshot<Dim>>& snapshots,
                                    const ScanOptions& opt = {})
{
    if (snapshots.empty())
        throw ArgError("concavity scan needs at least one snapshot");
    if (opt.samples_per_snapshot <= 0 || opt.directions <= 0)
        throw ArgError("sample and direction counts must be positive");
    const auto dirs = struct_directions<Dim>(opt.directions, opt.seed);
    const double golden = 0.5 * (std::sqrt(5.0) - 1.0);
    ConcavityReport<Dim> rep;
    std::vector<Jet<Dim>> states;
    for (const auto& snap : snapshots) {
        const auto& field = snap.field;
        const auto& nodes = field.mask().interior_nodes();
        const auto corners = field.mask().ring().corners();
        const double exclusion = opt.corner_exclusion * field.grid().max_spacing();
        const std::size_t n = nodes.size();
        const std::size_t want = std::min<std::size_t>(n, static_cast<std::size_t>(opt.samples_per_snapshot));
        std::size_t taken = 0;
        for (std::size_t k = 0; k < n && taken < want; ++k) {
            const double x = std::fmod(0.5 + golden * static_cast<double>(k), 1.0);
            const std::size_t idx = nodes[std::min(n - 1, static_cast<std::size_t>(x * static_cast<double>(n)))];
            const Vec<Dim> p = field.grid().position(idx);
            bool near_corner = false;
            for (const auto& q : corners)
                near_corner = near_corner || (p - q).norm() < exclusion;
            Jet<Dim> jet = fd_jet(field, idx);
            jet.time = field.time();
            if (near_corner || !(jet.gradient.norm() > opt.gradient_floor)) {
                ++rep.skipped;
                continue;
            }
            ++taken;
            const auto st = lift_state(jet, jet.value, jet.time, opt.gradient_floor);
            const auto c = ftilde_concavity(spec, st);
            ConcavitySample<Dim> s;
            s.location = p;
            s.time = field.time();
            s.margin = c.margin;
            s.tolerance = c.tolerance;
            s.q_max = max_q_over(spec, st, dirs);
            rep.worst_hessian_margin = std::max(rep.worst_hessian_margin, s.margin);
            rep.worst_q = std::max(rep.worst_q, s.q_max);
            if (!c.concave())
                rep.violations.push_back(s);
            rep.samples.push_back(s);
            states.push_back(jet);
        }
    }
    if (!states.empty())
        rep.lambda_min = ellipticity_lambda(spec, states);
    return rep;
}

} // namespace levelcurv
