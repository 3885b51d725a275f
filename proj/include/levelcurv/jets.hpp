#pragma once

#include <array>
#include <cmath>
#include <vector>

#include "levelcurv/errors.hpp"
#include "levelcurv/grid.hpp"
#include "levelcurv/linalg.hpp"

namespace levelcurv {

// Weights of (u_bwd, u_self, u_fwd) in the first and second derivative, per
// unit line parameter, of the quadratic through the three samples at
// parameters -arm_bwd, 0, +arm_fwd. Equivalent to extrapolating ghost values
// to the full-step nodes and taking central differences.
struct LineWeights {
    double bwd = 0.0;
    double self = 0.0;
    double fwd = 0.0;

    double apply(double ub, double u0, double uf) const { return bwd * ub + self * u0 + fwd * uf; }
};

struct LineStencil {
    LineWeights first;
    LineWeights second;
};

inline LineStencil line_stencil(double arm_bwd, double arm_fwd)
{
    const double tb = arm_bwd;
    const double tf = arm_fwd;
    const double denom = tf * tb * (tf + tb);
    LineStencil s;
    s.first.fwd = tb * tb / denom;
    s.first.bwd = -tf * tf / denom;
    s.first.self = -(s.first.fwd + s.first.bwd);
    s.second.fwd = 2.0 * tb / denom;
    s.second.bwd = 2.0 * tf / denom;
    s.second.self = -2.0 / (tf * tb);
    return s;
}

// Second-order finite-difference jet at an Interior node. Pure second
// derivatives come from the axis lines, mixed ones from the two diagonals of
// each axis pair, so the Hessian is symmetric by construction.
template <int Dim>
Jet<Dim> fd_jet(const ScalarField<Dim>& field, std::size_t node)
{
    const auto& mask = field.mask();
    if (node >= field.grid().size() || mask.kind(node) != NodeKind::Interior)
        throw StencilError("fd_jet requires an Interior node");
    const auto& lines = mask.lines(node);
    const auto& h = field.grid().spacing;
    const auto& v = field.values();
    const double u0 = v[node];

    Jet<Dim> jet;
    jet.value = u0;
    jet.location = field.grid().position(node);
    jet.time = field.time();
    for (int a = 0; a < Dim; ++a) {
        const LineArms& line = lines[static_cast<std::size_t>(a)];
        const LineStencil s = line_stencil(line.arm_bwd, line.arm_fwd);
        jet.gradient[a] = s.first.apply(v[line.bwd], u0, v[line.fwd]) / h[a];
        jet.hessian(a, a) = s.second.apply(v[line.bwd], u0, v[line.fwd]) / (h[a] * h[a]);
    }
    for (int i = 0; i < Dim; ++i) {
        for (int j = i + 1; j < Dim; ++j) {
            const LineArms& plus = lines[static_cast<std::size_t>(diagonal_line<Dim>(i, j, +1))];
            const LineArms& minus = lines[static_cast<std::size_t>(diagonal_line<Dim>(i, j, -1))];
            const double d2p = line_stencil(plus.arm_bwd, plus.arm_fwd).second.apply(v[plus.bwd], u0, v[plus.fwd]);
            const double d2m = line_stencil(minus.arm_bwd, minus.arm_fwd).second.apply(v[minus.bwd], u0, v[minus.fwd]);
            const double mixed = (d2p - d2m) / (4.0 * h[i] * h[j]);
            jet.hessian(i, j) = mixed;
            jet.hessian(j, i) = mixed;
        }
    }
    return jet;
}

namespace detail {

template <int Dim>
std::vector<std::array<int, Dim>> monomial_exponents(int degree)
{
    std::vector<std::array<int, Dim>> out;
    for (int d = 0; d <= degree; ++d) {
        std::array<int, Dim> e{};
        // Enumerate exponent tuples of total degree d in lexicographic order.
        auto rec = [&](auto&& self, int axis, int left) -> void {
            if (axis == Dim - 1) {
                e[static_cast<std::size_t>(axis)] = left;
                out.push_back(e);
                return;
            }
            for (int k = left; k >= 0; --k) {
                e[static_cast<std::size_t>(axis)] = k;
                self(self, axis + 1, left - k);
            }
        };
        rec(rec, 0, d);
    }
    return out;
}

template <int Dim>
double monomial(const std::array<int, Dim>& e, const Vec<Dim>& x)
{
    double r = 1.0;
    for (int a = 0; a < Dim; ++a)
        for (int k = 0; k < e[static_cast<std::size_t>(a)]; ++k)
            r *= x[a];
    return r;
}

} // namespace detail

// Jet at an arbitrary Interior point from a least-squares polynomial fit over
// the 5^Dim nodes around the nearest grid node. Interior nodes contribute
// their values; where a stencil line of one of them meets the ring boundary,
// the crossing point contributes the Dirichlet value. A cubic is fitted when
// the data supports it and a quadratic otherwise; both reproduce quadratic
// fields exactly.
template <int Dim>
Jet<Dim> jet_at_point(const ScalarField<Dim>& field, const Vec<Dim>& x)
{
    const auto& mask = field.mask();
    const auto& grid = field.grid();
    if (classify_point(mask, x) != NodeKind::Interior)
        throw StencilError("jet_at_point requires a point inside the ring");

    std::array<int, Dim> center{};
    for (int a = 0; a < Dim; ++a)
        center[static_cast<std::size_t>(a)] =
            static_cast<int>(std::lround((x[a] - grid.origin[a]) / grid.spacing[a]));

    std::vector<Vec<Dim>> pts;
    std::vector<double> vals;
    const Vec<Dim>& h = grid.spacing;
    auto push = [&](const Vec<Dim>& p, double value) {
        pts.push_back((p - x).cwiseQuotient(h));
        vals.push_back(value);
    };

    std::array<int, Dim> off{};
    off.fill(-2);
    while (true) {
        std::array<int, Dim> q = center;
        for (int a = 0; a < Dim; ++a)
            q[static_cast<std::size_t>(a)] += off[static_cast<std::size_t>(a)];
        if (grid.valid(q)) {
            const std::size_t idx = grid.index(q);
            if (mask.kind(idx) == NodeKind::Interior) {
                const Vec<Dim> p = grid.position(q);
                push(p, field.value(idx));
                const auto& lines = mask.lines(idx);
                for (int a = 0; a < Dim; ++a) {
                    const LineArms& line = lines[static_cast<std::size_t>(a)];
                    Vec<Dim> w = Vec<Dim>::Zero();
                    w[a] = h[a];
                    if (line.arm_fwd < 1.0)
                        push(p + line.arm_fwd * w, field.value(line.fwd));
                    if (line.arm_bwd < 1.0)
                        push(p - line.arm_bwd * w, field.value(line.bwd));
                }
            }
        }
        int a = Dim - 1;
        while (a >= 0 && off[static_cast<std::size_t>(a)] == 2) {
            off[static_cast<std::size_t>(a)] = -2;
            --a;
        }
        if (a < 0)
            break;
        ++off[static_cast<std::size_t>(a)];
    }

    const std::size_t quad_terms = static_cast<std::size_t>((Dim + 1) * (Dim + 2) / 2);
    if (pts.size() < quad_terms)
        throw StencilError("too few usable nodes for a quadratic fit");

    static const auto cubic = detail::monomial_exponents<Dim>(3);
    static const auto quadratic = detail::monomial_exponents<Dim>(2);

    auto fit = [&](const std::vector<std::array<int, Dim>>& basis, DynVec& coef) {
        DynMat design(static_cast<Eigen::Index>(pts.size()), static_cast<Eigen::Index>(basis.size()));
        DynVec rhs(static_cast<Eigen::Index>(pts.size()));
        for (std::size_t r = 0; r < pts.size(); ++r) {
            for (std::size_t c = 0; c < basis.size(); ++c)
                design(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = detail::monomial<Dim>(basis[c], pts[r]);
            rhs[static_cast<Eigen::Index>(r)] = vals[r];
        }
        Eigen::ColPivHouseholderQR<DynMat> qr(design);
        qr.setThreshold(1e-10);
        if (qr.rank() < static_cast<Eigen::Index>(basis.size()))
            return false;
        coef = qr.solve(rhs);
        return true;
    };

    DynVec coef;
    const std::vector<std::array<int, Dim>>* basis = &cubic;
    bool ok = 2 * pts.size() >= 3 * cubic.size() && fit(cubic, coef);
    if (!ok) {
        basis = &quadratic;
        ok = fit(quadratic, coef);
    }
    if (!ok)
        throw StencilError("rank-deficient neighborhood for the jet fit");

    Jet<Dim> jet;
    jet.location = x;
    jet.time = field.time();
    for (std::size_t c = 0; c < basis->size(); ++c) {
        const auto& e = (*basis)[c];
        int degree = 0;
        for (int a = 0; a < Dim; ++a)
            degree += e[static_cast<std::size_t>(a)];
        const double value = coef[static_cast<Eigen::Index>(c)];
        if (degree == 0) {
            jet.value = value;
        } else if (degree == 1) {
            for (int a = 0; a < Dim; ++a)
                if (e[static_cast<std::size_t>(a)] == 1)
                    jet.gradient[a] = value / h[a];
        } else if (degree == 2) {
            int i = -1, j = -1;
            for (int a = 0; a < Dim; ++a) {
                if (e[static_cast<std::size_t>(a)] == 2) {
                    i = a;
                    j = a;
                } else if (e[static_cast<std::size_t>(a)] == 1) {
                    (i < 0 ? i : j) = a;
                }
            }
            if (i == j) {
                jet.hessian(i, i) = 2.0 * value / (h[i] * h[i]);
            } else {
                jet.hessian(i, j) = value / (h[i] * h[j]);
                jet.hessian(j, i) = jet.hessian(i, j);
            }
        }
    }
    return jet;
}

} // namespace levelcurv
