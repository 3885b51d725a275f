#pragma once

#include <algorithm>
#include <cstdio>
#include <limits>
#include <string>
#include <vector>

#include "levelcurv/errors.hpp"
#include "levelcurv/grid.hpp"
#include "levelcurv/linalg.hpp"

namespace levelcurv {

enum class OperatorKind { Heat, Linear, GradAugmented };

inline const char* to_string(OperatorKind kind)
{
    switch (kind) {
    case OperatorKind::Heat:
        return "HEAT";
    case OperatorKind::Linear:
        return "LINEAR";
    case OperatorKind::GradAugmented:
        return "GRAD_AUGMENTED";
    }
    return "?";
}

// F(r, p, u, t) = tr(M r) + beta |p|^2; HEAT is M = I, beta = 0.
template <int Dim>
class OperatorSpec {
public:
    static OperatorSpec heat() { return OperatorSpec(OperatorKind::Heat, Mat<Dim>::Identity(), 0.0); }

    static OperatorSpec linear(const Mat<Dim>& m) { return OperatorSpec(OperatorKind::Linear, m, 0.0); }

    static OperatorSpec grad_augmented(const Mat<Dim>& m, double beta)
    {
        if (!std::isfinite(beta))
            throw ArgError("beta must be finite");
        return OperatorSpec(OperatorKind::GradAugmented, m, beta);
    }

    OperatorKind kind() const { return kind_; }
    const Mat<Dim>& matrix() const { return m_; }
    double beta() const { return beta_; }
    double min_eigenvalue() const { return eig_.front(); }
    double max_eigenvalue() const { return eig_.back(); }

    std::string describe() const
    {
        std::string s = to_string(kind_);
        if (kind_ == OperatorKind::Heat)
            return s;
        char buf[48];
        s += "(M=[";
        for (int i = 0; i < Dim; ++i) {
            for (int j = 0; j < Dim; ++j) {
                std::snprintf(buf, sizeof buf, "%.6g", m_(i, j));
                s += buf;
                if (j + 1 < Dim)
                    s += ' ';
            }
            if (i + 1 < Dim)
                s += "; ";
        }
        s += "]";
        if (kind_ == OperatorKind::GradAugmented) {
            std::snprintf(buf, sizeof buf, ", beta=%.6g", beta_);
            s += buf;
        }
        return s + ")";
    }

private:
    OperatorSpec(OperatorKind kind, const Mat<Dim>& m, double beta) : kind_(kind), m_(m), beta_(beta)
    {
        if (!m_.allFinite())
            throw ArgError("operator matrix has non-finite entries");
        if (asymmetry(m_) > 1e-12)
            throw ArgError("operator matrix must be symmetric");
        m_ = 0.5 * (m_ + m_.transpose()).eval();
        eig_ = symmetric_eigenvalues(m_);
        if (!(eig_.front() > 0.0))
            throw ArgError("operator matrix must be positive definite");
    }

    OperatorKind kind_;
    Mat<Dim> m_;
    double beta_ = 0.0;
    std::vector<double> eig_;
};

// Value and derivatives of F at one state. Second derivatives with respect
// to r are indexed by flattened (alpha, beta) pairs, row-major.
template <int Dim>
struct OperatorEval {
    double F = 0.0;
    Mat<Dim> dF_dr = Mat<Dim>::Zero();
    Vec<Dim> dF_dp = Vec<Dim>::Zero();
    double dF_du = 0.0;
    Eigen::Matrix<double, Dim * Dim, Dim * Dim> d2F_drdr = Eigen::Matrix<double, Dim * Dim, Dim * Dim>::Zero();
    Eigen::Matrix<double, Dim * Dim, Dim> d2F_drdp = Eigen::Matrix<double, Dim * Dim, Dim>::Zero();
    Mat<Dim> d2F_dpdp = Mat<Dim>::Zero();
};

template <int Dim>
double operator_value(const OperatorSpec<Dim>& spec, const Mat<Dim>& r, const Vec<Dim>& p, double /*u*/,
                      double /*t*/)
{
    double f = (spec.matrix().cwiseProduct(r)).sum();
    if (spec.kind() == OperatorKind::GradAugmented)
        f += spec.beta() * p.squaredNorm();
    return f;
}

template <int Dim>
OperatorEval<Dim> eval_operator(const OperatorSpec<Dim>& spec, const Mat<Dim>& r, const Vec<Dim>& p, double u,
                                double t)
{
    OperatorEval<Dim> e;
    e.F = operator_value(spec, r, p, u, t);
    e.dF_dr = spec.matrix();
    switch (spec.kind()) {
    case OperatorKind::Heat:
    case OperatorKind::Linear:
        break;
    case OperatorKind::GradAugmented:
        e.dF_dp = 2.0 * spec.beta() * p;
        e.d2F_dpdp = 2.0 * spec.beta() * Mat<Dim>::Identity();
        break;
    default:
        throw ArgError("unknown operator kind");
    }
    return e;
}

template <int Dim>
OperatorEval<Dim> eval_operator(const OperatorSpec<Dim>& spec, const Jet<Dim>& jet, double t)
{
    return eval_operator(spec, jet.hessian, jet.gradient, jet.value, t);
}

// Infimum over the states of the smallest eigenvalue of dF/dr.
template <int Dim>
double ellipticity_lambda(const OperatorSpec<Dim>& spec, const std::vector<Jet<Dim>>& states)
{
    if (states.empty())
        throw ArgError("ellipticity needs at least one state");
    double lambda = std::numeric_limits<double>::infinity();
    for (const auto& s : states) {
        const auto e = eval_operator(spec, s, s.time);
        lambda = std::min(lambda, symmetric_eigenvalues(e.dF_dr).front());
    }
    return lambda;
}

} // namespace levelcurv
