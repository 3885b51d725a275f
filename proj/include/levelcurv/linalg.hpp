#pragma once

#include <algorithm>
#include <cmath>
#include <vector>

#include <Eigen/Dense>

#include "levelcurv/errors.hpp"

namespace levelcurv {

template <int Dim>
using Vec = Eigen::Matrix<double, Dim, 1>;

template <int Dim>
using Mat = Eigen::Matrix<double, Dim, Dim>;

using DynVec = Eigen::VectorXd;
using DynMat = Eigen::MatrixXd;

// Largest |A - A^T| entry relative to max(1, max|A|).
template <typename Derived>
double asymmetry(const Eigen::MatrixBase<Derived>& a)
{
    const double scale = std::max(1.0, a.cwiseAbs().maxCoeff());
    return (a - a.transpose()).cwiseAbs().maxCoeff() / scale;
}

namespace detail {

// Cyclic Jacobi sweeps on a copy of a symmetric matrix. Converges
// quadratically; 50 sweeps is far beyond what matrices of size <= 10 need.
inline std::vector<double> jacobi_eigenvalues(DynMat a)
{
    const Eigen::Index n = a.rows();
    for (int sweep = 0; sweep < 50; ++sweep) {
        double off = 0.0;
        for (Eigen::Index p = 0; p < n; ++p)
            for (Eigen::Index q = p + 1; q < n; ++q)
                off += a(p, q) * a(p, q);
        const double diag = a.diagonal().squaredNorm();
        if (off <= 1e-34 * std::max(diag, 1e-300) || off == 0.0)
            break;
        for (Eigen::Index p = 0; p < n; ++p) {
            for (Eigen::Index q = p + 1; q < n; ++q) {
                const double apq = a(p, q);
                if (apq == 0.0)
                    continue;
                const double theta = (a(q, q) - a(p, p)) / (2.0 * apq);
                const double t = (theta >= 0.0 ? 1.0 : -1.0)
                                 / (std::abs(theta) + std::sqrt(theta * theta + 1.0));
                const double c = 1.0 / std::sqrt(t * t + 1.0);
                const double s = t * c;
                for (Eigen::Index k = 0; k < n; ++k) {
                    const double akp = a(k, p);
                    const double akq = a(k, q);
                    a(k, p) = c * akp - s * akq;
                    a(k, q) = s * akp + c * akq;
                }
                for (Eigen::Index k = 0; k < n; ++k) {
                    const double apk = a(p, k);
                    const double aqk = a(q, k);
                    a(p, k) = c * apk - s * aqk;
                    a(q, k) = s * apk + c * aqk;
                }
                a(p, q) = 0.0;
                a(q, p) = 0.0;
            }
        }
    }
    std::vector<double> eig(static_cast<std::size_t>(n));
    for (Eigen::Index i = 0; i < n; ++i)
        eig[static_cast<std::size_t>(i)] = a(i, i);
    std::sort(eig.begin(), eig.end());
    return eig;
}

} // namespace detail

// Ascending eigenvalues of a symmetric matrix. Sizes 1 and 2 use the closed
// form; larger sizes use cyclic Jacobi.
template <typename Derived>
std::vector<double> symmetric_eigenvalues(const Eigen::MatrixBase<Derived>& a)
{
    if (a.rows() != a.cols())
        throw ArgError("eigenvalues of a non-square matrix");
    if (asymmetry(a) > 1e-10)
        throw ArgError("matrix is not symmetric");
    const Eigen::Index n = a.rows();
    if (n == 0)
        return {};
    if (n == 1)
        return {a(0, 0)};
    if (n == 2) {
        const double off = 0.5 * (a(0, 1) + a(1, 0));
        const double mean = 0.5 * (a(0, 0) + a(1, 1));
        const double half_gap = std::hypot(0.5 * (a(0, 0) - a(1, 1)), off);
        return {mean - half_gap, mean + half_gap};
    }
    DynMat sym = 0.5 * (a + a.transpose());
    return detail::jacobi_eigenvalues(std::move(sym));
}

} // namespace levelcurv
