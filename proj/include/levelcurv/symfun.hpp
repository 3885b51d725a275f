#pragma once

#include <algorithm>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "levelcurv/errors.hpp"

namespace levelcurv {

// k-th elementary symmetric polynomial, sigma_0 = 1. One pass over the
// values, updating sigma_j for j = k..1 in place.
inline double sigma(int k, std::span<const double> values)
{
    if (k < 0 || static_cast<std::size_t>(k) > values.size())
        throw ArgError("sigma: k = " + std::to_string(k) + " out of range");
    std::vector<double> e(static_cast<std::size_t>(k) + 1, 0.0);
    e[0] = 1.0;
    std::size_t seen = 0;
    for (double v : values) {
        ++seen;
        const std::size_t top = std::min<std::size_t>(seen, static_cast<std::size_t>(k));
        for (std::size_t j = top; j >= 1; --j)
            e[j] += v * e[j - 1];
    }
    return e[static_cast<std::size_t>(k)];
}

// sigma_k of the tuple with entry j (0-based) removed.
inline double sigma_deleted(int k, std::span<const double> values, std::size_t j)
{
    if (j >= values.size())
        throw ArgError("sigma_deleted: index out of range");
    if (k < 0 || static_cast<std::size_t>(k) + 1 > values.size())
        throw ArgError("sigma_deleted: k out of range");
    std::vector<double> rest;
    rest.reserve(values.size() - 1);
    for (std::size_t i = 0; i < values.size(); ++i)
        if (i != j)
            rest.push_back(values[i]);
    return sigma(k, rest);
}

// Eigenvalues of a Weingarten tensor, sorted in descending order.
class Spectrum {
public:
    explicit Spectrum(std::vector<double> values) : values_(std::move(values))
    {
        if (values_.empty())
            throw ArgError("spectrum must have at least one eigenvalue");
        std::sort(values_.begin(), values_.end(), std::greater<>());
    }

    const std::vector<double>& values() const { return values_; }
    int size() const { return static_cast<int>(values_.size()); }
    double top() const { return values_.front(); }

    Spectrum shifted(double delta) const
    {
        std::vector<double> v = values_;
        for (double& x : v)
            x += delta;
        return Spectrum(std::move(v));
    }

private:
    std::vector<double> values_;
};

struct PhiValue {
    double p = 0.0;
    double q = 0.0;
    double phi = 0.0;
};

// Rank test function: p = sigma_{l+1}, q = sigma_{l+2}/sigma_{l+1} when
// sigma_{l+1} > 0 (sigma_{l+2} = 0 when l + 2 exceeds the spectrum length),
// phi = p + q. phi vanishes exactly when at most l eigenvalues are nonzero
// on a PSD spectrum.
inline PhiValue phi(const Spectrum& s, int l)
{
    const int m = s.size();
    if (l < 0 || l > m - 1)
        throw ArgError("phi: l must lie in [0, m-1]");
    PhiValue r;
    r.p = sigma(l + 1, s.values());
    const double next = l + 2 <= m ? sigma(l + 2, s.values()) : 0.0;
    r.q = r.p > 0.0 ? next / r.p : 0.0;
    r.phi = r.p + r.q;
    return r;
}

// phi of the regularized tensor a + eps I.
inline PhiValue phi_eps(const Spectrum& s, int l, double eps)
{
    if (!(eps >= 0.0))
        throw ArgError("phi_eps: eps must be nonnegative");
    return phi(eps == 0.0 ? s : s.shifted(eps), l);
}

inline double default_epsilon(const Spectrum& s) { return 1e-10 * (1.0 + s.top()); }

// Good/bad split of a spectrum: l eigenvalues above tol * max(1, top) are
// "good" (indices 0..l-1 of the descending spectrum), the rest "bad".
struct RankSplit {
    int l = 0;
    std::vector<int> good;
    std::vector<int> bad;
    double epsilon = 0.0;
    double tolerance = 0.0;
    double threshold = 0.0;
};

inline RankSplit rank_split(const Spectrum& s, double tol, double eps = 0.0)
{
    if (!(tol > 0.0))
        throw ArgError("rank_split: tolerance must be positive");
    RankSplit r;
    r.tolerance = tol;
    r.epsilon = eps;
    r.threshold = tol * std::max(1.0, s.top());
    for (int i = 0; i < s.size(); ++i) {
        if (s.values()[static_cast<std::size_t>(i)] > r.threshold)
            r.good.push_back(i);
        else
            r.bad.push_back(i);
    }
    r.l = static_cast<int>(r.good.size());
    return r;
}

// sigma_l(G) + (sigma_1(B|j)^2 - sigma_2(B|j)) / sigma_1(B)^2, the weight
// whose Newton-MacLaurin bounds [sigma_l(G), sigma_l(G) + 1] control the
// bad-direction gradient terms. Requires sigma_1(B) > 0.
inline double bad_direction_weight(std::span<const double> good, std::span<const double> bad, std::size_t j)
{
    const double s1 = sigma(1, bad);
    if (!(s1 > 0.0))
        throw ArgError("bad_direction_weight: sigma_1(B) must be positive");
    const double s1j = bad.size() >= 2 ? sigma_deleted(1, bad, j) : 0.0;
    const double s2j = bad.size() >= 3 ? sigma_deleted(2, bad, j) : 0.0;
    const double sg = sigma(static_cast<int>(good.size()), good);
    return sg + (s1j * s1j - s2j) / (s1 * s1);
}

} // namespace levelcurv
