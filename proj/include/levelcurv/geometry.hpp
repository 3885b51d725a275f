#pragma once

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <optional>
#include <ostream>
#include <unordered_map>
#include <vector>

#include "levelcurv/errors.hpp"
#include "levelcurv/grid.hpp"
#include "levelcurv/jets.hpp"
#include "levelcurv/linalg.hpp"

namespace levelcurv {

template <int Dim>
using TangentMat = Eigen::Matrix<double, Dim - 1, Dim - 1>;

inline void require_gradient(double norm, double floor)
{
    if (!(norm > floor) || !std::isfinite(norm))
        throw CriticalPointError("gradient norm " + std::to_string(norm) + " is not above the floor "
                                 + std::to_string(floor));
}

// Unit gradient, which points into the superlevel set {u >= c}.
template <int Dim>
Vec<Dim> inner_normal(const Jet<Dim>& jet, double gradient_floor = 0.0)
{
    const double g = jet.gradient.norm();
    require_gradient(g, gradient_floor);
    return jet.gradient / g;
}

// Jet expressed in an orthonormal frame whose last axis is the gradient.
template <int Dim>
struct FrameJet {
    Mat<Dim> rotation = Mat<Dim>::Identity();
    double un = 0.0;
    Mat<Dim> rotated_hessian = Mat<Dim>::Zero();
    Jet<Dim> jet;
};

template <int Dim>
struct WeingartenTensor {
    TangentMat<Dim> a = TangentMat<Dim>::Zero();
    std::vector<double> curvatures;  // ascending

    double kappa_min() const { return curvatures.front(); }
};

inline std::vector<double> principal_curvatures(const DynMat& a) { return symmetric_eigenvalues(a); }

template <int Dim>
std::vector<double> principal_curvatures(const TangentMat<Dim>& a)
{
    return symmetric_eigenvalues(a);
}

// Householder reflection Q = I - 2vv^T/|v|^2 with v = g - |g| e_n, so that
// Q^T g = |g| e_n. The last component of v is formed without cancellation.
template <int Dim>
Mat<Dim> gradient_frame(const Vec<Dim>& g)
{
    const double norm = g.norm();
    Vec<Dim> v = g;
    const double gn = g[Dim - 1];
    if (gn > 0.0) {
        const double tail = g.head(Dim - 1).squaredNorm();
        v[Dim - 1] = -tail / (gn + norm);
    } else {
        v[Dim - 1] = gn - norm;
    }
    const double vv = v.squaredNorm();
    if (vv == 0.0 || vv <= 1e-300)
        return Mat<Dim>::Identity();
    return Mat<Dim>::Identity() - (2.0 / vv) * v * v.transpose();
}

template <int Dim>
std::pair<FrameJet<Dim>, WeingartenTensor<Dim>> frame_weingarten(const Jet<Dim>& jet,
                                                                  double gradient_floor = 0.0)
{
    const double g = jet.gradient.norm();
    require_gradient(g, gradient_floor);
    FrameJet<Dim> fj;
    fj.jet = jet;
    fj.rotation = gradient_frame<Dim>(jet.gradient);
    fj.un = g;
    fj.rotated_hessian = fj.rotation.transpose() * jet.hessian * fj.rotation;
    fj.rotated_hessian = 0.5 * (fj.rotated_hessian + fj.rotated_hessian.transpose()).eval();

    WeingartenTensor<Dim> w;
    w.a = -fj.rotated_hessian.template topLeftCorner<Dim - 1, Dim - 1>() / g;
    w.curvatures = principal_curvatures<Dim>(w.a);

    // Frame-free path: the projected shape operator has spectrum eig(a) + {0}.
    const Vec<Dim> n = jet.gradient / g;
    const Mat<Dim> proj = Mat<Dim>::Identity() - n * n.transpose();
    Mat<Dim> shape = -(proj * jet.hessian * proj) / g;
    shape = 0.5 * (shape + shape.transpose()).eval();
    std::vector<double> direct = symmetric_eigenvalues(shape);
    std::vector<double> expect = w.curvatures;
    expect.push_back(0.0);
    std::sort(expect.begin(), expect.end());
    double scale = 1.0;
    for (double k : direct)
        scale = std::max(scale, std::abs(k));
    for (std::size_t i = 0; i < expect.size(); ++i)
        if (std::abs(expect[i] - direct[i]) > 1e-8 * scale)
            throw GeometryError("adapted-frame and projected shape operator spectra disagree");
    return {fj, w};
}

template <int Dim>
struct FundamentalForms {
    TangentMat<Dim> h = TangentMat<Dim>::Zero();
    TangentMat<Dim> b = TangentMat<Dim>::Zero();
};

// In the adapted frame the tangential gradient vanishes, leaving
// h_ij = u_n^2 u_ij and b_ij = -h_ij / u_n^3.
template <int Dim>
FundamentalForms<Dim> fundamental_forms(const FrameJet<Dim>& fj)
{
    FundamentalForms<Dim> f;
    const double un = fj.un;
    f.h = un * un * fj.rotated_hessian.template topLeftCorner<Dim - 1, Dim - 1>();
    f.b = -f.h / (un * un * un);
    return f;
}

// a - eta0 e^{A u} I; the curvature list shifts by the same amount.
template <int Dim>
WeingartenTensor<Dim> tilde_weingarten(const WeingartenTensor<Dim>& w, double eta0, double A, double u)
{
    if (!(eta0 >= 0.0))
        throw ArgError("eta0 must be nonnegative");
    const double shift = eta0 * std::exp(A * u);
    WeingartenTensor<Dim> out = w;
    out.a -= shift * TangentMat<Dim>::Identity();
    for (double& k : out.curvatures)
        k -= shift;
    return out;
}

template <int Dim>
struct LevelSample {
    Vec<Dim> location = Vec<Dim>::Zero();
    double level = 0.0;
    Vec<Dim> normal = Vec<Dim>::Zero();
    WeingartenTensor<Dim> weingarten;
    TangentMat<Dim> h = TangentMat<Dim>::Zero();
    TangentMat<Dim> b = TangentMat<Dim>::Zero();
    double gradient_norm = 0.0;
};

template <int Dim>
LevelSample<Dim> annotate(const Jet<Dim>& jet, double level, double gradient_floor)
{
    auto [fj, w] = frame_weingarten(jet, gradient_floor);
    const auto forms = fundamental_forms(fj);
    LevelSample<Dim> s;
    s.location = jet.location;
    s.level = level;
    s.normal = jet.gradient / fj.un;
    s.weingarten = std::move(w);
    s.h = forms.h;
    s.b = forms.b;
    s.gradient_norm = fj.un;
    return s;
}

struct Polyline {
    std::vector<Vec<2>> vertices;
    bool closed = true;

    double perimeter() const
    {
        double p = 0.0;
        const std::size_t n = vertices.size();
        for (std::size_t i = 0; i + 1 < n; ++i)
            p += (vertices[i + 1] - vertices[i]).norm();
        if (closed && n > 1)
            p += (vertices.front() - vertices.back()).norm();
        return p;
    }
};

// Largest reflex turn of a closed polyline, max(0, -z_i) / h with z_i the
// cross product of consecutive unit edge vectors.
inline double convexity_defect(const Polyline& line, double h)
{
    if (!line.closed)
        throw ArgError("convexity defect needs a closed polyline");
    if (!(h > 0.0))
        throw ArgError("spacing must be positive");
    const std::size_t n = line.vertices.size();
    if (n < 3)
        return 0.0;
    double worst = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const Vec<2>& prev = line.vertices[(i + n - 1) % n];
        const Vec<2>& cur = line.vertices[i];
        const Vec<2>& next = line.vertices[(i + 1) % n];
        const Vec<2> e0 = (cur - prev).normalized();
        const Vec<2> e1 = (next - cur).normalized();
        const double z = e0[0] * e1[1] - e0[1] * e1[0];
        worst = std::max(worst, -z);
    }
    return worst / h;
}

struct SkipCounts {
    std::size_t corner = 0;
    std::size_t critical = 0;
    std::size_t stencil = 0;
};

// Level set of a field: closed loops in 2D ({u >= c} on the left), an
// edge-crossing point cloud in 3D, each point annotated with its geometry.
template <int Dim>
struct LevelCurve {
    double level = 0.0;
    double time = 0.0;
    double spacing = 0.0;
    std::vector<Polyline> loops;
    std::vector<Vec<Dim>> points;
    std::vector<LevelSample<Dim>> samples;
    SkipCounts skipped;
    std::size_t discarded_loops = 0;
};

template <int Dim>
double convexity_defect(const LevelCurve<Dim>& curve)
{
    if constexpr (Dim != 2) {
        throw ArgError("convexity defect is defined for 2D level curves");
    } else {
        double worst = 0.0;
        for (const Polyline& loop : curve.loops)
            worst = std::max(worst, convexity_defect(loop, curve.spacing));
        return worst;
    }
}

struct LevelOptions {
    double gradient_floor = 1e-8;
    double corner_exclusion = 3.0;  // in units of the largest spacing
    double merge_fraction = 0.1;    // vertices closer than this times h are merged
    std::size_t min_loop_vertices = 16;
    bool annotate = true;
};

namespace detail {

// Parameter in [0, 1] along the edge lo -> hi (unit step) where the field
// crosses c, honouring boundary crossings closer than a full step.
template <int Dim>
double edge_crossing(const ScalarField<Dim>& field, std::size_t lo, std::size_t hi, int axis, double c)
{
    const auto& mask = field.mask();
    const double vl = field.value(lo);
    const double vh = field.value(hi);
    const NodeKind kl = mask.kind(lo);
    const NodeKind kh = mask.kind(hi);
    if (kl == NodeKind::Interior && is_boundary(kh)) {
        const double arm = mask.lines(lo)[static_cast<std::size_t>(axis)].arm_fwd;
        return arm * (c - vl) / (vh - vl);
    }
    if (is_boundary(kl) && kh == NodeKind::Interior) {
        const double arm = mask.lines(hi)[static_cast<std::size_t>(axis)].arm_bwd;
        return 1.0 - arm * (c - vh) / (vl - vh);
    }
    return (c - vl) / (vh - vl);
}

template <int Dim>
void check_level_range(const ScalarField<Dim>& field, double c)
{
    double lo = std::numeric_limits<double>::infinity();
    double hi = -lo;
    const auto& mask = field.mask();
    for (std::size_t i = 0; i < field.values().size(); ++i) {
        if (mask.kind(i) == NodeKind::Exterior)
            continue;
        lo = std::min(lo, field.value(i));
        hi = std::max(hi, field.value(i));
    }
    if (!(c > lo && c < hi))
        throw LevelError("level " + std::to_string(c) + " outside the field range [" + std::to_string(lo) + ", "
                         + std::to_string(hi) + "]");
}

template <int Dim>
void annotate_points(const ScalarField<Dim>& field, const std::vector<Vec<Dim>>& pts, const LevelOptions& opt,
                     LevelCurve<Dim>& curve)
{
    const auto corners = field.mask().ring().corners();
    const double exclusion = opt.corner_exclusion * field.grid().max_spacing();
    for (const Vec<Dim>& p : pts) {
        bool near_corner = false;
        for (const auto& q : corners)
            near_corner = near_corner || (p - q).norm() < exclusion;
        if (near_corner) {
            ++curve.skipped.corner;
            continue;
        }
        try {
            const Jet<Dim> jet = jet_at_point(field, p);
            curve.samples.push_back(annotate(jet, curve.level, opt.gradient_floor));
        } catch (const CriticalPointError&) {
            ++curve.skipped.critical;
        } catch (const StencilError&) {
            ++curve.skipped.stencil;
        }
    }
}

} // namespace detail

inline LevelCurve<2> extract_level_set(const ScalarField<2>& field, double c, const LevelOptions& opt = {})
{
    detail::check_level_range(field, c);
    const auto& grid = field.grid();
    const auto& mask = field.mask();
    LevelCurve<2> curve;
    curve.level = c;
    curve.time = field.time();
    curve.spacing = grid.min_spacing();

    std::unordered_map<std::size_t, Vec<2>> point_at;
    auto crossing_point = [&](std::size_t key) -> const Vec<2>& {
        auto it = point_at.find(key);
        if (it != point_at.end())
            return it->second;
        const std::size_t lo = key / 2;
        const int axis = static_cast<int>(key % 2);
        const std::size_t hi = lo + grid.stride(axis);
        const double t = detail::edge_crossing(field, lo, hi, axis, c);
        Vec<2> p = grid.position(lo);
        p[axis] += std::clamp(t, 0.0, 1.0) * grid.spacing[axis];
        return point_at.emplace(key, p).first->second;
    };

    // Directed segments keyed by their start edge.
    std::unordered_map<std::size_t, std::size_t> next_edge;
    std::vector<std::size_t> starts;
    const int nx = grid.nodes(0);
    const int ny = grid.nodes(1);
    for (int i = 0; i + 1 < nx; ++i) {
        for (int j = 0; j + 1 < ny; ++j) {
            const std::array<std::size_t, 4> corner = {grid.index({i, j}), grid.index({i + 1, j}),
                                                       grid.index({i + 1, j + 1}), grid.index({i, j + 1})};
            bool any_interior = false;
            bool any_exterior = false;
            for (std::size_t k : corner) {
                any_interior = any_interior || mask.kind(k) == NodeKind::Interior;
                any_exterior = any_exterior || mask.kind(k) == NodeKind::Exterior;
            }
            if (!any_interior || any_exterior)
                continue;
            // Cell boundary walked counterclockwise: bottom, right, top, left.
            const std::array<std::size_t, 4> keys = {2 * corner[0], 2 * corner[1] + 1, 2 * corner[3],
                                                     2 * corner[0] + 1};
            std::array<double, 4> v{};
            for (int k = 0; k < 4; ++k)
                v[static_cast<std::size_t>(k)] = field.value(corner[static_cast<std::size_t>(k)]);
            std::array<int, 4> type{};  // +1 entering {u >= c}, -1 leaving, 0 none
            int count = 0;
            for (std::size_t k = 0; k < 4; ++k) {
                const bool a = v[k] >= c;
                const bool b = v[(k + 1) % 4] >= c;
                type[k] = a == b ? 0 : (b ? 1 : -1);
                count += type[k] != 0 ? 1 : 0;
            }
            if (count == 0)
                continue;
            const bool center_above = 0.25 * (v[0] + v[1] + v[2] + v[3]) >= c;
            for (std::size_t k = 0; k < 4; ++k) {
                if (type[k] != -1)
                    continue;
                std::size_t m = k;
                do {
                    m = center_above ? (m + 1) % 4 : (m + 3) % 4;
                } while (type[m] != 1);
                next_edge[keys[k]] = keys[m];
                starts.push_back(keys[k]);
            }
        }
    }

    const double merge = opt.merge_fraction * grid.min_spacing();
    std::unordered_map<std::size_t, char> used;
    for (std::size_t start : starts) {
        if (used.count(start))
            continue;
        Polyline loop;
        std::size_t key = start;
        bool closed = false;
        while (true) {
            used[key] = 1;
            const Vec<2>& p = crossing_point(key);
            if (loop.vertices.empty() || (p - loop.vertices.back()).norm() >= merge)
                loop.vertices.push_back(p);
            auto it = next_edge.find(key);
            if (it == next_edge.end())
                break;
            key = it->second;
            if (key == start) {
                closed = true;
                break;
            }
            if (used.count(key))
                break;
        }
        while (loop.vertices.size() > 1 && (loop.vertices.front() - loop.vertices.back()).norm() < merge)
            loop.vertices.pop_back();
        if (!closed || loop.vertices.size() < opt.min_loop_vertices) {
            ++curve.discarded_loops;
            continue;
        }
        curve.loops.push_back(std::move(loop));
    }
    if (curve.loops.empty())
        throw LevelError("no closed contour at level " + std::to_string(c));
    std::stable_sort(curve.loops.begin(), curve.loops.end(),
                     [](const Polyline& a, const Polyline& b) { return a.vertices.size() > b.vertices.size(); });
    for (const Polyline& loop : curve.loops)
        curve.points.insert(curve.points.end(), loop.vertices.begin(), loop.vertices.end());
    if (opt.annotate)
        detail::annotate_points(field, curve.points, opt, curve);
    return curve;
}

inline LevelCurve<3> extract_level_set(const ScalarField<3>& field, double c, const LevelOptions& opt = {})
{
    detail::check_level_range(field, c);
    const auto& grid = field.grid();
    const auto& mask = field.mask();
    LevelCurve<3> curve;
    curve.level = c;
    curve.time = field.time();
    curve.spacing = grid.min_spacing();
    for (std::size_t lo = 0; lo < grid.size(); ++lo) {
        const NodeKind kl = mask.kind(lo);
        if (kl == NodeKind::Exterior)
            continue;
        const auto m = grid.multi(lo);
        for (int axis = 0; axis < 3; ++axis) {
            if (m[static_cast<std::size_t>(axis)] + 1 >= grid.nodes(axis))
                continue;
            const std::size_t hi = lo + grid.stride(axis);
            const NodeKind kh = mask.kind(hi);
            if (kh == NodeKind::Exterior || (kl != NodeKind::Interior && kh != NodeKind::Interior))
                continue;
            if ((field.value(lo) >= c) == (field.value(hi) >= c))
                continue;
            const double t = detail::edge_crossing(field, lo, hi, axis, c);
            Vec<3> p = grid.position(lo);
            p[axis] += std::clamp(t, 0.0, 1.0) * grid.spacing[axis];
            curve.points.push_back(p);
        }
    }
    if (curve.points.empty())
        throw LevelError("no level-surface samples at level " + std::to_string(c));
    if (opt.annotate)
        detail::annotate_points(field, curve.points, opt, curve);
    return curve;
}

// CSV rows: c, coordinates, normal, principal curvatures, gradient norm.
template <int Dim>
void write_level_csv(std::ostream& os, const LevelCurve<Dim>& curve, bool header = true)
{
    static const char* axes = "xyz";
    if (header) {
        os << "c";
        for (int a = 0; a < Dim; ++a)
            os << ',' << axes[a];
        for (int a = 0; a < Dim; ++a)
            os << ",n" << axes[a];
        for (int k = 1; k < Dim; ++k)
            os << ",kappa_" << k;
        os << ",grad_norm\n";
    }
    char buf[40];
    auto put = [&](double v) {
        std::snprintf(buf, sizeof buf, "%.10g", v);
        os << buf;
    };
    for (const auto& s : curve.samples) {
        put(s.level);
        for (int a = 0; a < Dim; ++a) {
            os << ',';
            put(s.location[a]);
        }
        for (int a = 0; a < Dim; ++a) {
            os << ',';
            put(s.normal[a]);
        }
        for (double k : s.weingarten.curvatures) {
            os << ',';
            put(k);
        }
        os << ',';
        put(s.gradient_norm);
        os << '\n';
    }
}

} // namespace levelcurv
