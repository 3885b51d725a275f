#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <memory>
#include <string>
#include <utility>
#include <vector>

#include "levelcurv/domain.hpp"
#include "levelcurv/errors.hpp"
#include "levelcurv/linalg.hpp"

namespace levelcurv {

enum class NodeKind : std::uint8_t { Interior, OuterBoundary, InnerBoundary, Exterior };

inline const char* to_string(NodeKind kind)
{
    switch (kind) {
    case NodeKind::Interior: return "Interior";
    case NodeKind::OuterBoundary: return "OuterBoundary";
    case NodeKind::InnerBoundary: return "InnerBoundary";
    case NodeKind::Exterior: return "Exterior";
    }
    return "?";
}

inline bool is_boundary(NodeKind kind)
{
    return kind == NodeKind::OuterBoundary || kind == NodeKind::InnerBoundary;
}

// Uniform rectangular grid. `cells` counts cells per axis, so each axis has
// cells + 1 nodes. Node storage is row-major with the last axis fastest.
template <int Dim>
struct Grid {
    using Index = std::array<int, Dim>;

    Index cells{};
    Vec<Dim> spacing = Vec<Dim>::Ones();
    Vec<Dim> origin = Vec<Dim>::Zero();

    int nodes(int axis) const { return cells[static_cast<std::size_t>(axis)] + 1; }

    std::size_t size() const
    {
        std::size_t n = 1;
        for (int a = 0; a < Dim; ++a)
            n *= static_cast<std::size_t>(nodes(a));
        return n;
    }

    std::size_t stride(int axis) const
    {
        std::size_t s = 1;
        for (int a = Dim - 1; a > axis; --a)
            s *= static_cast<std::size_t>(nodes(a));
        return s;
    }

    bool valid(const Index& m) const
    {
        for (int a = 0; a < Dim; ++a)
            if (m[static_cast<std::size_t>(a)] < 0 || m[static_cast<std::size_t>(a)] >= nodes(a))
                return false;
        return true;
    }

    std::size_t index(const Index& m) const
    {
        std::size_t idx = 0;
        for (int a = 0; a < Dim; ++a)
            idx = idx * static_cast<std::size_t>(nodes(a)) + static_cast<std::size_t>(m[static_cast<std::size_t>(a)]);
        return idx;
    }

    Index multi(std::size_t idx) const
    {
        Index m{};
        for (int a = Dim - 1; a >= 0; --a) {
            const auto n = static_cast<std::size_t>(nodes(a));
            m[static_cast<std::size_t>(a)] = static_cast<int>(idx % n);
            idx /= n;
        }
        return m;
    }

    Vec<Dim> position(const Index& m) const
    {
        Vec<Dim> x;
        for (int a = 0; a < Dim; ++a)
            x[a] = origin[a] + spacing[a] * m[static_cast<std::size_t>(a)];
        return x;
    }

    Vec<Dim> position(std::size_t idx) const { return position(multi(idx)); }

    Vec<Dim> upper() const
    {
        Vec<Dim> hi;
        for (int a = 0; a < Dim; ++a)
            hi[a] = origin[a] + spacing[a] * cells[static_cast<std::size_t>(a)];
        return hi;
    }

    bool in_box(const Vec<Dim>& x) const
    {
        const Vec<Dim> hi = upper();
        for (int a = 0; a < Dim; ++a)
            if (!(x[a] >= origin[a] && x[a] <= hi[a]))
                return false;
        return true;
    }

    double min_spacing() const { return spacing.minCoeff(); }
    double max_spacing() const { return spacing.maxCoeff(); }

    bool operator==(const Grid& other) const
    {
        return cells == other.cells && spacing == other.spacing && origin == other.origin;
    }
};

// Stencil lines through a node: the Dim coordinate axes, then for each axis
// pair (i < j) the diagonals e_i + e_j and e_i - e_j.
template <int Dim>
inline constexpr int kLineCount = Dim + Dim * (Dim - 1);

template <int Dim>
constexpr std::array<std::array<int, Dim>, kLineCount<Dim>> line_offsets()
{
    std::array<std::array<int, Dim>, kLineCount<Dim>> out{};
    int k = 0;
    for (int a = 0; a < Dim; ++a) {
        out[static_cast<std::size_t>(k)][static_cast<std::size_t>(a)] = 1;
        ++k;
    }
    for (int i = 0; i < Dim; ++i) {
        for (int j = i + 1; j < Dim; ++j) {
            out[static_cast<std::size_t>(k)][static_cast<std::size_t>(i)] = 1;
            out[static_cast<std::size_t>(k)][static_cast<std::size_t>(j)] = 1;
            ++k;
            out[static_cast<std::size_t>(k)][static_cast<std::size_t>(i)] = 1;
            out[static_cast<std::size_t>(k)][static_cast<std::size_t>(j)] = -1;
            ++k;
        }
    }
    return out;
}

// Index of the diagonal line for axis pair (i < j); sign +1 for e_i + e_j.
template <int Dim>
constexpr int diagonal_line(int i, int j, int sign)
{
    int k = Dim;
    for (int a = 0; a < Dim; ++a)
        for (int b = a + 1; b < Dim; ++b) {
            if (a == i && b == j)
                return sign > 0 ? k : k + 1;
            k += 2;
        }
    return -1;
}

// One stencil line at an Interior node. Arms are the fractions of the grid
// step at which the line meets the ring boundary (1 when the neighbor node is
// itself inside the ring).
struct LineArms {
    std::size_t fwd = 0;
    std::size_t bwd = 0;
    double arm_fwd = 1.0;
    double arm_bwd = 1.0;
};

template <int Dim>
struct BoundaryInfo {
    Vec<Dim> foot = Vec<Dim>::Zero();
    Vec<Dim> inward_normal = Vec<Dim>::Zero();
};

template <int Dim>
class Mask;

template <int Dim>
using MaskPtr = std::shared_ptr<const Mask<Dim>>;

// Node classification of a grid against a convex ring. Immutable once built.
template <int Dim>
class Mask {
public:
    using Lines = std::array<LineArms, kLineCount<Dim>>;

    const Grid<Dim>& grid() const { return grid_; }
    const ConvexRing<Dim>& ring() const { return ring_; }
    NodeKind kind(std::size_t idx) const { return kinds_[idx]; }
    const std::vector<NodeKind>& kinds() const { return kinds_; }

    const BoundaryInfo<Dim>& boundary(std::size_t idx) const
    {
        const int slot = boundary_slot_[idx];
        if (slot < 0)
            throw ArgError("node is not a boundary node");
        return boundary_[static_cast<std::size_t>(slot)];
    }

    const Lines& lines(std::size_t idx) const
    {
        const int slot = interior_slot_[idx];
        if (slot < 0)
            throw StencilError("node " + std::to_string(idx) + " is not Interior");
        return lines_[static_cast<std::size_t>(slot)];
    }

    const std::vector<std::size_t>& interior_nodes() const { return interior_; }

    std::size_t count(NodeKind k) const
    {
        std::size_t n = 0;
        for (NodeKind kind : kinds_)
            n += kind == k ? 1 : 0;
        return n;
    }

    // Continuous-space classification against the analytic bodies.
    NodeKind classify(const Vec<Dim>& x) const
    {
        if (!grid_.in_box(x))
            throw OutOfBounds("point outside the grid bounding box");
        const double tol = 1e-12 * std::max(1.0, (grid_.upper() - grid_.origin).maxCoeff());
        const double lo = ring_.outer().level(x);
        const double li = ring_.inner().level(x);
        if (std::abs(lo) <= tol)
            return NodeKind::OuterBoundary;
        if (std::abs(li) <= tol)
            return NodeKind::InnerBoundary;
        if (lo < 0.0 && li > 0.0)
            return NodeKind::Interior;
        return NodeKind::Exterior;
    }

    static MaskPtr<Dim> build(const ConvexRing<Dim>& ring, int resolution);

private:
    Mask(Grid<Dim> grid, ConvexRing<Dim> ring) : grid_(std::move(grid)), ring_(std::move(ring)) {}

    Grid<Dim> grid_;
    ConvexRing<Dim> ring_;
    std::vector<NodeKind> kinds_;
    std::vector<int> boundary_slot_;
    std::vector<BoundaryInfo<Dim>> boundary_;
    std::vector<int> interior_slot_;
    std::vector<Lines> lines_;
    std::vector<std::size_t> interior_;
};

template <int Dim>
MaskPtr<Dim> Mask<Dim>::build(const ConvexRing<Dim>& ring, int resolution)
{
    if (resolution < 8)
        throw ArgError("resolution must be at least 8 cells per axis");
    const auto [lo, hi] = ring.outer().bounding_box();
    Grid<Dim> grid;
    for (int a = 0; a < Dim; ++a) {
        grid.spacing[a] = (hi[a] - lo[a]) / resolution;
        grid.origin[a] = lo[a] - grid.spacing[a];
        grid.cells[static_cast<std::size_t>(a)] = resolution + 2;
    }
    if (ring.margin() < 2.0 * grid.max_spacing())
        throw DomainError("inner body is closer than 2h to the outer boundary (margin "
                          + std::to_string(ring.margin()) + ")");

    auto mask = std::shared_ptr<Mask>(new Mask(grid, ring));
    const std::size_t n = grid.size();
    std::vector<char> inside(n, 0);
    for (std::size_t i = 0; i < n; ++i)
        inside[i] = ring.contains(grid.position(i)) ? 1 : 0;

    mask->kinds_.assign(n, NodeKind::Exterior);
    mask->interior_slot_.assign(n, -1);
    mask->boundary_slot_.assign(n, -1);

    // Every node of the 3^Dim block around an inside node is inside or becomes
    // a boundary node, so Interior stencils are always complete.
    std::vector<std::array<int, Dim>> block;
    {
        std::array<int, Dim> off{};
        std::function<void(int)> rec = [&](int a) {
            if (a == Dim) {
                block.push_back(off);
                return;
            }
            for (int d = -1; d <= 1; ++d) {
                off[static_cast<std::size_t>(a)] = d;
                rec(a + 1);
            }
        };
        rec(0);
    }

    for (std::size_t i = 0; i < n; ++i) {
        if (!inside[i])
            continue;
        mask->kinds_[i] = NodeKind::Interior;
        const auto m = grid.multi(i);
        for (const auto& off : block) {
            auto q = m;
            for (int a = 0; a < Dim; ++a)
                q[static_cast<std::size_t>(a)] += off[static_cast<std::size_t>(a)];
            if (!grid.valid(q))
                throw DomainError("interior node touches the grid edge");
            const std::size_t j = grid.index(q);
            if (inside[j] || mask->kinds_[j] != NodeKind::Exterior)
                continue;
            const Vec<Dim> x = grid.position(j);
            mask->kinds_[j] = ring.outer().level(x) >= 0.0 ? NodeKind::OuterBoundary
                                                           : NodeKind::InnerBoundary;
        }
    }

    for (std::size_t i = 0; i < n; ++i) {
        const NodeKind k = mask->kinds_[i];
        if (!is_boundary(k))
            continue;
        const Vec<Dim> x = grid.position(i);
        BoundaryInfo<Dim> info;
        if (k == NodeKind::OuterBoundary) {
            const auto [foot, normal] = ring.outer().foot_point(x);
            info.foot = foot;
            info.inward_normal = -normal;
        } else {
            const auto [foot, normal] = ring.inner().foot_point(x);
            info.foot = foot;
            info.inward_normal = normal;
        }
        mask->boundary_slot_[i] = static_cast<int>(mask->boundary_.size());
        mask->boundary_.push_back(info);
    }
    if (mask->count(NodeKind::OuterBoundary) == 0 || mask->count(NodeKind::InnerBoundary) == 0)
        throw DomainError("grid too coarse: a boundary component has no nodes");

    constexpr auto offsets = line_offsets<Dim>();
    auto crossing = [&](const Vec<Dim>& x, const Vec<Dim>& w) {
        double t = 1.0;
        if (auto c = ring.outer().chord(x, w))
            t = std::min(t, c->second);
        if (auto c = ring.inner().chord(x, w); c && c->first > 0.0)
            t = std::min(t, c->first);
        return std::clamp(t, 1e-6, 1.0);
    };
    for (std::size_t i = 0; i < n; ++i) {
        if (!inside[i])
            continue;
        const auto m = grid.multi(i);
        const Vec<Dim> x = grid.position(m);
        Lines lines{};
        for (std::size_t l = 0; l < offsets.size(); ++l) {
            auto f = m;
            auto b = m;
            Vec<Dim> w;
            for (int a = 0; a < Dim; ++a) {
                f[static_cast<std::size_t>(a)] += offsets[l][static_cast<std::size_t>(a)];
                b[static_cast<std::size_t>(a)] -= offsets[l][static_cast<std::size_t>(a)];
                w[a] = offsets[l][static_cast<std::size_t>(a)] * grid.spacing[a];
            }
            LineArms arms;
            arms.fwd = grid.index(f);
            arms.bwd = grid.index(b);
            arms.arm_fwd = inside[arms.fwd] ? 1.0 : crossing(x, w);
            arms.arm_bwd = inside[arms.bwd] ? 1.0 : crossing(x, Vec<Dim>(-w));
            lines[l] = arms;
        }
        mask->interior_slot_[i] = static_cast<int>(mask->lines_.size());
        mask->lines_.push_back(lines);
        mask->interior_.push_back(i);
    }
    return mask;
}

// Builds the grid (bounding box of the outer body padded by one spacing) and
// classifies its nodes.
template <int Dim>
MaskPtr<Dim> build_grid(const ConvexRing<Dim>& ring, int resolution)
{
    return Mask<Dim>::build(ring, resolution);
}

template <int Dim>
NodeKind classify_point(const Mask<Dim>& mask, const Vec<Dim>& x)
{
    return mask.classify(x);
}

// A time-stamped sampling of u over a masked grid. Exterior nodes hold NaN;
// boundary nodes hold the Dirichlet value of their boundary component.
template <int Dim>
class ScalarField {
public:
    ScalarField(MaskPtr<Dim> mask, std::vector<double> values, double time)
        : mask_(std::move(mask)), values_(std::move(values)), time_(time)
    {
        if (!mask_)
            throw ArgError("field without mask");
        if (values_.size() != mask_->grid().size())
            throw ArgError("field value count does not match the grid");
        for (std::size_t i = 0; i < values_.size(); ++i) {
            const bool exterior = mask_->kind(i) == NodeKind::Exterior;
            if (exterior && !std::isnan(values_[i]))
                throw ArgError("Exterior node without NaN sentinel");
            if (!exterior && !std::isfinite(values_[i]))
                throw ArgError("non-finite value at node " + std::to_string(i));
        }
    }

    // Samples f at Interior nodes and at the foot points of boundary nodes.
    static ScalarField sample(MaskPtr<Dim> mask, const std::function<double(const Vec<Dim>&)>& f,
                              double time = 0.0)
    {
        const auto& grid = mask->grid();
        std::vector<double> v(grid.size(), std::numeric_limits<double>::quiet_NaN());
        for (std::size_t i = 0; i < v.size(); ++i) {
            const NodeKind k = mask->kind(i);
            if (k == NodeKind::Interior)
                v[i] = f(grid.position(i));
            else if (is_boundary(k))
                v[i] = f(mask->boundary(i).foot);
        }
        return ScalarField(std::move(mask), std::move(v), time);
    }

    const MaskPtr<Dim>& mask_ptr() const { return mask_; }
    const Mask<Dim>& mask() const { return *mask_; }
    const Grid<Dim>& grid() const { return mask_->grid(); }
    const std::vector<double>& values() const { return values_; }
    double value(std::size_t idx) const { return values_[idx]; }
    double time() const { return time_; }

    std::pair<double, double> interior_range() const
    {
        double lo = std::numeric_limits<double>::infinity();
        double hi = -lo;
        for (std::size_t i : mask_->interior_nodes()) {
            lo = std::min(lo, values_[i]);
            hi = std::max(hi, values_[i]);
        }
        return {lo, hi};
    }

private:
    MaskPtr<Dim> mask_;
    std::vector<double> values_;
    double time_ = 0.0;
};

// Pointwise second-order data (u, grad u, hess u) at a location and time.
template <int Dim>
struct Jet {
    double value = 0.0;
    Vec<Dim> gradient = Vec<Dim>::Zero();
    Mat<Dim> hessian = Mat<Dim>::Zero();
    Vec<Dim> location = Vec<Dim>::Zero();
    double time = 0.0;
};

} // namespace levelcurv
