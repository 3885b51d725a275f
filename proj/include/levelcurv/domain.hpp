#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <optional>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "levelcurv/errors.hpp"
#include "levelcurv/linalg.hpp"

namespace levelcurv {

enum class BodyKind { Ball, Ellipsoid, Polygon };

inline const char* to_string(BodyKind kind)
{
    switch (kind) {
    case BodyKind::Ball: return "ball";
    case BodyKind::Ellipsoid: return "ellipsoid";
    case BodyKind::Polygon: return "polygon";
    }
    return "?";
}

// A convex body: a ball, an axis-aligned ellipse/ellipsoid, or (2D only) a
// convex polygon with counterclockwise vertices.
template <int Dim>
class ConvexBody {
    static_assert(Dim == 2 || Dim == 3, "only 2D and 3D bodies are supported");

public:
    using Point = Vec<Dim>;

    static ConvexBody ball(const Point& center, double radius)
    {
        if (!(radius > 0.0) || !std::isfinite(radius))
            throw DomainError("ball radius must be positive");
        ConvexBody b;
        b.kind_ = BodyKind::Ball;
        b.center_ = center;
        b.axes_ = Point::Constant(radius);
        return b;
    }

    static ConvexBody ellipsoid(const Point& center, const Point& semi_axes)
    {
        if (!(semi_axes.minCoeff() > 0.0) || !semi_axes.allFinite())
            throw DomainError("ellipsoid semi-axes must be positive");
        ConvexBody b;
        b.kind_ = BodyKind::Ellipsoid;
        b.center_ = center;
        b.axes_ = semi_axes;
        return b;
    }

    static ConvexBody polygon(std::vector<Point> vertices)
        requires(Dim == 2)
    {
        const std::size_t m = vertices.size();
        if (m < 3)
            throw DomainError("polygon needs at least 3 vertices");
        double perimeter = 0.0;
        double area2 = 0.0;
        for (std::size_t i = 0; i < m; ++i) {
            const Point& a = vertices[i];
            const Point& b = vertices[(i + 1) % m];
            const Point& c = vertices[(i + 2) % m];
            const Point e1 = b - a;
            const Point e2 = c - b;
            if (e1.x() * e2.y() - e1.y() * e2.x() < 0.0)
                throw DomainError("polygon is not convex with counterclockwise vertices");
            perimeter += e1.norm();
            area2 += a.x() * b.y() - b.x() * a.y();
        }
        if (!(perimeter > 0.0) || !(area2 > 0.0))
            throw DomainError("polygon is degenerate");
        ConvexBody b;
        b.kind_ = BodyKind::Polygon;
        b.vertices_ = std::move(vertices);
        b.center_ = Point::Zero();
        for (const Point& v : b.vertices_)
            b.center_ += v;
        b.center_ /= static_cast<double>(m);
        for (std::size_t i = 0; i < m; ++i) {
            const Point e = b.vertices_[(i + 1) % m] - b.vertices_[i];
            const double len = e.norm();
            Point n;
            n << e.y() / len, -e.x() / len;
            b.normals_.push_back(n);
        }
        return b;
    }

    BodyKind kind() const { return kind_; }
    const Point& center() const { return center_; }
    const Point& semi_axes() const { return axes_; }
    const std::vector<Point>& vertices() const { return vertices_; }

    // Negative inside, zero on the boundary, positive outside. Exact signed
    // distance for balls and for polygons inside; a monotone surrogate
    // otherwise.
    double level(const Point& x) const
    {
        switch (kind_) {
        case BodyKind::Ball:
            return (x - center_).norm() - axes_[0];
        case BodyKind::Ellipsoid:
            return ((x - center_).cwiseQuotient(axes_)).norm() - 1.0;
        case BodyKind::Polygon: {
            double worst = -std::numeric_limits<double>::infinity();
            for (std::size_t i = 0; i < vertices_.size(); ++i)
                worst = std::max(worst, normals_[i].dot(x - vertices_[i]));
            return worst;
        }
        }
        return 0.0;
    }

    bool contains(const Point& x) const { return level(x) < 0.0; }

    // Parameter interval {t : x + t d in closed body}, or nullopt if the
    // line misses the body.
    std::optional<std::pair<double, double>> chord(const Point& x, const Point& d) const
    {
        switch (kind_) {
        case BodyKind::Ball:
        case BodyKind::Ellipsoid: {
            const Point p = (x - center_).cwiseQuotient(axes_);
            const Point q = d.cwiseQuotient(axes_);
            const double qa = q.squaredNorm();
            if (qa == 0.0)
                return std::nullopt;
            const double qb = p.dot(q);
            const double qc = p.squaredNorm() - 1.0;
            const double disc = qb * qb - qa * qc;
            if (disc < 0.0)
                return std::nullopt;
            const double root = std::sqrt(disc);
            // Stable pair of roots.
            const double tmp = -(qb + (qb >= 0.0 ? root : -root));
            double t1 = tmp / qa;
            double t2 = tmp != 0.0 ? qc / tmp : -t1;
            if (t1 > t2)
                std::swap(t1, t2);
            return std::make_pair(t1, t2);
        }
        case BodyKind::Polygon: {
            double lo = -std::numeric_limits<double>::infinity();
            double hi = std::numeric_limits<double>::infinity();
            for (std::size_t i = 0; i < vertices_.size(); ++i) {
                const double num = normals_[i].dot(x - vertices_[i]);
                const double den = normals_[i].dot(d);
                if (den == 0.0) {
                    if (num > 0.0)
                        return std::nullopt;
                    continue;
                }
                const double t = -num / den;
                if (den > 0.0)
                    hi = std::min(hi, t);
                else
                    lo = std::max(lo, t);
            }
            if (lo > hi)
                return std::nullopt;
            return std::make_pair(lo, hi);
        }
        }
        return std::nullopt;
    }

    // Closest point of the boundary to x, and the outward unit normal there.
    std::pair<Point, Point> foot_point(const Point& x) const
    {
        switch (kind_) {
        case BodyKind::Ball: {
            Point r = x - center_;
            const double len = r.norm();
            Point n = len > 0.0 ? Point(r / len) : Point(Point::UnitX());
            return {center_ + axes_[0] * n, n};
        }
        case BodyKind::Ellipsoid:
            return ellipsoid_foot(x);
        case BodyKind::Polygon: {
            double best = std::numeric_limits<double>::infinity();
            Point foot = vertices_.front();
            Point normal = normals_.front();
            for (std::size_t i = 0; i < vertices_.size(); ++i) {
                const Point& a = vertices_[i];
                const Point e = vertices_[(i + 1) % vertices_.size()] - a;
                const double t = std::clamp((x - a).dot(e) / e.squaredNorm(), 0.0, 1.0);
                const Point p = a + t * e;
                const double dist = (x - p).norm();
                if (dist < best) {
                    best = dist;
                    foot = p;
                    normal = normals_[i];
                }
            }
            return {foot, normal};
        }
        }
        return {x, Point::UnitX()};
    }

    // Signed Euclidean distance to the boundary (negative inside).
    double signed_distance(const Point& x) const
    {
        const double dist = (x - foot_point(x).first).norm();
        return level(x) < 0.0 ? -dist : dist;
    }

    // Support function h(nu) = max over the body of <y, nu>.
    double support(const Point& nu) const
    {
        switch (kind_) {
        case BodyKind::Ball:
            return center_.dot(nu) + axes_[0] * nu.norm();
        case BodyKind::Ellipsoid:
            return center_.dot(nu) + axes_.cwiseProduct(nu).norm();
        case BodyKind::Polygon: {
            double h = -std::numeric_limits<double>::infinity();
            for (const Point& v : vertices_)
                h = std::max(h, v.dot(nu));
            return h;
        }
        }
        return 0.0;
    }

    // Outward unit edge normals (polygons only; empty otherwise).
    const std::vector<Point>& edge_normals() const { return normals_; }

    std::pair<Point, Point> bounding_box() const
    {
        if (kind_ == BodyKind::Polygon) {
            Point lo = vertices_.front();
            Point hi = vertices_.front();
            for (const Point& v : vertices_) {
                lo = lo.cwiseMin(v);
                hi = hi.cwiseMax(v);
            }
            return {lo, hi};
        }
        return {center_ - axes_, center_ + axes_};
    }

    // Points on the boundary, roughly evenly spread. Used for containment
    // margins.
    std::vector<Point> boundary_samples(int count) const
    {
        std::vector<Point> out;
        if (kind_ == BodyKind::Polygon) {
            double perimeter = 0.0;
            for (std::size_t i = 0; i < vertices_.size(); ++i)
                perimeter += (vertices_[(i + 1) % vertices_.size()] - vertices_[i]).norm();
            for (std::size_t i = 0; i < vertices_.size(); ++i) {
                const Point& a = vertices_[i];
                const Point e = vertices_[(i + 1) % vertices_.size()] - a;
                const int k = std::max(1, static_cast<int>(count * e.norm() / perimeter));
                for (int j = 0; j < k; ++j)
                    out.push_back(a + (static_cast<double>(j) / k) * e);
            }
            return out;
        }
        for (const Point& u : unit_directions(count))
            out.push_back(center_ + axes_.cwiseProduct(u));
        return out;
    }

    // Evenly spread unit vectors: angles in 2D, a Fibonacci lattice in 3D.
    static std::vector<Point> unit_directions(int count)
    {
        std::vector<Point> out;
        out.reserve(static_cast<std::size_t>(count));
        if constexpr (Dim == 2) {
            for (int i = 0; i < count; ++i) {
                const double phi = 2.0 * std::numbers::pi * i / count;
                out.push_back(Point(std::cos(phi), std::sin(phi)));
            }
        } else {
            const double golden = std::numbers::pi * (3.0 - std::sqrt(5.0));
            for (int i = 0; i < count; ++i) {
                const double z = 1.0 - (2.0 * i + 1.0) / count;
                const double r = std::sqrt(std::max(0.0, 1.0 - z * z));
                const double phi = golden * i;
                out.push_back(Point(r * std::cos(phi), r * std::sin(phi), z));
            }
        }
        return out;
    }

    std::string describe() const
    {
        std::ostringstream os;
        os.precision(17);
        os << to_string(kind_);
        if (kind_ == BodyKind::Polygon) {
            for (const Point& v : vertices_)
                os << ' ' << v.x() << ' ' << v.y();
            return os.str();
        }
        for (int i = 0; i < Dim; ++i)
            os << ' ' << center_[i];
        if (kind_ == BodyKind::Ball) {
            os << ' ' << axes_[0];
        } else {
            for (int i = 0; i < Dim; ++i)
                os << ' ' << axes_[i];
        }
        return os.str();
    }

private:
    ConvexBody() = default;

    Point ellipsoid_point(const Point& u) const { return center_ + axes_.cwiseProduct(u); }

    // Closest boundary point by dense parametric sampling followed by a
    // shrinking pattern search on the parameter(s).
    std::pair<Point, Point> ellipsoid_foot(const Point& x) const
    {
        auto dist2 = [&](const Point& u) { return (ellipsoid_point(u) - x).squaredNorm(); };
        Point best_u = Point::UnitX();
        double best = std::numeric_limits<double>::infinity();
        if constexpr (Dim == 2) {
            double best_phi = 0.0;
            const int samples = 720;
            for (int i = 0; i < samples; ++i) {
                const double phi = 2.0 * std::numbers::pi * i / samples;
                const double d = dist2(Point(std::cos(phi), std::sin(phi)));
                if (d < best) {
                    best = d;
                    best_phi = phi;
                }
            }
            double step = 2.0 * std::numbers::pi / samples;
            while (step > 1e-15) {
                bool moved = false;
                for (double cand : {best_phi - step, best_phi + step}) {
                    const double d = dist2(Point(std::cos(cand), std::sin(cand)));
                    if (d < best) {
                        best = d;
                        best_phi = cand;
                        moved = true;
                    }
                }
                if (!moved)
                    step *= 0.5;
            }
            best_u = Point(std::cos(best_phi), std::sin(best_phi));
        } else {
            auto from_angles = [](double th, double ph) {
                return Point(std::sin(th) * std::cos(ph), std::sin(th) * std::sin(ph), std::cos(th));
            };
            double bt = 0.0, bp = 0.0;
            const int nt = 45, np = 90;
            for (int i = 0; i <= nt; ++i) {
                for (int j = 0; j < np; ++j) {
                    const double th = std::numbers::pi * i / nt;
                    const double ph = 2.0 * std::numbers::pi * j / np;
                    const double d = dist2(from_angles(th, ph));
                    if (d < best) {
                        best = d;
                        bt = th;
                        bp = ph;
                    }
                }
            }
            double step = std::numbers::pi / nt;
            while (step > 1e-15) {
                bool moved = false;
                const double cand[4][2] = {{bt - step, bp}, {bt + step, bp}, {bt, bp - step}, {bt, bp + step}};
                for (const auto& c : cand) {
                    const double d = dist2(from_angles(c[0], c[1]));
                    if (d < best) {
                        best = d;
                        bt = c[0];
                        bp = c[1];
                        moved = true;
                    }
                }
                if (!moved)
                    step *= 0.5;
            }
            best_u = from_angles(bt, bp);
        }
        const Point foot = ellipsoid_point(best_u);
        // Gradient of sum((y-c)_i^2 / a_i^2) at the foot point.
        Point n = (foot - center_).cwiseQuotient(axes_.cwiseProduct(axes_));
        n.normalize();
        return {foot, n};
    }

    BodyKind kind_ = BodyKind::Ball;
    Point center_ = Point::Zero();
    Point axes_ = Point::Ones();
    std::vector<Point> vertices_;
    std::vector<Point> normals_;
};

// Omega = outer \ closure(inner). Construction checks that the closure of the
// inner body lies strictly inside the outer one.
template <int Dim>
class ConvexRing {
public:
    using Point = Vec<Dim>;

    ConvexRing(ConvexBody<Dim> outer, ConvexBody<Dim> inner)
        : outer_(std::move(outer)), inner_(std::move(inner))
    {
        margin_ = compute_margin();
        if (!(margin_ > 0.0))
            throw DomainError("inner body is not strictly inside the outer body");
    }

    const ConvexBody<Dim>& outer() const { return outer_; }
    const ConvexBody<Dim>& inner() const { return inner_; }

    // Smallest distance from the inner boundary to the outer boundary,
    // measured on sampled inner boundary points.
    double margin() const { return margin_; }

    bool contains(const Point& x) const { return outer_.level(x) < 0.0 && inner_.level(x) > 0.0; }

    // Polygon vertices of either body; curvature is undefined there.
    std::vector<Point> corners() const
    {
        std::vector<Point> out = outer_.vertices();
        out.insert(out.end(), inner_.vertices().begin(), inner_.vertices().end());
        return out;
    }

    bool concentric_balls() const
    {
        return outer_.kind() == BodyKind::Ball && inner_.kind() == BodyKind::Ball
               && (outer_.center() - inner_.center()).norm()
                      <= 1e-12 * std::max(1.0, outer_.semi_axes()[0]);
    }

private:
    double compute_margin() const
    {
        const int count = Dim == 2 ? 2048 : 4096;
        double m = std::numeric_limits<double>::infinity();
        for (const Point& p : inner_.boundary_samples(count))
            m = std::min(m, -outer_.signed_distance(p));
        return m;
    }

    ConvexBody<Dim> outer_;
    ConvexBody<Dim> inner_;
    double margin_ = 0.0;
};

} // namespace levelcurv
