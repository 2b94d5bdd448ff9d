#pragma once

#include <array>
#include <cmath>

#include "swarmloc/errors.hpp"

namespace swarmloc {

/// A 3D position or displacement in meters.
struct Point3 {
    double x = 0.0;
    double y = 0.0;
    double z = 0.0;

    Point3 operator+(const Point3& o) const { return {x + o.x, y + o.y, z + o.z}; }
    Point3 operator-(const Point3& o) const { return {x - o.x, y - o.y, z - o.z}; }
    Point3 operator*(double s) const { return {x * s, y * s, z * s}; }

    double dot(const Point3& o) const { return x * o.x + y * o.y + z * o.z; }
    Point3 cross(const Point3& o) const {
        return {y * o.z - z * o.y, z * o.x - x * o.z, x * o.y - y * o.x};
    }
    double squared_norm() const { return dot(*this); }
    double norm() const { return std::sqrt(squared_norm()); }

    bool is_finite() const {
        return std::isfinite(x) && std::isfinite(y) && std::isfinite(z);
    }

    bool operator==(const Point3&) const = default;
};

/// Axis-aligned box, corners in meters. min <= max per axis.
struct Bounds {
    Point3 min{-2.0, -2.0, 0.0};
    Point3 max{2.0, 2.0, 2.0};

    void validate() const {
        if (!min.is_finite() || !max.is_finite())
            throw validation_error("bounds: non-finite corner");
        if (min.x > max.x || min.y > max.y || min.z > max.z)
            throw validation_error("bounds: min exceeds max");
    }

    Point3 center() const {
        return {(min.x + max.x) / 2, (min.y + max.y) / 2, (min.z + max.z) / 2};
    }

    bool contains(const Point3& p) const {
        return p.x >= min.x && p.x <= max.x && p.y >= min.y && p.y <= max.y &&
               p.z >= min.z && p.z <= max.z;
    }

    /// Strict interior test, used for trilateration candidate selection.
    bool strictly_contains(const Point3& p) const {
        return p.x > min.x && p.x < max.x && p.y > min.y && p.y < max.y &&
               p.z > min.z && p.z < max.z;
    }

    Point3 clamp(const Point3& p) const {
        auto clamp1 = [](double v, double lo, double hi) {
            return v < lo ? lo : (v > hi ? hi : v);
        };
        return {clamp1(p.x, min.x, max.x), clamp1(p.y, min.y, max.y),
                clamp1(p.z, min.z, max.z)};
    }
};

/// Exactly three fixed anchors at known positions.
struct AnchorSet {
    std::array<Point3, 3> positions;

    /// Area of the anchor triangle in m^2.
    double triangle_area() const {
        const Point3 u = positions[1] - positions[0];
        const Point3 v = positions[2] - positions[0];
        return 0.5 * u.cross(v).norm();
    }

    /// Unit normal of the anchor plane.
    Point3 plane_normal() const {
        const Point3 n = (positions[1] - positions[0]).cross(positions[2] - positions[0]);
        const double len = n.norm();
        return {n.x / len, n.y / len, n.z / len};
    }

    void validate(double min_triangle_area = 1e-6) const {
        for (const auto& p : positions)
            if (!p.is_finite()) throw validation_error("anchors: non-finite position");
        if (triangle_area() <= min_triangle_area)
            throw validation_error("anchors: collinear (triangle area below threshold)");
    }
};

double euclidean_distance(const Point3& a, const Point3& b);

/// The two mirror-image sphere intersection points. When the spheres fail to
/// intersect the out-of-plane coordinate is clamped to zero, both candidates
/// coincide in the anchor plane, and `degenerate` is set.
struct TrilaterationResult {
    Point3 first;
    Point3 second;
    bool degenerate = false;
};

TrilaterationResult trilaterate(const AnchorSet& anchors,
                                const std::array<double, 3>& ranges);

struct SelectedPoint {
    Point3 point;
    bool ambiguous = false;
};

/// Picks the candidate strictly inside the bounds. If both or neither are
/// inside: the one nearer the bounds center, then the one with larger z, then
/// the first; `ambiguous` is set in that case.
SelectedPoint select_in_bounds(const Point3& a, const Point3& b, const Bounds& bounds);

}  // namespace swarmloc
