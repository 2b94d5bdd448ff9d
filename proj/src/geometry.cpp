#include "swarmloc/geometry.hpp"

#include <cmath>

namespace swarmloc {

double euclidean_distance(const Point3& a, const Point3& b) {
    const double dx = a.x - b.x;
    const double dy = a.y - b.y;
    const double dz = a.z - b.z;
    return std::sqrt(dx * dx + dy * dy + dz * dz);
}

TrilaterationResult trilaterate(const AnchorSet& anchors,
                                const std::array<double, 3>& ranges) {
    anchors.validate();
    for (double r : ranges) {
        if (!std::isfinite(r)) throw validation_error("trilaterate: non-finite range");
        if (r <= 0.0) throw validation_error("trilaterate: range must be positive");
    }

    const Point3& p1 = anchors.positions[0];
    const Point3& p2 = anchors.positions[1];
    const Point3& p3 = anchors.positions[2];

    // Canonical frame: p1 at the origin, p2 on the local x-axis, p3 in the
    // local xy-plane.
    const Point3 v21 = p2 - p1;
    const double d = v21.norm();
    const Point3 ex = v21 * (1.0 / d);
    const Point3 v31 = p3 - p1;
    const double i = ex.dot(v31);
    const Point3 ey_raw = v31 - ex * i;
    const double ey_len = ey_raw.norm();
    const Point3 ey = ey_raw * (1.0 / ey_len);
    const Point3 ez = ex.cross(ey);
    const double j = ey.dot(v31);

    const double r1 = ranges[0], r2 = ranges[1], r3 = ranges[2];
    const double x = (r1 * r1 - r2 * r2 + d * d) / (2.0 * d);
    const double y = (r1 * r1 - r3 * r3 + i * i + j * j) / (2.0 * j) - (i / j) * x;

    const double discriminant = r1 * r1 - x * x - y * y;
    bool degenerate = false;
    double z = 0.0;
    if (discriminant < 0.0) {
        degenerate = true;
    } else {
        z = std::sqrt(discriminant);
    }

    const Point3 base = p1 + ex * x + ey * y;
    TrilaterationResult result;
    result.first = base + ez * z;
    result.second = base - ez * z;
    result.degenerate = degenerate;
    return result;
}

SelectedPoint select_in_bounds(const Point3& a, const Point3& b, const Bounds& bounds) {
    if (a == b) return {a, false};

    const bool a_in = bounds.strictly_contains(a);
    const bool b_in = bounds.strictly_contains(b);
    if (a_in != b_in) return {a_in ? a : b, false};

    const Point3 c = bounds.center();
    const double da = (a - c).squared_norm();
    const double db = (b - c).squared_norm();
    if (da < db) return {a, true};
    if (db < da) return {b, true};
    if (a.z > b.z) return {a, true};
    if (b.z > a.z) return {b, true};
    return {a, true};
}

}  // namespace swarmloc
