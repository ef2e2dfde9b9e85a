#pragma once

// Small vector helpers shared by the mesh, energy and measurement code.
// All lengths are centimetres (cgs units throughout).

#include "bsim/error.hpp"

#include <Eigen/Core>
#include <Eigen/Geometry>

#include <array>
#include <cmath>

namespace bsim {

using Point3 = Eigen::Vector3d;
using Vec3 = Eigen::Vector3d;

template <class T>
using Vec3T = Eigen::Matrix<T, 3, 1>;

inline bool is_finite(const Point3& p) { return std::isfinite(p.x()) && std::isfinite(p.y()) && std::isfinite(p.z()); }

// Neumaier-compensated running sum. Fixed order in, fixed result out.
template <class T = double>
class CompensatedSum {
public:
    CompensatedSum& operator+=(T x) {
        using std::abs;
        const T t = sum_ + x;
        if (abs(sum_) >= abs(x))
            carry_ += (sum_ - t) + x;
        else
            carry_ += (x - t) + sum_;
        sum_ = t;
        return *this;
    }

    T value() const { return sum_ + carry_; }

private:
    T sum_ = 0;
    T carry_ = 0;
};

struct Plane {
    Point3 point = Point3::Zero();
    Vec3 normal = Vec3::UnitZ();

    Plane() = default;
    Plane(const Point3& p, const Vec3& n) : point(p), normal(n) {
        if (std::abs(n.norm() - 1.0) > 1e-12) fail_usage("plane normal must be unit length");
    }

    static Plane through(const Point3& p, const Vec3& direction) { return Plane(p, direction.normalized()); }

    double signed_distance(const Point3& x) const { return (x - point).dot(normal); }
};

// Twice the vector area of triangle (a, b, c); direction follows the winding.
inline Vec3 area_vector2(const Point3& a, const Point3& b, const Point3& c) { return (b - a).cross(c - a); }

inline double triangle_area(const Point3& a, const Point3& b, const Point3& c) { return 0.5 * area_vector2(a, b, c).norm(); }

// Gradient of the triangle area with respect to each corner, for winding (a, b, c).
inline std::array<Vec3, 3> triangle_area_gradient(const Point3& a, const Point3& b, const Point3& c) {
    Vec3 n = area_vector2(a, b, c);
    const double len = n.norm();
    if (len == 0.0) return {Vec3::Zero(), Vec3::Zero(), Vec3::Zero()};
    n /= len;
    return {0.5 * n.cross(c - b), 0.5 * n.cross(a - c), 0.5 * n.cross(b - a)};
}

// Cotangent of the angle at `apex` in triangle (apex, p, q).
inline double cot_at(const Point3& apex, const Point3& p, const Point3& q) {
    const Vec3 u = p - apex;
    const Vec3 v = q - apex;
    return u.dot(v) / u.cross(v).norm();
}

inline double angle_at(const Point3& apex, const Point3& p, const Point3& q) {
    const Vec3 u = p - apex;
    const Vec3 v = q - apex;
    return std::atan2(u.cross(v).norm(), u.dot(v));
}

// Barycentric coordinates of the projection of x onto the plane of (a, b, c).
inline std::array<double, 3> barycentric(const Point3& x, const Point3& a, const Point3& b, const Point3& c) {
    const Vec3 n = area_vector2(a, b, c);
    const double nn = n.squaredNorm();
    const double b0 = area_vector2(x, b, c).dot(n) / nn;
    const double b1 = area_vector2(a, x, c).dot(n) / nn;
    return {b0, b1, 1.0 - b0 - b1};
}

// Closest point on triangle (a, b, c) to x, returned as barycentric coordinates.
inline std::array<double, 3> closest_barycentric(const Point3& x, const Point3& a, const Point3& b, const Point3& c) {
    // Ericson, Real-Time Collision Detection, 5.1.5.
    const Vec3 ab = b - a, ac = c - a, ap = x - a;
    const double d1 = ab.dot(ap), d2 = ac.dot(ap);
    if (d1 <= 0 && d2 <= 0) return {1, 0, 0};
    const Vec3 bp = x - b;
    const double d3 = ab.dot(bp), d4 = ac.dot(bp);
    if (d3 >= 0 && d4 <= d3) return {0, 1, 0};
    const double vc = d1 * d4 - d3 * d2;
    if (vc <= 0 && d1 >= 0 && d3 <= 0) {
        const double v = d1 / (d1 - d3);
        return {1 - v, v, 0};
    }
    const Vec3 cp = x - c;
    const double d5 = ab.dot(cp), d6 = ac.dot(cp);
    if (d6 >= 0 && d5 <= d6) return {0, 0, 1};
    const double vb = d5 * d2 - d1 * d6;
    if (vb <= 0 && d2 >= 0 && d6 <= 0) {
        const double w = d2 / (d2 - d6);
        return {1 - w, 0, w};
    }
    const double va = d3 * d6 - d5 * d4;
    if (va <= 0 && (d4 - d3) >= 0 && (d5 - d6) >= 0) {
        const double w = (d4 - d3) / ((d4 - d3) + (d5 - d6));
        return {0, 1 - w, w};
    }
    const double denom = 1.0 / (va + vb + vc);
    const double v = vb * denom, w = vc * denom;
    return {1 - v - w, v, w};
}

} // namespace bsim
