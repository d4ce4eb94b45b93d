// Unit quaternion for rigid-body orientations, scalar-first convention (w, x, y, z).
// Rotation of a vector costs one quaternion sandwich expanded to plain arithmetic.
#pragma once

#include "msdem/vec3.hpp"

#include <cmath>

namespace msdem {

struct Quat {
    double w = 1.0, x = 0.0, y = 0.0, z = 0.0;

    Quat() = default;
    Quat(double w_, double x_, double y_, double z_) : w(w_), x(x_), y(y_), z(z_) {}
};

inline Quat operator*(const Quat& a, const Quat& b) {
    return {a.w * b.w - a.x * b.x - a.y * b.y - a.z * b.z,
            a.w * b.x + a.x * b.w + a.y * b.z - a.z * b.y,
            a.w * b.y - a.x * b.z + a.y * b.w + a.z * b.x,
            a.w * b.z + a.x * b.y - a.y * b.x + a.z * b.w};
}

inline bool operator==(const Quat& a, const Quat& b) {
    return a.w == b.w && a.x == b.x && a.y == b.y && a.z == b.z;
}

inline Quat conjugate(const Quat& q) { return {q.w, -q.x, -q.y, -q.z}; }

inline double norm(const Quat& q) {
    return std::sqrt(q.w * q.w + q.x * q.x + q.y * q.y + q.z * q.z);
}

inline Quat normalized(const Quat& q) {
    const double inv = 1.0 / norm(q);
    return {q.w * inv, q.x * inv, q.y * inv, q.z * inv};
}

// Rotate body-frame vector v into the world frame: q v q*.
inline Vec3 rotate(const Quat& q, const Vec3& v) {
    // t = 2 q_vec x v; v' = v + w t + q_vec x t
    const Vec3 qv{q.x, q.y, q.z};
    const Vec3 t = 2.0 * cross(qv, v);
    return v + q.w * t + cross(qv, t);
}

// Inverse rotation (world to body) for a unit quaternion.
inline Vec3 rotate_inv(const Quat& q, const Vec3& v) { return rotate(conjugate(q), v); }

// Exponential map: unit quaternion for a rotation by |phi| radians about phi/|phi|.
// Small-angle series keeps the w ~ 1 branch accurate.
inline Quat quat_exp(const Vec3& phi) {
    const double half = 0.5 * norm(phi);
    double s;  // sin(half)/|phi| * ... folded as sin(half)/(2*half)
    if (half < 1e-8) {
        s = 0.5 - half * half / 12.0;
    } else {
        s = std::sin(half) / (2.0 * half);
    }
    return {std::cos(half), s * phi.x, s * phi.y, s * phi.z};
}

// Rotation by angle [rad] about a unit axis.
inline Quat from_axis_angle(const Vec3& axis, double angle) {
    const double h = 0.5 * angle;
    const double s = std::sin(h);
    return {std::cos(h), s * axis.x, s * axis.y, s * axis.z};
}

} // namespace msdem
