// Minimal 3-vector type used across the engine.  All quantities are SI.
#pragma once

#include <cmath>
#include <iosfwd>

namespace msdem {

struct Vec3 {
    double x = 0.0, y = 0.0, z = 0.0;

    Vec3() = default;
    Vec3(double x_, double y_, double z_) : x(x_), y(y_), z(z_) {}

    Vec3& operator+=(const Vec3& o) { x += o.x; y += o.y; z += o.z; return *this; }
    Vec3& operator-=(const Vec3& o) { x -= o.x; y -= o.y; z -= o.z; return *this; }
    Vec3& operator*=(double s)      { x *= s; y *= s; z *= s; return *this; }

    double& operator[](int i)       { return i == 0 ? x : (i == 1 ? y : z); }
    double  operator[](int i) const { return i == 0 ? x : (i == 1 ? y : z); }
};

inline Vec3 operator+(Vec3 a, const Vec3& b) { return a += b; }
inline Vec3 operator-(Vec3 a, const Vec3& b) { return a -= b; }
inline Vec3 operator-(const Vec3& a)         { return {-a.x, -a.y, -a.z}; }
inline Vec3 operator*(Vec3 a, double s)      { return a *= s; }
inline Vec3 operator*(double s, Vec3 a)      { return a *= s; }
inline Vec3 operator/(Vec3 a, double s)      { return a *= (1.0 / s); }

inline bool operator==(const Vec3& a, const Vec3& b) {
    return a.x == b.x && a.y == b.y && a.z == b.z;
}

inline double dot(const Vec3& a, const Vec3& b) { return a.x * b.x + a.y * b.y + a.z * b.z; }
inline Vec3 cross(const Vec3& a, const Vec3& b) {
    return {a.y * b.z - a.z * b.y, a.z * b.x - a.x * b.z, a.x * b.y - a.y * b.x};
}
inline double norm2(const Vec3& a) { return dot(a, a); }
inline double norm(const Vec3& a)  { return std::sqrt(dot(a, a)); }

// Unit vector; caller guarantees |a| > 0.
inline Vec3 normalized(const Vec3& a) { return a / norm(a); }

std::ostream& operator<<(std::ostream& os, const Vec3& v);

} // namespace msdem
