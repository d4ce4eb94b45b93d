#include "msdem/contact.hpp"

#include <cmath>
#include <stdexcept>

namespace msdem {

std::optional<ContactGeom> sphere_plane(const Vec3& O, double R, const Vec3& p,
                                        const Vec3& n_hat) {
    const double s = dot(O - p, n_hat);  // signed height of the center
    const double d_n = std::abs(s) - R;
    if (d_n >= 0.0) return std::nullopt;
    ContactGeom g;
    g.d_n = d_n;
    g.n = s >= 0.0 ? n_hat : -1.0 * n_hat;  // degenerate s = 0 falls back to n_hat
    g.p_c = O - R * g.n;
    return g;
}

std::optional<ContactGeom> sphere_sphere(const Vec3& O_i, double R_i, const Vec3& O_j,
                                         double R_j) {
    const Vec3 d = O_i - O_j;
    const double dist = norm(d);
    if (dist == 0.0)
        throw std::runtime_error("sphere_sphere: coincident sphere centers");
    const double d_n = dist - (R_i + R_j);
    if (d_n >= 0.0) return std::nullopt;
    ContactGeom g;
    g.d_n = d_n;
    g.n = d / dist;
    g.p_c = O_i - R_i * g.n;
    return g;
}

std::optional<ContactGeom> sphere_cylinder(const Vec3& O, double R, double r,
                                           const Vec3& p1, const Vec3& p2,
                                           bool facing_inside) {
    const Vec3 axis = normalized(p2 - p1);
    const Vec3 d = O - p1;
    const Vec3 radial = d - dot(d, axis) * axis;
    const double rho = norm(radial);
    const double d_n = facing_inside ? (r - rho) - R : (rho - r) - R;
    if (d_n >= 0.0) return std::nullopt;
    if (rho == 0.0)
        throw std::runtime_error("sphere_cylinder: center on the axis while overlapping; "
                                 "no unique contact normal");
    ContactGeom g;
    g.d_n = d_n;
    // Normal from the shell surface toward the sphere center's side.
    g.n = facing_inside ? (-1.0 / rho) * radial : (1.0 / rho) * radial;
    g.p_c = O - R * g.n;
    return g;
}

Vec3 closest_point_triangle(const Vec3& p, const Vec3& v0, const Vec3& v1,
                            const Vec3& v2, TriFeature* feature) {
    // Barycentric region classification (Ericson, Real-Time Collision Detection).
    const Vec3 ab = v1 - v0, ac = v2 - v0, ap = p - v0;
    const double d1 = dot(ab, ap), d2 = dot(ac, ap);
    if (d1 <= 0.0 && d2 <= 0.0) { *feature = TriFeature::vert0; return v0; }

    const Vec3 bp = p - v1;
    const double d3 = dot(ab, bp), d4 = dot(ac, bp);
    if (d3 >= 0.0 && d4 <= d3) { *feature = TriFeature::vert1; return v1; }

    const double vc = d1 * d4 - d3 * d2;
    if (vc <= 0.0 && d1 >= 0.0 && d3 <= 0.0) {
        *feature = TriFeature::edge01;
        return v0 + (d1 / (d1 - d3)) * ab;
    }

    const Vec3 cp = p - v2;
    const double d5 = dot(ab, cp), d6 = dot(ac, cp);
    if (d6 >= 0.0 && d5 <= d6) { *feature = TriFeature::vert2; return v2; }

    const double vb = d5 * d2 - d1 * d6;
    if (vb <= 0.0 && d2 >= 0.0 && d6 <= 0.0) {
        *feature = TriFeature::edge20;
        return v0 + (d2 / (d2 - d6)) * ac;
    }

    const double va = d3 * d6 - d5 * d4;
    if (va <= 0.0 && (d4 - d3) >= 0.0 && (d5 - d6) >= 0.0) {
        *feature = TriFeature::edge12;
        return v1 + ((d4 - d3) / ((d4 - d3) + (d5 - d6))) * (v2 - v1);
    }

    *feature = TriFeature::face;
    const double denom = 1.0 / (va + vb + vc);
    return v0 + (vb * denom) * ab + (vc * denom) * ac;
}

std::optional<TriangleContact> sphere_triangle(const Vec3& O, double R, const Vec3& v0,
                                               const Vec3& v1, const Vec3& v2,
                                               const Vec3& fallback_dir) {
    TriFeature feat;
    const Vec3 q = closest_point_triangle(O, v0, v1, v2, &feat);
    const double dist = norm(O - q);
    const double d_n = dist - R;
    if (d_n >= 0.0) return std::nullopt;
    TriangleContact tc;
    tc.feature = feat;
    tc.geom.d_n = d_n;
    if (dist > 0.0) {
        tc.geom.n = (O - q) / dist;
    } else {
        Vec3 fn = cross(v1 - v0, v2 - v0);
        const double a = norm(fn);
        if (a == 0.0) throw std::runtime_error("sphere_triangle: degenerate triangle");
        fn = fn / a;
        tc.geom.n = dot(fn, fallback_dir) >= 0.0 ? fn : -1.0 * fn;
    }
    tc.geom.p_c = O - R * tc.geom.n;
    return tc;
}

} // namespace msdem
