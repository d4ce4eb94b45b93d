#pragma once

#include <optional>

#include "msdem/vec3.hpp"

namespace msdem {

// Overlap geometry of one sphere against another body.  d_n < 0 for every
// emitted contact; n points from body j (or wall) toward sphere i; p_c is the
// deepest point of sphere i, world frame.
struct ContactGeom {
    double d_n = 0.0;  // signed gap [m], negative = penetrating
    Vec3 n{};          // unit contact normal
    Vec3 p_c{};        // contact point [m]
};

// Closest-feature classification of a point against a triangle; keys wall
// contact history and drives duplicate suppression across shared features.
enum class TriFeature { face, edge01, edge12, edge20, vert0, vert1, vert2 };

struct TriangleContact {
    ContactGeom geom;
    TriFeature feature = TriFeature::face;
};

// Gap |O - p_w| - R against the plane through p with unit normal n_hat; the
// normal points from the plane toward the sphere center (falls back to n_hat
// for a center exactly on the plane).
std::optional<ContactGeom> sphere_plane(const Vec3& O, double R, const Vec3& p,
                                        const Vec3& n_hat);

// Gap |O_i - O_j| - (R_i + R_j); normal from j toward i; p_c = O_i - R_i n.
// Coincident centers are a pathological state and throw.
std::optional<ContactGeom> sphere_sphere(const Vec3& O_i, double R_i, const Vec3& O_j,
                                         double R_j);

// Wall shell of radius r around the axis p1->p2.  facing_inside means
// particles are confined inside the shell: d_n = (r - rho) - R.  A center on
// the axis of an already-overlapping inside wall has no unique normal and
// throws.
std::optional<ContactGeom> sphere_cylinder(const Vec3& O, double R, double r,
                                           const Vec3& p1, const Vec3& p2,
                                           bool facing_inside);

// Closest point q on the triangle to p plus the feature q lies on.
Vec3 closest_point_triangle(const Vec3& p, const Vec3& v0, const Vec3& v1,
                            const Vec3& v2, TriFeature* feature);

// Gap |O - q| - R for the closest triangle point q.  A center exactly on the
// triangle uses the face normal oriented along fallback_dir.
std::optional<TriangleContact> sphere_triangle(const Vec3& O, double R, const Vec3& v0,
                                               const Vec3& v1, const Vec3& v2,
                                               const Vec3& fallback_dir);

} // namespace msdem
