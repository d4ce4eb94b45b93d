// Shape templates: multi-sphere models of the five analytic particle shapes,
// exact rigid-body mass properties, and optional pose-synced companion meshes.
//
// A multi-sphere (MS) model is an ordered list of primary spheres fixed in the
// body frame.  Builders fill maximum inscribed spheres (MIS) along the symmetry
// axis for the solids of revolution, or place equal spheres for the
// spherocylinder and torus.  Mass properties always come from the exact
// analytic solid, never from the overlapping sphere union.
#pragma once

#include "msdem/quat.hpp"
#include "msdem/vec3.hpp"

#include <array>
#include <optional>
#include <string>
#include <vector>

namespace msdem {

struct SphereElement {
    Vec3 center;    // body frame [m]
    double radius;  // [m], > 0
};

struct MSModel {
    std::vector<SphereElement> spheres;
    double mbs_radius = 0.0;  // minimum bounding sphere about the body origin [m]
};

struct MassProperties {
    double volume = 0.0;     // [m^3]
    double mass = 0.0;       // [kg]
    Vec3 com;                // body frame; identically the origin for all builders
    Vec3 inertia_principal;  // principal moments [kg m^2]
    Quat principal_axes;     // body frame -> principal frame (identity here)
};

struct SurfaceMesh {
    std::vector<Vec3> vertices;               // body frame [m]
    std::vector<std::array<int, 3>> triangles;  // vertex indices, 0-based in memory
};

struct CellMesh {
    std::vector<Vec3> points;             // body frame [m]
    std::vector<std::array<int, 4>> tets;  // point indices, 0-based in memory
};

enum class ShapeKind { sphere, ellipsoid, spherocylinder, cassini, torus };

// Generator parameters, all [m]:
//   sphere:          p1 = radius
//   ellipsoid:       p1 = a (semi-major), p2 = b (semi-minor, = c)
//   spherocylinder:  p1 = R (sphere/cylinder radius), p2 = L (cylinder length)
//   cassini:         p1 = a, p2 = b of ((x-a)^2+y^2)((x+a)^2+y^2) = b^4, b > a
//   torus:           p1 = R (major radius), p2 = r (minor radius)
struct ShapeDescriptor {
    ShapeKind kind = ShapeKind::sphere;
    double p1 = 0.0;
    double p2 = 0.0;
    int n_spheres = 1;
};

struct ShapeTemplate {
    std::string name;
    ShapeDescriptor generator;
    MSModel ms;
    MassProperties props;
    std::optional<SurfaceMesh> surface;
    std::optional<CellMesh> cells;
};

struct Pose {
    Vec3 position;     // [m]
    Quat orientation;  // unit quaternion, |q| = 1 within 1e-9
};

// ---------------------------------------------------------------- builders --

MSModel build_sphere_ms(double radius);

// MIS spheres on the major axis, symmetric about the origin, end spheres
// internally tangent at (+-a, 0, 0).  n_spheres must be odd.
MSModel build_ellipsoid_ms(double a, double b, int n_spheres);

// n equal spheres of radius R spaced uniformly on a segment of length L
// centered at the origin (end centers at +-L/2).  L = 0 degenerates to n
// coincident spheres.
MSModel build_spherocylinder_ms(double R, double L, int n_spheres);

// n spheres of radius r_minor equally spaced on the circle of radius R_major
// in the x-y mid-plane.  Rejects n for which adjacent spheres do not overlap.
MSModel build_torus_ms(double R_major, double r_minor, int n_spheres);

// MIS spheres on the x-axis of the solid of revolution of the Cassini oval
// (single-oval regime b > a), symmetric, end spheres tangent at the vertices.
MSModel build_cassini_ms(double a, double b, int n_spheres);

// Dispatch on descriptor.kind; parameters as documented above.
MSModel build_ms(const ShapeDescriptor& gen);

// Exact analytic solid: closed forms for sphere/ellipsoid/spherocylinder/torus,
// adaptive Simpson quadrature over the solid of revolution for the Cassini oval.
MassProperties mass_properties(const ShapeDescriptor& gen, double density);

ShapeTemplate make_template(const std::string& name, const ShapeDescriptor& gen,
                            double density);

// Scale factor that makes the generator's solid volume match target_volume
// (lengths scale by the cube root of the volume ratio).
double volume_match_scale(const ShapeDescriptor& gen, double target_volume);

// ------------------------------------------------------------- mesh sync ----

SurfaceMesh sync_mesh(const SurfaceMesh& mesh, const Pose& pose);
CellMesh sync_mesh(const CellMesh& mesh, const Pose& pose);

// --------------------------------------------------------------- mesh I/O ---
// Surface meshes: ASCII `v x y z` / `f i j k` records, 1-based indices.
// Cell meshes: ASCII layout `POINTS n` + n coordinate lines, then `TETS m` +
// m lines of four 0-based point indices (see README for the full grammar).
// Readers validate index ranges, triangle areas and tetrahedron volumes.

SurfaceMesh read_surface_mesh(const std::string& path);
void write_surface_mesh(const SurfaceMesh& mesh, const std::string& path);
CellMesh read_cell_mesh(const std::string& path);
void write_cell_mesh(const CellMesh& mesh, const std::string& path);

void validate_mesh(const SurfaceMesh& mesh);
void validate_mesh(const CellMesh& mesh);

// ------------------------------------------------------- generating curves --

// Upper generating curve of the solids of revolution, parameterized t in [0,1]
// from the +x vertex (t=0) to the waist plane x=0 (t=1).  Used by the builders
// and exposed for tests.
struct GeneratingCurve {
    double vertex_x = 0.0;  // +x axis intercept [m]
    // point on the curve
    virtual Vec3 at(double t) const = 0;     // z component always 0
    virtual Vec3 deriv(double t) const = 0;  // d(at)/dt, analytic
    virtual ~GeneratingCurve() = default;
};

// Minimum distance from an axis point (x0, 0, 0) to the generating curve
// (coarse scan + golden-section refinement, tolerance 1e-12 * vertex_x).
double min_distance_to_curve(const GeneratingCurve& curve, double x0);

} // namespace msdem
