#include "msdem/shape.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <numeric>
#include <ostream>
#include <stdexcept>

namespace msdem {

std::ostream& operator<<(std::ostream& os, const Vec3& v) {
    return os << v.x << " " << v.y << " " << v.z;
}

namespace {

constexpr double kPi = 3.14159265358979323846;

// ------------------------------------------------------------ quadrature ----

double adaptive_simpson_rec(const std::function<double(double)>& f, double a, double b,
                            double fa, double fm, double fb, double whole, double tol,
                            int depth) {
    const double m = 0.5 * (a + b);
    const double lm = 0.5 * (a + m), rm = 0.5 * (m + b);
    const double flm = f(lm), frm = f(rm);
    const double left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
    const double right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
    if (depth <= 0 || std::abs(left + right - whole) <= 15.0 * tol) {
        return left + right + (left + right - whole) / 15.0;
    }
    return adaptive_simpson_rec(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1) +
           adaptive_simpson_rec(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1);
}

double adaptive_simpson(const std::function<double(double)>& f, double a, double b,
                        double tol) {
    const double m = 0.5 * (a + b);
    const double fa = f(a), fm = f(m), fb = f(b);
    const double whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    return adaptive_simpson_rec(f, a, b, fa, fm, fb, whole, tol, 30);
}

// ----------------------------------------------------- generating curves ----

// Ellipse x^2/a^2 + y^2/b^2 = 1, upper branch, t=0 at (+a, 0), t=1 at (0, b).
struct EllipseCurve final : GeneratingCurve {
    double a, b;
    EllipseCurve(double a_, double b_) : a(a_), b(b_) { vertex_x = a; }
    Vec3 at(double t) const override {
        const double th = t * (kPi / 2.0);
        return {a * std::cos(th), b * std::sin(th), 0.0};
    }
    Vec3 deriv(double t) const override {
        const double th = t * (kPi / 2.0);
        return {-a * std::sin(th) * (kPi / 2.0), b * std::cos(th) * (kPi / 2.0), 0.0};
    }
};

// Cassini oval ((x-a)^2+y^2)((x+a)^2+y^2) = b^4 in polar form
// r^2(th) = a^2 cos 2th + sqrt(b^4 - a^4 sin^2 2th), outer branch, b > a.
// t=0 at the vertex (sqrt(a^2+b^2), 0), t=1 at the waist (0, sqrt(b^2-a^2)).
struct CassiniCurve final : GeneratingCurve {
    double a, b;
    CassiniCurve(double a_, double b_) : a(a_), b(b_) {
        vertex_x = std::sqrt(a * a + b * b);
    }
    Vec3 at(double t) const override {
        const double th = t * (kPi / 2.0);
        const double s2 = std::sin(2.0 * th);
        const double r2 = a * a * std::cos(2.0 * th) +
                          std::sqrt(b * b * b * b - a * a * a * a * s2 * s2);
        const double r = std::sqrt(r2);
        return {r * std::cos(th), r * std::sin(th), 0.0};
    }
    Vec3 deriv(double t) const override {
        const double th = t * (kPi / 2.0);
        const double s2 = std::sin(2.0 * th), c2 = std::cos(2.0 * th);
        const double w = std::sqrt(b * b * b * b - a * a * a * a * s2 * s2);
        const double r = std::sqrt(a * a * c2 + w);
        // d(r^2)/dth = -2 sin 2th (a^2 + a^4 cos 2th / w)
        const double dr = -s2 * (a * a + a * a * a * a * c2 / w) / r;
        const double c1 = std::cos(th), s1 = std::sin(th);
        return {(dr * c1 - r * s1) * (kPi / 2.0), (dr * s1 + r * c1) * (kPi / 2.0), 0.0};
    }
};

double arc_length_to(const GeneratingCurve& c, double t) {
    if (t <= 0.0) return 0.0;
    return adaptive_simpson([&](double u) { return norm(c.deriv(u)); }, 0.0, t,
                            1e-12 * c.vertex_x);
}

// t such that arc length from the vertex equals s (s monotone in t).
double arc_length_inverse(const GeneratingCurve& c, double s) {
    double lo = 0.0, hi = 1.0;
    for (int i = 0; i < 64; ++i) {
        const double mid = 0.5 * (lo + hi);
        (arc_length_to(c, mid) < s ? lo : hi) = mid;
    }
    return 0.5 * (lo + hi);
}

// ------------------------------------------------------------ validation ----

void require(bool ok, const char* msg) {
    if (!ok) throw std::invalid_argument(msg);
}

double model_scale(const MSModel& m) {
    double s = 0.0;
    for (const auto& e : m.spheres) s = std::max(s, norm(e.center) + e.radius);
    return s;
}

void finalize_model(MSModel& m) {
    require(!m.spheres.empty(), "MS model must contain at least one sphere");
    for (const auto& e : m.spheres) require(e.radius > 0.0, "primary sphere radius must be > 0");
    m.mbs_radius = model_scale(m);

    // Clump connectivity: union-find over overlapping sphere pairs.
    const int n = static_cast<int>(m.spheres.size());
    std::vector<int> root(n);
    std::iota(root.begin(), root.end(), 0);
    auto find = [&](int i) {
        while (root[i] != i) i = root[i] = root[root[i]];
        return i;
    };
    // Exact tangency (e.g. end and center spheres of a 2:1 ellipsoid at n = 3)
    // still counts as connected.
    const double touch_tol = 1e-12 * m.mbs_radius;
    for (int i = 0; i < n; ++i)
        for (int j = i + 1; j < n; ++j) {
            const double d = norm(m.spheres[i].center - m.spheres[j].center);
            if (d <= m.spheres[i].radius + m.spheres[j].radius + touch_tol)
                root[find(i)] = find(j);
        }
    for (int i = 0; i < n; ++i)
        require(find(i) == find(0), "MS model spheres do not form a connected clump");
}

} // namespace

// ---------------------------------------------------------------- builders --

double min_distance_to_curve(const GeneratingCurve& curve, double x0) {
    const Vec3 p{x0, 0.0, 0.0};
    auto dist = [&](double t) { return norm(curve.at(t) - p); };

    // Coarse scan brackets the global minimum; the waist region of the Cassini
    // oval is concave, so do not assume unimodality over the whole parameter.
    const int kScan = 128;
    int best = 0;
    double best_d = dist(0.0);
    for (int i = 1; i <= kScan; ++i) {
        const double d = dist(static_cast<double>(i) / kScan);
        if (d < best_d) { best_d = d; best = i; }
    }
    double lo = std::max(0.0, (best - 1.0) / kScan);
    double hi = std::min(1.0, (best + 1.0) / kScan);

    // Golden-section refinement.
    const double gr = 0.5 * (std::sqrt(5.0) - 1.0);
    double c = hi - gr * (hi - lo), d = lo + gr * (hi - lo);
    double fc = dist(c), fd = dist(d);
    while (hi - lo > 1e-14) {
        if (fc < fd) {
            hi = d; d = c; fd = fc;
            c = hi - gr * (hi - lo);
            fc = dist(c);
        } else {
            lo = c; c = d; fc = fd;
            d = lo + gr * (hi - lo);
            fd = dist(d);
        }
    }
    return dist(0.5 * (lo + hi));
}

namespace {

// Shared MIS filling for the solids of revolution.  Tangency points are spaced
// uniformly in generating-curve arc length from vertex to vertex;  each
// interior sphere center is the foot of the curve normal on the symmetry axis
// and its radius is the minimum center-to-curve distance.  End spheres are
// pinned tangent at the vertices with the vertex curvature radius
// (r_end = -G'(x_v)/2 for a curve given as y^2 = G(x)).
MSModel build_axial_mis(const GeneratingCurve& curve, int n, double vertex_curvature_r) {
    MSModel m;
    if (n == 1) {
        m.spheres.push_back({{0.0, 0.0, 0.0}, min_distance_to_curve(curve, 0.0)});
        finalize_model(m);
        return m;
    }

    const double half_len = arc_length_to(curve, 1.0);
    const int half = (n - 1) / 2;
    std::vector<SphereElement> plus;  // spheres with center x >= 0, vertex first

    plus.push_back({{curve.vertex_x - vertex_curvature_r, 0.0, 0.0}, vertex_curvature_r});
    for (int k = 1; k < half; ++k) {
        const double s = 2.0 * half_len * k / (n - 1);
        const double t = arc_length_inverse(curve, s);
        const Vec3 p = curve.at(t);
        const Vec3 tan = curve.deriv(t);
        const double cx = p.x + p.y * tan.y / tan.x;  // normal foot on the axis
        plus.push_back({{cx, 0.0, 0.0}, min_distance_to_curve(curve, cx)});
    }

    for (const auto& e : plus) m.spheres.push_back(e);
    m.spheres.push_back({{0.0, 0.0, 0.0}, min_distance_to_curve(curve, 0.0)});
    for (auto it = plus.rbegin(); it != plus.rend(); ++it)
        m.spheres.push_back({{-it->center.x, 0.0, 0.0}, it->radius});

    finalize_model(m);
    return m;
}

} // namespace

MSModel build_sphere_ms(double radius) {
    require(radius > 0.0, "sphere radius must be > 0");
    MSModel m;
    m.spheres.push_back({{0.0, 0.0, 0.0}, radius});
    finalize_model(m);
    return m;
}

MSModel build_ellipsoid_ms(double a, double b, int n_spheres) {
    require(a > 0.0 && b > 0.0, "ellipsoid semi-axes must be > 0");
    require(a >= b, "ellipsoid expects a >= b");
    require(n_spheres >= 1 && n_spheres % 2 == 1, "ellipsoid sphere count must be odd");
    if (a == b) {
        // Degenerate sphere; MIS filling would produce coincident spheres.
        std::vector<SphereElement> s(static_cast<size_t>(n_spheres),
                                     SphereElement{{0, 0, 0}, a});
        MSModel m;
        m.spheres = std::move(s);
        finalize_model(m);
        return m;
    }
    EllipseCurve curve(a, b);
    return build_axial_mis(curve, n_spheres, b * b / a);
}

MSModel build_spherocylinder_ms(double R, double L, int n_spheres) {
    require(R > 0.0, "spherocylinder radius must be > 0");
    require(L >= 0.0, "spherocylinder length must be >= 0");
    require(n_spheres >= 2, "spherocylinder needs at least 2 spheres");
    MSModel m;
    for (int k = 0; k < n_spheres; ++k) {
        const double x = (n_spheres == 1) ? 0.0
                                          : -0.5 * L + L * k / (n_spheres - 1.0);
        m.spheres.push_back({{x, 0.0, 0.0}, R});
    }
    finalize_model(m);
    return m;
}

MSModel build_torus_ms(double R_major, double r_minor, int n_spheres) {
    require(R_major > 0.0 && r_minor > 0.0, "torus radii must be > 0");
    require(R_major > r_minor, "torus requires R_major > r_minor");
    require(n_spheres >= 3, "torus needs at least 3 spheres");
    // Adjacent centers sit 2 R sin(pi/n) apart; the ring must stay connected.
    require(2.0 * R_major * std::sin(kPi / n_spheres) < 2.0 * r_minor,
            "torus sphere count too small for adjacent spheres to overlap");
    MSModel m;
    for (int k = 0; k < n_spheres; ++k) {
        const double phi = 2.0 * kPi * k / n_spheres;
        m.spheres.push_back(
            {{R_major * std::cos(phi), R_major * std::sin(phi), 0.0}, r_minor});
    }
    finalize_model(m);
    return m;
}

MSModel build_cassini_ms(double a, double b, int n_spheres) {
    require(a > 0.0, "cassini parameter a must be > 0");
    require(b > a, "cassini oval requires b > a (single connected oval)");
    require(n_spheres >= 3 && n_spheres % 2 == 1, "cassini sphere count must be odd, >= 3");
    CassiniCurve curve(a, b);
    // y^2 = G(x) = sqrt(b^4 + 4 a^2 x^2) - x^2 - a^2;  r_end = -G'(x_v)/2.
    const double xv = curve.vertex_x;
    const double r_end = xv * b * b / (2.0 * a * a + b * b);
    return build_axial_mis(curve, n_spheres, r_end);
}

MSModel build_ms(const ShapeDescriptor& g) {
    switch (g.kind) {
        case ShapeKind::sphere:         return build_sphere_ms(g.p1);
        case ShapeKind::ellipsoid:      return build_ellipsoid_ms(g.p1, g.p2, g.n_spheres);
        case ShapeKind::spherocylinder: return build_spherocylinder_ms(g.p1, g.p2, g.n_spheres);
        case ShapeKind::cassini:        return build_cassini_ms(g.p1, g.p2, g.n_spheres);
        case ShapeKind::torus:          return build_torus_ms(g.p1, g.p2, g.n_spheres);
    }
    throw std::invalid_argument("unsupported shape kind");
}

// ---------------------------------------------------------- mass properties --

MassProperties mass_properties(const ShapeDescriptor& g, double density) {
    require(density > 0.0, "density must be > 0");
    MassProperties mp;
    mp.com = {0.0, 0.0, 0.0};
    mp.principal_axes = Quat{};  // builders emit shapes already in principal axes

    switch (g.kind) {
        case ShapeKind::sphere: {
            const double r = g.p1;
            require(r > 0.0, "sphere radius must be > 0");
            mp.volume = 4.0 / 3.0 * kPi * r * r * r;
            mp.mass = density * mp.volume;
            const double i = 0.4 * mp.mass * r * r;
            mp.inertia_principal = {i, i, i};
            break;
        }
        case ShapeKind::ellipsoid: {
            const double a = g.p1, b = g.p2;
            require(a > 0.0 && b > 0.0, "ellipsoid semi-axes must be > 0");
            mp.volume = 4.0 / 3.0 * kPi * a * b * b;
            mp.mass = density * mp.volume;
            mp.inertia_principal = {0.4 * mp.mass * b * b,
                                    0.2 * mp.mass * (a * a + b * b),
                                    0.2 * mp.mass * (a * a + b * b)};
            break;
        }
        case ShapeKind::spherocylinder: {
            const double R = g.p1, L = g.p2;
            require(R > 0.0 && L >= 0.0, "invalid spherocylinder dimensions");
            const double v_cyl = kPi * R * R * L;
            const double v_cap = 2.0 / 3.0 * kPi * R * R * R;  // one hemisphere
            mp.volume = v_cyl + 2.0 * v_cap;
            mp.mass = density * mp.volume;
            const double m_cyl = density * v_cyl, m_cap = density * v_cap;
            // Axis along x.  Hemisphere centroid sits 3R/8 beyond the cylinder
            // end; transverse moment about its own centroid is 83/320 m R^2.
            const double d = 0.5 * L + 3.0 * R / 8.0;
            const double ix = 0.5 * m_cyl * R * R + 2.0 * (0.4 * m_cap * R * R);
            const double it = m_cyl * (L * L / 12.0 + R * R / 4.0) +
                              2.0 * (83.0 / 320.0 * m_cap * R * R + m_cap * d * d);
            mp.inertia_principal = {ix, it, it};
            break;
        }
        case ShapeKind::torus: {
            const double R = g.p1, r = g.p2;
            require(R > r && r > 0.0, "invalid torus radii");
            mp.volume = 2.0 * kPi * kPi * R * r * r;
            mp.mass = density * mp.volume;
            // Ring in the x-y plane, symmetry axis z.
            const double iz = mp.mass * (R * R + 0.75 * r * r);
            const double it = mp.mass * (0.5 * R * R + 0.625 * r * r);
            mp.inertia_principal = {it, it, iz};
            break;
        }
        case ShapeKind::cassini: {
            const double a = g.p1, b = g.p2;
            require(b > a && a > 0.0, "invalid cassini parameters");
            const double xv = std::sqrt(a * a + b * b);
            // Solid of revolution about x with y^2 = G(x).
            auto G = [=](double x) {
                return std::sqrt(b * b * b * b + 4.0 * a * a * x * x) - x * x - a * a;
            };
            auto g2 = [&](double x) { const double v = std::max(G(x), 0.0); return v; };
            const double est = 2.0 * xv * g2(0.0);  // crude scale for the tolerance
            const double tol = 1e-6 * est;
            const double int_y2 = adaptive_simpson(g2, -xv, xv, tol);
            const double int_y4 =
                adaptive_simpson([&](double x) { const double v = g2(x); return v * v; },
                                 -xv, xv, tol * g2(0.0));
            const double int_x2y2 =
                adaptive_simpson([&](double x) { return x * x * g2(x); }, -xv, xv,
                                 tol * xv * xv);
            mp.volume = kPi * int_y2;
            mp.mass = density * mp.volume;
            const double ix = density * kPi / 2.0 * int_y4;
            const double it = density * kPi * (int_y4 / 4.0 + int_x2y2);
            mp.inertia_principal = {ix, it, it};
            break;
        }
    }
    return mp;
}

ShapeTemplate make_template(const std::string& name, const ShapeDescriptor& gen,
                            double density) {
    ShapeTemplate t;
    t.name = name;
    t.generator = gen;
    t.ms = build_ms(gen);
    t.props = mass_properties(gen, density);
    return t;
}

double volume_match_scale(const ShapeDescriptor& gen, double target_volume) {
    require(target_volume > 0.0, "target volume must be > 0");
    const double v = mass_properties(gen, 1.0).volume;
    return std::cbrt(target_volume / v);
}

// ------------------------------------------------------------- mesh sync ----

namespace {
void check_unit(const Quat& q) {
    if (std::abs(norm(q) - 1.0) > 1e-9)
        throw std::invalid_argument("pose orientation is not a unit quaternion");
}
} // namespace

SurfaceMesh sync_mesh(const SurfaceMesh& mesh, const Pose& pose) {
    check_unit(pose.orientation);
    SurfaceMesh out;
    out.vertices.reserve(mesh.vertices.size());
    for (const auto& v : mesh.vertices)
        out.vertices.push_back(rotate(pose.orientation, v) + pose.position);
    out.triangles = mesh.triangles;
    return out;
}

CellMesh sync_mesh(const CellMesh& mesh, const Pose& pose) {
    check_unit(pose.orientation);
    CellMesh out;
    out.points.reserve(mesh.points.size());
    for (const auto& p : mesh.points)
        out.points.push_back(rotate(pose.orientation, p) + pose.position);
    out.tets = mesh.tets;
    return out;
}

} // namespace msdem
