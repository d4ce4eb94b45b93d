#include "msdem/world.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace msdem {

namespace {
constexpr double kTau = 6.28318530717958647692;
} // namespace

int World::add_particle(int tmpl, const Pose& pose, const Vec3& v, const Vec3& w) {
    if (tmpl < 0 || tmpl >= static_cast<int>(templates.size()))
        throw std::invalid_argument("add_particle: unknown template index");
    Particle p;
    p.id = next_id++;
    p.tmpl = tmpl;
    p.pose = pose;
    p.v = v;
    p.w = w;
    particles.push_back(p);
    return p.id;
}

Quat uniform_random_quaternion(std::mt19937_64& rng) {
    std::uniform_real_distribution<double> uni(0.0, 1.0);
    const double u1 = uni(rng), u2 = uni(rng), u3 = uni(rng);
    const double a = std::sqrt(1.0 - u1), b = std::sqrt(u1);
    return {b * std::cos(kTau * u3),   // w
            a * std::sin(kTau * u2),   // x
            a * std::cos(kTau * u2),   // y
            b * std::sin(kTau * u3)};  // z
}

namespace {

double point_triangle_distance(const Vec3& p, const Vec3& v0, const Vec3& v1,
                               const Vec3& v2) {
    // Closest point via barycentric region tests (Ericson).
    const Vec3 ab = v1 - v0, ac = v2 - v0, ap = p - v0;
    const double d1 = dot(ab, ap), d2 = dot(ac, ap);
    if (d1 <= 0.0 && d2 <= 0.0) return norm(p - v0);
    const Vec3 bp = p - v1;
    const double d3 = dot(ab, bp), d4 = dot(ac, bp);
    if (d3 >= 0.0 && d4 <= d3) return norm(p - v1);
    const Vec3 cp = p - v2;
    const double d5 = dot(ab, cp), d6 = dot(ac, cp);
    if (d6 >= 0.0 && d5 <= d6) return norm(p - v2);
    const double vc = d1 * d4 - d3 * d2;
    if (vc <= 0.0 && d1 >= 0.0 && d3 <= 0.0) return norm(p - (v0 + (d1 / (d1 - d3)) * ab));
    const double vb = d5 * d2 - d1 * d6;
    if (vb <= 0.0 && d2 >= 0.0 && d6 <= 0.0) return norm(p - (v0 + (d2 / (d2 - d6)) * ac));
    const double va = d3 * d6 - d5 * d4;
    if (va <= 0.0 && (d4 - d3) >= 0.0 && (d5 - d6) >= 0.0) {
        const double t = (d4 - d3) / ((d4 - d3) + (d5 - d6));
        return norm(p - (v1 + t * (v2 - v1)));
    }
    const double denom = 1.0 / (va + vb + vc);
    return norm(p - (v0 + (vb * denom) * ab + (vc * denom) * ac));
}

} // namespace

bool mbs_intersects_wall(const Vec3& center, double r_mbs, const Wall& wall) {
    switch (wall.kind) {
        case WallKind::plane:
            return std::abs(dot(center - wall.point, wall.normal)) < r_mbs;
        case WallKind::cylinder: {
            const Vec3 axis = normalized(wall.p2 - wall.p1);
            const Vec3 d = center - wall.p1;
            const double rho = norm(d - dot(d, axis) * axis);
            if (wall.facing_inside) return rho + r_mbs > wall.radius;
            return std::abs(rho - wall.radius) < r_mbs;
        }
        case WallKind::trimesh:
            for (const auto& t : wall.mesh.triangles) {
                if (point_triangle_distance(center, wall.mesh.vertices[t[0]],
                                            wall.mesh.vertices[t[1]],
                                            wall.mesh.vertices[t[2]]) < r_mbs)
                    return true;
            }
            return false;
    }
    return false;
}

int insert_batch(World& world, InsertRegion& region, std::mt19937_64& rng) {
    if (region.trigger_interval < 1)
        throw std::invalid_argument("insert stream trigger interval must be >= 1");
    const int remaining = region.target_count - region.inserted;
    if (remaining <= 0) return 0;

    std::uniform_int_distribution<int> batch_dist(region.min_batch, region.max_batch);
    const int want = std::min(batch_dist(rng), remaining);
    const double r_mbs = world.templates[region.tmpl].ms.mbs_radius;

    std::uniform_real_distribution<double> uni(0.0, 1.0);
    auto sample_position = [&]() -> Vec3 {
        if (region.is_box) {
            return {region.lo.x + (region.hi.x - region.lo.x) * uni(rng),
                    region.lo.y + (region.hi.y - region.lo.y) * uni(rng),
                    region.lo.z + (region.hi.z - region.lo.z) * uni(rng)};
        }
        // Uniform over the cylinder volume: sqrt-radius disc sample + axial.
        const double rr = region.radius * std::sqrt(uni(rng));
        const double th = kTau * uni(rng);
        const Vec3 axis = region.cp2 - region.cp1;
        // Orthonormal frame around the axis.
        const Vec3 az = normalized(axis);
        const Vec3 seed = std::abs(az.x) < 0.9 ? Vec3{1, 0, 0} : Vec3{0, 1, 0};
        const Vec3 ax = normalized(cross(seed, az));
        const Vec3 ay = cross(az, ax);
        return region.cp1 + uni(rng) * axis +
               (rr * std::cos(th)) * ax + (rr * std::sin(th)) * ay;
    };

    constexpr int kRejectionBudget = 10000;
    int placed = 0;
    int rejections = 0;
    while (placed < want && rejections < kRejectionBudget) {
        const Vec3 pos = sample_position();
        const Quat q = uniform_random_quaternion(rng);

        bool ok = true;
        for (const auto& w : world.walls) {
            if (w.active && mbs_intersects_wall(pos, r_mbs, w)) { ok = false; break; }
        }
        if (ok) {
            for (const auto& p : world.particles) {
                const double other = world.templates[p.tmpl].ms.mbs_radius;
                if (norm(pos - p.pose.position) < r_mbs + other) { ok = false; break; }
            }
        }
        if (!ok) { ++rejections; continue; }

        rejections = 0;
        world.add_particle(region.tmpl, Pose{pos, q}, region.velocity, Vec3{});
        ++placed;
    }
    region.inserted += placed;
    return placed;
}

} // namespace msdem
