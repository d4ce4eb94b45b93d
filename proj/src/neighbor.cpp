#include "msdem/neighbor.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace msdem {

namespace {

// Row-major rotation matrix of a unit quaternion.
struct Mat3 {
    double m[9];
};

Mat3 rotation_matrix(const Quat& q) {
    const double w = q.w, x = q.x, y = q.y, z = q.z;
    return {{1 - 2 * (y * y + z * z), 2 * (x * y - w * z), 2 * (x * z + w * y),
             2 * (x * y + w * z), 1 - 2 * (x * x + z * z), 2 * (y * z - w * x),
             2 * (x * z - w * y), 2 * (y * z + w * x), 1 - 2 * (x * x + y * y)}};
}

} // namespace

void SphereSoA::rebuild_structure(const World& world) {
    x.clear(); y.clear(); z.clear(); r.clear();
    owner.clear(); local.clear();
    for (std::size_t p = 0; p < world.particles.size(); ++p) {
        const auto& ms = world.templates[world.particles[p].tmpl].ms;
        for (std::size_t k = 0; k < ms.spheres.size(); ++k) {
            x.push_back(0.0); y.push_back(0.0); z.push_back(0.0);
            r.push_back(ms.spheres[k].radius);
            owner.push_back(static_cast<std::int32_t>(p));
            local.push_back(static_cast<std::int32_t>(k));
        }
    }
    update_positions(world);
}

void SphereSoA::update_positions(const World& world) {
    std::size_t g = 0;
    for (const auto& p : world.particles) {
        const auto& ms = world.templates[p.tmpl].ms;
        const Mat3 R = rotation_matrix(p.pose.orientation);
        const Vec3 c = p.pose.position;
        for (const auto& s : ms.spheres) {
            const Vec3 b = s.center;
            x[g] = R.m[0] * b.x + R.m[1] * b.y + R.m[2] * b.z + c.x;
            y[g] = R.m[3] * b.x + R.m[4] * b.y + R.m[5] * b.z + c.y;
            z[g] = R.m[6] * b.x + R.m[7] * b.y + R.m[8] * b.z + c.z;
            ++g;
        }
    }
}

int CellGrid::occupied_cells() const {
    int n = 0;
    for (std::size_t c = 0; c + 1 < start.size(); ++c)
        if (start[c + 1] > start[c]) ++n;
    return n;
}

CellGrid build_cell_list(const SphereSoA& s, double k) {
    if (k < 1.0 || k > 3.0)
        throw std::invalid_argument("cell size factor k must be in [1,3]");
    CellGrid g;
    const int n = s.count();
    if (n == 0) return g;

    double r_max = 0.0;
    Vec3 lo{s.x[0], s.y[0], s.z[0]}, hi = lo;
    for (int i = 0; i < n; ++i) {
        r_max = std::max(r_max, s.r[i]);
        lo.x = std::min(lo.x, s.x[i]); hi.x = std::max(hi.x, s.x[i]);
        lo.y = std::min(lo.y, s.y[i]); hi.y = std::max(hi.y, s.y[i]);
        lo.z = std::min(lo.z, s.z[i]); hi.z = std::max(hi.z, s.z[i]);
    }
    g.cell = k * 2.0 * r_max;
    g.origin = lo - Vec3{0.5, 0.5, 0.5} * g.cell;
    g.nx = static_cast<int>((hi.x - g.origin.x) / g.cell) + 1;
    g.ny = static_cast<int>((hi.y - g.origin.y) / g.cell) + 1;
    g.nz = static_cast<int>((hi.z - g.origin.z) / g.cell) + 1;
    const long long cells = 1LL * g.nx * g.ny * g.nz;
    if (cells > (1LL << 22))
        throw std::runtime_error("cell grid too large; system spread far beyond the "
                                 "scale of its particles");

    // Counting sort of sphere ids into cells (gid order preserved per cell).
    auto cell_of = [&](int i) {
        const int ix = std::clamp(static_cast<int>((s.x[i] - g.origin.x) / g.cell), 0, g.nx - 1);
        const int iy = std::clamp(static_cast<int>((s.y[i] - g.origin.y) / g.cell), 0, g.ny - 1);
        const int iz = std::clamp(static_cast<int>((s.z[i] - g.origin.z) / g.cell), 0, g.nz - 1);
        return (iz * g.ny + iy) * g.nx + ix;
    };
    g.start.assign(cells + 1, 0);
    for (int i = 0; i < n; ++i) ++g.start[cell_of(i) + 1];
    for (std::size_t c = 1; c < g.start.size(); ++c) g.start[c] += g.start[c - 1];
    g.gids.resize(n);
    std::vector<std::int32_t> cursor(g.start.begin(), g.start.end() - 1);
    for (int i = 0; i < n; ++i) g.gids[cursor[cell_of(i)]++] = i;
    return g;
}

NeighborList build_verlet(const CellGrid& grid, const SphereSoA& s, double d_skin,
                          double r_cut) {
    if (d_skin < 0.0) throw std::invalid_argument("d_skin must be >= 0");
    NeighborList list;
    list.d_skin = d_skin;
    const int n = s.count();
    list.ref_x.assign(s.x.begin(), s.x.end());
    list.ref_y.assign(s.y.begin(), s.y.end());
    list.ref_z.assign(s.z.begin(), s.z.end());
    if (n == 0) return list;

    double r_max = 0.0;
    for (int i = 0; i < n; ++i) r_max = std::max(r_max, s.r[i]);
    if (grid.cell < 2.0 * r_max + r_cut + d_skin)
        throw std::runtime_error(
            "cell size cannot cover the neighbor search radius; increase the cell "
            "factor k or reduce the skin");

    std::vector<std::int32_t> found;  // per-sphere partner buffer
    for (int i = 0; i < n; ++i) {
        const double xi = s.x[i], yi = s.y[i], zi = s.z[i];
        const int cx = std::clamp(static_cast<int>((xi - grid.origin.x) / grid.cell), 0, grid.nx - 1);
        const int cy = std::clamp(static_cast<int>((yi - grid.origin.y) / grid.cell), 0, grid.ny - 1);
        const int cz = std::clamp(static_cast<int>((zi - grid.origin.z) / grid.cell), 0, grid.nz - 1);
        found.clear();
        for (int dz = -1; dz <= 1; ++dz) {
            const int izc = cz + dz;
            if (izc < 0 || izc >= grid.nz) continue;
            for (int dy = -1; dy <= 1; ++dy) {
                const int iyc = cy + dy;
                if (iyc < 0 || iyc >= grid.ny) continue;
                for (int dx = -1; dx <= 1; ++dx) {
                    const int ixc = cx + dx;
                    if (ixc < 0 || ixc >= grid.nx) continue;
                    const int c = (izc * grid.ny + iyc) * grid.nx + ixc;
                    for (int slot = grid.start[c]; slot < grid.start[c + 1]; ++slot) {
                        const int j = grid.gids[slot];
                        if (j <= i || s.owner[j] == s.owner[i]) continue;
                        const double dxv = s.x[j] - xi, dyv = s.y[j] - yi, dzv = s.z[j] - zi;
                        const double cutoff = s.r[i] + s.r[j] + r_cut + d_skin;
                        if (dxv * dxv + dyv * dyv + dzv * dzv <= cutoff * cutoff)
                            found.push_back(j);
                    }
                }
            }
        }
        std::sort(found.begin(), found.end());
        for (const int j : found) {
            list.pi.push_back(i);
            list.pj.push_back(j);
            list.rsum.push_back(s.r[i] + s.r[j]);
        }
    }
    list.hist.assign(list.pi.size(), Vec3{});
    return list;
}

bool needs_rebuild(const SphereSoA& s, const NeighborList& list) {
    const double half = 0.5 * list.d_skin;
    const double lim = half * half;
    const int n = s.count();
    if (static_cast<int>(list.ref_x.size()) != n)
        return true;  // structure changed (insertion)
    for (int i = 0; i < n; ++i) {
        const double dx = s.x[i] - list.ref_x[i];
        const double dy = s.y[i] - list.ref_y[i];
        const double dz = s.z[i] - list.ref_z[i];
        if (dx * dx + dy * dy + dz * dz >= lim) return true;
    }
    return false;
}

void wall_candidates(const SphereSoA& s, const World& world, double d_skin,
                     NeighborList& list) {
    const int n = s.count();
    for (std::size_t wi = 0; wi < world.walls.size(); ++wi) {
        const Wall& w = world.walls[wi];
        if (!w.active) continue;
        switch (w.kind) {
            case WallKind::plane: {
                for (int i = 0; i < n; ++i) {
                    const Vec3 c{s.x[i], s.y[i], s.z[i]};
                    if (std::abs(dot(c - w.point, w.normal)) <= s.r[i] + d_skin)
                        list.wall.push_back({i, static_cast<std::int32_t>(wi), -1});
                }
                break;
            }
            case WallKind::cylinder: {
                const Vec3 axis = normalized(w.p2 - w.p1);
                for (int i = 0; i < n; ++i) {
                    const Vec3 d = Vec3{s.x[i], s.y[i], s.z[i]} - w.p1;
                    const double rho = norm(d - dot(d, axis) * axis);
                    const double gap = w.facing_inside ? w.radius - rho
                                                       : std::abs(rho - w.radius);
                    if (gap <= s.r[i] + d_skin)
                        list.wall.push_back({i, static_cast<std::int32_t>(wi), -1});
                }
                break;
            }
            case WallKind::trimesh: {
                // Bounding sphere per triangle; candidates are a superset of
                // true contacts.
                for (std::size_t t = 0; t < w.mesh.triangles.size(); ++t) {
                    const auto& tri = w.mesh.triangles[t];
                    const Vec3 a = w.mesh.vertices[tri[0]];
                    const Vec3 b = w.mesh.vertices[tri[1]];
                    const Vec3 c = w.mesh.vertices[tri[2]];
                    const Vec3 bc = (a + b + c) / 3.0;
                    const double br = std::sqrt(std::max({norm2(a - bc), norm2(b - bc),
                                                          norm2(c - bc)}));
                    for (int i = 0; i < n; ++i) {
                        const Vec3 sc{s.x[i], s.y[i], s.z[i]};
                        if (norm(sc - bc) <= s.r[i] + d_skin + br)
                            list.wall.push_back({i, static_cast<std::int32_t>(wi),
                                                 static_cast<std::int32_t>(t)});
                    }
                }
                break;
            }
        }
    }
    list.wall_hist.assign(list.wall.size(), Vec3{});
}

void carry_history(const NeighborList& old_list, NeighborList& new_list) {
    // Pairs: both lists sorted by (pi, pj).
    std::size_t a = 0;
    for (std::size_t b = 0; b < new_list.pi.size(); ++b) {
        while (a < old_list.pi.size() &&
               (old_list.pi[a] < new_list.pi[b] ||
                (old_list.pi[a] == new_list.pi[b] && old_list.pj[a] < new_list.pj[b])))
            ++a;
        if (a < old_list.pi.size() && old_list.pi[a] == new_list.pi[b] &&
            old_list.pj[a] == new_list.pj[b])
            new_list.hist[b] = old_list.hist[a];
    }
    // Wall candidates: both lists sorted by (wall, gid, tri) by construction.
    auto before = [](const WallCand& l, const WallCand& r) {
        if (l.wall != r.wall) return l.wall < r.wall;
        if (l.gid != r.gid) return l.gid < r.gid;
        return l.tri < r.tri;
    };
    a = 0;
    for (std::size_t b = 0; b < new_list.wall.size(); ++b) {
        while (a < old_list.wall.size() && before(old_list.wall[a], new_list.wall[b])) ++a;
        if (a < old_list.wall.size() && !before(new_list.wall[b], old_list.wall[a]))
            new_list.wall_hist[b] = old_list.wall_hist[a];
    }
}

std::vector<std::pair<std::int32_t, std::int32_t>>
brute_force_pairs(const SphereSoA& s, double d_skin, double r_cut) {
    std::vector<std::pair<std::int32_t, std::int32_t>> out;
    const int n = s.count();
    for (int i = 0; i < n; ++i)
        for (int j = i + 1; j < n; ++j) {
            if (s.owner[i] == s.owner[j]) continue;
            const double dx = s.x[j] - s.x[i], dy = s.y[j] - s.y[i], dz = s.z[j] - s.z[i];
            const double cutoff = s.r[i] + s.r[j] + r_cut + d_skin;
            if (dx * dx + dy * dy + dz * dz <= cutoff * cutoff) out.emplace_back(i, j);
        }
    return out;
}

} // namespace msdem
