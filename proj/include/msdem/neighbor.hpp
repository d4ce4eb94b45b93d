#pragma once

#include <cstdint>
#include <vector>

#include "msdem/world.hpp"

namespace msdem {

// Flat arrays over every primary sphere in the system ("global spheres").
// Radii and ownership change only on insertion; world centers are refreshed
// from the particle poses every step.
struct SphereSoA {
    std::vector<double> x, y, z, r;
    std::vector<std::int32_t> owner;  // particle index in World::particles
    std::vector<std::int32_t> local;  // sphere index within the template

    int count() const { return static_cast<int>(x.size()); }
    void rebuild_structure(const World& world);
    void update_positions(const World& world);
};

struct CellGrid {
    double cell = 0.0;  // d_cell = k * D_max [m]
    Vec3 origin{};
    int nx = 0, ny = 0, nz = 0;
    std::vector<std::int32_t> start;  // size nx*ny*nz + 1, prefix offsets
    std::vector<std::int32_t> gids;   // sphere ids grouped by cell, gid-sorted

    int occupied_cells() const;
};

// Sphere-wall broad-phase candidate; tri is the triangle index for mesh
// walls and -1 otherwise.
struct WallCand {
    std::int32_t gid = 0;
    std::int32_t wall = 0;
    std::int32_t tri = -1;
};

// Verlet pair list over primary spheres (cross-particle only), plus wall
// candidates, valid while no sphere strays more than d_skin/2 from its
// reference position.  Tangential contact histories are stored inline with
// the pairs so the force pass needs no lookups; rebuilds carry history
// entries of persisting pairs.
struct NeighborList {
    std::vector<std::int32_t> pi, pj;  // gid pairs, pi < pj, lexicographically sorted
    std::vector<double> rsum;          // r[pi] + r[pj] [m]
    std::vector<Vec3> hist;            // tangential history per pair [m]

    std::vector<WallCand> wall;
    std::vector<Vec3> wall_hist;       // history per plane/cylinder candidate

    double d_skin = 0.0;
    std::vector<double> ref_x, ref_y, ref_z;  // positions at build time
};

CellGrid build_cell_list(const SphereSoA& s, double k);

// Pairs (i<j) with |c_i - c_j| <= r_i + r_j + r_cut + d_skin and different
// owning particles, found through the 27-cell stencil.  Throws if the cell
// size cannot cover the largest search radius.
NeighborList build_verlet(const CellGrid& grid, const SphereSoA& s, double d_skin,
                          double r_cut);

// True iff some sphere moved >= d_skin/2 since the list was built.
bool needs_rebuild(const SphereSoA& s, const NeighborList& list);

// Appends sphere-wall candidates to the list (plane/cylinder by signed
// distance <= r + d_skin, mesh triangles by bounding-sphere overlap).
void wall_candidates(const SphereSoA& s, const World& world, double d_skin,
                     NeighborList& list);

// Carries tangential histories of pairs/candidates present in both lists
// (both inputs sorted); everything else starts zeroed.
void carry_history(const NeighborList& old_list, NeighborList& new_list);

// Reference pair list by O(N^2) scan, same inclusion rule (test oracle support).
std::vector<std::pair<std::int32_t, std::int32_t>>
brute_force_pairs(const SphereSoA& s, double d_skin, double r_cut);

} // namespace msdem
