#pragma once

#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "msdem/shape.hpp"

namespace msdem {

struct Material {
    std::string name;
    double young = 0.0;        // [Pa]
    double poisson = 0.0;      // [-], 0 <= nu < 0.5
    double density = 0.0;      // [kg/m^3]
    double restitution = 0.0;  // e, (0, 1]
    double mu_pw = 0.0;        // sliding friction vs walls [-]
    double mu_pp = 0.0;        // sliding friction vs particles [-]
    double mu_roll = 0.0;      // rolling friction [-]
};

enum class WallKind { plane, cylinder, trimesh };

// A wall is static geometry, optionally spinning rigidly about a fixed axis
// (axis through spin_point along spin_omega).  advance_walls in the integrate
// module rotates the defining data; the surface velocity at a point is
// spin_omega x (p - spin_point).
struct Wall {
    WallKind kind = WallKind::plane;
    int id = 0;
    int material = 0;  // index into World::materials
    std::string name;

    // plane: point + unit normal (normal side is outside the solid wall)
    Vec3 point{};
    Vec3 normal{0.0, 0.0, 1.0};

    // cylinder: axis p1 -> p2; facing_inside = particles confined inside
    double radius = 0.0;
    Vec3 p1{}, p2{};
    bool facing_inside = true;

    // trimesh: world-frame triangles
    SurfaceMesh mesh;

    bool spinning = false;
    Vec3 spin_point{};
    Vec3 spin_omega{};  // [rad/s]

    // Scheduled behavior, handled by the simulation driver: spinning can be
    // deferred until spin_start, and a wall can be retired at a fixed time or
    // when the bed first settles (the dam-break barrier).  Inactive walls are
    // invisible to the broad phase, the force pass and insertion clearance.
    double spin_start = 0.0;        // [s]
    double remove_time = -1.0;      // [s]; < 0 = never
    bool remove_on_settle = false;
    bool active = true;
};

struct Particle {
    int id = 0;    // unique, never reused
    int tmpl = 0;  // index into World::templates
    Pose pose;
    Vec3 v{};      // [m/s], world frame
    Vec3 w{};      // [rad/s], world frame
    Vec3 f_acc{};  // [N], force accumulated by the current force pass
    Vec3 t_acc{};  // [N m]
    // Held in place: skipped by the integrator but a full contact partner
    // (its template mass still enters the pair's effective mass).
    bool fixed = false;
};

// Particle stream: drops batches of one template into a spatial region at a
// fixed step interval until a target count has been produced.
struct InsertRegion {
    bool is_box = true;
    Vec3 lo{}, hi{};               // box corners
    double radius = 0.0;           // cylinder region (axis cp1 -> cp2)
    Vec3 cp1{}, cp2{};
    Vec3 velocity{};               // initial velocity of inserted particles
    int trigger_interval = 1;      // steps between batches, >= 1
    int min_batch = 1, max_batch = 1;
    int target_count = 0;          // stop once this many were inserted
    int inserted = 0;
    std::uint64_t seed = 0;
    int tmpl = 0;
};

struct World {
    std::vector<Material> materials;
    std::vector<ShapeTemplate> templates;
    std::vector<int> template_material;  // parallel to templates
    std::vector<Particle> particles;
    std::vector<Wall> walls;
    std::vector<InsertRegion> streams;
    Vec3 gravity{};

    int next_id = 0;

    int add_particle(int tmpl, const Pose& pose, const Vec3& v, const Vec3& w);
};

// Uniform sample on the rotation group (subgroup algorithm from three
// uniform variates).
Quat uniform_random_quaternion(std::mt19937_64& rng);

// True if a particle MBS of the given center/radius intersects the wall.
bool mbs_intersects_wall(const Vec3& center, double r_mbs, const Wall& wall);

// Inserts one batch for the region: candidates get a uniformly random
// position in the region and uniformly random orientation, and are accepted
// only if their MBS clears every wall and every existing particle's MBS.
// Gives up after 1e4 consecutive rejections (region full for this trigger).
// Returns the number of particles inserted.
int insert_batch(World& world, InsertRegion& region, std::mt19937_64& rng);

} // namespace msdem
