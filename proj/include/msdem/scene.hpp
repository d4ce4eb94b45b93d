#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "msdem/force.hpp"
#include "msdem/world.hpp"

namespace msdem {

// Scene description layer: a small line-oriented text format holding
// everything needed to reproduce a run (materials, particle templates,
// walls, insertion streams, explicitly placed particles, time stepping and
// output policy).  parse_scene + serialize_scene round-trip exactly.

struct TemplateSpec {
    std::string name;
    ShapeDescriptor shape;
    std::string material;      // material name, resolved at build time
    std::string surface_mesh;  // optional OBJ path for the visual skin
    std::string cell_mesh;     // optional OBJ path for the cell overlay
};

struct WallSpec {
    std::string name;
    Wall wall;              // geometry + schedule; material index unresolved
    std::string material;   // material name
    std::string mesh_path;  // OBJ source for kind == trimesh
};

struct StreamSpec {
    std::string name;
    std::string tmpl;     // template name
    InsertRegion region;  // tmpl index + seed resolved at build time
    bool seed_set = false;
};

// One particle placed verbatim at scene start (impact setups and the like).
struct PlacedParticle {
    std::string tmpl;
    Pose pose;
    Vec3 v{};
    Vec3 w{};
    bool fixed = false;
};

// Where the analysis passes should look: station extents for surface
// profiles, reference area for porosity, station axis for repose slopes.
struct AnalysisSpec {
    double lo_x = 0.0, hi_x = 0.0;  // [m]
    double lo_y = 0.0, hi_y = 0.0;  // [m]
    double base_area = 0.0;         // [m^2]; 0 = (hi_x-lo_x)*(hi_y-lo_y)
    int stations = 100;             // segments per profile, >= 100
    int flow_axis = 0;              // 0 = x, 1 = y
};

struct SceneConfig {
    std::string name = "scene";

    std::vector<Material> materials;  // Material::name is the reference key
    std::vector<TemplateSpec> templates;
    std::vector<WallSpec> walls;
    std::vector<StreamSpec> streams;
    std::vector<PlacedParticle> particles;

    Vec3 gravity{0.0, 0.0, -9.81};  // [m/s^2]
    double dt = 0.0;                // [s]; 0 = derive from the stiffness limit
    double duration = 0.0;          // [s]; takes precedence over steps
    long long steps = 0;            // used when duration == 0
    int output_every = 10000;       // snapshot cadence [steps]
    std::uint64_t seed = 1;         // run seed; streams without their own mix it
    double velocity_cap = 100.0;    // [m/s]; exceeding it aborts the run
    bool stop_when_settled = false;
    double settle_threshold = 1e-8;   // [J] kinetic energy per particle
    int settle_check_every = 1000;    // [steps]
    int n_div = 20;                   // timestep = stability limit / n_div
    double r_cut = 0.0;               // [m] extra neighbor margin
    double skin_mult = 20.0;          // Verlet skin = skin_mult * v_max * dt
    CurvatureModel curvature = CurvatureModel::r_eq;

    AnalysisSpec analysis;

    int material_index(const std::string& nm) const;  // -1 if absent
    int template_index(const std::string& nm) const;  // -1 if absent
};

// Parses scene text.  Errors carry "<origin>:<line>: message" and name the
// offending key or field.  Unknown keys are rejected.
SceneConfig parse_scene(const std::string& text, const std::string& origin = "scene");

// Canonical text form; parse_scene(serialize_scene(cfg)) == original text
// when cfg itself came from parse_scene (doubles printed with %.17g).
std::string serialize_scene(const SceneConfig& cfg);

// Treats the argument as a path if such a file exists, otherwise as a
// built-in preset name.
SceneConfig load_scene(const std::string& path_or_preset);

const std::vector<std::string>& preset_names();
bool is_preset(const std::string& name);
std::string preset_scene_text(const std::string& name);  // throws if unknown

// Materializes templates, walls, streams and placed particles into a ready
// World.  Streams without an explicit seed get one mixed from run_seed and
// the stream index, so replays with the same seed are bit-identical.
World build_world(const SceneConfig& cfg, std::uint64_t run_seed);

}  // namespace msdem
