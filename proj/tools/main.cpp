// msdem command-line front end:
//   run          simulate a scene and write snapshot + log artifacts
//   estimate-dt  report the stability limits behind the automatic time step
//   analyze      measure fill height / porosity / angle of repose offline
//   export-mesh  dump pose-synced surface or cell meshes of a snapshot
//   presets      list built-in scenes
//   print-scene  write the canonical text of a scene to stdout
// MSDEM_LOG=quiet|info|debug controls chatter on stderr.
#include <CLI11.hpp>

#include <chrono>
#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <limits>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "msdem/analysis.hpp"
#include "msdem/integrate.hpp"
#include "msdem/scene.hpp"
#include "msdem/sim.hpp"
#include "msdem/snapshot.hpp"

namespace fs = std::filesystem;
using namespace msdem;

namespace {

enum class LogLevel { quiet = 0, info = 1, debug = 2 };

LogLevel log_level() {
    const char* v = std::getenv("MSDEM_LOG");
    if (!v) return LogLevel::info;
    const std::string s = v;
    if (s == "quiet") return LogLevel::quiet;
    if (s == "debug") return LogLevel::debug;
    return LogLevel::info;
}

void say(LogLevel at, const std::string& msg) {
    if (log_level() >= at) std::cerr << msg << "\n";
}

// ------------------------------------------------------------------- run --

int cmd_run(const std::string& scene, bool have_seed, std::uint64_t seed,
            bool deterministic, std::string out_dir) {
    const SceneConfig cfg = load_scene(scene);
    if (!have_seed) {
        if (deterministic) {
            seed = cfg.seed;
        } else {
            std::random_device rd;
            seed = (std::uint64_t(rd()) << 32) ^ rd();
        }
    }
    if (out_dir.empty()) out_dir = "out/" + cfg.name;
    fs::create_directories(out_dir);
    const fs::path out = out_dir;

    {
        std::ofstream os(out / "scene_used.cfg");
        os << serialize_scene(cfg);
    }

    std::ofstream log(out / "run.log");
    auto note = [&](const std::string& msg) {
        log << msg << "\n";
        say(LogLevel::info, msg);
    };
    note("scene " + cfg.name + "  seed " + std::to_string(seed));

    char buf[64];
    Simulation sim(cfg, seed);
    std::snprintf(buf, sizeof buf, "dt %.6g s", sim.dt());
    note(buf);
    sim.on_event = [&](const std::string& e) {
        std::snprintf(buf, sizeof buf, "[t=%.6g] ", sim.time());
        note(buf + e);
    };

    std::ofstream traj(out / "trajectory.csv");
    bool first = true;
    const auto t0 = std::chrono::steady_clock::now();
    sim.run([&](const Simulation& s) {
        append_snapshot(traj, s.world(), s.time(), first);
        first = false;
        say(LogLevel::debug, "  t=" + std::to_string(s.time()) + "  n=" +
                                 std::to_string(s.world().particles.size()) +
                                 "  step " + std::to_string(s.step_count()));
    });
    const double wall =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
            .count();

    write_snapshot((out / "final.csv").string(), sim.world(), sim.time());
    {
        std::ofstream ps(out / "particles.csv");
        ps << "id,template\n";
        const World& w = sim.world();
        for (std::size_t i = 0; i < w.particles.size(); ++i)
            ps << i << "," << w.templates[w.particles[i].tmpl].name << "\n";
    }

    for (const RebuildEvent& r : sim.rebuild_log())
        log << "rebuild step " << r.step << " (" << r.cause << "): " << r.pairs
            << " pairs, " << r.wall_cands << " wall candidates\n";

    std::ostringstream sum;
    sum << "done: " << sim.step_count() << " steps to t=" << sim.time()
        << " s, " << sim.world().particles.size() << " particles, "
        << sim.rebuild_log().size() << " rebuilds"
        << (sim.settled() ? ", settled" : "") << ", " << wall << " s wall";
    note(sum.str());
    std::cout << out.string() << "\n";
    return 0;
}

// ----------------------------------------------------------- estimate-dt --

int cmd_estimate_dt(const std::string& scene) {
    const SceneConfig cfg = load_scene(scene);
    if (cfg.templates.empty()) throw std::runtime_error("scene has no templates");

    double v_char = 1.0;
    for (const StreamSpec& s : cfg.streams)
        v_char = std::max(v_char, norm(s.region.velocity));
    for (const PlacedParticle& p : cfg.particles)
        v_char = std::max(v_char, norm(p.v));

    double dt_min = std::numeric_limits<double>::infinity();
    std::printf("%-16s %12s %12s %12s %12s\n", "template", "t_rayleigh",
                "t_hertz", "dt_critical", "dt/n_div");
    for (const TemplateSpec& ts : cfg.templates) {
        const ShapeTemplate t =
            make_template(ts.name, ts.shape,
                          cfg.materials[cfg.material_index(ts.material)].density);
        double r_min = std::numeric_limits<double>::infinity();
        for (const SphereElement& s : t.ms.spheres) r_min = std::min(r_min, s.radius);
        const Material& m = cfg.materials[cfg.material_index(ts.material)];
        const TimestepEstimate e =
            critical_timestep(m, r_min, t.props.mass, v_char, cfg.n_div);
        std::printf("%-16s %12.4e %12.4e %12.4e %12.4e\n", ts.name.c_str(),
                    e.t_rayleigh, e.t_hertz, e.dt_critical, e.dt);
        dt_min = std::min(dt_min, e.dt);
    }
    std::printf("derived dt: %.4e s (n_div %d, peak speed %.3g m/s)\n", dt_min,
                cfg.n_div, v_char);
    if (cfg.dt > 0.0)
        std::printf("scene dt:   %.4e s (%.1fx the derived value)\n", cfg.dt,
                    cfg.dt / dt_min);
    else
        std::printf("scene dt:   derived at run start\n");
    return 0;
}

// ------------------------------------------------- snapshot reconstruction --

// Rebuilds a World holding the snapshot's particles.  The scene supplies
// materials and templates; per-particle template names come from the
// particles.csv sidecar when present, else the scene's single template.
World world_from_snapshot(const SceneConfig& cfg, const SnapshotData& snap,
                          const fs::path& snap_path) {
    SceneConfig bare = cfg;
    bare.streams.clear();
    bare.particles.clear();
    World w = build_world(bare, 1);

    std::vector<int> id_tmpl;
    const fs::path sidecar = snap_path.parent_path() / "particles.csv";
    if (fs::exists(sidecar)) {
        std::ifstream in(sidecar);
        std::string line;
        std::getline(in, line);  // header
        while (std::getline(in, line)) {
            const auto comma = line.find(',');
            if (comma == std::string::npos) continue;
            const std::string name = line.substr(comma + 1);
            const int ti = cfg.template_index(name);
            if (ti < 0)
                throw std::runtime_error(sidecar.string() +
                                         ": unknown template '" + name + "'");
            id_tmpl.push_back(ti);
        }
    }
    if (id_tmpl.empty() && cfg.templates.size() != 1)
        throw std::runtime_error(
            "cannot map particles to templates: no particles.csv next to the "
            "snapshot and the scene defines " +
            std::to_string(cfg.templates.size()) + " templates");

    for (const SnapshotRecord& r : snap.records) {
        const std::size_t id = static_cast<std::size_t>(r.id);
        const int ti = id < id_tmpl.size() ? id_tmpl[id] : 0;
        w.add_particle(ti, r.pose, r.v, r.w);
    }
    return w;
}

SceneConfig scene_for_snapshot(const std::string& scene_opt,
                               const fs::path& snap_path) {
    if (!scene_opt.empty()) return load_scene(scene_opt);
    const fs::path sidecar = snap_path.parent_path() / "scene_used.cfg";
    if (fs::exists(sidecar)) return load_scene(sidecar.string());
    throw std::runtime_error(
        "no --scene given and no scene_used.cfg next to the snapshot");
}

// lateral measurement extents: the analysis block when set, else the bed span
void measure_extents(const SceneConfig& cfg, const World& w, double& lo_x,
                     double& hi_x, double& lo_y, double& hi_y) {
    lo_x = cfg.analysis.lo_x;
    hi_x = cfg.analysis.hi_x;
    lo_y = cfg.analysis.lo_y;
    hi_y = cfg.analysis.hi_y;
    if (lo_x < hi_x && lo_y < hi_y) return;
    lo_x = lo_y = std::numeric_limits<double>::infinity();
    hi_x = hi_y = -std::numeric_limits<double>::infinity();
    for (const Particle& p : w.particles)
        for (const SphereElement& s : w.templates[p.tmpl].ms.spheres) {
            const Vec3 c = p.pose.position + rotate(p.pose.orientation, s.center);
            lo_x = std::min(lo_x, c.x - s.radius);
            hi_x = std::max(hi_x, c.x + s.radius);
            lo_y = std::min(lo_y, c.y - s.radius);
            hi_y = std::max(hi_y, c.y + s.radius);
        }
    if (!(lo_x < hi_x && lo_y < hi_y))
        throw std::runtime_error("snapshot holds no particles to measure");
}

int cmd_analyze(const std::string& snap_path, const std::string& measure,
                const std::string& scene_opt) {
    const SnapshotData snap = read_snapshot(snap_path);
    const SceneConfig cfg = scene_for_snapshot(scene_opt, snap_path);
    const World w = world_from_snapshot(cfg, snap, snap_path);
    say(LogLevel::info, "snapshot t=" + std::to_string(snap.t) + " s, " +
                            std::to_string(w.particles.size()) + " particles");

    if (measure == "aor") {
        const double deg =
            angle_of_repose(w, cfg.analysis.flow_axis, cfg.analysis.stations);
        std::printf("aor %.2f deg\n", deg);
        return 0;
    }

    double lo_x, hi_x, lo_y, hi_y;
    measure_extents(cfg, w, lo_x, hi_x, lo_y, hi_y);
    const FillHeight fh =
        fill_height(w, lo_x, hi_x, lo_y, hi_y, cfg.analysis.stations);
    if (measure == "fill-height") {
        std::printf("fill-height %.6g m (sd %.3g m)\n", fh.mean, fh.sd);
        return 0;
    }
    const double area = cfg.analysis.base_area > 0.0
                            ? cfg.analysis.base_area
                            : (hi_x - lo_x) * (hi_y - lo_y);
    std::printf("porosity %.4f (fill %.6g m, base area %.6g m^2)\n",
                porosity(w, fh.mean, area), fh.mean, area);
    return 0;
}

// ----------------------------------------------------------- export-mesh --

int cmd_export_mesh(const std::string& snap_path, const std::string& kind,
                    const std::string& scene_opt, std::string out_path) {
    const SnapshotData snap = read_snapshot(snap_path);
    const SceneConfig cfg = scene_for_snapshot(scene_opt, snap_path);
    const World w = world_from_snapshot(cfg, snap, snap_path);

    if (out_path.empty()) {
        fs::path p = snap_path;
        p.replace_extension();
        out_path = p.string() + "_" + (kind == "surface" ? "surface.obj"
                                                         : "cells.txt");
    }

    if (kind == "surface") {
        SurfaceMesh merged;
        for (const Particle& p : w.particles) {
            const ShapeTemplate& t = w.templates[p.tmpl];
            if (!t.surface)
                throw std::runtime_error("template '" + t.name +
                                         "' carries no surface mesh");
            const SurfaceMesh m = sync_mesh(*t.surface, p.pose);
            const int base = static_cast<int>(merged.vertices.size());
            merged.vertices.insert(merged.vertices.end(), m.vertices.begin(),
                                   m.vertices.end());
            for (const auto& tri : m.triangles)
                merged.triangles.push_back(
                    {tri[0] + base, tri[1] + base, tri[2] + base});
        }
        write_surface_mesh(merged, out_path);
    } else {
        CellMesh merged;
        for (const Particle& p : w.particles) {
            const ShapeTemplate& t = w.templates[p.tmpl];
            if (!t.cells)
                throw std::runtime_error("template '" + t.name +
                                         "' carries no cell mesh");
            const CellMesh m = sync_mesh(*t.cells, p.pose);
            const int base = static_cast<int>(merged.points.size());
            merged.points.insert(merged.points.end(), m.points.begin(),
                                 m.points.end());
            for (const auto& tet : m.tets)
                merged.tets.push_back({tet[0] + base, tet[1] + base,
                                       tet[2] + base, tet[3] + base});
        }
        write_cell_mesh(merged, out_path);
    }
    std::cout << out_path << "\n";
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"multi-sphere discrete element simulator"};
    app.require_subcommand(1);

    std::string scene, out_dir, snap, measure, kind, scene_opt, out_file;
    std::uint64_t seed = 0;
    bool deterministic = false;

    CLI::App* run = app.add_subcommand("run", "simulate a scene");
    run->add_option("scene", scene, "scene file or preset name")->required();
    CLI::Option* seed_opt = run->add_option("--seed", seed, "run seed");
    run->add_flag("--deterministic", deterministic,
                  "use the seed written in the scene");
    run->add_option("--out", out_dir, "artifact directory (default out/<name>)");

    CLI::App* est = app.add_subcommand("estimate-dt", "stability time step");
    est->add_option("scene", scene, "scene file or preset name")->required();

    CLI::App* ana = app.add_subcommand("analyze", "measure a snapshot");
    ana->add_option("snapshot", snap, "snapshot or trajectory CSV")->required();
    ana->add_option("--measure", measure, "fill-height | porosity | aor")
        ->required()
        ->check(CLI::IsMember({"fill-height", "porosity", "aor"}));
    ana->add_option("--scene", scene_opt,
                    "scene for templates (default: sidecar scene_used.cfg)");

    CLI::App* exp = app.add_subcommand("export-mesh",
                                       "write pose-synced companion meshes");
    exp->add_option("snapshot", snap, "snapshot or trajectory CSV")->required();
    exp->add_option("--kind", kind, "surface | cells")
        ->required()
        ->check(CLI::IsMember({"surface", "cells"}));
    exp->add_option("--scene", scene_opt,
                    "scene for templates (default: sidecar scene_used.cfg)");
    exp->add_option("--out", out_file, "output path");

    CLI::App* pre = app.add_subcommand("presets", "list built-in scenes");
    CLI::App* prt = app.add_subcommand("print-scene", "canonical scene text");
    prt->add_option("scene", scene, "scene file or preset name")->required();

    CLI11_PARSE(app, argc, argv);

    try {
        if (run->parsed())
            return cmd_run(scene, seed_opt->count() > 0, seed, deterministic,
                           out_dir);
        if (est->parsed()) return cmd_estimate_dt(scene);
        if (ana->parsed()) return cmd_analyze(snap, measure, scene_opt);
        if (exp->parsed()) return cmd_export_mesh(snap, kind, scene_opt, out_file);
        if (pre->parsed()) {
            for (const std::string& n : preset_names()) std::cout << n << "\n";
            return 0;
        }
        if (prt->parsed()) {
            std::cout << serialize_scene(load_scene(scene));
            return 0;
        }
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
