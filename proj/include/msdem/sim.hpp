#pragma once

#include <cstdint>
#include <functional>
#include <random>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "msdem/analysis.hpp"
#include "msdem/force.hpp"
#include "msdem/integrate.hpp"
#include "msdem/neighbor.hpp"
#include "msdem/scene.hpp"

namespace msdem {

// One neighbor-list rebuild, kept for the step log.
struct RebuildEvent {
    long long step = 0;
    const char* cause = "";  // initial | insertion | displacement | wall-change
    int pairs = 0;
    int wall_cands = 0;
};

// The sequential driver: owns the world, the broad-phase state and the
// per-step pipeline
//   wall schedule/advance -> insertion -> neighbor maintenance -> forces ->
//   velocity-Verlet update
// Construction runs one force pass so the first half kick sees real forces.
// Everything is deterministic for a fixed scene + seed.
class Simulation {
  public:
    Simulation(const SceneConfig& cfg, std::uint64_t run_seed);

    // Advances one step of dt(); throws on numerical blow-up (any particle
    // faster than the scene's velocity_cap).
    void step();

    // Steps until the configured duration/step budget, an early settle stop,
    // or a blow-up.  on_output (optional) fires on the initial state, every
    // output_every steps, and on the final state.
    using Callback = std::function<void(const Simulation&)>;
    void run(const Callback& on_output = {});

    bool finished() const;

    const World& world() const { return world_; }
    double time() const { return t_; }
    double dt() const { return dt_; }
    long long step_count() const { return n_steps_; }
    bool settled() const { return monitor_.settled(); }
    bool streams_exhausted() const;
    long long inserted_total() const;

    // Probes for analyses that need live contact data.
    double mean_speed() const;
    // Distinct particle pairs currently in sphere-sphere contact; optionally
    // returns the (particle index, particle index) pairs themselves.
    int touching_pairs(std::vector<std::pair<int, int>>* out = nullptr) const;

    const std::vector<RebuildEvent>& rebuild_log() const { return rebuild_log_; }

    // Fired on schedule events: "spin-start <wall>", "wall-removed <wall>",
    // "settled", "insert <stream> <n> total <m>".
    std::function<void(const std::string&)> on_event;

  private:
    void fire(const std::string& msg) const;
    void wall_schedule();
    void insert_due();
    void maintain_neighbors();
    void rebuild_lists(const char* cause);
    void force_pass();
    void pair_forces();
    void wall_forces();
    void settle_bookkeeping();

    SceneConfig cfg_;
    World world_;
    double dt_ = 0.0;
    double t_ = 0.0;
    long long n_steps_ = 0;
    long long step_limit_ = 0;
    bool stop_ = false;

    SphereSoA soa_;
    NeighborList nlist_;
    bool have_list_ = false;
    bool structure_changed_ = false;
    bool force_rebuild_ = false;
    double r_min_sphere_ = 0.0, r_max_sphere_ = 0.0;

    std::vector<std::mt19937_64> stream_rng_;
    SettleMonitor monitor_;
    std::vector<RebuildEvent> rebuild_log_;

    // per template: 1/mass, principal inertia, equal-volume sphere radius
    std::vector<double> inv_mass_;
    std::vector<Vec3> inertia_;
    std::vector<double> r_eq_;

    // effective-material tables: particle-particle by template pair,
    // particle-wall by template x wall
    std::vector<EffectivePair> ep_pp_;
    std::vector<EffectivePair> ep_pw_;
    int n_tmpl_ = 0;

    // mesh-wall contact history, keyed by (sphere, wall, feature); an entry
    // continues only if it was touched on the immediately preceding step
    struct MeshHist {
        Vec3 delta{};
        long long stamp = -2;
    };
    std::unordered_map<std::uint64_t, MeshHist> mesh_hist_;
    // trimesh candidate indices grouped by (wall, sphere), rebuilt with the list
    std::vector<std::int32_t> mesh_cand_;
    std::vector<std::pair<std::int32_t, std::int32_t>> mesh_runs_;
};

}  // namespace msdem
