#include "msdem/sim.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <sstream>
#include <stdexcept>

#include "msdem/contact.hpp"

namespace msdem {

namespace {

// Mesh contact bookkeeping packs (sphere, wall, feature) into 64 bits:
// gid:21 | wall:5 | type:2 | a:18 | b:18.
constexpr int kMaxMeshSpheres = 1 << 21;
constexpr int kMaxMeshWalls = 1 << 5;
constexpr int kMaxMeshIds = 1 << 18;

std::uint64_t mesh_key(int gid, int wall, int type, int a, int b) {
    return (static_cast<std::uint64_t>(gid) << 43) | (static_cast<std::uint64_t>(wall) << 38) |
           (static_cast<std::uint64_t>(type) << 36) | (static_cast<std::uint64_t>(a) << 18) |
           static_cast<std::uint64_t>(b);
}

// Feature of a triangle hit as (type, a, b) with global ids: faces by
// triangle, edges by sorted vertex pair, vertices by vertex id, so features
// shared between adjacent triangles collapse to one contact.
struct FeatureId {
    int type = 0, a = 0, b = 0;
    bool operator==(const FeatureId& o) const { return type == o.type && a == o.a && b == o.b; }
};

FeatureId classify(const TriangleContact& tc, const std::array<int, 3>& tri, int tri_index) {
    auto edge = [&](int u, int v) {
        return FeatureId{1, std::min(tri[u], tri[v]), std::max(tri[u], tri[v])};
    };
    switch (tc.feature) {
        case TriFeature::face: return {0, tri_index, 0};
        case TriFeature::edge01: return edge(0, 1);
        case TriFeature::edge12: return edge(1, 2);
        case TriFeature::edge20: return edge(2, 0);
        case TriFeature::vert0: return {2, tri[0], 0};
        case TriFeature::vert1: return {2, tri[1], 0};
        case TriFeature::vert2: return {2, tri[2], 0};
    }
    return {};
}

}  // namespace

Simulation::Simulation(const SceneConfig& cfg, std::uint64_t run_seed)
    : cfg_(cfg), world_(build_world(cfg, run_seed)), monitor_(cfg.settle_threshold) {
    n_tmpl_ = static_cast<int>(world_.templates.size());
    inv_mass_.resize(n_tmpl_);
    inertia_.resize(n_tmpl_);
    r_eq_.resize(n_tmpl_);
    r_min_sphere_ = 1e300;
    r_max_sphere_ = 0.0;
    for (int i = 0; i < n_tmpl_; ++i) {
        const ShapeTemplate& t = world_.templates[i];
        inv_mass_[i] = 1.0 / t.props.mass;
        inertia_[i] = t.props.inertia_principal;
        r_eq_[i] = equivalent_radius(t);
        for (const SphereElement& s : t.ms.spheres) {
            r_min_sphere_ = std::min(r_min_sphere_, s.radius);
            r_max_sphere_ = std::max(r_max_sphere_, s.radius);
        }
    }
    if (n_tmpl_ == 0) throw std::invalid_argument("scene defines no particle templates");

    ep_pp_.resize(static_cast<size_t>(n_tmpl_) * n_tmpl_);
    for (int i = 0; i < n_tmpl_; ++i) {
        const Material& mi = world_.materials[world_.template_material[i]];
        const double mass_i = world_.templates[i].props.mass;
        for (int j = 0; j < n_tmpl_; ++j) {
            const Material& mj = world_.materials[world_.template_material[j]];
            const double mass_j = world_.templates[j].props.mass;
            ep_pp_[static_cast<size_t>(i) * n_tmpl_ + j] =
                effective_pair(mi, mj, false, r_eq_[i], r_eq_[j], mass_i, mass_j);
        }
    }
    const int n_walls = static_cast<int>(world_.walls.size());
    ep_pw_.resize(static_cast<size_t>(n_tmpl_) * std::max(n_walls, 1));
    for (int i = 0; i < n_tmpl_; ++i) {
        const Material& mi = world_.materials[world_.template_material[i]];
        const double mass_i = world_.templates[i].props.mass;
        for (int wj = 0; wj < n_walls; ++wj) {
            const Material& mw = world_.materials[world_.walls[wj].material];
            ep_pw_[static_cast<size_t>(i) * n_walls + wj] =
                effective_pair(mi, mw, true, r_eq_[i], 0.0, mass_i, 0.0);
        }
    }
    for (const Wall& w : world_.walls) {
        if (w.kind != WallKind::trimesh) continue;
        if (static_cast<int>(w.mesh.vertices.size()) >= kMaxMeshIds ||
            static_cast<int>(w.mesh.triangles.size()) >= kMaxMeshIds ||
            n_walls >= kMaxMeshWalls)
            throw std::invalid_argument("trimesh wall too large for contact bookkeeping");
    }

    if (cfg_.dt > 0.0) {
        dt_ = cfg_.dt;
    } else {
        double v_char = 1.0;
        for (const InsertRegion& r : world_.streams) v_char = std::max(v_char, norm(r.velocity));
        for (const Particle& p : world_.particles) v_char = std::max(v_char, norm(p.v));
        dt_ = 1e300;
        for (int i = 0; i < n_tmpl_; ++i) {
            const ShapeTemplate& t = world_.templates[i];
            double r_min = 1e300;
            for (const SphereElement& s : t.ms.spheres) r_min = std::min(r_min, s.radius);
            const Material& m = world_.materials[world_.template_material[i]];
            dt_ = std::min(dt_, critical_timestep(m, r_min, t.props.mass, v_char, cfg_.n_div).dt);
        }
    }
    step_limit_ = cfg_.duration > 0.0 ? std::llround(cfg_.duration / dt_) : cfg_.steps;

    stream_rng_.reserve(world_.streams.size());
    for (const InsertRegion& r : world_.streams) stream_rng_.emplace_back(r.seed);

    if (!world_.particles.empty()) {
        soa_.rebuild_structure(world_);
        soa_.update_positions(world_);
        rebuild_lists("initial");
    }
    force_pass();
}

void Simulation::fire(const std::string& msg) const {
    if (on_event) on_event(msg);
}

bool Simulation::streams_exhausted() const {
    for (const InsertRegion& r : world_.streams)
        if (r.inserted < r.target_count) return false;
    return true;
}

long long Simulation::inserted_total() const {
    long long n = 0;
    for (const InsertRegion& r : world_.streams) n += r.inserted;
    return n;
}

bool Simulation::finished() const { return stop_ || n_steps_ >= step_limit_; }

void Simulation::wall_schedule() {
    bool removed = false, any_spin = false;
    for (Wall& w : world_.walls) {
        if (!w.active) continue;
        if (w.remove_time >= 0.0 && t_ >= w.remove_time) {
            w.active = false;
            removed = true;
            fire("wall-removed " + w.name);
            continue;
        }
        if (!w.spinning && w.spin_start > 0.0 && t_ >= w.spin_start && norm2(w.spin_omega) > 0.0) {
            w.spinning = true;
            fire("spin-start " + w.name);
        }
        any_spin = any_spin || w.spinning;
    }
    if (removed) {
        force_rebuild_ = true;
        monitor_ = SettleMonitor(cfg_.settle_threshold);
    }
    if (any_spin) advance_walls(world_.walls, dt_);
}

void Simulation::insert_due() {
    for (size_t si = 0; si < world_.streams.size(); ++si) {
        InsertRegion& r = world_.streams[si];
        if (r.inserted >= r.target_count) continue;
        if (n_steps_ % r.trigger_interval != 0) continue;
        const int n = insert_batch(world_, r, stream_rng_[si]);
        if (n > 0) {
            structure_changed_ = true;
            fire("insert " + cfg_.streams[si].name + " " + std::to_string(n) + " total " +
                 std::to_string(r.inserted));
        }
    }
}

void Simulation::rebuild_lists(const char* cause) {
    double v2 = 0.0;
    for (const Particle& p : world_.particles) v2 = std::max(v2, norm2(p.v));
    double d_skin = cfg_.skin_mult * std::sqrt(v2) * dt_;
    d_skin = std::clamp(d_skin, 0.1 * r_min_sphere_, 1.0 * r_max_sphere_);

    const CellGrid grid = build_cell_list(soa_, 2.0);
    NeighborList nl = build_verlet(grid, soa_, d_skin, cfg_.r_cut);
    wall_candidates(soa_, world_, d_skin, nl);
    if (have_list_) carry_history(nlist_, nl);
    nlist_ = std::move(nl);
    have_list_ = true;

    // Group trimesh candidates into (wall, sphere) runs for the force pass.
    mesh_cand_.clear();
    mesh_runs_.clear();
    bool any_mesh = false;
    for (size_t k = 0; k < nlist_.wall.size(); ++k) {
        if (world_.walls[nlist_.wall[k].wall].kind == WallKind::trimesh) {
            mesh_cand_.push_back(static_cast<std::int32_t>(k));
            any_mesh = true;
        }
    }
    if (any_mesh) {
        if (soa_.count() >= kMaxMeshSpheres)
            throw std::runtime_error("too many spheres for mesh contact bookkeeping");
        std::sort(mesh_cand_.begin(), mesh_cand_.end(), [&](std::int32_t a, std::int32_t b) {
            const WallCand& ca = nlist_.wall[a];
            const WallCand& cb = nlist_.wall[b];
            if (ca.wall != cb.wall) return ca.wall < cb.wall;
            if (ca.gid != cb.gid) return ca.gid < cb.gid;
            return ca.tri < cb.tri;
        });
        for (size_t b = 0; b < mesh_cand_.size();) {
            size_t e = b + 1;
            const WallCand& cb = nlist_.wall[mesh_cand_[b]];
            while (e < mesh_cand_.size()) {
                const WallCand& ce = nlist_.wall[mesh_cand_[e]];
                if (ce.wall != cb.wall || ce.gid != cb.gid) break;
                ++e;
            }
            mesh_runs_.emplace_back(static_cast<std::int32_t>(b), static_cast<std::int32_t>(e));
            b = e;
        }
        std::erase_if(mesh_hist_, [&](const auto& kv) { return kv.second.stamp < n_steps_ - 1; });
    } else if (!mesh_hist_.empty()) {
        mesh_hist_.clear();
    }

    rebuild_log_.push_back({n_steps_, cause, static_cast<int>(nlist_.pi.size()),
                            static_cast<int>(nlist_.wall.size())});
}

void Simulation::maintain_neighbors() {
    if (world_.particles.empty()) {
        have_list_ = false;
        nlist_ = NeighborList{};
        mesh_runs_.clear();
        return;
    }
    if (structure_changed_) soa_.rebuild_structure(world_);
    soa_.update_positions(world_);
    if (structure_changed_) {
        structure_changed_ = false;
        force_rebuild_ = false;
        rebuild_lists("insertion");
        return;
    }
    if (!have_list_) {
        rebuild_lists("initial");
        return;
    }
    if (force_rebuild_) {
        force_rebuild_ = false;
        rebuild_lists("wall-change");
        return;
    }
    if (needs_rebuild(soa_, nlist_)) rebuild_lists("displacement");
}

void Simulation::pair_forces() {
    const bool use_r_eq = cfg_.curvature == CurvatureModel::r_eq;
    const size_t n = nlist_.pi.size();
    for (size_t k = 0; k < n; ++k) {
        const int gi = nlist_.pi[k];
        const int gj = nlist_.pj[k];
        const double dx = soa_.x[gi] - soa_.x[gj];
        const double dy = soa_.y[gi] - soa_.y[gj];
        const double dz = soa_.z[gi] - soa_.z[gj];
        const double rsum = nlist_.rsum[k];
        if (dx * dx + dy * dy + dz * dz >= rsum * rsum) {
            nlist_.hist[k] = Vec3{};  // separated: tangential history dies
            continue;
        }
        const Vec3 Oi{soa_.x[gi], soa_.y[gi], soa_.z[gi]};
        const Vec3 Oj{soa_.x[gj], soa_.y[gj], soa_.z[gj]};
        const auto geom = sphere_sphere(Oi, soa_.r[gi], Oj, soa_.r[gj]);
        if (!geom) {
            nlist_.hist[k] = Vec3{};
            continue;
        }
        Particle& pi = world_.particles[soa_.owner[gi]];
        Particle& pj = world_.particles[soa_.owner[gj]];
        const EffectivePair& ep = ep_pp_[static_cast<size_t>(pi.tmpl) * n_tmpl_ + pj.tmpl];
        const double r_star = use_r_eq ? ep.r_star : combine_r_star(soa_.r[gi], soa_.r[gj]);
        const RelVel rv = relative_velocity(pi.v, pi.w, pi.pose.position, pj.v, pj.w,
                                            pj.pose.position, geom->p_c, geom->n);
        const NormalOut nf = normal_force(*geom, rv.vn_scalar, ep, r_star);
        const Vec3 ft = tangential_force(*geom, rv.v_t, nlist_.hist[k], nf, ep, dt_);
        accumulate(pi, &pj, nf.f + ft, geom->p_c);
        const Vec3 mr = rolling_resistance(nf.magnitude, ep, r_star, pi.w - pj.w);
        pi.t_acc = pi.t_acc + mr;
        pj.t_acc = pj.t_acc - mr;
    }
}

void Simulation::wall_forces() {
    const bool use_r_eq = cfg_.curvature == CurvatureModel::r_eq;
    const int n_walls = static_cast<int>(world_.walls.size());

    auto apply = [&](int gid, int wi, const ContactGeom& g, Vec3& hist) {
        const Wall& w = world_.walls[wi];
        Particle& pi = world_.particles[soa_.owner[gid]];
        const EffectivePair& ep = ep_pw_[static_cast<size_t>(pi.tmpl) * n_walls + wi];
        const double r_star = use_r_eq ? ep.r_star : soa_.r[gid];
        const Vec3 vw = wall_velocity(w, g.p_c);
        const RelVel rv = relative_velocity(pi.v, pi.w, pi.pose.position, vw, Vec3{}, g.p_c,
                                            g.p_c, g.n);
        const NormalOut nf = normal_force(g, rv.vn_scalar, ep, r_star);
        const Vec3 ft = tangential_force(g, rv.v_t, hist, nf, ep, dt_);
        accumulate(pi, nullptr, nf.f + ft, g.p_c);
        const Vec3 w_wall = w.spinning ? w.spin_omega : Vec3{};
        const Vec3 mr = rolling_resistance(nf.magnitude, ep, r_star, pi.w - w_wall);
        pi.t_acc = pi.t_acc + mr;
    };

    // Planes and cylinders carry their history inline with the candidates.
    for (size_t k = 0; k < nlist_.wall.size(); ++k) {
        const WallCand& cand = nlist_.wall[k];
        const Wall& w = world_.walls[cand.wall];
        if (w.kind == WallKind::trimesh) continue;
        if (!w.active) {  // retired between rebuilds
            nlist_.wall_hist[k] = Vec3{};
            continue;
        }
        const Vec3 O{soa_.x[cand.gid], soa_.y[cand.gid], soa_.z[cand.gid]};
        const double R = soa_.r[cand.gid];
        const auto geom = w.kind == WallKind::plane
                              ? sphere_plane(O, R, w.point, w.normal)
                              : sphere_cylinder(O, R, w.radius, w.p1, w.p2, w.facing_inside);
        if (!geom) {
            nlist_.wall_hist[k] = Vec3{};
            continue;
        }
        apply(cand.gid, cand.wall, *geom, nlist_.wall_hist[k]);
    }

    // Mesh walls: evaluate each run's triangles, collapse duplicate features
    // (lowest triangle wins), then apply with map-backed history.  A history
    // entry continues only if it was touched on the previous step.
    struct Hit {
        FeatureId fid;
        int tri;
        TriangleContact tc;
    };
    std::vector<Hit> hits;
    for (const auto& [b, e] : mesh_runs_) {
        const WallCand& head = nlist_.wall[mesh_cand_[b]];
        const Wall& w = world_.walls[head.wall];
        if (!w.active) continue;
        const int gid = head.gid;
        const Vec3 O{soa_.x[gid], soa_.y[gid], soa_.z[gid]};
        const double R = soa_.r[gid];
        hits.clear();
        for (int k = b; k < e; ++k) {
            const WallCand& cand = nlist_.wall[mesh_cand_[k]];
            const auto& tri = w.mesh.triangles[cand.tri];
            const Vec3& v0 = w.mesh.vertices[tri[0]];
            const Vec3& v1 = w.mesh.vertices[tri[1]];
            const Vec3& v2 = w.mesh.vertices[tri[2]];
            const Vec3 winding = cross(v1 - v0, v2 - v0);
            const auto tc = sphere_triangle(O, R, v0, v1, v2, winding);
            if (!tc) continue;
            const FeatureId fid = classify(*tc, tri, cand.tri);
            bool merged = false;
            for (Hit& h : hits) {
                if (h.fid == fid) {
                    if (cand.tri < h.tri) h = {fid, cand.tri, *tc};
                    merged = true;
                    break;
                }
            }
            if (!merged) hits.push_back({fid, cand.tri, *tc});
        }
        for (const Hit& h : hits) {
            MeshHist& mh =
                mesh_hist_[mesh_key(gid, head.wall, h.fid.type, h.fid.a, h.fid.b)];
            if (mh.stamp != n_steps_ - 1) mh.delta = Vec3{};
            apply(gid, head.wall, h.tc.geom, mh.delta);
            mh.stamp = n_steps_;
        }
    }
}

void Simulation::force_pass() {
    for (Particle& p : world_.particles) {
        p.f_acc = Vec3{};
        p.t_acc = Vec3{};
    }
    if (!have_list_ || world_.particles.empty()) return;
    pair_forces();
    wall_forces();
}

void Simulation::settle_bookkeeping() {
    if (n_steps_ % cfg_.settle_check_every != 0) return;
    if (world_.particles.empty() || !streams_exhausted()) return;
    monitor_.check(world_);
    if (!monitor_.settled()) return;

    bool removed = false;
    for (Wall& w : world_.walls) {
        if (w.active && w.remove_on_settle) {
            w.active = false;
            removed = true;
            fire("wall-removed " + w.name);
        }
    }
    if (removed) {
        force_rebuild_ = true;
        monitor_ = SettleMonitor(cfg_.settle_threshold);
        return;
    }
    bool pending = false;
    for (const Wall& w : world_.walls)
        if (w.active && (w.remove_on_settle || (w.remove_time >= 0.0 && w.remove_time > t_)))
            pending = true;
    if (cfg_.stop_when_settled && !pending && !stop_) {
        stop_ = true;
        fire("settled");
    }
}

void Simulation::step() {
    wall_schedule();
    insert_due();
    const double h = 0.5 * dt_;
    for (Particle& p : world_.particles) {
        if (p.fixed) continue;
        translation_half_kick(p, inv_mass_[p.tmpl], cfg_.gravity, h);
        rotation_half_kick(p, inertia_[p.tmpl], h);
        translation_drift(p, dt_);
        rotation_drift(p, inertia_[p.tmpl], dt_);
    }
    maintain_neighbors();
    force_pass();
    const double cap2 = cfg_.velocity_cap * cfg_.velocity_cap;
    for (Particle& p : world_.particles) {
        if (p.fixed) continue;
        translation_half_kick(p, inv_mass_[p.tmpl], cfg_.gravity, h);
        rotation_half_kick(p, inertia_[p.tmpl], h);
        if (norm2(p.v) > cap2) {
            std::ostringstream os;
            os << "numerical blow-up: particle " << p.id << " at |v| = " << norm(p.v)
               << " m/s (cap " << cfg_.velocity_cap << ") at t = " << t_ << " s, step "
               << n_steps_;
            throw std::runtime_error(os.str());
        }
    }
    ++n_steps_;
    t_ = static_cast<double>(n_steps_) * dt_;
    settle_bookkeeping();
}

void Simulation::run(const Callback& on_output) {
    long long last_out = -1;
    auto emit = [&] {
        if (on_output && n_steps_ != last_out) {
            on_output(*this);
            last_out = n_steps_;
        }
    };
    emit();
    while (!finished()) {
        step();
        if (n_steps_ % cfg_.output_every == 0) emit();
    }
    emit();
}

double Simulation::mean_speed() const {
    double sum = 0.0;
    int n = 0;
    for (const Particle& p : world_.particles) {
        if (p.fixed) continue;
        sum += norm(p.v);
        ++n;
    }
    return n > 0 ? sum / n : 0.0;
}

int Simulation::touching_pairs(std::vector<std::pair<int, int>>* out) const {
    std::vector<std::pair<int, int>> acc;
    const size_t n = nlist_.pi.size();
    for (size_t k = 0; k < n; ++k) {
        const int gi = nlist_.pi[k];
        const int gj = nlist_.pj[k];
        const double dx = soa_.x[gi] - soa_.x[gj];
        const double dy = soa_.y[gi] - soa_.y[gj];
        const double dz = soa_.z[gi] - soa_.z[gj];
        const double rsum = nlist_.rsum[k];
        if (dx * dx + dy * dy + dz * dz >= rsum * rsum) continue;
        const int oi = soa_.owner[gi];
        const int oj = soa_.owner[gj];
        acc.emplace_back(std::min(oi, oj), std::max(oi, oj));
    }
    std::sort(acc.begin(), acc.end());
    acc.erase(std::unique(acc.begin(), acc.end()), acc.end());
    if (out) *out = acc;
    return static_cast<int>(acc.size());
}

}  // namespace msdem
