// Acceptance suite.  Each criterion prints one "criterion N: PASS|FAIL" line
// plus indented measurement details, and the process exits nonzero if any
// selected criterion fails.  Invoke with --criterion N for a single one.
//
// The long packing/dam/drum scenes write their raw measurements to a result
// cache (directory in MSDEM_RESULTS, default ./acceptance_cache) so repeated
// evaluations do not re-simulate; delete the files to force fresh runs.
// Tolerances are evaluated from the cached measurements every time.
#include <cmath>
#include <cstdarg>
#include <cstdint>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "msdem/analysis.hpp"
#include "msdem/contact.hpp"
#include "msdem/force.hpp"
#include "msdem/neighbor.hpp"
#include "msdem/scene.hpp"
#include "msdem/sim.hpp"
#include "msdem/snapshot.hpp"

namespace fs = std::filesystem;
using namespace msdem;

namespace {

using Metrics = std::map<std::string, double>;

fs::path cache_dir() {
    const char* env = std::getenv("MSDEM_RESULTS");
    fs::path dir = env && *env ? fs::path(env) : fs::path("acceptance_cache");
    fs::create_directories(dir);
    return dir;
}

// Returns the cached metrics for `name`, running `compute` on a miss.
Metrics measured(const std::string& name, const std::function<Metrics()>& compute) {
    const fs::path file = cache_dir() / (name + ".txt");
    if (fs::exists(file)) {
        Metrics m;
        std::ifstream in(file);
        std::string key;
        double value = 0.0;
        while (in >> key >> value) m[key] = value;
        if (!m.empty()) {
            std::printf("    [%s: cached]\n", name.c_str());
            return m;
        }
    }
    std::printf("    [%s: simulating...]\n", name.c_str());
    std::fflush(stdout);
    const Metrics m = compute();
    const fs::path tmp = file.string() + ".tmp";
    {
        std::ofstream out(tmp);
        out.precision(17);
        for (const auto& [k, v] : m) out << k << " " << v << "\n";
    }
    fs::rename(tmp, file);
    return m;
}

bool within(double x, double target, double tol) {
    return std::abs(x - target) <= tol;
}

bool g_pass = true;
void detail(bool ok, const char* fmt, ...) {
    if (!ok) g_pass = false;
    std::printf("    %-4s ", ok ? "ok" : "MISS");
    va_list ap;
    va_start(ap, fmt);
    std::vprintf(fmt, ap);
    va_end(ap);
    std::printf("\n");
}

void verdict(int n, bool pass, const char* summary) {
    std::printf("criterion %d: %s - %s\n", n, pass ? "PASS" : "FAIL", summary);
}

// porosity through the scene's analysis extents, as the CLI measures it
double scene_porosity(const SceneConfig& cfg, const World& w, double* fill_mm) {
    const AnalysisSpec& a = cfg.analysis;
    const FillHeight fh = fill_height(w, a.lo_x, a.hi_x, a.lo_y, a.hi_y, a.stations);
    if (fill_mm) *fill_mm = fh.mean * 1e3;
    const double area =
        a.base_area > 0.0 ? a.base_area : (a.hi_x - a.lo_x) * (a.hi_y - a.lo_y);
    return porosity(w, fh.mean, area);
}

// ---------------------------------------------------------- criteria 1-3 --

double rebound_wall(double young) {
    SceneConfig cfg = load_scene("impact-wall");
    for (Material& m : cfg.materials) m.young = young;
    Simulation sim(cfg, 1);
    sim.run();
    return sim.world().particles[0].v.z;  // approach speed was 1 m/s
}

bool criterion1() {
    g_pass = true;
    const double stiff = rebound_wall(1e10);
    const double soft = rebound_wall(1.06e9);
    std::printf("criterion 1:\n");
    detail(within(stiff, 0.63, 0.02), "wall rebound at Y=10 GPa    %.4f  (want 0.63 +- 0.02)", stiff);
    detail(within(soft, 0.60, 0.01), "wall rebound at Y=1.06 GPa  %.4f  (want 0.60 +- 0.01)", soft);
    verdict(1, g_pass, "head-on particle-wall impact rebound");
    return g_pass;
}

double rebound_pp(double young) {
    SceneConfig cfg = load_scene("impact-pp");
    for (Material& m : cfg.materials) m.young = young;
    Simulation sim(cfg, 1);
    sim.run();
    return sim.world().particles[1].v.z;
}

bool criterion2() {
    g_pass = true;
    std::printf("criterion 2:\n");
    const double r10 = rebound_pp(1e10);
    const double r1 = rebound_pp(1e9);
    const double r05 = rebound_pp(5e8);
    detail(within(r10, 0.72, 0.02), "pp rebound at Y=10 GPa   %.4f  (want 0.72 +- 0.02)", r10);
    detail(within(r1, 0.72, 0.02), "pp rebound at Y=1 GPa    %.4f  (want 0.72 +- 0.02)", r1);
    detail(within(r05, 0.72, 0.02), "pp rebound at Y=0.5 GPa  %.4f  (want 0.72 +- 0.02)", r05);
    detail(std::abs(r1 - r10) / r10 <= 0.01,
           "flatness across Y in {1, 10} GPa  %.3f%%  (want <= 1%%)",
           std::abs(r1 - r10) / r10 * 100.0);

    // damping ratio of equal-overlap pp vs pw contact, straight from the
    // effective-pair tables
    const Material q{"q", 1e10, 0.3, 2500.0, 0.6, 0.0, 0.0, 0.0};
    const double R = 1e-3, mass = 4.0 / 3.0 * 3.14159265358979323846 * R * R * R * q.density;
    const EffectivePair pp = effective_pair(q, q, false, R, R, mass, mass);
    const EffectivePair pw = effective_pair(q, q, true, R, 0.0, mass, 0.0);
    const double overlap = 1e-6;
    const double g_pp =
        damping_gamma(pp.beta, pp.m_star, hertz_kn(pp.y_star, pp.r_star, overlap));
    const double g_pw =
        damping_gamma(pw.beta, pw.m_star, hertz_kn(pw.y_star, pw.r_star, overlap));
    const double ratio = g_pp / g_pw;
    const double claim = std::pow(0.5, 0.125);
    detail(within(ratio, claim, 1e-6),
           "gamma_n ratio pp/pw at equal overlap  %.6f  (claimed 0.5^(1/8) = %.6f; "
           "the half mass and half radius of the symmetric pair give 2^(-3/4) = %.6f)",
           ratio, claim, std::pow(2.0, -0.75));
    verdict(2, g_pass, "head-on particle-particle impact rebound");
    return g_pass;
}

bool criterion3() {
    g_pass = true;
    std::printf("criterion 3:\n");
    const Material q{"q", 1e10, 0.3, 2500.0, 0.6, 0.0, 0.0, 0.0};
    const double R = 2.5e-3, mass = 1.0;
    const EffectivePair ep = effective_pair(q, q, false, R, R, mass, mass);

    std::vector<double> lx, ly;
    const int n = 41;
    for (int i = 0; i < n; ++i) {
        const double overlap =
            5e-8 * std::pow(5e-6 / 5e-8, double(i) / (n - 1));
        const Vec3 oi{0, 0, 2 * R - overlap};
        const auto geom = sphere_sphere(oi, R, Vec3{}, R);
        if (!geom) {
            detail(false, "contact resolver missed overlap %.3g", overlap);
            continue;
        }
        const NormalOut nf = normal_force(*geom, 0.0, ep, ep.r_star);
        lx.push_back(std::log(overlap));
        ly.push_back(std::log(nf.magnitude));
    }
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (std::size_t i = 0; i < lx.size(); ++i) {
        sx += lx[i];
        sy += ly[i];
        sxx += lx[i] * lx[i];
        sxy += lx[i] * ly[i];
    }
    const double m = lx.size();
    const double slope = (m * sxy - sx * sy) / (m * sxx - sx * sx);
    detail(within(slope, 1.5, 0.005),
           "log-log force/overlap slope over [0.05, 5] um  %.4f  (want 1.500 +- 0.005)",
           slope);
    verdict(3, g_pass, "Hertz elastic normal-force scaling");
    return g_pass;
}

// ---------------------------------------------------------- criteria 4-6 --

// The full 600-capsule scene at dt = 5e-7 s needs several hours per seed on
// one desk-scale core (measured throughput ~7e6 sphere-steps/s against ~1e11
// sphere-steps), so the sanctioned half-count porosity-only fallback runs.
bool criterion4() {
    g_pass = true;
    std::printf("criterion 4: (half-count fallback, 300 capsules)\n");
    double sum = 0.0;
    for (std::uint64_t seed = 1; seed <= 3; ++seed) {
        const Metrics m = measured(
            "c4_capsules300_seed" + std::to_string(seed), [seed] {
                SceneConfig cfg = load_scene("pack-capsules");
                cfg.streams.at(0).region.target_count = 300;
                Simulation sim(cfg, seed);
                sim.run();
                double fill_mm = 0.0;
                const double phi = scene_porosity(cfg, sim.world(), &fill_mm);
                return Metrics{{"porosity", phi},
                               {"fill_mm", fill_mm},
                               {"settled", sim.settled() ? 1.0 : 0.0},
                               {"n", double(sim.world().particles.size())}};
            });
        std::printf("         seed %llu: porosity %.4f, fill %.1f mm, n=%.0f\n",
                    (unsigned long long)seed, m.at("porosity"), m.at("fill_mm"),
                    m.at("n"));
        sum += m.at("porosity");
    }
    const double mean = sum / 3.0;
    detail(within(mean, 0.409, 0.02),
           "mean porosity over 3 seeds  %.4f  (want 0.409 +- 0.020)", mean);
    verdict(4, g_pass, "capsule packing porosity");
    return g_pass;
}

struct ShapeTarget {
    const char* tag;
    double porosity;  // criterion 5
    double aor_deg;   // criterion 6
};
constexpr ShapeTarget kShapes[] = {
    {"sphere", 0.439, 8.7},          {"ellipsoid", 0.406, 21.5},
    {"spherocylinder", 0.413, 24.2}, {"cassini", 0.422, 18.1},
    {"torus", 0.545, 22.3},
};

bool criterion5() {
    g_pass = true;
    std::printf("criterion 5:\n");
    std::map<std::string, double> mean;
    for (const ShapeTarget& st : kShapes) {
        double sum = 0.0;
        for (std::uint64_t seed = 1; seed <= 3; ++seed) {
            const Metrics m = measured(
                std::string("c5_") + st.tag + "_seed" + std::to_string(seed),
                [&st, seed] {
                    const SceneConfig cfg =
                        load_scene(std::string("pack-shapes-") + st.tag);
                    Simulation sim(cfg, seed);
                    sim.run();
                    double fill_mm = 0.0;
                    const double phi = scene_porosity(cfg, sim.world(), &fill_mm);
                    return Metrics{{"porosity", phi},
                                   {"fill_mm", fill_mm},
                                   {"settled", sim.settled() ? 1.0 : 0.0}};
                });
            sum += m.at("porosity");
        }
        mean[st.tag] = sum / 3.0;
        detail(within(mean[st.tag], st.porosity, 0.02),
               "%-15s mean porosity %.4f  (want %.3f +- 0.020)", st.tag,
               mean[st.tag], st.porosity);
    }
    detail(mean["torus"] > mean["sphere"] && mean["torus"] > mean["ellipsoid"] &&
               mean["torus"] > mean["spherocylinder"] &&
               mean["torus"] > mean["cassini"],
           "ordering: torus highest");
    detail(mean["sphere"] > mean["ellipsoid"] &&
               mean["sphere"] > mean["spherocylinder"] &&
               mean["sphere"] > mean["cassini"],
           "ordering: sphere above the three elongated shapes");
    verdict(5, g_pass, "shape-packing porosity");
    return g_pass;
}

bool criterion6() {
    g_pass = true;
    std::printf("criterion 6:\n");
    std::map<std::string, double> aor;
    for (const ShapeTarget& st : kShapes) {
        const Metrics m =
            measured(std::string("c6_") + st.tag, [&st] {
                const SceneConfig cfg =
                    load_scene(std::string("dam-break-") + st.tag);
                Simulation sim(cfg, 1);
                sim.run();
                const double deg = angle_of_repose(
                    sim.world(), cfg.analysis.flow_axis, cfg.analysis.stations);
                return Metrics{{"aor_deg", deg},
                               {"settled", sim.settled() ? 1.0 : 0.0}};
            });
        aor[st.tag] = m.at("aor_deg");
        detail(within(aor[st.tag], st.aor_deg, 3.0),
               "%-15s angle of repose %.1f deg  (want %.1f +- 3.0)", st.tag,
               aor[st.tag], st.aor_deg);
    }
    bool smallest = true;
    for (const ShapeTarget& st : kShapes)
        if (std::strcmp(st.tag, "sphere") != 0 && aor["sphere"] >= aor[st.tag])
            smallest = false;
    detail(smallest, "ordering: sphere strictly smallest");
    verdict(6, g_pass, "dam-break angle of repose");
    return g_pass;
}

// -------------------------------------------------------------- criterion 7 --

bool criterion7() {
    g_pass = true;
    std::printf("criterion 7:\n");
    const Metrics m = measured("c7_drum", [] {
        const SceneConfig cfg = load_scene("drum");
        double spin_start = 0.0, omega = 0.0;
        double drum_r = 0.0, cap_y = 0.0;
        for (const WallSpec& w : cfg.walls) {
            spin_start = std::max(spin_start, w.wall.spin_start);
            omega = std::max(omega, norm(w.wall.spin_omega));
            if (w.wall.kind == WallKind::cylinder) drum_r = w.wall.radius;
            if (w.wall.kind == WallKind::plane)
                cap_y = std::max(cap_y, std::abs(w.wall.point.y));
        }
        const double period = 2.0 * 3.14159265358979323846 / omega;

        Simulation sim(cfg, 1);
        std::vector<int> color;  // +-1 by x sign when the drum starts turning
        double rho_max = 0.0, y_max = 0.0;
        long long n_at_spin = -1;
        double mark_t[3] = {spin_start, spin_start + period,
                            spin_start + 2.0 * period};
        double mix[3] = {-1.0, -1.0, -1.0};
        // windowed mean speeds across the second revolution
        const int n_win = 6;
        std::vector<double> win_sum(n_win, 0.0);
        std::vector<int> win_n(n_win, 0);

        std::vector<std::pair<int, int>> pairs;
        auto interfacial = [&]() {
            pairs.clear();
            sim.touching_pairs(&pairs);
            int cross = 0;
            for (const auto& [a, b] : pairs)
                if (color[std::size_t(a)] != color[std::size_t(b)]) ++cross;
            return double(cross);
        };

        while (!sim.finished()) {
            sim.step();
            const double t = sim.time();
            if (color.empty() && t >= spin_start) {
                for (const Particle& p : sim.world().particles)
                    color.push_back(p.pose.position.x > 0.0 ? 1 : -1);
                n_at_spin =
                    static_cast<long long>(sim.world().particles.size());
                mix[0] = interfacial();
            }
            if (sim.step_count() % 400 == 0 && t >= spin_start) {
                for (const Particle& p : sim.world().particles) {
                    const Vec3& c = p.pose.position;
                    rho_max = std::max(rho_max, std::hypot(c.x, c.z));
                    y_max = std::max(y_max, std::abs(c.y));
                }
                const double u = (t - mark_t[1]) / period;  // second revolution
                if (u >= 0.0 && u < 1.0) {
                    const int w = std::min(n_win - 1, int(u * n_win));
                    win_sum[std::size_t(w)] += sim.mean_speed();
                    ++win_n[std::size_t(w)];
                }
                for (int k = 1; k < 3; ++k)
                    if (mix[k] < 0.0 && t >= mark_t[k]) mix[k] = interfacial();
            }
        }
        if (mix[2] < 0.0) mix[2] = interfacial();

        double win_min = 1e300, win_max = 0.0;
        for (int k = 0; k < n_win; ++k) {
            const double v = win_n[k] ? win_sum[k] / win_n[k] : 0.0;
            win_min = std::min(win_min, v);
            win_max = std::max(win_max, v);
        }
        return Metrics{{"rho_max", rho_max},
                       {"y_max", y_max},
                       {"drum_r", drum_r},
                       {"cap_y", cap_y},
                       {"n_spin", double(n_at_spin)},
                       {"n_end", double(sim.world().particles.size())},
                       {"inserted", double(sim.inserted_total())},
                       {"speed_min", win_min},
                       {"speed_max", win_max},
                       {"mix0", mix[0]},
                       {"mix1", mix[1]},
                       {"mix2", mix[2]}};
    });

    detail(m.at("rho_max") < m.at("drum_r") && m.at("y_max") < m.at("cap_y"),
           "containment: max center radius %.4f m (< %.2f), |y| %.4f m (< %.3f)",
           m.at("rho_max"), m.at("drum_r"), m.at("y_max"), m.at("cap_y"));
    detail(m.at("n_spin") == m.at("n_end") && m.at("n_end") == m.at("inserted"),
           "mass constant: %.0f particles at spin-up, %.0f at end", m.at("n_spin"),
           m.at("n_end"));
    detail(m.at("speed_min") > 1e-3 && m.at("speed_min") >= 0.25 * m.at("speed_max"),
           "recirculating: mean speed %.3f-%.3f m/s across the second revolution",
           m.at("speed_min"), m.at("speed_max"));
    detail(m.at("mix0") <= m.at("mix1") && m.at("mix1") <= m.at("mix2"),
           "mixing proxy: interfacial contacts %.0f -> %.0f -> %.0f over revolutions",
           m.at("mix0"), m.at("mix1"), m.at("mix2"));
    verdict(7, g_pass, "rotating-drum recirculation and mixing");
    return g_pass;
}

// -------------------------------------------------------------- criterion 8 --

SphereSoA random_soa(std::mt19937_64& rng, int n, double box) {
    SphereSoA s;
    std::uniform_real_distribution<double> pos(0.0, box), rad(0.5e-3, 1.5e-3);
    for (int i = 0; i < n; ++i) {
        s.x.push_back(pos(rng));
        s.y.push_back(pos(rng));
        s.z.push_back(pos(rng));
        s.r.push_back(rad(rng));
        s.owner.push_back(i);
        s.local.push_back(0);
    }
    return s;
}

bool hybrid_matches_brute_force() {
    std::mt19937_64 rng(2024);
    for (int trial = 0; trial < 50; ++trial) {
        const SphereSoA s = random_soa(rng, 500, 0.03);
        const double d_skin = 0.5e-3, r_cut = 0.2e-3;
        const NeighborList nl =
            build_verlet(build_cell_list(s, 2.0), s, d_skin, r_cut);
        const auto bf = brute_force_pairs(s, d_skin, r_cut);
        if (nl.pi.size() != bf.size()) return false;
        for (std::size_t k = 0; k < bf.size(); ++k)
            if (nl.pi[k] != bf[k].first || nl.pj[k] != bf[k].second) return false;
    }
    return true;
}

bool no_missed_contacts() {
    std::mt19937_64 rng(7);
    const int n = 200;
    SphereSoA s = random_soa(rng, n, 0.02);
    std::uniform_real_distribution<double> vel(-0.5, 0.5);
    std::vector<Vec3> v(n);
    for (Vec3& u : v) u = {vel(rng), vel(rng), vel(rng)};
    const double dt = 1e-4;
    const double d_skin = 20.0 * 0.5 * std::sqrt(3.0) * dt;  // ~20 steps of slack

    NeighborList nl = build_verlet(build_cell_list(s, 2.0), s, d_skin, 0.0);
    for (int step = 0; step < 10000; ++step) {
        for (int i = 0; i < n; ++i) {  // drift, bouncing off the box sides
            s.x[i] += v[i].x * dt;
            s.y[i] += v[i].y * dt;
            s.z[i] += v[i].z * dt;
            if (s.x[i] < 0.0 || s.x[i] > 0.02) v[i].x = -v[i].x;
            if (s.y[i] < 0.0 || s.y[i] > 0.02) v[i].y = -v[i].y;
            if (s.z[i] < 0.0 || s.z[i] > 0.02) v[i].z = -v[i].z;
        }
        if (needs_rebuild(s, nl))
            nl = build_verlet(build_cell_list(s, 2.0), s, d_skin, 0.0);
        // every true overlap must be a listed pair
        std::size_t cursor = 0;
        for (int i = 0; i < n; ++i)
            for (int j = i + 1; j < n; ++j) {
                const double dx = s.x[i] - s.x[j], dy = s.y[i] - s.y[j],
                             dz = s.z[i] - s.z[j];
                const double rs = s.r[i] + s.r[j];
                if (dx * dx + dy * dy + dz * dz >= rs * rs) continue;
                bool found = false;
                for (; cursor < nl.pi.size(); ++cursor) {
                    if (nl.pi[cursor] == i && nl.pj[cursor] == j) {
                        found = true;
                        break;
                    }
                    if (nl.pi[cursor] > i ||
                        (nl.pi[cursor] == i && nl.pj[cursor] > j))
                        break;
                }
                if (!found) return false;
            }
    }
    return true;
}

// overlapping cluster, no gravity: internal forces must cancel exactly
bool closed_system_balance(double& rel_f, double& rel_t) {
    SceneConfig cfg;
    cfg.materials.push_back({"m", 5e7, 0.3, 1200.0, 0.6, 0.3, 0.4, 0.01});
    cfg.templates.push_back({"ell",
                             {ShapeKind::ellipsoid, 4e-3, 2e-3, 15},
                             "m",
                             "",
                             ""});
    std::mt19937_64 rng(99);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    for (int i = 0; i < 12; ++i) {
        PlacedParticle p;
        p.tmpl = "ell";
        p.pose.position = {u(rng) * 4e-3, u(rng) * 4e-3, u(rng) * 4e-3};
        p.pose.orientation = normalized(Quat{u(rng), u(rng), u(rng), u(rng)});
        p.v = {u(rng) * 0.1, u(rng) * 0.1, u(rng) * 0.1};
        p.w = {u(rng), u(rng), u(rng)};
        cfg.particles.push_back(p);
    }
    cfg.gravity = {};
    cfg.dt = 1e-7;
    cfg.steps = 1;
    Simulation sim(cfg, 1);  // construction runs one full force pass

    Vec3 f_sum{}, t_sum{};
    double f_abs = 0.0, t_abs = 0.0;
    for (const Particle& p : sim.world().particles) {
        f_sum = f_sum + p.f_acc;
        t_sum = t_sum + p.t_acc + cross(p.pose.position, p.f_acc);
        f_abs += norm(p.f_acc);
        t_abs += norm(p.t_acc) + norm(cross(p.pose.position, p.f_acc));
    }
    rel_f = f_abs > 0.0 ? norm(f_sum) / f_abs : 1.0;
    rel_t = t_abs > 0.0 ? norm(t_sum) / t_abs : 1.0;
    return f_abs > 0.0 && rel_f <= 1e-12 && rel_t <= 1e-12;
}

bool history_rotation_preserves_magnitude() {
    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    Vec3 delta{1e-5, 0.0, 0.0};
    const double mag0 = norm(delta);
    EffectivePair ep;
    ep.mu_fric = 1e12;  // keep the Coulomb cap out of the way
    NormalOut nf;
    nf.magnitude = 1.0;
    nf.k_n = 1e4;
    nf.gamma_n = 0.0;
    for (int i = 0; i < 200; ++i) {
        ContactGeom g;
        Vec3 n{u(rng), u(rng), u(rng)};
        if (norm(n) < 1e-3) continue;
        g.n = (1.0 / norm(n)) * n;
        if (std::abs(dot(g.n, delta)) > 0.99 * norm(delta)) continue;
        tangential_force(g, Vec3{}, delta, nf, ep, 0.0);
        if (std::abs(norm(delta) - mag0) > 1e-12 * mag0) return false;
    }
    return true;
}

bool tumbling_conservation(double& dL, double& dE) {
    SceneConfig cfg;
    cfg.materials.push_back({"m", 5e7, 0.3, 1200.0, 0.6, 0.0, 0.0, 0.0});
    cfg.templates.push_back({"tor", {ShapeKind::torus, 4e-3, 1.6e-3, 64}, "m", "", ""});
    PlacedParticle p;
    p.tmpl = "tor";
    p.w = {0.7, -1.3, 2.1};  // off-axis spin so the body genuinely tumbles
    cfg.particles.push_back(p);
    cfg.gravity = {};
    cfg.dt = 1e-5;
    cfg.steps = 100000;
    Simulation sim(cfg, 1);

    const Vec3 I = sim.world().templates[0].props.inertia_principal;
    auto state = [&](const Particle& q, double& L, double& E) {
        const Vec3 wb = rotate_inv(q.pose.orientation, q.w);
        const Vec3 Lb{I.x * wb.x, I.y * wb.y, I.z * wb.z};
        L = norm(Lb);  // |L| is frame independent
        E = 0.5 * (I.x * wb.x * wb.x + I.y * wb.y * wb.y + I.z * wb.z * wb.z);
    };
    double L0, E0, L1, E1;
    state(sim.world().particles[0], L0, E0);
    sim.run();
    state(sim.world().particles[0], L1, E1);
    dL = std::abs(L1 - L0) / L0;
    dE = std::abs(E1 - E0) / E0;
    return dL <= 1e-6 && dE <= 1e-6;
}

bool verlet_constant_acceleration(double& err) {
    SceneConfig cfg;
    cfg.materials.push_back({"m", 5e7, 0.3, 1200.0, 0.6, 0.0, 0.0, 0.0});
    cfg.templates.push_back({"b", {ShapeKind::sphere, 3e-3, 0.0, 1}, "m", "", ""});
    PlacedParticle p;
    p.tmpl = "b";
    p.pose.position = {0.0, 0.0, 1.0};
    p.v = {0.4, 0.0, 1.2};
    cfg.particles.push_back(p);
    cfg.gravity = {0.0, 0.0, -9.81};
    cfg.dt = 1e-4;
    cfg.steps = 5000;
    Simulation sim(cfg, 1);
    sim.run();
    const double t = sim.time();
    const Particle& q = sim.world().particles[0];
    const double zc = 1.0 + 1.2 * t - 0.5 * 9.81 * t * t;
    const double vc = 1.2 - 9.81 * t;
    err = std::max({std::abs(q.pose.position.z - zc) / std::abs(zc),
                    std::abs(q.v.z - vc) / std::abs(vc),
                    std::abs(q.pose.position.x - 0.4 * t) / (0.4 * t)});
    return err <= 1e-12;
}

std::string settled_state(std::uint64_t seed) {
    SceneConfig cfg = parse_scene(
        "scene det\n"
        "material m\n  young 5e7\n  poisson 0.3\n  density 1000\n"
        "  restitution 0.6\n  mu_pw 0.3\n  mu_pp 0.4\n  mu_roll 0\nend\n"
        "template ball\n  kind sphere\n  material m\n  p1 0.003\n"
        "  p2 0\n  n_spheres 1\nend\n"
        "wall floor\n  kind plane\n  material m\n  point 0 0 0\n"
        "  normal 0 0 1\nend\n"
        "stream s\n  template ball\n  region box 0 0 0.02 0.05 0.05 0.05\n"
        "  velocity 0 0 0\n  trigger_interval 400\n  min_batch 5\n"
        "  max_batch 9\n  target 30\nend\n"
        "gravity 0 0 -9.81\ndt 4e-6\nsteps 20000\n",
        "det");
    Simulation sim(cfg, seed);
    sim.run();
    std::ostringstream os;
    append_snapshot(os, sim.world(), sim.time(), true);
    return os.str();
}

bool criterion8() {
    g_pass = true;
    std::printf("criterion 8:\n");
    detail(hybrid_matches_brute_force(),
           "hybrid list == brute force on 50 random 500-sphere configurations");
    detail(no_missed_contacts(),
           "no overlap missed across 10^4 steps of random drift");
    double rf, rt;
    const bool closed = closed_system_balance(rf, rt);
    detail(closed, "closed-system force/torque balance  %.2e / %.2e  (want <= 1e-12)",
           rf, rt);
    detail(history_rotation_preserves_magnitude(),
           "tangential history rotation preserves magnitude to 1e-12");
    double dL, dE;
    const bool cons = tumbling_conservation(dL, dE);
    detail(cons, "torque-free tumble over 1e5 steps  d|L| %.2e, dE %.2e  (want <= 1e-6)",
           dL, dE);
    double verr;
    const bool vv = verlet_constant_acceleration(verr);
    detail(vv, "constant-acceleration integration error  %.2e  (want <= 1e-12)", verr);
    const std::string a = settled_state(11), b = settled_state(11),
                      c = settled_state(12);
    detail(a == b && a != c, "seeded reruns byte-identical, seeds distinct");
    verdict(8, g_pass, "property suites");
    return g_pass;
}

} // namespace

int main(int argc, char** argv) {
    int only = 0;
    for (int i = 1; i < argc; ++i)
        if (std::strcmp(argv[i], "--criterion") == 0 && i + 1 < argc)
            only = std::atoi(argv[i + 1]);

    bool (*const fns[])() = {criterion1, criterion2, criterion3, criterion4,
                             criterion5, criterion6, criterion7, criterion8};
    bool all = true;
    for (int n = 1; n <= 8; ++n) {
        if (only != 0 && only != n) continue;
        all = fns[n - 1]() && all;
    }
    return all ? 0 : 1;
}
