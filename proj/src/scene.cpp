#include "msdem/scene.hpp"

#include <algorithm>
#include <charconv>
#include <climits>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace msdem {

namespace {

// ------------------------------------------------------------ tokenizing ---

struct Line {
    int no = 0;
    std::vector<std::string> tok;
};

struct Ctx {
    std::string origin;
    [[noreturn]] void fail(int line, const std::string& msg) const {
        throw std::runtime_error(origin + ":" + std::to_string(line) + ": " + msg);
    }
};

std::vector<Line> tokenize(const std::string& text) {
    std::vector<Line> out;
    std::istringstream ss(text);
    std::string raw;
    int no = 0;
    while (std::getline(ss, raw)) {
        ++no;
        if (const auto hash = raw.find('#'); hash != std::string::npos) raw.erase(hash);
        std::istringstream ls(raw);
        Line ln;
        ln.no = no;
        std::string t;
        while (ls >> t) ln.tok.push_back(t);
        if (!ln.tok.empty()) out.push_back(std::move(ln));
    }
    return out;
}

void expect_args(const Ctx& c, const Line& ln, size_t n) {
    if (ln.tok.size() != n + 1)
        c.fail(ln.no, "'" + ln.tok[0] + "' expects " + std::to_string(n) + " argument(s), got " +
                          std::to_string(ln.tok.size() - 1));
}

double to_num(const Ctx& c, const Line& ln, size_t k) {
    const std::string& s = ln.tok[k];
    double v = 0.0;
    const auto r = std::from_chars(s.data(), s.data() + s.size(), v);
    if (r.ec != std::errc{} || r.ptr != s.data() + s.size())
        c.fail(ln.no, "'" + ln.tok[0] + "': not a number: '" + s + "'");
    if (!std::isfinite(v)) c.fail(ln.no, "'" + ln.tok[0] + "': non-finite value");
    return v;
}

long long to_ll(const Ctx& c, const Line& ln, size_t k) {
    const std::string& s = ln.tok[k];
    long long v = 0;
    const auto r = std::from_chars(s.data(), s.data() + s.size(), v);
    if (r.ec != std::errc{} || r.ptr != s.data() + s.size())
        c.fail(ln.no, "'" + ln.tok[0] + "': not an integer: '" + s + "'");
    return v;
}

int to_int(const Ctx& c, const Line& ln, size_t k) {
    const long long v = to_ll(c, ln, k);
    if (v < INT_MIN || v > INT_MAX) c.fail(ln.no, "'" + ln.tok[0] + "': integer out of range");
    return static_cast<int>(v);
}

std::uint64_t to_u64(const Ctx& c, const Line& ln, size_t k) {
    const std::string& s = ln.tok[k];
    std::uint64_t v = 0;
    const auto r = std::from_chars(s.data(), s.data() + s.size(), v);
    if (r.ec != std::errc{} || r.ptr != s.data() + s.size())
        c.fail(ln.no, "'" + ln.tok[0] + "': not an unsigned integer: '" + s + "'");
    return v;
}

bool to_bool(const Ctx& c, const Line& ln, size_t k) {
    const std::string& s = ln.tok[k];
    if (s == "1" || s == "true") return true;
    if (s == "0" || s == "false") return false;
    c.fail(ln.no, "'" + ln.tok[0] + "': expected 0/1/true/false, got '" + s + "'");
}

Vec3 to_vec3(const Ctx& c, const Line& ln, size_t k) {
    return {to_num(c, ln, k), to_num(c, ln, k + 1), to_num(c, ln, k + 2)};
}

ShapeKind to_kind(const Ctx& c, const Line& ln, size_t k) {
    const std::string& s = ln.tok[k];
    if (s == "sphere") return ShapeKind::sphere;
    if (s == "ellipsoid") return ShapeKind::ellipsoid;
    if (s == "spherocylinder") return ShapeKind::spherocylinder;
    if (s == "cassini") return ShapeKind::cassini;
    if (s == "torus") return ShapeKind::torus;
    c.fail(ln.no, "unknown shape kind '" + s + "'");
}

const char* kind_name(ShapeKind k) {
    switch (k) {
        case ShapeKind::sphere: return "sphere";
        case ShapeKind::ellipsoid: return "ellipsoid";
        case ShapeKind::spherocylinder: return "spherocylinder";
        case ShapeKind::cassini: return "cassini";
        case ShapeKind::torus: return "torus";
    }
    return "?";
}

// ---------------------------------------------------------- block parsers ---

// Each reads lines after the block header until 'end', returning the index of
// the line past 'end'.

size_t parse_material(const Ctx& c, const std::vector<Line>& L, size_t i, Material& m) {
    std::set<std::string> seen;
    for (; i < L.size(); ++i) {
        const Line& ln = L[i];
        const std::string& key = ln.tok[0];
        if (key == "end") return i + 1;
        if (key == "young" || key == "poisson" || key == "density" || key == "restitution" ||
            key == "mu_pw" || key == "mu_pp" || key == "mu_roll") {
            expect_args(c, ln, 1);
            const double v = to_num(c, ln, 1);
            seen.insert(key);
            if (key == "young") m.young = v;
            else if (key == "poisson") m.poisson = v;
            else if (key == "density") m.density = v;
            else if (key == "restitution") m.restitution = v;
            else if (key == "mu_pw") m.mu_pw = v;
            else if (key == "mu_pp") m.mu_pp = v;
            else m.mu_roll = v;
        } else {
            c.fail(ln.no, "unknown key '" + key + "' in material '" + m.name + "'");
        }
    }
    c.fail(L.back().no, "material '" + m.name + "': missing 'end'");
}

size_t parse_template(const Ctx& c, const std::vector<Line>& L, size_t i, TemplateSpec& t) {
    bool have_kind = false;
    for (; i < L.size(); ++i) {
        const Line& ln = L[i];
        const std::string& key = ln.tok[0];
        if (key == "end") {
            if (!have_kind) c.fail(ln.no, "template '" + t.name + "': missing 'kind'");
            return i + 1;
        }
        if (key == "kind") {
            expect_args(c, ln, 1);
            t.shape.kind = to_kind(c, ln, 1);
            have_kind = true;
        } else if (key == "material") {
            expect_args(c, ln, 1);
            t.material = ln.tok[1];
        } else if (key == "p1") {
            expect_args(c, ln, 1);
            t.shape.p1 = to_num(c, ln, 1);
        } else if (key == "p2") {
            expect_args(c, ln, 1);
            t.shape.p2 = to_num(c, ln, 1);
        } else if (key == "n_spheres") {
            expect_args(c, ln, 1);
            t.shape.n_spheres = to_int(c, ln, 1);
        } else if (key == "surface_mesh") {
            expect_args(c, ln, 1);
            t.surface_mesh = ln.tok[1];
        } else if (key == "cell_mesh") {
            expect_args(c, ln, 1);
            t.cell_mesh = ln.tok[1];
        } else {
            c.fail(ln.no, "unknown key '" + key + "' in template '" + t.name + "'");
        }
    }
    c.fail(L.back().no, "template '" + t.name + "': missing 'end'");
}

size_t parse_wall(const Ctx& c, const std::vector<Line>& L, size_t i, WallSpec& ws) {
    Wall& w = ws.wall;
    bool have_kind = false;
    for (; i < L.size(); ++i) {
        const Line& ln = L[i];
        const std::string& key = ln.tok[0];
        if (key == "end") {
            if (!have_kind) c.fail(ln.no, "wall '" + ws.name + "': missing 'kind'");
            return i + 1;
        }
        if (key == "kind") {
            expect_args(c, ln, 1);
            const std::string& s = ln.tok[1];
            if (s == "plane") w.kind = WallKind::plane;
            else if (s == "cylinder") w.kind = WallKind::cylinder;
            else if (s == "trimesh") w.kind = WallKind::trimesh;
            else c.fail(ln.no, "unknown wall kind '" + s + "'");
            have_kind = true;
        } else if (key == "material") {
            expect_args(c, ln, 1);
            ws.material = ln.tok[1];
        } else if (key == "point") {
            expect_args(c, ln, 3);
            w.point = to_vec3(c, ln, 1);
        } else if (key == "normal") {
            expect_args(c, ln, 3);
            w.normal = to_vec3(c, ln, 1);
        } else if (key == "axis") {
            expect_args(c, ln, 6);
            w.p1 = to_vec3(c, ln, 1);
            w.p2 = to_vec3(c, ln, 4);
        } else if (key == "radius") {
            expect_args(c, ln, 1);
            w.radius = to_num(c, ln, 1);
        } else if (key == "facing") {
            expect_args(c, ln, 1);
            const std::string& s = ln.tok[1];
            if (s == "inside") w.facing_inside = true;
            else if (s == "outside") w.facing_inside = false;
            else c.fail(ln.no, "'facing': expected inside or outside, got '" + s + "'");
        } else if (key == "mesh") {
            expect_args(c, ln, 1);
            ws.mesh_path = ln.tok[1];
        } else if (key == "spin_point") {
            expect_args(c, ln, 3);
            w.spin_point = to_vec3(c, ln, 1);
        } else if (key == "spin_omega") {
            expect_args(c, ln, 3);
            w.spin_omega = to_vec3(c, ln, 1);
        } else if (key == "spin_start") {
            expect_args(c, ln, 1);
            w.spin_start = to_num(c, ln, 1);
        } else if (key == "remove_time") {
            expect_args(c, ln, 1);
            w.remove_time = to_num(c, ln, 1);
        } else if (key == "remove_on_settle") {
            expect_args(c, ln, 1);
            w.remove_on_settle = to_bool(c, ln, 1);
        } else {
            c.fail(ln.no, "unknown key '" + key + "' in wall '" + ws.name + "'");
        }
    }
    c.fail(L.back().no, "wall '" + ws.name + "': missing 'end'");
}

size_t parse_stream(const Ctx& c, const std::vector<Line>& L, size_t i, StreamSpec& ss) {
    InsertRegion& r = ss.region;
    bool have_region = false;
    for (; i < L.size(); ++i) {
        const Line& ln = L[i];
        const std::string& key = ln.tok[0];
        if (key == "end") {
            if (!have_region) c.fail(ln.no, "stream '" + ss.name + "': missing 'region'");
            return i + 1;
        }
        if (key == "template") {
            expect_args(c, ln, 1);
            ss.tmpl = ln.tok[1];
        } else if (key == "region") {
            if (ln.tok.size() < 2) c.fail(ln.no, "'region' expects box or cylinder form");
            const std::string& form = ln.tok[1];
            if (form == "box") {
                expect_args(c, ln, 7);
                r.is_box = true;
                r.lo = to_vec3(c, ln, 2);
                r.hi = to_vec3(c, ln, 5);
            } else if (form == "cylinder") {
                expect_args(c, ln, 8);
                r.is_box = false;
                r.cp1 = to_vec3(c, ln, 2);
                r.cp2 = to_vec3(c, ln, 5);
                r.radius = to_num(c, ln, 8);
            } else {
                c.fail(ln.no, "'region': expected box or cylinder, got '" + form + "'");
            }
            have_region = true;
        } else if (key == "velocity") {
            expect_args(c, ln, 3);
            r.velocity = to_vec3(c, ln, 1);
        } else if (key == "trigger_interval") {
            expect_args(c, ln, 1);
            r.trigger_interval = to_int(c, ln, 1);
        } else if (key == "min_batch") {
            expect_args(c, ln, 1);
            r.min_batch = to_int(c, ln, 1);
        } else if (key == "max_batch") {
            expect_args(c, ln, 1);
            r.max_batch = to_int(c, ln, 1);
        } else if (key == "target") {
            expect_args(c, ln, 1);
            r.target_count = to_int(c, ln, 1);
        } else if (key == "seed") {
            expect_args(c, ln, 1);
            r.seed = to_u64(c, ln, 1);
            ss.seed_set = true;
        } else {
            c.fail(ln.no, "unknown key '" + key + "' in stream '" + ss.name + "'");
        }
    }
    c.fail(L.back().no, "stream '" + ss.name + "': missing 'end'");
}

size_t parse_particle(const Ctx& c, const std::vector<Line>& L, size_t i, PlacedParticle& p) {
    for (; i < L.size(); ++i) {
        const Line& ln = L[i];
        const std::string& key = ln.tok[0];
        if (key == "end") return i + 1;
        if (key == "template") {
            expect_args(c, ln, 1);
            p.tmpl = ln.tok[1];
        } else if (key == "position") {
            expect_args(c, ln, 3);
            p.pose.position = to_vec3(c, ln, 1);
        } else if (key == "orientation") {
            expect_args(c, ln, 4);
            Quat q{to_num(c, ln, 1), to_num(c, ln, 2), to_num(c, ln, 3), to_num(c, ln, 4)};
            if (norm(q) < 1e-12) c.fail(ln.no, "'orientation': zero quaternion");
            p.pose.orientation = normalized(q);
        } else if (key == "velocity") {
            expect_args(c, ln, 3);
            p.v = to_vec3(c, ln, 1);
        } else if (key == "angular") {
            expect_args(c, ln, 3);
            p.w = to_vec3(c, ln, 1);
        } else if (key == "fixed") {
            expect_args(c, ln, 1);
            p.fixed = to_bool(c, ln, 1);
        } else {
            c.fail(ln.no, "unknown key '" + key + "' in particle block");
        }
    }
    c.fail(L.back().no, "particle block: missing 'end'");
}

size_t parse_analysis(const Ctx& c, const std::vector<Line>& L, size_t i, AnalysisSpec& a) {
    for (; i < L.size(); ++i) {
        const Line& ln = L[i];
        const std::string& key = ln.tok[0];
        if (key == "end") return i + 1;
        if (key == "extent_x") {
            expect_args(c, ln, 2);
            a.lo_x = to_num(c, ln, 1);
            a.hi_x = to_num(c, ln, 2);
        } else if (key == "extent_y") {
            expect_args(c, ln, 2);
            a.lo_y = to_num(c, ln, 1);
            a.hi_y = to_num(c, ln, 2);
        } else if (key == "base_area") {
            expect_args(c, ln, 1);
            a.base_area = to_num(c, ln, 1);
        } else if (key == "stations") {
            expect_args(c, ln, 1);
            a.stations = to_int(c, ln, 1);
        } else if (key == "flow_axis") {
            expect_args(c, ln, 1);
            const std::string& s = ln.tok[1];
            if (s == "x") a.flow_axis = 0;
            else if (s == "y") a.flow_axis = 1;
            else c.fail(ln.no, "'flow_axis': expected x or y, got '" + s + "'");
        } else {
            c.fail(ln.no, "unknown key '" + key + "' in analysis block");
        }
    }
    c.fail(L.back().no, "analysis block: missing 'end'");
}

// ------------------------------------------------------------- validation ---

void check(const Ctx& c, bool ok, const std::string& field, const std::string& why) {
    if (!ok) throw std::runtime_error(c.origin + ": invalid '" + field + "': " + why);
}

void validate(const Ctx& c, SceneConfig& cfg) {
    std::set<std::string> names;
    for (const Material& m : cfg.materials) {
        const std::string f = "material " + m.name;
        check(c, names.insert(m.name).second, f, "duplicate name");
        check(c, m.young > 0.0, f + ".young", "must be > 0");
        check(c, m.poisson >= 0.0 && m.poisson < 0.5, f + ".poisson", "must be in [0, 0.5)");
        check(c, m.density > 0.0, f + ".density", "must be > 0");
        check(c, m.restitution > 0.0 && m.restitution <= 1.0, f + ".restitution", "must be in (0, 1]");
        check(c, m.mu_pw >= 0.0 && m.mu_pp >= 0.0 && m.mu_roll >= 0.0, f + ".mu", "must be >= 0");
    }
    names.clear();
    for (const TemplateSpec& t : cfg.templates) {
        const std::string f = "template " + t.name;
        check(c, names.insert(t.name).second, f, "duplicate name");
        check(c, cfg.material_index(t.material) >= 0, f + ".material",
              "undefined material '" + t.material + "'");
        check(c, t.shape.p1 > 0.0, f + ".p1", "must be > 0");
        if (t.shape.kind != ShapeKind::sphere) check(c, t.shape.p2 >= 0.0, f + ".p2", "must be >= 0");
        check(c, t.shape.n_spheres >= 1, f + ".n_spheres", "must be >= 1");
    }
    for (const WallSpec& ws : cfg.walls) {
        const std::string f = "wall " + ws.name;
        check(c, cfg.material_index(ws.material) >= 0, f + ".material",
              "undefined material '" + ws.material + "'");
        const Wall& w = ws.wall;
        if (w.kind == WallKind::plane) {
            check(c, norm2(w.normal) > 0.0, f + ".normal", "must be nonzero");
        } else if (w.kind == WallKind::cylinder) {
            check(c, w.radius > 0.0, f + ".radius", "must be > 0");
            check(c, norm2(w.p2 - w.p1) > 0.0, f + ".axis", "degenerate axis");
        } else {
            check(c, !ws.mesh_path.empty(), f + ".mesh", "trimesh wall needs a mesh path");
        }
        check(c, w.spin_start >= 0.0, f + ".spin_start", "must be >= 0");
    }
    names.clear();
    for (const StreamSpec& ss : cfg.streams) {
        const std::string f = "stream " + ss.name;
        check(c, names.insert(ss.name).second, f, "duplicate name");
        check(c, cfg.template_index(ss.tmpl) >= 0, f + ".template",
              "undefined template '" + ss.tmpl + "'");
        const InsertRegion& r = ss.region;
        if (r.is_box) {
            check(c, r.lo.x < r.hi.x && r.lo.y < r.hi.y && r.lo.z < r.hi.z, f + ".region",
                  "box must have lo < hi on every axis");
        } else {
            check(c, r.radius > 0.0, f + ".region", "cylinder radius must be > 0");
            check(c, norm2(r.cp2 - r.cp1) > 0.0, f + ".region", "degenerate cylinder axis");
        }
        check(c, r.trigger_interval >= 1, f + ".trigger_interval", "must be >= 1");
        check(c, r.min_batch >= 1 && r.min_batch <= r.max_batch, f + ".min_batch/max_batch",
              "need 1 <= min <= max");
        check(c, r.target_count >= 0, f + ".target", "must be >= 0");
    }
    for (size_t k = 0; k < cfg.particles.size(); ++k) {
        const PlacedParticle& p = cfg.particles[k];
        const std::string f = "particle #" + std::to_string(k + 1);
        check(c, cfg.template_index(p.tmpl) >= 0, f + ".template",
              "undefined template '" + p.tmpl + "'");
        if (p.fixed)
            check(c, norm2(p.v) == 0.0 && norm2(p.w) == 0.0, f + ".fixed",
                  "fixed particles must start at rest");
    }
    check(c, cfg.dt >= 0.0, "dt", "must be >= 0 (0 = derive)");
    check(c, cfg.duration >= 0.0, "duration", "must be >= 0");
    check(c, cfg.steps >= 0, "steps", "must be >= 0");
    check(c, cfg.output_every >= 1, "output_every", "must be >= 1");
    check(c, cfg.velocity_cap > 0.0, "velocity_cap", "must be > 0");
    check(c, cfg.settle_threshold > 0.0, "settle_threshold", "must be > 0");
    check(c, cfg.settle_check_every >= 1, "settle_check_every", "must be >= 1");
    check(c, cfg.n_div >= 10 && cfg.n_div <= 100, "n_div", "must be in [10, 100]");
    check(c, cfg.r_cut >= 0.0, "r_cut", "must be >= 0");
    check(c, cfg.skin_mult > 0.0, "skin_mult", "must be > 0");
    check(c, cfg.analysis.stations >= 100, "analysis.stations", "must be >= 100");
    check(c, cfg.analysis.base_area >= 0.0, "analysis.base_area", "must be >= 0");
    check(c, cfg.analysis.lo_x <= cfg.analysis.hi_x && cfg.analysis.lo_y <= cfg.analysis.hi_y,
          "analysis.extent", "lo must be <= hi");

    // A wall spins only if it has a spin axis and no deferred start; deferred
    // spins are switched on by the driver at spin_start.
    for (WallSpec& ws : cfg.walls)
        ws.wall.spinning = norm2(ws.wall.spin_omega) > 0.0 && ws.wall.spin_start == 0.0;
    for (WallSpec& ws : cfg.walls)
        if (ws.wall.remove_time < 0.0) ws.wall.remove_time = -1.0;
}

// ------------------------------------------------------------- serializing --

std::string fmt(double v) {
    char b[40];
    const auto r = std::to_chars(b, b + sizeof(b), v);
    return std::string(b, r.ptr);
}

std::string fmt(const Vec3& v) { return fmt(v.x) + " " + fmt(v.y) + " " + fmt(v.z); }

}  // namespace

int SceneConfig::material_index(const std::string& nm) const {
    for (size_t i = 0; i < materials.size(); ++i)
        if (materials[i].name == nm) return static_cast<int>(i);
    return -1;
}

int SceneConfig::template_index(const std::string& nm) const {
    for (size_t i = 0; i < templates.size(); ++i)
        if (templates[i].name == nm) return static_cast<int>(i);
    return -1;
}

SceneConfig parse_scene(const std::string& text, const std::string& origin) {
    const Ctx c{origin};
    const std::vector<Line> L = tokenize(text);
    SceneConfig cfg;
    std::set<std::string> scalars_seen;

    auto scalar_once = [&](const Line& ln) {
        if (!scalars_seen.insert(ln.tok[0]).second)
            c.fail(ln.no, "duplicate key '" + ln.tok[0] + "'");
    };

    size_t i = 0;
    while (i < L.size()) {
        const Line& ln = L[i];
        const std::string& key = ln.tok[0];
        if (key == "scene") {
            expect_args(c, ln, 1);
            scalar_once(ln);
            cfg.name = ln.tok[1];
            ++i;
        } else if (key == "material") {
            expect_args(c, ln, 1);
            Material m;
            m.name = ln.tok[1];
            i = parse_material(c, L, i + 1, m);
            cfg.materials.push_back(std::move(m));
        } else if (key == "template") {
            expect_args(c, ln, 1);
            TemplateSpec t;
            t.name = ln.tok[1];
            i = parse_template(c, L, i + 1, t);
            cfg.templates.push_back(std::move(t));
        } else if (key == "wall") {
            expect_args(c, ln, 1);
            WallSpec ws;
            ws.name = ln.tok[1];
            i = parse_wall(c, L, i + 1, ws);
            cfg.walls.push_back(std::move(ws));
        } else if (key == "stream") {
            expect_args(c, ln, 1);
            StreamSpec ss;
            ss.name = ln.tok[1];
            i = parse_stream(c, L, i + 1, ss);
            cfg.streams.push_back(std::move(ss));
        } else if (key == "particle") {
            expect_args(c, ln, 0);
            PlacedParticle p;
            i = parse_particle(c, L, i + 1, p);
            cfg.particles.push_back(std::move(p));
        } else if (key == "analysis") {
            expect_args(c, ln, 0);
            i = parse_analysis(c, L, i + 1, cfg.analysis);
        } else if (key == "gravity") {
            expect_args(c, ln, 3);
            scalar_once(ln);
            cfg.gravity = to_vec3(c, ln, 1);
            ++i;
        } else if (key == "dt") {
            expect_args(c, ln, 1);
            scalar_once(ln);
            cfg.dt = to_num(c, ln, 1);
            ++i;
        } else if (key == "duration") {
            expect_args(c, ln, 1);
            scalar_once(ln);
            cfg.duration = to_num(c, ln, 1);
            ++i;
        } else if (key == "steps") {
            expect_args(c, ln, 1);
            scalar_once(ln);
            cfg.steps = to_ll(c, ln, 1);
            ++i;
        } else if (key == "output_every") {
            expect_args(c, ln, 1);
            scalar_once(ln);
            cfg.output_every = to_int(c, ln, 1);
            ++i;
        } else if (key == "seed") {
            expect_args(c, ln, 1);
            scalar_once(ln);
            cfg.seed = to_u64(c, ln, 1);
            ++i;
        } else if (key == "velocity_cap") {
            expect_args(c, ln, 1);
            scalar_once(ln);
            cfg.velocity_cap = to_num(c, ln, 1);
            ++i;
        } else if (key == "stop_when_settled") {
            expect_args(c, ln, 1);
            scalar_once(ln);
            cfg.stop_when_settled = to_bool(c, ln, 1);
            ++i;
        } else if (key == "settle_threshold") {
            expect_args(c, ln, 1);
            scalar_once(ln);
            cfg.settle_threshold = to_num(c, ln, 1);
            ++i;
        } else if (key == "settle_check_every") {
            expect_args(c, ln, 1);
            scalar_once(ln);
            cfg.settle_check_every = to_int(c, ln, 1);
            ++i;
        } else if (key == "n_div") {
            expect_args(c, ln, 1);
            scalar_once(ln);
            cfg.n_div = to_int(c, ln, 1);
            ++i;
        } else if (key == "r_cut") {
            expect_args(c, ln, 1);
            scalar_once(ln);
            cfg.r_cut = to_num(c, ln, 1);
            ++i;
        } else if (key == "skin_mult") {
            expect_args(c, ln, 1);
            scalar_once(ln);
            cfg.skin_mult = to_num(c, ln, 1);
            ++i;
        } else if (key == "curvature") {
            expect_args(c, ln, 1);
            scalar_once(ln);
            const std::string& s = ln.tok[1];
            if (s == "r_eq") cfg.curvature = CurvatureModel::r_eq;
            else if (s == "r_sph") cfg.curvature = CurvatureModel::r_sph;
            else c.fail(ln.no, "'curvature': expected r_eq or r_sph, got '" + s + "'");
            ++i;
        } else {
            c.fail(ln.no, "unknown key '" + key + "'");
        }
    }
    validate(c, cfg);
    return cfg;
}

std::string serialize_scene(const SceneConfig& cfg) {
    std::ostringstream os;
    os << "scene " << cfg.name << "\n";
    for (const Material& m : cfg.materials) {
        os << "\nmaterial " << m.name << "\n"
           << "  young " << fmt(m.young) << "\n"
           << "  poisson " << fmt(m.poisson) << "\n"
           << "  density " << fmt(m.density) << "\n"
           << "  restitution " << fmt(m.restitution) << "\n"
           << "  mu_pw " << fmt(m.mu_pw) << "\n"
           << "  mu_pp " << fmt(m.mu_pp) << "\n"
           << "  mu_roll " << fmt(m.mu_roll) << "\n"
           << "end\n";
    }
    for (const TemplateSpec& t : cfg.templates) {
        os << "\ntemplate " << t.name << "\n"
           << "  kind " << kind_name(t.shape.kind) << "\n"
           << "  material " << t.material << "\n"
           << "  p1 " << fmt(t.shape.p1) << "\n"
           << "  p2 " << fmt(t.shape.p2) << "\n"
           << "  n_spheres " << t.shape.n_spheres << "\n";
        if (!t.surface_mesh.empty()) os << "  surface_mesh " << t.surface_mesh << "\n";
        if (!t.cell_mesh.empty()) os << "  cell_mesh " << t.cell_mesh << "\n";
        os << "end\n";
    }
    for (const WallSpec& ws : cfg.walls) {
        const Wall& w = ws.wall;
        os << "\nwall " << ws.name << "\n";
        if (w.kind == WallKind::plane) {
            os << "  kind plane\n  material " << ws.material << "\n"
               << "  point " << fmt(w.point) << "\n"
               << "  normal " << fmt(w.normal) << "\n";
        } else if (w.kind == WallKind::cylinder) {
            os << "  kind cylinder\n  material " << ws.material << "\n"
               << "  axis " << fmt(w.p1) << " " << fmt(w.p2) << "\n"
               << "  radius " << fmt(w.radius) << "\n"
               << "  facing " << (w.facing_inside ? "inside" : "outside") << "\n";
        } else {
            os << "  kind trimesh\n  material " << ws.material << "\n"
               << "  mesh " << ws.mesh_path << "\n";
        }
        if (!(w.spin_point == Vec3{})) os << "  spin_point " << fmt(w.spin_point) << "\n";
        if (!(w.spin_omega == Vec3{})) os << "  spin_omega " << fmt(w.spin_omega) << "\n";
        if (w.spin_start > 0.0) os << "  spin_start " << fmt(w.spin_start) << "\n";
        if (w.remove_time >= 0.0) os << "  remove_time " << fmt(w.remove_time) << "\n";
        if (w.remove_on_settle) os << "  remove_on_settle 1\n";
        os << "end\n";
    }
    for (const StreamSpec& ss : cfg.streams) {
        const InsertRegion& r = ss.region;
        os << "\nstream " << ss.name << "\n"
           << "  template " << ss.tmpl << "\n";
        if (r.is_box) os << "  region box " << fmt(r.lo) << " " << fmt(r.hi) << "\n";
        else os << "  region cylinder " << fmt(r.cp1) << " " << fmt(r.cp2) << " " << fmt(r.radius) << "\n";
        os << "  velocity " << fmt(r.velocity) << "\n"
           << "  trigger_interval " << r.trigger_interval << "\n"
           << "  min_batch " << r.min_batch << "\n"
           << "  max_batch " << r.max_batch << "\n"
           << "  target " << r.target_count << "\n";
        if (ss.seed_set) os << "  seed " << r.seed << "\n";
        os << "end\n";
    }
    for (const PlacedParticle& p : cfg.particles) {
        os << "\nparticle\n"
           << "  template " << p.tmpl << "\n"
           << "  position " << fmt(p.pose.position) << "\n"
           << "  orientation " << fmt(p.pose.orientation.w) << " " << fmt(p.pose.orientation.x)
           << " " << fmt(p.pose.orientation.y) << " " << fmt(p.pose.orientation.z) << "\n"
           << "  velocity " << fmt(p.v) << "\n"
           << "  angular " << fmt(p.w) << "\n";
        if (p.fixed) os << "  fixed 1\n";
        os << "end\n";
    }
    const AnalysisSpec def;
    const AnalysisSpec& a = cfg.analysis;
    const bool analysis_default = a.lo_x == def.lo_x && a.hi_x == def.hi_x && a.lo_y == def.lo_y &&
                                  a.hi_y == def.hi_y && a.base_area == def.base_area &&
                                  a.stations == def.stations && a.flow_axis == def.flow_axis;
    if (!analysis_default) {
        os << "\nanalysis\n"
           << "  extent_x " << fmt(a.lo_x) << " " << fmt(a.hi_x) << "\n"
           << "  extent_y " << fmt(a.lo_y) << " " << fmt(a.hi_y) << "\n"
           << "  base_area " << fmt(a.base_area) << "\n"
           << "  stations " << a.stations << "\n"
           << "  flow_axis " << (a.flow_axis == 0 ? "x" : "y") << "\n"
           << "end\n";
    }
    os << "\ngravity " << fmt(cfg.gravity) << "\n"
       << "dt " << fmt(cfg.dt) << "\n"
       << "duration " << fmt(cfg.duration) << "\n"
       << "steps " << cfg.steps << "\n"
       << "output_every " << cfg.output_every << "\n"
       << "seed " << cfg.seed << "\n"
       << "velocity_cap " << fmt(cfg.velocity_cap) << "\n"
       << "stop_when_settled " << (cfg.stop_when_settled ? 1 : 0) << "\n"
       << "settle_threshold " << fmt(cfg.settle_threshold) << "\n"
       << "settle_check_every " << cfg.settle_check_every << "\n"
       << "n_div " << cfg.n_div << "\n"
       << "r_cut " << fmt(cfg.r_cut) << "\n"
       << "skin_mult " << fmt(cfg.skin_mult) << "\n"
       << "curvature " << (cfg.curvature == CurvatureModel::r_eq ? "r_eq" : "r_sph") << "\n";
    return os.str();
}

// ----------------------------------------------------------- world build ----

namespace {

std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9E3779B97F4A7C15ULL;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
    return x ^ (x >> 31);
}

}  // namespace

World build_world(const SceneConfig& cfg, std::uint64_t run_seed) {
    World w;
    w.materials = cfg.materials;
    w.gravity = cfg.gravity;
    for (const TemplateSpec& t : cfg.templates) {
        const int mi = cfg.material_index(t.material);
        if (mi < 0) throw std::runtime_error("template '" + t.name + "': undefined material");
        ShapeTemplate st = make_template(t.name, t.shape, cfg.materials[mi].density);
        if (!t.surface_mesh.empty()) st.surface = read_surface_mesh(t.surface_mesh);
        if (!t.cell_mesh.empty()) st.cells = read_cell_mesh(t.cell_mesh);
        w.templates.push_back(std::move(st));
        w.template_material.push_back(mi);
    }
    int wid = 0;
    for (const WallSpec& ws : cfg.walls) {
        Wall wall = ws.wall;
        wall.id = wid++;
        wall.name = ws.name;
        const int mi = cfg.material_index(ws.material);
        if (mi < 0) throw std::runtime_error("wall '" + ws.name + "': undefined material");
        wall.material = mi;
        if (wall.kind == WallKind::trimesh) {
            wall.mesh = read_surface_mesh(ws.mesh_path);
            validate_mesh(wall.mesh);
        }
        w.walls.push_back(std::move(wall));
    }
    for (size_t si = 0; si < cfg.streams.size(); ++si) {
        const StreamSpec& ss = cfg.streams[si];
        InsertRegion r = ss.region;
        r.tmpl = cfg.template_index(ss.tmpl);
        if (r.tmpl < 0) throw std::runtime_error("stream '" + ss.name + "': undefined template");
        if (!ss.seed_set) r.seed = splitmix64(run_seed ^ (0xA5A5A5A5A5A5A5A5ULL + si));
        w.streams.push_back(r);
    }
    for (const PlacedParticle& p : cfg.particles) {
        const int ti = cfg.template_index(p.tmpl);
        if (ti < 0) throw std::runtime_error("placed particle: undefined template '" + p.tmpl + "'");
        w.add_particle(ti, p.pose, p.v, p.w);
        w.particles.back().fixed = p.fixed;
    }
    return w;
}

// ---------------------------------------------------------------- presets ---

namespace {

// The five equal-volume shapes share the volume of the 5 x 2.5 x 2.5 mm
// ellipsoid (1.30900e-7 m^3).  dt per scene sits at roughly 1/13 of the
// stiffness limit for its smallest primary sphere at Y = 5e7 Pa.
struct PackShape {
    const char* tag;
    ShapeKind kind;
    double p1, p2;
    int n_spheres;
    double dt;               // [s]
    int trigger_interval;    // [steps], about 0.08 s of settling per batch
};

const PackShape kPackShapes[] = {
    {"sphere", ShapeKind::sphere, 3.1498e-3, 0.0, 1, 5.5e-6, 15000},
    {"ellipsoid", ShapeKind::ellipsoid, 5.0e-3, 2.5e-3, 15, 2.2e-6, 36000},
    {"spherocylinder", ShapeKind::spherocylinder, 2.1266e-3, 6.3797e-3, 17, 3.8e-6, 21000},
    {"cassini", ShapeKind::cassini, 0.0037303742763248721, 0.0041034117039573598, 29, 3.0e-6, 27000},
    {"torus", ShapeKind::torus, 3.4607e-3, 1.3843e-3, 64, 2.4e-6, 33000},
};

const PackShape* pack_shape(const std::string& tag) {
    for (const PackShape& s : kPackShapes)
        if (tag == s.tag) return &s;
    return nullptr;
}

Material granular_material(const char* name, double density) {
    Material m;
    m.name = name;
    m.young = 5e7;
    m.poisson = 0.3;
    m.density = density;
    m.restitution = 0.6;
    m.mu_pw = 0.3;
    m.mu_pp = 0.4;
    m.mu_roll = 0.001;
    return m;
}

WallSpec plane_wall(const char* name, const char* material, const Vec3& point, const Vec3& normal) {
    WallSpec ws;
    ws.name = name;
    ws.material = material;
    ws.wall.kind = WallKind::plane;
    ws.wall.point = point;
    ws.wall.normal = normal;
    return ws;
}

// Frictionless stiff material of the two-body impact scenes.
SceneConfig impact_base() {
    SceneConfig cfg;
    Material m;
    m.name = "quartz";
    m.young = 1e10;
    m.poisson = 0.3;
    m.density = 2500.0;
    m.restitution = 0.6;
    cfg.materials.push_back(m);
    TemplateSpec t;
    t.name = "ell";
    t.material = "quartz";
    t.shape = {ShapeKind::ellipsoid, 5e-3, 2.5e-3, 15};
    cfg.templates.push_back(t);
    cfg.gravity = {};
    cfg.dt = 1e-7;
    cfg.duration = 1e-3;
    cfg.output_every = 1000;
    return cfg;
}

SceneConfig impact_wall_scene() {
    SceneConfig cfg = impact_base();
    cfg.name = "impact-wall";
    cfg.walls.push_back(plane_wall("floor", "quartz", {}, {0.0, 0.0, 1.0}));
    PlacedParticle p;
    p.tmpl = "ell";
    p.pose.position = {0.0, 0.0, 2.55e-3};  // 0.05 mm above first touch
    p.v = {0.0, 0.0, -1.0};
    cfg.particles.push_back(p);
    return cfg;
}

SceneConfig impact_pp_scene() {
    SceneConfig cfg = impact_base();
    cfg.name = "impact-pp";
    PlacedParticle target;  // held in place, hit dead center
    target.tmpl = "ell";
    target.fixed = true;
    cfg.particles.push_back(target);
    PlacedParticle p;
    p.tmpl = "ell";
    p.pose.position = {0.0, 0.0, 5.05e-3};
    p.v = {0.0, 0.0, -1.0};
    cfg.particles.push_back(p);
    return cfg;
}

SceneConfig pack_capsules_scene() {
    SceneConfig cfg;
    cfg.name = "pack-capsules";
    cfg.materials.push_back(granular_material("pellet", 917.0));
    TemplateSpec t;
    t.name = "capsule";
    t.material = "pellet";
    t.shape = {ShapeKind::spherocylinder, 3.8e-3, 13.8e-3, 21};
    cfg.templates.push_back(t);
    cfg.walls.push_back(plane_wall("floor", "pellet", {}, {0.0, 0.0, 1.0}));
    WallSpec shell;
    shell.name = "shell";
    shell.material = "pellet";
    shell.wall.kind = WallKind::cylinder;
    shell.wall.p1 = {};
    shell.wall.p2 = {0.0, 0.0, 0.195};
    shell.wall.radius = 0.04675;
    shell.wall.facing_inside = true;
    cfg.walls.push_back(shell);
    StreamSpec ss;
    ss.name = "feed";
    ss.tmpl = "capsule";
    ss.region.is_box = false;
    ss.region.cp1 = {0.0, 0.0, 0.155};
    ss.region.cp2 = {0.0, 0.0, 0.185};
    ss.region.radius = 0.036;
    ss.region.velocity = {0.0, 0.0, -1.0};
    ss.region.trigger_interval = 60000;  // 0.03 s between batches
    ss.region.min_batch = 6;
    ss.region.max_batch = 10;
    ss.region.target_count = 600;
    cfg.streams.push_back(ss);
    cfg.dt = 5e-7;
    cfg.duration = 4.0;
    cfg.stop_when_settled = true;
    cfg.analysis.lo_x = -0.04675;
    cfg.analysis.hi_x = 0.04675;
    cfg.analysis.lo_y = -0.04675;
    cfg.analysis.hi_y = 0.04675;
    cfg.analysis.base_area = M_PI * 0.04675 * 0.04675;
    return cfg;
}

// Rectangular 35 x 35 mm container, open top, feed region just under the rim.
void add_shape_pack(SceneConfig& cfg, const PackShape& s) {
    cfg.materials.push_back(granular_material("pellet", 917.0));
    TemplateSpec t;
    t.name = s.tag;
    t.material = "pellet";
    t.shape = {s.kind, s.p1, s.p2, s.n_spheres};
    cfg.templates.push_back(t);
    StreamSpec ss;
    ss.name = "feed";
    ss.tmpl = s.tag;
    ss.region.lo = {0.006, 0.006, 0.085};
    ss.region.hi = {0.029, 0.029, 0.12};
    ss.region.velocity = {0.0, 0.0, -1.0};
    ss.region.trigger_interval = s.trigger_interval;
    // fill the region to rejection at every trigger
    ss.region.min_batch = 300;
    ss.region.max_batch = 300;
    ss.region.target_count = 300;
    cfg.streams.push_back(ss);
    cfg.dt = s.dt;
    cfg.stop_when_settled = true;
    cfg.analysis.lo_x = 0.0;
    cfg.analysis.hi_x = 0.035;
    cfg.analysis.lo_y = 0.0;
    cfg.analysis.hi_y = 0.035;
}

SceneConfig pack_shapes_scene(const PackShape& s) {
    SceneConfig cfg;
    cfg.name = std::string("pack-shapes-") + s.tag;
    add_shape_pack(cfg, s);
    cfg.walls.push_back(plane_wall("floor", "pellet", {}, {0.0, 0.0, 1.0}));
    cfg.walls.push_back(plane_wall("x_lo", "pellet", {}, {1.0, 0.0, 0.0}));
    cfg.walls.push_back(plane_wall("x_hi", "pellet", {0.035, 0.0, 0.0}, {-1.0, 0.0, 0.0}));
    cfg.walls.push_back(plane_wall("y_lo", "pellet", {}, {0.0, 1.0, 0.0}));
    cfg.walls.push_back(plane_wall("y_hi", "pellet", {0.035, 0.035, 0.0}, {0.0, -1.0, 0.0}));
    cfg.duration = 6.0;
    return cfg;
}

// Same column, but inside a 120 mm channel behind a barrier that retires once
// the column settles; the run then continues until the collapsed heap settles.
SceneConfig dam_break_scene(const PackShape& s) {
    SceneConfig cfg;
    cfg.name = std::string("dam-break-") + s.tag;
    add_shape_pack(cfg, s);
    cfg.walls.push_back(plane_wall("floor", "pellet", {}, {0.0, 0.0, 1.0}));
    cfg.walls.push_back(plane_wall("x_lo", "pellet", {}, {1.0, 0.0, 0.0}));
    cfg.walls.push_back(plane_wall("x_hi", "pellet", {0.12, 0.0, 0.0}, {-1.0, 0.0, 0.0}));
    cfg.walls.push_back(plane_wall("y_lo", "pellet", {}, {0.0, 1.0, 0.0}));
    cfg.walls.push_back(plane_wall("y_hi", "pellet", {0.035, 0.035, 0.0}, {0.0, -1.0, 0.0}));
    WallSpec barrier = plane_wall("barrier", "pellet", {0.035, 0.0, 0.0}, {-1.0, 0.0, 0.0});
    barrier.wall.remove_on_settle = true;
    cfg.walls.push_back(barrier);
    cfg.duration = 9.0;
    cfg.analysis.hi_x = 0.12;  // repose profile spans the whole channel
    cfg.analysis.stations = 120;
    return cfg;
}

SceneConfig drum_scene() {
    SceneConfig cfg;
    cfg.name = "drum";
    cfg.materials.push_back(granular_material("bead", 1150.0));
    TemplateSpec t;
    t.name = "ell";
    t.material = "bead";
    t.shape = {ShapeKind::ellipsoid, 5e-3, 2.5e-3, 15};
    cfg.templates.push_back(t);

    const double rpm20 = 20.0 * 2.0 * M_PI / 60.0;  // 2.0944 rad/s
    WallSpec shell;
    shell.name = "shell";
    shell.material = "bead";
    shell.wall.kind = WallKind::cylinder;
    shell.wall.p1 = {0.0, -0.01, 0.0};
    shell.wall.p2 = {0.0, 0.01, 0.0};
    shell.wall.radius = 0.1;
    shell.wall.facing_inside = true;
    shell.wall.spin_omega = {0.0, rpm20, 0.0};
    shell.wall.spin_start = 5.0;
    cfg.walls.push_back(shell);
    WallSpec cap_l = plane_wall("cap_lo", "bead", {0.0, -0.01, 0.0}, {0.0, 1.0, 0.0});
    cap_l.wall.spin_omega = {0.0, rpm20, 0.0};
    cap_l.wall.spin_start = 5.0;
    cfg.walls.push_back(cap_l);
    WallSpec cap_r = plane_wall("cap_hi", "bead", {0.0, 0.01, 0.0}, {0.0, -1.0, 0.0});
    cap_r.wall.spin_omega = {0.0, rpm20, 0.0};
    cap_r.wall.spin_start = 5.0;
    cfg.walls.push_back(cap_r);

    StreamSpec ss;
    ss.name = "feed";
    ss.tmpl = "ell";
    ss.region.lo = {-0.065, -0.004, 0.01};
    ss.region.hi = {0.065, 0.004, 0.065};
    ss.region.velocity = {0.0, 0.0, -1.0};
    ss.region.trigger_interval = 18000;  // 0.045 s between batches
    ss.region.min_batch = 10;
    ss.region.max_batch = 16;
    ss.region.target_count = 1000;
    cfg.streams.push_back(ss);

    cfg.dt = 2.5e-6;
    cfg.duration = 11.2;  // fill + settle + two revolutions at 20 rpm
    return cfg;
}

const std::vector<std::string> kPresetNames = {
    "impact-wall", "impact-pp", "pack-capsules",
    "pack-shapes-sphere", "pack-shapes-ellipsoid", "pack-shapes-spherocylinder",
    "pack-shapes-cassini", "pack-shapes-torus",
    "dam-break-sphere", "dam-break-ellipsoid", "dam-break-spherocylinder",
    "dam-break-cassini", "dam-break-torus",
    "drum",
};

SceneConfig preset_config(const std::string& name) {
    if (name == "impact-wall") return impact_wall_scene();
    if (name == "impact-pp") return impact_pp_scene();
    if (name == "pack-capsules") return pack_capsules_scene();
    if (name == "drum") return drum_scene();
    for (const char* prefix : {"pack-shapes-", "dam-break-"}) {
        if (name.rfind(prefix, 0) == 0) {
            const PackShape* s = pack_shape(name.substr(std::string(prefix).size()));
            if (s) return *prefix == 'p' ? pack_shapes_scene(*s) : dam_break_scene(*s);
        }
    }
    throw std::runtime_error("unknown scene preset '" + name + "'");
}

}  // namespace

const std::vector<std::string>& preset_names() { return kPresetNames; }

bool is_preset(const std::string& name) {
    return std::find(kPresetNames.begin(), kPresetNames.end(), name) != kPresetNames.end();
}

std::string preset_scene_text(const std::string& name) {
    return serialize_scene(preset_config(name));
}

SceneConfig load_scene(const std::string& path_or_preset) {
    if (std::filesystem::exists(path_or_preset)) {
        std::ifstream in(path_or_preset);
        if (!in) throw std::runtime_error("cannot open scene file '" + path_or_preset + "'");
        std::ostringstream ss;
        ss << in.rdbuf();
        return parse_scene(ss.str(), path_or_preset);
    }
    if (is_preset(path_or_preset))
        return parse_scene(preset_scene_text(path_or_preset), path_or_preset);
    throw std::runtime_error("'" + path_or_preset + "' is neither a scene file nor a preset name");
}

}  // namespace msdem
