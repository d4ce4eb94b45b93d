#include "msdem/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <stdexcept>

namespace msdem {
namespace {

constexpr double kPi = 3.14159265358979323846;
constexpr double kEmpty = -std::numeric_limits<double>::infinity();

// Visits every primary sphere in the world frame.
template <class F>
void for_each_sphere(const World& w, F&& fn) {
    for (const Particle& p : w.particles) {
        const ShapeTemplate& t = w.templates[static_cast<std::size_t>(p.tmpl)];
        for (const SphereElement& s : t.ms.spheres)
            fn(p.pose.position + rotate(p.pose.orientation, s.center), s.radius);
    }
}

double lateral(const Vec3& c, int axis) { return axis == 0 ? c.x : c.y; }

// OLS slope of y against x; false if the fit is degenerate.
bool ols_slope(const std::vector<double>& x, const std::vector<double>& y,
               double& m) {
    const std::size_t n = x.size();
    if (n < 2) return false;
    double sx = 0.0, sy = 0.0, sxx = 0.0, sxy = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        sx += x[i];
        sy += y[i];
        sxx += x[i] * x[i];
        sxy += x[i] * y[i];
    }
    const double den = n * sxx - sx * sx;
    if (den <= 0.0) return false;
    m = (n * sxy - sx * sy) / den;
    return true;
}

} // namespace

SurfaceProfile free_surface(const World& w, int axis, double lo, double hi,
                            int n_seg) {
    if (axis != 0 && axis != 1)
        throw std::invalid_argument("free_surface: axis must be 0 (x) or 1 (y)");
    if (n_seg < 100)
        throw std::invalid_argument("free_surface: need at least 100 segments");
    if (!(lo < hi))
        throw std::invalid_argument("free_surface: empty lateral extent");

    SurfaceProfile prof;
    prof.axis = axis;
    const int n_sta = n_seg + 1;
    const double width = (hi - lo) / n_seg;
    prof.station.resize(static_cast<std::size_t>(n_sta));
    for (int i = 0; i < n_sta; ++i)
        prof.station[static_cast<std::size_t>(i)] = lo + width * i;

    // Each station owns the bin of one segment width centred on it.  A sphere
    // counts towards every bin its lateral footprint [c-r, c+r] overlaps, so
    // the profile is the silhouette seen from the side, not a scatter of
    // centre samples (which starves narrow bins in sparse beds).
    prof.height.assign(static_cast<std::size_t>(n_sta), kEmpty);
    for_each_sphere(w, [&](const Vec3& c, double r) {
        const double cl = lateral(c, axis);
        const int i_min = std::max(
            0, static_cast<int>(std::ceil((cl - r - lo) / width - 0.5)));
        const int i_max = std::min(
            n_seg, static_cast<int>(std::floor((cl + r - lo) / width + 0.5)));
        for (int i = i_min; i <= i_max; ++i) {
            std::size_t k = static_cast<std::size_t>(i);
            prof.height[k] = std::max(prof.height[k], c.z + r);
        }
    });

    std::vector<int> occ;
    for (int i = 0; i < n_sta; ++i)
        if (prof.height[static_cast<std::size_t>(i)] != kEmpty) occ.push_back(i);
    if (occ.empty())
        throw std::runtime_error("free_surface: no particles in the sampling extent");

    // fill gaps: linear between occupied stations, constant past the ends
    for (int i = 0; i < occ.front(); ++i)
        prof.height[static_cast<std::size_t>(i)] =
            prof.height[static_cast<std::size_t>(occ.front())];
    for (int i = occ.back() + 1; i < n_sta; ++i)
        prof.height[static_cast<std::size_t>(i)] =
            prof.height[static_cast<std::size_t>(occ.back())];
    for (std::size_t k = 0; k + 1 < occ.size(); ++k) {
        const int a = occ[k], b = occ[k + 1];
        for (int i = a + 1; i < b; ++i) {
            const double t = static_cast<double>(i - a) / (b - a);
            prof.height[static_cast<std::size_t>(i)] =
                (1.0 - t) * prof.height[static_cast<std::size_t>(a)] +
                t * prof.height[static_cast<std::size_t>(b)];
        }
    }
    return prof;
}

FillHeight fill_height(const World& w, double lo_x, double hi_x, double lo_y,
                       double hi_y, int n_seg) {
    const SurfaceProfile px = free_surface(w, 0, lo_x, hi_x, n_seg);
    const SurfaceProfile py = free_surface(w, 1, lo_y, hi_y, n_seg);

    std::vector<double> pool;
    pool.reserve(px.height.size() + py.height.size());
    pool.insert(pool.end(), px.height.begin(), px.height.end());
    pool.insert(pool.end(), py.height.begin(), py.height.end());

    FillHeight out;
    for (double h : pool) out.mean += h;
    out.mean /= static_cast<double>(pool.size());
    double ss = 0.0;
    for (double h : pool) ss += (h - out.mean) * (h - out.mean);
    if (pool.size() > 1)
        out.sd = std::sqrt(ss / static_cast<double>(pool.size() - 1));
    return out;
}

double porosity(const World& w, double fill_h, double base_area) {
    if (fill_h <= 0.0)
        throw std::invalid_argument("porosity: fill height must be positive");
    if (base_area <= 0.0)
        throw std::invalid_argument("porosity: base area must be positive");
    double solid = 0.0;
    for (const Particle& p : w.particles)
        solid += w.templates[static_cast<std::size_t>(p.tmpl)].props.volume;
    const double phi = 1.0 - solid / (base_area * fill_h);
    if (phi < 0.0 || phi > 1.0) {
        std::fprintf(stderr, "[analysis] porosity %.4f outside [0,1], clamped\n",
                     phi);
        return std::clamp(phi, 0.0, 1.0);
    }
    return phi;
}

double angle_of_repose(const World& w, int flow_axis, int n_seg) {
    if (w.particles.empty())
        throw std::runtime_error("angle_of_repose: no particles");

    double lo = std::numeric_limits<double>::infinity();
    double hi = -lo, base = lo;
    for_each_sphere(w, [&](const Vec3& c, double r) {
        lo = std::min(lo, lateral(c, flow_axis));
        hi = std::max(hi, lateral(c, flow_axis));
        base = std::min(base, c.z - r);
    });
    if (!(lo < hi)) return 0.0;  // single stack, no measurable slope

    const SurfaceProfile prof = free_surface(w, flow_axis, lo, hi, n_seg);
    const int n_sta = static_cast<int>(prof.height.size());

    std::vector<double> rel(static_cast<std::size_t>(n_sta));
    int crest = 0;
    for (int i = 0; i < n_sta; ++i) {
        rel[static_cast<std::size_t>(i)] =
            prof.height[static_cast<std::size_t>(i)] - base;
        if (rel[static_cast<std::size_t>(i)] > rel[static_cast<std::size_t>(crest)])
            crest = i;
    }
    const double h_max = rel[static_cast<std::size_t>(crest)];
    if (h_max <= 0.0) return 0.0;

    // one fit per side of the crest, over the 10-90 % height band
    double sum = 0.0;
    int n_fit = 0;
    for (int side = 0; side < 2; ++side) {
        const int b0 = side == 0 ? 0 : crest;
        const int b1 = side == 0 ? crest : n_sta - 1;
        std::vector<double> xs, ys;
        for (int i = b0; i <= b1; ++i) {
            const double h = rel[static_cast<std::size_t>(i)];
            if (h >= 0.1 * h_max && h <= 0.9 * h_max) {
                xs.push_back(prof.station[static_cast<std::size_t>(i)]);
                ys.push_back(h);
            }
        }
        double m = 0.0;
        if (ols_slope(xs, ys, m)) {
            sum += std::abs(std::atan(m));
            ++n_fit;
        }
    }
    if (n_fit == 0) return 0.0;
    return sum / n_fit * (180.0 / kPi);
}

double kinetic_energy(const World& w) {
    double e = 0.0;
    for (const Particle& p : w.particles) {
        const MassProperties& mp =
            w.templates[static_cast<std::size_t>(p.tmpl)].props;
        e += 0.5 * mp.mass * norm2(p.v);
        const Vec3 wb = rotate_inv(p.pose.orientation, p.w);
        const Vec3& I = mp.inertia_principal;
        e += 0.5 * (I.x * wb.x * wb.x + I.y * wb.y * wb.y + I.z * wb.z * wb.z);
    }
    return e;
}

bool SettleMonitor::check(const World& w) {
    const double per = w.particles.empty()
                           ? 0.0
                           : kinetic_energy(w) /
                                 static_cast<double>(w.particles.size());
    streak_ = per < threshold_ ? streak_ + 1 : 0;
    return settled();
}

} // namespace msdem
