#pragma once

#include <cmath>

#include "msdem/contact.hpp"
#include "msdem/world.hpp"

namespace msdem {

// Which radius enters R*: the contacting primary sphere's own radius, or the
// radius of the particle's equal-volume sphere.
enum class CurvatureModel { r_eq, r_sph };

struct EffectivePair {
    double y_star = 0.0;   // [Pa]
    double r_star = 0.0;   // [m]; for r_sph it is combined per contact instead
    double m_star = 0.0;   // [kg]
    double beta = 0.0;     // <= 0, from ln e
    double mu_fric = 0.0;
    double mu_roll = 0.0;
};

// Harmonic combinations 1/Y* = sum (1-nu^2)/Y, 1/R* = sum 1/R, 1/m* = sum 1/m.
// R_j <= 0 or m_j <= 0 marks the wall side (the reciprocal term vanishes).
// Mixed-material friction/restitution combine as geometric means.
EffectivePair effective_pair(const Material& mat_i, const Material& mat_j,
                             bool wall_contact, double R_i, double R_j, double m_i,
                             double m_j);

inline double combine_r_star(double R_i, double R_j) {
    return R_j <= 0.0 ? R_i : 1.0 / (1.0 / R_i + 1.0 / R_j);
}

inline double hertz_kn(double y_star, double r_star, double overlap) {
    return 4.0 / 3.0 * y_star * std::sqrt(r_star * overlap);
}

inline double damping_gamma(double beta, double m_star, double k) {
    return std::sqrt(5.0) * std::abs(beta) * std::sqrt(m_star * k);
}

// Damped Hertz normal force along n.  The damping term can momentarily exceed
// the elastic one late in restitution; the scalar is clamped at zero so the
// contact never pulls.  Returns the force on sphere i and its magnitude.
struct NormalOut {
    Vec3 f{};
    double magnitude = 0.0;
    double k_n = 0.0;
    double gamma_n = 0.0;
};

inline NormalOut normal_force(const ContactGeom& g, double vn_scalar,
                              const EffectivePair& ep, double r_star) {
    NormalOut out;
    const double overlap = -g.d_n;
    out.k_n = hertz_kn(ep.y_star, r_star, overlap);
    out.gamma_n = damping_gamma(ep.beta, ep.m_star, out.k_n);
    const double fn = out.k_n * overlap - out.gamma_n * vn_scalar;
    out.magnitude = fn > 0.0 ? fn : 0.0;
    out.f = out.magnitude * g.n;
    return out;
}

// Mindlin tangential force with history.  delta_t is first rotated into the
// new tangent plane with its magnitude preserved, then grown by -V_t dt;
// the trial spring-damper force is capped by Coulomb friction, and on
// sliding the history is rescaled to the cap.
inline Vec3 tangential_force(const ContactGeom& g, const Vec3& v_t, Vec3& delta_t,
                             const NormalOut& nf, const EffectivePair& ep, double dt) {
    const double mag = norm(delta_t);
    Vec3 proj = delta_t - dot(delta_t, g.n) * g.n;
    const double pmag = norm(proj);
    delta_t = (mag > 0.0 && pmag > 0.0) ? (mag / pmag) * proj : proj;
    delta_t = delta_t - dt * v_t;

    const double k_t = 2.0 / 7.0 * nf.k_n;
    const double gamma_t = 0.5 * nf.gamma_n;
    Vec3 f = k_t * delta_t - gamma_t * v_t;

    const double cap = ep.mu_fric * nf.magnitude;
    const double fmag = norm(f);
    if (fmag >= cap) {
        const double vt_mag = norm(v_t);
        const double dmag = norm(delta_t);
        if (vt_mag > 0.0) {
            f = (-cap / vt_mag) * v_t;
        } else if (dmag > 0.0) {
            f = (cap / dmag) * delta_t;
        } else {
            f = Vec3{};
        }
        // Keep the spring history consistent with the capped force.
        delta_t = (k_t > 0.0 && dmag > 0.0) ? (cap / (k_t * dmag)) * delta_t : Vec3{};
    }
    return f;
}

// Contact-point relative velocity of body i against body j and its
// normal/tangential split.
struct RelVel {
    Vec3 v{}, v_t{};
    double vn_scalar = 0.0;
};

inline RelVel relative_velocity(const Vec3& v_i, const Vec3& w_i, const Vec3& c_i,
                                const Vec3& v_j, const Vec3& w_j, const Vec3& c_j,
                                const Vec3& p_c, const Vec3& n) {
    RelVel rv;
    rv.v = (v_i + cross(w_i, p_c - c_i)) - (v_j + cross(w_j, p_c - c_j));
    rv.vn_scalar = dot(rv.v, n);
    rv.v_t = rv.v - rv.vn_scalar * n;
    return rv;
}

// Force F on particle i at p_c; equal and opposite on j (null for walls).
inline void accumulate(Particle& i, Particle* j, const Vec3& f, const Vec3& p_c) {
    i.f_acc = i.f_acc + f;
    i.t_acc = i.t_acc + cross(p_c - i.pose.position, f);
    if (j) {
        j->f_acc = j->f_acc - f;
        j->t_acc = j->t_acc + cross(p_c - j->pose.position, -1.0 * f);
    }
}

// Rolling resistance couple on particle i; the caller applies the opposite
// torque to j.  Zero when disabled, when mu_roll = 0, or when the bodies
// do not rotate relative to each other.
inline Vec3 rolling_resistance(double fn_magnitude, const EffectivePair& ep,
                               double r_star, const Vec3& w_rel) {
    const double wmag = norm(w_rel);
    if (ep.mu_roll <= 0.0 || wmag == 0.0) return Vec3{};
    return (-ep.mu_roll * fn_magnitude * r_star / wmag) * w_rel;
}

// Radius of the sphere with the template's solid volume (r_eq curvature model).
inline double equivalent_radius(const ShapeTemplate& t) {
    return std::cbrt(3.0 * t.props.volume / (4.0 * 3.14159265358979323846));
}

} // namespace msdem
