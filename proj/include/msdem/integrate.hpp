#pragma once

#include <vector>

#include "msdem/world.hpp"

namespace msdem {

struct StepPolicy {
    double dt = 0.0;   // [s]; when 0, derived as dt_critical / n_div
    int n_div = 20;    // divisor applied to the critical step, in [10, 100]
    Vec3 gravity{};    // [m/s^2]
    bool deterministic = false;
    double velocity_cap = 100.0;  // [m/s]; blow-up detector threshold
};

struct TimestepEstimate {
    double t_rayleigh = 0.0;  // [s]
    double t_hertz = 0.0;     // [s]; infinite when the peak speed is zero
    double dt_critical = 0.0;
    double dt = 0.0;          // dt_critical / n_div
};

// Velocity-Verlet split for translation.  The half kick uses the acceleration
// of the *current* accumulator contents; the caller sequences
//   half_kick -> drift -> (new forces) -> half_kick.
inline void translation_half_kick(Particle& p, double inv_mass, const Vec3& gravity,
                                  double dt_half) {
    p.v = p.v + dt_half * (inv_mass * p.f_acc + gravity);
}

inline void translation_drift(Particle& p, double dt) {
    p.pose.position = p.pose.position + dt * p.v;
}

// Applies the accumulated torque to the angular velocity in the body
// principal frame (gyroscopic coupling is handled by rotation_drift).
void rotation_half_kick(Particle& p, const Vec3& inertia, double dt_half);

// Torque-free precession over dt: classic RK4 on the body-frame Euler
// equations, orientation advanced by the exponential map of the RK4-averaged
// angular velocity, then renormalized.
void rotation_drift(Particle& p, const Vec3& inertia, double dt);

// Stability bounds: Rayleigh surface-wave time for the softest material and
// smallest sphere, Hertz contact time at the peak speed, their minimum, and
// the working step after the divisor.
TimestepEstimate critical_timestep(const Material& mat, double r_min, double m_min,
                                   double v_max, int n_div);

// Rotates the defining geometry of spinning walls; static walls untouched.
void advance_walls(std::vector<Wall>& walls, double dt);

// Rigid surface velocity of the wall at a world point.
inline Vec3 wall_velocity(const Wall& w, const Vec3& p) {
    return w.spinning ? cross(w.spin_omega, p - w.spin_point) : Vec3{};
}

} // namespace msdem
