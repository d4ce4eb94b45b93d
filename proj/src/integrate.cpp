#include "msdem/integrate.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

namespace msdem {

namespace {
constexpr double kPi = 3.14159265358979323846;
} // namespace

void rotation_half_kick(Particle& p, const Vec3& inertia, double dt_half) {
    const Quat& q = p.pose.orientation;
    const Vec3 tau_b = rotate_inv(q, p.t_acc);
    Vec3 w_b = rotate_inv(q, p.w);
    w_b = w_b + dt_half * Vec3{tau_b.x / inertia.x, tau_b.y / inertia.y,
                               tau_b.z / inertia.z};
    p.w = rotate(q, w_b);
}

void rotation_drift(Particle& p, const Vec3& inertia, double dt) {
    const Quat q0 = p.pose.orientation;
    Vec3 w = rotate_inv(q0, p.w);  // body frame

    // Euler equations with zero torque: I dw/dt = -w x (I w).
    auto deriv = [&](const Vec3& wb) {
        const Vec3 L{inertia.x * wb.x, inertia.y * wb.y, inertia.z * wb.z};
        const Vec3 c = cross(wb, L);
        return Vec3{-c.x / inertia.x, -c.y / inertia.y, -c.z / inertia.z};
    };
    const Vec3 k1 = deriv(w);
    const Vec3 s2 = w + (0.5 * dt) * k1;
    const Vec3 k2 = deriv(s2);
    const Vec3 s3 = w + (0.5 * dt) * k2;
    const Vec3 k3 = deriv(s3);
    const Vec3 s4 = w + dt * k3;
    const Vec3 k4 = deriv(s4);
    const Vec3 w_new = w + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);

    // RK4 quadrature of the angular velocity gives the rotation vector.
    const Vec3 w_avg = (1.0 / 6.0) * (w + 2.0 * s2 + 2.0 * s3 + s4);
    const Quat dq = quat_exp(dt * w_avg);
    p.pose.orientation = normalized(q0 * dq);
    p.w = rotate(p.pose.orientation, w_new);
}

TimestepEstimate critical_timestep(const Material& mat, double r_min, double m_min,
                                   double v_max, int n_div) {
    if (r_min <= 0.0 || m_min <= 0.0)
        throw std::invalid_argument("critical_timestep: radius and mass must be > 0");
    if (n_div < 10 || n_div > 100)
        throw std::invalid_argument("critical_timestep: divisor must be in [10, 100]");

    TimestepEstimate e;
    const double G = mat.young / (2.0 * (1.0 + mat.poisson));  // shear modulus
    const double K = 0.8766 + 0.1631 * mat.poisson;
    e.t_rayleigh = kPi * r_min / K * std::sqrt(mat.density / G);

    if (v_max > 0.0) {
        // Self-pair effective values of the two smallest particles.
        const double y_star = mat.young / (2.0 * (1.0 - mat.poisson * mat.poisson));
        const double m_star = 0.5 * m_min;
        const double r_star = 0.5 * r_min;
        e.t_hertz = 2.8683 * std::pow(m_star * m_star / (r_star * y_star * y_star * v_max),
                                      0.2);
    } else {
        e.t_hertz = std::numeric_limits<double>::infinity();
    }
    e.dt_critical = std::min(e.t_rayleigh, e.t_hertz);
    e.dt = e.dt_critical / n_div;
    return e;
}

void advance_walls(std::vector<Wall>& walls, double dt) {
    for (Wall& w : walls) {
        if (!w.spinning) continue;
        const double angle = norm(w.spin_omega) * dt;
        if (angle == 0.0) continue;
        const Quat q = from_axis_angle(normalized(w.spin_omega), angle);
        auto rot_point = [&](const Vec3& p) {
            return w.spin_point + rotate(q, p - w.spin_point);
        };
        switch (w.kind) {
            case WallKind::plane:
                w.point = rot_point(w.point);
                w.normal = rotate(q, w.normal);
                break;
            case WallKind::cylinder:
                w.p1 = rot_point(w.p1);
                w.p2 = rot_point(w.p2);
                break;
            case WallKind::trimesh:
                for (auto& v : w.mesh.vertices) v = rot_point(v);
                break;
        }
    }
}

} // namespace msdem
