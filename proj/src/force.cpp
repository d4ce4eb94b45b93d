#include "msdem/force.hpp"

#include <stdexcept>

namespace msdem {

namespace {
constexpr double kPi = 3.14159265358979323846;
}

EffectivePair effective_pair(const Material& mat_i, const Material& mat_j,
                             bool wall_contact, double R_i, double R_j, double m_i,
                             double m_j) {
    if (mat_i.young <= 0.0 || mat_j.young <= 0.0)
        throw std::invalid_argument("effective_pair: Young's modulus must be > 0");
    if (mat_i.restitution <= 0.0 || mat_j.restitution <= 0.0)
        throw std::invalid_argument("effective_pair: restitution must be > 0");

    EffectivePair ep;
    const double ci = (1.0 - mat_i.poisson * mat_i.poisson) / mat_i.young;
    const double cj = (1.0 - mat_j.poisson * mat_j.poisson) / mat_j.young;
    ep.y_star = 1.0 / (ci + cj);
    ep.r_star = combine_r_star(R_i, R_j);
    ep.m_star = m_j <= 0.0 ? m_i : 1.0 / (1.0 / m_i + 1.0 / m_j);

    const double e = std::sqrt(mat_i.restitution * mat_j.restitution);
    const double ln_e = std::log(e);
    ep.beta = ln_e / std::sqrt(ln_e * ln_e + kPi * kPi);

    ep.mu_fric = wall_contact ? std::sqrt(mat_i.mu_pw * mat_j.mu_pw)
                              : std::sqrt(mat_i.mu_pp * mat_j.mu_pp);
    ep.mu_roll = std::sqrt(mat_i.mu_roll * mat_j.mu_roll);
    return ep;
}

} // namespace msdem
