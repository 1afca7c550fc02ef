#pragma once
#include <cmath>
#include <stdexcept>

#include "pedflow/mollifier.hpp"
#include "pedflow/params.hpp"
#include "pedflow/vec2.hpp"

// Pairwise pedestrian forces. All functions take the relative coordinates
// x = x_i - x_j, v = v_i - v_j of an ordered pair.

namespace pedflow {

// Precomputed per-(params, n) constants for the pair kernel. The cut-off
// radius n^-theta and its powers are fixed here so the hot loops never call
// pow().
struct PairKernelParams {
    double k_n, gamma_n, gamma_t;
    double gt_minus_gn;
    double two_R_kn;      // 2 R k_n
    double R, two_R, inv_R;
    double R_tilde, two_R_tilde, inv_R_tilde;
    double cut;           // n^-theta
    double n_theta;       // n^theta  == 1/cut
    double n_2theta;      // n^(2 theta)
    double majorant_c;
    int mollifier_order;
};

inline PairKernelParams make_pair_kernel_params(const ModelParams& p) {
    PairKernelParams k;
    k.k_n = p.k_n;
    k.gamma_n = p.gamma_n;
    k.gamma_t = p.gamma_t;
    k.gt_minus_gn = p.gamma_t - p.gamma_n;
    k.two_R_kn = 2.0 * p.R * p.k_n;
    k.R = p.R;
    k.two_R = 2.0 * p.R;
    k.inv_R = 1.0 / p.R;
    k.R_tilde = p.R_tilde;
    k.two_R_tilde = 2.0 * p.R_tilde;
    k.inv_R_tilde = 1.0 / p.R_tilde;
    const double nn = static_cast<double>(p.n);
    k.cut = std::pow(nn, -p.theta);
    k.n_theta = std::pow(nn, p.theta);
    k.n_2theta = std::pow(nn, 2.0 * p.theta);
    k.majorant_c = p.majorant_c;
    k.mollifier_order = p.mollifier_order;
    return k;
}

// Phase-space mollifier H(x,v): product of the position plateau (1 inside R,
// 0 beyond 2R) and the velocity plateau (1 inside R_tilde, 0 beyond
// 2 R_tilde).
inline double phase_mollifier(double r, double s, const PairKernelParams& k) {
    return plateau_bump_fast(r, k.inv_R, k.two_R, k.mollifier_order) *
           plateau_bump_fast(s, k.inv_R_tilde, k.two_R_tilde, k.mollifier_order);
}

inline double phase_mollifier(Vec2 x, Vec2 v, const ModelParams& p) {
    return plateau_bump(x.norm(), p.R, p.mollifier_order) *
           plateau_bump(v.norm(), p.R_tilde, p.mollifier_order);
}

// Radial contact repulsion k_n (x/|x|) (2R - |x|). Singular direction at
// x = 0 is a contract violation.
inline Vec2 interaction_force(Vec2 x, const ModelParams& p) {
    const double r = x.norm();
    if (r == 0.0) throw std::domain_error("interaction_force: zero displacement");
    return (p.k_n * (2.0 * p.R - r) / r) * x;
}

// Frame-dependent dissipation: the v-parallel-to-x part is damped by gamma_n,
// the transverse part by gamma_t.
inline Vec2 dissipative_force(Vec2 x, Vec2 v, const ModelParams& p) {
    const double r2 = x.norm2();
    if (r2 == 0.0) throw std::domain_error("dissipative_force: zero displacement");
    return (v.dot(x) / r2 * (p.gamma_t - p.gamma_n)) * x - p.gamma_t * v;
}

// Mollified total force without cut-off: (F_int + F_diss) H(x,v).
inline Vec2 total_force(Vec2 x, Vec2 v, const ModelParams& p) {
    const double H = phase_mollifier(x, v, p);
    if (H == 0.0) return {0.0, 0.0};
    return H * (interaction_force(x, p) + dissipative_force(x, v, p));
}

// Cut-off force F^n: equals total_force for |x| >= n^-theta; inside the cut
// the singular factors 1/|x| and 1/|x|^2 are frozen at their seam values
// n^theta and n^(2 theta), which removes the singularity and makes the force
// continuous (and defined) at x = 0.
inline Vec2 cutoff_force(Vec2 x, Vec2 v, const PairKernelParams& k) {
    const double r2 = x.norm2();
    const double r = std::sqrt(r2);
    const double H = phase_mollifier(r, v.norm(), k);
    if (H == 0.0) return {0.0, 0.0};
    const double vdotx = v.dot(x);
    double a;
    if (r >= k.cut)
        a = k.two_R_kn / r + k.gt_minus_gn * vdotx / r2 - k.k_n;
    else
        a = k.two_R_kn * k.n_theta + k.gt_minus_gn * k.n_2theta * vdotx - k.k_n;
    return {(a * x.x - k.gamma_t * v.x) * H, (a * x.y - k.gamma_t * v.y) * H};
}

inline Vec2 cutoff_force(Vec2 x, Vec2 v, const ModelParams& p) {
    return cutoff_force(x, v, make_pair_kernel_params(p));
}

// Lipschitz majorant q^n for the x-dependence of F^n: C/|x| + C outside the
// cut, the constant C n^theta inside, zero outside the closed support
// B_2R x B_2Rtilde.
inline double lipschitz_majorant(Vec2 x, Vec2 v, const PairKernelParams& k) {
    const double r = x.norm();
    if (r > k.two_R || v.norm() > k.two_R_tilde) return 0.0;
    if (r >= k.cut) return k.majorant_c / r + k.majorant_c;
    return k.majorant_c * k.n_theta;
}

inline double lipschitz_majorant(Vec2 x, Vec2 v, const ModelParams& p) {
    return lipschitz_majorant(x, v, make_pair_kernel_params(p));
}

// Velocity analogue of q^n, used only by the property-test suite. F^n has no
// velocity singularity, so any C >= lipschitz_v makes this a majorant; the
// shape mirrors q^n with |v| in place of |x|.
inline double lipschitz_majorant_velocity(Vec2 x, Vec2 v, const PairKernelParams& k) {
    const double s = v.norm();
    if (x.norm() > k.two_R || s > k.two_R_tilde) return 0.0;
    if (s >= k.cut) return k.majorant_c / s + k.majorant_c;
    return k.majorant_c * k.n_theta;
}

inline double lipschitz_majorant_velocity(Vec2 x, Vec2 v, const ModelParams& p) {
    return lipschitz_majorant_velocity(x, v, make_pair_kernel_params(p));
}

// Desired-velocity relaxation G = (1/T)(-U(rho) grad_dir - v) where grad_dir
// is the normalized gradient of the potential field (or the zero sentinel on
// plateaus, which degenerates to pure relaxation -v/T).
inline Vec2 desired_acceleration(Vec2 v, double rho, Vec2 grad_dir, const ModelParams& p) {
    const double g2 = grad_dir.norm2();
    if (g2 != 0.0 && std::abs(g2 - 1.0) > 1e-9)
        throw std::invalid_argument("desired_acceleration: grad_dir must be unit or zero");
    if (!(rho >= 0.0 && rho <= 1.0))
        throw std::domain_error("desired_acceleration: rho outside [0,1]");
    const double u = p.desired_speed(rho);
    return {(-u * grad_dir.x - v.x) / p.T, (-u * grad_dir.y - v.y) / p.T};
}

} // namespace pedflow
