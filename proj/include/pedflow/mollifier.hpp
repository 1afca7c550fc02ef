#pragma once
#include <stdexcept>

namespace pedflow {

// Smoothstep polynomials on [0,1]. Order selects smoothness at the seams:
// 1 = cubic (C1), 2 = quintic (C2, default), 3 = septic (C3).
inline double smoothstep_poly(double u, int order) {
    switch (order) {
        case 1: return u * u * (3.0 - 2.0 * u);
        case 2: return u * u * u * (10.0 + u * (6.0 * u - 15.0));
        case 3: return u * u * u * u * (35.0 + u * (-84.0 + u * (70.0 - 20.0 * u)));
        default: throw std::invalid_argument("mollifier order must be 1, 2 or 3");
    }
}

// Radial plateau bump: 1 for r <= w, 0 for r >= 2w, smoothstep((2w-r)/w)
// in between. Closed conventions at both seams (value 1 at r = w, 0 at 2w)
// fall out of the polynomial since smoothstep(1) = 1 and smoothstep(0) = 0.
inline double plateau_bump(double r, double w, int order) {
    if (r < 0.0) throw std::domain_error("plateau_bump: negative radius");
    double u = (2.0 * w - r) / w;
    if (u >= 1.0) return 1.0;
    if (u <= 0.0) return 0.0;
    return smoothstep_poly(u, order);
}

// Same, with the scale-derived constants precomputed (hot-path form).
// inv_w = 1/w, two_w = 2w. No argument checking.
inline double plateau_bump_fast(double r, double inv_w, double two_w, int order) {
    double u = (two_w - r) * inv_w;
    if (u >= 1.0) return 1.0;
    if (u <= 0.0) return 0.0;
    return smoothstep_poly(u, order);
}

} // namespace pedflow
