#include <doctest.h>

#include <cmath>

#include "pedflow/forces.hpp"
#include "pedflow/mollifier.hpp"
#include "pedflow/rng.hpp"

using namespace pedflow;

namespace {

Vec2 unit_dir(CounterRng& rng) {
    const double a = rng.uniform(0.0, 6.283185307179586);
    return {std::cos(a), std::sin(a)};
}

ModelParams test_params() {
    ModelParams p;
    p.gamma_n = 0.3;  // distinct rates so the dissipation identities bite
    p.gamma_t = 0.9;
    p.n = 64;
    return p;
}

} // namespace

TEST_SUITE("forces") {

TEST_CASE("smoothstep frozen values and seams") {
    CHECK(smoothstep_poly(0.5, 1) == doctest::Approx(0.5).epsilon(1e-15));
    CHECK(smoothstep_poly(0.5, 2) == doctest::Approx(0.5).epsilon(1e-15));
    CHECK(smoothstep_poly(0.5, 3) == doctest::Approx(0.5).epsilon(1e-15));
    CHECK(smoothstep_poly(0.75, 2) == doctest::Approx(0.896484375).epsilon(1e-15));
    for (int order = 1; order <= 3; ++order) {
        CHECK(smoothstep_poly(0.0, order) == 0.0);
        CHECK(smoothstep_poly(1.0, order) == 1.0);
        // monotone on a grid
        double prev = 0.0;
        for (int i = 1; i <= 100; ++i) {
            const double s = smoothstep_poly(i / 100.0, order);
            CHECK(s >= prev);
            prev = s;
        }
    }
    CHECK_THROWS(smoothstep_poly(0.5, 4));
}

TEST_CASE("plateau bump plateau, support and midpoint") {
    const double w = 0.6;
    for (int order = 1; order <= 3; ++order) {
        CHECK(plateau_bump(0.0, w, order) == 1.0);
        CHECK(plateau_bump(w, w, order) == 1.0);
        CHECK(plateau_bump(2.0 * w, w, order) == 0.0);
        CHECK(plateau_bump(3.0 * w, w, order) == 0.0);
        CHECK(plateau_bump(1.5 * w, w, order) == doctest::Approx(0.5).epsilon(1e-15));
        CHECK(plateau_bump_fast(1.5 * w, 1.0 / w, 2.0 * w, order) ==
              plateau_bump(1.5 * w, w, order));
    }
    CHECK_THROWS(plateau_bump(-0.1, w, 2));
}

TEST_CASE("cut seam is first-order continuous in epsilon") {
    const ModelParams p = test_params();
    const PairKernelParams k = make_pair_kernel_params(p);
    const double cut = p.cutoff_radius();
    const double eps = 1e-7;
    CounterRng rng(21, StreamPurpose::scratch, 0, 0);
    double worst = 0.0;
    for (int t = 0; t < 1000; ++t) {
        const Vec2 dir = unit_dir(rng);
        const Vec2 v = unit_dir(rng) * rng.uniform(0.0, 1.9 * p.R_tilde);
        const Vec2 above = cutoff_force(dir * (cut + eps), v, k);
        const Vec2 below = cutoff_force(dir * (cut - eps), v, k);
        worst = std::max(worst, (above - below).norm());
    }
    // bounded slope through the seam: the calibrated majorant at the seam
    // caps the one-sided difference quotients
    const double cap = p.majorant_c * (1.0 / cut + 1.0) * 2.0 * eps;
    CHECK(worst <= cap);
}

TEST_CASE("support outside B_2R x B_2Rtilde is exactly zero") {
    const ModelParams p = test_params();
    const PairKernelParams k = make_pair_kernel_params(p);
    CounterRng rng(22, StreamPurpose::scratch, 0, 0);
    for (int t = 0; t < 300; ++t) {
        const Vec2 dir = unit_dir(rng);
        const Vec2 vdir = unit_dir(rng);
        // |x| at or beyond 2R, any velocity inside
        Vec2 f = cutoff_force(dir * (2.0 * p.R + rng.uniform(0.0, 3.0)), vdir, k);
        CHECK(f.x == 0.0);
        CHECK(f.y == 0.0);
        // dir has unit norm only to round-off, so pad the boundary by a few
        // ulps to keep the represented point outside the closed ball.
        f = cutoff_force(dir * (2.0 * p.R * (1.0 + 1e-13)), vdir, k);
        CHECK(f.x == 0.0);
        CHECK(f.y == 0.0);
        // |v| at or beyond 2Rtilde, any position
        f = cutoff_force(dir * rng.uniform(0.0, 1.9 * p.R),
                         vdir * (2.0 * p.R_tilde + rng.uniform(0.0, 3.0)), k);
        CHECK(f.x == 0.0);
        CHECK(f.y == 0.0);
        CHECK(lipschitz_majorant(dir * (2.0 * p.R + 0.01), vdir, k) == 0.0);
        CHECK(lipschitz_majorant(dir, vdir * (2.0 * p.R_tilde + 0.01), k) == 0.0);
    }
}

TEST_CASE("antisymmetry is exact") {
    const ModelParams p = test_params();
    const PairKernelParams k = make_pair_kernel_params(p);
    CounterRng rng(23, StreamPurpose::scratch, 0, 0);
    for (int t = 0; t < 1000; ++t) {
        const Vec2 x = unit_dir(rng) * rng.uniform(1e-3, 2.2 * p.R);
        const Vec2 v = unit_dir(rng) * rng.uniform(0.0, 2.2 * p.R_tilde);
        const Vec2 f = cutoff_force(x, v, k);
        const Vec2 g = cutoff_force(-x, -v, k);
        CHECK(g.x == -f.x);
        CHECK(g.y == -f.y);
    }
}

TEST_CASE("dissipation rates split along and across the pair axis") {
    const ModelParams p = test_params();
    const PairKernelParams k = make_pair_kernel_params(p);
    CounterRng rng(24, StreamPurpose::scratch, 0, 0);
    for (int t = 0; t < 500; ++t) {
        const Vec2 dir = unit_dir(rng);
        const double r = rng.uniform(p.cutoff_radius() * 1.01, 1.9 * p.R);
        const Vec2 x = dir * r;
        const double speed = rng.uniform(0.01, 1.9 * p.R_tilde);
        const double H = phase_mollifier(r, speed, k);
        const double A = k.two_R_kn / r - k.k_n;  // interaction coefficient

        // v parallel to x: effective dissipation is the normal rate
        Vec2 v = dir * speed;
        Vec2 f = cutoff_force(x, v, k);
        Vec2 want{(A * x.x - p.gamma_n * v.x) * H, (A * x.y - p.gamma_n * v.y) * H};
        CHECK(f.x == doctest::Approx(want.x).epsilon(1e-12));
        CHECK(f.y == doctest::Approx(want.y).epsilon(1e-12));

        // v perpendicular to x: the tangential rate
        v = Vec2{-dir.y, dir.x} * speed;
        f = cutoff_force(x, v, k);
        want = {(A * x.x - p.gamma_t * v.x) * H, (A * x.y - p.gamma_t * v.y) * H};
        CHECK(f.x == doctest::Approx(want.x).epsilon(1e-12));
        CHECK(f.y == doctest::Approx(want.y).epsilon(1e-12));
    }
}

TEST_CASE("majorant shape matches its three regions") {
    const ModelParams p = test_params();
    const PairKernelParams k = make_pair_kernel_params(p);
    const double cut = p.cutoff_radius();
    const Vec2 v{0.1, -0.2};
    // inside the cut: constant C n^theta
    CHECK(lipschitz_majorant({cut * 0.5, 0}, v, k) ==
          doctest::Approx(p.majorant_c * k.n_theta).epsilon(1e-15));
    // between cut and 2R: C/r + C
    const double r = 0.8 * p.R;
    CHECK(lipschitz_majorant({r, 0}, v, k) ==
          doctest::Approx(p.majorant_c / r + p.majorant_c).epsilon(1e-15));
    // decreasing in r up to the support edge
    double prev = 1e300;
    for (double rr = cut * 1.01; rr < 2.0 * p.R; rr += 0.01) {
        const double q = lipschitz_majorant({rr, 0}, v, k);
        CHECK(q <= prev);
        CHECK(q > 0.0);
        prev = q;
    }
}

TEST_CASE("velocity majorant mirrors the shape in speed") {
    const ModelParams p = test_params();
    const PairKernelParams k = make_pair_kernel_params(p);
    const Vec2 x{0.3, 0.1};
    const double s = 1.3;
    CHECK(lipschitz_majorant_velocity(x, {s, 0}, k) ==
          doctest::Approx(p.majorant_c / s + p.majorant_c).epsilon(1e-15));
    CHECK(lipschitz_majorant_velocity({3.0 * p.R, 0}, {s, 0}, k) == 0.0);
}

} // TEST_SUITE

