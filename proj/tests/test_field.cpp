#include <cmath>
#include <stdexcept>
#include <vector>

#include "doctest.h"
#include "pedflow/field.hpp"
#include "pedflow/spatial_hash.hpp"

using namespace pedflow;

namespace {

Scenario box_scenario(double x1, double y1, double h) {
    Scenario sc;
    sc.x0 = 0.0;
    sc.x1 = x1;
    sc.y0 = 0.0;
    sc.y1 = y1;
    sc.grid_h = h;
    return sc;
}

GridField uniform_slowness(const Scenario& sc, double value) {
    GridField w;
    w.nx = sc.nx();
    w.ny = sc.ny();
    w.h = sc.grid_h;
    w.x0 = sc.x0;
    w.y0 = sc.y0;
    w.v.assign(static_cast<std::size_t>(w.nx) * w.ny, value);
    return w;
}

// Two tight clusters: 3 particles near the origin, 7 near (10, 0).
Ensemble two_clusters() {
    Ensemble e(10);
    e.set(0, {0.00, 0.00}, {0, 0});
    e.set(1, {0.10, 0.00}, {0, 0});
    e.set(2, {0.00, 0.10}, {0, 0});
    for (std::size_t i = 0; i < 7; ++i)
        e.set(3 + i, {10.0 + 0.02 * i, 0.01 * i}, {0, 0});
    return e;
}

} // namespace

TEST_SUITE("field") {

TEST_CASE("local density counts balls and normalizes by the max") {
    const Ensemble e = two_clusters();
    const DensityField d = local_density(e, 0.5);
    CHECK(d.n_r_max == 7);
    for (std::size_t i = 0; i < 3; ++i) CHECK(d.rho[i] == doctest::Approx(3.0 / 7.0));
    for (std::size_t i = 3; i < 10; ++i) CHECK(d.rho[i] == doctest::Approx(1.0));

    // A prebuilt hash with a coarser cell gives the same counts.
    SpatialHash hash;
    hash.build(e.px.data(), e.py.data(), e.size(), 1.25);
    const DensityField d2 = local_density(e, 0.5, &hash);
    CHECK(d2.n_r_max == d.n_r_max);
    for (std::size_t i = 0; i < e.size(); ++i) CHECK(d2.rho[i] == d.rho[i]);
}

TEST_CASE("local density ball is strict") {
    Ensemble e(2);
    e.set(0, {0, 0}, {0, 0});
    e.set(1, {0.5, 0}, {0, 0});
    const DensityField d = local_density(e, 0.5);  // distance == R excluded
    CHECK(d.n_r_max == 1);
    CHECK(d.rho[0] == 1.0);
    CHECK(d.rho[1] == 1.0);
}

TEST_CASE("density at query points clamps into [0,1]") {
    const Ensemble e = two_clusters();
    SpatialHash hash;
    hash.build(e.px.data(), e.py.data(), e.size(), 1.0);
    const std::vector<Vec2> pts = {{10.05, 0.02}, {0.02, 0.02}, {5.0, 5.0}};
    const auto rho = density_at_points(e, hash, pts, 0.5, 7);
    CHECK(rho[0] == doctest::Approx(1.0));
    CHECK(rho[1] == doctest::Approx(3.0 / 7.0));
    CHECK(rho[2] == 0.0);

    // Smaller n_r_max saturates at 1 instead of exceeding it.
    const auto sat = density_at_points(e, hash, pts, 0.5, 3);
    CHECK(sat[0] == 1.0);
    CHECK(sat[1] == doctest::Approx(1.0));
}

TEST_CASE("density grid counts cell centers inside the ball") {
    Scenario sc = box_scenario(2.0, 2.0, 0.25);
    Ensemble e(1);
    e.set(0, {sc.x0 + 4.5 * sc.grid_h, sc.y0 + 4.5 * sc.grid_h}, {0, 0});
    // R between h and sqrt(2) h: the particle's own cell plus its 4 edge
    // neighbors have centers inside the ball.
    const GridField g = density_grid(e, sc, 0.3, 1);
    double sum = 0.0;
    for (double v : g.v) sum += v;
    CHECK(sum == doctest::Approx(5.0));
    CHECK(g.at(4, 4) == 1.0);
    CHECK(g.at(5, 4) == 1.0);
    CHECK(g.at(3, 3) == 0.0);
}

TEST_CASE("density grid rejects out-of-domain particles unless clamped") {
    Scenario sc = box_scenario(2.0, 2.0, 0.25);
    Ensemble e(1);
    e.set(0, {3.0, 1.0}, {0, 0});
    CHECK_THROWS_AS(density_grid(e, sc, 0.3, 1), std::domain_error);
    const GridField g = density_grid(e, sc, 0.3, 1, /*clamp_outside=*/true);
    double sum = 0.0;
    for (double v : g.v) sum += v;
    CHECK(sum > 0.0);  // clamped onto the right edge, still counted
}

TEST_CASE("scenario validation rejects bad grids and empty targets") {
    Scenario sc = box_scenario(2.0, 2.0, 0.25);
    CHECK_NOTHROW(sc.validate());
    sc.grid_h = 0.3;  // does not divide 2.0
    CHECK_THROWS_AS(sc.validate(), ConfigError);
    sc.grid_h = 0.25;
    sc.span_lo = 5.0;
    sc.span_hi = 6.0;  // no edge cell center in span
    CHECK_THROWS_AS(sc.validate(), ConfigError);
    sc.span_lo = 6.0;  // inverted span
    CHECK_THROWS_AS(sc.validate(), ConfigError);
}

TEST_CASE("planar front with unit slowness is exact") {
    Scenario sc = box_scenario(4.0, 2.0, 0.25);
    const GridField w = uniform_slowness(sc, 1.0);
    std::vector<double> order;
    const EikonalField f = solve_eikonal_slowness(w, sc, &order);
    const int nx = sc.nx();
    for (int j = 0; j < sc.ny(); ++j)
        for (int i = 0; i < nx; ++i) {
            const double want = (nx - 1 - i) * sc.grid_h;
            CHECK(std::abs(f.phi[static_cast<std::size_t>(j) * nx + i] - want) < 1e-12);
        }
    // Fast marching accepts in non-decreasing value order.
    for (std::size_t k = 1; k < order.size(); ++k) CHECK(order[k] >= order[k - 1]);
    CHECK(order.size() == f.phi.size());
}

TEST_CASE("walking direction points at the planar target") {
    Scenario sc = box_scenario(4.0, 2.0, 0.25);
    const EikonalField f = solve_eikonal_slowness(uniform_slowness(sc, 1.0), sc);
    for (Vec2 p : {Vec2{1.7, 1.1}, Vec2{0.3, 0.42}, Vec2{2.5, 0.2}}) {
        const Vec2 dir = direction_at(f, p);
        CHECK(dir.x == doctest::Approx(1.0).epsilon(1e-12));
        CHECK(std::abs(dir.y) < 1e-12);
    }
    CHECK_THROWS_AS(direction_at(f, {-0.1, 1.0}), std::domain_error);
    CHECK_THROWS_AS(direction_at(f, {1.0, 2.3}), std::domain_error);
    // The clamped variant keeps guiding a particle just past the boundary.
    const Vec2 back = direction_at_clamped(f, {-0.1, 1.0});
    CHECK(back.x == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("point target error shrinks under grid refinement") {
    auto max_error = [](double h) {
        Scenario sc = box_scenario(4.0, 4.0, h);
        sc.span_lo = 2.05;
        sc.span_hi = 2.15;  // selects exactly one right-edge cell at h and h/2
        sc.validate();
        const EikonalField f = solve_eikonal_slowness(uniform_slowness(sc, 1.0), sc);
        // Locate the single target cell (phi == 0).
        double tx = 0.0, ty = 0.0;
        int zeros = 0;
        for (int j = 0; j < sc.ny(); ++j)
            for (int i = 0; i < sc.nx(); ++i)
                if (f.phi[static_cast<std::size_t>(j) * sc.nx() + i] == 0.0) {
                    tx = sc.x0 + (i + 0.5) * h;
                    ty = sc.y0 + (j + 0.5) * h;
                    ++zeros;
                }
        REQUIRE(zeros == 1);
        double err = 0.0;
        for (int j = 0; j < sc.ny(); ++j)
            for (int i = 0; i < sc.nx(); ++i) {
                const double cx = sc.x0 + (i + 0.5) * h, cy = sc.y0 + (j + 0.5) * h;
                const double want = std::hypot(cx - tx, cy - ty);
                err = std::max(err, std::abs(f.phi[static_cast<std::size_t>(j) * sc.nx() + i] - want));
            }
        return err;
    };
    const double coarse = max_error(0.25);
    const double fine = max_error(0.125);
    CHECK(coarse < 0.5);
    CHECK(coarse / fine >= 1.5);
}

TEST_CASE("doubling the slowness doubles the potential bitwise") {
    Scenario sc = box_scenario(4.0, 4.0, 0.25);
    sc.span_lo = 2.05;
    sc.span_hi = 2.15;
    const EikonalField f1 = solve_eikonal_slowness(uniform_slowness(sc, 1.0), sc);
    const EikonalField f2 = solve_eikonal_slowness(uniform_slowness(sc, 2.0), sc);
    for (std::size_t c = 0; c < f1.phi.size(); ++c) CHECK(f2.phi[c] == 2.0 * f1.phi[c]);
}

TEST_CASE("slowness maps clamp density into [eps, 1/eps]") {
    Scenario sc = box_scenario(2.0, 2.0, 1.0);
    GridField rho;
    rho.nx = 2;
    rho.ny = 2;
    rho.h = 1.0;
    rho.v = {0.0, 0.01, 0.4, 1.0};

    const GridField wr = slowness_from_density(rho, sc);  // paper_reciprocal
    CHECK(wr.v[0] == doctest::Approx(20.0));  // 1/eps with eps = 0.05
    CHECK(wr.v[1] == doctest::Approx(20.0));
    CHECK(wr.v[2] == doctest::Approx(2.5));
    CHECK(wr.v[3] == doctest::Approx(1.0));

    sc.slowness_map = Scenario::SlownessMap::density;
    const GridField wd = slowness_from_density(rho, sc);
    CHECK(wd.v[0] == doctest::Approx(0.05));
    CHECK(wd.v[1] == doctest::Approx(0.05));
    CHECK(wd.v[2] == doctest::Approx(0.4));
    CHECK(wd.v[3] == doctest::Approx(1.0));

    for (const GridField* w : {&wr, &wd})
        for (double v : w->v) {
            CHECK(v >= sc.slowness_floor);
            CHECK(v <= 1.0 / sc.slowness_floor);
        }
}

TEST_CASE("density-coupled solve reaches every cell") {
    Scenario sc = box_scenario(4.0, 2.0, 0.25);
    Ensemble e(5);
    for (std::size_t i = 0; i < 5; ++i) e.set(i, {0.5 + 0.2 * i, 1.0}, {0, 0});
    const EikonalField f = solve_eikonal(e, sc, 0.6, 5);
    for (double p : f.phi) CHECK(std::isfinite(p));
    const Vec2 dir = direction_at(f, {1.0, 1.0});
    CHECK(dir.norm() == doctest::Approx(1.0));
}

} // TEST_SUITE
