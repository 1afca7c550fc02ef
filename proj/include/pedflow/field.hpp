#pragma once
#include <cstdint>
#include <limits>
#include <vector>

#include "pedflow/ensemble.hpp"
#include "pedflow/errors.hpp"
#include "pedflow/spatial_hash.hpp"
#include "pedflow/vec2.hpp"

// Crowd density fields and the eikonal guidance potential.
//
// The potential solves |grad Phi| = w(x) with Phi = 0 on the target cells,
// by first-order fast marching on the scenario grid. The slowness field w
// comes from the normalized crowd density through a pluggable map; the
// default takes the model equation rho |grad Phi| = 1 literally,
// w = 1/clamp(rho, eps, 1/eps), so travel is cheap where the crowd is dense.
// The physically intuitive alternative w = clamp(rho, eps, 1/eps) is
// selectable per scenario. Either way w stays within [eps, 1/eps].

namespace pedflow {

struct Scenario {
    double x0 = 0.0, x1 = 20.0, y0 = 0.0, y1 = 10.0;
    double grid_h = 0.25;
    double slowness_floor = 0.05;  // eps of the clamp

    enum class Edge { left, right, top, bottom };
    Edge target_edge = Edge::right;
    // Segment of the edge that is the exit; defaults cover the whole edge.
    double span_lo = -std::numeric_limits<double>::infinity();
    double span_hi = std::numeric_limits<double>::infinity();

    enum class SlownessMap { paper_reciprocal, density };
    SlownessMap slowness_map = SlownessMap::paper_reciprocal;

    int nx() const { return static_cast<int>((x1 - x0) / grid_h + 0.5); }
    int ny() const { return static_cast<int>((y1 - y0) / grid_h + 0.5); }

    bool contains(Vec2 p) const {
        return p.x >= x0 && p.x <= x1 && p.y >= y0 && p.y <= y1;
    }

    void validate() const;
};

// Scalar field sampled at cell centers ((i+1/2)h, (j+1/2)h offsets).
struct GridField {
    int nx = 0, ny = 0;
    double h = 1.0, x0 = 0.0, y0 = 0.0;
    std::vector<double> v;

    double& at(int i, int j) { return v[static_cast<std::size_t>(j) * nx + i]; }
    double at(int i, int j) const { return v[static_cast<std::size_t>(j) * nx + i]; }
    double cx(int i) const { return x0 + (i + 0.5) * h; }
    double cy(int j) const { return y0 + (j + 0.5) * h; }
};

// Per-particle normalized ball counts. rho values lie in [0,1]; n_r_max is
// the maximum count (>= 1 since each particle counts itself).
struct DensityField {
    std::vector<double> rho;
    std::uint32_t n_r_max = 1;
};

struct EikonalField {
    int nx = 0, ny = 0;
    double h = 1.0, x0 = 0.0, y0 = 0.0;
    std::vector<double> phi;      // +inf where unreached
    std::vector<double> gx, gy;   // upwind gradient at cell centers
    std::uint64_t stamp = 0;      // refresh step the field was computed at

    bool contains(Vec2 p) const {
        return p.x >= x0 && p.x <= x0 + nx * h && p.y >= y0 && p.y <= y0 + ny * h;
    }
};

// Ball counts of `ens` around its own particles (radius R, strict, self
// included). `hash` may be a prebuilt index with cell size >= R.
DensityField local_density(const Ensemble& ens, double R, const SpatialHash* hash = nullptr);

// Ball counts of `source` around arbitrary query points, normalized by a
// caller-supplied n_r_max (values clamped into [0,1]).
std::vector<double> density_at_points(const Ensemble& source, const SpatialHash& source_hash,
                                      const std::vector<Vec2>& points, double R,
                                      std::uint32_t n_r_max);

// Per-cell normalized ball counts on the scenario grid, sharing n_r_max with
// local_density. Particles outside the domain throw unless clamp_outside.
GridField density_grid(const Ensemble& ens, const Scenario& sc, double R,
                       std::uint32_t n_r_max, bool clamp_outside = false);

GridField slowness_from_density(const GridField& rho, const Scenario& sc);

// Fast-marching solve of |grad Phi| = w, Phi = 0 on the scenario target
// cells. `acceptance_order` (optional) records accepted values in order, for
// monotonicity checks.
EikonalField solve_eikonal_slowness(const GridField& w, const Scenario& sc,
                                    std::vector<double>* acceptance_order = nullptr);

// Density-coupled composition used by the integrator.
EikonalField solve_eikonal(const Ensemble& ens, const Scenario& sc, double R,
                           std::uint32_t n_r_max, bool clamp_outside = false);

// Unit walking direction toward the target (-grad Phi normalized), bilinear
// interpolation of the upwind gradient. Returns the zero sentinel on
// plateaus; throws std::domain_error outside the field's domain.
Vec2 direction_at(const EikonalField& f, Vec2 p);

// Integrator-facing variant: positions are clamped into the domain first, so
// a particle just past the exit keeps feeling the boundary cell's direction.
Vec2 direction_at_clamped(const EikonalField& f, Vec2 p);

} // namespace pedflow
