#pragma once
#include <cstdint>
#include <utility>
#include <vector>

#include "pedflow/ensemble.hpp"
#include "pedflow/errors.hpp"
#include "pedflow/field.hpp"
#include "pedflow/initial.hpp"
#include "pedflow/kernels.hpp"
#include "pedflow/params.hpp"
#include "pedflow/thread_pool.hpp"

// Time integration of the pairwise system and its mean-field counterpart.
//
// One coupled run advances three subsystems with a shared clock:
//   newtonian  n particles, pair forces weighted 1/(n-1), own guidance field
//   tracked    n passive tracers, forces = 1/m * sum over field particles
//   field      m >= 4n particles, pair forces weighted 1/(m-1), own field
// newtonian and tracked start from bit-identical draws; the field ensemble
// is an independent sample of the same f0. Tracers never feed back.
//
// Steps are classic RK4 with a fixed dt. Density and eikonal fields are
// frozen across a refresh window of `refresh_every` steps: per-particle rho
// is pinned at its refresh-time value, while the walking direction is
// re-sampled from the frozen eikonal grid at current stage positions. Pair
// interactions are exact at every stage (hash rebuilt per stage).

namespace pedflow {

// Frozen guidance data for one ensemble: the eikonal grid plus the
// per-particle rho values pinned at refresh time.
struct FrozenField {
    EikonalField eik;
    std::vector<double> rho;
};

// One refresh window of a coupled run, kept when store_frames is on so the
// reverse integration can replay the exact forward fields.
struct CoupledFrame {
    std::uint64_t step = 0;  // first step index driven by this frame
    FrozenField newt;
    FrozenField field;
    std::vector<double> tracked_rho;  // tracers share field.eik
};

struct FieldFrame {
    std::uint64_t step = 0;
    FrozenField self;
};

struct RunOptions {
    double dt = 0.01;
    double t_end = 5.0;
    int refresh_every = 10;    // steps per frozen-field window
    int snapshot_every = 0;    // 0 = no intermediate snapshots
    bool store_frames = false;
    double blowup_sup = 1e7;   // sup-norm bound on any phase coordinate
    kernels::BackendKind backend = kernels::BackendKind::scalar;
    ThreadPool* pool = nullptr;  // null = run on the calling thread

    void validate() const;
    std::uint64_t steps() const;  // dt divides t_end within 1e-9 or ConfigError
};

// dv/dt for every particle of `e`: pair forces among e's own particles
// (weight 1/(n-1), zero when n = 1) plus the guidance term
// (U(rho_i) * dir(x_i) - v_i)/T sampled from the frozen field.
// `hash` must be built over e's positions with cell size 2R; pass null to
// build one internally.
void newtonian_accel(const Ensemble& e, const ModelParams& p, const EikonalField& eik,
                     const std::vector<double>& rho, const kernels::Backend& be,
                     const SpatialHash* hash, ThreadPool* pool,
                     std::vector<double>& ax, std::vector<double>& ay);

// dv/dt for passive tracers: 1/m * sum of pair forces against all field
// particles plus the guidance term from the field ensemble's frozen data.
// `field_hash` must be built over field positions (cell 2R); null = internal.
void meanfield_accel(const Ensemble& tracked, const Ensemble& field, const ModelParams& p,
                     const EikonalField& eik, const std::vector<double>& tracked_rho,
                     const kernels::Backend& be, const SpatialHash* field_hash,
                     ThreadPool* pool, std::vector<double>& ax, std::vector<double>& ay);

// Frozen-field construction at the current state.
FrozenField freeze_own_field(const Ensemble& e, const ModelParams& p, const Scenario& sc);
std::vector<double> tracer_rho(const Ensemble& tracked, const Ensemble& field,
                               const ModelParams& p, std::uint32_t field_n_r_max);

struct NewtonianRun {
    Ensemble initial;
    Ensemble state;  // at t_end
    std::vector<std::pair<std::uint64_t, Ensemble>> snapshots;
    std::vector<FieldFrame> frames;
    std::uint64_t steps = 0;
    double dt = 0.0, t_end = 0.0;
};

struct CoupledRun {
    Ensemble newt0, tracked0, field0;
    Ensemble newt, tracked, field;
    // Running supremum of the tracked/newtonian phase-space gap, one entry
    // per step boundary (size steps + 1, first entry 0). Non-decreasing.
    std::vector<double> dev_sup;
    std::vector<CoupledFrame> frames;
    std::vector<std::pair<std::uint64_t, Ensemble>> snapshots_newt, snapshots_tracked,
        snapshots_field;
    std::uint64_t steps = 0;
    double dt = 0.0, t_end = 0.0;
    ModelParams params;
    Scenario scenario;
    kernels::BackendKind backend = kernels::BackendKind::scalar;
};

// Single-system run (the `simulate` subcommand).
NewtonianRun run_newtonian(const F0Spec& f0, const ModelParams& p, const Scenario& sc,
                           std::size_t n, std::uint64_t seed, std::uint32_t replica,
                           const RunOptions& opt);

// As run_newtonian but from a caller-supplied initial state.
NewtonianRun run_newtonian_from(const Ensemble& init, const ModelParams& p,
                                const Scenario& sc, const RunOptions& opt);

// Coupled run on shared initial data; m >= 4n enforced. Throws BlowUpError
// when any phase coordinate leaves [-blowup_sup, blowup_sup] or goes
// non-finite.
CoupledRun run_coupled(const F0Spec& f0, const ModelParams& p, const Scenario& sc,
                       std::size_t n, std::size_t m, std::uint64_t seed,
                       std::uint32_t replica, const RunOptions& opt);

// As run_coupled but from caller-supplied initial states (newt0 is copied
// into the tracked system, so both start bit-identical).
CoupledRun run_coupled_from(const Ensemble& init, const Ensemble& field_init,
                            const ModelParams& p, const Scenario& sc, const RunOptions& opt);

// Integrates all three subsystems backward from the stored final state,
// replaying the stored frozen frames in reverse, and returns the largest
// phase-space gap against the stored initial data. Requires store_frames.
double backward_check(const CoupledRun& run, ThreadPool* pool = nullptr);

} // namespace pedflow
