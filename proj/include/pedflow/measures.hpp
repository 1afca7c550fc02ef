#pragma once
#include <array>
#include <cstdint>
#include <vector>

#include "pedflow/ensemble.hpp"
#include "pedflow/errors.hpp"
#include "pedflow/integrator.hpp"
#include "pedflow/thread_pool.hpp"

// Empirical measures on phase space R^2 x R^2 and a bracketed bounded
// Lipschitz distance: a certified lower bound from a randomized bank of
// admissible test functions, and an upper bound from exact assignment on
// (sub)sampled supports with costs min(euclidean, 2).

namespace pedflow {

struct EmpiricalMeasure {
    std::vector<double> px, py, vx, vy;
    std::vector<double> w;  // non-negative, summing to 1 up to round-off

    std::size_t size() const { return px.size(); }
    void validate() const;
    void push(Vec2 x, Vec2 v, double weight);
    static EmpiricalMeasure from_ensemble(const Ensemble& e);
};

// A bank test function. Both families satisfy |g| <= 1 and Lip(g) <= 1 in
// the euclidean metric on R^4 by construction:
//   cone   g(z) = clip(a - |z - c|, -1, 1)
//   ridge  g(z) = sin(<c, z> + a) / max(1, |c|)
struct Witness {
    enum class Kind : int { cone = 0, ridge = 1 };
    Kind kind = Kind::cone;
    std::array<double, 4> c{};
    double a = 0.0;

    double eval(double x, double y, double vx, double vy) const;
};

struct DistanceBracket {
    double lower = 0.0;
    double upper = 0.0;    // computed independently; lower <= upper holds statistically
    double upper_se = 0.0; // spread over subsample repeats, 0 on the exact path
    Witness witness;       // achieves `lower`
};

// Lower bound: best |mean_mu(g) - mean_nu(g)| over bank_size random test
// functions (half cones seeded on support points, half ridges), refined by
// coordinate hill-climb on the best candidate. Valid by construction.
DistanceBracket bl_lower(const EmpiricalMeasure& mu, const EmpiricalMeasure& nu,
                         std::size_t bank_size, std::uint64_t seed,
                         ThreadPool* pool = nullptr);

// Upper bound: W1 with costs min(|z - z'|, 2), which dominates the bounded
// Lipschitz distance. Equal-size uniformly weighted measures within the
// subsample budget are solved exactly in one shot; anything else is
// estimated from `repeats` i.i.d. subsamples of size min(subsample, sizes)
// per side (upward-biased for the population value, so still an upper bound
// in expectation).
double bl_upper(const EmpiricalMeasure& mu, const EmpiricalMeasure& nu,
                std::size_t subsample, std::uint64_t seed, std::size_t repeats = 3);

struct UpperEstimate {
    double value = 0.0;  // mean over repeats (or the exact one-shot value)
    double se = 0.0;     // standard error over repeats, 0 on the exact path
    std::vector<double> samples;
};

UpperEstimate bl_upper_detail(const EmpiricalMeasure& mu, const EmpiricalMeasure& nu,
                              std::size_t subsample, std::uint64_t seed,
                              std::size_t repeats = 3);

DistanceBracket bl_bracket(const EmpiricalMeasure& mu, const EmpiricalMeasure& nu,
                           std::size_t bank_size, std::size_t subsample,
                           std::uint64_t seed, ThreadPool* pool = nullptr);

enum class MarginalSource { newtonian, meanfield };

// Pools the state at time t across replicas: first particle only (strict
// one-particle marginal) or all particles (exchangeability-boosted, flagged
// by the caller). t must land on a recorded state: 0, t_end, or a snapshot.
EmpiricalMeasure marginal_from_replicas(const std::vector<CoupledRun>& runs,
                                        MarginalSource which, double t, bool pooled);

struct ChaosPoint {
    std::size_t n = 0;
    DistanceBracket start;    // t = 0: marginal vs fresh reference draws
    double baseline = 0.0;    // fresh draws vs fresh draws, same sizes as start
    DistanceBracket end;      // t = t_end: marginal vs pooled field ensemble
};

// Propagation-of-chaos curve: for each n runs `replicas` coupled systems
// (m = m_factor * n) and brackets the distance between the one-particle
// marginal and the field-ensemble reference at t = 0 and t = t_end.
std::vector<ChaosPoint> chaos_curve(const F0Spec& f0, const ModelParams& p,
                                    const Scenario& sc,
                                    const std::vector<std::size_t>& n_list,
                                    std::size_t m_factor, std::size_t replicas,
                                    std::uint64_t seed, const RunOptions& opt,
                                    std::size_t bank_size, std::size_t subsample,
                                    bool pooled, ThreadPool* pool = nullptr);

} // namespace pedflow
