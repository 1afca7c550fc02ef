#pragma once
#include <cstdint>
#include <vector>

#include "pedflow/ensemble.hpp"
#include "pedflow/initial.hpp"
#include "pedflow/integrator.hpp"
#include "pedflow/kernels.hpp"
#include "pedflow/params.hpp"
#include "pedflow/thread_pool.hpp"

// Deviation statistics: the capped deviation process, the three event
// indicators, centered-kernel fluctuation moments, binomial probability
// estimates and the log-log rate fit.

namespace pedflow {

// S_t = min{1, n^alpha * dev_sup(t)} on the run's recorded step grid.
std::vector<double> deviation_process(const CoupledRun& run, double alpha);

// True iff the running deviation supremum exceeds n^-alpha (strictly) at any
// recorded time.
bool event_alpha(const CoupledRun& run, double alpha);

// True iff max over tracers of the gap between the tracer-internal pair-force
// average (weight 1/(n-1)) and the field-ensemble reference (weight 1/m)
// exceeds n^-beta; the gap is measured in the max norm over components.
bool event_beta(const Ensemble& tracked, const Ensemble& field, const ModelParams& p,
                double beta, const kernels::Backend& be);

// Same with the scalar Lipschitz-majorant kernel and threshold n^-gamma.
bool event_gamma(const Ensemble& tracked, const Ensemble& field, const ModelParams& p,
                 double gamma, const kernels::Backend& be);

enum class FluctuationKernel { force, majorant };

// Monte Carlo estimates of E[|A|^order] where A = (1/(n-1)) sum_j h_j and
// h_j = k(z1 - z_j) - E_f0[k(z1 - z)]. The mean-field reference is an
// independent per-replica quadrature of `quadrature` samples, so
// E[|A|^2] = V*(1/(n-1) + 1/Q) exactly, with V = E|h|^2; m2_corrected
// removes the quadrature term using the unbiased V estimate.
struct MomentEstimate {
    std::size_t n = 0;
    double mean_x = 0, mean_y = 0;   // components of E[A] (majorant: y = 0)
    double mean_se = 0;              // se of the larger-|.| component
    double m2 = 0, m2_se = 0;        // E[|A|^2]
    double m2_corrected = 0;
    double m4 = 0, m4_se = 0;        // E[|A|^4]; NaN when order = 2
    double var_h = 0;                // pooled unbiased estimate of V
    std::size_t replicas = 0;
};

// order must be 2 or 4 (odd or other orders rejected); order 4 also fills
// the second-moment fields. n_list must be ascending; companions and the
// quadrature are shared across n within a replica (draws are nested).
std::vector<MomentEstimate> fluctuation_moments(FluctuationKernel kernel, const F0Spec& f0,
                                                const std::vector<std::size_t>& n_list,
                                                int order, std::size_t replicas,
                                                std::size_t quadrature, const ModelParams& p,
                                                std::uint64_t seed,
                                                const kernels::Backend& be,
                                                ThreadPool* pool = nullptr);

// 95% Wilson score interval for `hits` successes out of `total`.
void wilson_interval(std::size_t hits, std::size_t total, double& lo, double& hi);

struct ProbEstimate {
    std::size_t n = 0;
    std::size_t replicas = 0;
    std::size_t hits = 0;  // event_alpha occurrences
    double p_hat = 0, lo = 0, hi = 0;
};

// Fraction of independent coupled runs (replica r uses streams keyed by r)
// whose event_alpha fires, with the Wilson interval. replicas >= 30.
// Replicas fan out over `pool`; each inner run is single-threaded.
ProbEstimate probability_estimate(const F0Spec& f0, const ModelParams& p, const Scenario& sc,
                                  const ExponentConfig& ex, std::size_t n, std::size_t m,
                                  std::size_t replicas, std::uint64_t seed,
                                  const RunOptions& base_opt, ThreadPool* pool = nullptr);

struct RatePoint {
    std::size_t n = 0;
    std::size_t replicas = 0, hits = 0;
    double p_hat = 0, lo = 0, hi = 0;
};

struct RateReport {
    double n_theory = 0;        // min{1-a-4b, 1-a-4t-4g, b-a}
    bool fit_ok = false;        // >= 3 uncensored points
    double slope = 0, slope_se = 0, ci_lo = 0, ci_hi = 0;
    std::vector<std::size_t> used_n;
    std::vector<std::size_t> censored_n;  // p_hat = 0, excluded from the fit
};

// Weighted least squares of log p_hat against log n; weights from the Wilson
// interval widths. Censored points (zero hits) are excluded and flagged; an
// unfittable input yields fit_ok = false, never a throw.
RateReport rate_fit(const std::vector<RatePoint>& points, const ExponentConfig& ex);

} // namespace pedflow
