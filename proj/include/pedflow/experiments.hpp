#pragma once
#include <string>
#include <vector>

#include "pedflow/config.hpp"
#include "pedflow/thread_pool.hpp"

// Subcommand implementations. Each writes its primary CSVs plus
// manifest.json into `out` and returns the process exit code (0 success,
// 4 no-signal). Config and numerical failures propagate as exceptions; the
// CLI maps them to exit codes 2 and 3.

namespace pedflow {

int run_simulate(const RunConfig& cfg, const std::string& out, int threads);
int run_couple(const RunConfig& cfg, const std::string& out, int threads);
int run_moments(const RunConfig& cfg, const std::string& out, int threads);
int run_chaos(const RunConfig& cfg, const std::string& out, int threads);
int run_sweep(const RunConfig& cfg, const std::string& out, int threads);
int run_calibrate(const RunConfig& cfg, const std::string& out, int threads);

struct CalibrationResult {
    double majorant_c_observed = 0.0;  // max finite-difference ratio / majorant shape
    double majorant_c = 0.0;           // observed x safety margin
    double lipschitz_v_observed = 0.0; // max velocity finite-difference ratio
    double lipschitz_v = 0.0;
    // per-(kind, n) maxima in sweep order, kinds: 0 = position, 1 = velocity
    std::vector<std::size_t> n_checked;
    std::vector<double> max_position, max_velocity;
};

// Finite-difference sweep behind the calibrate subcommand. Ratios are taken
// against the majorant shape with C = 1 evaluated at the pair member of
// smaller norm, so the result is the smallest admissible C; velocity ratios
// are against the constant 1.
CalibrationResult calibrate_constants(const ModelParams& p,
                                      const std::vector<std::size_t>& n_list,
                                      std::size_t samples, std::uint64_t seed,
                                      ThreadPool* pool = nullptr);

} // namespace pedflow
