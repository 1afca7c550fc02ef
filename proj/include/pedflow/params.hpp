#pragma once
#include <cmath>
#include <cstdint>
#include <string>

#include "pedflow/errors.hpp"

namespace pedflow {

enum class SpeedModel { linear, exponential };

// Physical and numerical model parameters. Defaults are the reference
// corridor scenario; majorant_c / lipschitz_v are produced by the calibrate
// subcommand (finite-difference sweep with safety margin) for the default
// parameter set and are revalidated by the certification tests.
struct ModelParams {
    double k_n = 1.0;       // normal contact stiffness
    double gamma_n = 0.5;   // normal dissipation
    double gamma_t = 0.5;   // tangential dissipation
    double R = 0.6;         // interaction radius (positions)
    double R_tilde = 2.0;   // interaction radius (velocities)
    double T = 0.5;         // relaxation time of the desired-velocity term
    double U_max = 1.34;    // free walking speed
    double theta = 0.2;     // cut-off exponent; inner region is |x| < n^-theta
    std::uint32_t n = 64;   // particle count the cut-off is scaled for
    int mollifier_order = 2;

    // Calibrated for the defaults above (observed maxima 2.31 / 2.04 plus a
    // 15% margin; `pedflow calibrate` reproduces them).
    double majorant_c = 2.66;   // constant C in the Lipschitz majorant q^n
    double lipschitz_v = 2.34;  // global velocity-Lipschitz bound for the force

    SpeedModel speed_model = SpeedModel::linear;
    double speed_rate = 2.0;  // exponential model decay rate

    void validate() const {
        auto fail = [](const std::string& m) { throw ConfigError("params." + m); };
        if (!(k_n > 0.0)) fail("k_n: must be > 0");
        if (!(gamma_n >= 0.0)) fail("gamma_n: must be >= 0");
        if (!(gamma_t >= 0.0)) fail("gamma_t: must be >= 0");
        if (!(R > 0.0)) fail("R: must be > 0");
        if (!(R_tilde > 0.0)) fail("R_tilde: must be > 0");
        if (!(T > 0.0)) fail("T: must be > 0");
        if (!(U_max > 0.0)) fail("U_max: must be > 0");
        if (!(theta > 0.0 && theta < 0.25)) fail("theta: must lie in the open interval (0, 1/4)");
        if (n < 1) fail("n: must be >= 1");
        if (mollifier_order < 1 || mollifier_order > 3) fail("mollifier_order: must be 1, 2 or 3");
        if (!(majorant_c > 0.0)) fail("majorant_c: must be > 0");
        if (!(lipschitz_v > 0.0)) fail("lipschitz_v: must be > 0");
        if (!(speed_rate > 0.0)) fail("speed_rate: must be > 0");
    }

    double cutoff_radius() const { return std::pow(static_cast<double>(n), -theta); }

    // U(rho): desired walking speed as a function of normalized density.
    double desired_speed(double rho) const {
        switch (speed_model) {
            case SpeedModel::linear: return U_max * (1.0 - rho);
            case SpeedModel::exponential: return U_max * std::exp(-speed_rate * rho);
        }
        return 0.0;
    }
};

// Rate exponents for the deviation statistics. The admissible region is a set
// of open intervals; boundary values are rejected.
struct ExponentConfig {
    double theta = 0.2;
    double alpha = 0.1;
    double beta = 0.15;
    double gamma = 0.02;

    void validate() const {
        auto fail = [](const std::string& m) { throw ConfigError("exponents." + m); };
        if (!(theta > 0.0 && theta < 0.25)) fail("theta: must lie in (0, 1/4)");
        if (!(alpha > 0.0 && alpha < 0.2)) fail("alpha: must lie in (0, 1/5)");
        if (!(beta > alpha && beta < (1.0 - alpha) / 4.0))
            fail("beta: must lie in (alpha, (1-alpha)/4)");
        if (!(gamma > 0.0 && gamma < (1.0 - alpha) / 4.0 - theta))
            fail("gamma: must lie in (0, (1-alpha)/4 - theta)");
    }

    // Theoretical decay rate of P(sup-deviation events): the binding term of
    // the three error budgets.
    double rate_exponent() const {
        const double a = 1.0 - alpha - 4.0 * beta;
        const double b = 1.0 - alpha - 4.0 * theta - 4.0 * gamma;
        const double c = beta - alpha;
        return std::min(a, std::min(b, c));
    }
};

} // namespace pedflow
