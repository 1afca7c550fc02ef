#pragma once
#include <array>
#include <cmath>
#include <utility>
#include <vector>

#include "pedflow/ensemble.hpp"
#include "pedflow/errors.hpp"
#include "pedflow/rng.hpp"
#include "pedflow/vec2.hpp"

namespace pedflow {

// Initial phase-space law: a finite mixture of product distributions over
// (x, y, vx, vy). Every marginal has bounded support; lo == hi is a point
// mass.
struct F0Dim {
    enum class Kind { uniform, trunc_gauss };
    Kind kind = Kind::uniform;
    double lo = 0.0, hi = 1.0;
    double mean = 0.0, sigma = 1.0;  // trunc_gauss only
};

struct F0Component {
    std::array<F0Dim, 4> dims;  // x, y, vx, vy
    double weight = 1.0;
};

struct F0Spec {
    std::vector<F0Component> components;

    void validate() const {
        if (components.empty()) throw ConfigError("f0: needs at least one component");
        double wsum = 0.0;
        for (std::size_t c = 0; c < components.size(); ++c) {
            const auto& comp = components[c];
            const std::string where = "f0.components[" + std::to_string(c) + "]";
            if (!(comp.weight > 0.0)) throw ConfigError(where + ".weight: must be > 0");
            wsum += comp.weight;
            for (int d = 0; d < 4; ++d) {
                const auto& dim = comp.dims[d];
                if (!std::isfinite(dim.lo) || !std::isfinite(dim.hi) || dim.lo > dim.hi)
                    throw ConfigError(where + ": bounds must be finite with lo <= hi");
                if (dim.kind == F0Dim::Kind::trunc_gauss && !(dim.sigma > 0.0))
                    throw ConfigError(where + ".sigma: must be > 0");
            }
        }
        if (!(wsum > 0.0) || !std::isfinite(wsum))
            throw ConfigError("f0: component weights are unnormalizable");
    }

    std::pair<Vec2, Vec2> sample(CounterRng& rng) const {
        std::size_t pick = 0;
        if (components.size() > 1) {
            double wsum = 0.0;
            for (const auto& c : components) wsum += c.weight;
            const double u = rng.uniform01() * wsum;
            double acc = 0.0;
            for (std::size_t c = 0; c < components.size(); ++c) {
                acc += components[c].weight;
                if (u < acc || c + 1 == components.size()) {
                    pick = c;
                    break;
                }
            }
        }
        std::array<double, 4> z{};
        for (int d = 0; d < 4; ++d) {
            const auto& dim = components[pick].dims[d];
            if (dim.lo == dim.hi)
                z[d] = dim.lo;
            else if (dim.kind == F0Dim::Kind::uniform)
                z[d] = rng.uniform(dim.lo, dim.hi);
            else
                z[d] = rng.truncated_gaussian(dim.mean, dim.sigma, dim.lo, dim.hi);
        }
        return {{z[0], z[1]}, {z[2], z[3]}};
    }
};

// Uniform product box helper (the common case in configs and tests).
inline F0Spec uniform_box_f0(double x_lo, double x_hi, double y_lo, double y_hi,
                             double vx_lo, double vx_hi, double vy_lo, double vy_hi) {
    F0Component c;
    c.dims[0] = {F0Dim::Kind::uniform, x_lo, x_hi, 0, 1};
    c.dims[1] = {F0Dim::Kind::uniform, y_lo, y_hi, 0, 1};
    c.dims[2] = {F0Dim::Kind::uniform, vx_lo, vx_hi, 0, 1};
    c.dims[3] = {F0Dim::Kind::uniform, vy_lo, vy_hi, 0, 1};
    return F0Spec{{c}};
}

// Draw an ensemble of n particles. Each particle has its own RNG stream, so
// the first k draws agree for any n >= k and any thread layout.
inline Ensemble sample_ensemble(const F0Spec& f0, std::size_t n, std::uint64_t seed,
                                StreamPurpose purpose, std::uint32_t replica) {
    Ensemble e(n);
    for (std::size_t i = 0; i < n; ++i) {
        CounterRng rng(seed, purpose, replica, static_cast<std::uint32_t>(i));
        const auto [x, v] = f0.sample(rng);
        e.set(i, x, v);
    }
    return e;
}

} // namespace pedflow
