#pragma once
#include <cstddef>
#include <vector>

#include "pedflow/vec2.hpp"

namespace pedflow {

// SoA particle state. Used both for tracked ensembles (size n) and the
// mean-field quadrature ensemble (size m).
struct Ensemble {
    std::vector<double> px, py, vx, vy;

    Ensemble() = default;
    explicit Ensemble(std::size_t n) : px(n), py(n), vx(n), vy(n) {}

    std::size_t size() const { return px.size(); }

    Vec2 pos(std::size_t i) const { return {px[i], py[i]}; }
    Vec2 vel(std::size_t i) const { return {vx[i], vy[i]}; }

    void set(std::size_t i, Vec2 x, Vec2 v) {
        px[i] = x.x;
        py[i] = x.y;
        vx[i] = v.x;
        vy[i] = v.y;
    }
};

// Sup-norm distance between two ensembles over all phase-space coordinates.
inline double sup_distance(const Ensemble& a, const Ensemble& b) {
    double d = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        d = std::max(d, std::abs(a.px[i] - b.px[i]));
        d = std::max(d, std::abs(a.py[i] - b.py[i]));
        d = std::max(d, std::abs(a.vx[i] - b.vx[i]));
        d = std::max(d, std::abs(a.vy[i] - b.vy[i]));
    }
    return d;
}

} // namespace pedflow
