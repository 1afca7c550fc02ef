#include "pedflow/field.hpp"

#include <algorithm>
#include <cmath>
#include <queue>
#include <stdexcept>
#include <string>

namespace pedflow {

namespace {
constexpr double kInf = std::numeric_limits<double>::infinity();
}

void Scenario::validate() const {
    auto fail = [](const std::string& m) { throw ConfigError("scenario." + m); };
    if (!(x1 > x0) || !(y1 > y0)) fail("domain: must have positive extent");
    if (!(grid_h > 0.0)) fail("grid_h: must be > 0");
    if (!(slowness_floor > 0.0 && slowness_floor < 1.0))
        fail("slowness_floor: must lie in (0, 1)");
    const double rx = (x1 - x0) / grid_h, ry = (y1 - y0) / grid_h;
    if (std::abs(rx - std::round(rx)) > 1e-9 * std::max(1.0, rx) ||
        std::abs(ry - std::round(ry)) > 1e-9 * std::max(1.0, ry))
        fail("grid_h: must divide both domain side lengths");
    if (nx() < 2 || ny() < 2) fail("grid_h: grid must be at least 2x2");
    if (!(span_lo < span_hi)) fail("target: span_lo must be < span_hi");

    // The target segment must intersect at least one edge cell.
    bool any = false;
    const bool vertical = target_edge == Edge::left || target_edge == Edge::right;
    const int count = vertical ? ny() : nx();
    for (int k = 0; k < count; ++k) {
        const double c = vertical ? y0 + (k + 0.5) * grid_h : x0 + (k + 0.5) * grid_h;
        if (c >= span_lo && c <= span_hi) any = true;
    }
    if (!any) fail("target: empty (span does not cover any edge cell)");
}

DensityField local_density(const Ensemble& ens, double R, const SpatialHash* hash) {
    const std::size_t n = ens.size();
    if (n == 0) throw std::invalid_argument("local_density: empty ensemble");
    SpatialHash own;
    if (!hash) {
        own.build(ens.px.data(), ens.py.data(), n, 2.0 * R);
        hash = &own;
    }
    DensityField out;
    out.rho.resize(n);
    std::vector<std::uint32_t> counts(n);
    std::vector<std::uint32_t> cand;
    const double r2 = R * R;
    std::uint32_t maxc = 1;
    for (std::size_t i = 0; i < n; ++i) {
        hash->gather(ens.px[i], ens.py[i], static_cast<std::uint32_t>(i), cand);
        std::uint32_t c = 1;  // self
        for (const std::uint32_t j : cand) {
            const double dx = ens.px[i] - ens.px[j];
            const double dy = ens.py[i] - ens.py[j];
            if (dx * dx + dy * dy < r2) ++c;
        }
        counts[i] = c;
        maxc = std::max(maxc, c);
    }
    out.n_r_max = maxc;
    for (std::size_t i = 0; i < n; ++i)
        out.rho[i] = static_cast<double>(counts[i]) / maxc;
    return out;
}

std::vector<double> density_at_points(const Ensemble& source, const SpatialHash& source_hash,
                                      const std::vector<Vec2>& points, double R,
                                      std::uint32_t n_r_max) {
    std::vector<double> out(points.size());
    std::vector<std::uint32_t> cand;
    const double r2 = R * R;
    for (std::size_t i = 0; i < points.size(); ++i) {
        source_hash.gather(points[i].x, points[i].y, SpatialHash::npos, cand);
        std::uint32_t c = 0;
        for (const std::uint32_t j : cand) {
            const double dx = points[i].x - source.px[j];
            const double dy = points[i].y - source.py[j];
            if (dx * dx + dy * dy < r2) ++c;
        }
        out[i] = std::min(1.0, static_cast<double>(c) / n_r_max);
    }
    return out;
}

GridField density_grid(const Ensemble& ens, const Scenario& sc, double R,
                       std::uint32_t n_r_max, bool clamp_outside) {
    GridField g;
    g.nx = sc.nx();
    g.ny = sc.ny();
    g.h = sc.grid_h;
    g.x0 = sc.x0;
    g.y0 = sc.y0;
    g.v.assign(static_cast<std::size_t>(g.nx) * g.ny, 0.0);
    const double r2 = R * R;
    for (std::size_t p = 0; p < ens.size(); ++p) {
        double x = ens.px[p], y = ens.py[p];
        if (!sc.contains({x, y})) {
            if (!clamp_outside)
                throw std::domain_error("density_grid: particle " + std::to_string(p) +
                                        " outside the scenario domain");
            x = std::clamp(x, sc.x0, sc.x1);
            y = std::clamp(y, sc.y0, sc.y1);
        }
        // Cells whose center lies strictly within R of the particle.
        const int i_lo = std::max(0, static_cast<int>(std::floor((x - R - g.x0) / g.h - 0.5)));
        const int i_hi = std::min(g.nx - 1, static_cast<int>(std::ceil((x + R - g.x0) / g.h - 0.5)));
        const int j_lo = std::max(0, static_cast<int>(std::floor((y - R - g.y0) / g.h - 0.5)));
        const int j_hi = std::min(g.ny - 1, static_cast<int>(std::ceil((y + R - g.y0) / g.h - 0.5)));
        for (int j = j_lo; j <= j_hi; ++j) {
            for (int i = i_lo; i <= i_hi; ++i) {
                const double dx = g.cx(i) - x, dy = g.cy(j) - y;
                if (dx * dx + dy * dy < r2) g.at(i, j) += 1.0;
            }
        }
    }
    for (double& v : g.v) v /= n_r_max;
    return g;
}

GridField slowness_from_density(const GridField& rho, const Scenario& sc) {
    GridField w = rho;
    const double eps = sc.slowness_floor;
    for (double& v : w.v) {
        const double clamped = std::clamp(v, eps, 1.0 / eps);
        v = sc.slowness_map == Scenario::SlownessMap::paper_reciprocal ? 1.0 / clamped : clamped;
    }
    return w;
}

namespace {

std::vector<std::pair<int, int>> target_cells(const Scenario& sc) {
    std::vector<std::pair<int, int>> cells;
    const int nx = sc.nx(), ny = sc.ny();
    auto in_span = [&](double c) { return c >= sc.span_lo && c <= sc.span_hi; };
    switch (sc.target_edge) {
        case Scenario::Edge::left:
            for (int j = 0; j < ny; ++j)
                if (in_span(sc.y0 + (j + 0.5) * sc.grid_h)) cells.emplace_back(0, j);
            break;
        case Scenario::Edge::right:
            for (int j = 0; j < ny; ++j)
                if (in_span(sc.y0 + (j + 0.5) * sc.grid_h)) cells.emplace_back(nx - 1, j);
            break;
        case Scenario::Edge::bottom:
            for (int i = 0; i < nx; ++i)
                if (in_span(sc.x0 + (i + 0.5) * sc.grid_h)) cells.emplace_back(i, 0);
            break;
        case Scenario::Edge::top:
            for (int i = 0; i < nx; ++i)
                if (in_span(sc.x0 + (i + 0.5) * sc.grid_h)) cells.emplace_back(i, ny - 1);
            break;
    }
    return cells;
}

// Upwind update from accepted one-sided values a (x axis) and b (y axis).
double upwind_solve(double a, double b, double wh) {
    if (a > b) std::swap(a, b);
    if (b == kInf || b - a >= wh) return a + wh;
    const double d = 2.0 * wh * wh - (b - a) * (b - a);
    return 0.5 * (a + b + std::sqrt(d));
}

} // namespace

EikonalField solve_eikonal_slowness(const GridField& w, const Scenario& sc,
                                    std::vector<double>* acceptance_order) {
    const int nx = w.nx, ny = w.ny;
    EikonalField f;
    f.nx = nx;
    f.ny = ny;
    f.h = w.h;
    f.x0 = w.x0;
    f.y0 = w.y0;
    const std::size_t total = static_cast<std::size_t>(nx) * ny;
    f.phi.assign(total, kInf);
    f.gx.assign(total, 0.0);
    f.gy.assign(total, 0.0);

    auto idx = [nx](int i, int j) { return static_cast<std::size_t>(j) * nx + i; };

    std::vector<char> accepted(total, 0);
    using Node = std::pair<double, std::size_t>;
    std::priority_queue<Node, std::vector<Node>, std::greater<Node>> heap;

    // Target cells start at zero. Their 8-neighborhoods seed with the exact
    // local distance (times the local w); this removes the source-singularity
    // error of pure upwind seeding near point-like targets and coincides with
    // the plain scheme on planar fronts.
    const auto targets = target_cells(sc);
    for (const auto& [i, j] : targets) {
        f.phi[idx(i, j)] = 0.0;
        heap.emplace(0.0, idx(i, j));
    }
    for (const auto& [ti, tj] : targets) {
        for (int dj = -1; dj <= 1; ++dj) {
            for (int di = -1; di <= 1; ++di) {
                const int ni = ti + di, nj = tj + dj;
                if ((di == 0 && dj == 0) || ni < 0 || ni >= nx || nj < 0 || nj >= ny) continue;
                const std::size_t nc = idx(ni, nj);
                if (f.phi[nc] == 0.0) continue;  // target cell
                const double dist = w.h * std::sqrt(double(di * di + dj * dj));
                const double cand = w.v[nc] * dist;
                if (cand < f.phi[nc]) {
                    f.phi[nc] = cand;
                    heap.emplace(cand, nc);
                }
            }
        }
    }

    const int di[4] = {-1, 1, 0, 0};
    const int dj[4] = {0, 0, -1, 1};
    while (!heap.empty()) {
        const auto [value, c] = heap.top();
        heap.pop();
        if (accepted[c] || value > f.phi[c]) continue;  // stale entry
        accepted[c] = 1;
        if (acceptance_order) acceptance_order->push_back(value);
        const int ci = static_cast<int>(c % nx), cj = static_cast<int>(c / nx);
        for (int d = 0; d < 4; ++d) {
            const int ni = ci + di[d], nj = cj + dj[d];
            if (ni < 0 || ni >= nx || nj < 0 || nj >= ny) continue;
            const std::size_t nc = idx(ni, nj);
            if (accepted[nc]) continue;
            auto acc_phi = [&](int i, int j) {
                if (i < 0 || i >= nx || j < 0 || j >= ny) return kInf;
                const std::size_t k = idx(i, j);
                return accepted[k] ? f.phi[k] : kInf;
            };
            const double a = std::min(acc_phi(ni - 1, nj), acc_phi(ni + 1, nj));
            const double b = std::min(acc_phi(ni, nj - 1), acc_phi(ni, nj + 1));
            const double cand = upwind_solve(a, b, w.v[nc] * w.h);
            if (cand < f.phi[nc]) {
                f.phi[nc] = cand;
                heap.emplace(cand, nc);
            }
        }
    }

    // Upwind gradient: one-sided difference toward the strictly smaller
    // neighbor per axis; zero on plateaus, ties and unreached cells.
    auto phi_or_inf = [&](int i, int j) {
        if (i < 0 || i >= nx || j < 0 || j >= ny) return kInf;
        return f.phi[idx(i, j)];
    };
    for (int j = 0; j < ny; ++j) {
        for (int i = 0; i < nx; ++i) {
            const std::size_t c = idx(i, j);
            const double me = f.phi[c];
            if (me == kInf) continue;
            const double l = phi_or_inf(i - 1, j), r = phi_or_inf(i + 1, j);
            const double lo = phi_or_inf(i, j - 1), hi = phi_or_inf(i, j + 1);
            if (l < me || r < me) {
                if (l < r) f.gx[c] = (me - l) / f.h;
                else if (r < l) f.gx[c] = (r - me) / f.h;
            }
            if (lo < me || hi < me) {
                if (lo < hi) f.gy[c] = (me - lo) / f.h;
                else if (hi < lo) f.gy[c] = (hi - me) / f.h;
            }
        }
    }
    return f;
}

EikonalField solve_eikonal(const Ensemble& ens, const Scenario& sc, double R,
                           std::uint32_t n_r_max, bool clamp_outside) {
    const GridField rho = density_grid(ens, sc, R, n_r_max, clamp_outside);
    return solve_eikonal_slowness(slowness_from_density(rho, sc), sc);
}

namespace {

Vec2 bilinear_gradient(const EikonalField& f, Vec2 p) {
    // Cell-center interpolation with clamping at the domain boundary.
    const double fx = (p.x - f.x0) / f.h - 0.5;
    const double fy = (p.y - f.y0) / f.h - 0.5;
    const int i0 = std::clamp(static_cast<int>(std::floor(fx)), 0, f.nx - 2);
    const int j0 = std::clamp(static_cast<int>(std::floor(fy)), 0, f.ny - 2);
    const double tx = std::clamp(fx - i0, 0.0, 1.0);
    const double ty = std::clamp(fy - j0, 0.0, 1.0);
    auto at = [&](const std::vector<double>& g, int i, int j) {
        return g[static_cast<std::size_t>(j) * f.nx + i];
    };
    auto lerp2 = [&](const std::vector<double>& g) {
        const double a = at(g, i0, j0) * (1 - tx) + at(g, i0 + 1, j0) * tx;
        const double b = at(g, i0, j0 + 1) * (1 - tx) + at(g, i0 + 1, j0 + 1) * tx;
        return a * (1 - ty) + b * ty;
    };
    return {lerp2(f.gx), lerp2(f.gy)};
}

} // namespace

Vec2 direction_at(const EikonalField& f, Vec2 p) {
    if (!f.contains(p)) throw std::domain_error("direction_at: position outside domain");
    const Vec2 g = bilinear_gradient(f, p);
    const double norm = g.norm();
    if (norm < 1e-12) return {0.0, 0.0};
    return {-g.x / norm, -g.y / norm};
}

Vec2 direction_at_clamped(const EikonalField& f, Vec2 p) {
    p.x = std::clamp(p.x, f.x0, f.x0 + f.nx * f.h);
    p.y = std::clamp(p.y, f.y0, f.y0 + f.ny * f.h);
    const Vec2 g = bilinear_gradient(f, p);
    const double norm = g.norm();
    if (norm < 1e-12) return {0.0, 0.0};
    return {-g.x / norm, -g.y / norm};
}

} // namespace pedflow
