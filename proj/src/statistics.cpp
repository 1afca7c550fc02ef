#include "pedflow/statistics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "pedflow/rng.hpp"
#include "pedflow/spatial_hash.hpp"

namespace pedflow {

std::vector<double> deviation_process(const CoupledRun& run, double alpha) {
    const double scale = std::pow(static_cast<double>(run.newt0.size()), alpha);
    std::vector<double> s(run.dev_sup.size());
    for (std::size_t i = 0; i < s.size(); ++i) s[i] = std::min(1.0, scale * run.dev_sup[i]);
    return s;
}

bool event_alpha(const CoupledRun& run, double alpha) {
    const double threshold = std::pow(static_cast<double>(run.newt0.size()), -alpha);
    return run.dev_sup.back() > threshold;  // running sup, strict inequality
}

namespace {

// Per-tracer gap between the tracer-internal pair average and the
// field-ensemble reference, for either kernel. Component-wise max norm.
double event_gap(const Ensemble& tracked, const Ensemble& field, const ModelParams& p,
                 const kernels::Backend& be, bool majorant) {
    const std::size_t n = tracked.size();
    const PairKernelParams kp = make_pair_kernel_params(p);
    SpatialHash th, fh;
    th.build(tracked.px.data(), tracked.py.data(), n, 2.0 * p.R);
    fh.build(field.px.data(), field.py.data(), field.size(), 2.0 * p.R);
    const double wn = n > 1 ? 1.0 / static_cast<double>(n - 1) : 0.0;
    const double wm = 1.0 / static_cast<double>(field.size());
    std::vector<std::uint32_t> cand;
    double gap = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const Vec2 xi = tracked.pos(i), vi = tracked.vel(i);
        double ax = 0.0, ay = 0.0, bx = 0.0, by = 0.0;
        th.gather(xi.x, xi.y, static_cast<std::uint32_t>(i), cand);
        if (majorant) {
            ax = be.majorant_sum(tracked.px.data(), tracked.py.data(), tracked.vx.data(),
                                 tracked.vy.data(), cand.data(), cand.size(), xi.x, xi.y,
                                 vi.x, vi.y, kp);
        } else {
            be.force_sum(tracked.px.data(), tracked.py.data(), tracked.vx.data(),
                         tracked.vy.data(), cand.data(), cand.size(), xi.x, xi.y, vi.x, vi.y,
                         kp, ax, ay);
        }
        fh.gather(xi.x, xi.y, SpatialHash::npos, cand);
        if (majorant) {
            bx = be.majorant_sum(field.px.data(), field.py.data(), field.vx.data(),
                                 field.vy.data(), cand.data(), cand.size(), xi.x, xi.y, vi.x,
                                 vi.y, kp);
        } else {
            be.force_sum(field.px.data(), field.py.data(), field.vx.data(), field.vy.data(),
                         cand.data(), cand.size(), xi.x, xi.y, vi.x, vi.y, kp, bx, by);
        }
        gap = std::max(gap, std::max(std::abs(wn * ax - wm * bx), std::abs(wn * ay - wm * by)));
    }
    return gap;
}

} // namespace

bool event_beta(const Ensemble& tracked, const Ensemble& field, const ModelParams& p,
                double beta, const kernels::Backend& be) {
    const double threshold = std::pow(static_cast<double>(tracked.size()), -beta);
    return event_gap(tracked, field, p, be, /*majorant=*/false) > threshold;
}

bool event_gamma(const Ensemble& tracked, const Ensemble& field, const ModelParams& p,
                 double gamma, const kernels::Backend& be) {
    const double threshold = std::pow(static_cast<double>(tracked.size()), -gamma);
    return event_gap(tracked, field, p, be, /*majorant=*/true) > threshold;
}

namespace {

struct Soa4 {
    std::vector<double> px, py, vx, vy;
    void resize(std::size_t n) {
        px.resize(n);
        py.resize(n);
        vx.resize(n);
        vy.resize(n);
    }
};

// Sums k(q - s_j) over the selected draws for either kernel; the scalar
// kernel reports through .x.
Vec2 kernel_sum(const kernels::Backend& be, bool majorant, const Soa4& s,
                const std::uint32_t* idx, std::size_t count, Vec2 q, Vec2 qv,
                const PairKernelParams& kp) {
    if (majorant)
        return {be.majorant_sum(s.px.data(), s.py.data(), s.vx.data(), s.vy.data(), idx, count,
                                q.x, q.y, qv.x, qv.y, kp),
                0.0};
    Vec2 f{0.0, 0.0};
    be.force_sum(s.px.data(), s.py.data(), s.vx.data(), s.vy.data(), idx, count, q.x, q.y,
                 qv.x, qv.y, kp, f.x, f.y);
    return f;
}

Vec2 kernel_one(bool majorant, Vec2 dx, Vec2 dv, const PairKernelParams& kp) {
    if (majorant) return {lipschitz_majorant(dx, dv, kp), 0.0};
    return cutoff_force(dx, dv, kp);
}

struct ReplicaMoment {
    double ax, ay, a2, a4, vh;
};

} // namespace

std::vector<MomentEstimate> fluctuation_moments(FluctuationKernel kernel, const F0Spec& f0,
                                                const std::vector<std::size_t>& n_list,
                                                int order, std::size_t replicas,
                                                std::size_t quadrature, const ModelParams& p,
                                                std::uint64_t seed,
                                                const kernels::Backend& be, ThreadPool* pool) {
    if (order != 2 && order != 4)
        throw std::invalid_argument("fluctuation_moments: order must be 2 or 4");
    if (n_list.empty() || replicas == 0 || quadrature < 2)
        throw std::invalid_argument("fluctuation_moments: empty protocol");
    for (std::size_t k = 0; k < n_list.size(); ++k)
        if (n_list[k] < 2 || (k > 0 && n_list[k] <= n_list[k - 1]))
            throw std::invalid_argument("fluctuation_moments: n_list must be ascending, n >= 2");
    f0.validate();

    const bool majorant = kernel == FluctuationKernel::majorant;
    const std::size_t nn = n_list.size();
    const std::size_t n_max = n_list.back();
    // The kernels for different n agree wherever |dx| >= the largest cut-off
    // radius (the smallest n), so one full quadrature pass with that kernel
    // plus per-n corrections over the close draws is exact.
    ModelParams p_front = p;
    p_front.n = static_cast<std::uint32_t>(n_list.front());
    const PairKernelParams kp_front = make_pair_kernel_params(p_front);
    const double cut_front = p_front.cutoff_radius();
    const std::size_t q_sub = std::min<std::size_t>(quadrature, 10000);

    std::vector<ReplicaMoment> cells(replicas * nn);

    auto replica_body = [&](std::size_t first, std::size_t last) {
        Soa4 comp, quad;
        comp.resize(n_max - 1);
        quad.resize(quadrature);
        std::vector<std::uint32_t> close;
        for (std::size_t r = first; r < last; ++r) {
            const auto rep = static_cast<std::uint32_t>(r);
            CounterRng prim(seed, StreamPurpose::moment_primary, rep, 0);
            const auto [x1, v1] = f0.sample(prim);

            for (std::size_t j = 0; j + 1 < n_max; ++j) {
                CounterRng rng(seed, StreamPurpose::moment_companion, rep,
                               static_cast<std::uint32_t>(j));
                const auto [x, v] = f0.sample(rng);
                comp.px[j] = x.x;
                comp.py[j] = x.y;
                comp.vx[j] = v.x;
                comp.vy[j] = v.y;
            }
            close.clear();
            for (std::size_t q = 0; q < quadrature; ++q) {
                CounterRng rng(seed, StreamPurpose::moment_quadrature, rep,
                               static_cast<std::uint32_t>(q));
                const auto [x, v] = f0.sample(rng);
                quad.px[q] = x.x;
                quad.py[q] = x.y;
                quad.vx[q] = v.x;
                quad.vy[q] = v.y;
                const double dx = x1.x - x.x, dy = x1.y - x.y;
                if (dx * dx + dy * dy < cut_front * cut_front)
                    close.push_back(static_cast<std::uint32_t>(q));
            }

            const Vec2 s_base =
                kernel_sum(be, majorant, quad, nullptr, quadrature, x1, v1, kp_front);
            const Vec2 s_close_front =
                kernel_sum(be, majorant, quad, close.data(), close.size(), x1, v1, kp_front);

            for (std::size_t k = 0; k < nn; ++k) {
                ModelParams pn = p;
                pn.n = static_cast<std::uint32_t>(n_list[k]);
                const PairKernelParams kp = make_pair_kernel_params(pn);
                const Vec2 s_close =
                    kernel_sum(be, majorant, quad, close.data(), close.size(), x1, v1, kp);
                const double inv_q = 1.0 / static_cast<double>(quadrature);
                const Vec2 ref{(s_base.x - s_close_front.x + s_close.x) * inv_q,
                               (s_base.y - s_close_front.y + s_close.y) * inv_q};

                const std::size_t nc = n_list[k] - 1;
                const Vec2 cs = kernel_sum(be, majorant, comp, nullptr, nc, x1, v1, kp);
                const Vec2 a{cs.x / nc - ref.x, cs.y / nc - ref.y};

                double s1x = 0.0, s1y = 0.0, s2 = 0.0;
                for (std::size_t q = 0; q < q_sub; ++q) {
                    const Vec2 kv = kernel_one(majorant, {x1.x - quad.px[q], x1.y - quad.py[q]},
                                               {v1.x - quad.vx[q], v1.y - quad.vy[q]}, kp);
                    s1x += kv.x;
                    s1y += kv.y;
                    s2 += kv.x * kv.x + kv.y * kv.y;
                }
                const double vh =
                    (s2 - (s1x * s1x + s1y * s1y) / q_sub) / static_cast<double>(q_sub - 1);

                const double a2 = a.x * a.x + a.y * a.y;
                cells[r * nn + k] = {a.x, a.y, a2, a2 * a2, vh};
            }
        }
    };
    if (pool)
        pool->parallel_for(replicas, 1, replica_body);
    else
        replica_body(0, replicas);

    // Deterministic aggregation in replica order.
    std::vector<MomentEstimate> out(nn);
    const double nan = std::numeric_limits<double>::quiet_NaN();
    for (std::size_t k = 0; k < nn; ++k) {
        MomentEstimate& e = out[k];
        e.n = n_list[k];
        e.replicas = replicas;
        double sx = 0, sy = 0, s2 = 0, s4 = 0, sv = 0;
        for (std::size_t r = 0; r < replicas; ++r) {
            const ReplicaMoment& c = cells[r * nn + k];
            sx += c.ax;
            sy += c.ay;
            s2 += c.a2;
            s4 += c.a4;
            sv += c.vh;
        }
        const double ir = 1.0 / static_cast<double>(replicas);
        e.mean_x = sx * ir;
        e.mean_y = sy * ir;
        e.m2 = s2 * ir;
        e.m4 = order == 4 ? s4 * ir : nan;
        e.var_h = sv * ir;
        e.m2_corrected = e.m2 - e.var_h / static_cast<double>(quadrature);

        double dx2 = 0, dy2 = 0, d22 = 0, d44 = 0;
        for (std::size_t r = 0; r < replicas; ++r) {
            const ReplicaMoment& c = cells[r * nn + k];
            dx2 += (c.ax - e.mean_x) * (c.ax - e.mean_x);
            dy2 += (c.ay - e.mean_y) * (c.ay - e.mean_y);
            d22 += (c.a2 - e.m2) * (c.a2 - e.m2);
            d44 += (c.a4 - e.m4) * (c.a4 - e.m4);
        }
        const double denom = replicas > 1 ? static_cast<double>(replicas - 1) * replicas : 1.0;
        e.mean_se = std::sqrt(std::max(dx2, dy2) / denom);
        e.m2_se = std::sqrt(d22 / denom);
        e.m4_se = order == 4 ? std::sqrt(d44 / denom) : nan;
    }
    return out;
}

void wilson_interval(std::size_t hits, std::size_t total, double& lo, double& hi) {
    if (total == 0) {
        lo = 0.0;
        hi = 1.0;
        return;
    }
    const double z = 1.959963984540054;  // 97.5% normal quantile
    const double nt = static_cast<double>(total);
    const double ph = static_cast<double>(hits) / nt;
    const double z2 = z * z;
    const double denom = 1.0 + z2 / nt;
    const double center = (ph + z2 / (2.0 * nt)) / denom;
    const double half = z * std::sqrt(ph * (1.0 - ph) / nt + z2 / (4.0 * nt * nt)) / denom;
    lo = std::max(0.0, center - half);
    hi = std::min(1.0, center + half);
}

ProbEstimate probability_estimate(const F0Spec& f0, const ModelParams& p, const Scenario& sc,
                                  const ExponentConfig& ex, std::size_t n, std::size_t m,
                                  std::size_t replicas, std::uint64_t seed,
                                  const RunOptions& base_opt, ThreadPool* pool) {
    if (replicas < 30) throw ConfigError("sweep.replicas: must be >= 30");
    ex.validate();
    std::vector<char> hit(replicas, 0);
    RunOptions opt = base_opt;
    opt.pool = nullptr;  // replicas fan out; inner runs stay single-threaded
    opt.store_frames = false;
    opt.snapshot_every = 0;
    auto body = [&](std::size_t first, std::size_t last) {
        for (std::size_t r = first; r < last; ++r) {
            const CoupledRun run =
                run_coupled(f0, p, sc, n, m, seed, static_cast<std::uint32_t>(r), opt);
            hit[r] = event_alpha(run, ex.alpha) ? 1 : 0;
        }
    };
    if (pool)
        pool->parallel_for(replicas, 1, body);
    else
        body(0, replicas);

    ProbEstimate out;
    out.n = n;
    out.replicas = replicas;
    for (std::size_t r = 0; r < replicas; ++r) out.hits += hit[r];
    out.p_hat = static_cast<double>(out.hits) / static_cast<double>(replicas);
    wilson_interval(out.hits, replicas, out.lo, out.hi);
    return out;
}

RateReport rate_fit(const std::vector<RatePoint>& points, const ExponentConfig& ex) {
    RateReport rep;
    rep.n_theory = ex.rate_exponent();

    std::vector<double> x, y, w;
    for (const RatePoint& pt : points) {
        if (pt.hits == 0) {
            rep.censored_n.push_back(pt.n);
            continue;
        }
        // se(log p) ~ interval half-width over p, from the Wilson bounds.
        const double se = std::max((pt.hi - pt.lo) / (2.0 * 1.959963984540054 * pt.p_hat), 1e-6);
        x.push_back(std::log(static_cast<double>(pt.n)));
        y.push_back(std::log(pt.p_hat));
        w.push_back(1.0 / (se * se));
        rep.used_n.push_back(pt.n);
    }
    if (x.size() < 3) return rep;  // unfittable; fit_ok stays false

    double sw = 0, swx = 0, swy = 0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        sw += w[i];
        swx += w[i] * x[i];
        swy += w[i] * y[i];
    }
    const double xb = swx / sw, yb = swy / sw;
    double sxx = 0, sxy = 0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        sxx += w[i] * (x[i] - xb) * (x[i] - xb);
        sxy += w[i] * (x[i] - xb) * (y[i] - yb);
    }
    if (sxx <= 0.0) return rep;
    rep.fit_ok = true;
    rep.slope = sxy / sxx;
    rep.slope_se = std::sqrt(1.0 / sxx);  // weights are inverse variances
    const double z = 1.959963984540054;
    rep.ci_lo = rep.slope - z * rep.slope_se;
    rep.ci_hi = rep.slope + z * rep.slope_se;
    return rep;
}

} // namespace pedflow
