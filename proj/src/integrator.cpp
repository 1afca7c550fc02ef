#include "pedflow/integrator.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <stdexcept>

namespace pedflow {

void RunOptions::validate() const {
    if (!(dt > 0.0)) throw ConfigError("run.dt: must be > 0");
    if (!(t_end >= 0.0)) throw ConfigError("run.t_end: must be >= 0");
    if (refresh_every < 1) throw ConfigError("run.refresh_every: must be >= 1");
    if (snapshot_every < 0) throw ConfigError("run.snapshot_every: must be >= 0");
    if (!(blowup_sup > 0.0)) throw ConfigError("run.blowup_sup: must be > 0");
    steps();
}

std::uint64_t RunOptions::steps() const {
    const double raw = t_end / dt;
    const double rounded = std::round(raw);
    if (std::abs(raw - rounded) > 1e-9 * std::max(1.0, raw))
        throw ConfigError("run.dt: must divide t_end");
    return static_cast<std::uint64_t>(rounded);
}

namespace {

constexpr std::size_t kChunk = 64;  // fixed parallel chunk, thread-count independent

void for_chunks(ThreadPool* pool, std::size_t n,
                const std::function<void(std::size_t, std::size_t)>& body) {
    if (pool)
        pool->parallel_for(n, kChunk, body);
    else
        body(0, n);
}

// Guidance acceleration (U(rho) * dir - v)/T with dir the toward-target unit
// direction sampled from the frozen field; equals desired_acceleration with
// the gradient-direction argument -dir.
inline Vec2 guidance(const EikonalField& eik, const ModelParams& p, Vec2 x, Vec2 v,
                     double rho) {
    const Vec2 dir = direction_at_clamped(eik, x);
    const double u = p.desired_speed(rho);
    return {(u * dir.x - v.x) / p.T, (u * dir.y - v.y) / p.T};
}

} // namespace

void newtonian_accel(const Ensemble& e, const ModelParams& p, const EikonalField& eik,
                     const std::vector<double>& rho, const kernels::Backend& be,
                     const SpatialHash* hash, ThreadPool* pool,
                     std::vector<double>& ax, std::vector<double>& ay) {
    const std::size_t n = e.size();
    ax.resize(n);
    ay.resize(n);
    if (n == 0) return;
    SpatialHash own;
    if (!hash) {
        own.build(e.px.data(), e.py.data(), n, 2.0 * p.R);
        hash = &own;
    }
    const PairKernelParams kp = make_pair_kernel_params(p);
    const double weight = n > 1 ? 1.0 / static_cast<double>(n - 1) : 0.0;
    for_chunks(pool, n, [&](std::size_t first, std::size_t last) {
        std::vector<std::uint32_t> cand;
        for (std::size_t i = first; i < last; ++i) {
            const Vec2 xi = e.pos(i), vi = e.vel(i);
            double fx = 0.0, fy = 0.0;
            if (n > 1) {
                hash->gather(xi.x, xi.y, static_cast<std::uint32_t>(i), cand);
                be.force_sum(e.px.data(), e.py.data(), e.vx.data(), e.vy.data(),
                             cand.data(), cand.size(), xi.x, xi.y, vi.x, vi.y, kp, fx, fy);
            }
            const Vec2 g = guidance(eik, p, xi, vi, rho[i]);
            ax[i] = weight * fx + g.x;
            ay[i] = weight * fy + g.y;
        }
    });
}

void meanfield_accel(const Ensemble& tracked, const Ensemble& field, const ModelParams& p,
                     const EikonalField& eik, const std::vector<double>& tracked_rho,
                     const kernels::Backend& be, const SpatialHash* field_hash,
                     ThreadPool* pool, std::vector<double>& ax, std::vector<double>& ay) {
    const std::size_t n = tracked.size();
    ax.resize(n);
    ay.resize(n);
    if (n == 0) return;
    SpatialHash own;
    if (!field_hash) {
        own.build(field.px.data(), field.py.data(), field.size(), 2.0 * p.R);
        field_hash = &own;
    }
    const PairKernelParams kp = make_pair_kernel_params(p);
    const double weight = 1.0 / static_cast<double>(field.size());
    for_chunks(pool, n, [&](std::size_t first, std::size_t last) {
        std::vector<std::uint32_t> cand;
        for (std::size_t i = first; i < last; ++i) {
            const Vec2 xi = tracked.pos(i), vi = tracked.vel(i);
            double fx = 0.0, fy = 0.0;
            field_hash->gather(xi.x, xi.y, SpatialHash::npos, cand);
            be.force_sum(field.px.data(), field.py.data(), field.vx.data(), field.vy.data(),
                         cand.data(), cand.size(), xi.x, xi.y, vi.x, vi.y, kp, fx, fy);
            const Vec2 g = guidance(eik, p, xi, vi, tracked_rho[i]);
            ax[i] = weight * fx + g.x;
            ay[i] = weight * fy + g.y;
        }
    });
}

FrozenField freeze_own_field(const Ensemble& e, const ModelParams& p, const Scenario& sc) {
    FrozenField out;
    SpatialHash hash;
    hash.build(e.px.data(), e.py.data(), e.size(), 2.0 * p.R);
    DensityField d = local_density(e, p.R, &hash);
    const GridField rho_grid = density_grid(e, sc, p.R, d.n_r_max, /*clamp_outside=*/true);
    out.eik = solve_eikonal_slowness(slowness_from_density(rho_grid, sc), sc);
    out.rho = std::move(d.rho);
    return out;
}

std::vector<double> tracer_rho(const Ensemble& tracked, const Ensemble& field,
                               const ModelParams& p, std::uint32_t field_n_r_max) {
    SpatialHash hash;
    hash.build(field.px.data(), field.py.data(), field.size(), 2.0 * p.R);
    std::vector<Vec2> pts(tracked.size());
    for (std::size_t i = 0; i < tracked.size(); ++i) pts[i] = tracked.pos(i);
    return density_at_points(field, hash, pts, p.R, field_n_r_max);
}

namespace {

// Workspace for one RK4 subsystem.
struct Sys {
    Ensemble base;               // state at the step boundary
    Ensemble cur;                // current stage state
    std::vector<double> ax, ay;  // stage acceleration
    std::vector<double> spx, spy, svx, svy;  // weighted derivative sums
    SpatialHash hash;            // built over cur at every stage

    void init(Ensemble b) {
        base = std::move(b);
        cur = base;
        const std::size_t n = base.size();
        ax.assign(n, 0.0);
        ay.assign(n, 0.0);
        spx.resize(n);
        spy.resize(n);
        svx.resize(n);
        svy.resize(n);
    }

    void begin_step() {
        cur = base;
        std::fill(spx.begin(), spx.end(), 0.0);
        std::fill(spy.begin(), spy.end(), 0.0);
        std::fill(svx.begin(), svx.end(), 0.0);
        std::fill(svy.begin(), svy.end(), 0.0);
    }

    void rebuild_hash(double cell) {
        hash.build(cur.px.data(), cur.py.data(), cur.size(), cell);
    }

    // Accumulate the current stage derivative with RK weight w.
    void accumulate(double w) {
        for (std::size_t i = 0; i < base.size(); ++i) {
            spx[i] += w * cur.vx[i];
            spy[i] += w * cur.vy[i];
            svx[i] += w * ax[i];
            svy[i] += w * ay[i];
        }
    }

    // Move cur to the next stage state base + c_dt * (current stage deriv).
    void advance(double c_dt) {
        Ensemble nxt(base.size());
        for (std::size_t i = 0; i < base.size(); ++i) {
            nxt.px[i] = base.px[i] + c_dt * cur.vx[i];
            nxt.py[i] = base.py[i] + c_dt * cur.vy[i];
            nxt.vx[i] = base.vx[i] + c_dt * ax[i];
            nxt.vy[i] = base.vy[i] + c_dt * ay[i];
        }
        cur = std::move(nxt);
    }

    void finish(double dt6) {
        for (std::size_t i = 0; i < base.size(); ++i) {
            base.px[i] += dt6 * spx[i];
            base.py[i] += dt6 * spy[i];
            base.vx[i] += dt6 * svx[i];
            base.vy[i] += dt6 * svy[i];
        }
    }
};

void check_finite(const Ensemble& e, double t, double bound, const char* which) {
    for (std::size_t i = 0; i < e.size(); ++i) {
        const double m = std::max(std::max(std::abs(e.px[i]), std::abs(e.py[i])),
                                  std::max(std::abs(e.vx[i]), std::abs(e.vy[i])));
        if (!std::isfinite(m) || m > bound) {
            char buf[160];
            std::snprintf(buf, sizeof(buf),
                          "blow-up: %s particle %zu left the admissible range at t=%.6g", which,
                          i, t);
            throw BlowUpError(buf, t, i);
        }
    }
}

struct CoupledStepper {
    Sys newt, tracked, field;
    const ModelParams& p;
    const kernels::Backend& be;
    ThreadPool* pool;
    double cell;

    CoupledStepper(const ModelParams& p_, const kernels::Backend& be_, ThreadPool* pool_)
        : p(p_), be(be_), pool(pool_), cell(2.0 * p_.R) {}

    void eval_stage(const CoupledFrame& fr) {
        newt.rebuild_hash(cell);
        field.rebuild_hash(cell);
        newtonian_accel(newt.cur, p, fr.newt.eik, fr.newt.rho, be, &newt.hash, pool,
                        newt.ax, newt.ay);
        newtonian_accel(field.cur, p, fr.field.eik, fr.field.rho, be, &field.hash, pool,
                        field.ax, field.ay);
        meanfield_accel(tracked.cur, field.cur, p, fr.field.eik, fr.tracked_rho, be,
                        &field.hash, pool, tracked.ax, tracked.ay);
    }

    void step(double dt, const CoupledFrame& fr) {
        static constexpr double kW[4] = {1.0, 2.0, 2.0, 1.0};
        static constexpr double kC[4] = {0.5, 0.5, 1.0, 0.0};  // advance factor after stage
        newt.begin_step();
        tracked.begin_step();
        field.begin_step();
        for (int s = 0; s < 4; ++s) {
            eval_stage(fr);
            newt.accumulate(kW[s]);
            tracked.accumulate(kW[s]);
            field.accumulate(kW[s]);
            if (s < 3) {
                newt.advance(kC[s] * dt);
                tracked.advance(kC[s] * dt);
                field.advance(kC[s] * dt);
            }
        }
        const double dt6 = dt / 6.0;
        newt.finish(dt6);
        tracked.finish(dt6);
        field.finish(dt6);
    }

    CoupledFrame freeze(const Scenario& sc) const {
        CoupledFrame fr;
        fr.newt = freeze_own_field(newt.base, p, sc);
        fr.field = freeze_own_field(field.base, p, sc);
        SpatialHash fh;
        fh.build(field.base.px.data(), field.base.py.data(), field.base.size(), cell);
        DensityField fd = local_density(field.base, p.R, &fh);
        std::vector<Vec2> pts(tracked.base.size());
        for (std::size_t i = 0; i < pts.size(); ++i) pts[i] = tracked.base.pos(i);
        fr.tracked_rho = density_at_points(field.base, fh, pts, p.R, fd.n_r_max);
        return fr;
    }
};

} // namespace

NewtonianRun run_newtonian_from(const Ensemble& init, const ModelParams& p,
                                const Scenario& sc, const RunOptions& opt) {
    opt.validate();
    sc.validate();
    p.validate();
    const std::uint64_t steps = opt.steps();
    const kernels::Backend& be = kernels::get_backend(opt.backend);

    NewtonianRun out;
    out.initial = init;
    out.dt = opt.dt;
    out.t_end = opt.t_end;
    out.steps = steps;

    Sys sys;
    sys.init(init);
    FrozenField frozen;
    static constexpr double kW[4] = {1.0, 2.0, 2.0, 1.0};
    static constexpr double kC[4] = {0.5, 0.5, 1.0, 0.0};
    const double cell = 2.0 * p.R;

    for (std::uint64_t s = 0; s < steps; ++s) {
        if (s % static_cast<std::uint64_t>(opt.refresh_every) == 0) {
            frozen = freeze_own_field(sys.base, p, sc);
            if (opt.store_frames) out.frames.push_back({s, frozen});
        }
        if (opt.snapshot_every > 0 && s % static_cast<std::uint64_t>(opt.snapshot_every) == 0)
            out.snapshots.emplace_back(s, sys.base);
        sys.begin_step();
        for (int st = 0; st < 4; ++st) {
            sys.rebuild_hash(cell);
            newtonian_accel(sys.cur, p, frozen.eik, frozen.rho, be, &sys.hash, opt.pool,
                            sys.ax, sys.ay);
            sys.accumulate(kW[st]);
            if (st < 3) sys.advance(kC[st] * opt.dt);
        }
        sys.finish(opt.dt / 6.0);
        check_finite(sys.base, (s + 1) * opt.dt, opt.blowup_sup, "newtonian");
    }
    out.state = std::move(sys.base);
    return out;
}

NewtonianRun run_newtonian(const F0Spec& f0, const ModelParams& p, const Scenario& sc,
                           std::size_t n, std::uint64_t seed, std::uint32_t replica,
                           const RunOptions& opt) {
    if (n == 0) throw ConfigError("run.n: must be >= 1");
    const Ensemble init =
        sample_ensemble(f0, n, seed, StreamPurpose::initial_tracked, replica);
    return run_newtonian_from(init, p, sc, opt);
}

CoupledRun run_coupled_from(const Ensemble& init, const Ensemble& field_init,
                            const ModelParams& p, const Scenario& sc, const RunOptions& opt) {
    opt.validate();
    sc.validate();
    p.validate();
    if (field_init.size() < 4 * init.size())
        throw ConfigError("run.m: field ensemble must satisfy m >= 4n");
    const std::uint64_t steps = opt.steps();
    const kernels::Backend& be = kernels::get_backend(opt.backend);

    CoupledRun out;
    out.newt0 = init;
    out.tracked0 = init;
    out.field0 = field_init;
    out.dt = opt.dt;
    out.t_end = opt.t_end;
    out.steps = steps;
    out.params = p;
    out.scenario = sc;
    out.backend = opt.backend;
    out.dev_sup.reserve(steps + 1);
    out.dev_sup.push_back(0.0);

    CoupledStepper cs(p, be, opt.pool);
    cs.newt.init(init);
    cs.tracked.init(init);
    cs.field.init(field_init);

    CoupledFrame frozen;
    for (std::uint64_t s = 0; s < steps; ++s) {
        if (s % static_cast<std::uint64_t>(opt.refresh_every) == 0) {
            frozen = cs.freeze(sc);
            frozen.step = s;
            if (opt.store_frames) out.frames.push_back(frozen);
        }
        if (opt.snapshot_every > 0 && s % static_cast<std::uint64_t>(opt.snapshot_every) == 0) {
            out.snapshots_newt.emplace_back(s, cs.newt.base);
            out.snapshots_tracked.emplace_back(s, cs.tracked.base);
            out.snapshots_field.emplace_back(s, cs.field.base);
        }
        cs.step(opt.dt, frozen);
        const double t = (s + 1) * opt.dt;
        check_finite(cs.newt.base, t, opt.blowup_sup, "newtonian");
        check_finite(cs.tracked.base, t, opt.blowup_sup, "tracked");
        check_finite(cs.field.base, t, opt.blowup_sup, "field");
        out.dev_sup.push_back(
            std::max(out.dev_sup.back(), sup_distance(cs.newt.base, cs.tracked.base)));
    }
    out.newt = std::move(cs.newt.base);
    out.tracked = std::move(cs.tracked.base);
    out.field = std::move(cs.field.base);
    return out;
}

CoupledRun run_coupled(const F0Spec& f0, const ModelParams& p, const Scenario& sc,
                       std::size_t n, std::size_t m, std::uint64_t seed,
                       std::uint32_t replica, const RunOptions& opt) {
    if (n == 0) throw ConfigError("run.n: must be >= 1");
    if (m < 4 * n) throw ConfigError("run.m: field ensemble must satisfy m >= 4n");
    const Ensemble init =
        sample_ensemble(f0, n, seed, StreamPurpose::initial_tracked, replica);
    const Ensemble field_init =
        sample_ensemble(f0, m, seed, StreamPurpose::initial_field, replica);
    return run_coupled_from(init, field_init, p, sc, opt);
}

double backward_check(const CoupledRun& run, ThreadPool* pool) {
    if (run.steps == 0) return 0.0;
    if (run.frames.empty())
        throw std::logic_error("backward_check: run must be produced with store_frames");

    const kernels::Backend& be = kernels::get_backend(run.backend);
    CoupledStepper cs(run.params, be, pool);
    cs.newt.init(run.newt);
    cs.tracked.init(run.tracked);
    cs.field.init(run.field);

    // Forward step s used the last frame with frame.step <= s; frames are in
    // increasing step order, so walk the index backward as s decreases.
    std::size_t fi = run.frames.size() - 1;
    for (std::uint64_t s = run.steps; s-- > 0;) {
        while (run.frames[fi].step > s) --fi;
        cs.step(-run.dt, run.frames[fi]);
    }
    const double d_newt = sup_distance(cs.newt.base, run.newt0);
    const double d_tracked = sup_distance(cs.tracked.base, run.tracked0);
    const double d_field = sup_distance(cs.field.base, run.field0);
    return std::max(d_newt, std::max(d_tracked, d_field));
}

} // namespace pedflow
