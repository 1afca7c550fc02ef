#include "pedflow/experiments.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <json.hpp>

#include "pedflow/errors.hpp"
#include "pedflow/io.hpp"
#include "pedflow/kernels.hpp"
#include "pedflow/measures.hpp"
#include "pedflow/rng.hpp"
#include "pedflow/statistics.hpp"

namespace pedflow {
namespace {

using nlohmann::json;

ModelParams with_n(ModelParams p, std::size_t n) {
    p.n = static_cast<std::uint32_t>(n);
    return p;
}

std::string hex_hash(std::uint64_t h) {
    char buf[24];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

struct Timer {
    std::chrono::steady_clock::time_point t0 = std::chrono::steady_clock::now();
    double seconds() const {
        return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    }
};

// manifest.json is bookkeeping, not a primary CSV, so it may carry timings
// and thread counts without breaking byte-identical reproducibility checks.
void write_manifest(const RunConfig& cfg, const std::string& out, const char* sub,
                    const std::vector<std::string>& outputs, int threads,
                    double elapsed) {
    json m;
    m["subcommand"] = sub;
    m["code_version"] = "pedflow 1.0.0";
    m["config_hash"] = hex_hash(cfg.config_hash());
    m["config"] = json::parse(cfg.canonical_json());
    m["backend"] = kernels::get_backend(kernels::resolve_backend(cfg.backend)).name;
    m["threads"] = threads;
    m["rng"] = "philox4x32-10, streams keyed by (seed, purpose, replica, entity)";
    m["outputs"] = outputs;
    m["elapsed_seconds"] = elapsed;
    write_text_file(out + "/manifest.json", m.dump(2) + "\n");
}

void ensemble_rows(CsvWriter& csv, std::size_t n, const char* system, const Ensemble& e) {
    for (std::size_t i = 0; i < e.size(); ++i)
        csv.row({CsvWriter::cell(n), system, CsvWriter::cell(i),
                 CsvWriter::cell(e.px[i]), CsvWriter::cell(e.py[i]),
                 CsvWriter::cell(e.vx[i]), CsvWriter::cell(e.vy[i])});
}

struct LogSlope {
    bool ok = false;
    double slope = 0.0, slope_se = 0.0;
    std::size_t used = 0;
};

// WLS of log(m4) against log(n), weights from the relative standard errors.
LogSlope fit_log_slope(const std::vector<MomentEstimate>& ms) {
    std::vector<double> x, y, w;
    for (const auto& m : ms) {
        if (!(m.m4 > 0.0) || !std::isfinite(m.m4)) continue;
        const double se_log = std::max(m.m4_se / m.m4, 1e-6);
        x.push_back(std::log(static_cast<double>(m.n)));
        y.push_back(std::log(m.m4));
        w.push_back(1.0 / (se_log * se_log));
    }
    LogSlope fit;
    fit.used = x.size();
    if (x.size() < 3) return fit;
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
    if (!(sxx > 0.0)) return fit;
    fit.ok = true;
    fit.slope = sxy / sxx;
    fit.slope_se = std::sqrt(1.0 / sxx);
    return fit;
}

void moment_rows(CsvWriter& csv, const char* kernel, std::size_t quadrature,
                 const std::vector<MomentEstimate>& ms) {
    for (const auto& m : ms)
        csv.row({kernel, CsvWriter::cell(m.n), CsvWriter::cell(m.replicas),
                 CsvWriter::cell(quadrature), CsvWriter::cell(m.mean_x),
                 CsvWriter::cell(m.mean_y), CsvWriter::cell(m.mean_se),
                 CsvWriter::cell(m.m2), CsvWriter::cell(m.m2_se),
                 CsvWriter::cell(m.m2_corrected), CsvWriter::cell(m.m4),
                 CsvWriter::cell(m.m4_se), CsvWriter::cell(m.var_h)});
}

} // namespace

int run_simulate(const RunConfig& cfg, const std::string& out, int threads) {
    Timer tm;
    ensure_dir(out);
    ThreadPool pool(threads);
    RunOptions opt = cfg.run_options();
    opt.pool = &pool;

    const std::size_t n = cfg.n_list.front();
    const NewtonianRun run =
        run_newtonian(cfg.f0, with_n(cfg.params, n), cfg.scenario, n, cfg.seed, 0, opt);

    {
        CsvWriter csv(out + "/state.csv");
        csv.row({"id", "x", "y", "vx", "vy"});
        for (std::size_t i = 0; i < run.state.size(); ++i)
            csv.row({CsvWriter::cell(i), CsvWriter::cell(run.state.px[i]),
                     CsvWriter::cell(run.state.py[i]), CsvWriter::cell(run.state.vx[i]),
                     CsvWriter::cell(run.state.vy[i])});
    }
    std::vector<std::string> outputs = {"state.csv"};
    if (!run.snapshots.empty()) {
        write_snapshot_series(out + "/snapshots.bin", run.snapshots, opt.dt);
        outputs.push_back("snapshots.bin");
        outputs.push_back("snapshots.bin.json");
    }
    write_manifest(cfg, out, "simulate", outputs, threads, tm.seconds());
    return 0;
}

int run_couple(const RunConfig& cfg, const std::string& out, int threads) {
    Timer tm;
    ensure_dir(out);
    ThreadPool pool(threads);
    RunOptions opt = cfg.run_options();
    opt.pool = &pool;

    CsvWriter dev(out + "/deviation.csv");
    dev.row({"n", "step", "t", "dev_sup"});
    CsvWriter st(out + "/states.csv");
    st.row({"n", "system", "id", "x", "y", "vx", "vy"});

    for (const std::size_t n : cfg.n_list) {
        const CoupledRun run = run_coupled(cfg.f0, with_n(cfg.params, n), cfg.scenario, n,
                                           cfg.m_factor * n, cfg.seed, 0, opt);
        for (std::size_t s = 0; s < run.dev_sup.size(); ++s)
            dev.row({CsvWriter::cell(n), CsvWriter::cell(s),
                     CsvWriter::cell(static_cast<double>(s) * run.dt),
                     CsvWriter::cell(run.dev_sup[s])});
        ensemble_rows(st, n, "newtonian", run.newt);
        ensemble_rows(st, n, "tracked", run.tracked);
        ensemble_rows(st, n, "field", run.field);
    }
    write_manifest(cfg, out, "couple", {"deviation.csv", "states.csv"}, threads,
                   tm.seconds());
    return 0;
}

int run_moments(const RunConfig& cfg, const std::string& out, int threads) {
    Timer tm;
    ensure_dir(out);
    ThreadPool pool(threads);
    const auto& be = kernels::get_backend(kernels::resolve_backend(cfg.backend));

    const auto force = fluctuation_moments(FluctuationKernel::force, cfg.f0,
                                           cfg.moment_n_list, 4, cfg.moment_replicas,
                                           cfg.quadrature, cfg.params, cfg.seed, be, &pool);
    const auto major = fluctuation_moments(FluctuationKernel::majorant, cfg.f0,
                                           cfg.moment_n_list, 4, cfg.moment_replicas,
                                           cfg.quadrature, cfg.params, cfg.seed, be, &pool);
    {
        CsvWriter csv(out + "/moments.csv");
        csv.row({"kernel", "n", "replicas", "quadrature", "mean_x", "mean_y", "mean_se",
                 "m2", "m2_se", "m2_corrected", "m4", "m4_se", "var_h"});
        moment_rows(csv, "force", cfg.quadrature, force);
        moment_rows(csv, "majorant", cfg.quadrature, major);
    }
    json fits;
    for (const auto* kv : {&force, &major}) {
        const LogSlope fit = fit_log_slope(*kv);
        json f;
        f["fit_ok"] = fit.ok;
        f["slope"] = fit.slope;
        f["slope_se"] = fit.slope_se;
        f["points_used"] = fit.used;
        f["expected_slope"] = -2.0;
        fits[kv == &force ? "force" : "majorant"] = f;
    }
    write_text_file(out + "/moments_fit.json", fits.dump(2) + "\n");
    write_manifest(cfg, out, "moments", {"moments.csv", "moments_fit.json"}, threads,
                   tm.seconds());
    return 0;
}

int run_chaos(const RunConfig& cfg, const std::string& out, int threads) {
    Timer tm;
    ensure_dir(out);
    ThreadPool pool(threads);
    const RunOptions opt = cfg.run_options();

    const auto points =
        chaos_curve(cfg.f0, cfg.params, cfg.scenario, cfg.n_list, cfg.m_factor,
                    cfg.chaos_replicas, cfg.seed, opt, cfg.bank_size, cfg.subsample,
                    cfg.pooled_marginal, &pool);
    {
        CsvWriter csv(out + "/chaos.csv");
        csv.row({"n", "start_lower", "start_upper", "start_upper_se", "baseline_upper",
                 "end_lower", "end_upper", "end_upper_se"});
        for (const auto& cp : points)
            csv.row({CsvWriter::cell(cp.n), CsvWriter::cell(cp.start.lower),
                     CsvWriter::cell(cp.start.upper), CsvWriter::cell(cp.start.upper_se),
                     CsvWriter::cell(cp.baseline), CsvWriter::cell(cp.end.lower),
                     CsvWriter::cell(cp.end.upper), CsvWriter::cell(cp.end.upper_se)});
    }
    json wit = json::array();
    for (const auto& cp : points) {
        json w;
        w["n"] = cp.n;
        w["kind"] = cp.end.witness.kind == Witness::Kind::cone ? "cone" : "ridge";
        w["c"] = cp.end.witness.c;
        w["a"] = cp.end.witness.a;
        w["lower"] = cp.end.lower;
        wit.push_back(w);
    }
    write_text_file(out + "/witness.json", wit.dump(2) + "\n");
    write_manifest(cfg, out, "chaos", {"chaos.csv", "witness.json"}, threads, tm.seconds());
    return 0;
}

int run_sweep(const RunConfig& cfg, const std::string& out, int threads) {
    Timer tm;
    ensure_dir(out);
    ThreadPool pool(threads);
    RunOptions opt = cfg.run_options();
    opt.pool = nullptr;  // replicas fan out instead
    opt.store_frames = false;
    const auto& be = kernels::get_backend(opt.backend);

    CsvWriter csv(out + "/sweep.csv");
    csv.row({"n", "replicas", "hits_alpha", "p_hat", "ci_lo", "ci_hi", "hits_beta",
             "hits_gamma"});

    std::vector<RatePoint> points;
    for (const std::size_t n : cfg.n_list) {
        const ModelParams pn = with_n(cfg.params, n);
        const std::size_t reps = cfg.replicas;
        std::vector<std::uint8_t> ha(reps, 0), hb(reps, 0), hg(reps, 0);
        auto body = [&](std::size_t first, std::size_t last) {
            for (std::size_t r = first; r < last; ++r) {
                const CoupledRun run =
                    run_coupled(cfg.f0, pn, cfg.scenario, n, cfg.m_factor * n, cfg.seed,
                                static_cast<std::uint32_t>(r), opt);
                ha[r] = event_alpha(run, cfg.exponents.alpha) ? 1 : 0;
                bool b = event_beta(run.tracked, run.field, pn, cfg.exponents.beta, be);
                bool g = event_gamma(run.tracked, run.field, pn, cfg.exponents.gamma, be);
                for (std::size_t s = 0; s < run.snapshots_tracked.size(); ++s) {
                    if (b && g) break;
                    const Ensemble& tr = run.snapshots_tracked[s].second;
                    const Ensemble& fl = run.snapshots_field[s].second;
                    b = b || event_beta(tr, fl, pn, cfg.exponents.beta, be);
                    g = g || event_gamma(tr, fl, pn, cfg.exponents.gamma, be);
                }
                hb[r] = b ? 1 : 0;
                hg[r] = g ? 1 : 0;
            }
        };
        pool.parallel_for(reps, 1, body);

        std::size_t hits_a = 0, hits_b = 0, hits_g = 0;
        for (std::size_t r = 0; r < reps; ++r) {
            hits_a += ha[r];
            hits_b += hb[r];
            hits_g += hg[r];
        }
        RatePoint pt;
        pt.n = n;
        pt.replicas = reps;
        pt.hits = hits_a;
        pt.p_hat = static_cast<double>(hits_a) / static_cast<double>(reps);
        wilson_interval(hits_a, reps, pt.lo, pt.hi);
        points.push_back(pt);
        csv.row({CsvWriter::cell(n), CsvWriter::cell(reps), CsvWriter::cell(hits_a),
                 CsvWriter::cell(pt.p_hat), CsvWriter::cell(pt.lo), CsvWriter::cell(pt.hi),
                 CsvWriter::cell(hits_b), CsvWriter::cell(hits_g)});
    }

    const RateReport rep = rate_fit(points, cfg.exponents);
    json rj;
    rj["n_theory"] = rep.n_theory;
    rj["fit_ok"] = rep.fit_ok;
    rj["slope"] = rep.slope;
    rj["slope_se"] = rep.slope_se;
    rj["ci_lo"] = rep.ci_lo;
    rj["ci_hi"] = rep.ci_hi;
    rj["used_n"] = rep.used_n;
    rj["censored_n"] = rep.censored_n;
    rj["pass_threshold"] = -rep.n_theory;
    write_text_file(out + "/rate_report.json", rj.dump(2) + "\n");
    write_manifest(cfg, out, "sweep", {"sweep.csv", "rate_report.json"}, threads,
                   tm.seconds());
    return rep.fit_ok ? 0 : 4;
}

namespace {

Vec2 unit_vec(CounterRng& rng) {
    const double ang = rng.uniform(0.0, 6.283185307179586);
    return {std::cos(ang), std::sin(ang)};
}

Vec2 log_radius_point(CounterRng& rng, double rmin, double rmax) {
    const double r = std::exp(rng.uniform(std::log(rmin), std::log(rmax)));
    return unit_vec(rng) * r;
}

Vec2 ball_point(CounterRng& rng, double radius) {
    const double r = radius * std::sqrt(rng.uniform01());
    return unit_vec(rng) * r;
}

// Majorant shape with C = 1: the calibrated constant is the max observed
// ratio against this, taken at the pair member of smaller norm.
double unit_shape(Vec2 x, Vec2 v, const PairKernelParams& k) {
    const double r = x.norm();
    if (r > k.two_R || v.norm() > k.two_R_tilde) return 0.0;
    if (r >= k.cut) return 1.0 / r + 1.0;
    return k.n_theta;
}

} // namespace

CalibrationResult calibrate_constants(const ModelParams& p,
                                      const std::vector<std::size_t>& n_list,
                                      std::size_t samples, std::uint64_t seed,
                                      ThreadPool* pool) {
    if (n_list.empty()) throw ConfigError("calibrate: n_list must not be empty");
    if (samples == 0) throw ConfigError("calibrate: samples must be > 0");
    CalibrationResult res;
    res.n_checked = n_list;

    constexpr std::size_t kChunk = 4096;
    for (int kind = 0; kind < 2; ++kind) {
        for (std::size_t ni = 0; ni < n_list.size(); ++ni) {
            const PairKernelParams kp = make_pair_kernel_params(with_n(p, n_list[ni]));
            const std::size_t chunks = (samples + kChunk - 1) / kChunk;
            std::vector<double> maxima(chunks, 0.0);
            auto body = [&](std::size_t first, std::size_t last) {
                double local = 0.0;
                for (std::size_t s = first; s < last; ++s) {
                    CounterRng rng(seed, StreamPurpose::calibrate,
                                   static_cast<std::uint32_t>(kind * 0x10000 + ni),
                                   static_cast<std::uint32_t>(s));
                    if (kind == 0) {
                        const Vec2 v = ball_point(rng, 1.05 * kp.two_R_tilde);
                        const Vec2 x1 = log_radius_point(rng, 1e-4, 1.05 * kp.two_R);
                        const double delta =
                            std::exp(rng.uniform(std::log(1e-6), std::log(kp.two_R)));
                        const Vec2 x2 = x1 + unit_vec(rng) * delta;
                        const Vec2 d = cutoff_force(x1, v, kp) - cutoff_force(x2, v, kp);
                        const double den = (x1 - x2).norm();
                        if (den < 1e-12) continue;
                        const Vec2 m = x1.norm2() <= x2.norm2() ? x1 : x2;
                        const double shape = unit_shape(m, v, kp);
                        if (shape == 0.0) continue;  // both outside support, d = 0
                        local = std::max(local, d.norm() / (den * shape));
                    } else {
                        const Vec2 x = log_radius_point(rng, 1e-4, 1.05 * kp.two_R);
                        const Vec2 v1 = ball_point(rng, 1.05 * kp.two_R_tilde);
                        const double delta =
                            std::exp(rng.uniform(std::log(1e-6), std::log(kp.two_R_tilde)));
                        const Vec2 v2 = v1 + unit_vec(rng) * delta;
                        const Vec2 d = cutoff_force(x, v1, kp) - cutoff_force(x, v2, kp);
                        const double den = (v1 - v2).norm();
                        if (den < 1e-12) continue;
                        local = std::max(local, d.norm() / den);
                    }
                }
                maxima[first / kChunk] = std::max(maxima[first / kChunk], local);
            };
            if (pool)
                pool->parallel_for(samples, kChunk, body);
            else
                body(0, samples);
            double m = 0.0;
            for (const double v : maxima) m = std::max(m, v);
            (kind == 0 ? res.max_position : res.max_velocity).push_back(m);
        }
    }
    for (const double v : res.max_position)
        res.majorant_c_observed = std::max(res.majorant_c_observed, v);
    for (const double v : res.max_velocity)
        res.lipschitz_v_observed = std::max(res.lipschitz_v_observed, v);
    res.majorant_c = 1.15 * res.majorant_c_observed;
    res.lipschitz_v = 1.15 * res.lipschitz_v_observed;
    return res;
}

int run_calibrate(const RunConfig& cfg, const std::string& out, int threads) {
    Timer tm;
    ensure_dir(out);
    ThreadPool pool(threads);

    const CalibrationResult res =
        calibrate_constants(cfg.params, cfg.n_list, cfg.calibrate_samples, cfg.seed, &pool);
    {
        CsvWriter csv(out + "/calibration.csv");
        csv.row({"kind", "n", "samples", "max_ratio"});
        for (std::size_t i = 0; i < res.n_checked.size(); ++i)
            csv.row({"position", CsvWriter::cell(res.n_checked[i]),
                     CsvWriter::cell(cfg.calibrate_samples),
                     CsvWriter::cell(res.max_position[i])});
        for (std::size_t i = 0; i < res.n_checked.size(); ++i)
            csv.row({"velocity", CsvWriter::cell(res.n_checked[i]),
                     CsvWriter::cell(cfg.calibrate_samples),
                     CsvWriter::cell(res.max_velocity[i])});
    }
    json cj;
    cj["majorant_c_observed"] = res.majorant_c_observed;
    cj["majorant_c"] = res.majorant_c;
    cj["lipschitz_v_observed"] = res.lipschitz_v_observed;
    cj["lipschitz_v"] = res.lipschitz_v;
    cj["margin"] = 1.15;
    cj["samples"] = cfg.calibrate_samples;
    cj["n_checked"] = res.n_checked;
    write_text_file(out + "/calibration.json", cj.dump(2) + "\n");
    write_manifest(cfg, out, "calibrate", {"calibration.csv", "calibration.json"}, threads,
                   tm.seconds());
    return 0;
}

} // namespace pedflow
