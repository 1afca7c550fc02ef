#include "pedflow/measures.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "pedflow/assignment.hpp"
#include "pedflow/rng.hpp"

namespace pedflow {

void EmpiricalMeasure::validate() const {
    const std::size_t n = px.size();
    if (n == 0) throw std::invalid_argument("measure: empty support");
    if (py.size() != n || vx.size() != n || vy.size() != n || w.size() != n)
        throw std::invalid_argument("measure: ragged columns");
    double sum = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        if (!(w[i] >= 0.0) || !std::isfinite(px[i]) || !std::isfinite(py[i]) ||
            !std::isfinite(vx[i]) || !std::isfinite(vy[i]))
            throw std::invalid_argument("measure: negative weight or non-finite point");
        sum += w[i];
    }
    if (std::abs(sum - 1.0) > 1e-9 * static_cast<double>(n))
        throw std::invalid_argument("measure: weights do not sum to 1");
}

void EmpiricalMeasure::push(Vec2 x, Vec2 v, double weight) {
    px.push_back(x.x);
    py.push_back(x.y);
    vx.push_back(v.x);
    vy.push_back(v.y);
    w.push_back(weight);
}

EmpiricalMeasure EmpiricalMeasure::from_ensemble(const Ensemble& e) {
    EmpiricalMeasure m;
    const std::size_t n = e.size();
    if (n == 0) throw std::invalid_argument("measure: empty ensemble");
    m.px = e.px;
    m.py = e.py;
    m.vx = e.vx;
    m.vy = e.vy;
    m.w.assign(n, 1.0 / static_cast<double>(n));
    return m;
}

double Witness::eval(double x, double y, double vx_, double vy_) const {
    if (kind == Kind::cone) {
        const double dx = x - c[0], dy = y - c[1], du = vx_ - c[2], dw = vy_ - c[3];
        const double d = std::sqrt(dx * dx + dy * dy + du * du + dw * dw);
        return std::clamp(a - d, -1.0, 1.0);
    }
    const double dot = c[0] * x + c[1] * y + c[2] * vx_ + c[3] * vy_;
    const double norm = std::sqrt(c[0] * c[0] + c[1] * c[1] + c[2] * c[2] + c[3] * c[3]);
    return std::sin(dot + a) / std::max(1.0, norm);
}

namespace {

double measure_mean(const EmpiricalMeasure& m, const Witness& g) {
    double s = 0.0;
    for (std::size_t i = 0; i < m.size(); ++i)
        s += m.w[i] * g.eval(m.px[i], m.py[i], m.vx[i], m.vy[i]);
    return s;
}

double objective(const EmpiricalMeasure& mu, const EmpiricalMeasure& nu, const Witness& g) {
    return std::abs(measure_mean(mu, g) - measure_mean(nu, g));
}

Witness random_witness(std::uint64_t seed, std::uint32_t entity, const EmpiricalMeasure& mu,
                       const EmpiricalMeasure& nu) {
    CounterRng rng(seed, StreamPurpose::measure_bank, 0, entity);
    Witness g;
    if (entity % 2 == 0) {
        g.kind = Witness::Kind::cone;
        const EmpiricalMeasure& src = (entity & 2) ? nu : mu;
        const std::size_t k = rng.next_u64() % src.size();
        const double sigma =
            std::exp(rng.uniform(std::log(0.05), std::log(2.0)));
        g.c = {src.px[k] + sigma * rng.gaussian(), src.py[k] + sigma * rng.gaussian(),
               src.vx[k] + sigma * rng.gaussian(), src.vy[k] + sigma * rng.gaussian()};
        g.a = rng.uniform(0.0, 3.0);
    } else {
        g.kind = Witness::Kind::ridge;
        double norm = 0.0;
        for (int d = 0; d < 4; ++d) {
            g.c[d] = rng.gaussian();
            norm += g.c[d] * g.c[d];
        }
        norm = std::sqrt(std::max(norm, 1e-12));
        const double mag = std::exp(rng.uniform(std::log(0.3), std::log(8.0)));
        for (int d = 0; d < 4; ++d) g.c[d] *= mag / norm;
        g.a = rng.uniform(0.0, 6.283185307179586);
    }
    return g;
}

} // namespace

DistanceBracket bl_lower(const EmpiricalMeasure& mu, const EmpiricalMeasure& nu,
                         std::size_t bank_size, std::uint64_t seed, ThreadPool* pool) {
    mu.validate();
    nu.validate();
    if (bank_size == 0) throw std::invalid_argument("bl_lower: bank_size must be >= 1");

    std::vector<double> vals(bank_size);
    std::vector<Witness> bank(bank_size);
    auto body = [&](std::size_t first, std::size_t last) {
        for (std::size_t i = first; i < last; ++i) {
            bank[i] = random_witness(seed, static_cast<std::uint32_t>(i), mu, nu);
            vals[i] = objective(mu, nu, bank[i]);
        }
    };
    if (pool)
        pool->parallel_for(bank_size, 4, body);
    else
        body(0, bank_size);

    std::size_t best_i = 0;
    for (std::size_t i = 1; i < bank_size; ++i)
        if (vals[i] > vals[best_i]) best_i = i;
    Witness best = bank[best_i];
    double best_val = vals[best_i];

    // Coordinate ascent on the winner; every iterate stays admissible, so
    // the refined value is still a valid lower bound.
    double step = 0.5;
    for (int it = 0; it < 40 && step > 1e-4; ++it) {
        bool improved = false;
        for (int pidx = 0; pidx < 5; ++pidx) {
            for (const double sgn : {1.0, -1.0}) {
                Witness trial = best;
                if (pidx < 4)
                    trial.c[pidx] += sgn * step;
                else
                    trial.a += sgn * step;
                const double v = objective(mu, nu, trial);
                if (v > best_val + 1e-15) {
                    best = trial;
                    best_val = v;
                    improved = true;
                }
            }
        }
        if (!improved) step *= 0.8;
    }

    DistanceBracket b;
    b.lower = best_val;
    b.witness = best;
    return b;
}

namespace {

bool uniform_weights(const EmpiricalMeasure& m) {
    const double ref = 1.0 / static_cast<double>(m.size());
    for (const double wi : m.w)
        if (std::abs(wi - ref) > 1e-12) return false;
    return true;
}

// i.i.d. index draws by inverse CDF (with replacement).
std::vector<std::uint32_t> resample(const EmpiricalMeasure& m, std::size_t k,
                                    std::uint64_t seed, std::uint32_t replica) {
    std::vector<double> cdf(m.size());
    double acc = 0.0;
    for (std::size_t i = 0; i < m.size(); ++i) {
        acc += m.w[i];
        cdf[i] = acc;
    }
    CounterRng rng(seed, StreamPurpose::measure_subsample, replica, 0);
    std::vector<std::uint32_t> idx(k);
    for (std::size_t q = 0; q < k; ++q) {
        const double u = rng.uniform01() * acc;
        idx[q] = static_cast<std::uint32_t>(
            std::lower_bound(cdf.begin(), cdf.end(), u) - cdf.begin());
        if (idx[q] >= m.size()) idx[q] = static_cast<std::uint32_t>(m.size() - 1);
    }
    return idx;
}

double truncated_cost(const EmpiricalMeasure& mu, std::uint32_t i, const EmpiricalMeasure& nu,
                      std::uint32_t j) {
    const double dx = mu.px[i] - nu.px[j], dy = mu.py[i] - nu.py[j];
    const double du = mu.vx[i] - nu.vx[j], dw = mu.vy[i] - nu.vy[j];
    return std::min(std::sqrt(dx * dx + dy * dy + du * du + dw * dw), 2.0);
}

double matched_cost(const EmpiricalMeasure& mu, const std::vector<std::uint32_t>& mi,
                    const EmpiricalMeasure& nu, const std::vector<std::uint32_t>& ni) {
    const std::size_t k = mi.size();
    std::vector<double> cost(k * k);
    for (std::size_t i = 0; i < k; ++i)
        for (std::size_t j = 0; j < k; ++j)
            cost[i * k + j] = truncated_cost(mu, mi[i], nu, ni[j]);
    return solve_assignment(cost.data(), k).total / static_cast<double>(k);
}

std::vector<std::uint32_t> iota_idx(std::size_t k) {
    std::vector<std::uint32_t> v(k);
    for (std::size_t i = 0; i < k; ++i) v[i] = static_cast<std::uint32_t>(i);
    return v;
}

} // namespace

UpperEstimate bl_upper_detail(const EmpiricalMeasure& mu, const EmpiricalMeasure& nu,
                              std::size_t subsample, std::uint64_t seed,
                              std::size_t repeats) {
    mu.validate();
    nu.validate();
    if (subsample == 0 || repeats == 0)
        throw std::invalid_argument("bl_upper: subsample and repeats must be >= 1");

    UpperEstimate est;
    if (mu.size() == nu.size() && mu.size() <= subsample && uniform_weights(mu) &&
        uniform_weights(nu)) {
        // Full supports, uniform weights: one exact solve, no sampling error.
        const auto idx = iota_idx(mu.size());
        est.value = matched_cost(mu, idx, nu, idx);
        est.samples = {est.value};
        return est;
    }

    const std::size_t k = std::min({subsample, mu.size(), nu.size()});
    est.samples.resize(repeats);
    for (std::size_t rep = 0; rep < repeats; ++rep) {
        const auto mi = resample(mu, k, seed, static_cast<std::uint32_t>(2 * rep));
        const auto ni = resample(nu, k, seed, static_cast<std::uint32_t>(2 * rep + 1));
        est.samples[rep] = matched_cost(mu, mi, nu, ni);
        est.value += est.samples[rep];
    }
    est.value /= static_cast<double>(repeats);
    if (repeats > 1) {
        double ss = 0.0;
        for (const double s : est.samples) ss += (s - est.value) * (s - est.value);
        est.se = std::sqrt(ss / (static_cast<double>(repeats - 1) * repeats));
    }
    return est;
}

double bl_upper(const EmpiricalMeasure& mu, const EmpiricalMeasure& nu, std::size_t subsample,
                std::uint64_t seed, std::size_t repeats) {
    return bl_upper_detail(mu, nu, subsample, seed, repeats).value;
}

DistanceBracket bl_bracket(const EmpiricalMeasure& mu, const EmpiricalMeasure& nu,
                           std::size_t bank_size, std::size_t subsample, std::uint64_t seed,
                           ThreadPool* pool) {
    DistanceBracket b = bl_lower(mu, nu, bank_size, seed, pool);
    const UpperEstimate up = bl_upper_detail(mu, nu, subsample, seed);
    b.upper = up.value;
    b.upper_se = up.se;
    return b;
}

namespace {

const Ensemble& state_at(const CoupledRun& run, MarginalSource which, double t) {
    const bool newt = which == MarginalSource::newtonian;
    if (std::abs(t) <= 1e-9) return newt ? run.newt0 : run.tracked0;
    if (std::abs(t - run.t_end) <= 1e-9 * std::max(1.0, run.t_end))
        return newt ? run.newt : run.tracked;
    const auto& snaps = newt ? run.snapshots_newt : run.snapshots_tracked;
    for (const auto& [step, e] : snaps)
        if (std::abs(static_cast<double>(step) * run.dt - t) <= 1e-9 * std::max(1.0, t))
            return e;
    throw std::invalid_argument("marginal_from_replicas: t is not on the recorded grid");
}

} // namespace

EmpiricalMeasure marginal_from_replicas(const std::vector<CoupledRun>& runs,
                                        MarginalSource which, double t, bool pooled) {
    if (runs.empty()) throw std::invalid_argument("marginal_from_replicas: no runs");
    for (const CoupledRun& r : runs)
        if (r.steps != runs.front().steps || r.dt != runs.front().dt ||
            r.newt0.size() != runs.front().newt0.size())
            throw std::invalid_argument("marginal_from_replicas: mismatched run grids");

    EmpiricalMeasure m;
    const std::size_t n = runs.front().newt0.size();
    const std::size_t per = pooled ? n : 1;
    const double weight = 1.0 / static_cast<double>(runs.size() * per);
    for (const CoupledRun& r : runs) {
        const Ensemble& e = state_at(r, which, t);
        for (std::size_t i = 0; i < per; ++i) m.push(e.pos(i), e.vel(i), weight);
    }
    return m;
}

std::vector<ChaosPoint> chaos_curve(const F0Spec& f0, const ModelParams& p, const Scenario& sc,
                                    const std::vector<std::size_t>& n_list,
                                    std::size_t m_factor, std::size_t replicas,
                                    std::uint64_t seed, const RunOptions& opt,
                                    std::size_t bank_size, std::size_t subsample, bool pooled,
                                    ThreadPool* pool) {
    if (n_list.empty()) throw ConfigError("n_list: must be non-empty");
    for (std::size_t k = 1; k < n_list.size(); ++k)
        if (n_list[k] <= n_list[k - 1])
            throw ConfigError("n_list: must be strictly increasing");
    if (m_factor < 4) throw ConfigError("m_factor: must be >= 4");
    if (replicas == 0) throw ConfigError("replicas: must be >= 1");
    f0.validate();

    RunOptions ro = opt;
    ro.pool = nullptr;  // replicas fan out; inner runs stay single-threaded
    ro.store_frames = false;
    ro.snapshot_every = 0;

    auto fresh = [&](std::size_t count, std::uint32_t replica) {
        EmpiricalMeasure m;
        for (std::size_t i = 0; i < count; ++i) {
            CounterRng rng(seed, StreamPurpose::scratch, replica,
                           static_cast<std::uint32_t>(i));
            const auto [x, v] = f0.sample(rng);
            m.push(x, v, 1.0 / static_cast<double>(count));
        }
        return m;
    };

    std::vector<ChaosPoint> out;
    for (std::size_t ni = 0; ni < n_list.size(); ++ni) {
        const std::size_t n = n_list[ni];
        const std::size_t m = m_factor * n;
        ModelParams pn = p;
        pn.n = static_cast<std::uint32_t>(n);

        std::vector<CoupledRun> runs(replicas);
        auto body = [&](std::size_t first, std::size_t last) {
            for (std::size_t r = first; r < last; ++r)
                runs[r] = run_coupled(f0, pn, sc, n, m, seed,
                                      static_cast<std::uint32_t>(r), ro);
        };
        if (pool)
            pool->parallel_for(replicas, 1, body);
        else
            body(0, replicas);

        const EmpiricalMeasure mu0 =
            marginal_from_replicas(runs, MarginalSource::newtonian, 0.0, pooled);
        const EmpiricalMeasure muT =
            marginal_from_replicas(runs, MarginalSource::newtonian, ro.t_end, pooled);
        EmpiricalMeasure nuT;
        const double wf = 1.0 / static_cast<double>(replicas * m);
        for (const CoupledRun& r : runs)
            for (std::size_t i = 0; i < m; ++i) nuT.push(r.field.pos(i), r.field.vel(i), wf);

        const auto rep32 = [&](std::uint32_t j) {
            return static_cast<std::uint32_t>(3 * ni + j);
        };
        const EmpiricalMeasure ref0 = fresh(mu0.size(), rep32(0));
        const EmpiricalMeasure base_a = fresh(mu0.size(), rep32(1));
        const EmpiricalMeasure base_b = fresh(mu0.size(), rep32(2));

        const std::uint64_t mix = 0x9E3779B97F4A7C15ULL;
        ChaosPoint cp;
        cp.n = n;
        cp.start = bl_bracket(mu0, ref0, bank_size, subsample, seed ^ (mix * (3 * ni + 1)), pool);
        cp.baseline =
            bl_upper(base_a, base_b, subsample, seed ^ (mix * (3 * ni + 2)));
        cp.end = bl_bracket(muT, nuT, bank_size, subsample, seed ^ (mix * (3 * ni + 3)), pool);
        out.push_back(cp);
    }
    return out;
}

} // namespace pedflow
