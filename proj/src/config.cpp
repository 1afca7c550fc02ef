#include "pedflow/config.hpp"

#include <cmath>
#include <fstream>
#include <initializer_list>
#include <sstream>

#include <json.hpp>

#include "pedflow/kernels.hpp"

namespace pedflow {

namespace {

using nlohmann::json;

[[noreturn]] void bad(const std::string& where, const std::string& what) {
    throw ConfigError(where + ": " + what);
}

void check_keys(const json& j, const std::string& where,
                std::initializer_list<const char*> allowed) {
    if (!j.is_object()) bad(where, "expected an object");
    for (auto it = j.begin(); it != j.end(); ++it) {
        bool known = false;
        for (const char* k : allowed)
            if (it.key() == k) {
                known = true;
                break;
            }
        if (!known) bad(where + "." + it.key(), "unknown key");
    }
}

double get_num(const json& j, const std::string& where, const char* key, double def) {
    if (!j.contains(key)) return def;
    const json& v = j.at(key);
    if (!v.is_number()) bad(where + "." + key, "expected a number");
    return v.get<double>();
}

std::int64_t get_int(const json& j, const std::string& where, const char* key,
                     std::int64_t def) {
    if (!j.contains(key)) return def;
    const json& v = j.at(key);
    if (!v.is_number_integer()) bad(where + "." + key, "expected an integer");
    return v.get<std::int64_t>();
}

std::uint64_t get_u64(const json& j, const std::string& where, const char* key,
                      std::uint64_t def) {
    if (!j.contains(key)) return def;
    const json& v = j.at(key);
    if (!v.is_number_unsigned() && !v.is_number_integer())
        bad(where + "." + key, "expected a non-negative integer");
    if (v.is_number_integer() && v.get<std::int64_t>() < 0)
        bad(where + "." + key, "expected a non-negative integer");
    return v.get<std::uint64_t>();
}

bool get_bool(const json& j, const std::string& where, const char* key, bool def) {
    if (!j.contains(key)) return def;
    const json& v = j.at(key);
    if (!v.is_boolean()) bad(where + "." + key, "expected a boolean");
    return v.get<bool>();
}

std::string get_str(const json& j, const std::string& where, const char* key,
                    const std::string& def) {
    if (!j.contains(key)) return def;
    const json& v = j.at(key);
    if (!v.is_string()) bad(where + "." + key, "expected a string");
    return v.get<std::string>();
}

std::vector<std::size_t> get_size_list(const json& j, const std::string& where,
                                       const char* key,
                                       const std::vector<std::size_t>& def) {
    if (!j.contains(key)) return def;
    const json& v = j.at(key);
    if (!v.is_array()) bad(where + "." + key, "expected an array of integers");
    std::vector<std::size_t> out;
    for (const json& e : v) {
        if (!e.is_number_integer() && !e.is_number_unsigned())
            bad(where + "." + key, "expected an array of integers");
        if (e.is_number_integer() && e.get<std::int64_t>() < 1)
            bad(where + "." + key, "entries must be >= 1");
        out.push_back(e.get<std::size_t>());
    }
    return out;
}

F0Dim parse_dim(const json& j, const std::string& where) {
    check_keys(j, where, {"kind", "lo", "hi", "mean", "sigma"});
    F0Dim d;
    const std::string kind = get_str(j, where, "kind", "uniform");
    if (kind == "uniform")
        d.kind = F0Dim::Kind::uniform;
    else if (kind == "trunc_gauss")
        d.kind = F0Dim::Kind::trunc_gauss;
    else
        bad(where + ".kind", "expected 'uniform' or 'trunc_gauss'");
    d.lo = get_num(j, where, "lo", 0.0);
    d.hi = get_num(j, where, "hi", 1.0);
    d.mean = get_num(j, where, "mean", 0.0);
    d.sigma = get_num(j, where, "sigma", 1.0);
    return d;
}

F0Spec parse_f0(const json& j, const std::string& where) {
    check_keys(j, where, {"components"});
    if (!j.contains("components") || !j.at("components").is_array() ||
        j.at("components").empty())
        bad(where + ".components", "expected a non-empty array");
    F0Spec f0;
    std::size_t ci = 0;
    for (const json& cj : j.at("components")) {
        const std::string cw = where + ".components[" + std::to_string(ci++) + "]";
        check_keys(cj, cw, {"weight", "x", "y", "vx", "vy"});
        F0Component c;
        c.weight = get_num(cj, cw, "weight", 1.0);
        const char* names[4] = {"x", "y", "vx", "vy"};
        for (int d = 0; d < 4; ++d) {
            if (!cj.contains(names[d])) bad(cw, std::string("missing marginal '") + names[d] + "'");
            c.dims[d] = parse_dim(cj.at(names[d]), cw + "." + names[d]);
        }
        f0.components.push_back(c);
    }
    return f0;
}

json dump_dim(const F0Dim& d) {
    json j;
    j["kind"] = d.kind == F0Dim::Kind::uniform ? "uniform" : "trunc_gauss";
    j["lo"] = d.lo;
    j["hi"] = d.hi;
    if (d.kind == F0Dim::Kind::trunc_gauss) {
        j["mean"] = d.mean;
        j["sigma"] = d.sigma;
    }
    return j;
}

const char* edge_name(Scenario::Edge e) {
    switch (e) {
        case Scenario::Edge::left: return "left";
        case Scenario::Edge::right: return "right";
        case Scenario::Edge::top: return "top";
        case Scenario::Edge::bottom: return "bottom";
    }
    return "right";
}

const char* speed_name(SpeedModel m) {
    return m == SpeedModel::linear ? "linear" : "exponential";
}

const char* slowness_name(Scenario::SlownessMap m) {
    return m == Scenario::SlownessMap::paper_reciprocal ? "paper_reciprocal" : "density";
}

} // namespace

RunConfig RunConfig::from_json_text(const std::string& text) {
    json root = json::parse(text, nullptr, /*allow_exceptions=*/false);
    if (root.is_discarded()) throw ConfigError("config: not valid JSON");
    check_keys(root, "config",
               {"params", "scenario", "exponents", "f0", "n_list", "m_factor", "dt", "t_end",
                "replicas", "seed", "output_dir", "refresh_every", "snapshot_every", "backend",
                "moments", "measures", "calibrate"});

    RunConfig c;

    if (root.contains("exponents")) {
        const json& j = root.at("exponents");
        check_keys(j, "config.exponents", {"theta", "alpha", "beta", "gamma"});
        c.exponents.theta = get_num(j, "config.exponents", "theta", c.exponents.theta);
        c.exponents.alpha = get_num(j, "config.exponents", "alpha", c.exponents.alpha);
        c.exponents.beta = get_num(j, "config.exponents", "beta", c.exponents.beta);
        c.exponents.gamma = get_num(j, "config.exponents", "gamma", c.exponents.gamma);
    }

    if (root.contains("params")) {
        const json& j = root.at("params");
        const std::string w = "config.params";
        check_keys(j, w,
                   {"k_n", "gamma_n", "gamma_t", "R", "R_tilde", "T", "U_max", "theta",
                    "mollifier_order", "majorant_c", "lipschitz_v", "speed_model", "speed_rate"});
        ModelParams& p = c.params;
        p.k_n = get_num(j, w, "k_n", p.k_n);
        p.gamma_n = get_num(j, w, "gamma_n", p.gamma_n);
        p.gamma_t = get_num(j, w, "gamma_t", p.gamma_t);
        p.R = get_num(j, w, "R", p.R);
        p.R_tilde = get_num(j, w, "R_tilde", p.R_tilde);
        p.T = get_num(j, w, "T", p.T);
        p.U_max = get_num(j, w, "U_max", p.U_max);
        p.mollifier_order = static_cast<int>(get_int(j, w, "mollifier_order", p.mollifier_order));
        p.majorant_c = get_num(j, w, "majorant_c", p.majorant_c);
        p.lipschitz_v = get_num(j, w, "lipschitz_v", p.lipschitz_v);
        const std::string sm = get_str(j, w, "speed_model", speed_name(p.speed_model));
        if (sm == "linear")
            p.speed_model = SpeedModel::linear;
        else if (sm == "exponential")
            p.speed_model = SpeedModel::exponential;
        else
            bad(w + ".speed_model", "expected 'linear' or 'exponential'");
        p.speed_rate = get_num(j, w, "speed_rate", p.speed_rate);
        // theta is single-sourced from exponents; a duplicate key must agree.
        if (j.contains("theta") &&
            get_num(j, w, "theta", c.exponents.theta) != c.exponents.theta)
            bad(w + ".theta", "conflicts with exponents.theta; set it once under exponents");
    }
    c.params.theta = c.exponents.theta;

    if (root.contains("scenario")) {
        const json& j = root.at("scenario");
        const std::string w = "config.scenario";
        check_keys(j, w,
                   {"x0", "x1", "y0", "y1", "grid_h", "slowness_floor", "target_edge", "span_lo",
                    "span_hi", "slowness_map"});
        Scenario& s = c.scenario;
        s.x0 = get_num(j, w, "x0", s.x0);
        s.x1 = get_num(j, w, "x1", s.x1);
        s.y0 = get_num(j, w, "y0", s.y0);
        s.y1 = get_num(j, w, "y1", s.y1);
        s.grid_h = get_num(j, w, "grid_h", s.grid_h);
        s.slowness_floor = get_num(j, w, "slowness_floor", s.slowness_floor);
        const std::string edge = get_str(j, w, "target_edge", edge_name(s.target_edge));
        if (edge == "left")
            s.target_edge = Scenario::Edge::left;
        else if (edge == "right")
            s.target_edge = Scenario::Edge::right;
        else if (edge == "top")
            s.target_edge = Scenario::Edge::top;
        else if (edge == "bottom")
            s.target_edge = Scenario::Edge::bottom;
        else
            bad(w + ".target_edge", "expected left|right|top|bottom");
        s.span_lo = get_num(j, w, "span_lo", s.span_lo);
        s.span_hi = get_num(j, w, "span_hi", s.span_hi);
        const std::string map = get_str(j, w, "slowness_map", slowness_name(s.slowness_map));
        if (map == "paper_reciprocal")
            s.slowness_map = Scenario::SlownessMap::paper_reciprocal;
        else if (map == "density")
            s.slowness_map = Scenario::SlownessMap::density;
        else
            bad(w + ".slowness_map", "expected paper_reciprocal|density");
    }

    if (root.contains("f0")) c.f0 = parse_f0(root.at("f0"), "config.f0");

    c.n_list = get_size_list(root, "config", "n_list", c.n_list);
    c.m_factor = get_u64(root, "config", "m_factor", c.m_factor);
    c.dt = get_num(root, "config", "dt", c.dt);
    c.t_end = get_num(root, "config", "t_end", c.t_end);
    c.replicas = get_u64(root, "config", "replicas", c.replicas);
    c.seed = get_u64(root, "config", "seed", c.seed);
    c.output_dir = get_str(root, "config", "output_dir", c.output_dir);
    c.refresh_every = static_cast<int>(get_int(root, "config", "refresh_every", c.refresh_every));
    c.snapshot_every =
        static_cast<int>(get_int(root, "config", "snapshot_every", c.snapshot_every));
    c.backend = get_str(root, "config", "backend", c.backend);

    if (root.contains("moments")) {
        const json& j = root.at("moments");
        check_keys(j, "config.moments", {"n_list", "replicas", "quadrature"});
        c.moment_n_list = get_size_list(j, "config.moments", "n_list", c.moment_n_list);
        c.moment_replicas = get_u64(j, "config.moments", "replicas", c.moment_replicas);
        c.quadrature = get_u64(j, "config.moments", "quadrature", c.quadrature);
    }
    if (root.contains("measures")) {
        const json& j = root.at("measures");
        check_keys(j, "config.measures", {"bank_size", "subsample", "replicas", "pooled"});
        c.bank_size = get_u64(j, "config.measures", "bank_size", c.bank_size);
        c.subsample = get_u64(j, "config.measures", "subsample", c.subsample);
        c.chaos_replicas = get_u64(j, "config.measures", "replicas", c.chaos_replicas);
        c.pooled_marginal = get_bool(j, "config.measures", "pooled", c.pooled_marginal);
    }
    if (root.contains("calibrate")) {
        const json& j = root.at("calibrate");
        check_keys(j, "config.calibrate", {"samples"});
        c.calibrate_samples = get_u64(j, "config.calibrate", "samples", c.calibrate_samples);
    }

    c.validate();
    return c;
}

RunConfig RunConfig::from_json_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError("config: cannot open " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return from_json_text(ss.str());
}

void RunConfig::validate() const {
    params.validate();
    scenario.validate();
    exponents.validate();
    f0.validate();
    if (params.theta != exponents.theta)
        throw ConfigError("params.theta: must equal exponents.theta");
    auto check_list = [](const std::vector<std::size_t>& l, const std::string& name) {
        if (l.empty()) throw ConfigError(name + ": must be non-empty");
        for (std::size_t i = 0; i < l.size(); ++i) {
            if (l[i] < 2) throw ConfigError(name + ": entries must be >= 2");
            if (i > 0 && l[i] <= l[i - 1])
                throw ConfigError(name + ": must be strictly increasing");
        }
    };
    check_list(n_list, "config.n_list");
    check_list(moment_n_list, "config.moments.n_list");
    if (m_factor < 4) throw ConfigError("config.m_factor: must be >= 4");
    if (replicas < 1) throw ConfigError("config.replicas: must be >= 1");
    if (moment_replicas < 2) throw ConfigError("config.moments.replicas: must be >= 2");
    if (quadrature < 2) throw ConfigError("config.moments.quadrature: must be >= 2");
    if (bank_size < 1) throw ConfigError("config.measures.bank_size: must be >= 1");
    if (subsample < 1) throw ConfigError("config.measures.subsample: must be >= 1");
    if (chaos_replicas < 1) throw ConfigError("config.measures.replicas: must be >= 1");
    if (calibrate_samples < 100) throw ConfigError("config.calibrate.samples: must be >= 100");
    if (backend != "scalar" && backend != "avx2" && backend != "auto")
        throw ConfigError("config.backend: expected scalar|avx2|auto");
    if (output_dir.empty()) throw ConfigError("config.output_dir: must be non-empty");
    RunOptions ro;
    ro.dt = dt;
    ro.t_end = t_end;
    ro.refresh_every = refresh_every;
    ro.snapshot_every = snapshot_every;
    ro.validate();
}

RunOptions RunConfig::run_options() const {
    RunOptions ro;
    ro.dt = dt;
    ro.t_end = t_end;
    ro.refresh_every = refresh_every;
    ro.snapshot_every = snapshot_every;
    ro.backend = kernels::resolve_backend(backend);
    return ro;
}

std::string RunConfig::canonical_json() const {
    json root;
    json& p = root["params"];
    p["k_n"] = params.k_n;
    p["gamma_n"] = params.gamma_n;
    p["gamma_t"] = params.gamma_t;
    p["R"] = params.R;
    p["R_tilde"] = params.R_tilde;
    p["T"] = params.T;
    p["U_max"] = params.U_max;
    p["theta"] = params.theta;
    p["mollifier_order"] = params.mollifier_order;
    p["majorant_c"] = params.majorant_c;
    p["lipschitz_v"] = params.lipschitz_v;
    p["speed_model"] = speed_name(params.speed_model);
    p["speed_rate"] = params.speed_rate;

    json& s = root["scenario"];
    s["x0"] = scenario.x0;
    s["x1"] = scenario.x1;
    s["y0"] = scenario.y0;
    s["y1"] = scenario.y1;
    s["grid_h"] = scenario.grid_h;
    s["slowness_floor"] = scenario.slowness_floor;
    s["target_edge"] = edge_name(scenario.target_edge);
    if (std::isfinite(scenario.span_lo)) s["span_lo"] = scenario.span_lo;
    if (std::isfinite(scenario.span_hi)) s["span_hi"] = scenario.span_hi;
    s["slowness_map"] = slowness_name(scenario.slowness_map);

    json& e = root["exponents"];
    e["theta"] = exponents.theta;
    e["alpha"] = exponents.alpha;
    e["beta"] = exponents.beta;
    e["gamma"] = exponents.gamma;

    json comps = json::array();
    for (const F0Component& c : f0.components) {
        json cj;
        cj["weight"] = c.weight;
        cj["x"] = dump_dim(c.dims[0]);
        cj["y"] = dump_dim(c.dims[1]);
        cj["vx"] = dump_dim(c.dims[2]);
        cj["vy"] = dump_dim(c.dims[3]);
        comps.push_back(cj);
    }
    root["f0"]["components"] = comps;

    root["n_list"] = n_list;
    root["m_factor"] = m_factor;
    root["dt"] = dt;
    root["t_end"] = t_end;
    root["replicas"] = replicas;
    root["seed"] = seed;
    root["output_dir"] = output_dir;
    root["refresh_every"] = refresh_every;
    root["snapshot_every"] = snapshot_every;
    root["backend"] = backend;
    root["moments"] = {{"n_list", moment_n_list},
                       {"replicas", moment_replicas},
                       {"quadrature", quadrature}};
    root["measures"] = {{"bank_size", bank_size},
                        {"subsample", subsample},
                        {"replicas", chaos_replicas},
                        {"pooled", pooled_marginal}};
    root["calibrate"] = {{"samples", calibrate_samples}};
    return root.dump();
}

std::uint64_t RunConfig::config_hash() const {
    const std::string s = canonical_json();
    std::uint64_t h = 14695981039346656037ULL;
    for (const unsigned char ch : s) {
        h ^= ch;
        h *= 1099511628211ULL;
    }
    return h;
}

} // namespace pedflow
