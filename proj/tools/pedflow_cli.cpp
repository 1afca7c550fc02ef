#include <cstdio>
#include <deque>
#include <exception>
#include <functional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "pedflow/config.hpp"
#include "pedflow/errors.hpp"
#include "pedflow/experiments.hpp"
#include "pedflow/io.hpp"

namespace {

using Runner = int (*)(const pedflow::RunConfig&, const std::string&, int);

struct SubArgs {
    std::string config_path;
    std::string out_dir;
    std::uint64_t seed = 0;
    int threads = 1;
    std::vector<std::size_t> n_override;
    CLI::Option* seed_opt = nullptr;
    Runner run = nullptr;
    bool moments = false;
};

int dispatch(const SubArgs& a) {
    pedflow::RunConfig cfg = a.config_path.empty()
                                 ? pedflow::RunConfig::defaults()
                                 : pedflow::RunConfig::from_json_file(a.config_path);
    if (a.seed_opt && a.seed_opt->count() > 0) cfg.seed = a.seed;
    if (!a.n_override.empty()) {
        cfg.n_list = a.n_override;
        if (a.moments) cfg.moment_n_list = a.n_override;
    }
    cfg.validate();
    const std::string out = a.out_dir.empty() ? cfg.output_dir : a.out_dir;

    try {
        return a.run(cfg, out, a.threads);
    } catch (const pedflow::BlowUpError& e) {
        // Leave a machine-readable trace next to whatever partial output exists.
        try {
            pedflow::ensure_dir(out);
            nlohmann::json j;
            j["error"] = "blowup";
            j["message"] = e.what();
            j["time"] = e.time;
            j["particle"] = e.particle;
            pedflow::write_text_file(out + "/blowup.json", j.dump(2) + "\n");
        } catch (const std::exception&) {
        }
        throw;
    }
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"pedflow: interacting pedestrian flow and its mean-field coupling"};
    app.require_subcommand(1);

    const struct {
        const char* name;
        const char* desc;
        Runner run;
        bool moments;
    } subs[] = {
        {"simulate", "integrate one pairwise system and write its final state",
         pedflow::run_simulate, false},
        {"couple", "run the coupled pairwise/tracer/field systems over n_list",
         pedflow::run_couple, false},
        {"moments", "centered-kernel fluctuation moments over moment_n_list",
         pedflow::run_moments, true},
        {"chaos", "bracketed distance between marginals and the field ensemble",
         pedflow::run_chaos, false},
        {"sweep", "deviation probability sweep over n_list with a log-log rate fit",
         pedflow::run_sweep, false},
        {"calibrate", "finite-difference sweep for the majorant and Lipschitz constants",
         pedflow::run_calibrate, false},
    };

    std::deque<SubArgs> args;
    SubArgs* chosen = nullptr;
    for (const auto& s : subs) {
        CLI::App* cmd = app.add_subcommand(s.name, s.desc);
        args.emplace_back();
        SubArgs* a = &args.back();
        a->run = s.run;
        a->moments = s.moments;
        cmd->add_option("--config", a->config_path, "JSON config file (defaults when omitted)")
            ->check(CLI::ExistingFile);
        a->seed_opt = cmd->add_option("--seed", a->seed, "override the config seed");
        cmd->add_option("--out", a->out_dir, "output directory (default: config output_dir)");
        cmd->add_option("--threads", a->threads, "worker threads")
            ->check(CLI::PositiveNumber);
        cmd->add_option("--n-override", a->n_override,
                        "replace the particle-count list (ascending)");
        cmd->callback([a, &chosen] { chosen = a; });
    }

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 2;
    }

    try {
        return dispatch(*chosen);
    } catch (const pedflow::ConfigError& e) {
        std::fprintf(stderr, "config error: %s\n", e.what());
        return 2;
    } catch (const pedflow::BlowUpError& e) {
        std::fprintf(stderr, "blow-up: %s (t=%.6g, particle %zu)\n", e.what(), e.time,
                     e.particle);
        return 3;
    } catch (const pedflow::NoSignalError& e) {
        std::fprintf(stderr, "no signal: %s\n", e.what());
        return 4;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    }
}
