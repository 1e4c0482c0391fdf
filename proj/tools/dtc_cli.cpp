// dtc_cli - experiment runner for the driven spin chain
//
//   dtc_cli signature    --config c.conf --seed 1 --out out/
//   dtc_cli measure-traj --config configs/fig7.conf --jobs 4
//   dtc_cli sweep        --config c.conf --set bath.beta=[0.1,1,10]
//   dtc_cli plot         --out out/
//   dtc_cli --selftest
//
// Exit codes: 0 success, 2 configuration error, 3 numerical failure.

#include <cstdio>
#include <cstdlib>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "dtc/config.hpp"
#include "dtc/experiment.hpp"
#include "plots.hpp"

namespace {

constexpr int exit_config = 2;
constexpr int exit_numerical = 3;

int default_jobs()
{
    if (const char* env = std::getenv("DTC_JOBS")) {
        try {
            const int j = std::stoi(env);
            if (j >= 1) return j;
        } catch (const std::exception&) {
        }
        throw dtc::ConfigError("must be a positive integer", "DTC_JOBS");
    }
    return 1;
}

int selftest()
{
    bool ok = true;
    for (const auto& c : dtc::run_selftest()) {
        std::printf("%-4s %-44s value %.3e  limit %.1e\n", c.pass ? "ok" : "FAIL", c.name.c_str(), c.value, c.limit);
        ok = ok && c.pass;
    }
    return ok ? 0 : exit_numerical;
}

} // namespace

int main(int argc, char** argv)
{
    CLI::App app{"Open-system simulator for a disordered two-stroke spin chain"};
    app.set_version_flag("--version", DTC_VERSION);

    bool run_selftest = false;
    std::string config_path;
    std::optional<std::uint64_t> seed;
    std::vector<std::string> overrides;
    std::optional<int> jobs;
    std::string out_dir;

    app.add_flag("--selftest", run_selftest, "Run the small-N oracle checks and exit");
    app.add_option("--config", config_path, "Configuration file (flat key = value)");
    app.add_option("--seed", seed, "Master seed (overrides run.seed)");
    app.add_option("--set", overrides, "Override a config entry, key=value (repeatable)");
    app.add_option("--jobs", jobs, "Worker threads (default: DTC_JOBS or 1)")->check(CLI::PositiveNumber);
    app.add_option("--out", out_dir, "Output directory (overrides run.output_dir)");

    struct Command {
        const char* name;
        const char* help;
        std::optional<dtc::Protocol> protocol;
    };
    const std::vector<Command> commands{
        {"signature", "Unmeasured signature <S_x(t)>", dtc::Protocol::plain},
        {"thermo", "Signature plus thermodynamic trace", dtc::Protocol::thermo},
        {"measure-avg", "Measurement-averaged signature and E_r", dtc::Protocol::measured_average},
        {"measure-traj", "Monte-Carlo measurement trajectories and M, dw, A", dtc::Protocol::trajectories},
        {"sweep", "Run the protocol named in the config", std::nullopt},
        {"plot", "Render SVG plots from an output directory", std::nullopt},
    };
    std::vector<CLI::App*> subs;
    for (const auto& c : commands) {
        subs.push_back(app.add_subcommand(c.name, c.help));
        subs.back()->fallthrough();
    }
    app.require_subcommand(0, 1);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : exit_config;
    }

    try {
        if (run_selftest) return selftest();

        const Command* cmd = nullptr;
        for (std::size_t i = 0; i < commands.size(); ++i) {
            if (subs[i]->parsed()) cmd = &commands[i];
        }
        if (!cmd) {
            std::cerr << app.help();
            return exit_config;
        }

        dtc::ConfigMap map;
        if (!config_path.empty()) map.load(config_path);
        for (const auto& s : overrides) map.set_assignment(s);
        if (seed) map.set("run.seed", std::to_string(*seed));
        if (!out_dir.empty()) map.set("run.output_dir", out_dir);

        if (std::string(cmd->name) == "plot") {
            const std::string dir = map.has("run.output_dir") ? map.scalar("run.output_dir") : "out";
            const int n = dtc::plots::emit_plots(dir);
            std::printf("wrote %d plot(s) to %s\n", n, dir.c_str());
            return 0;
        }
        if (cmd->protocol) map.set("run.protocol", dtc::to_string(*cmd->protocol));

        const dtc::ExperimentConfig config = dtc::resolve_config(map);
        const dtc::ExperimentOutput out = dtc::run_experiment(config, jobs.value_or(default_jobs()));
        std::printf("%zu run(s), protocol %s, output in %s\n", out.runs.size(), dtc::to_string(config.protocol).c_str(),
                    config.output_dir.c_str());
        return 0;
    } catch (const dtc::ConfigError& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return exit_config;
    } catch (const dtc::NumericalError& e) {
        std::cerr << "numerical error: " << e.what() << '\n';
        return exit_numerical;
    } catch (const dtc::DimensionError& e) {
        std::cerr << "numerical error: " << e.what() << '\n';
        return exit_numerical;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
}
