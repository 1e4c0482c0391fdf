#include <gtest/gtest.h>

#include <atomic>
#include <filesystem>
#include <fstream>
#include <functional>
#include <set>
#include <sstream>

#include "dtc/experiment.hpp"
#include "plots.hpp"

using namespace dtc;
namespace fs = std::filesystem;

namespace {

ConfigMap parse_text(const std::string& text)
{
    ConfigMap m;
    std::istringstream in(text);
    m.parse(in);
    return m;
}

fs::path fresh_dir(const std::string& name)
{
    const fs::path p = fs::temp_directory_path() / ("dtc_test_" + name);
    fs::remove_all(p);
    return p;
}

std::string slurp(const fs::path& p)
{
    std::ifstream in(p, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

std::map<std::string, std::string> directory_bytes(const fs::path& dir, const std::set<std::string>& skip)
{
    std::map<std::string, std::string> out;
    for (const auto& e : fs::directory_iterator(dir)) {
        const std::string name = e.path().filename().string();
        if (!skip.count(name)) out[name] = slurp(e.path());
    }
    return out;
}

std::string error_key(const std::function<void()>& fn)
{
    try {
        fn();
    } catch (const ConfigError& e) {
        return e.key();
    }
    return "<no error>";
}

} // namespace

TEST(ParseNumber, PlainAndPiForms)
{
    EXPECT_EQ(parse_number("0.25", "k"), 0.25);
    EXPECT_EQ(parse_number(" -3e-2 ", "k"), -0.03);
    EXPECT_EQ(parse_number("pi", "k"), pi);
    EXPECT_EQ(parse_number("-pi", "k"), -pi);
    EXPECT_EQ(parse_number("2pi", "k"), 2 * pi);
    EXPECT_EQ(parse_number("pi/4", "k"), pi / 4);
    EXPECT_EQ(parse_number("3*pi/4", "k"), 3 * pi / 4);
    EXPECT_THROW(parse_number("abc", "k"), ConfigError);
    EXPECT_THROW(parse_number("pi/0", "k"), ConfigError);
    EXPECT_THROW(parse_number("1.5x", "k"), ConfigError);
    EXPECT_EQ(error_key([] { parse_number("x", "bath.beta"); }), "bath.beta");
}

TEST(ConfigMap, ParsesFileSyntaxAndOverrides)
{
    ConfigMap m = parse_text("# comment\nmodel.N = [3, 4]\nbath.beta = 0.5, 2 # trailing\n\nrun.seed = 17\n");
    m.set_assignment("bath.Gamma=0.1");
    m.set_assignment("model.N = 2");
    EXPECT_EQ(m.integers("model.N"), std::vector<std::int64_t>{2});
    EXPECT_EQ(m.numbers("bath.beta"), (std::vector<double>{0.5, 2.0}));
    EXPECT_EQ(m.number("bath.Gamma"), 0.1);
    EXPECT_EQ(m.unsigned_integer("run.seed"), 17u);
    EXPECT_THROW(m.number("bath.beta"), ConfigError);
    EXPECT_THROW(parse_text("no equals sign\n"), ConfigError);
    EXPECT_THROW(m.set_assignment("=3"), ConfigError);
    EXPECT_THROW(parse_text("k = [1, 2\n").list("k"), ConfigError);
    EXPECT_THROW(parse_text("k = 1,,2\n").list("k"), ConfigError);
}

TEST(ResolveConfig, DefaultsAndGrids)
{
    const ExperimentConfig c = resolve_config(parse_text(
        "run.seed = 5\nmodel.N = 3, 4\nrun.axis = z, x\nbath.beta = 0.1, 10\nbath.Gamma = 0.02\n"
        "run.protocol = measured-average\nrun.disorder = fixed\nmodel.h_bar = pi\nmodel.J_bar = pi/4\n"));
    EXPECT_EQ(c.Ns, (std::vector<int>{3, 4}));
    EXPECT_EQ(c.axes, (std::vector<Axis>{Axis::z, Axis::x}));
    EXPECT_EQ(c.betas, (std::vector<double>{0.1, 10.0}));
    EXPECT_EQ(c.protocol, Protocol::measured_average);
    EXPECT_EQ(c.disorder, DisorderMode::fixed);
    EXPECT_EQ(c.model.J_bar, pi / 4);
    EXPECT_EQ(c.seed, 5u);
    EXPECT_EQ(c.n_periods, 100);
    EXPECT_EQ(c.sample_dt, 0.01);
}

TEST(ResolveConfig, RejectsBadInput)
{
    EXPECT_EQ(error_key([] { resolve_config(parse_text("model.N = 3\n")); }), "run.seed");
    EXPECT_EQ(error_key([] { resolve_config(parse_text("run.seed = 1\nmodel.Nx = 3\n")); }), "model.Nx");
    EXPECT_EQ(error_key([] { resolve_config(parse_text("run.seed = 1\nmodel.N = 0\n")); }), "model.N");
    EXPECT_EQ(error_key([] { resolve_config(parse_text("run.seed = 1\nbath.beta = -1\n")); }), "bath.beta");
    EXPECT_EQ(error_key([] { resolve_config(parse_text("run.seed = 1\nbath.Gamma = -0.1\n")); }), "bath.Gamma");
    EXPECT_EQ(error_key([] { resolve_config(parse_text("run.seed = 1\nrun.axis = y\n")); }), "run.axis");
    EXPECT_EQ(error_key([] { resolve_config(parse_text("run.seed = 1\nrun.protocol = nope\n")); }), "run.protocol");
    EXPECT_EQ(error_key([] { resolve_config(parse_text("run.seed = 1\nrun.sample_dt = 0.03\n")); }), "sample_dt");
    EXPECT_EQ(error_key([] { resolve_config(parse_text("run.seed = -4\n")); }), "run.seed");
    EXPECT_EQ(error_key([] { resolve_config(parse_text("run.seed = 1\nrun.n_periods = 2.5\n")); }), "run.n_periods");
}

TEST(Seeds, IndependentOfGridOrderAndNeighbours)
{
    ExperimentConfig a;
    a.seed = 9;
    a.seed_set = true;
    a.Ns = {3, 4};
    a.betas = {0.1, 1.0};
    a.Gammas = {0.01};
    a.protocol = Protocol::trajectories;
    a.trajectories = 3;
    a.replications = 2;
    ExperimentConfig b = a;
    b.Ns = {4};
    b.betas = {1.0, 5.0, 0.1};

    std::map<std::string, RunSpec> by_name;
    for (const auto& s : plan_runs(a)) by_name[s.name()] = s;
    int shared = 0;
    for (const auto& s : plan_runs(b)) {
        auto it = by_name.find(s.name());
        if (it == by_name.end()) continue;
        ++shared;
        EXPECT_EQ(it->second.disorder_seed, s.disorder_seed);
        EXPECT_EQ(it->second.trajectory_seeds, s.trajectory_seeds);
    }
    EXPECT_EQ(shared, 4);

    // Disorder is shared across bath and axis points of one realization, not across realizations.
    const auto runs = plan_runs(a);
    std::set<std::uint64_t> disorder, traj;
    for (const auto& s : runs) {
        disorder.insert(s.disorder_seed);
        for (auto t : s.trajectory_seeds) traj.insert(t);
    }
    EXPECT_EQ(disorder.size(), 4u);  // 2 N values x 2 realizations
    EXPECT_EQ(traj.size(), runs.size() * 3);

    a.disorder = DisorderMode::fixed;
    std::set<std::uint64_t> fixed;
    for (const auto& s : plan_runs(a)) fixed.insert(s.disorder_seed);
    EXPECT_EQ(fixed.size(), 2u);
}

TEST(ParallelFor, VisitsEveryIndexAndRethrowsLowestError)
{
    std::vector<std::atomic<int>> hits(50);
    parallel_for(hits.size(), 4, [&](std::size_t i) { ++hits[i]; });
    for (const auto& h : hits) EXPECT_EQ(h.load(), 1);
    try {
        parallel_for(20, 3, [](std::size_t i) {
            if (i == 7 || i == 13) throw std::runtime_error(std::to_string(i));
        });
        FAIL();
    } catch (const std::runtime_error& e) {
        EXPECT_STREQ(e.what(), "7");
    }
}

TEST(RunExperiment, SerialAndParallelOutputsAreIdentical)
{
    for (Protocol protocol : {Protocol::plain, Protocol::thermo, Protocol::measured_average, Protocol::trajectories}) {
        ExperimentConfig c;
        c.seed = 3;
        c.seed_set = true;
        c.Ns = {2, 3};
        c.betas = {0.5, 2.0};
        c.Gammas = {0.05};
        c.axes = {Axis::x};
        c.protocol = protocol;
        c.replications = 2;
        c.trajectories = 3;
        c.n_periods = 4;
        c.sample_dt = 0.1;
        const std::string tag = to_string(protocol);
        const fs::path serial_dir = fresh_dir("serial_" + tag);
        c.output_dir = serial_dir.string();
        const auto serial = run_experiment(c, 1);
        c.output_dir = fresh_dir("parallel_" + tag).string();
        run_experiment(c, 4);
        const auto a = directory_bytes(serial_dir, {"metadata.json"});
        const auto b = directory_bytes(c.output_dir, {"metadata.json"});
        EXPECT_EQ(a.size(), b.size()) << tag;
        EXPECT_GT(a.size(), serial.runs.size()) << tag;
        for (const auto& [name, bytes] : a) {
            ASSERT_TRUE(b.count(name)) << name;
            EXPECT_TRUE(bytes == b.at(name)) << name;
        }
        EXPECT_TRUE(fs::exists(fs::path(c.output_dir) / "metadata.json"));
        const auto agg = nlohmann::json::parse(slurp(fs::path(c.output_dir) / "aggregate.json"));
        EXPECT_EQ(agg["runs"].size(), 8u);
        EXPECT_EQ(agg["points"].size(), 4u);
    }
}

TEST(RunExperiment, ThermoSummaryBalances)
{
    ExperimentConfig c;
    c.seed = 8;
    c.seed_set = true;
    c.Ns = {3};
    c.betas = {0.5};
    c.Gammas = {0.1};
    c.protocol = Protocol::thermo;
    c.n_periods = 3;
    c.output_dir = fresh_dir("thermo").string();
    const auto out = run_experiment(c, 1);
    ASSERT_EQ(out.results.size(), 1u);
    const auto& s = out.results[0].summary;
    EXPECT_LT(s.at("first_law_relative_residual"), 1e-5);
    EXPECT_GE(s.at("min_entropy_production"), -1e-10);
    const auto w = plots::Table::read(fs::path(c.output_dir) / (out.runs[0].name() + ".work.tsv"));
    EXPECT_EQ(w.size(), 5u);
}

TEST(Plots, RenderOutputsAndReportMissingColumns)
{
    ExperimentConfig c;
    c.seed = 2;
    c.seed_set = true;
    c.Ns = {2};
    c.protocol = Protocol::thermo;
    c.n_periods = 2;
    c.sample_dt = 0.1;
    c.output_dir = fresh_dir("plots").string();
    const auto out = run_experiment(c, 1);
    EXPECT_GE(plots::emit_plots(c.output_dir), 1);
    bool any_svg = false;
    for (const auto& e : fs::directory_iterator(c.output_dir)) any_svg = any_svg || e.path().extension() == ".svg";
    EXPECT_TRUE(any_svg);

    const fs::path trace = fs::path(c.output_dir) / (out.runs[0].name() + ".trace.tsv");
    const auto t = plots::Table::read(trace);
    EXPECT_THROW(t.numbers("no_such_column"), ConfigError);
    {
        std::ofstream f(trace);
        f << "time\tstroke_tag\n0\tz\n";
    }
    EXPECT_THROW(plots::emit_plots(c.output_dir), ConfigError);
    EXPECT_THROW(plots::emit_plots(fs::path(c.output_dir) / "missing"), ConfigError);
}

TEST(Selftest, AllChecksPass)
{
    const auto checks = run_selftest();
    EXPECT_GT(checks.size(), 10u);
    for (const auto& ch : checks) EXPECT_TRUE(ch.pass) << ch.name << " value " << ch.value << " limit " << ch.limit;
}
