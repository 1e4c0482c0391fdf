// experiment.hpp - seeded sweeps, parallel execution and result files
//
// A config expands to runs over N x axis x beta x Gamma x realization. Every
// run gets seeds derived from its coordinates alone:
//
//   disorder    derive_seed(master, {'d', N, r'})       r' = r, or 0 in fixed mode
//   trajectory  derive_seed(master, {'m', N, axis, bits(beta), bits(Gamma), r, k})
//
// Each run writes its own files; aggregate.json is assembled after all runs
// finish, in plan order, so output bytes do not depend on the job count.

#pragma once

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <ctime>
#include <exception>
#include <filesystem>
#include <fstream>
#include <limits>
#include <map>
#include <string>
#include <thread>
#include <vector>

#include <json.hpp>

#include "dtc/bath.hpp"
#include "dtc/config.hpp"
#include "dtc/evolution.hpp"
#include "dtc/measure.hpp"
#include "dtc/model.hpp"
#include "dtc/rng.hpp"
#include "dtc/thermo.hpp"

namespace dtc {

inline std::string format_number(double v)
{
    if (std::isnan(v)) return "nan";
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

// Short form for file names.
inline std::string format_short(double v)
{
    char buf[40];
    std::snprintf(buf, sizeof buf, "%g", v);
    return buf;
}

inline std::uint64_t disorder_seed(std::uint64_t master, int N, int realization)
{
    return derive_seed(master, {seed_word(SeedStream::disorder), static_cast<std::uint64_t>(N),
                                static_cast<std::uint64_t>(realization)});
}

inline std::uint64_t trajectory_seed(std::uint64_t master, int N, Axis axis, double beta, double Gamma,
                                     int realization, int trajectory)
{
    return derive_seed(master, {seed_word(SeedStream::measurement), static_cast<std::uint64_t>(N),
                                static_cast<std::uint64_t>(axis), seed_word(beta), seed_word(Gamma),
                                static_cast<std::uint64_t>(realization), static_cast<std::uint64_t>(trajectory)});
}

struct RunSpec {
    int N = 0;
    Axis axis = Axis::x;
    double beta = 1.0;
    double Gamma = 0.0;
    int realization = 0;
    std::uint64_t disorder_seed = 0;
    std::vector<std::uint64_t> trajectory_seeds;

    std::string point_name() const
    {
        return "N" + std::to_string(N) + "_" + std::string(to_string(axis)) + "_beta" + format_short(beta) +
               "_Gamma" + format_short(Gamma);
    }

    std::string name() const
    {
        char r[16];
        std::snprintf(r, sizeof r, "_r%03d", realization);
        return point_name() + r;
    }
};

inline std::vector<RunSpec> plan_runs(const ExperimentConfig& c)
{
    std::vector<RunSpec> runs;
    for (int N : c.Ns) {
        for (Axis axis : c.axes) {
            for (double beta : c.betas) {
                for (double Gamma : c.Gammas) {
                    for (int r = 0; r < c.replications; ++r) {
                        RunSpec s{N, axis, beta, Gamma, r, disorder_seed(c.seed, N, c.disorder == DisorderMode::fixed ? 0 : r), {}};
                        if (c.protocol == Protocol::trajectories) {
                            for (int k = 0; k < c.trajectories; ++k) {
                                s.trajectory_seeds.push_back(trajectory_seed(c.seed, N, axis, beta, Gamma, r, k));
                            }
                        }
                        runs.push_back(std::move(s));
                    }
                }
            }
        }
    }
    return runs;
}

struct RunResult {
    std::map<std::string, double> summary;
    std::vector<std::vector<double>> outcomes;  // trajectories only
};

namespace detail {

class TableWriter {
public:
    TableWriter(const std::filesystem::path& path, const std::vector<std::string>& columns) : out_(path)
    {
        if (!out_) throw Error("cannot write " + path.string());
        for (std::size_t i = 0; i < columns.size(); ++i) out_ << (i ? "\t" : "") << columns[i];
        out_ << '\n';
    }

    TableWriter& cell(double v) { return text(format_number(v)); }
    TableWriter& cell(std::uint64_t v) { return text(std::to_string(v)); }
    TableWriter& cell(int v) { return text(std::to_string(v)); }

    TableWriter& text(const std::string& s)
    {
        out_ << (first_ ? "" : "\t") << s;
        first_ = false;
        return *this;
    }

    void end_row()
    {
        out_ << '\n';
        first_ = true;
    }

private:
    std::ofstream out_;
    bool first_ = true;
};

inline double final_stroboscopic(const SignatureSeries& s, double period)
{
    const auto strobe = s.stroboscopic(period);
    return strobe.values.empty() ? std::numeric_limits<double>::quiet_NaN() : strobe.values.back();
}

} // namespace detail

inline DrivenChain build_run_chain(const ExperimentConfig& c, const RunSpec& spec)
{
    ModelParams p = c.model;
    p.N = spec.N;
    const DisorderRealization dis = sample_disorder(p, spec.disorder_seed);
    const SpinModel model = build_model(p, dis, spec.axis);
    const PeriodSchedule schedule{p.T_z, p.T_x, c.sample_dt, c.n_periods};
    return build_driven_chain(model, BathParams{spec.beta, spec.Gamma, c.omega_c}, schedule);
}

inline RunResult run_single(const ExperimentConfig& c, const RunSpec& spec, const std::filesystem::path& out_dir)
{
    const std::string base = (out_dir / spec.name()).string();
    const PeriodSchedule schedule{c.model.T_z, c.model.T_x, c.sample_dt, c.n_periods};
    const DrivenChain chain = build_run_chain(c, spec);
    const Matrix rho0 = initial_state(spec.N).rho;
    RunResult res;

    switch (c.protocol) {
    case Protocol::plain: {
        const SignatureSeries s = run_plain_signature(rho0, chain, schedule);
        detail::TableWriter w(base + ".signature.tsv", {"time", "stroke_tag", "signature"});
        for (std::size_t i = 0; i < s.times.size(); ++i) {
            w.cell(s.times[i]).text(std::string(to_string(s.strokes[i]))).cell(s.values[i]).end_row();
        }
        res.summary["final_signature"] = detail::final_stroboscopic(s, schedule.period());
        break;
    }
    case Protocol::thermo: {
        ThermoRecorder rec(chain, spec.beta);
        evolve(rho0, chain, schedule, rec);
        const ThermoTrace& tr = rec.trace();
        {
            detail::TableWriter w(base + ".trace.tsv",
                                  {"time", "stroke_tag", "signature", "energy", "heat_rate", "entropy", "entropy_rate",
                                   "entropy_production", "half_chain_entropy", "fidelity_z", "fidelity_x"});
            for (const auto& r : tr.rows) {
                w.cell(r.time).text(std::string(to_string(r.stroke))).cell(r.signature).cell(r.energy);
                w.cell(r.heat_rate).cell(r.entropy).cell(r.entropy_rate).cell(r.entropy_production);
                w.cell(r.half_chain_entropy).cell(r.fidelity_z).cell(r.fidelity_x).end_row();
            }
        }
        {
            detail::TableWriter w(base + ".work.tsv", {"time", "W"});
            for (const auto& e : tr.work_events) w.cell(e.time).cell(e.work).end_row();
        }
        const FirstLawBalance bal = first_law_balance(tr);
        double min_sigma = std::numeric_limits<double>::infinity();
        for (const auto& r : tr.rows) min_sigma = std::min(min_sigma, r.entropy_production);
        res.summary["delta_energy"] = bal.delta_energy;
        res.summary["total_work"] = bal.total_work;
        res.summary["total_heat"] = bal.total_heat;
        res.summary["first_law_relative_residual"] = bal.relative_residual();
        res.summary["min_entropy_production"] = min_sigma;
        res.summary["final_signature"] = tr.rows.empty() ? 0.0 : tr.rows.back().signature;
        break;
    }
    case Protocol::measured_average: {
        const SignatureSeries plain = run_plain_signature(rho0, chain, schedule);
        const SignatureSeries meas = run_measured_average(rho0, chain, schedule);
        {
            detail::TableWriter w(base + ".signature.tsv", {"time", "stroke_tag", "signature", "signature_measured"});
            for (std::size_t i = 0; i < plain.times.size(); ++i) {
                w.cell(plain.times[i]).text(std::string(to_string(plain.strokes[i])));
                w.cell(plain.values[i]).cell(meas.values[i]).end_row();
            }
        }
        const auto sp = plain.stroboscopic(schedule.period());
        const auto sm = meas.stroboscopic(schedule.period());
        const auto er = relative_difference(sp, sm);
        detail::TableWriter w(base + ".er.tsv", {"time", "signature", "signature_measured", "E_r"});
        double sum = 0.0;
        int count = 0;
        for (std::size_t k = 0; k < er.size(); ++k) {
            w.cell(sp.times[k]).cell(sp.values[k]).cell(sm.values[k]).cell(er[k]).end_row();
            if (!std::isnan(er[k])) {
                sum += er[k];
                ++count;
            }
        }
        res.summary["mean_E_r"] = count ? sum / count : std::numeric_limits<double>::quiet_NaN();
        res.summary["final_E_r"] = er.empty() ? std::numeric_limits<double>::quiet_NaN() : er.back();
        break;
    }
    case Protocol::trajectories: {
        const MagnetizationPOVM povm = build_povm(spec.N);
        detail::TableWriter stats(base + ".stats.tsv", {"trajectory", "seed", "M", "dw", "A"});
        detail::TableWriter outcomes(base + ".outcomes.tsv", {"trajectory", "period", "m"});
        double sM = 0.0, sdw = 0.0, sA = 0.0;
        for (std::size_t k = 0; k < spec.trajectory_seeds.size(); ++k) {
            MeasurementRecord rec = run_trajectory(rho0, chain, c.n_periods, spec.trajectory_seeds[k], povm);
            stats.cell(static_cast<int>(k)).cell(rec.seed).cell(rec.stats.M).cell(rec.stats.dw).cell(rec.stats.A).end_row();
            for (std::size_t i = 0; i < rec.m.size(); ++i) {
                outcomes.cell(static_cast<int>(k)).cell(static_cast<int>(i + 1)).cell(rec.m[i]).end_row();
            }
            sM += rec.stats.M;
            sdw += rec.stats.dw;
            sA += rec.stats.A;
            res.outcomes.push_back(std::move(rec.m));
        }
        const double n = static_cast<double>(spec.trajectory_seeds.size());
        res.summary["M"] = sM / n;
        res.summary["dw"] = sdw / n;
        res.summary["A"] = sA / n;
        break;
    }
    }
    return res;
}

// Runs fn(i) for i in [0, n) on `jobs` threads. Exceptions are rethrown after
// all workers finish, lowest index first.
template <typename Fn>
void parallel_for(std::size_t n, int jobs, Fn&& fn)
{
    std::vector<std::exception_ptr> errors(n);
    std::atomic<std::size_t> next{0};
    auto worker = [&] {
        for (std::size_t i = next++; i < n; i = next++) {
            try {
                fn(i);
            } catch (...) {
                errors[i] = std::current_exception();
            }
        }
    };
    const std::size_t workers = std::min<std::size_t>(n, static_cast<std::size_t>(std::max(jobs, 1)));
    if (workers <= 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        for (std::size_t t = 0; t < workers; ++t) pool.emplace_back(worker);
        for (auto& t : pool) t.join();
    }
    for (auto& e : errors) {
        if (e) std::rethrow_exception(e);
    }
}

inline nlohmann::ordered_json config_to_json(const ExperimentConfig& c)
{
    nlohmann::ordered_json j;
    j["model.N"] = c.Ns;
    j["model.h_bar"] = c.model.h_bar;
    j["model.delta_h"] = c.model.delta_h;
    j["model.J_bar"] = c.model.J_bar;
    j["model.delta_J"] = c.model.delta_J;
    j["model.T_z"] = c.model.T_z;
    j["model.T_x"] = c.model.T_x;
    j["bath.beta"] = c.betas;
    j["bath.Gamma"] = c.Gammas;
    j["bath.omega_c"] = c.omega_c;
    std::vector<std::string> axes;
    for (Axis a : c.axes) axes.emplace_back(to_string(a));
    j["run.axis"] = axes;
    j["run.protocol"] = to_string(c.protocol);
    j["run.disorder"] = to_string(c.disorder);
    j["run.replications"] = c.replications;
    j["run.trajectories"] = c.trajectories;
    j["run.n_periods"] = c.n_periods;
    j["run.sample_dt"] = c.sample_dt;
    j["run.seed"] = c.seed;
    j["run.output_dir"] = c.output_dir;
    return j;
}

// Per-point means over realizations of M, dw, A for every prefix length of the
// outcome strings.
inline void write_prefix_table(const std::filesystem::path& path, const std::vector<const RunResult*>& runs)
{
    std::vector<const std::vector<double>*> strings;
    for (const RunResult* r : runs) {
        for (const auto& m : r->outcomes) strings.push_back(&m);
    }
    if (strings.empty()) return;
    std::size_t len = strings.front()->size();
    for (const auto* m : strings) len = std::min(len, m->size());
    detail::TableWriter w(path, {"T", "M", "dw", "A"});
    for (std::size_t T = 1; T <= len; ++T) {
        double sM = 0.0, sdw = 0.0, sA = 0.0;
        for (const auto* m : strings) {
            const std::vector<double> prefix(m->begin(), m->begin() + static_cast<std::ptrdiff_t>(T));
            const OutcomeStats st = outcome_stats(prefix);
            sM += st.M;
            sdw += st.dw;
            sA += st.A;
        }
        const double n = static_cast<double>(strings.size());
        w.cell(static_cast<int>(T)).cell(sM / n).cell(sdw / n).cell(sA / n).end_row();
    }
}

struct ExperimentOutput {
    std::vector<RunSpec> runs;
    std::vector<RunResult> results;
};

inline std::string utc_timestamp()
{
    const std::time_t now = std::time(nullptr);
    std::tm tm{};
    gmtime_r(&now, &tm);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

#ifndef DTC_VERSION
#define DTC_VERSION "0.1.0"
#endif

inline ExperimentOutput run_experiment(const ExperimentConfig& c, int jobs)
{
    namespace fs = std::filesystem;
    c.validate();
    const fs::path out_dir(c.output_dir);
    fs::create_directories(out_dir);

    ExperimentOutput out;
    out.runs = plan_runs(c);
    out.results.resize(out.runs.size());
    parallel_for(out.runs.size(), jobs, [&](std::size_t i) {
        try {
            out.results[i] = run_single(c, out.runs[i], out_dir);
        } catch (const NumericalError& e) {
            throw NumericalError(out.runs[i].name() + ": " + e.what());
        }
    });

    using nlohmann::ordered_json;
    ordered_json agg;
    agg["protocol"] = to_string(c.protocol);
    agg["runs"] = ordered_json::array();
    std::map<std::string, std::vector<std::size_t>> by_point;
    std::vector<std::string> point_order;
    for (std::size_t i = 0; i < out.runs.size(); ++i) {
        const RunSpec& s = out.runs[i];
        ordered_json r;
        r["name"] = s.name();
        r["N"] = s.N;
        r["axis"] = std::string(to_string(s.axis));
        r["beta"] = s.beta;
        r["Gamma"] = s.Gamma;
        r["realization"] = s.realization;
        r["disorder_seed"] = s.disorder_seed;
        if (!s.trajectory_seeds.empty()) r["trajectory_seeds"] = s.trajectory_seeds;
        for (const auto& [k, v] : out.results[i].summary) r[k] = v;
        agg["runs"].push_back(std::move(r));
        if (!by_point.count(s.point_name())) point_order.push_back(s.point_name());
        by_point[s.point_name()].push_back(i);
    }
    agg["points"] = ordered_json::array();
    for (const auto& name : point_order) {
        const auto& idx = by_point[name];
        const RunSpec& s = out.runs[idx.front()];
        ordered_json p;
        p["name"] = name;
        p["N"] = s.N;
        p["axis"] = std::string(to_string(s.axis));
        p["beta"] = s.beta;
        p["Gamma"] = s.Gamma;
        p["realizations"] = idx.size();
        for (const auto& [key, v0] : out.results[idx.front()].summary) {
            (void)v0;
            double sum = 0.0, sq = 0.0;
            int n = 0;
            for (std::size_t i : idx) {
                const double v = out.results[i].summary.at(key);
                if (std::isnan(v)) continue;
                sum += v;
                sq += v * v;
                ++n;
            }
            const double mean = n ? sum / n : std::numeric_limits<double>::quiet_NaN();
            const double var = n > 1 ? std::max(0.0, (sq - n * mean * mean) / (n - 1)) : 0.0;
            p["mean_" + key] = mean;
            p["sem_" + key] = n > 1 ? std::sqrt(var / n) : 0.0;
        }
        agg["points"].push_back(std::move(p));
        if (c.protocol == Protocol::trajectories) {
            std::vector<const RunResult*> rs;
            for (std::size_t i : idx) rs.push_back(&out.results[i]);
            write_prefix_table(out_dir / (name + ".prefix.tsv"), rs);
        }
    }
    {
        std::ofstream f(out_dir / "aggregate.json");
        f << agg.dump(2) << '\n';
    }

    ordered_json meta;
    meta["version"] = DTC_VERSION;
    meta["timestamp"] = utc_timestamp();
    meta["config"] = config_to_json(c);
    meta["units"] = {{"entropy", "nats"}, {"hbar", 1}, {"k_B", 1}};
    meta["seed_scheme"] = "splitmix64 fold over (stream, N, [axis, beta bits, Gamma bits], realization, [trajectory])";
    meta["seeds"] = ordered_json::array();
    for (const auto& s : out.runs) {
        ordered_json e;
        e["name"] = s.name();
        e["disorder_seed"] = s.disorder_seed;
        if (!s.trajectory_seeds.empty()) e["trajectory_seeds"] = s.trajectory_seeds;
        meta["seeds"].push_back(std::move(e));
    }
    {
        std::ofstream f(out_dir / "metadata.json");
        f << meta.dump(2) << '\n';
    }
    return out;
}

struct SelftestCheck {
    std::string name;
    double value;
    double limit;
    bool pass;
};

// Small-N oracle checks: exact flip, Gibbs stationarity, trace preservation,
// Choi positivity, KMS and semigroup composition.
inline std::vector<SelftestCheck> run_selftest()
{
    std::vector<SelftestCheck> out;
    auto add = [&](std::string name, double value, double limit, bool lower_bound = false) {
        out.push_back({std::move(name), value, limit, lower_bound ? value >= limit : value < limit});
    };

    {
        ModelParams p;
        p.N = 2;
        p.delta_h = 0.0;
        p.delta_J = 0.0;
        const SpinModel m = build_model(p, sample_disorder(p, 1), Axis::z);
        const PeriodSchedule sched{1.0, 1.0, 0.01, 10};
        const DrivenChain chain = build_driven_chain(m, BathParams{1.0, 0.0, 1.0}, sched);
        double err = 0.0;
        evolve_stroboscopic(initial_state(2).rho, chain, 10, [&](int k, Matrix& rho) {
            err = std::max(err, std::abs(expectation(rho, m.S_x) - (k % 2 ? -1.0 : 1.0)));
        });
        add("exact flip N=2", err, 1e-8);
    }

    ModelParams p;
    for (int N : {1, 2}) {
        p.N = N;
        const DisorderRealization dis = sample_disorder(p, 11);
        for (Axis axis : {Axis::z, Axis::x}) {
            const SpinModel m = build_model(p, dis, axis);
            const BathParams bath{0.7, 0.3, 1.0};
            const PeriodSchedule sched{1.0, 1.0, 0.1, 1};
            const DrivenChain chain = build_driven_chain(m, bath, sched);
            const std::string tag = " N=" + std::to_string(N) + " axis=" + std::string(to_string(axis));
            for (Stroke s : {Stroke::z, Stroke::x}) {
                const auto& dyn = chain.stroke(s);
                const std::string st = tag + " stroke=" + std::string(to_string(s));
                const Matrix gibbs = thermal_state(m.hamiltonian(s), bath.beta).rho;
                add("Gibbs stationarity" + st, linalg::max_abs(dyn.generator.apply(gibbs)), 1e-8);
                const Matrix L = dyn.generator.matrix();
                const Vector one = linalg::vec(Matrix::Identity(m.dim(), m.dim()));
                add("trace preservation" + st, (one.adjoint() * L).cwiseAbs().maxCoeff(), 1e-10);
                const Matrix P = dyn.propagator.matrix();
                add("Choi min eigenvalue" + st, linalg::eigvalsh(linalg::symmetrize(choi_matrix(P, m.dim()))).minCoeff(),
                    -1e-8, true);
                Matrix comp = Matrix::Identity(P.rows(), P.cols());
                const Matrix S = dyn.propagator.substep_matrix();
                for (int i = 0; i < 10; ++i) comp = S * comp;
                add("semigroup" + st, linalg::max_abs(comp - P), 1e-9);
                double kms = 0.0;
                for (const auto& j : dyn.generator.jumps().jumps) {
                    if (j.omega <= 0) continue;
                    const double g = gamma_rate(j.omega, bath);
                    kms = std::max(kms, std::abs(gamma_rate(-j.omega, bath) - std::exp(-bath.beta * j.omega) * g) / g);
                }
                add("KMS" + st, kms, 1e-12);
            }
        }
    }
    return out;
}

} // namespace dtc
