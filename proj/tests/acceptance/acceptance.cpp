// Acceptance run: one PASS/FAIL line per criterion, nonzero exit on any failure.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <limits>
#include <map>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "dtc/experiment.hpp"

using namespace dtc;
namespace fs = std::filesystem;

namespace {

constexpr std::uint64_t master_seed = 20240601;

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

std::string fmt(const char* f, double v)
{
    char buf[64];
    std::snprintf(buf, sizeof buf, f, v);
    return buf;
}

int worker_count() { return static_cast<int>(std::max(1u, std::thread::hardware_concurrency())); }

// Worst-case state diagnostics over every sampled state of every run.
struct HealthLog {
    double trace_error = 0.0;
    double hermiticity_error = 0.0;
    double min_eigenvalue = std::numeric_limits<double>::infinity();
    long states = 0;

    void operator()(const Matrix& rho)
    {
        const StateHealth h = state_health(rho);
        trace_error = std::max(trace_error, h.trace_error);
        hermiticity_error = std::max(hermiticity_error, h.hermiticity_error);
        min_eigenvalue = std::min(min_eigenvalue, h.min_eigenvalue);
        ++states;
    }
};

HealthLog health;

SpinModel model_for(int n, Axis axis, std::uint64_t disorder, bool clean = false)
{
    ModelParams p;
    p.N = n;
    if (clean) {
        p.delta_h = 0.0;
        p.delta_J = 0.0;
    }
    return build_model(p, sample_disorder(p, disorder), axis);
}

// Whole-stroke sampling: only stroboscopic states are needed.
DrivenChain strobe_chain(const SpinModel& m, const BathParams& bath)
{
    return build_driven_chain(m, bath, PeriodSchedule{1.0, 1.0, 1.0, 1});
}

struct Line {
    int id;
    std::string title;
    bool pass;
    std::string detail;
};

std::vector<Line> lines;

void report(int id, const std::string& title, bool pass, const std::string& detail)
{
    lines.push_back({id, title, pass, detail});
    std::fprintf(stderr, "finished criterion %d\n", id);
}

// 1
void exact_flip()
{
    const auto t0 = Clock::now();
    const SpinModel m = model_for(5, Axis::z, 0, true);
    const DrivenChain chain = strobe_chain(m, BathParams{1.0, 0.0, 1.0});
    double err = 0.0;
    evolve_stroboscopic(initial_state(5).rho, chain, 50, [&](int k, Matrix& rho) {
        health(rho);
        err = std::max(err, std::abs(expectation(rho, m.S_x) - (k % 2 ? -1.0 : 1.0)));
    });
    const double secs = seconds_since(t0);
    report(1, "exact flip N=5, k<=50", err < 1e-8 && secs < 10.0,
           "max error " + fmt("%.3g", err) + ", runtime " + fmt("%.2f", secs) + " s");
}

// 3 and 4: Davies construction checks on the generators themselves.
void gibbs_stationarity_and_kms()
{
    double worst = 0.0;
    double kms = 0.0;
    int retained = 0;
    auto kms_scan = [&](const JumpOperatorSet& set, const BathParams& bath) {
        for (const auto& j : set.jumps) {
            if (j.omega <= 0.0) continue;
            ++retained;
            double reverse = gamma_rate(-j.omega, bath);
            for (const auto& k : set.jumps) {
                if (k.omega == -j.omega) reverse = k.rate;
            }
            kms = std::max(kms, std::abs(reverse - std::exp(-bath.beta * j.omega) * j.rate) / j.rate);
        }
    };
    for (Axis axis : {Axis::z, Axis::x}) {
        for (double beta : {0.5, 5.0}) {
            const BathParams bath{beta, 0.1, 1.0};
            const SpinModel m = model_for(3, axis, disorder_seed(master_seed, 3, 0));
            const StrokeBaths baths = build_stroke_baths(m, bath);
            for (Stroke st : {Stroke::z, Stroke::x}) {
                const JumpOperatorSet& set = st == Stroke::z ? baths.z : baths.x;
                const Liouvillian L = build_liouvillian(m.hamiltonian(st), set);
                worst = std::max(worst, L.apply(thermal_state(m.hamiltonian(st), beta).rho).norm());
                kms_scan(set, bath);
            }
        }
    }
    // KMS also over the N = 5 generators used below.
    for (Axis axis : {Axis::z, Axis::x}) {
        for (double beta : {0.1, 0.5, 1.0, 10.0}) {
            const BathParams bath{beta, 0.1, 1.0};
            const StrokeBaths baths = build_stroke_baths(model_for(5, axis, disorder_seed(master_seed, 5, 0)), bath);
            kms_scan(baths.z, bath);
            kms_scan(baths.x, bath);
        }
    }
    report(3, "Gibbs stationarity N=3, both axes, beta in {0.5, 5}", worst < 1e-8,
           "max ||L(rho_Gibbs)|| " + fmt("%.3g", worst));
    report(4, "KMS on retained Bohr frequencies", kms < 1e-12,
           "max relative deviation " + fmt("%.3g", kms) + " over " + std::to_string(retained) + " frequencies");
}

// 5, 6, 7
void thermodynamics()
{
    const BathParams bath{0.5, 0.1, 1.0};
    const PeriodSchedule sched{1.0, 1.0, 0.01, 20};
    double first_law = 0.0, dephasing_qdot = 0.0, min_sigma = std::numeric_limits<double>::infinity();
    std::string per_axis;
    for (Axis axis : {Axis::z, Axis::x}) {
        const SpinModel m = model_for(5, axis, disorder_seed(master_seed, 5, 0));
        const DrivenChain chain = build_driven_chain(m, bath, sched);
        ThermoRecorder rec(chain, bath.beta);
        evolve(initial_state(5).rho, chain, sched, [&](const SampleView& v) {
            health(v.rho);
            rec(v);
        });
        const ThermoTrace& t = rec.trace();
        const FirstLawBalance b = first_law_balance(t);
        first_law = std::max(first_law, b.relative_residual());
        per_axis += std::string(per_axis.empty() ? "" : ", ") + std::string(to_string(axis)) + ": " +
                    fmt("%.3g", b.relative_residual()) + " (dU " + fmt("%.4g", b.delta_energy) + ")";
        const Stroke pure = axis == Axis::z ? Stroke::z : Stroke::x;
        for (const auto& r : t.rows) {
            if (r.stroke == pure) dephasing_qdot = std::max(dephasing_qdot, std::abs(r.heat_rate));
            min_sigma = std::min(min_sigma, r.entropy_production);
        }
    }
    report(5, "first law N=5, beta=0.5, Gamma=0.1, 20 periods", first_law < 1e-5, "relative residual " + per_axis);
    report(6, "no heat flow while the coupling commutes with the stroke", dephasing_qdot < 1e-10,
           "max |Qdot| " + fmt("%.3g", dephasing_qdot));
    report(7, "Spohn inequality on the runs of criteria 5-6", min_sigma >= -1e-9,
           "min sigma " + fmt("%.3g", min_sigma));
}

// 8
void temperature_ordering()
{
    const std::vector<double> betas{10.0, 1.0, 0.1};
    const std::uint64_t disorder = disorder_seed(master_seed, 5, 0);
    std::map<Axis, std::vector<double>> amp;
    for (Axis axis : {Axis::z, Axis::x}) {
        const SpinModel m = model_for(5, axis, disorder);
        for (double beta : betas) {
            const DrivenChain chain = strobe_chain(m, BathParams{beta, 0.01, 1.0});
            const Matrix rho = evolve_stroboscopic(initial_state(5).rho, chain, 100, [&](int, Matrix& r) { health(r); });
            amp[axis].push_back(std::abs(expectation(rho, m.S_x)));
        }
    }
    bool ordered = true, x_faster = true;
    std::string detail;
    for (Axis axis : {Axis::z, Axis::x}) {
        const auto& a = amp[axis];
        ordered = ordered && a[0] > a[1] && a[1] > a[2];
        detail += std::string(to_string(axis)) + ": ";
        for (std::size_t i = 0; i < a.size(); ++i) detail += (i ? " > " : "") + fmt("%.4f", a[i]);
        detail += "; ";
    }
    for (std::size_t i = 0; i < betas.size(); ++i) x_faster = x_faster && amp[Axis::x][i] < amp[Axis::z][i];
    detail += std::string("beta ordering ") + (ordered ? "holds" : "violated") + ", x below z at every beta " +
              (x_faster ? "holds" : "violated");
    report(8, "|<S_x(100T)>| ordered in beta, x-decay faster than z", ordered && x_faster, detail);
}

// 9
void measurement_average_vs_trajectories()
{
    const auto t0 = Clock::now();
    const int n_periods = 50, n_traj = 2000;
    const double beta = 0.05, Gamma = 0.01;
    const SpinModel m = model_for(3, Axis::x, disorder_seed(master_seed, 3, 0));
    const DrivenChain chain = strobe_chain(m, BathParams{beta, Gamma, 1.0});
    const MagnetizationPOVM povm = build_povm(3);

    std::vector<double> averaged;
    evolve_stroboscopic(initial_state(3).rho, chain, n_periods, [&](int, Matrix& rho) {
        health(rho);
        averaged.push_back(expectation(rho, m.S_x));
        rho = dephase(rho, povm);
    });

    std::vector<std::vector<double>> sig(static_cast<std::size_t>(n_traj));
    parallel_for(sig.size(), worker_count(), [&](std::size_t k) {
        const auto seed = trajectory_seed(master_seed, 3, Axis::x, beta, Gamma, 0, static_cast<int>(k));
        sig[k] = run_trajectory(initial_state(3).rho, chain, n_periods, seed, povm).signature;
    });

    double worst_z = 0.0;
    bool ok = true;
    for (int k = 0; k < n_periods; ++k) {
        double s = 0.0, sq = 0.0;
        for (const auto& v : sig) {
            s += v[k];
            sq += v[k] * v[k];
        }
        const double mean = s / n_traj;
        const double se = std::sqrt(std::max(0.0, sq / n_traj - mean * mean) / (n_traj - 1));
        const double diff = std::abs(mean - averaged[k]);
        // All trajectories share the first period exactly, so se = 0 there: allow rounding.
        ok = ok && diff <= 3.0 * se + 1e-9;
        if (se > 0) worst_z = std::max(worst_z, diff / se);
    }
    const double secs = seconds_since(t0);
    report(9, "measurement average vs 2000 trajectories, N=3, beta=0.05", ok && secs < 600.0,
           "max |difference|/SE " + fmt("%.3g", worst_z) + ", runtime " + fmt("%.1f", secs) + " s");
}

// 10
void trajectory_regimes()
{
    const auto t0 = Clock::now();
    const int realizations = 100, n_periods = 500;
    const double Gamma = 0.01;
    std::map<std::pair<double, int>, OutcomeStats> mean;
    for (double beta : {10.0, 0.1}) {
        for (int n : {2, 3, 4}) {
            std::vector<OutcomeStats> per(static_cast<std::size_t>(realizations));
            const MagnetizationPOVM povm = build_povm(n);
            parallel_for(per.size(), worker_count(), [&](std::size_t r) {
                const int ri = static_cast<int>(r);
                const SpinModel m = model_for(n, Axis::x, disorder_seed(master_seed, n, ri));
                const DrivenChain chain = strobe_chain(m, BathParams{beta, Gamma, 1.0});
                const auto seed = trajectory_seed(master_seed, n, Axis::x, beta, Gamma, ri, 0);
                per[r] = run_trajectory(initial_state(n).rho, chain, n_periods, seed, povm).stats;
            });
            OutcomeStats avg;
            for (const auto& s : per) {
                avg.M += s.M / realizations;
                avg.dw += s.dw / realizations;
                avg.A += s.A / realizations;
            }
            mean[{beta, n}] = avg;
        }
    }
    const auto& cold = mean[{10.0, 4}];
    const auto& hot = mean[{0.1, 4}];
    const bool cold_ok = cold.dw < 0.05 && cold.A > 50;
    const bool hot_ok = hot.dw > 0.2 && hot.A < 5;
    const bool trend = mean[{10.0, 2}].dw > mean[{10.0, 3}].dw && mean[{10.0, 3}].dw > mean[{10.0, 4}].dw &&
                       mean[{10.0, 2}].A < mean[{10.0, 3}].A && mean[{10.0, 3}].A < mean[{10.0, 4}].A;
    std::string detail;
    for (double beta : {10.0, 0.1}) {
        detail += "beta=" + fmt("%g", beta) + ":";
        for (int n : {2, 3, 4}) {
            const auto& s = mean[{beta, n}];
            detail += " N" + std::to_string(n) + " dw " + fmt("%.3f", s.dw) + " A " + fmt("%.1f", s.A);
        }
        detail += "; ";
    }
    detail += std::string("cold ") + (cold_ok ? "ok" : "no") + ", hot " + (hot_ok ? "ok" : "no") + ", trend in N " +
              (trend ? "ok" : "no") + ", runtime " + fmt("%.1f", seconds_since(t0)) + " s";
    report(10, "trajectory statistics regimes, Gamma=0.01, 500 periods, 100 realizations", cold_ok && hot_ok && trend,
           detail);
}

// 11
void statistics_identities()
{
    Rng rng(master_seed);
    double worst = 0.0;
    for (int trial = 0; trial < 1000; ++trial) {
        const std::size_t len = 2 + static_cast<std::size_t>(rng.uniform() * 499);
        std::vector<double> m(len);
        for (auto& v : m) v = (rng.uniform() < 0.5 ? -1.0 : 1.0) * (rng.uniform() < 0.3 ? 0.5 : 1.0);
        const OutcomeStats s = outcome_stats(m);
        const double T = static_cast<double>(len);
        worst = std::max(worst, std::abs(s.A - T / (1 + (T - 1) * s.dw)) / s.A);
    }
    struct Example {
        std::vector<double> m;
        double M, dw, A;
    };
    const std::vector<Example> examples{
        {{-1, 1, -1, 1}, 1.0, 0.0, 4.0},
        {{1, 1, 1, 1}, 0.0, 1.0, 1.0},
        {{1, -0.5, 1, -1}, -0.875, 0.0, 4.0},
        {{1, 1, 1}, -1.0 / 3, 1.0, 1.0},
        {{-1, 0.5}, 0.75, 0.0, 2.0},
        {{1, 1, -1, 1}, 0.5, 1.0 / 3, 2.0},
        {{1, -1, 1, 1, -1}, -0.2, 0.25, 2.5},
    };
    int failed = 0;
    for (const auto& e : examples) {
        const OutcomeStats s = outcome_stats(e.m);
        if (std::abs(s.M - e.M) > 1e-15 || std::abs(s.dw - e.dw) > 1e-15 || std::abs(s.A - e.A) > 1e-15) ++failed;
    }
    report(11, "statistics identities and hand examples", worst < 1e-14 && failed == 0,
           "max relative deviation of A " + fmt("%.3g", worst) + " over 1000 strings, " +
               std::to_string(examples.size() - failed) + "/" + std::to_string(examples.size()) + " examples");
}

// 12
std::map<std::string, std::string> data_files(const fs::path& dir)
{
    std::map<std::string, std::string> out;
    for (const auto& e : fs::directory_iterator(dir)) {
        if (e.path().filename() == "metadata.json") continue;
        std::ifstream in(e.path(), std::ios::binary);
        std::ostringstream ss;
        ss << in.rdbuf();
        out[e.path().filename().string()] = ss.str();
    }
    return out;
}

void determinism()
{
    const auto t0 = Clock::now();
    const std::vector<std::string> presets{"fig2_thermo.conf", "fig5_measurement_string.conf"};
    bool ok = true;
    std::size_t files = 0;
    for (const auto& preset : presets) {
        ConfigMap map;
        map.load(std::string(DTC_SOURCE_DIR) + "/configs/" + preset);
        ExperimentConfig c = resolve_config(map);
        const fs::path base = fs::temp_directory_path() / "dtc_acceptance_determinism";
        std::vector<std::map<std::string, std::string>> outputs;
        for (int jobs : {1, 4, 1}) {
            const fs::path dir = base / (preset + "_" + std::to_string(outputs.size()));
            fs::remove_all(dir);
            c.output_dir = dir.string();
            run_experiment(c, jobs);
            outputs.push_back(data_files(dir));
        }
        ok = ok && !outputs[0].empty() && outputs[0] == outputs[1] && outputs[0] == outputs[2];
        files += outputs[0].size();
        fs::remove_all(base);
    }
    report(12, "byte-identical preset reruns, serial and parallel", ok,
           std::to_string(files) + " data files compared over 3 runs each, runtime " +
               fmt("%.1f", seconds_since(t0)) + " s");
}

// 2: evaluated last so it covers every state sampled above.
void cptp_suite()
{
    double choi = std::numeric_limits<double>::infinity();
    for (int n : {1, 2}) {
        for (Axis axis : {Axis::z, Axis::x}) {
            for (double beta : {0.05, 0.5, 10.0}) {
                for (double Gamma : {0.01, 0.1, 1.0}) {
                    const SpinModel m = model_for(n, axis, disorder_seed(master_seed, n, 0));
                    const DrivenChain chain = build_driven_chain(m, BathParams{beta, Gamma, 1.0},
                                                                 PeriodSchedule{1.0, 1.0, 0.01, 1});
                    for (Stroke st : {Stroke::z, Stroke::x}) {
                        const Matrix c = choi_matrix(chain.stroke(st).propagator.matrix(), m.dim());
                        choi = std::min(choi, linalg::eigvalsh(linalg::symmetrize(c)).minCoeff());
                    }
                }
            }
        }
    }
    const bool ok = health.trace_error < 1e-9 && health.hermiticity_error < 1e-10 && health.min_eigenvalue >= -1e-6 &&
                    choi >= -1e-8;
    report(2, "CPTP suite over all sampled states, Choi positivity N<=2", ok,
           std::to_string(health.states) + " states: trace error " + fmt("%.3g", health.trace_error) +
               ", hermiticity error " + fmt("%.3g", health.hermiticity_error) + ", min eigenvalue " +
               fmt("%.3g", health.min_eigenvalue) + "; min Choi eigenvalue " + fmt("%.3g", choi));
}

} // namespace

int main()
{
    const std::vector<std::pair<const char*, std::function<void()>>> steps{
        {"1", exact_flip},
        {"3-4", gibbs_stationarity_and_kms},
        {"5-7", thermodynamics},
        {"8", temperature_ordering},
        {"9", measurement_average_vs_trajectories},
        {"10", trajectory_regimes},
        {"11", statistics_identities},
        {"12", determinism},
        {"2", cptp_suite},
    };
    for (const auto& [tag, fn] : steps) {
        try {
            fn();
        } catch (const std::exception& e) {
            report(std::atoi(tag), std::string("criteria ") + tag + " raised an error", false, e.what());
        }
    }
    std::stable_sort(lines.begin(), lines.end(), [](const Line& a, const Line& b) { return a.id < b.id; });
    int failed = 0;
    for (const auto& l : lines) {
        std::printf("%s criterion %d: %s | %s\n", l.pass ? "PASS" : "FAIL", l.id, l.title.c_str(), l.detail.c_str());
        failed += l.pass ? 0 : 1;
    }
    std::printf("%d of %zu criteria passed\n", static_cast<int>(lines.size()) - failed, lines.size());
    return failed == 0 ? 0 : 1;
}
