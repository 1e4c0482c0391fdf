// measure.hpp - stroboscopic S_x measurements
//
// Two modes: the measurement-averaged evolution, where the state is dephased
// onto the S_x eigenspaces once per period, and single Monte-Carlo
// trajectories with projective collapse. Outcome strings are summarized by
// the staggered magnetization M, the defect density dw and the mean domain
// size A. dw and A look only at signs; sign(0) = 0.

#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <vector>

#include "dtc/evolution.hpp"
#include "dtc/rng.hpp"
#include "dtc/thermo.hpp"
#include "dtc/types.hpp"

namespace dtc {

struct MagnetizationPOVM {
    std::vector<double> outcomes;    // descending
    std::vector<Matrix> projectors;  // aligned with outcomes
    std::vector<int> ranks;

    std::size_t size() const { return outcomes.size(); }
};

inline MagnetizationPOVM build_povm(int n_sites, double tol = 1e-9)
{
    if (n_sites < 1) throw ConfigError("must be >= 1", "model.N");
    const Eigen::Index d = linalg::register_dim(n_sites);
    Matrix sx = Matrix::Zero(d, d);
    for (int i = 0; i < n_sites; ++i) sx += linalg::site_operator(n_sites, i, linalg::pauli_x());
    sx /= static_cast<double>(n_sites);
    const linalg::Eigh e = linalg::eigh(sx);

    MagnetizationPOVM povm;
    // Eigenvalues ascend; walk from the top to get descending outcomes.
    Eigen::Index hi = d - 1;
    while (hi >= 0) {
        Eigen::Index lo = hi;
        while (lo > 0 && e.values(hi) - e.values(lo - 1) <= tol) --lo;
        const Eigen::Index count = hi - lo + 1;
        const Matrix vs = e.vectors.middleCols(lo, count);
        // Eigenvalues are (N - 2k)/N; snap to the exact rational.
        const double mean = e.values.segment(lo, count).mean();
        povm.outcomes.push_back(std::round(mean * n_sites) / n_sites);
        povm.projectors.push_back(vs * vs.adjoint());
        povm.ranks.push_back(static_cast<int>(count));
        hi = lo - 1;
    }
    return povm;
}

inline std::vector<double> outcome_probabilities(const Matrix& rho, const MagnetizationPOVM& povm)
{
    std::vector<double> p(povm.size());
    for (std::size_t i = 0; i < povm.size(); ++i) p[i] = std::max(0.0, expectation(rho, povm.projectors[i]));
    return p;
}

// sum_i Pi_i rho Pi_i
inline Matrix dephase(const Matrix& rho, const MagnetizationPOVM& povm)
{
    Matrix out = Matrix::Zero(rho.rows(), rho.cols());
    for (const auto& proj : povm.projectors) out.noalias() += proj * rho * proj;
    return out;
}

struct MeasurementDraw {
    std::size_t index;
    double outcome;
    Matrix post_state;
};

inline constexpr double min_outcome_probability = 1e-12;

inline MeasurementDraw sample_measurement(const Matrix& rho, const MagnetizationPOVM& povm, Rng& rng)
{
    const auto p = outcome_probabilities(rho, povm);
    const double total = std::accumulate(p.begin(), p.end(), 0.0);
    if (*std::max_element(p.begin(), p.end()) < min_outcome_probability) {
        throw NumericalError("sample_measurement: every outcome probability is below 1e-12");
    }
    const double u = rng.uniform() * total;
    std::size_t pick = p.size();
    double acc = 0.0;
    for (std::size_t i = 0; i < p.size() && pick == p.size(); ++i) {
        acc += p[i];
        if (u < acc) pick = i;
    }
    if (pick == p.size()) {
        // Only reachable through rounding in the cumulative sum.
        pick = p.size() - 1;
        while (p[pick] <= 0.0) --pick;
    }
    const Matrix& proj = povm.projectors[pick];
    Matrix post = proj * rho * proj;
    post /= post.trace().real();
    return {pick, povm.outcomes[pick], std::move(post)};
}

// <S_x(t)> on the full sampling grid (switch times appear twice).
struct SignatureSeries {
    std::vector<double> times;
    std::vector<Stroke> strokes;
    std::vector<double> values;

    // Values at t = kT, k = 0..n_periods (end of each x-stroke, plus t = 0).
    StroboscopicSeries stroboscopic(double period) const
    {
        StroboscopicSeries s;
        for (std::size_t i = 0; i < times.size(); ++i) {
            const double k = std::round(times[i] / period);
            const bool on_period = std::abs(times[i] - k * period) < 1e-9;
            const bool first = (k == 0 && strokes[i] == Stroke::z);
            const bool end_of_x = (k > 0 && strokes[i] == Stroke::x);
            if (on_period && (first || end_of_x)) {
                s.times.push_back(times[i]);
                s.values.push_back(values[i]);
            }
        }
        return s;
    }
};

namespace detail {

struct SignatureCollector {
    const Matrix& S_x;
    SignatureSeries& out;

    void operator()(const SampleView& v)
    {
        out.times.push_back(v.time);
        out.strokes.push_back(v.stroke);
        out.values.push_back(expectation(v.rho, S_x));
    }
};

} // namespace detail

inline SignatureSeries run_plain_signature(const Matrix& rho0, const DrivenChain& chain, const PeriodSchedule& schedule)
{
    SignatureSeries s;
    evolve(rho0, chain, schedule, detail::SignatureCollector{chain.model.S_x, s});
    return s;
}

// Measurement-averaged signature: one period of evolution, then dephasing onto
// the S_x eigenspaces, repeated. The value recorded at t = kT is the
// pre-measurement one, which the dephasing map leaves unchanged.
inline SignatureSeries run_measured_average(const Matrix& rho0, const DrivenChain& chain,
                                            const PeriodSchedule& schedule)
{
    const MagnetizationPOVM povm = build_povm(chain.model.N);
    SignatureSeries s;
    evolve(rho0, chain, schedule, detail::SignatureCollector{chain.model.S_x, s},
           [&povm](int, Matrix& rho) { rho = dephase(rho, povm); });
    return s;
}

inline constexpr int sign_of(double m, double tol = 1e-12) { return m > tol ? 1 : (m < -tol ? -1 : 0); }

// M = (1/T) sum_{i=1}^{T} m_i (-1)^i
inline double staggered_magnetization(const std::vector<double>& m)
{
    if (m.empty()) throw ConfigError("outcome string is empty", "m");
    double s = 0.0;
    for (std::size_t i = 0; i < m.size(); ++i) s += (i % 2 == 0 ? -m[i] : m[i]);
    return s / static_cast<double>(m.size());
}

// Mean of (1 + sign(m_i) sign(m_{i+1})) / 2 over the T-1 consecutive pairs.
inline double defect_density(const std::vector<double>& m)
{
    if (m.size() < 2) throw ConfigError("defect density needs at least 2 outcomes", "m");
    double s = 0.0;
    for (std::size_t i = 0; i + 1 < m.size(); ++i) s += 0.5 * (1.0 + sign_of(m[i]) * sign_of(m[i + 1]));
    return s / static_cast<double>(m.size() - 1);
}

// Mean length of maximal runs with strictly alternating signs.
inline double mean_domain_size(const std::vector<double>& m)
{
    if (m.empty()) throw ConfigError("outcome string is empty", "m");
    std::size_t domains = 1;
    for (std::size_t i = 0; i + 1 < m.size(); ++i) {
        if (sign_of(m[i]) * sign_of(m[i + 1]) != -1) ++domains;
    }
    return static_cast<double>(m.size()) / static_cast<double>(domains);
}

struct OutcomeStats {
    double M = 0.0;
    double dw = 0.0;
    double A = 0.0;
};

inline OutcomeStats outcome_stats(const std::vector<double>& m)
{
    return {staggered_magnetization(m), m.size() >= 2 ? defect_density(m) : 0.0, mean_domain_size(m)};
}

struct MeasurementRecord {
    std::vector<double> m;          // outcome after each period, length n_periods
    std::vector<double> signature;  // pre-measurement <S_x(kT)> of this trajectory
    std::uint64_t seed = 0;
    OutcomeStats stats;
};

// One trajectory: evolve a period with the whole-stroke propagators, measure
// S_x, collapse, repeat.
inline MeasurementRecord run_trajectory(const Matrix& rho0, const DrivenChain& chain, int n_periods,
                                        std::uint64_t seed, const MagnetizationPOVM& povm)
{
    if (n_periods < 1) throw ConfigError("must be >= 1", "n_periods");
    MeasurementRecord rec;
    rec.seed = seed;
    rec.m.reserve(static_cast<std::size_t>(n_periods));
    rec.signature.reserve(static_cast<std::size_t>(n_periods));
    Rng rng(seed);
    evolve_stroboscopic(rho0, chain, n_periods, [&](int, Matrix& rho) {
        rec.signature.push_back(expectation(rho, chain.model.S_x));
        MeasurementDraw draw = sample_measurement(rho, povm, rng);
        rec.m.push_back(draw.outcome);
        rho = std::move(draw.post_state);
    });
    rec.stats = outcome_stats(rec.m);
    return rec;
}

inline MeasurementRecord run_trajectory(const Matrix& rho0, const DrivenChain& chain, int n_periods,
                                        std::uint64_t seed)
{
    return run_trajectory(rho0, chain, n_periods, seed, build_povm(chain.model.N));
}

} // namespace dtc
