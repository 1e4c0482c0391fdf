// thermo.hpp - observables and weak-coupling thermodynamic bookkeeping
//
//   U = Tr(H rho)          Qdot = Tr(H L(rho))          W = Tr[(H_to - H_from) rho] at a switch
//   S = -Tr(rho ln rho)    Sdot = -Tr(L(rho) ln rho)    sigma = Sdot - beta Qdot
//
// Entropies are in nats. Eigenvalues of rho below 1e-14 are clipped and
// contribute nothing to S or Sdot.

#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

#include "dtc/evolution.hpp"
#include "dtc/linalg.hpp"
#include "dtc/types.hpp"

namespace dtc {

inline constexpr double entropy_clip = 1e-14;

inline double expectation(const Matrix& rho, const Matrix& op) { return linalg::real_trace_product(op, rho); }

inline double heat_rate(const Matrix& rho, const Matrix& H, const Liouvillian& L)
{
    return linalg::real_trace_product(H, L.apply(rho));
}

inline double work_at_switch(const Matrix& rho, const Matrix& H_from, const Matrix& H_to)
{
    return linalg::real_trace_product(H_to - H_from, rho);
}

// Eigendecomposition of a state, shared by the entropy, ln rho and sqrt(rho).
class StateSpectrum {
public:
    explicit StateSpectrum(const Matrix& rho) : eig_(linalg::eigh(linalg::symmetrize(rho))) {}

    const RealVector& eigenvalues() const { return eig_.values; }
    double min_eigenvalue() const { return eig_.values.minCoeff(); }

    double entropy() const
    {
        double s = 0.0;
        for (Eigen::Index i = 0; i < eig_.values.size(); ++i) {
            const double p = eig_.values(i);
            if (p > entropy_clip) s -= p * std::log(p);
        }
        return s;
    }

    // ln rho with clipped eigenvalues mapped to 0.
    Matrix log() const
    {
        return linalg::hermitian_function(eig_, [](double p) { return p > entropy_clip ? std::log(p) : 0.0; });
    }

    Matrix sqrt() const
    {
        return linalg::hermitian_function(eig_, [](double p) { return p > 0 ? std::sqrt(p) : 0.0; });
    }

private:
    linalg::Eigh eig_;
};

inline double vn_entropy(const Matrix& rho) { return StateSpectrum(rho).entropy(); }

inline Matrix clipped_log(const Matrix& rho) { return StateSpectrum(rho).log(); }

inline double entropy_rate(const Matrix& rho, const Liouvillian& L)
{
    return -linalg::real_trace_product(L.apply(rho), clipped_log(rho));
}

inline double entropy_production_rate(const Matrix& rho, const Matrix& H, const Liouvillian& L, double beta)
{
    // Both terms share one application of L.
    const Matrix drho = L.apply(rho);
    const double sdot = -linalg::real_trace_product(drho, clipped_log(rho));
    const double qdot = linalg::real_trace_product(H, drho);
    return sdot - beta * qdot;
}

inline int default_half_chain_cut(int n_sites) { return (n_sites + 1) / 2; }

// Entropy of the first `cut` sites.
inline double half_chain_entropy(const Matrix& rho, int n_sites, int cut)
{
    if (cut < 1 || cut >= n_sites) {
        throw ConfigError("half-chain cut must satisfy 1 <= cut < N (cut = " + std::to_string(cut) +
                          ", N = " + std::to_string(n_sites) + ")", "half_chain_cut");
    }
    return vn_entropy(linalg::partial_trace_tail(rho, n_sites, cut));
}

inline double half_chain_entropy(const Matrix& rho, int n_sites)
{
    return half_chain_entropy(rho, n_sites, default_half_chain_cut(n_sites));
}

inline DensityState thermal_state(const Matrix& H, double beta)
{
    if (!(beta >= 0)) throw ConfigError("must be >= 0", "beta");
    const linalg::Eigh e = linalg::eigh(H);
    const double e0 = e.values.minCoeff();
    RealVector w = (-beta * (e.values.array() - e0)).exp();
    w /= w.sum();
    return {e.vectors * w.cast<cplx>().asDiagonal() * e.vectors.adjoint()};
}

// ||sqrt(rho) sqrt(sigma)||_1^2 from precomputed square roots. The singular
// values keep full precision near rank deficiency, unlike square roots of the
// eigenvalues of sqrt(rho) sigma sqrt(rho).
inline double fidelity_from_sqrt(const Matrix& sqrt_rho, const Matrix& sqrt_sigma)
{
    const Eigen::JacobiSVD<Matrix> svd(sqrt_rho * sqrt_sigma);
    const double tr = svd.singularValues().sum();
    return std::clamp(tr * tr, 0.0, 1.0);
}

// Uhlmann fidelity (Tr sqrt(sqrt(rho) sigma sqrt(rho)))^2.
inline double fidelity(const Matrix& rho, const Matrix& sigma)
{
    if (rho.rows() != sigma.rows() || rho.cols() != sigma.cols()) throw DimensionError("fidelity: dimension mismatch");
    return fidelity_from_sqrt(StateSpectrum(rho).sqrt(), StateSpectrum(sigma).sqrt());
}

// Values of an observable at the stroboscopic times t = kT.
struct StroboscopicSeries {
    std::vector<double> times;
    std::vector<double> values;
};

inline constexpr double relative_difference_floor = 1e-12;

// E_r(t) = (|plain| - |measured|) / |plain|; NaN where |plain| < 1e-12.
inline std::vector<double> relative_difference(const StroboscopicSeries& plain, const StroboscopicSeries& measured)
{
    if (plain.values.size() != measured.values.size() || plain.times.size() != plain.values.size() ||
        measured.times.size() != measured.values.size()) {
        throw DimensionError("relative_difference: series lengths differ");
    }
    std::vector<double> out(plain.values.size());
    for (std::size_t k = 0; k < out.size(); ++k) {
        if (std::abs(plain.times[k] - measured.times[k]) > 1e-12) {
            throw DimensionError("relative_difference: sampling grids differ");
        }
        const double a = std::abs(plain.values[k]);
        out[k] = a < relative_difference_floor ? std::numeric_limits<double>::quiet_NaN()
                                                : (a - std::abs(measured.values[k])) / a;
    }
    return out;
}

struct WorkEvent {
    double time;
    double work;
};

struct ThermoRow {
    double time;
    Stroke stroke;
    double signature;
    double energy;
    double heat_rate;
    double entropy;
    double entropy_rate;
    double entropy_production;
    double half_chain_entropy;
    double fidelity_z;
    double fidelity_x;
};

struct ThermoTrace {
    std::vector<ThermoRow> rows;
    std::vector<WorkEvent> work_events;
};

// Observer for evolve() that assembles a ThermoTrace.
class ThermoRecorder {
public:
    ThermoRecorder(const DrivenChain& chain, double beta)
        : chain_(chain), beta_(beta), sqrt_gibbs_z_(StateSpectrum(thermal_state(chain.model.H_z, beta).rho).sqrt()),
          sqrt_gibbs_x_(StateSpectrum(thermal_state(chain.model.H_x, beta).rho).sqrt())
    {
    }

    void operator()(const SampleView& v)
    {
        const auto& dyn = chain_.stroke(v.stroke);
        const Matrix& H = dyn.generator.hamiltonian();
        const Matrix drho = dyn.generator.apply(v.rho);
        const StateSpectrum spec(v.rho);
        const double sdot = -linalg::real_trace_product(drho, spec.log());
        const Matrix root = spec.sqrt();
        const double qdot = linalg::real_trace_product(H, drho);
        const int n = chain_.model.N;

        if (!trace_.rows.empty() && trace_.rows.back().time == v.time && trace_.rows.back().stroke != v.stroke) {
            trace_.work_events.push_back({v.time, work_at_switch(v.rho, chain_.model.hamiltonian(trace_.rows.back().stroke), H)});
        }
        trace_.rows.push_back({v.time, v.stroke, expectation(v.rho, chain_.model.S_x), expectation(v.rho, H), qdot,
                               spec.entropy(), sdot, sdot - beta_ * qdot,
                               n > 1 ? half_chain_entropy(v.rho, n) : 0.0, fidelity_from_sqrt(root, sqrt_gibbs_z_),
                               fidelity_from_sqrt(root, sqrt_gibbs_x_)});
    }

    const ThermoTrace& trace() const { return trace_; }
    ThermoTrace take() { return std::move(trace_); }

private:
    const DrivenChain& chain_;
    double beta_;
    Matrix sqrt_gibbs_z_;
    Matrix sqrt_gibbs_x_;
    ThermoTrace trace_;
};

struct FirstLawBalance {
    double delta_energy = 0.0;  // U(end) - U(start)
    double total_work = 0.0;    // sum of switch events
    double total_heat = 0.0;    // trapezoid integral of Qdot inside strokes

    double residual() const { return delta_energy - (total_work + total_heat); }
    double relative_residual() const { return std::abs(residual()) / std::max(std::abs(delta_energy), 1e-12); }
};

inline FirstLawBalance first_law_balance(const ThermoTrace& trace)
{
    FirstLawBalance b;
    if (trace.rows.empty()) return b;
    b.delta_energy = trace.rows.back().energy - trace.rows.front().energy;
    for (const auto& w : trace.work_events) b.total_work += w.work;
    for (std::size_t i = 1; i < trace.rows.size(); ++i) {
        const auto& p = trace.rows[i - 1];
        const auto& q = trace.rows[i];
        if (p.stroke != q.stroke) continue;  // switch: zero-length, accounted as work
        b.total_heat += 0.5 * (q.time - p.time) * (p.heat_rate + q.heat_rate);
    }
    return b;
}

} // namespace dtc
