// bath.hpp - Ohmic bosonic bath: KMS rates and Davies jump operators
//
// The coupling V is resolved into Bohr-frequency components of a stroke
// Hamiltonian H = sum_e e |e><e|,
//
//   A(w) = sum_{e' - e = w} |e><e| V |e'><e'|,        sum_w A(w) = V,
//
// and each component becomes a jump operator L_w = sqrt(gamma(w)) A(w).

#pragma once

#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

#include "dtc/linalg.hpp"
#include "dtc/types.hpp"

namespace dtc {

struct BathParams {
    double beta = 1.0;
    double Gamma = 0.01;  // Gamma^2 = 2 pi eta
    double omega_c = 1.0;

    void validate() const
    {
        if (!(beta > 0)) throw ConfigError("must be > 0", "bath.beta");
        if (!(Gamma >= 0)) throw ConfigError("must be >= 0", "bath.Gamma");
        if (!(omega_c > 0)) throw ConfigError("must be > 0", "bath.omega_c");
    }
};

// gamma(w) = Gamma^2 |w| e^{-|w|/w_c} / (1 - e^{-beta|w|}) * [Theta(w) + e^{-beta|w|} Theta(-w)]
// with gamma(0) = Gamma^2 / beta.
inline double gamma_rate(double omega, const BathParams& bath)
{
    const double g2 = bath.Gamma * bath.Gamma;
    if (omega == 0.0) return g2 / bath.beta;
    const double x = std::abs(omega);
    const double emission = g2 * x * std::exp(-x / bath.omega_c) / -std::expm1(-bath.beta * x);
    return omega > 0 ? emission : emission * std::exp(-bath.beta * x);
}

struct BohrComponent {
    double omega = 0.0;
    Matrix op;        // A(w) in the computational basis
    Matrix op_eigen;  // A(w) in the eigenbasis of H; entries outside the frequency group are exactly 0
};

struct BohrDecomposition {
    RealVector energies;  // ascending
    Matrix basis;         // eigenvectors of H as columns
    std::vector<BohrComponent> components;  // ascending in omega
};

inline constexpr double default_bohr_tolerance = 1e-9;
inline constexpr double dropped_component_norm = 1e-12;

inline BohrDecomposition bohr_decompose(const Matrix& H, const Matrix& V, double tol = default_bohr_tolerance)
{
    if (H.rows() != H.cols() || V.rows() != V.cols() || H.rows() != V.rows()) {
        throw DimensionError("bohr_decompose: H and V must be square with equal dimension");
    }
    if (!(tol > 0)) throw ConfigError("frequency tolerance must be > 0", "bohr_tol");

    const linalg::Eigh eig = linalg::eigh(H);
    const Eigen::Index d = H.rows();
    const Matrix v_eig = eig.vectors.adjoint() * V * eig.vectors;

    // Gap of pair (a, b) is w = e_b - e_a; it feeds entry (a, b) of A(w).
    struct Gap {
        double value;
        Eigen::Index a, b;
    };
    std::vector<Gap> gaps;
    gaps.reserve(static_cast<std::size_t>(d * d));
    for (Eigen::Index b = 0; b < d; ++b) {
        for (Eigen::Index a = 0; a < d; ++a) gaps.push_back({eig.values(b) - eig.values(a), a, b});
    }
    std::sort(gaps.begin(), gaps.end(), [](const Gap& l, const Gap& r) { return l.value < r.value; });

    // Chain-cluster sorted gaps. The gap multiset is symmetric under negation, and
    // so are the cluster boundaries, so the groups come in +/- pairs.
    std::vector<std::size_t> starts{0};
    for (std::size_t k = 1; k < gaps.size(); ++k) {
        if (gaps[k].value - gaps[k - 1].value > tol) starts.push_back(k);
    }
    starts.push_back(gaps.size());
    const std::size_t n_groups = starts.size() - 1;

    std::vector<double> means(n_groups);
    for (std::size_t g = 0; g < n_groups; ++g) {
        double sum = 0.0;
        for (std::size_t k = starts[g]; k < starts[g + 1]; ++k) sum += gaps[k].value;
        means[g] = sum / static_cast<double>(starts[g + 1] - starts[g]);
    }
    // Make the representatives exactly antisymmetric; the middle group is w = 0.
    for (std::size_t g = 0; g < n_groups / 2; ++g) {
        const double w = 0.5 * (means[n_groups - 1 - g] - means[g]);
        means[g] = -w;
        means[n_groups - 1 - g] = w;
    }
    if (n_groups % 2 == 1) means[n_groups / 2] = 0.0;

    BohrDecomposition out;
    out.energies = eig.values;
    out.basis = eig.vectors;
    for (std::size_t g = 0; g < n_groups; ++g) {
        Matrix a_eig = Matrix::Zero(d, d);
        for (std::size_t k = starts[g]; k < starts[g + 1]; ++k) {
            a_eig(gaps[k].a, gaps[k].b) = v_eig(gaps[k].a, gaps[k].b);
        }
        if (a_eig.norm() < dropped_component_norm) continue;
        Matrix a_comp = eig.vectors * a_eig * eig.vectors.adjoint();
        out.components.push_back({means[g], std::move(a_comp), std::move(a_eig)});
    }
    return out;
}

struct JumpOperator {
    double omega = 0.0;
    double rate = 0.0;  // gamma(omega)
    Matrix op;          // L_w, computational basis
    Matrix op_eigen;    // L_w in the eigenbasis of the stroke Hamiltonian
};

struct JumpOperatorSet {
    Stroke stroke = Stroke::z;
    RealVector energies;  // spectrum of the stroke Hamiltonian
    Matrix basis;         // its eigenvectors
    std::vector<JumpOperator> jumps;

    Eigen::Index dim() const { return basis.rows(); }
};

// Uses the complex matrix elements V_{ee'} of the projector sandwich.
inline JumpOperatorSet build_jump_operators(const BohrDecomposition& decomp, const BathParams& bath,
                                            Stroke stroke = Stroke::z)
{
    bath.validate();
    JumpOperatorSet set;
    set.stroke = stroke;
    set.energies = decomp.energies;
    set.basis = decomp.basis;
    set.jumps.reserve(decomp.components.size());
    for (const auto& c : decomp.components) {
        const double rate = gamma_rate(c.omega, bath);
        const double amp = std::sqrt(rate);
        set.jumps.push_back({c.omega, rate, amp * c.op, amp * c.op_eigen});
    }
    return set;
}

} // namespace dtc
