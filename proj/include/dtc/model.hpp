// model.hpp - disordered two-stroke spin chain
//
//   H_z = 1/2 sum_i h_i sigma_i^z
//   H_x = sum_{i<N} J_i sigma_i^x sigma_{i+1}^x      (open chain)
//   S_x = 1/N sum_i sigma_i^x
//   V   = sum_i sigma_i^axis                          (collective bath coupling)
//
// Units: hbar = k_B = 1.

#pragma once

#include <bit>
#include <cstdint>
#include <vector>

#include "dtc/linalg.hpp"
#include "dtc/rng.hpp"
#include "dtc/types.hpp"

namespace dtc {

struct ModelParams {
    int N = 5;
    double h_bar = pi;
    double delta_h = 0.5;
    double J_bar = pi / 4;
    double delta_J = 0.5;
    double T_z = 1.0;
    double T_x = 1.0;

    double period() const { return T_z + T_x; }

    void validate() const
    {
        if (N < 1) throw ConfigError("must be >= 1", "model.N");
        if (N > 8) throw ConfigError("dense operators are limited to N <= 8", "model.N");
        if (!(T_z > 0)) throw ConfigError("must be > 0", "model.T_z");
        if (!(T_x > 0)) throw ConfigError("must be > 0", "model.T_x");
        if (!(delta_h >= 0)) throw ConfigError("must be >= 0", "model.delta_h");
        if (!(delta_J >= 0)) throw ConfigError("must be >= 0", "model.delta_J");
    }
};

struct DisorderRealization {
    std::vector<double> h; // N fields
    std::vector<double> J; // N-1 couplings
    std::uint64_t seed = 0;
};

// h_i = h_bar + delta_h u_i and J_i = J_bar + delta_J v_i with u, v iid uniform on
// [-1, 1]. Fields and couplings come from independent child streams of `seed`.
inline DisorderRealization sample_disorder(const ModelParams& p, std::uint64_t seed)
{
    p.validate();
    DisorderRealization d;
    d.seed = seed;
    Rng fields(derive_seed(seed, {seed_word(SeedStream::disorder_fields)}));
    Rng couplings(derive_seed(seed, {seed_word(SeedStream::disorder_couplings)}));
    d.h.reserve(p.N);
    for (int i = 0; i < p.N; ++i) d.h.push_back(p.h_bar + p.delta_h * fields.uniform(-1.0, 1.0));
    d.J.reserve(p.N - 1);
    for (int i = 0; i + 1 < p.N; ++i) d.J.push_back(p.J_bar + p.delta_J * couplings.uniform(-1.0, 1.0));
    return d;
}

struct SpinModel {
    int N = 0;
    Matrix H_z;
    Matrix H_x;
    Matrix S_x;
    Matrix V;
    Axis axis = Axis::z;

    Eigen::Index dim() const { return H_z.rows(); }
    const Matrix& hamiltonian(Stroke s) const { return s == Stroke::z ? H_z : H_x; }
};

namespace detail {

// Eigenvalue of sigma^z on `site` for computational basis state `index`
// (bit 1 is spin down).
inline double z_sign(std::uint64_t index, int n_sites, int site)
{
    return ((index >> (n_sites - 1 - site)) & 1U) ? -1.0 : 1.0;
}

// Hadamard on every site: maps the z product basis to the x product basis.
inline Matrix hadamard_register(int n_sites)
{
    const Eigen::Index d = linalg::register_dim(n_sites);
    Matrix h(d, d);
    const double norm = std::pow(2.0, -0.5 * n_sites);
    for (Eigen::Index i = 0; i < d; ++i) {
        for (Eigen::Index j = 0; j < d; ++j) {
            h(i, j) = (std::popcount(static_cast<std::uint64_t>(i & j)) % 2 ? -norm : norm);
        }
    }
    return h;
}

} // namespace detail

inline SpinModel build_model(const ModelParams& p, const DisorderRealization& dis, Axis axis)
{
    p.validate();
    if (static_cast<int>(dis.h.size()) != p.N || static_cast<int>(dis.J.size()) != p.N - 1) {
        throw DimensionError("build_model: disorder realization does not match N = " + std::to_string(p.N));
    }
    using linalg::register_dim;
    const int n = p.N;
    const Eigen::Index d = register_dim(n);

    SpinModel m;
    m.N = n;
    m.axis = axis;

    // Both Hamiltonians are diagonal in a product basis; build the diagonals from
    // bit strings and rotate H_x into the computational basis.
    RealVector hz_diag(d), hx_diag(d);
    for (Eigen::Index k = 0; k < d; ++k) {
        const auto idx = static_cast<std::uint64_t>(k);
        double ez = 0.0, ex = 0.0;
        for (int i = 0; i < n; ++i) ez += 0.5 * dis.h[i] * detail::z_sign(idx, n, i);
        for (int i = 0; i + 1 < n; ++i) {
            ex += dis.J[i] * detail::z_sign(idx, n, i) * detail::z_sign(idx, n, i + 1);
        }
        hz_diag(k) = ez;
        hx_diag(k) = ex;
    }
    m.H_z = hz_diag.cast<cplx>().asDiagonal();
    const Matrix had = detail::hadamard_register(n);
    m.H_x = linalg::symmetrize(had * hx_diag.cast<cplx>().asDiagonal() * had);

    m.S_x = Matrix::Zero(d, d);
    m.V = Matrix::Zero(d, d);
    const Matrix sx = linalg::pauli_x();
    const Matrix sv = linalg::pauli(axis);
    for (int i = 0; i < n; ++i) {
        m.S_x += linalg::site_operator(n, i, sx);
        m.V += linalg::site_operator(n, i, sv);
    }
    m.S_x /= static_cast<double>(n);
    return m;
}

struct DensityState {
    Matrix rho;

    Eigen::Index dim() const { return rho.rows(); }
};

// Tr rho, Hermiticity and minimum eigenvalue of a state, for invariant checks.
struct StateHealth {
    double trace_error = 0.0;
    double hermiticity_error = 0.0;
    double min_eigenvalue = 0.0;
};

inline StateHealth state_health(const Matrix& rho)
{
    StateHealth h;
    h.trace_error = std::abs(rho.trace() - cplx(1.0, 0.0));
    h.hermiticity_error = linalg::hermiticity_error(rho);
    h.min_eigenvalue = linalg::eigvalsh(linalg::symmetrize(rho)).minCoeff();
    return h;
}

// |+><+| on every site.
inline DensityState initial_state(int n_sites)
{
    if (n_sites < 1) throw ConfigError("must be >= 1", "model.N");
    const Eigen::Index d = linalg::register_dim(n_sites);
    Vector plus = Vector::Constant(d, cplx(std::pow(2.0, -0.5 * n_sites), 0.0));
    return {plus * plus.adjoint()};
}

} // namespace dtc
