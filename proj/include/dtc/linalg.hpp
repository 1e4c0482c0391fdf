// linalg.hpp - dense helpers for qubit-register operators and density matrices
//
// Register convention: site 0 is the leftmost tensor factor, i.e. the most
// significant bit of a computational-basis index.

#pragma once

#include <algorithm>
#include <cmath>
#include <string>

#include "dtc/types.hpp"

namespace dtc::linalg {

inline Matrix kron(const Matrix& a, const Matrix& b)
{
    Matrix out(a.rows() * b.rows(), a.cols() * b.cols());
    for (Eigen::Index i = 0; i < a.rows(); ++i) {
        for (Eigen::Index j = 0; j < a.cols(); ++j) {
            out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
        }
    }
    return out;
}

inline Matrix pauli_x()
{
    Matrix m(2, 2);
    m << 0, 1, 1, 0;
    return m;
}

inline Matrix pauli_y()
{
    Matrix m(2, 2);
    m << 0, cplx(0, -1), cplx(0, 1), 0;
    return m;
}

inline Matrix pauli_z()
{
    Matrix m(2, 2);
    m << 1, 0, 0, -1;
    return m;
}

inline Matrix pauli(Axis a) { return a == Axis::z ? pauli_z() : pauli_x(); }

inline constexpr Eigen::Index register_dim(int n_sites) { return Eigen::Index{1} << n_sites; }

// Single-site operator `op` acting on `site` of an n-site register.
inline Matrix site_operator(int n_sites, int site, const Matrix& op)
{
    Matrix out = Matrix::Identity(1, 1);
    for (int s = 0; s < n_sites; ++s) {
        out = kron(out, s == site ? op : Matrix::Identity(2, 2));
    }
    return out;
}

inline double max_abs(const Matrix& m) { return m.size() == 0 ? 0.0 : m.cwiseAbs().maxCoeff(); }

inline double hermiticity_error(const Matrix& m) { return max_abs(m - m.adjoint()); }

inline double real_trace_product(const Matrix& a, const Matrix& b)
{
    // Re Tr(a b) without forming the product.
    return (a.transpose().cwiseProduct(b)).sum().real();
}

// Column-stacking vectorization: vec(X)[i + j*d] = X(i, j).
inline Vector vec(const Matrix& m) { return Eigen::Map<const Vector>(m.data(), m.size()); }

inline Matrix unvec(const Vector& v, Eigen::Index dim)
{
    if (v.size() != dim * dim) throw DimensionError("unvec: vector length is not dim^2");
    return Eigen::Map<const Matrix>(v.data(), dim, dim);
}

struct Eigh {
    RealVector values; // ascending
    Matrix vectors;    // columns are orthonormal eigenvectors
};

// Hermitian eigendecomposition. Rejects inputs that are not Hermitian to
// within `herm_tol` (relative to the largest entry).
inline Eigh eigh(const Matrix& m, double herm_tol = 1e-10)
{
    if (m.rows() != m.cols()) throw DimensionError("eigh: matrix is not square");
    const double scale = std::max(1.0, max_abs(m));
    if (hermiticity_error(m) > herm_tol * scale) {
        throw NumericalError("eigh: input is not Hermitian");
    }
    Eigen::SelfAdjointEigenSolver<Matrix> solver(m);
    if (solver.info() != Eigen::Success) throw NumericalError("eigh: Hermitian eigensolver failed");
    return {solver.eigenvalues(), solver.eigenvectors()};
}

inline RealVector eigvalsh(const Matrix& m)
{
    Eigen::SelfAdjointEigenSolver<Matrix> solver(m, Eigen::EigenvaluesOnly);
    if (solver.info() != Eigen::Success) throw NumericalError("eigvalsh: Hermitian eigensolver failed");
    return solver.eigenvalues();
}

// f(m) for Hermitian m via its spectral decomposition.
template <typename F>
Matrix hermitian_function(const Eigh& e, F&& f)
{
    RealVector fv = e.values.unaryExpr(f);
    return e.vectors * fv.asDiagonal() * e.vectors.adjoint();
}

template <typename F>
Matrix hermitian_function(const Matrix& m, F&& f)
{
    return hermitian_function(eigh(m), std::forward<F>(f));
}

// Reduced state of the first `keep_sites` sites of an n-site register.
inline Matrix partial_trace_tail(const Matrix& rho, int n_sites, int keep_sites)
{
    if (keep_sites < 0 || keep_sites > n_sites) throw DimensionError("partial_trace_tail: bad site count");
    if (rho.rows() != register_dim(n_sites)) throw DimensionError("partial_trace_tail: state dimension mismatch");
    const Eigen::Index da = register_dim(keep_sites);
    const Eigen::Index db = register_dim(n_sites - keep_sites);
    Matrix out = Matrix::Zero(da, da);
    for (Eigen::Index k = 0; k < db; ++k) {
        for (Eigen::Index j = 0; j < da; ++j) {
            for (Eigen::Index i = 0; i < da; ++i) {
                out(i, j) += rho(i * db + k, j * db + k);
            }
        }
    }
    return out;
}

inline Matrix symmetrize(const Matrix& m) { return 0.5 * (m + m.adjoint()); }

} // namespace dtc::linalg
