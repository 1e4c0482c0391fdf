// evolution.hpp - Lindblad generators, stroke propagators and two-stroke time stepping
//
// Vectorization is column stacking, vec(X)[i + j d] = X(i, j), under which
//
//   vec(A X B) = (B^T kron A) vec(X)
//   L = -i (1 kron H - H^T kron 1)
//       + sum_w [ conj(L_w) kron L_w - 1/2 (1 kron K) - 1/2 (K^T kron 1) ],   K = sum_w L_w^dag L_w.
//
// In the eigenbasis of H a Davies generator only couples matrix elements
// |a><b| whose Bohr frequencies agree, so it splits into small independent
// blocks. Liouvillian finds those blocks as connected components of its
// sparsity graph; StrokePropagator exponentiates each block exactly.

#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <memory>
#include <numeric>
#include <optional>
#include <sstream>
#include <vector>

#include <unsupported/Eigen/MatrixFunctions>

#include "dtc/bath.hpp"
#include "dtc/linalg.hpp"
#include "dtc/model.hpp"
#include "dtc/types.hpp"

namespace dtc {

// Generator restricted to its invariant blocks, in the eigenbasis of H and
// column-stacked element order.
struct GeneratorBlocks {
    Eigen::Index dim = 0;  // Hilbert-space dimension d; elements are indexed 0..d^2-1

    std::vector<Eigen::Index> diag_index;  // elements that form 1x1 blocks
    Vector diag_value;

    struct Block {
        std::vector<Eigen::Index> index;
        Matrix generator;
    };
    std::vector<Block> blocks;
};

namespace detail {

class DisjointSets {
public:
    explicit DisjointSets(std::size_t n) : parent_(n) { std::iota(parent_.begin(), parent_.end(), 0); }

    std::size_t find(std::size_t i)
    {
        while (parent_[i] != i) {
            parent_[i] = parent_[parent_[i]];
            i = parent_[i];
        }
        return i;
    }

    void unite(std::size_t a, std::size_t b)
    {
        a = find(a);
        b = find(b);
        if (a != b) parent_[std::max(a, b)] = std::min(a, b);
    }

private:
    std::vector<std::size_t> parent_;
};

struct SparseColumn {
    std::vector<std::pair<Eigen::Index, cplx>> entries;
};

inline std::vector<SparseColumn> sparse_columns(const Matrix& m)
{
    std::vector<SparseColumn> cols(static_cast<std::size_t>(m.cols()));
    for (Eigen::Index j = 0; j < m.cols(); ++j) {
        for (Eigen::Index i = 0; i < m.rows(); ++i) {
            if (m(i, j) != cplx(0.0, 0.0)) cols[j].entries.emplace_back(i, m(i, j));
        }
    }
    return cols;
}

inline GeneratorBlocks build_generator_blocks(const JumpOperatorSet& jumps)
{
    const Eigen::Index d = jumps.dim();
    const auto n = static_cast<std::size_t>(d * d);
    const auto element = [d](Eigen::Index row, Eigen::Index col) { return static_cast<std::size_t>(row + col * d); };

    std::vector<std::vector<SparseColumn>> jump_cols;
    Matrix K = Matrix::Zero(d, d);
    for (const auto& j : jumps.jumps) {
        if (j.rate == 0.0) continue;
        jump_cols.push_back(sparse_columns(j.op_eigen));
        K.noalias() += j.op_eigen.adjoint() * j.op_eigen;
    }
    const auto k_cols = sparse_columns(K);
    const auto k_rows = sparse_columns(K.transpose());

    // Image of each basis element |a><b| under the generator, as (element, value) pairs.
    std::vector<std::vector<std::pair<std::size_t, cplx>>> image(n);
    for (Eigen::Index b = 0; b < d; ++b) {
        for (Eigen::Index a = 0; a < d; ++a) {
            auto& out = image[element(a, b)];
            out.emplace_back(element(a, b), cplx(0.0, -(jumps.energies(a) - jumps.energies(b))));
            for (const auto& cols : jump_cols) {
                for (const auto& [c, lca] : cols[a].entries) {
                    for (const auto& [dd, ldb] : cols[b].entries) {
                        out.emplace_back(element(c, dd), lca * std::conj(ldb));
                    }
                }
            }
            // -1/2 K |a><b|  and  -1/2 |a><b| K
            for (const auto& [c, kca] : k_cols[a].entries) out.emplace_back(element(c, b), -0.5 * kca);
            for (const auto& [dd, kbd] : k_rows[b].entries) out.emplace_back(element(a, dd), -0.5 * kbd);
        }
    }

    DisjointSets sets(n);
    for (std::size_t e = 0; e < n; ++e) {
        for (const auto& [target, value] : image[e]) sets.unite(e, target);
    }

    std::vector<std::vector<Eigen::Index>> members(n);
    for (std::size_t e = 0; e < n; ++e) members[sets.find(e)].push_back(static_cast<Eigen::Index>(e));

    GeneratorBlocks out;
    out.dim = d;
    std::vector<cplx> diag;
    std::vector<Eigen::Index> local(n, -1);
    for (auto& idx : members) {
        if (idx.empty()) continue;
        if (idx.size() == 1) {
            const auto e = static_cast<std::size_t>(idx.front());
            cplx v = 0.0;
            for (const auto& [target, value] : image[e]) v += value;
            out.diag_index.push_back(idx.front());
            diag.push_back(v);
            continue;
        }
        const auto m = static_cast<Eigen::Index>(idx.size());
        for (Eigen::Index k = 0; k < m; ++k) local[static_cast<std::size_t>(idx[k])] = k;
        Matrix g = Matrix::Zero(m, m);
        for (Eigen::Index k = 0; k < m; ++k) {
            for (const auto& [target, value] : image[static_cast<std::size_t>(idx[k])]) g(local[target], k) += value;
        }
        out.blocks.push_back({std::move(idx), std::move(g)});
    }
    out.diag_value = Eigen::Map<Vector>(diag.data(), static_cast<Eigen::Index>(diag.size()));
    return out;
}

// Applies per-block matrices (block_matrix(b) aligned with s.blocks[b]) to a
// column-stacked vector.
template <typename BlockMatrix>
Vector apply_blocks(const GeneratorBlocks& s, const Vector& diag, BlockMatrix&& block_matrix, const Vector& x)
{
    Vector y(x.size());
    for (std::size_t k = 0; k < s.diag_index.size(); ++k) {
        const auto i = s.diag_index[k];
        y(i) = diag(static_cast<Eigen::Index>(k)) * x(i);
    }
    for (std::size_t b = 0; b < s.blocks.size(); ++b) {
        const auto& idx = s.blocks[b].index;
        const auto m = static_cast<Eigen::Index>(idx.size());
        Vector xb(m);
        for (Eigen::Index k = 0; k < m; ++k) xb(k) = x(idx[k]);
        const Vector yb = block_matrix(b) * xb;
        for (Eigen::Index k = 0; k < m; ++k) y(idx[k]) = yb(k);
    }
    return y;
}

} // namespace detail

class Liouvillian {
public:
    Liouvillian(Matrix H, JumpOperatorSet jumps) : H_(std::move(H)), jumps_(std::move(jumps))
    {
        const Eigen::Index d = H_.rows();
        if (H_.cols() != d || jumps_.dim() != d || jumps_.energies.size() != d) {
            throw DimensionError("Liouvillian: Hamiltonian and jump operators have different dimensions");
        }
        for (const auto& j : jumps_.jumps) {
            if (j.op.rows() != d || j.op.cols() != d) throw DimensionError("Liouvillian: jump operator dimension");
        }
        // The jump set must come from the eigenbasis of this H.
        const Matrix residual = H_ * jumps_.basis - jumps_.basis * jumps_.energies.cast<cplx>().asDiagonal();
        if (linalg::max_abs(residual) > 1e-8 * std::max(1.0, linalg::max_abs(H_))) {
            throw DimensionError("Liouvillian: jump operators were not built from this Hamiltonian");
        }
        K_ = Matrix::Zero(d, d);
        for (const auto& j : jumps_.jumps) K_.noalias() += j.op.adjoint() * j.op;
        blocks_ = std::make_shared<const GeneratorBlocks>(detail::build_generator_blocks(jumps_));
    }

    Stroke stroke() const { return jumps_.stroke; }
    Eigen::Index dim() const { return H_.rows(); }
    const Matrix& hamiltonian() const { return H_; }
    const JumpOperatorSet& jumps() const { return jumps_; }
    const GeneratorBlocks& blocks() const { return *blocks_; }
    std::shared_ptr<const GeneratorBlocks> shared_blocks() const { return blocks_; }

    // L(rho), evaluated through the eigenbasis blocks.
    Matrix apply(const Matrix& rho) const
    {
        if (rho.rows() != dim() || rho.cols() != dim()) throw DimensionError("Liouvillian::apply: state dimension");
        const Matrix& u = jumps_.basis;
        const Matrix x = u.adjoint() * rho * u;
        const auto generator = [this](std::size_t b) -> const Matrix& { return blocks_->blocks[b].generator; };
        const Vector y = detail::apply_blocks(*blocks_, blocks_->diag_value, generator, linalg::vec(x));
        return u * linalg::unvec(y, dim()) * u.adjoint();
    }

    // Dense d^2 x d^2 matrix in the computational basis (column stacking).
    Matrix matrix() const
    {
        using linalg::kron;
        const Eigen::Index d = dim();
        const Matrix id = Matrix::Identity(d, d);
        Matrix out = cplx(0.0, -1.0) * (kron(id, H_) - kron(H_.transpose(), id));
        for (const auto& j : jumps_.jumps) out += kron(j.op.conjugate(), j.op);
        out -= 0.5 * (kron(id, K_) + kron(K_.transpose(), id));
        return out;
    }

    // Largest real part over the generator spectrum.
    double spectral_abscissa() const
    {
        double top = -std::numeric_limits<double>::infinity();
        for (Eigen::Index k = 0; k < blocks_->diag_value.size(); ++k) {
            top = std::max(top, blocks_->diag_value(k).real());
        }
        for (const auto& b : blocks_->blocks) {
            Eigen::ComplexEigenSolver<Matrix> es(b.generator, false);
            if (es.info() != Eigen::Success) throw NumericalError("Liouvillian: block eigensolver failed");
            top = std::max(top, es.eigenvalues().real().maxCoeff());
        }
        return top;
    }

private:
    Matrix H_;
    JumpOperatorSet jumps_;
    Matrix K_;
    std::shared_ptr<const GeneratorBlocks> blocks_;
};

inline Liouvillian build_liouvillian(const Matrix& H, const JumpOperatorSet& jumps) { return Liouvillian(H, jumps); }

inline constexpr double max_spectral_abscissa = 1e-8;

// exp(duration L), plus exp(substep L) for sampling inside the stroke.
class StrokePropagator {
public:
    StrokePropagator(const Liouvillian& L, double duration, double substep)
        : stroke_(L.stroke()), duration_(duration), substep_(substep), basis_(L.jumps().basis),
          structure_(L.shared_blocks())
    {
        if (!(duration >= 0)) throw ConfigError("propagator duration must be >= 0");
        if (!(substep >= 0)) throw ConfigError("propagator substep must be >= 0");
        const double abscissa = L.spectral_abscissa();
        if (abscissa > max_spectral_abscissa) {
            std::ostringstream msg;
            msg << "generator has spectral abscissa " << abscissa << " > 0; it is not a valid Lindbladian";
            throw NumericalError(msg.str());
        }
        full_ = exponentiate(duration);
        sub_ = exponentiate(substep);
    }

    Stroke stroke() const { return stroke_; }
    double duration() const { return duration_; }
    double substep() const { return substep_; }
    Eigen::Index dim() const { return basis_.rows(); }

    Matrix apply(const Matrix& rho) const { return apply_with(full_, rho); }
    Matrix apply_substep(const Matrix& rho) const { return apply_with(sub_, rho); }

    // Dense d^2 x d^2 map in the computational basis.
    Matrix matrix() const { return dense(full_); }
    Matrix substep_matrix() const { return dense(sub_); }

private:
    struct Exponentials {
        Vector diag;
        std::vector<Matrix> blocks;
    };

    Exponentials exponentiate(double t) const
    {
        Exponentials e;
        e.diag = (structure_->diag_value * t).array().exp();
        e.blocks.reserve(structure_->blocks.size());
        for (const auto& b : structure_->blocks) e.blocks.push_back((b.generator * t).exp());
        return e;
    }

    Matrix apply_with(const Exponentials& e, const Matrix& rho) const
    {
        if (rho.rows() != dim() || rho.cols() != dim()) throw DimensionError("StrokePropagator: state dimension");
        const Matrix x = basis_.adjoint() * rho * basis_;
        const auto block = [&e](std::size_t b) -> const Matrix& { return e.blocks[b]; };
        const Vector y = detail::apply_blocks(*structure_, e.diag, block, linalg::vec(x));
        return basis_ * linalg::unvec(y, dim()) * basis_.adjoint();
    }

    Matrix dense(const Exponentials& e) const
    {
        const Eigen::Index d = dim();
        Matrix out(d * d, d * d);
        for (Eigen::Index k = 0; k < d * d; ++k) {
            Matrix unit = Matrix::Zero(d, d);
            unit(k % d, k / d) = 1.0;
            out.col(k) = linalg::vec(apply_with(e, unit));
        }
        return out;
    }

    Stroke stroke_;
    double duration_;
    double substep_;
    Matrix basis_;
    std::shared_ptr<const GeneratorBlocks> structure_;
    Exponentials full_;
    Exponentials sub_;
};

inline StrokePropagator build_propagator(const Liouvillian& L, double duration, std::optional<double> substep = {})
{
    return StrokePropagator(L, duration, substep.value_or(duration));
}

// Choi matrix sum_ij |i><j| (x) Lambda(|i><j|) of a column-stacked map on d x d matrices.
inline Matrix choi_matrix(const Matrix& map, Eigen::Index d)
{
    if (map.rows() != d * d || map.cols() != d * d) throw DimensionError("choi_matrix: map dimension");
    Matrix c(d * d, d * d);
    for (Eigen::Index i = 0; i < d; ++i) {
        for (Eigen::Index j = 0; j < d; ++j) {
            c.block(i * d, j * d, d, d) = linalg::unvec(map.col(i + j * d), d);
        }
    }
    return c;
}

struct PeriodSchedule {
    double T_z = 1.0;
    double T_x = 1.0;
    double sample_dt = 0.01;
    int n_periods = 1;

    double period() const { return T_z + T_x; }
    int steps_z() const { return static_cast<int>(std::lround(T_z / sample_dt)); }
    int steps_x() const { return static_cast<int>(std::lround(T_x / sample_dt)); }

    void validate() const
    {
        if (!(T_z > 0) || !(T_x > 0)) throw ConfigError("stroke durations must be > 0", "model.T_z/T_x");
        if (!(sample_dt > 0)) throw ConfigError("must be > 0", "sample_dt");
        if (n_periods < 0) throw ConfigError("must be >= 0", "n_periods");
        if (steps_z() < 1 || std::abs(steps_z() * sample_dt - T_z) > 1e-12 || steps_x() < 1 ||
            std::abs(steps_x() * sample_dt - T_x) > 1e-12) {
            throw ConfigError("must divide both stroke durations", "sample_dt");
        }
    }
};

inline PeriodSchedule make_schedule(const ModelParams& p, double sample_dt, int n_periods)
{
    PeriodSchedule s{p.T_z, p.T_x, sample_dt, n_periods};
    s.validate();
    return s;
}

// Davies jump operators of both strokes for one bath.
struct StrokeBaths {
    JumpOperatorSet z;
    JumpOperatorSet x;
};

inline StrokeBaths build_stroke_baths(const SpinModel& model, const BathParams& bath,
                                      double bohr_tol = default_bohr_tolerance)
{
    return {build_jump_operators(bohr_decompose(model.H_z, model.V, bohr_tol), bath, Stroke::z),
            build_jump_operators(bohr_decompose(model.H_x, model.V, bohr_tol), bath, Stroke::x)};
}

struct StrokeDynamics {
    Liouvillian generator;
    StrokePropagator propagator;  // full stroke, substep = sample_dt
};

// Everything needed to step one (realization, bath, axis) point; immutable and
// shareable once built.
struct DrivenChain {
    SpinModel model;
    StrokeDynamics z;
    StrokeDynamics x;

    const StrokeDynamics& stroke(Stroke s) const { return s == Stroke::z ? z : x; }
};

inline DrivenChain build_driven_chain(const SpinModel& model, const StrokeBaths& baths, const PeriodSchedule& schedule)
{
    schedule.validate();
    Liouvillian lz = build_liouvillian(model.H_z, baths.z);
    Liouvillian lx = build_liouvillian(model.H_x, baths.x);
    StrokePropagator pz = build_propagator(lz, schedule.T_z, schedule.sample_dt);
    StrokePropagator px = build_propagator(lx, schedule.T_x, schedule.sample_dt);
    return {model, {std::move(lz), std::move(pz)}, {std::move(lx), std::move(px)}};
}

inline DrivenChain build_driven_chain(const SpinModel& model, const BathParams& bath, const PeriodSchedule& schedule,
                                      double bohr_tol = default_bohr_tolerance)
{
    return build_driven_chain(model, build_stroke_baths(model, bath, bohr_tol), schedule);
}

// One recorded grid point. Switch times appear twice: once at the end of the
// outgoing stroke and once at the start of the incoming one.
struct SampleView {
    double time;
    Stroke stroke;
    int period;  // 0-based period containing the sample
    int step;    // substep index within the stroke, 0..steps
    const Matrix& rho;
};

inline constexpr double positivity_abort = -1e-6;

inline void check_positivity(const Matrix& rho, double time)
{
    const double lo = linalg::eigvalsh(linalg::symmetrize(rho)).minCoeff();
    if (lo < positivity_abort) {
        std::ostringstream msg;
        msg << "state lost positivity at t = " << time << " (min eigenvalue " << lo << ")";
        throw NumericalError(msg.str());
    }
}

struct NoPeriodHook {
    void operator()(int, Matrix&) const {}
};

// Steps rho0 through schedule.n_periods drive periods on the sampling grid.
// `observe(SampleView)` sees every grid point; `at_period_end(k, rho)` runs after
// the k-th period (k = 1..n_periods) has been observed and may replace the state.
template <typename Observer, typename PeriodHook = NoPeriodHook>
Matrix evolve(const Matrix& rho0, const DrivenChain& chain, const PeriodSchedule& schedule, Observer&& observe,
              PeriodHook&& at_period_end = {})
{
    schedule.validate();
    if (rho0.rows() != chain.model.dim()) throw DimensionError("evolve: initial state dimension");
    const int nz = schedule.steps_z();
    const int nx = schedule.steps_x();
    const double T = schedule.period();
    Matrix rho = rho0;

    const auto record = [&](double t, Stroke s, int k, int step) {
        check_positivity(rho, t);
        observe(SampleView{t, s, k, step, rho});
    };

    for (int k = 0; k < schedule.n_periods; ++k) {
        const double t0 = k * T;
        record(t0, Stroke::z, k, 0);
        for (int s = 1; s <= nz; ++s) {
            rho = chain.z.propagator.apply_substep(rho);
            record(t0 + (s == nz ? schedule.T_z : s * schedule.sample_dt), Stroke::z, k, s);
        }
        record(t0 + schedule.T_z, Stroke::x, k, 0);
        for (int s = 1; s <= nx; ++s) {
            rho = chain.x.propagator.apply_substep(rho);
            record(s == nx ? (k + 1) * T : t0 + schedule.T_z + s * schedule.sample_dt, Stroke::x, k, s);
        }
        at_period_end(k + 1, rho);
    }
    return rho;
}

struct StateSample {
    double time;
    Stroke stroke;
    Matrix rho;
};

inline std::vector<StateSample> evolve(const DensityState& rho0, const DrivenChain& chain,
                                       const PeriodSchedule& schedule)
{
    std::vector<StateSample> out;
    evolve(rho0.rho, chain, schedule, [&](const SampleView& v) { out.push_back({v.time, v.stroke, v.rho}); });
    return out;
}

// State after each full period, using the whole-stroke propagators.
// `after_period(k, rho)` sees the state at t = kT and may replace it.
template <typename PeriodHook>
Matrix evolve_stroboscopic(const Matrix& rho0, const DrivenChain& chain, int n_periods, PeriodHook&& after_period)
{
    Matrix rho = rho0;
    for (int k = 1; k <= n_periods; ++k) {
        rho = chain.x.propagator.apply(chain.z.propagator.apply(rho));
        check_positivity(rho, k * (chain.z.propagator.duration() + chain.x.propagator.duration()));
        after_period(k, rho);
    }
    return rho;
}

} // namespace dtc
