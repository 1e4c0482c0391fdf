// types.hpp - shared aliases, tags and error types

#pragma once

#include <complex>
#include <numbers>
#include <stdexcept>
#include <string>
#include <string_view>

#include <Eigen/Dense>

namespace dtc {

using cplx = std::complex<double>;
using Matrix = Eigen::MatrixXcd;
using Vector = Eigen::VectorXcd;
using RealVector = Eigen::VectorXd;

inline constexpr double pi = std::numbers::pi;

// Spin axis used for the bath coupling V = sum_i sigma_i^axis.
enum class Axis { z, x };

// Which constant Hamiltonian is active: H_z for the z-stroke, H_x for the x-stroke.
enum class Stroke { z, x };

constexpr std::string_view to_string(Axis a) { return a == Axis::z ? "z" : "x"; }
constexpr std::string_view to_string(Stroke s) { return s == Stroke::z ? "z" : "x"; }

inline Axis parse_axis(std::string_view s)
{
    if (s == "z") return Axis::z;
    if (s == "x") return Axis::x;
    throw std::invalid_argument("axis must be 'z' or 'x', got '" + std::string(s) + "'");
}

class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Operands with incompatible shapes.
class DimensionError : public Error {
public:
    using Error::Error;
};

// A numerical invariant was violated (non-Hermitian input, growing generator,
// loss of positivity).
class NumericalError : public Error {
public:
    using Error::Error;
};

// Invalid parameters or configuration. `key` names the offending entry when known.
class ConfigError : public Error {
public:
    explicit ConfigError(const std::string& what, std::string key = {})
        : Error(key.empty() ? what : key + ": " + what), key_(std::move(key)) {}
    const std::string& key() const noexcept { return key_; }

private:
    std::string key_;
};

} // namespace dtc
