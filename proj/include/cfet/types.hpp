#pragma once

#include <complex>
#include <cstdint>
#include <stdexcept>
#include <string>

#include <Eigen/Dense>

namespace cfet
{
using cplx = std::complex<double>;
using Index = Eigen::Index;

/// Dense square complex matrix. Used for Hamiltonians, jump operators,
/// observables, density matrices and explicit superoperators alike.
using Matrix = Eigen::MatrixXcd;

/// State vector, or a column-stacked density matrix.
using Vector = Eigen::VectorXcd;

inline constexpr cplx kI{0.0, 1.0};

/// Raised when a numerical routine cannot meet its contract (degree cap hit,
/// non-convergence, non-finite input). Carries the best residual estimate.
class NumericalFailure : public std::runtime_error
{
public:
    NumericalFailure(const std::string& what, double residual)
        : std::runtime_error(what), residual_(residual)
    {}

    double residual() const noexcept { return residual_; }

private:
    double residual_;
};

/// Number of generator applications (matrix-vector products). Owned by the
/// caller, one per run.
struct EffortCounter
{
    std::uint64_t n_matvec = 0;

    void add(std::uint64_t n) noexcept { n_matvec += n; }
};

} // namespace cfet
