#pragma once

// Randomized property checks shared by the self-test command and the
// acceptance suite.

#include <array>
#include <cmath>
#include <random>
#include <vector>

#include "cfet/liouvillian.hpp"
#include "cfet/operators.hpp"
#include "cfet/propagators.hpp"

namespace cfet::checks
{

inline Matrix random_matrix(Index d, std::mt19937_64& rng, double scale = 1.0)
{
    std::normal_distribution<double> n(0.0, scale);
    Matrix M(d, d);
    for (Index i = 0; i < d; ++i)
        for (Index j = 0; j < d; ++j)
            M(i, j) = cplx(n(rng), n(rng));
    return M;
}

inline Vector random_vector(Index d, std::mt19937_64& rng)
{
    std::normal_distribution<double> n(0.0, 1.0);
    Vector v(d);
    for (Index i = 0; i < d; ++i)
        v(i) = cplx(n(rng), n(rng));
    return v;
}

inline Matrix random_hermitian(Index d, std::mt19937_64& rng, double scale = 1.0)
{
    const Matrix A = random_matrix(d, rng, scale);
    return 0.5 * (A + A.adjoint());
}

inline Matrix random_density(Index d, std::mt19937_64& rng)
{
    const Matrix A = random_matrix(d, rng);
    Matrix rho = A * A.adjoint();
    rho /= rho.trace().real();
    return 0.5 * (rho + rho.adjoint());
}

/// Least-squares slope of log(err) against log(h).
inline double fit_slope(const std::vector<double>& h, const std::vector<double>& err)
{
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    const double n = static_cast<double>(h.size());
    for (std::size_t i = 0; i < h.size(); ++i) {
        const double x = std::log(h[i]), y = std::log(err[i]);
        sx += x;
        sy += y;
        sxx += x * x;
        sxy += x * y;
    }
    return (n * sxy - sx * sy) / (n * sxx - sx * sx);
}

/// A(t) = A1 + t A2 + t^2 A3 + t^3 A4.
inline Generator<Matrix> taylor_generator(const std::array<Matrix, 4>& A)
{
    Generator<Matrix> g(A[0]);
    g.add(A[1], [](double t) { return t; });
    g.add(A[2], [](double t) { return t * t; });
    g.add(A[3], [](double t) { return t * t * t; });
    return g;
}

inline std::array<Matrix, 4> random_taylor(Index d, std::mt19937_64& rng, double scale = 0.5)
{
    return {random_matrix(d, rng, scale), random_matrix(d, rng, scale), random_matrix(d, rng, scale),
            random_matrix(d, rng, scale)};
}

/// Max-entry distance between one CFET step and the fourth-order Magnus
/// exponential of the same Taylor generator, both with dense exponentials.
inline double magnus_defect(const std::array<Matrix, 4>& A, const SchemeSpec& s, double dt, const Vector& x)
{
    const auto g = taylor_generator(A);
    EffortCounter c;
    const Vector y = step(s, g, 0.0, dt, x, make_engine(EngineKind::DenseOracle), c);
    const Vector ref = magnus4_from_taylor(A[0], A[1], A[2], A[3], dt) * x;
    return (y - ref).cwiseAbs().maxCoeff();
}

inline const std::vector<double>& defect_steps()
{
    static const std::vector<double> h{0.16, 0.08, 0.04, 0.02};
    return h;
}

/// Fitted slope of magnus_defect over defect_steps() for one random 4x4
/// Taylor generator drawn from seed.
inline double magnus_defect_slope(std::uint64_t seed, const SchemeSpec& s, Index d = 4)
{
    std::mt19937_64 rng(seed);
    const auto A = random_taylor(d, rng);
    const Vector x = random_vector(d, rng);
    std::vector<double> e;
    for (double dt : defect_steps())
        e.push_back(magnus_defect(A, s, dt, x));
    return fit_slope(defect_steps(), e);
}

struct SuperopCheck
{
    double trace_defect = 0.0;     // |tr L(rho)| relative to ||rho||, sparse form
    double dense_trace_defect = 0.0; // same for the explicit superoperator
    double form_vs_dense = 0.0;    // max-entry gap of the two actions
    double hermiticity = 0.0;      // hermiticity defect of L(rho) for Hermitian rho
};

/// Random Hermitian H and two random jumps on dimension d, applied to a random
/// density matrix.
inline SuperopCheck superop_trace_check(std::mt19937_64& rng, Index d)
{
    std::uniform_real_distribution<double> rate(0.01, 1.0);
    const Matrix H = random_hermitian(d, rng);
    const std::vector<Jump> jumps{{rate(rng), random_matrix(d, rng)}, {rate(rng), random_matrix(d, rng)}};
    const Matrix rho = random_density(d, rng);
    const auto L = LiouvillianForm::lindblad(H, jumps);
    const Matrix Ld = lindblad_superop(H, jumps);
    Vector out(d * d);
    L.apply(vec(rho), out);
    const Vector outd = Ld * vec(rho);
    const double scale = std::max(1.0, out.cwiseAbs().maxCoeff());
    SuperopCheck r;
    r.trace_defect = std::abs(unvec(out).trace()) / scale;
    r.dense_trace_defect = std::abs(unvec(outd).trace()) / scale;
    r.form_vs_dense = error_max(out, outd) / scale;
    r.hermiticity = hermiticity_defect(unvec(out)) / scale;
    return r;
}

struct VectorizationCheck
{
    double round_trip = 0.0; // unvec(vec(X)) - X
    double kron_rule = 0.0;  // vec(A X B) - (B^T kron A) vec(X), relative
};

inline VectorizationCheck vectorization_check(std::mt19937_64& rng, Index d)
{
    const Matrix X = random_matrix(d, rng), A = random_matrix(d, rng), B = random_matrix(d, rng);
    VectorizationCheck r;
    r.round_trip = error_max(unvec(vec(X)), X);
    const Vector lhs = vec(A * X * B);
    const Vector rhs = kron(B.transpose(), A) * vec(X);
    r.kron_rule = error_max(lhs, rhs) / std::max(1.0, lhs.cwiseAbs().maxCoeff());
    return r;
}

} // namespace cfet::checks
