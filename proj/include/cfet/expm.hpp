#pragma once

// Action of the matrix exponential exp(tau M) v.
//
// Engines: a dense reference (Pade scaling and squaring), Chebyshev expansions
// for anti-hermitian and for general (Lindblad) generators, and sub-stepped
// truncated Taylor series. The Chebyshev engines count one matrix-vector product
// per polynomial degree in the caller's EffortCounter.

#include <atomic>
#include <functional>
#include <iostream>
#include <optional>
#include <string>

#include <unsupported/Eigen/MatrixFunctions>

#include "cfet/bessel.hpp"
#include "cfet/liouvillian.hpp"
#include "cfet/spectral.hpp"
#include "cfet/types.hpp"

namespace cfet
{

enum class EngineKind
{
    DenseOracle,
    ChebyshevHermitian,
    ChebyshevShifted,
    TaylorSteps,
};

inline const char* to_string(EngineKind k)
{
    switch (k) {
    case EngineKind::DenseOracle: return "dense";
    case EngineKind::ChebyshevHermitian: return "chebyshev-hermitian";
    case EngineKind::ChebyshevShifted: return "chebyshev";
    case EngineKind::TaylorSteps: return "taylor";
    }
    return "?";
}

inline EngineKind engine_from_string(const std::string& s)
{
    if (s == "dense") return EngineKind::DenseOracle;
    if (s == "chebyshev-hermitian") return EngineKind::ChebyshevHermitian;
    if (s == "chebyshev") return EngineKind::ChebyshevShifted;
    if (s == "taylor") return EngineKind::TaylorSteps;
    throw std::invalid_argument("unknown engine '" + s + "'");
}

struct EngineSpec
{
    EngineKind kind = EngineKind::ChebyshevShifted;
    double tolerance = 1e-12;
    /// When unset the cap is 10 * ceil(|tau| * spectral radius) + 50.
    std::optional<int> max_degree;
    /// Compare every Chebyshev result against the dense exponential (small dims only).
    bool check_against_dense = false;

    void validate() const
    {
        if (!(tolerance > 0.0 && tolerance < 1.0))
            throw std::invalid_argument("engine tolerance must lie in (0, 1)");
        if (max_degree && *max_degree < 1)
            throw std::invalid_argument("engine max_degree must be >= 1");
    }
};

inline EngineSpec make_engine(EngineKind kind, double tolerance = 1e-12)
{
    EngineSpec s;
    s.kind = kind;
    s.tolerance = tolerance;
    return s;
}

/// Receives engine warnings. The default handler prints the first one to stderr.
inline std::function<void(const std::string&)>& warning_handler()
{
    static std::function<void(const std::string&)> handler = [](const std::string& msg) {
        static std::atomic<bool> shown{false};
        if (!shown.exchange(true))
            std::cerr << "warning: " << msg << " (further engine warnings suppressed)\n";
    };
    return handler;
}

inline Matrix expm_dense(const Matrix& M, cplx tau = 1.0)
{
    if (M.rows() != M.cols())
        throw std::invalid_argument("expm_dense: matrix not square");
    if (!M.allFinite() || !std::isfinite(tau.real()) || !std::isfinite(tau.imag()))
        throw std::invalid_argument("expm_dense: non-finite input");
    if (M.size() == 0)
        return M;
    const Matrix X = tau * M;
    Matrix E = X.exp();
    if (!E.allFinite())
        throw NumericalFailure("expm_dense: exponential overflowed", std::numeric_limits<double>::infinity());
    return E;
}

/// Largest operator the dense engine will exponentiate.
inline constexpr Index kMaxDenseExpDim = 2048;

namespace detail
{

inline int default_degree_cap(double tau, const SpectralBox& box)
{
    return 10 * static_cast<int>(std::ceil(std::abs(tau) * box.radius())) + 50;
}

/// sum_k coeff[k] T_k(X) v with X = (M - c) / s. coeff must hold cap + 2 entries.
/// Stops once k exceeds |y| and two consecutive coefficients, weighted by
/// max(|T_k v|, |v|), are below tol * |v|. T_k v alone can vanish by accident
/// (X^2 = I/2 gives T_2 v = 0).
template <typename Op>
Vector chebyshev_sum(const Op& M, const Vector& v, cplx c, cplx s, const std::vector<cplx>& coeff,
                     double y, double tol, int cap, EffortCounter& counter)
{
    const double vnorm = v.norm();
    const cplx inv_s = 1.0 / s;
    Vector t_prev = v;
    Vector t_cur(v.size()), t_next(v.size()), mv(v.size());

    auto applyX = [&](const Vector& in, Vector& out) {
        apply(M, in, mv);
        out = inv_s * (mv - c * in);
    };

    Vector sum = coeff[0] * t_prev;
    applyX(t_prev, t_cur);
    int degree = 1;
    sum += coeff[1] * t_cur;
    double last = std::numeric_limits<double>::infinity();
    for (;;) {
        const double tn = std::max(t_cur.norm(), vnorm);
        last = std::abs(coeff[degree]) * tn + std::abs(coeff[degree + 1]) * tn;
        if (degree > std::abs(y) && std::abs(coeff[degree]) * tn <= tol * vnorm &&
            std::abs(coeff[degree + 1]) * tn <= tol * vnorm)
            break;
        if (!std::isfinite(tn))
            throw NumericalFailure("chebyshev expansion diverged", tn);
        if (degree >= cap) {
            counter.add(static_cast<std::uint64_t>(degree));
            throw NumericalFailure("chebyshev degree cap " + std::to_string(cap) +
                                       " reached before tolerance; residual estimate " +
                                       std::to_string(last / std::max(vnorm, 1e-300)),
                                   last / std::max(vnorm, 1e-300));
        }
        applyX(t_cur, t_next);
        t_next = 2.0 * t_next - t_prev;
        ++degree;
        sum += coeff[degree] * t_next;
        std::swap(t_prev, t_cur);
        std::swap(t_cur, t_next);
    }
    counter.add(static_cast<std::uint64_t>(degree));
    return sum;
}

/// exp(tau (c + i h X)) v for X with spectrum near [-1, 1].
template <typename Op>
Vector chebyshev_imaginary_axis(const Op& M, const Vector& v, double tau, cplx c, double h,
                                double tol, int cap, EffortCounter& counter)
{
    const double y = tau * h;
    const std::vector<double> J = bessel_j_sequence(cap + 2, y);
    std::vector<cplx> coeff(cap + 3);
    cplx ik = 1.0;
    for (int k = 0; k <= cap + 2; ++k) {
        coeff[k] = (k == 0 ? 1.0 : 2.0) * ik * J[k];
        ik *= kI;
    }
    return std::exp(tau * c) * chebyshev_sum(M, v, c, kI * h, coeff, y, tol, cap, counter);
}

/// exp(tau (c + h X)) v for X with spectrum near [-1, 1].
template <typename Op>
Vector chebyshev_real_axis(const Op& M, const Vector& v, double tau, cplx c, double h,
                           double tol, int cap, EffortCounter& counter)
{
    const double y = tau * h;
    const std::vector<double> I = bessel_i_scaled_sequence(cap + 2, y);
    std::vector<cplx> coeff(cap + 3);
    for (int k = 0; k <= cap + 2; ++k) {
        const double sign = (y < 0.0 && k % 2 == 1) ? -1.0 : 1.0;
        coeff[k] = (k == 0 ? 1.0 : 2.0) * sign * I[k];
    }
    // coefficients carry e^{-|y|}
    return std::exp(tau * c + std::abs(y)) * chebyshev_sum(M, v, c, cplx(h), coeff, y, tol, cap, counter);
}

template <typename Op>
void check_dense(const Op& M, const Vector& v, double tau, const Vector& result, const EngineSpec& spec)
{
    if (!spec.check_against_dense || state_dim(M) > 64)
        return;
    const Vector ref = expm_dense(Matrix(to_dense(M)), tau) * v;
    const double res = (ref - result).norm();
    if (res > 100.0 * spec.tolerance * std::max(1.0, v.norm()))
        throw NumericalFailure("chebyshev result disagrees with dense exponential, residual " +
                                   std::to_string(res),
                               res);
}

template <typename Op>
std::optional<Vector> trivial_action(const Op& M, const Vector& v, double tau, const SpectralBox& box)
{
    if (tau == 0.0 || is_zero(M))
        return v;
    // a zero-radius Gershgorin box means M is a multiple of the identity
    if (box.half_width_re() == 0.0 && box.half_width_im() == 0.0)
        return Vector(std::exp(tau * box.center()) * v);
    return std::nullopt;
}

} // namespace detail

/// exp(tau M) v for anti-hermitian M (spectrum on the imaginary axis).
template <typename Op>
Vector cheb_action(const Op& M, const Vector& v, double tau, const EngineSpec& spec,
                   EffortCounter& counter, std::optional<SpectralBox> bounds = std::nullopt)
{
    spec.validate();
    const SpectralBox box = bounds ? *bounds : spectral_bounds(M);
    if (auto r = detail::trivial_action(M, v, tau, box))
        return *r;
    const double scale = std::max(box.radius(), 1.0);
    if (box.half_width_re() > 1e-12 * scale || std::abs(box.center().real()) > 1e-12 * scale)
        throw std::invalid_argument("cheb_action: operator is not anti-hermitian; use the shifted engine");
    const int cap = spec.max_degree ? *spec.max_degree : detail::default_degree_cap(tau, box);
    const cplx c(0.0, box.center().imag());
    Vector out = detail::chebyshev_imaginary_axis(M, v, tau, c, box.half_width_im(), spec.tolerance, cap, counter);
    detail::check_dense(M, v, tau, out, spec);
    return out;
}

/// exp(tau L) v for a general generator, expanded about the real shift
/// alpha = Re(trace L) / dim. Long steps through a wide real spread are split
/// into sub-steps so the expansion stays well conditioned.
template <typename Op>
Vector cheb_action_shifted(const Op& L, const Vector& v, double tau, const EngineSpec& spec,
                           EffortCounter& counter, std::optional<SpectralBox> bounds = std::nullopt)
{
    spec.validate();
    const SpectralBox box = bounds ? *bounds : spectral_bounds(L);
    if (auto r = detail::trivial_action(L, v, tau, box))
        return *r;

    const double alpha = operator_trace(L).real() / static_cast<double>(state_dim(L));
    const double re_spread = std::max(alpha - box.re_lo, box.re_hi - alpha);
    const double im_half = box.half_width_im();
    if (re_spread > 0.5 * im_half && im_half > 0.0)
        warning_handler()("real spectral spread " + std::to_string(re_spread) +
                          " exceeds half the imaginary spread " + std::to_string(im_half) +
                          "; chebyshev expansion quality degrades");

    const bool real_axis = re_spread > im_half;
    constexpr double max_real_exponent = 1.5;
    const double exposure = std::abs(tau) * (real_axis ? im_half : re_spread);
    int substeps = std::max(1, static_cast<int>(std::ceil(exposure / max_real_exponent)));
    if (real_axis)
        substeps = std::max(substeps, static_cast<int>(std::ceil(std::abs(tau) * box.half_width_re() / 20.0)));
    const double sub_tau = tau / substeps;
    const double sub_tol = spec.tolerance / substeps;
    const int cap = spec.max_degree ? *spec.max_degree : detail::default_degree_cap(sub_tau, box);

    Vector w = v;
    for (int s = 0; s < substeps; ++s) {
        if (real_axis) {
            const cplx c(box.center().real(), box.center().imag());
            w = detail::chebyshev_real_axis(L, w, sub_tau, c, box.half_width_re(), sub_tol, cap, counter);
        } else {
            const cplx c(alpha, box.center().imag());
            w = detail::chebyshev_imaginary_axis(L, w, sub_tau, c, im_half, sub_tol, cap, counter);
        }
    }
    detail::check_dense(L, v, tau, w, spec);
    return w;
}

/// Truncated Taylor series on sub-steps of length <= 1 / |M|.
template <typename Op>
Vector taylor_action(const Op& M, const Vector& v, double tau, const EngineSpec& spec,
                     EffortCounter& counter, std::optional<SpectralBox> bounds = std::nullopt)
{
    spec.validate();
    const SpectralBox box = bounds ? *bounds : spectral_bounds(M);
    if (auto r = detail::trivial_action(M, v, tau, box))
        return *r;
    const int substeps = std::max(1, static_cast<int>(std::ceil(std::abs(tau) * box.radius())));
    const double h = tau / substeps;
    const int cap = spec.max_degree ? *spec.max_degree : 60;
    Vector w = v, term(v.size()), next(v.size());
    for (int s = 0; s < substeps; ++s) {
        const double wn = w.norm();
        Vector sum = w;
        term = w;
        int k = 1;
        for (;; ++k) {
            if (k > cap)
                throw NumericalFailure("taylor series did not converge within " + std::to_string(cap) + " terms",
                                       term.norm() / std::max(wn, 1e-300));
            apply(M, term, next);
            counter.add(1);
            term = (h / k) * next;
            sum += term;
            if (term.norm() <= spec.tolerance / substeps * wn)
                break;
        }
        w = std::move(sum);
    }
    return w;
}

/// Dispatch on spec.kind. The dense engine does not count effort.
template <typename Op>
Vector exp_action(const Op& M, const Vector& v, double tau, const EngineSpec& spec,
                  EffortCounter& counter, std::optional<SpectralBox> bounds = std::nullopt)
{
    if (v.size() != state_dim(M))
        throw std::invalid_argument("exp_action: state length " + std::to_string(v.size()) +
                                    " does not match operator dimension " + std::to_string(state_dim(M)));
    switch (spec.kind) {
    case EngineKind::DenseOracle:
        spec.validate();
        if (tau == 0.0 || is_zero(M))
            return v;
        if (state_dim(M) > kMaxDenseExpDim)
            throw std::length_error("dense exponential refused for dimension " + std::to_string(state_dim(M)));
        return expm_dense(Matrix(to_dense(M)), tau) * v;
    case EngineKind::ChebyshevHermitian:
        return cheb_action(M, v, tau, spec, counter, bounds);
    case EngineKind::ChebyshevShifted:
        return cheb_action_shifted(M, v, tau, spec, counter, bounds);
    case EngineKind::TaylorSteps:
        return taylor_action(M, v, tau, spec, counter, bounds);
    }
    throw std::logic_error("exp_action: unknown engine");
}

} // namespace cfet
