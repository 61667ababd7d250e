#pragma once

// Expectation values, periodic steady states, period averages, two-time
// correlations (quantum regression) and emission spectra.

#include <algorithm>
#include <atomic>
#include <cmath>
#include <numbers>
#include <sstream>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include "cfet/harmonic_balance.hpp"
#include "cfet/models.hpp"
#include "cfet/propagators.hpp"

namespace cfet
{

// ---------------------------------------------------------------------------
// expectation values

inline cplx expectation(const Matrix& O, const Matrix& rho)
{
    if (O.rows() != O.cols() || rho.rows() != rho.cols() || O.rows() != rho.rows())
        throw std::invalid_argument("expectation: operator is " + std::to_string(O.rows()) + "x" +
                                    std::to_string(O.cols()) + ", density matrix " + std::to_string(rho.rows()) +
                                    "x" + std::to_string(rho.cols()));
    // trace(O rho) without forming the product
    return (O.transpose().cwiseProduct(rho)).sum();
}

inline cplx expectation(const Matrix& O, const Vector& rho_vec)
{
    if (rho_vec.size() != O.rows() * O.rows())
        throw std::invalid_argument("expectation: vectorized density matrix has wrong length");
    return expectation(O, Matrix(Eigen::Map<const Matrix>(rho_vec.data(), O.rows(), O.rows())));
}

/// 1/2 + <Jz>/j; ranges over [-1/2, 3/2].
inline double population_inversion_paper(const Matrix& rho, const Matrix& jz, double j)
{
    return 0.5 + expectation(jz, rho).real() / (0.5 * twice_spin(j));
}

/// 1/2 + <Jz>/(2j); 0 for |-j>, 1 for |+j>.
inline double population_inversion_unit(const Matrix& rho, const Matrix& jz, double j)
{
    return 0.5 + expectation(jz, rho).real() / twice_spin(j);
}

/// Occupation of every Fock level of a spin (x) photon density matrix.
inline std::vector<double> fock_occupations(const Matrix& rho, double j, int n_max)
{
    const Index ds = twice_spin(j) + 1, db = n_max + 1;
    if (rho.rows() != ds * db)
        throw std::invalid_argument("fock_occupations: density matrix does not match (j, n_max)");
    std::vector<double> p(db, 0.0);
    for (Index m = 0; m < ds; ++m)
        for (Index n = 0; n < db; ++n)
            p[n] += rho(m * db + n, m * db + n).real();
    return p;
}

inline std::string sci(double x)
{
    std::ostringstream os;
    os.precision(3);
    os << std::scientific << x;
    return os.str();
}

// ---------------------------------------------------------------------------
// propagation helpers

/// Evolves x from t0 to t1 in the fewest equal steps not longer than scheme.dt.
template <typename Op>
Vector evolve(const Generator<Op>& gen, Vector x, double t0, double t1, const SchemeSpec& scheme,
              const EngineSpec& engine, EffortCounter& counter)
{
    if (t1 <= t0)
        return x;
    const auto n = static_cast<long>(std::max(1.0, std::ceil((t1 - t0) / scheme.dt - 1e-9)));
    const double h = (t1 - t0) / static_cast<double>(n);
    for (long i = 0; i < n; ++i)
        x = step(scheme, gen, t0 + static_cast<double>(i) * h, h, x, engine, counter);
    return x;
}

// ---------------------------------------------------------------------------
// periodic steady state

struct SettleOptions
{
    double tol = 1e-9;
    int max_periods = 2000;
    double t0 = 0.0;
};

struct SettleResult
{
    Vector rho;   // stroboscopic fixed point at time t
    double t = 0.0;
    int periods = 0;
    double residual = 0.0;
    std::vector<double> residuals; // per period
    std::uint64_t n_matvec = 0;
};

/// Propagates whole periods 2 pi / wp until the max-entry change over one
/// period drops below tol.
template <typename Op>
SettleResult settle_to_periodic_steady_state(const Generator<Op>& gen, const Vector& rho0, double wp,
                                             const SchemeSpec& scheme, const EngineSpec& engine,
                                             const SettleOptions& opts = {})
{
    if (!(wp > 0.0) || !std::isfinite(wp))
        throw std::invalid_argument("settle: modulation frequency must be positive");
    if (!(opts.tol > 0.0) || opts.max_periods < 1)
        throw std::invalid_argument("settle: tol must be positive and max_periods >= 1");
    scheme.validate();
    engine.validate();
    const double T = 2.0 * std::numbers::pi / wp;
    SettleResult r;
    EffortCounter counter;
    Vector x = rho0;
    double t = opts.t0;
    for (int k = 1; k <= opts.max_periods; ++k) {
        Vector y = evolve(gen, x, t, t + T, scheme, engine, counter);
        t = opts.t0 + k * T;
        r.residual = error_max(y, x);
        r.residuals.push_back(r.residual);
        x = std::move(y);
        r.periods = k;
        if (!std::isfinite(r.residual))
            throw NumericalFailure("settle: state became non-finite after " + std::to_string(k) + " periods",
                                   r.residual);
        if (r.residual < opts.tol) {
            r.rho = std::move(x);
            r.t = t;
            r.n_matvec = counter.n_matvec;
            return r;
        }
    }
    throw NumericalFailure("settle: no periodic steady state after " + std::to_string(opts.max_periods) +
                               " periods (last residual " + sci(r.residual) + ")",
                           r.residual);
}

// ---------------------------------------------------------------------------
// period averages

enum class Quantity
{
    Iz,
    Nb
};

inline const char* to_string(Quantity q) { return q == Quantity::Iz ? "I_z" : "N_b"; }

struct PeriodAverage
{
    Quantity quantity = Quantity::Nb;
    double value = 0.0;
    double period = 0.0;
    double t_start = 0.0;
};

/// Trapezoidal average of Re<O_i> over one period starting at t_start, with
/// n_samples uniform subintervals.
template <typename Op>
std::vector<double> period_average(const Generator<Op>& gen, const Vector& rho, double t_start, double wp,
                                   const std::vector<Matrix>& observables, int n_samples, const SchemeSpec& scheme,
                                   const EngineSpec& engine, EffortCounter& counter)
{
    if (n_samples < 1 || !(wp > 0.0))
        throw std::invalid_argument("period_average: needs n_samples >= 1 and wp > 0");
    const double T = 2.0 * std::numbers::pi / wp;
    std::vector<double> acc(observables.size(), 0.0);
    Vector x = rho;
    for (int s = 0; s <= n_samples; ++s) {
        const double t = t_start + T * s / n_samples;
        if (s > 0)
            x = evolve(gen, x, t_start + T * (s - 1) / n_samples, t, scheme, engine, counter);
        const double w = (s == 0 || s == n_samples) ? 0.5 : 1.0;
        for (std::size_t i = 0; i < observables.size(); ++i)
            acc[i] += w * expectation(observables[i], x).real();
    }
    for (double& a : acc)
        a /= n_samples;
    return acc;
}

struct DickeAverages
{
    PeriodAverage iz;
    PeriodAverage nb;
};

/// I_z (unit normalization) and N_b averaged over one period.
inline DickeAverages period_averaged(const Generator<LiouvillianForm>& gen, const DickeParams& p, const Vector& rho,
                                     double t_start, int n_samples, const SchemeSpec& scheme,
                                     const EngineSpec& engine, EffortCounter& counter)
{
    const auto o = dicke_operators(p.j, p.n_max);
    const auto v = period_average(gen, rho, t_start, p.omega_p, {o.jz, o.n}, n_samples, scheme, engine, counter);
    const double T = 2.0 * std::numbers::pi / p.omega_p;
    return {{Quantity::Iz, 0.5 + v[0] / twice_spin(p.j), T, t_start}, {Quantity::Nb, v[1], T, t_start}};
}

// ---------------------------------------------------------------------------
// correlation function and spectrum

struct SpectrumSeries
{
    double dtau = 0.0;
    std::vector<double> tau;
    std::vector<cplx> s_tau;
    /// S(tau) of each phase sample, kept when requested.
    std::vector<std::vector<cplx>> s_tau_phase;

    std::vector<double> omega;
    std::vector<double> s_omega;
    double s_tot = 0.0;
    /// Largest |imaginary part| of the two-sided (conjugate-symmetric) estimator.
    double imag_residual = 0.0;
    std::uint64_t n_matvec = 0;
};

struct CorrelationOptions
{
    double tau_max = 0.0;
    double dtau = 0.0;
    int n_phase = 16;
    double t_start = 0.0;
    int threads = 1;
    bool keep_phases = false;
    /// When S(tau_max) has not decayed below decay_ratio |S(0)|, keep
    /// propagating every phase sample until it has, up to tau_limit.
    bool extend_to_decay = false;
    double tau_limit = 0.0;
    double decay_ratio = 1e-3;
};

/// Default grid: dtau = min(2 pi / (40 Omega_max), T_p / 64), tau_max = max(10 / kappa, 20 T_p).
inline CorrelationOptions default_correlation_grid(double omega_max, double wp, double kappa)
{
    if (!(omega_max > 0.0) || !(wp > 0.0) || !(kappa > 0.0))
        throw std::invalid_argument("default_correlation_grid: frequencies and kappa must be positive");
    const double T = 2.0 * std::numbers::pi / wp;
    CorrelationOptions o;
    o.dtau = std::min(2.0 * std::numbers::pi / (40.0 * omega_max), T / 64.0);
    o.tau_max = std::max(10.0 / kappa, 20.0 * T);
    return o;
}

/// tau_max needed for |S(tau_max)| < ratio |S(0)|, extrapolated from the decay
/// of the envelope over the second half of the series.
inline double required_tau_max(const std::vector<double>& tau, const std::vector<cplx>& s, double ratio = 1e-3)
{
    const std::size_t n = s.size();
    if (n < 8)
        return 2.0 * tau.back();
    auto envelope = [&](std::size_t lo, std::size_t hi) {
        double m = 0.0;
        for (std::size_t k = lo; k < hi; ++k)
            m = std::max(m, std::abs(s[k]));
        return m;
    };
    const std::size_t w = std::max<std::size_t>(n / 16, 1);
    const double e1 = envelope(n / 2 - w, n / 2), e2 = envelope(n - w, n);
    const double span = tau[n - 1] - tau[n / 2 - 1];
    const double s0 = std::abs(s[0]);
    if (!(e1 > e2) || !(e2 > 0.0) || s0 == 0.0)
        return 2.0 * tau.back();
    const double rate = std::log(e1 / e2) / span;
    return tau.back() + std::log(e2 / (ratio * s0)) / rate;
}

/// S(tau) = < tr[a^+ Phi(t'+tau <- t') (a rho(t'))] > averaged over n_phase
/// points t' of one period. rho is the periodic state at t_start.
template <typename Op>
SpectrumSeries correlation_function(const Generator<Op>& gen, const Vector& rho, double wp, const Matrix& a,
                                    const CorrelationOptions& opts, const SchemeSpec& scheme,
                                    const EngineSpec& engine)
{
    if (!(opts.dtau > 0.0) || !(opts.tau_max >= opts.dtau) || opts.n_phase < 1 || !(wp > 0.0))
        throw std::invalid_argument("correlation_function: needs dtau > 0, tau_max >= dtau, n_phase >= 1, wp > 0");
    if (opts.extend_to_decay && !(opts.tau_limit >= opts.tau_max && opts.decay_ratio > 0.0))
        throw std::invalid_argument("correlation_function: extension needs tau_limit >= tau_max and decay_ratio > 0");
    const double ratio = opts.tau_max / opts.dtau;
    const auto n_tau = static_cast<std::size_t>(std::llround(ratio));
    if (std::abs(ratio - static_cast<double>(n_tau)) > 1e-6 * ratio)
        throw std::invalid_argument("correlation_function: tau_max must be a multiple of dtau (uniform grid)");
    const Index d = a.rows();
    if (d * d != rho.size())
        throw std::invalid_argument("correlation_function: operator and state dimensions differ");
    const double T = 2.0 * std::numbers::pi / wp;
    const int M = opts.n_phase;

    // a rho(t') at the phase points
    std::vector<Vector> x(M);
    EffortCounter c0;
    Vector r = rho;
    for (int m = 0; m < M; ++m) {
        if (m > 0)
            r = evolve(gen, r, opts.t_start + T * (m - 1) / M, opts.t_start + T * m / M, scheme, engine, c0);
        x[m] = vec(a * unvec(r));
    }

    const Matrix a_dag_t = a.adjoint().transpose();
    auto trace_adag = [&](const Vector& v) { return a_dag_t.cwiseProduct(Eigen::Map<const Matrix>(v.data(), d, d)).sum(); };
    std::vector<std::vector<cplx>> per(M);
    for (int m = 0; m < M; ++m)
        per[m].push_back(trace_adag(x[m]));
    std::vector<std::uint64_t> effort(M, 0);
    std::vector<std::string> errors(M);
    std::vector<double> residuals(M, 0.0);

    // advances phase m from sample k0 to sample k1
    auto run = [&](int m, std::size_t k0, std::size_t k1) {
        try {
            EffortCounter cnt;
            const double tm = opts.t_start + T * m / M;
            for (std::size_t k = k0 + 1; k <= k1; ++k) {
                x[m] = evolve(gen, x[m], tm + opts.dtau * (k - 1), tm + opts.dtau * k, scheme, engine, cnt);
                per[m].push_back(trace_adag(x[m]));
            }
            effort[m] += cnt.n_matvec;
        } catch (const NumericalFailure& e) {
            errors[m] = e.what();
            residuals[m] = e.residual();
        }
    };
    auto run_all = [&](std::size_t k0, std::size_t k1) {
        const int nthreads = std::clamp(opts.threads, 1, M);
        if (nthreads == 1) {
            for (int m = 0; m < M; ++m)
                run(m, k0, k1);
        } else {
            std::atomic<int> next{0};
            std::vector<std::thread> pool;
            for (int w = 0; w < nthreads; ++w)
                pool.emplace_back([&] {
                    for (int m = next++; m < M; m = next++)
                        run(m, k0, k1);
                });
            for (auto& th : pool)
                th.join();
        }
        for (int m = 0; m < M; ++m)
            if (!errors[m].empty())
                throw NumericalFailure("correlation_function, phase sample " + std::to_string(m) + ": " + errors[m],
                                       residuals[m]);
    };

    SpectrumSeries s;
    s.dtau = opts.dtau;
    std::size_t done = 0, target = n_tau;
    const auto limit = static_cast<std::size_t>(std::floor(opts.tau_limit / opts.dtau + 1e-9));
    for (;;) {
        run_all(done, target);
        done = target;
        // periodic trapezoid over the phase = plain mean, reduced in index order
        s.s_tau.assign(done + 1, 0.0);
        for (int m = 0; m < M; ++m)
            for (std::size_t k = 0; k <= done; ++k)
                s.s_tau[k] += per[m][k] / static_cast<double>(M);
        s.tau.resize(done + 1);
        for (std::size_t k = 0; k <= done; ++k)
            s.tau[k] = opts.dtau * static_cast<double>(k);
        if (!opts.extend_to_decay || std::abs(s.s_tau.back()) < opts.decay_ratio * std::abs(s.s_tau.front()) ||
            done >= limit)
            break;
        const double need = 1.05 * required_tau_max(s.tau, s.s_tau, opts.decay_ratio);
        target = std::min(limit, std::max(done + 1, static_cast<std::size_t>(std::ceil(need / opts.dtau))));
    }
    s.n_matvec = c0.n_matvec;
    for (auto e : effort)
        s.n_matvec += e;
    if (opts.keep_phases)
        s.s_tau_phase = std::move(per);
    return s;
}

/// Average over every stride-th phase sample of a series kept with keep_phases.
inline std::vector<cplx> phase_subsample_average(const SpectrumSeries& s, int stride)
{
    if (s.s_tau_phase.empty() || stride < 1 || s.s_tau_phase.size() % stride != 0)
        throw std::invalid_argument("phase_subsample_average: needs kept phases and a dividing stride");
    std::vector<cplx> out(s.s_tau.size(), 0.0);
    const double n = static_cast<double>(s.s_tau_phase.size() / stride);
    for (std::size_t m = 0; m < s.s_tau_phase.size(); m += stride)
        for (std::size_t k = 0; k < out.size(); ++k)
            out[k] += s.s_tau_phase[m][k] / n;
    return out;
}

/// sum_k w_k f_k e^{-i omega k h} with trapezoid weights. The phase factor is
/// advanced by multiplication and re-anchored every 256 samples.
inline cplx trapezoid_transform(const std::vector<cplx>& f, double omega, double h)
{
    const std::size_t n = f.size();
    const cplx step = std::exp(-kI * (omega * h));
    cplx sum = 0.0, ph = 1.0;
    for (std::size_t k = 0; k < n; ++k) {
        if (k % 256 == 0)
            ph = std::exp(-kI * (omega * h * static_cast<double>(k)));
        const double w = (k == 0 || k + 1 == n) ? 0.5 : 1.0;
        sum += w * f[k] * ph;
        ph *= step;
    }
    return sum;
}

/// S(w) = (1/pi) Re int_0^tau_max S(tau) e^{-i w tau} dtau by the trapezoid
/// rule; s_tot integrates S(w) over the w >= 0 part of the grid.
inline void spectrum(SpectrumSeries& s, const std::vector<double>& omega)
{
    const std::size_t n = s.s_tau.size();
    if (n < 2 || s.tau.size() != n)
        throw std::invalid_argument("spectrum: needs at least two correlation samples");
    const double s0 = std::abs(s.s_tau.front()), send = std::abs(s.s_tau.back());
    if (!(send < 1e-3 * s0)) {
        const double need = required_tau_max(s.tau, s.s_tau);
        throw NumericalFailure("spectrum: |S(tau_max)| = " + sci(send) + " is not below 1e-3 |S(0)| = " + sci(1e-3 * s0) +
                                   "; need tau_max of about " + std::to_string(need),
                               send / std::max(s0, 1e-300));
    }
    s.omega = omega;
    s.s_omega.assign(omega.size(), 0.0);
    s.imag_residual = 0.0;
    const double h = s.dtau;
    for (std::size_t i = 0; i < omega.size(); ++i) {
        s.s_omega[i] = (trapezoid_transform(s.s_tau, omega[i], h) * h).real() / std::numbers::pi;
        // two-sided sum with S(-tau) = S(tau)^*: only the tau = 0 term can leave an imaginary part
        s.imag_residual = std::max(s.imag_residual, std::abs(s.s_tau[0].imag()) * h / (2.0 * std::numbers::pi));
    }
    s.s_tot = 0.0;
    for (std::size_t i = 1; i < omega.size(); ++i) {
        if (omega[i - 1] < 0.0)
            continue;
        s.s_tot += 0.5 * (s.s_omega[i] + s.s_omega[i - 1]) * (omega[i] - omega[i - 1]);
    }
}

/// Uniform grid of n points on [lo, hi].
inline std::vector<double> linspace(double lo, double hi, std::size_t n)
{
    std::vector<double> g(n);
    for (std::size_t i = 0; i < n; ++i)
        g[i] = n == 1 ? lo : lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(n - 1);
    return g;
}

/// Integral of S(w) over one full period 2 pi / dtau of the discrete transform
/// (the whole axis the grid can resolve); equals Re S(0) for the trapezoid sum.
/// The periodic trapezoid over n_omega points is exact once n_omega exceeds
/// the number of tau samples, which is the default (n_omega = 0).
inline double full_axis_integral(const SpectrumSeries& s, std::size_t n_omega = 0)
{
    if (s.s_tau.size() < 2 || !(s.dtau > 0.0))
        throw std::invalid_argument("full_axis_integral: needs a correlation series");
    if (n_omega == 0)
        n_omega = s.s_tau.size() + 1;
    const double half = std::numbers::pi / s.dtau;
    auto g = linspace(-half, half, n_omega + 1);
    g.pop_back();
    double total = 0.0;
    for (double w : g)
        total += (trapezoid_transform(s.s_tau, w, s.dtau) * s.dtau).real() / std::numbers::pi;
    return total * (2.0 * half / static_cast<double>(n_omega));
}

struct Peak
{
    double omega = 0.0;
    double height = 0.0;
    double prominence = 0.0;
};

/// Local maxima with topographic prominence >= min_prominence, positions and
/// heights refined by a parabola through the three points around each maximum.
inline std::vector<Peak> find_peaks(const std::vector<double>& omega, const std::vector<double>& s,
                                    double min_prominence)
{
    if (omega.size() != s.size())
        throw std::invalid_argument("find_peaks: grid and values differ in length");
    std::vector<Peak> out;
    const std::size_t n = s.size();
    if (n < 3)
        return out;
    for (std::size_t i = 1; i + 1 < n; ++i) {
        if (!(s[i] > s[i - 1] && s[i] >= s[i + 1]))
            continue;
        double left_min = s[i], right_min = s[i];
        std::size_t k = i;
        while (k > 0 && s[k - 1] <= s[i]) {
            --k;
            left_min = std::min(left_min, s[k]);
        }
        const bool left_edge = (k == 0);
        k = i;
        while (k + 1 < n && s[k + 1] <= s[i]) {
            ++k;
            right_min = std::min(right_min, s[k]);
        }
        const bool right_edge = (k + 1 == n);
        double base;
        if (left_edge && right_edge)
            base = std::min(left_min, right_min);
        else if (left_edge)
            base = right_min;
        else if (right_edge)
            base = left_min;
        else
            base = std::max(left_min, right_min);
        const double prom = s[i] - base;
        if (prom < min_prominence)
            continue;

        const double h = omega[i + 1] - omega[i];
        const double y0 = s[i - 1], y1 = s[i], y2 = s[i + 1];
        const double den = y0 - 2.0 * y1 + y2;
        double dx = 0.0, peak = y1;
        if (den < 0.0) {
            dx = 0.5 * (y0 - y2) / den;
            peak = y1 - 0.25 * (y0 - y2) * dx;
        }
        out.push_back({omega[i] + dx * h, peak, prom});
    }
    return out;
}

// ---------------------------------------------------------------------------
// photon cutoff

struct CutoffChoice
{
    int n_max = 0;
    double top_occupation = 0.0; // occupation of the two highest Fock levels
    double iz_shift = 0.0;       // |I_z(n_max + 5) - I_z(n_max)|
    double nb_shift = 0.0;
    bool verified = false;
};

struct DickeSteadyState
{
    HarmonicBalanceResult guess;
    SettleResult settle;
    DickeAverages averages;
};

/// Settles the Dicke model to its periodic state (starting from the harmonic
/// balance solution, or from |-j,0> when harmonics < 0) and averages I_z and N_b over the next period.
inline DickeSteadyState dicke_steady_state(const DickeParams& p, const SchemeSpec& scheme, const EngineSpec& engine,
                                           const SettleOptions& settle = {}, int n_samples = 64,
                                           int harmonics = 6)
{
    const auto gen = dicke_generator(p);
    DickeSteadyState out;
    Vector start = dicke_ground_state(p);
    if (harmonics >= 0) {
        out.guess = harmonic_balance_state(gen, p.omega_p, settle.t0, harmonics);
        start = out.guess.rho;
    }
    out.settle = settle_to_periodic_steady_state(gen, start, p.omega_p, scheme, engine, settle);
    EffortCounter c;
    out.averages = period_averaged(gen, p, out.settle.rho, out.settle.t, n_samples, scheme, engine, c);
    out.settle.n_matvec += c.n_matvec;
    return out;
}

/// Smallest n_max >= n_start whose periodic state leaves less than threshold
/// in the top two Fock levels; then checks I_z and N_b against n_max + 5.
inline CutoffChoice choose_photon_cutoff(DickeParams p, const SchemeSpec& scheme, const EngineSpec& engine,
                                         const SettleOptions& settle = {}, int n_start = 2, int n_limit = 60,
                                         double threshold = 1e-8, double shift_tol = 1e-6)
{
    CutoffChoice c;
    DickeSteadyState base;
    for (int n = std::max(n_start, 1); n <= n_limit; ++n) {
        p.n_max = n;
        base = dicke_steady_state(p, scheme, engine, settle);
        const auto occ = fock_occupations(unvec(base.settle.rho), p.j, n);
        c.top_occupation = occ[n] + occ[n - 1];
        c.n_max = n;
        if (c.top_occupation < threshold)
            break;
    }
    if (!(c.top_occupation < threshold))
        throw NumericalFailure("choose_photon_cutoff: top Fock levels still hold " +
                                   sci(c.top_occupation) + " at n_max = " + std::to_string(n_limit),
                               c.top_occupation);
    p.n_max = c.n_max + 5;
    const auto big = dicke_steady_state(p, scheme, engine, settle);
    c.iz_shift = std::abs(big.averages.iz.value - base.averages.iz.value);
    c.nb_shift = std::abs(big.averages.nb.value - base.averages.nb.value);
    c.verified = c.iz_shift < shift_tol && c.nb_shift < shift_tol;
    return c;
}

} // namespace cfet
