#pragma once

// Physical systems: spin in a rotating field (closed and dissipative) and the
// parametrically driven Dicke model, plus their closed-form oracles.

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "cfet/expm.hpp"
#include "cfet/generator.hpp"
#include "cfet/liouvillian.hpp"
#include "cfet/operators.hpp"

namespace cfet
{

/// Linear frequency sweep w(t) from w0 to w1 over [t0, t0 + duration], held
/// constant outside. phase(t) is the integral of w, so a drive written as
/// cos(phase(t)) has instantaneous frequency w(t).
struct FrequencyRamp
{
    double w0 = 0.0;
    double w1 = 0.0;
    double t0 = 0.0;
    double duration = 1.0;

    double omega(double t) const
    {
        const double s = std::clamp((t - t0) / duration, 0.0, 1.0);
        return w0 + (w1 - w0) * s;
    }

    double phase(double t) const
    {
        if (t <= t0)
            return w0 * (t - t0);
        const double tau = std::min(t - t0, duration);
        double ph = w0 * tau + 0.5 * (w1 - w0) * tau * tau / duration;
        if (t - t0 > duration)
            ph += w1 * (t - t0 - duration);
        return ph;
    }

    void validate() const
    {
        if (!(duration > 0.0) || !std::isfinite(w0) || !std::isfinite(w1) || !std::isfinite(t0))
            throw std::invalid_argument("frequency ramp needs finite frequencies and a positive duration");
    }
};

// ---------------------------------------------------------------------------
// spin in a rotating field

struct SpinModelParams
{
    double j = 0.5;
    double delta = 1.0;
    double V = 1.0;
    double omega = 1.0;
    double gamma = 0.0;
    /// Replaces the constant omega when set.
    std::optional<FrequencyRamp> ramp;

    void validate() const
    {
        twice_spin(j);
        for (double x : {delta, V, omega, gamma})
            if (!std::isfinite(x))
                throw std::invalid_argument("spin model parameters must be finite");
        if (gamma < 0.0)
            throw std::invalid_argument("dissipation rate gamma must be >= 0");
        if (ramp)
            ramp->validate();
    }

    /// Angle of the field in the xy plane, 2 omega t for a fixed frequency.
    double field_angle(double t) const { return ramp ? 2.0 * ramp->phase(t) : 2.0 * omega * t; }
};

/// H(t) = 2 delta Jz + 2V cos(2wt) Jx + 2V sin(2wt) Jy.
inline Matrix spin_hamiltonian(const SpinModelParams& p, double t)
{
    const auto s = spin_operators(p.j);
    const double ang = p.field_angle(t);
    return 2.0 * p.delta * s.jz + 2.0 * p.V * (std::cos(ang) * s.jx + std::sin(ang) * s.jy);
}

/// Closed system, acting on state vectors: A(t) = -i H(t).
inline Generator<Matrix> spin_rotating_field(const SpinModelParams& p)
{
    p.validate();
    const auto s = spin_operators(p.j);
    Generator<Matrix> g(Matrix(-kI * 2.0 * p.delta * s.jz));
    g.add(Matrix(-kI * 2.0 * p.V * s.jx), [p](double t) { return std::cos(p.field_angle(t)); });
    g.add(Matrix(-kI * 2.0 * p.V * s.jy), [p](double t) { return std::sin(p.field_angle(t)); });
    return g;
}

/// L(t) = -i[H(t), .] + gamma D[J-], acting on column-stacked density matrices.
inline Generator<LiouvillianForm> dissipative_spin_rotating_field(const SpinModelParams& p)
{
    p.validate();
    const auto s = spin_operators(p.j);
    std::vector<Jump> jumps;
    if (p.gamma > 0.0)
        jumps.push_back({p.gamma, s.jminus});
    Generator<LiouvillianForm> g(LiouvillianForm::lindblad(2.0 * p.delta * s.jz, jumps));
    g.add(LiouvillianForm::hamiltonian(2.0 * p.V * s.jx), [p](double t) { return std::cos(p.field_angle(t)); });
    g.add(LiouvillianForm::hamiltonian(2.0 * p.V * s.jy), [p](double t) { return std::sin(p.field_angle(t)); });
    return g;
}

/// Hamiltonian in the frame co-rotating with the field at angular rate 2w.
inline Matrix spin_frame_hamiltonian(const SpinModelParams& p)
{
    const auto s = spin_operators(p.j);
    return 2.0 * (p.delta - p.omega) * s.jz + 2.0 * p.V * s.jx;
}

/// exp(-2i w t Jz): maps rotating-frame states back to the lab frame.
inline Matrix spin_frame_rotation(const SpinModelParams& p, double t)
{
    const auto s = spin_operators(p.j);
    Matrix R = Matrix::Zero(s.dim(), s.dim());
    for (Index k = 0; k < s.dim(); ++k)
        R(k, k) = std::exp(-kI * 2.0 * p.omega * t * s.jz(k, k).real());
    return R;
}

inline void require_fixed_frequency(const SpinModelParams& p, const char* who)
{
    if (p.ramp)
        throw std::invalid_argument(std::string(who) + ": the rotating-frame solution needs a fixed field frequency");
}

/// Exact |psi(t)> of the closed spin, from |psi(0)> = psi0.
inline Vector spin_exact_state(const SpinModelParams& p, const Vector& psi0, double t)
{
    p.validate();
    require_fixed_frequency(p, "spin_exact_state");
    if (p.gamma != 0.0)
        throw std::invalid_argument("spin_exact_state: only the closed system (gamma = 0) has a state-vector solution");
    if (psi0.size() != twice_spin(p.j) + 1)
        throw std::invalid_argument("spin_exact_state: state has wrong dimension");
    const Matrix U = expm_dense(spin_frame_hamiltonian(p), -kI * t);
    return spin_frame_rotation(p, t) * (U * psi0);
}

/// Exact rho(t) of the dissipative spin for any j, through a dense exponential
/// of the time-independent rotating-frame Liouvillian (D[J-] is frame invariant).
inline Matrix dissipative_spin_exact(const SpinModelParams& p, const Matrix& rho0, double t)
{
    p.validate();
    require_fixed_frequency(p, "dissipative_spin_exact");
    const auto s = spin_operators(p.j);
    if (rho0.rows() != s.dim() || rho0.cols() != s.dim())
        throw std::invalid_argument("dissipative_spin_exact: density matrix has wrong dimension");
    std::vector<Jump> jumps;
    if (p.gamma > 0.0)
        jumps.push_back({p.gamma, s.jminus});
    const Matrix L = lindblad_superop(spin_frame_hamiltonian(p), jumps);
    const Matrix rho_frame = unvec(expm_dense(L, t) * vec(rho0));
    const Matrix R = spin_frame_rotation(p, t);
    return R * rho_frame * R.adjoint();
}

/// Stationary state of the spin-1/2 in the rotating frame.
inline Matrix spin_steady_state(double delta, double V, double omega, double gamma)
{
    if (!(gamma > 0.0))
        throw std::invalid_argument("spin_steady_state: needs gamma > 0");
    const double d = delta - omega;
    const double n = 4.0 * d * d + gamma * gamma + 2.0 * V * V;
    Matrix r(2, 2);
    r(0, 0) = V * V;
    r(0, 1) = -(2.0 * d + kI * gamma) * V;
    r(1, 0) = -(2.0 * d - kI * gamma) * V;
    r(1, 1) = 4.0 * d * d + gamma * gamma + V * V;
    return r / n;
}

inline double spin_jz_steady(double delta, double V, double omega, double gamma)
{
    const double d = delta - omega;
    return V * V / (4.0 * d * d + gamma * gamma + 2.0 * V * V) - 0.5;
}

/// Resonant (w = delta) spin-1/2: eigenvalues and eigenmatrices of the
/// rotating-frame Liouvillian and the decomposition of rho(0) = |+1/2><+1/2|.
struct SpinAnalytic
{
    double gamma = 0.0;
    double V = 0.0;
    cplx xi;           // sqrt(gamma^2 - 16 V^2)
    double omega_tilde; // sqrt(16 V^2 - gamma^2) / 2, NaN when overdamped
    std::array<cplx, 3> lambda;
    std::array<Matrix, 3> modes;
    Matrix rho_inf;
    cplx c_plus;  // weight of rho2 + rho3
    cplx c_minus; // weight of rho2 - rho3
};

inline SpinAnalytic spin_resonance_modes(double gamma, double V)
{
    if (!(gamma > 0.0) || !(V > 0.0) || !std::isfinite(gamma) || !std::isfinite(V))
        throw std::invalid_argument("spin_resonance_modes: needs gamma > 0 and V > 0");
    SpinAnalytic a;
    a.gamma = gamma;
    a.V = V;
    const double disc = gamma * gamma - 16.0 * V * V;
    a.xi = std::sqrt(cplx(disc, 0.0));
    a.omega_tilde = disc < 0.0 ? 0.5 * std::sqrt(-disc) : std::numeric_limits<double>::quiet_NaN();
    a.lambda = {cplx(-gamma), -(3.0 * gamma + a.xi) / 2.0, -(3.0 * gamma - a.xi) / 2.0};

    Matrix r1(2, 2);
    r1 << 0.0, 1.0, 1.0, 0.0;
    auto mode = [&](cplx g) {
        Matrix m(2, 2);
        m << 1.0, -kI * g / (4.0 * V), kI * g / (4.0 * V), -1.0;
        return m;
    };
    a.modes = {r1, mode(gamma - a.xi), mode(gamma + a.xi)};
    a.rho_inf = spin_steady_state(1.0, V, 1.0, gamma);
    const double n = 2.0 * V * V + gamma * gamma;
    a.c_plus = (V * V + gamma * gamma) / (2.0 * n);
    a.c_minus = (gamma * gamma * gamma + 5.0 * gamma * V * V) / (2.0 * a.xi * n);
    return a;
}

/// Underdamped resonant <Jz(t)> starting from <Jz(0)> = +1/2.
inline double spin_jz_analytic(double t, double gamma, double V)
{
    if (!(gamma >= 0.0) || !(V > 0.0) || !(gamma < 4.0 * V))
        throw std::invalid_argument("spin_jz_analytic: needs the underdamped regime 0 <= gamma < 4V");
    const double g2 = gamma * gamma, v2 = V * V;
    const double wt = 0.5 * std::sqrt(16.0 * v2 - g2);
    const double n = 2.0 * v2 + g2;
    return -g2 / (2.0 * n) +
           ((v2 + g2) * std::cos(wt * t) - (g2 * gamma + 5.0 * gamma * v2) * std::sin(wt * t) / (2.0 * wt)) / n *
               std::exp(-1.5 * gamma * t);
}

// ---------------------------------------------------------------------------
// Dicke model

struct DickeParams
{
    double j = 0.5;
    int n_max = 12;
    double delta = 1.0;
    double Omega = 1.0;
    double lambda0 = 1.0;
    double dlambda = 0.5;
    double omega_p = 2.0;
    double kappa = 0.01;
    /// Replaces the constant omega_p when set.
    std::optional<FrequencyRamp> ramp;

    void validate() const
    {
        twice_spin(j);
        if (n_max < 1)
            throw std::invalid_argument("photon cutoff n_max must be >= 1");
        for (double x : {delta, Omega, lambda0, dlambda, omega_p, kappa})
            if (!std::isfinite(x))
                throw std::invalid_argument("Dicke parameters must be finite");
        if (kappa < 0.0)
            throw std::invalid_argument("cavity loss rate kappa must be >= 0");
        if (ramp)
            ramp->validate();
        checked_product_dim(twice_spin(j) + 1, n_max + 1);
    }

    double drive_phase(double t) const { return ramp ? ramp->phase(t) : omega_p * t; }
    double lambda(double t) const { return lambda0 + dlambda * std::cos(drive_phase(t)); }
    Index dim() const { return (twice_spin(j) + 1) * (n_max + 1); }
};

/// Operators on spin (x) photon space.
struct DickeOperators
{
    Matrix jx, jy, jz, jplus, jminus;
    Matrix a, a_dag, n;
    /// (a + a^+)(J+ + J-)
    Matrix coupling;

    Index dim() const { return a.rows(); }
};

inline DickeOperators dicke_operators(double j, int n_max)
{
    const auto s = spin_operators(j);
    const auto b = boson_operators(n_max);
    checked_product_dim(s.dim(), b.dim());
    const Matrix is = identity(s.dim()), ib = identity(b.dim());
    DickeOperators o;
    o.jx = kron(s.jx, ib);
    o.jy = kron(s.jy, ib);
    o.jz = kron(s.jz, ib);
    o.jplus = kron(s.jplus, ib);
    o.jminus = kron(s.jminus, ib);
    o.a = kron(is, b.a);
    o.a_dag = kron(is, b.a_dag);
    o.n = o.a_dag * o.a;
    o.coupling = (o.a + o.a_dag) * (o.jplus + o.jminus);
    return o;
}

/// H = delta Jz + Omega a^+a + lambda (a + a^+)(J+ + J-).
inline Matrix dicke_hamiltonian(const DickeParams& p, double lambda)
{
    p.validate();
    const auto o = dicke_operators(p.j, p.n_max);
    return p.delta * o.jz + p.Omega * o.n + lambda * o.coupling;
}

/// Constant part L[H(lambda0)] + kappa D[a]; one modulated part -i[coupling, .]
/// with weight dlambda cos(wp t).
inline Generator<LiouvillianForm> dicke_generator(const DickeParams& p)
{
    p.validate();
    const auto o = dicke_operators(p.j, p.n_max);
    std::vector<Jump> jumps;
    if (p.kappa > 0.0)
        jumps.push_back({p.kappa, o.a});
    const Matrix H0 = p.delta * o.jz + p.Omega * o.n + p.lambda0 * o.coupling;
    Generator<LiouvillianForm> g(LiouvillianForm::lindblad(H0, jumps));
    if (p.dlambda != 0.0)
        g.add(LiouvillianForm::hamiltonian(o.coupling),
              [p](double t) { return p.dlambda * std::cos(p.drive_phase(t)); });
    return g;
}

/// |-j> (x) |0>, column-stacked density matrix.
inline Vector dicke_ground_state(const DickeParams& p)
{
    p.validate();
    const Index d = p.dim();
    const Index k = static_cast<Index>(twice_spin(p.j)) * (p.n_max + 1);
    Matrix rho = Matrix::Zero(d, d);
    rho(k, k) = 1.0;
    return vec(rho);
}

struct DickeLevels
{
    double E1p, E1m, E2p, E2m, E20;
};

/// Weak-coupling level energies above |-j, 0> at delta = Omega.
inline DickeLevels dicke_levels(double j, double Omega, double lambda0)
{
    twice_spin(j);
    const double s1 = std::sqrt(2.0 * j), s2 = std::sqrt(8.0 * j - 2.0);
    return {Omega + s1 * lambda0, Omega - s1 * lambda0, 2.0 * Omega + s2 * lambda0, 2.0 * Omega - s2 * lambda0,
            2.0 * Omega};
}

enum class Branch
{
    Upper,
    Lower
};

struct TransitionSet
{
    std::array<double, 4> omega{}; // increasing
    int forbidden = 0;             // index of the parity-forbidden line
};

/// Emission lines when the drive populates E2+ (upper) or E2- (lower).
inline TransitionSet transition_energies(double j, double Omega, double lambda0, Branch branch)
{
    twice_spin(j);
    const double s1 = std::sqrt(2.0 * j), s2 = std::sqrt(8.0 * j - 2.0);
    TransitionSet t;
    if (branch == Branch::Upper) {
        t.omega = {Omega - s1 * lambda0, Omega + lambda0 * (s2 - s1), Omega + s1 * lambda0,
                   Omega + lambda0 * (s2 + s1)};
        t.forbidden = 3;
    } else {
        t.omega = {Omega - lambda0 * (s2 + s1), Omega - s1 * lambda0, Omega - lambda0 * (s2 - s1),
                   Omega + s1 * lambda0};
        t.forbidden = 0;
    }
    return t;
}

} // namespace cfet
