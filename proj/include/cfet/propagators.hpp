#pragma once

// Time steppers for x' = A(t) x: the middle-point rule, two fourth-order
// commutator-free exponential propagators (CFETs), the split form of the
// optimized CFET, classical RK4 and a dense fourth-order Magnus step.
//
// CFET products are written with the latest-time factor on the left. They are
// applied to the state right factor first, so the combination weighted towards
// the beginning of the step acts first.

#include <array>
#include <cmath>
#include <optional>
#include <string>
#include <vector>

#include "cfet/expm.hpp"
#include "cfet/generator.hpp"

namespace cfet
{

enum class SchemeKind
{
    MiddlePoint,
    Cfet4Simple,
    Cfet4Opt,
    Cfet4OptSplit,
    Rk4,
    Magnus4Taylor,
};

inline const char* to_string(SchemeKind k)
{
    switch (k) {
    case SchemeKind::MiddlePoint: return "middle";
    case SchemeKind::Cfet4Simple: return "cfet4-simple";
    case SchemeKind::Cfet4Opt: return "cfet4-opt";
    case SchemeKind::Cfet4OptSplit: return "cfet4-opt-split";
    case SchemeKind::Rk4: return "rk4";
    case SchemeKind::Magnus4Taylor: return "magnus4";
    }
    return "?";
}

inline SchemeKind scheme_from_string(const std::string& s)
{
    for (auto k : {SchemeKind::MiddlePoint, SchemeKind::Cfet4Simple, SchemeKind::Cfet4Opt,
                   SchemeKind::Cfet4OptSplit, SchemeKind::Rk4, SchemeKind::Magnus4Taylor})
        if (s == to_string(k))
            return k;
    throw std::invalid_argument("unknown scheme '" + s + "'");
}

struct Cfet4SimpleCoefficients
{
    double g1, g2, x1, x2;

    static Cfet4SimpleCoefficients standard()
    {
        const double s3 = std::sqrt(3.0);
        return {(3.0 - 2.0 * s3) / 12.0, (3.0 + 2.0 * s3) / 12.0, 0.5 - s3 / 6.0, 0.5 + s3 / 6.0};
    }
};

struct Cfet4OptCoefficients
{
    double x1, x2, x3;
    double g1, g2, g3, g4, g5;

    static Cfet4OptCoefficients standard()
    {
        const double r = std::sqrt(3.0 / 20.0);
        const double q = 10.0 / 87.0 * std::sqrt(5.0 / 3.0);
        return {0.5 - r, 0.5, 0.5 + r, 37.0 / 240.0 - q, -1.0 / 30.0, 37.0 / 240.0 + q, -11.0 / 360.0, 23.0 / 45.0};
    }

    /// Row r holds the weights of A(x_1 dt), A(x_2 dt), A(x_3 dt) in factor r,
    /// factors listed left to right.
    std::array<std::array<double, 3>, 3> rows() const
    {
        return {{{g1, g2, g3}, {g4, g5, g4}, {g3, g2, g1}}};
    }
};

struct Cfet4SplitCoefficients
{
    double dt1, dt2; // fractions of the step
    double h1, h2, h3, h4, h5;

    static Cfet4SplitCoefficients standard()
    {
        const double q = 400.0 / 957.0 * std::sqrt(5.0 / 3.0);
        return {11.0 / 40.0, 9.0 / 20.0, 37.0 / 66.0 - q, -4.0 / 33.0, 37.0 / 66.0 + q, -11.0 / 162.0, 92.0 / 81.0};
    }
};

struct SchemeSpec
{
    SchemeKind kind = SchemeKind::Cfet4Opt;
    double dt = 0.01;
    Cfet4SimpleCoefficients simple = Cfet4SimpleCoefficients::standard();
    Cfet4OptCoefficients opt = Cfet4OptCoefficients::standard();
    Cfet4SplitCoefficients split = Cfet4SplitCoefficients::standard();
    /// Apply CFET factors left factor first. Wrong on purpose; used by the
    /// mutation self-test.
    bool reverse_factor_order = false;

    void validate() const
    {
        if (!(dt > 0.0) || !std::isfinite(dt))
            throw std::invalid_argument("time step must be positive and finite");
    }
};

// ---------------------------------------------------------------------------
// order conditions

/// Coefficients of the single exponent of a CFET step applied to
/// A(t) = A1 + t A2 + t^2 A3 + t^3 A4:
///     dt xi1 A1 + dt^2 xi2 A2 + dt^3 (xi3 A3 + chi1 [A1,A2])
///   + dt^4 (xi4 A4 + chi2 [A1,A3] + chi3 [A1,[A1,A2]]) + O(dt^5).
struct OrderConditions
{
    std::array<double, 4> xi{};
    std::array<double, 3> chi{};

    static constexpr std::array<double, 4> xi_target{1.0, 0.5, 1.0 / 3.0, 0.25};
    static constexpr std::array<double, 3> chi_target{-1.0 / 12.0, -1.0 / 12.0, 0.0};

    std::array<double, 7> residuals() const
    {
        std::array<double, 7> r{};
        for (int k = 0; k < 4; ++k)
            r[k] = std::abs(xi[k] - xi_target[k]);
        for (int k = 0; k < 3; ++k)
            r[4 + k] = std::abs(chi[k] - chi_target[k]);
        return r;
    }

    double max_residual() const
    {
        double m = 0.0;
        for (double r : residuals())
            m = std::max(m, r);
        return m;
    }
};

/// The seven conditions of the two-exponential scheme in closed form.
inline OrderConditions order_conditions(const Cfet4SimpleCoefficients& c)
{
    const double g1 = c.g1, g2 = c.g2, x1 = c.x1, x2 = c.x2;
    const double gs = g1 + g2;
    OrderConditions oc;
    oc.xi[0] = 2.0 * g1 + 2.0 * g2;
    oc.xi[1] = gs * (x1 + x2);
    oc.xi[2] = gs * (x1 * x1 + x2 * x2);
    oc.xi[3] = gs * (x1 * x1 * x1 + x2 * x2 * x2);
    oc.chi[0] = 0.5 * gs * ((g2 * x1 + g1 * x2) - (g1 * x1 + g2 * x2));
    oc.chi[1] = 0.5 * gs * ((g2 * x1 * x1 + g1 * x2 * x2) - (g1 * x1 * x1 + g2 * x2 * x2));
    oc.chi[2] = gs * gs / 12.0 * ((g2 * x1 + g1 * x2) - (g2 * x1 + g1 * x2));
    return oc;
}

/// Conditions of an arbitrary product of exponentials, evaluated by folding
/// the Baker-Campbell-Hausdorff series factor by factor. weights[r][i] is the
/// weight of A(nodes[i] dt) in factor r (left to right).
inline OrderConditions bch_order_conditions(const std::vector<std::vector<double>>& weights,
                                            const std::vector<double>& nodes)
{
    // a[r][k]: coefficient of dt^{k+1} A_{k+1} in factor r
    std::vector<std::array<double, 4>> a;
    for (const auto& row : weights) {
        if (row.size() != nodes.size())
            throw std::invalid_argument("bch_order_conditions: weight row length differs from node count");
        std::array<double, 4> ar{};
        for (std::size_t i = 0; i < nodes.size(); ++i) {
            double p = 1.0;
            for (int k = 0; k < 4; ++k) {
                ar[k] += row[i] * p;
                p *= nodes[i];
            }
        }
        a.push_back(ar);
    }

    OrderConditions oc;
    for (const auto& ar : a)
        for (int k = 0; k < 4; ++k)
            oc.xi[k] += ar[k];
    for (std::size_t r = 0; r < a.size(); ++r) {
        for (std::size_t s = r + 1; s < a.size(); ++s) {
            oc.chi[0] += 0.5 * (a[r][0] * a[s][1] - a[r][1] * a[s][0]);
            oc.chi[1] += 0.5 * (a[r][0] * a[s][2] - a[r][2] * a[s][0]);
        }
    }
    // [A1,[A1,A2]]: fold Z <- log(e^Z e^Y) keeping the A1, A2, [A1,A2] parts of Z
    double S = 0.0, P = 0.0, C = 0.0, K = 0.0;
    for (const auto& ar : a) {
        const double s = ar[0], p = ar[1];
        const double cn = S * p - P * s;
        K += -0.5 * C * s + cn * (S - s) / 12.0;
        C += 0.5 * cn;
        S += s;
        P += p;
    }
    oc.chi[2] = K;
    return oc;
}

inline OrderConditions order_conditions(const Cfet4OptCoefficients& c)
{
    std::vector<std::vector<double>> w;
    for (const auto& row : c.rows())
        w.emplace_back(row.begin(), row.end());
    return bch_order_conditions(w, {c.x1, c.x2, c.x3});
}

struct OrderConditionReport
{
    OrderConditions simple;
    OrderConditions optimized;
    /// |2(g1+g2+g3) + 2 g4 + g5 - 1|
    double optimized_sum = 0.0;
    /// |2 dt1 + dt2 - 1|
    double split_sum = 0.0;
    /// max over |dt1 h_i - g_i| and |dt2 h_j - g_j| (h-matrix consistency)
    double split_consistency = 0.0;
    bool forward_substeps = true;

    double max_residual() const
    {
        return std::max({simple.max_residual(), optimized.max_residual(), optimized_sum, split_sum,
                         split_consistency});
    }

    bool passed(double tol = 1e-14) const { return forward_substeps && max_residual() < tol; }
};

inline OrderConditionReport verify_order_conditions(
    const Cfet4SimpleCoefficients& simple = Cfet4SimpleCoefficients::standard(),
    const Cfet4OptCoefficients& opt = Cfet4OptCoefficients::standard(),
    const Cfet4SplitCoefficients& split = Cfet4SplitCoefficients::standard())
{
    OrderConditionReport r;
    r.simple = order_conditions(simple);
    r.optimized = order_conditions(opt);
    r.optimized_sum = std::abs(2.0 * (opt.g1 + opt.g2 + opt.g3) + 2.0 * opt.g4 + opt.g5 - 1.0);
    r.split_sum = std::abs(2.0 * split.dt1 + split.dt2 - 1.0);
    const std::array<double, 6> d{split.dt1 * split.h1 - opt.g1, split.dt1 * split.h2 - opt.g2,
                                  split.dt1 * split.h3 - opt.g3, split.dt2 * split.h4 - opt.g4,
                                  split.dt2 * split.h5 - opt.g5, split.dt2 * split.h4 - opt.g4};
    for (double x : d)
        r.split_consistency = std::max(r.split_consistency, std::abs(x));
    r.forward_substeps = split.dt1 > 0.0 && split.dt2 > 0.0;
    return r;
}

// ---------------------------------------------------------------------------
// single steps

/// exp(dt A(t + dt/2)) x
template <typename Op>
Vector step_middle(const Generator<Op>& gen, double t, double dt, const Vector& x,
                   const EngineSpec& engine, EffortCounter& counter)
{
    return exp_action(gen.eval(t + 0.5 * dt), x, dt, engine, counter);
}

namespace detail
{

/// Apply factors (rows of weights over the node times) right to left.
template <typename Op>
Vector apply_cfet(const Generator<Op>& gen, double t, double dt, const Vector& x,
                  const std::vector<std::vector<double>>& rows, const std::vector<double>& nodes,
                  bool reverse, const EngineSpec& engine, EffortCounter& counter)
{
    std::vector<double> times(nodes.size());
    for (std::size_t i = 0; i < nodes.size(); ++i)
        times[i] = t + nodes[i] * dt;

    // Every factor is a combination of the same few generator samples, so the
    // modulations are evaluated once per node.
    std::vector<std::vector<double>> f(nodes.size());
    for (std::size_t i = 0; i < nodes.size(); ++i)
        f[i] = gen.modulations(times[i]);

    auto factor = [&](const std::vector<double>& w) {
        double b = 0.0;
        std::vector<double> c(gen.modulated_parts().size(), 0.0);
        for (std::size_t i = 0; i < w.size(); ++i) {
            b += w[i];
            for (std::size_t k = 0; k < c.size(); ++k)
                c[k] += w[i] * f[i][k];
        }
        return gen.assemble(b, c);
    };

    Vector y = x;
    const std::size_t n = rows.size();
    for (std::size_t m = 0; m < n; ++m) {
        const std::size_t r = reverse ? m : n - 1 - m;
        y = exp_action(factor(rows[r]), y, dt, engine, counter);
    }
    return y;
}

} // namespace detail

template <typename Op>
Vector step_cfet4_simple(const Generator<Op>& gen, double t, double dt, const Vector& x,
                         const EngineSpec& engine, EffortCounter& counter,
                         const Cfet4SimpleCoefficients& c = Cfet4SimpleCoefficients::standard(),
                         bool reverse = false)
{
    return detail::apply_cfet(gen, t, dt, x, {{c.g1, c.g2}, {c.g2, c.g1}}, {c.x1, c.x2}, reverse, engine,
                              counter);
}

template <typename Op>
Vector step_cfet4_opt(const Generator<Op>& gen, double t, double dt, const Vector& x,
                      const EngineSpec& engine, EffortCounter& counter,
                      const Cfet4OptCoefficients& c = Cfet4OptCoefficients::standard(), bool reverse = false)
{
    std::vector<std::vector<double>> rows;
    for (const auto& row : c.rows())
        rows.emplace_back(row.begin(), row.end());
    return detail::apply_cfet(gen, t, dt, x, rows, {c.x1, c.x2, c.x3}, reverse, engine, counter);
}

/// Split form exp[dt1 (B + sum f1_k C_k)] exp[dt2 (B + sum f2_k C_k)] exp[dt1 (B + sum f3_k C_k)].
template <typename Op>
Vector step_cfet4_opt_split(const Generator<Op>& gen, double t, double dt, const Vector& x,
                            const EngineSpec& engine, EffortCounter& counter,
                            const Cfet4SplitCoefficients& s = Cfet4SplitCoefficients::standard(),
                            const Cfet4OptCoefficients& nodes = Cfet4OptCoefficients::standard(),
                            bool reverse = false)
{
    const double d1 = s.dt1 * dt, d2 = s.dt2 * dt;
    if (!(d1 > 0.0 && d2 > 0.0))
        throw std::logic_error("split CFET requires positive sub-steps");
    const auto fa = gen.modulations(t + nodes.x1 * dt);
    const auto fb = gen.modulations(t + nodes.x2 * dt);
    const auto fc = gen.modulations(t + nodes.x3 * dt);
    const std::size_t K = fa.size();
    std::vector<double> f1(K), f2(K), f3(K);
    for (std::size_t k = 0; k < K; ++k) {
        f1[k] = s.h1 * fa[k] + s.h2 * fb[k] + s.h3 * fc[k];
        f2[k] = s.h4 * fa[k] + s.h5 * fb[k] + s.h4 * fc[k];
        f3[k] = s.h3 * fa[k] + s.h2 * fb[k] + s.h1 * fc[k];
    }
    const std::array<std::pair<double, const std::vector<double>*>, 3> stages{
        {{d1, &f1}, {d2, &f2}, {d1, &f3}}};
    Vector y = x;
    for (int m = 0; m < 3; ++m) {
        const auto& st = stages[reverse ? m : 2 - m];
        y = exp_action(gen.assemble(1.0, *st.second), y, st.first, engine, counter);
    }
    return y;
}

/// Classical RK4; four generator applications per step.
template <typename Op>
Vector step_rk4(const Generator<Op>& gen, double t, double dt, const Vector& x, EffortCounter& counter)
{
    const Op a0 = gen.eval(t);
    const Op am = gen.eval(t + 0.5 * dt);
    const Op a1 = gen.eval(t + dt);
    Vector k1(x.size()), k2(x.size()), k3(x.size()), k4(x.size());
    apply(a0, x, k1);
    apply(am, Vector(x + 0.5 * dt * k1), k2);
    apply(am, Vector(x + 0.5 * dt * k2), k3);
    apply(a1, Vector(x + dt * k3), k4);
    counter.add(4);
    return x + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
}

/// exp[dt A1 + dt^2/2 A2 + dt^3 (A3/3 - [A1,A2]/12) + dt^4 (A4/4 - [A1,A3]/12)]
/// for A(t) = A1 + t A2 + t^2 A3 + t^3 A4.
inline Matrix magnus4_from_taylor(const Matrix& A1, const Matrix& A2, const Matrix& A3, const Matrix& A4,
                                  double dt)
{
    for (const Matrix* m : {&A2, &A3, &A4})
        if (m->rows() != A1.rows() || m->cols() != A1.cols())
            throw std::invalid_argument("magnus4_from_taylor: shape mismatch");
    if (A1.rows() != A1.cols())
        throw std::invalid_argument("magnus4_from_taylor: matrices must be square");
    const double dt2 = dt * dt, dt3 = dt2 * dt, dt4 = dt3 * dt;
    const Matrix Omega = dt * A1 + 0.5 * dt2 * A2 + dt3 * (A3 / 3.0 - commutator(A1, A2) / 12.0) +
                         dt4 * (A4 / 4.0 - commutator(A1, A3) / 12.0);
    return expm_dense(Omega);
}

/// Fourth-order Magnus step for a general generator: A is interpolated by a
/// cubic through four Chebyshev points of the step, then magnus4_from_taylor.
/// Dense; meant as a reference on small systems.
template <typename Op>
Vector step_magnus4(const Generator<Op>& gen, double t, double dt, const Vector& x)
{
    constexpr int n = 4;
    std::array<double, n> s{};
    for (int i = 0; i < n; ++i)
        s[i] = 0.5 * dt * (1.0 - std::cos((2.0 * i + 1.0) * M_PI / (2.0 * n)));
    // Vandermonde solve for the monomial coefficients of the cubic in s
    Eigen::Matrix4d V;
    for (int i = 0; i < n; ++i)
        for (int k = 0; k < n; ++k)
            V(i, k) = std::pow(s[i], k);
    const Eigen::Matrix4d Vinv = V.inverse();
    std::array<Matrix, n> samples;
    for (int i = 0; i < n; ++i)
        samples[i] = Matrix(to_dense(gen.eval(t + s[i])));
    std::array<Matrix, n> A;
    for (int k = 0; k < n; ++k) {
        A[k] = Matrix::Zero(samples[0].rows(), samples[0].cols());
        for (int i = 0; i < n; ++i)
            A[k] += Vinv(k, i) * samples[i];
    }
    return magnus4_from_taylor(A[0], A[1], A[2], A[3], dt) * x;
}

template <typename Op>
Vector step(const SchemeSpec& scheme, const Generator<Op>& gen, double t, double dt, const Vector& x,
            const EngineSpec& engine, EffortCounter& counter)
{
    switch (scheme.kind) {
    case SchemeKind::MiddlePoint:
        return step_middle(gen, t, dt, x, engine, counter);
    case SchemeKind::Cfet4Simple:
        return step_cfet4_simple(gen, t, dt, x, engine, counter, scheme.simple, scheme.reverse_factor_order);
    case SchemeKind::Cfet4Opt:
        return step_cfet4_opt(gen, t, dt, x, engine, counter, scheme.opt, scheme.reverse_factor_order);
    case SchemeKind::Cfet4OptSplit:
        return step_cfet4_opt_split(gen, t, dt, x, engine, counter, scheme.split, scheme.opt,
                                    scheme.reverse_factor_order);
    case SchemeKind::Rk4:
        return step_rk4(gen, t, dt, x, counter);
    case SchemeKind::Magnus4Taylor:
        return step_magnus4(gen, t, dt, x);
    }
    throw std::logic_error("step: unknown scheme");
}

// ---------------------------------------------------------------------------
// trajectories

struct Sample
{
    double t = 0.0;
    Vector state;
};

struct RunRecord
{
    std::vector<Sample> samples;
    Vector final_state;
    double t_final = 0.0;
    std::uint64_t n_matvec = 0;
    std::size_t steps = 0;

    bool failed = false;
    std::string failure;
    double failure_time = 0.0;
    double failure_residual = 0.0;
};

struct PropagateOptions
{
    /// Keep every stride-th state (the initial and final states are always kept).
    /// 0 keeps only those two.
    std::size_t stride = 0;
    /// Called after every step with (t, state).
    std::function<void(double, const Vector&)> observer;
};

/// Number of steps of size dt covering [t0, t_end] and the length of the last
/// one. Ratios within 1e-9 of an integer use equal steps.
inline std::pair<std::size_t, double> step_plan(double t0, double t_end, double dt)
{
    const double span = t_end - t0;
    if (span <= 0.0)
        return {0, 0.0};
    const double ratio = span / dt;
    const double rounded = std::round(ratio);
    if (rounded >= 1.0 && std::abs(ratio - rounded) <= 1e-9 * std::max(1.0, ratio))
        return {static_cast<std::size_t>(rounded), dt};
    const auto full = static_cast<std::size_t>(std::floor(ratio));
    return {full + 1, span - static_cast<double>(full) * dt};
}

template <typename Op>
RunRecord propagate(const Generator<Op>& gen, const Vector& x0, double t0, double t_end, const SchemeSpec& scheme,
                    const EngineSpec& engine, const PropagateOptions& opts = {})
{
    scheme.validate();
    engine.validate();
    if (x0.size() != gen.dim())
        throw std::invalid_argument("propagate: initial state has length " + std::to_string(x0.size()) +
                                    ", generator acts on " + std::to_string(gen.dim()));
    if (t_end < t0)
        throw std::invalid_argument("propagate: t_end precedes t0");

    RunRecord rec;
    EffortCounter counter;
    const auto [n, last] = step_plan(t0, t_end, scheme.dt);
    Vector x = x0;
    double t = t0;
    rec.samples.push_back({t, x});
    for (std::size_t i = 0; i < n; ++i) {
        const double h = (i + 1 == n) ? last : scheme.dt;
        try {
            x = step(scheme, gen, t, h, x, engine, counter);
        } catch (const NumericalFailure& e) {
            rec.failed = true;
            rec.failure = "step " + std::to_string(i) + " at t = " + std::to_string(t) + ": " + e.what();
            rec.failure_time = t;
            rec.failure_residual = e.residual();
            break;
        }
        t = (i + 1 == n) ? t_end : t0 + static_cast<double>(i + 1) * scheme.dt;
        ++rec.steps;
        if (opts.observer)
            opts.observer(t, x);
        if (opts.stride > 0 && (i + 1) % opts.stride == 0 && i + 1 != n)
            rec.samples.push_back({t, x});
    }
    if (!rec.failed && n > 0)
        rec.samples.push_back({t, x});
    rec.final_state = x;
    rec.t_final = t;
    rec.n_matvec = counter.n_matvec;
    return rec;
}

} // namespace cfet
