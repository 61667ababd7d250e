#pragma once

#include <algorithm>
#include <atomic>
#include <chrono>
#include <fstream>
#include <iostream>
#include <mutex>
#include <ostream>
#include <sstream>
#include <string>
#include <thread>
#include <variant>
#include <vector>

#include "cfet/harness/config.hpp"
#include "cfet/harness/csv.hpp"
#include "cfet/models.hpp"
#include "cfet/observables.hpp"
#include "cfet/propagators.hpp"

namespace cfet::harness
{

enum ExitCode : int
{
    kExitOk = 0,
    kExitConfig = 2,
    kExitNumerical = 3,
    kExitSelftest = 4,
};

struct CommandOptions
{
    int threads = 1;
    bool deterministic = false;
    std::ostream* log = &std::cerr;
};

// ---------------------------------------------------------------------------
// model instances

/// Generator, initial state and observables of a configured model. Closed
/// spins evolve state vectors, the others column-stacked density matrices.
struct ModelInstance
{
    ModelConfig config;
    std::variant<Generator<Matrix>, Generator<LiouvillianForm>> gen;
    Vector x0;
    Index system_dim = 0;

    bool closed() const { return config.kind == ModelKind::Spin; }

    Matrix density(const Vector& x) const
    {
        if (closed())
            return x * x.adjoint();
        return unvec(x);
    }

    double drive_frequency(double t) const
    {
        if (config.kind == ModelKind::Dicke)
            return config.dicke.ramp ? config.dicke.ramp->omega(t) : config.dicke.omega_p;
        return config.spin.ramp ? config.spin.ramp->omega(t) : config.spin.omega;
    }

    double j() const { return config.kind == ModelKind::Dicke ? config.dicke.j : config.spin.j; }

    Matrix observable(const std::string& name) const
    {
        if (config.kind == ModelKind::Dicke) {
            const auto o = dicke_operators(config.dicke.j, config.dicke.n_max);
            if (name == "jx") return o.jx;
            if (name == "jy") return o.jy;
            if (name == "jz" || name == "iz") return o.jz;
            if (name == "nb") return o.n;
        } else {
            const auto s = spin_operators(config.spin.j);
            if (name == "jx") return s.jx;
            if (name == "jy") return s.jy;
            if (name == "jz" || name == "iz") return s.jz;
        }
        throw ConfigError("observable '" + name + "' is not an operator of this model");
    }
};

inline ModelInstance build_model(const ModelConfig& mc)
{
    ModelInstance m;
    m.config = mc;
    if (mc.kind == ModelKind::Dicke) {
        m.gen = dicke_generator(mc.dicke);
        m.x0 = dicke_ground_state(mc.dicke);
        m.system_dim = mc.dicke.dim();
        return m;
    }
    const Index d = twice_spin(mc.spin.j) + 1;
    m.system_dim = d;
    // basis index 0 is m = +j
    const Index k = mc.initial == "up" ? 0 : d - 1;
    if (mc.kind == ModelKind::Spin) {
        m.gen = spin_rotating_field(mc.spin);
        m.x0 = Vector::Zero(d);
        m.x0(k) = 1.0;
    } else {
        m.gen = dissipative_spin_rotating_field(mc.spin);
        Matrix rho = Matrix::Zero(d, d);
        rho(k, k) = 1.0;
        m.x0 = vec(rho);
    }
    return m;
}

inline SchemeSpec make_scheme(SchemeKind k, double dt)
{
    SchemeSpec s;
    s.kind = k;
    s.dt = dt;
    return s;
}

inline EngineSpec run_engine(const RunSection& r) { return make_engine(r.engine, r.tolerance); }

template <typename F>
auto visit_generator(const ModelInstance& m, F&& f)
{
    return std::visit([&](const auto& g) { return f(g); }, m.gen);
}

// ---------------------------------------------------------------------------
// propagate

/// Trajectory CSV: t, the selected observables, trace defect, hermiticity
/// defect. Samples every stride-th step plus the first and last.
inline int cmd_propagate(const RunConfig& cfg, std::ostream& out, const CommandOptions& opts = {})
{
    const auto& r = cfg.run;
    if (!r.scheme || !r.dt || !r.t_end)
        throw ConfigError(cfg.source + ": propagate needs [run] scheme, dt and t_end");
    const auto model = build_model(cfg.model);
    std::vector<std::string> cols{"t"};
    for (const auto& o : r.observables)
        cols.push_back(o);
    cols.push_back("trace_defect");
    cols.push_back("hermiticity_defect");
    CsvWriter csv(out, cols);
    if (*r.t_end == r.t_start)
        return kExitOk;

    std::vector<Matrix> ops;
    for (const auto& o : r.observables)
        ops.push_back(o == "omega_drive" ? Matrix() : model.observable(o));
    const double j2 = twice_spin(model.j());

    auto emit = [&](double t, const Vector& x) {
        const Matrix rho = model.density(x);
        std::vector<Cell> row{t};
        for (std::size_t i = 0; i < ops.size(); ++i) {
            const auto& name = r.observables[i];
            if (name == "omega_drive") {
                row.push_back(model.drive_frequency(t));
                continue;
            }
            const double v = expectation(ops[i], rho).real();
            row.push_back(name == "iz" ? 0.5 + v / j2 : v);
        }
        const double tr = model.closed() ? x.squaredNorm() : rho.trace().real();
        row.push_back(std::abs(tr - 1.0));
        row.push_back(hermiticity_defect(rho));
        csv.row(row);
    };

    const auto [n, last] = step_plan(r.t_start, *r.t_end, *r.dt);
    (void)last;
    std::size_t k = 0;
    PropagateOptions po;
    po.observer = [&](double t, const Vector& x) {
        ++k;
        if (k % r.stride == 0 || k == n)
            emit(t, x);
    };
    emit(r.t_start, model.x0);
    const auto rec = visit_generator(model, [&](const auto& g) {
        return propagate(g, model.x0, r.t_start, *r.t_end, make_scheme(*r.scheme, *r.dt), run_engine(r), po);
    });
    csv.flush();
    if (rec.failed) {
        *opts.log << "numerical failure: " << rec.failure << " (residual " << sci(rec.failure_residual) << ")\n";
        return kExitNumerical;
    }
    return kExitOk;
}

// ---------------------------------------------------------------------------
// bench

struct BenchRecord
{
    SchemeKind scheme = SchemeKind::Cfet4Opt;
    double dt = 0.0;
    std::uint64_t n_h = 0;
    double epsilon = 0.0;
    double wall_seconds = 0.0;
    std::string failure;
};

struct ReferenceInfo
{
    double dt = 0.0;           // step of the accepted reference
    double self_consistency = 0.0; // max-entry change under the last halving
    int halvings = 0;
    EngineKind engine = EngineKind::DenseOracle;
    Vector state;
};

struct BenchResult
{
    ReferenceInfo reference;
    std::vector<BenchRecord> records;
};

/// Cfet4Opt from reference_dt (default dt_min / 4), halved until two
/// successive runs agree to
/// reference_tol. Dense exponentials up to dense_limit, tight Chebyshev above.
inline ReferenceInfo bench_reference(const ModelInstance& model, double t0, double t1, const BenchSection& b,
                                     std::ostream& log)
{
    ReferenceInfo ref;
    const Index dim = model.x0.size();
    ref.engine = dim <= b.dense_limit ? EngineKind::DenseOracle : EngineKind::ChebyshevShifted;
    const EngineSpec engine = make_engine(ref.engine, 1e-14);
    auto run = [&](double h) {
        const auto rec = visit_generator(model, [&](const auto& g) {
            return propagate(g, model.x0, t0, t1, make_scheme(SchemeKind::Cfet4Opt, h), engine);
        });
        if (rec.failed)
            throw NumericalFailure("bench reference at dt = " + sci(h) + ": " + rec.failure, rec.failure_residual);
        return rec.final_state;
    };
    double h = b.reference_dt.value_or(b.smallest_step() / 4.0);
    Vector prev = run(h);
    for (int k = 1; k <= b.max_halvings; ++k) {
        h *= 0.5;
        Vector cur = run(h);
        ref.self_consistency = error_max(cur, prev);
        ref.halvings = k;
        log << "bench reference: dt = " << sci(h) << ", change under halving " << sci(ref.self_consistency) << "\n";
        if (ref.self_consistency < b.reference_tol) {
            ref.dt = h;
            ref.state = std::move(cur);
            return ref;
        }
        prev = std::move(cur);
    }
    throw NumericalFailure("bench reference did not converge: change " + sci(ref.self_consistency) +
                               " under the last halving (dt = " + sci(h) + ") exceeds " + sci(b.reference_tol),
                           ref.self_consistency);
}

inline BenchResult run_bench(const RunConfig& cfg, const CommandOptions& opts = {})
{
    if (!cfg.bench)
        throw ConfigError(cfg.source + ": bench needs a [bench] section");
    if (!cfg.run.t_end)
        throw ConfigError(cfg.source + ": bench needs [run] t_end");
    if (cfg.run.engine == EngineKind::DenseOracle)
        throw ConfigError(cfg.source + ": bench counts matrix-vector products; the dense engine performs none");
    const auto& b = *cfg.bench;
    const auto model = build_model(cfg.model);
    const double t0 = cfg.run.t_start, t1 = *cfg.run.t_end;
    BenchResult res;
    res.reference = bench_reference(model, t0, t1, b, *opts.log);
    for (auto k : b.schemes) {
        for (double dt : b.steps(k)) {
            BenchRecord rec;
            rec.scheme = k;
            rec.dt = dt;
            const auto start = std::chrono::steady_clock::now();
            const auto run = visit_generator(model, [&](const auto& g) {
                return propagate(g, model.x0, t0, t1, make_scheme(k, dt), run_engine(cfg.run));
            });
            rec.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
            rec.n_h = run.n_matvec;
            if (run.failed) {
                rec.failure = run.failure;
                rec.epsilon = std::numeric_limits<double>::quiet_NaN();
            } else {
                rec.epsilon = error_max(run.final_state, res.reference.state);
            }
            res.records.push_back(rec);
        }
    }
    return res;
}

/// N_H at error eps by log-log interpolation between the two bracketing
/// records of one scheme. NaN when eps lies outside the sampled range.
inline double effort_at_error(const std::vector<BenchRecord>& recs, SchemeKind k, double eps)
{
    std::vector<std::pair<double, double>> pts; // (log eps, log N_H)
    for (const auto& r : recs)
        if (r.scheme == k && r.failure.empty() && r.epsilon > 0.0 && r.n_h > 0)
            pts.emplace_back(std::log(r.epsilon), std::log(static_cast<double>(r.n_h)));
    std::sort(pts.begin(), pts.end());
    const double le = std::log(eps);
    for (std::size_t i = 1; i < pts.size(); ++i) {
        if (pts[i - 1].first <= le && le <= pts[i].first) {
            const double s = (le - pts[i - 1].first) / (pts[i].first - pts[i - 1].first);
            return std::exp(pts[i - 1].second + s * (pts[i].second - pts[i - 1].second));
        }
    }
    return std::numeric_limits<double>::quiet_NaN();
}

/// Records CSV: scheme, dt, N_H, epsilon, wall_seconds. The wall time is
/// written as nan in deterministic mode.
inline int cmd_bench(const RunConfig& cfg, std::ostream& out, const CommandOptions& opts = {})
{
    const auto res = run_bench(cfg, opts);
    CsvWriter csv(out, {"scheme", "dt", "N_H", "epsilon", "wall_seconds"});
    const bool det = opts.deterministic || cfg.run.deterministic;
    int code = kExitOk;
    for (const auto& r : res.records) {
        csv.row({std::string(to_string(r.scheme)), r.dt, static_cast<long long>(r.n_h), r.epsilon,
                 det ? std::numeric_limits<double>::quiet_NaN() : r.wall_seconds});
        if (!r.failure.empty()) {
            *opts.log << "numerical failure: " << to_string(r.scheme) << " dt = " << sci(r.dt) << ": " << r.failure
                      << "\n";
            code = kExitNumerical;
        }
    }
    return code;
}

// ---------------------------------------------------------------------------
// steady state, spectrum

inline void require_fixed_drive(const RunConfig& cfg, const char* who)
{
    if (cfg.model.kind != ModelKind::Dicke)
        throw ConfigError(cfg.source + ": " + who + " needs model kind dicke");
    if (cfg.model.dicke.ramp)
        throw ConfigError(cfg.source + ": " + who + " needs a fixed drive frequency; remove [ramp]");
}

/// Scheme for periodic runs: [run] scheme (default cfet4-opt) and dt
/// (default T/32).
inline SchemeSpec periodic_scheme(const RunSection& r, double wp)
{
    const double T = 2.0 * std::numbers::pi / wp;
    return make_scheme(r.scheme.value_or(SchemeKind::Cfet4Opt), r.dt.value_or(T / 32.0));
}

struct SpectrumOutcome
{
    DickeSteadyState steady;
    SpectrumSeries series;
    std::vector<Peak> peaks;
    double s0 = 0.0;
    double full_axis = 0.0;
};

/// Resolved correlation grid: defaults dtau = min(2 pi / (40 omega_max), T / 64),
/// tau_max = max(10 / kappa, 20 T) rounded up to a multiple of dtau.
inline CorrelationOptions spectrum_grid(const DickeParams& p, const SpectrumSection& s)
{
    const double omega_max = s.omega_max.value_or(2.0 * p.Omega);
    const double kappa = p.kappa > 0.0 ? p.kappa : 1.0;
    auto g = default_correlation_grid(omega_max, p.omega_p, kappa);
    if (s.dtau)
        g.dtau = *s.dtau;
    if (s.tau_max)
        g.tau_max = *s.tau_max;
    g.tau_max = std::max(1.0, std::ceil(g.tau_max / g.dtau - 1e-9)) * g.dtau;
    g.n_phase = s.n_phase;
    g.extend_to_decay = s.extend;
    g.tau_limit = s.tau_limit.value_or(10.0 * g.tau_max);
    return g;
}

inline SpectrumOutcome compute_spectrum(const DickeParams& p, const SpectrumSection& s, const SchemeSpec& scheme,
                                        const EngineSpec& engine, int harmonics, int threads)
{
    SpectrumOutcome out;
    SettleOptions so;
    so.tol = s.settle_tol;
    so.max_periods = s.max_periods;
    out.steady = dicke_steady_state(p, scheme, engine, so, 64, harmonics);
    auto grid = spectrum_grid(p, s);
    grid.t_start = out.steady.settle.t;
    grid.threads = threads;
    const auto gen = dicke_generator(p);
    const auto o = dicke_operators(p.j, p.n_max);
    out.series = correlation_function(gen, out.steady.settle.rho, p.omega_p, o.a, grid, scheme, engine);
    const double omega_max = s.omega_max.value_or(2.0 * p.Omega);
    spectrum(out.series, linspace(s.omega_min, omega_max, s.n_omega));
    const double top = *std::max_element(out.series.s_omega.begin(), out.series.s_omega.end());
    out.peaks = find_peaks(out.series.omega, out.series.s_omega, s.peak_prominence * top);
    out.s0 = out.series.s_tau.front().real();
    out.full_axis = full_axis_integral(out.series);
    return out;
}

inline std::string peak_list(const std::vector<Peak>& peaks)
{
    std::string s;
    for (const auto& p : peaks) {
        if (!s.empty())
            s += ';';
        s += format_double(p.omega) + ':' + format_double(p.height);
    }
    return s;
}

/// (omega, S) CSV; the summary (N_b, I_z, S_tot, S(0), ...) goes to summary
/// when given.
inline int cmd_spectrum(const RunConfig& cfg, std::ostream& out, std::ostream* summary,
                        const CommandOptions& opts = {})
{
    require_fixed_drive(cfg, "spectrum");
    const auto& p = cfg.model.dicke;
    const int harmonics = cfg.sweep ? cfg.sweep->harmonics : 6;
    const auto res = compute_spectrum(p, cfg.spectrum, periodic_scheme(cfg.run, p.omega_p), run_engine(cfg.run),
                                      harmonics, opts.threads);
    CsvWriter csv(out, {"omega", "S"});
    for (std::size_t i = 0; i < res.series.omega.size(); ++i)
        csv.row({res.series.omega[i], res.series.s_omega[i]});
    if (summary) {
        CsvWriter s(*summary, {"N_b", "I_z", "S_tot", "S0", "full_axis_integral", "imag_residual", "tau_max",
                               "N_H", "peaks"});
        s.row({res.steady.averages.nb.value, res.steady.averages.iz.value, res.series.s_tot, res.s0,
               res.full_axis, res.series.imag_residual, res.series.tau.back(),
               static_cast<long long>(res.series.n_matvec), peak_list(res.peaks)});
    }
    return kExitOk;
}

// ---------------------------------------------------------------------------
// sweep

struct SweepRow
{
    double value = 0.0;
    double iz = std::numeric_limits<double>::quiet_NaN();
    double nb = std::numeric_limits<double>::quiet_NaN();
    double s_tot = std::numeric_limits<double>::quiet_NaN();
    double s0 = std::numeric_limits<double>::quiet_NaN();
    std::vector<Peak> peaks;
    int periods = 0;
    std::string status = "ok";
};

inline SweepRow sweep_point(const RunConfig& cfg, double value)
{
    const auto& w = *cfg.sweep;
    DickeParams p = cfg.model.dicke;
    if (w.parameter == SweepParameter::OmegaP)
        p.omega_p = value;
    else
        p.lambda0 = value;
    SweepRow row;
    row.value = value;
    try {
        p.validate();
        const SchemeSpec scheme = periodic_scheme(cfg.run, p.omega_p);
        const EngineSpec engine = run_engine(cfg.run);
        if (w.spectrum) {
            SpectrumSection s = cfg.spectrum;
            s.settle_tol = w.settle_tol;
            s.max_periods = w.max_periods;
            const auto r = compute_spectrum(p, s, scheme, engine, w.harmonics, 1);
            row.iz = r.steady.averages.iz.value;
            row.nb = r.steady.averages.nb.value;
            row.periods = r.steady.settle.periods;
            row.s_tot = r.series.s_tot;
            row.s0 = r.s0;
            row.peaks = r.peaks;
        } else {
            SettleOptions so;
            so.tol = w.settle_tol;
            so.max_periods = w.max_periods;
            const auto st = dicke_steady_state(p, scheme, engine, so, w.samples, w.harmonics);
            row.iz = st.averages.iz.value;
            row.nb = st.averages.nb.value;
            row.periods = st.settle.periods;
        }
    } catch (const std::exception& e) {
        const double v = row.value;
        row = SweepRow{};
        row.value = v;
        row.status = e.what();
    }
    return row;
}

/// Grid points on up to `threads` workers; rows come back in grid order.
inline std::vector<SweepRow> run_sweep(const RunConfig& cfg, const CommandOptions& opts = {})
{
    require_fixed_drive(cfg, "sweep");
    if (!cfg.sweep)
        throw ConfigError(cfg.source + ": sweep needs a [sweep] section");
    const auto& values = cfg.sweep->values;
    std::vector<SweepRow> rows(values.size());
    std::atomic<std::size_t> next{0};
    std::mutex log_mutex;
    auto worker = [&] {
        for (std::size_t i = next++; i < values.size(); i = next++) {
            rows[i] = sweep_point(cfg, values[i]);
            std::lock_guard<std::mutex> lock(log_mutex);
            *opts.log << "sweep " << (i + 1) << "/" << values.size() << ": " << format_double(values[i]) << " "
                      << rows[i].status << "\n";
        }
    };
    const int n = std::clamp(opts.threads, 1, static_cast<int>(std::max<std::size_t>(values.size(), 1)));
    if (n == 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        for (int k = 0; k < n; ++k)
            pool.emplace_back(worker);
        for (auto& t : pool)
            t.join();
    }
    return rows;
}

inline int cmd_sweep(const RunConfig& cfg, std::ostream& out, const CommandOptions& opts = {})
{
    const auto rows = run_sweep(cfg, opts);
    const char* name = cfg.sweep->parameter == SweepParameter::OmegaP ? "omega_p" : "lambda0";
    CsvWriter csv(out, {name, "I_z", "N_b", "S_tot", "S0", "n_peaks", "peaks", "periods", "status"});
    for (const auto& r : rows)
        csv.row({r.value, r.iz, r.nb, r.s_tot, r.s0, static_cast<long long>(r.peaks.size()), peak_list(r.peaks),
                 static_cast<long long>(r.periods), r.status});
    return kExitOk;
}

} // namespace cfet::harness
