#pragma once

#include <functional>
#include <random>
#include <string>
#include <vector>

#include <json.hpp>

#include "cfet/expm.hpp"
#include "cfet/harness/checks.hpp"
#include "cfet/models.hpp"
#include "cfet/observables.hpp"
#include "cfet/propagators.hpp"

namespace cfet::harness
{

struct CheckResult
{
    std::string name;
    bool passed = false;
    double value = 0.0;
    double threshold = 0.0;
    std::string detail;
};

struct SelftestOptions
{
    std::uint64_t seed = 20240611;
    /// "g5" perturbs g5 by 1e-6, "order" reverses the CFET factor order.
    /// Both make the affected checks fail.
    std::string inject_fault;
};

struct SelftestReport
{
    std::vector<CheckResult> checks;

    bool passed() const
    {
        for (const auto& c : checks)
            if (!c.passed)
                return false;
        return !checks.empty();
    }

    nlohmann::json to_json() const
    {
        nlohmann::json j;
        j["passed"] = passed();
        j["checks"] = nlohmann::json::array();
        for (const auto& c : checks)
            j["checks"].push_back({{"name", c.name},
                                   {"passed", c.passed},
                                   {"value", c.value},
                                   {"threshold", c.threshold},
                                   {"detail", c.detail}});
        return j;
    }
};

inline SelftestReport run_selftest(const SelftestOptions& opt = {})
{
    if (!opt.inject_fault.empty() && opt.inject_fault != "g5" && opt.inject_fault != "order")
        throw std::invalid_argument("unknown fault '" + opt.inject_fault + "' (g5, order)");
    SelftestReport rep;
    auto add = [&](std::string name, double value, double threshold, bool below, std::string detail = {}) {
        const bool ok = std::isfinite(value) && (below ? value < threshold : value > threshold);
        rep.checks.push_back({std::move(name), ok, value, threshold, std::move(detail)});
    };
    auto guarded = [&](const std::string& name, const std::function<void()>& f) {
        try {
            f();
        } catch (const std::exception& e) {
            rep.checks.push_back({name, false, std::numeric_limits<double>::quiet_NaN(), 0.0, e.what()});
        }
    };

    auto opt_coeffs = Cfet4OptCoefficients::standard();
    if (opt.inject_fault == "g5")
        opt_coeffs.g5 += 1e-6;
    SchemeSpec opt_scheme;
    opt_scheme.kind = SchemeKind::Cfet4Opt;
    opt_scheme.opt = opt_coeffs;
    opt_scheme.reverse_factor_order = opt.inject_fault == "order";
    SchemeSpec simple_scheme = opt_scheme;
    simple_scheme.kind = SchemeKind::Cfet4Simple;

    guarded("order_conditions", [&] {
        const auto r = verify_order_conditions(Cfet4SimpleCoefficients::standard(), opt_coeffs);
        add("order_conditions", r.max_residual(), 1e-14, true, "max residual of the seven conditions");
    });

    // the checks must notice coefficient typos and a wrong factor order
    guarded("mutation_g5_detected", [&] {
        auto bad = Cfet4OptCoefficients::standard();
        bad.g5 += 1e-6;
        add("mutation_g5_detected", verify_order_conditions(Cfet4SimpleCoefficients::standard(), bad).max_residual(),
            1e-14, false, "order-condition residual with g5 + 1e-6");
    });
    guarded("mutation_order_detected", [&] {
        SchemeSpec rev;
        rev.kind = SchemeKind::Cfet4Opt;
        rev.reverse_factor_order = true;
        const double slope = checks::magnus_defect_slope(opt.seed, rev);
        add("mutation_order_detected", 5.0 - slope, 1.0, false, "5 - defect slope with reversed factors");
    });

    guarded("defect_slope", [&] {
        for (const auto* s : {&simple_scheme, &opt_scheme}) {
            const double slope = checks::magnus_defect_slope(opt.seed, *s);
            add(std::string("defect_slope_") + to_string(s->kind), std::abs(slope - 5.0), 0.3, true,
                "|slope - 5| of the CFET - Magnus local defect");
        }
    });

    guarded("chebyshev_vs_dense", [&] {
        std::mt19937_64 rng(opt.seed + 1);
        const Matrix H = checks::random_hermitian(12, rng);
        const Matrix A = -kI * H;
        const Vector v = checks::random_vector(12, rng);
        const Vector ref = expm_dense(A, 0.7) * v;
        double worst = 0.0;
        for (auto k : {EngineKind::ChebyshevHermitian, EngineKind::ChebyshevShifted, EngineKind::TaylorSteps}) {
            EffortCounter c;
            worst = std::max(worst, error_max(exp_action(A, v, 0.7, make_engine(k, 1e-13), c), ref) / v.norm());
        }
        add("chebyshev_vs_dense", worst, 1e-11, true, "worst engine error on a random Hermitian generator");
    });

    guarded("superoperator", [&] {
        std::mt19937_64 rng(opt.seed + 2);
        double tr = 0.0, gap = 0.0, herm = 0.0, vecd = 0.0;
        for (int i = 0; i < 20; ++i) {
            const auto s = checks::superop_trace_check(rng, 2 + i % 5);
            tr = std::max({tr, s.trace_defect, s.dense_trace_defect});
            gap = std::max(gap, s.form_vs_dense);
            herm = std::max(herm, s.hermiticity);
            const auto v = checks::vectorization_check(rng, 2 + i % 5);
            vecd = std::max({vecd, v.round_trip, v.kron_rule});
        }
        add("lindblad_trace_preservation", tr, 1e-13, true);
        add("lindblad_form_vs_dense", gap, 1e-13, true);
        add("lindblad_hermiticity", herm, 1e-13, true);
        add("vectorization", vecd, 1e-13, true);
    });

    guarded("spin_oracle", [&] {
        SpinModelParams p;
        Vector psi0 = Vector::Zero(2);
        psi0(0) = 1.0;
        SchemeSpec s = opt_scheme;
        s.dt = 0.05;
        const auto rec = propagate(spin_rotating_field(p), psi0, 0.0, 10.0, s,
                                   make_engine(EngineKind::ChebyshevHermitian, 1e-14));
        const Vector ex = spin_exact_state(p, psi0, 10.0);
        add("spin_oracle", error_max(Matrix(rec.final_state * rec.final_state.adjoint()), Matrix(ex * ex.adjoint())),
            1e-7, true, "cfet4-opt, dt = 0.05, T = 10, vs rotating-frame solution");
    });

    guarded("dissipative_spin_analytic", [&] {
        SpinModelParams p;
        p.gamma = 0.05;
        const auto g = dissipative_spin_rotating_field(p);
        const auto s = spin_operators(0.5);
        Matrix rho = Matrix::Zero(2, 2);
        rho(0, 0) = 1.0;
        SchemeSpec sc = opt_scheme;
        sc.dt = 0.01;
        double worst = 0.0, trace = 0.0, herm = 0.0;
        PropagateOptions po;
        po.observer = [&](double t, const Vector& x) {
            const Matrix r = unvec(x);
            worst = std::max(worst, std::abs(expectation(s.jz, r).real() - spin_jz_analytic(t, p.gamma, p.V)));
            trace = std::max(trace, std::abs(r.trace() - 1.0));
            herm = std::max(herm, hermiticity_defect(r));
        };
        propagate(g, vec(rho), 0.0, 10.0, sc, make_engine(EngineKind::ChebyshevShifted, 1e-13), po);
        add("dissipative_spin_analytic", worst, 1e-8, true, "max |<Jz> - closed form| on [0, 10]");
        add("dissipative_spin_trace", trace, 1e-12, true);
        add("dissipative_spin_hermiticity", herm, 1e-12, true);
    });
    return rep;
}

} // namespace cfet::harness
