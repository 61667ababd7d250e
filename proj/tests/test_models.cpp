#include <cmath>
#include <random>

#include <Eigen/Eigenvalues>
#include <gtest/gtest.h>

#include "cfet/models.hpp"
#include "cfet/propagators.hpp"

#include "test_util.hpp"

using namespace cfet;

namespace
{

Vector up(Index d)
{
    Vector v = Vector::Zero(d);
    v(0) = 1.0;
    return v;
}

Matrix up_density(Index d)
{
    Matrix r = Matrix::Zero(d, d);
    r(0, 0) = 1.0;
    return r;
}

double jz_of(const Matrix& rho, double j) { return (rho * spin_operators(j).jz).trace().real(); }

SchemeSpec opt_scheme(double dt)
{
    SchemeSpec s;
    s.kind = SchemeKind::Cfet4Opt;
    s.dt = dt;
    return s;
}

std::vector<double> sorted_eigenvalues(const Matrix& H)
{
    Eigen::SelfAdjointEigenSolver<Matrix> es(H);
    std::vector<double> e(es.eigenvalues().data(), es.eigenvalues().data() + es.eigenvalues().size());
    return e;
}

} // namespace

// --- frequency ramp -------------------------------------------------------

TEST(FrequencyRamp, PhaseIsIntegralOfFrequency)
{
    const FrequencyRamp r{1.5, 2.5, 10.0, 100.0};
    EXPECT_DOUBLE_EQ(r.omega(0.0), 1.5);
    EXPECT_DOUBLE_EQ(r.omega(60.0), 2.0);
    EXPECT_DOUBLE_EQ(r.omega(500.0), 2.5);
    for (double t : {-3.0, 5.0, 30.0, 109.0, 140.0}) {
        const double h = 1e-5;
        EXPECT_NEAR((r.phase(t + h) - r.phase(t - h)) / (2 * h), r.omega(t), 1e-8);
    }
    EXPECT_DOUBLE_EQ(r.phase(10.0), 0.0);
    EXPECT_NEAR(r.phase(110.0), 200.0, 1e-12);
    EXPECT_THROW((FrequencyRamp{1.0, 2.0, 0.0, 0.0}.validate()), std::invalid_argument);
}

// --- closed spin ------------------------------------------------------------

TEST(SpinModel, GeneratorAtZeroIsMinusIHamiltonian)
{
    SpinModelParams p;
    p.j = 1.5;
    p.delta = 0.7;
    p.V = 0.3;
    const auto g = spin_rotating_field(p);
    for (double t : {0.0, 0.4, 2.1})
        EXPECT_LT(error_max(Matrix(g.eval(t)), Matrix(-kI * spin_hamiltonian(p, t))), 1e-15);
    const auto s = spin_operators(1.5);
    EXPECT_LT(error_max(spin_hamiltonian(p, 0.0), Matrix(1.4 * s.jz + 0.6 * s.jx)), 1e-15);
}

TEST(SpinModel, WithoutFieldJzIsConserved)
{
    SpinModelParams p;
    p.j = 2.0;
    p.V = 0.0;
    const auto g = spin_rotating_field(p);
    std::mt19937_64 rng(4);
    Vector psi = test::random_vector(5, rng);
    psi.normalize();
    const auto jz = spin_operators(2.0).jz;
    const double before = psi.dot(jz * psi).real();
    const auto rec = propagate(g, psi, 0.0, 20.0, opt_scheme(0.1), make_engine(EngineKind::ChebyshevHermitian, 1e-14));
    EXPECT_NEAR(rec.final_state.dot(jz * rec.final_state).real(), before, 1e-12);
}

TEST(SpinModel, ExactStateSolvesSchroedingerEquation)
{
    SpinModelParams p;
    p.j = 1.0;
    p.delta = 1.3;
    p.V = 0.4;
    p.omega = 0.9;
    std::mt19937_64 rng(8);
    Vector psi0 = test::random_vector(3, rng);
    psi0.normalize();
    for (double t : {0.3, 1.7, 5.0}) {
        const double h = 1e-4;
        const Vector dpsi = (spin_exact_state(p, psi0, t + h) - spin_exact_state(p, psi0, t - h)) / (2 * h);
        const Vector rhs = -kI * spin_hamiltonian(p, t) * spin_exact_state(p, psi0, t);
        EXPECT_LT(error_max(dpsi, rhs), 1e-7);
        EXPECT_NEAR(spin_exact_state(p, psi0, t).norm(), 1.0, 1e-14);
    }
    EXPECT_LT(error_max(spin_exact_state(p, psi0, 0.0), psi0), 1e-15);
}

TEST(SpinModel, ResonantSpinHalfRabiOscillation)
{
    // at resonance the rotating-frame Hamiltonian is 2V Jx: <Jz> = cos(2Vt)/2
    SpinModelParams p;
    p.V = 0.7;
    for (double t : {0.5, 1.0, 3.0}) {
        const Vector psi = spin_exact_state(p, up(2), t);
        EXPECT_NEAR(jz_of(psi * psi.adjoint(), 0.5), 0.5 * std::cos(2 * p.V * t), 1e-14);
    }
}

TEST(SpinModel, LabFramePropagationMatchesExactState)
{
    for (double j : {0.5, 2.0}) {
        SpinModelParams p;
        p.j = j;
        const Index d = twice_spin(j) + 1;
        const auto rec = propagate(spin_rotating_field(p), up(d), 0.0, 10.0, opt_scheme(0.05),
                                   make_engine(EngineKind::ChebyshevHermitian, 1e-14));
        const Vector ex = spin_exact_state(p, up(d), 10.0);
        EXPECT_LT(error_max(Matrix(rec.final_state * rec.final_state.adjoint()), Matrix(ex * ex.adjoint())), 1e-8)
            << "j = " << j;
    }
}

TEST(SpinModel, ParameterValidation)
{
    SpinModelParams p;
    p.j = 0.7;
    EXPECT_THROW(p.validate(), std::invalid_argument);
    p.j = 0.5;
    p.gamma = -1.0;
    EXPECT_THROW(p.validate(), std::invalid_argument);
    p.gamma = 0.1;
    EXPECT_THROW(spin_exact_state(p, up(2), 1.0), std::invalid_argument);
    p.gamma = 0.0;
    p.ramp = FrequencyRamp{1.0, 2.0, 0.0, 10.0};
    EXPECT_THROW(spin_exact_state(p, up(2), 1.0), std::invalid_argument);
    EXPECT_THROW(dissipative_spin_exact(p, up_density(2), 1.0), std::invalid_argument);
}

// --- dissipative spin -------------------------------------------------------

TEST(DissipativeSpin, PropagationMatchesDenseRotatingFrameSolution)
{
    for (double j : {0.5, 1.5}) {
        SpinModelParams p;
        p.j = j;
        p.gamma = 0.2;
        p.omega = 0.8;
        const Index d = twice_spin(j) + 1;
        const auto rec = propagate(dissipative_spin_rotating_field(p), vec(up_density(d)), 0.0, 8.0, opt_scheme(0.02),
                                   make_engine(EngineKind::ChebyshevShifted, 1e-13));
        EXPECT_LT(error_max(unvec(rec.final_state), dissipative_spin_exact(p, up_density(d), 8.0)), 1e-9) << j;
    }
}

TEST(DissipativeSpin, SteadyStateIsStationaryDensityMatrix)
{
    for (double dw : {0.0, 0.3, -0.8}) {
        const double gamma = 0.25, V = 0.6;
        const Matrix r = spin_steady_state(1.0, V, 1.0 + dw, gamma);
        EXPECT_NEAR(r.trace().real(), 1.0, 1e-15);
        EXPECT_LT(error_max(r, Matrix(r.adjoint())), 1e-16);
        EXPECT_GE(Eigen::SelfAdjointEigenSolver<Matrix>(r).eigenvalues().minCoeff(), -1e-15);

        SpinModelParams p;
        p.V = V;
        p.gamma = gamma;
        p.omega = 1.0 + dw;
        const auto s = spin_operators(0.5);
        const Matrix L = lindblad_superop(spin_frame_hamiltonian(p), {{gamma, s.jminus}});
        EXPECT_LT((L * vec(r)).cwiseAbs().maxCoeff(), 1e-15);
        EXPECT_NEAR(jz_of(r, 0.5), spin_jz_steady(1.0, V, 1.0 + dw, gamma), 1e-15);
    }
}

TEST(DissipativeSpin, SteadyInversionValues)
{
    EXPECT_NEAR(spin_jz_steady(1.0, 1.0, 1.0, 0.01), 1.0 / (2.0001) - 0.5, 1e-15);
    // weak field far from resonance: close to the ground state
    EXPECT_NEAR(spin_jz_steady(1.0, 0.01, 3.0, 0.01), -0.5, 1e-4);
    EXPECT_THROW(spin_steady_state(1.0, 1.0, 1.0, 0.0), std::invalid_argument);
}

TEST(DissipativeSpin, LongTimeLimitReachesSteadyState)
{
    SpinModelParams p;
    p.gamma = 0.5;
    p.omega = 1.2;
    const Matrix R = spin_frame_rotation(p, 60.0);
    const Matrix frame = R.adjoint() * dissipative_spin_exact(p, up_density(2), 60.0) * R;
    EXPECT_LT(error_max(frame, spin_steady_state(p.delta, p.V, p.omega, p.gamma)), 1e-12);
}

TEST(ResonanceModes, EigenpairsOfRotatingFrameLiouvillian)
{
    for (double gamma : {0.01, 0.5, 3.0, 6.0}) {
        const double V = 1.0;
        const auto a = spin_resonance_modes(gamma, V);
        SpinModelParams p;
        p.V = V;
        p.gamma = gamma;
        const Matrix L = lindblad_superop(spin_frame_hamiltonian(p), {{gamma, spin_operators(0.5).jminus}});
        for (int k = 0; k < 3; ++k) {
            const Vector m = vec(a.modes[k]);
            EXPECT_LT(error_max(Vector(L * m), Vector(a.lambda[k] * m)), 1e-10 * (1 + std::abs(a.lambda[k])))
                << "gamma " << gamma << " mode " << k;
            EXPECT_NEAR(a.modes[k].trace().real(), 0.0, 1e-15);
        }
        EXPECT_LT((L * vec(a.rho_inf)).cwiseAbs().maxCoeff(), 1e-14);
    }
}

TEST(ResonanceModes, InitialStateDecomposition)
{
    for (double gamma : {0.01, 0.3, 1.0, 3.9, 5.0}) {
        for (double V : {0.5, 1.0}) {
            const auto a = spin_resonance_modes(gamma, V);
            const Matrix rho0 = a.rho_inf + a.c_plus * (a.modes[1] + a.modes[2]) + a.c_minus * (a.modes[1] - a.modes[2]);
            EXPECT_LT(error_max(rho0, up_density(2)), 1e-12) << gamma << " " << V;
        }
    }
}

TEST(ResonanceModes, ModeExpansionReproducesDenseEvolution)
{
    const double gamma = 0.4, V = 1.0;
    const auto a = spin_resonance_modes(gamma, V);
    SpinModelParams p;
    p.V = V;
    p.gamma = gamma;
    for (double t : {0.0, 0.7, 3.0, 9.0}) {
        const Matrix rho = a.rho_inf + (a.c_plus + a.c_minus) * std::exp(a.lambda[1] * t) * a.modes[1] +
                           (a.c_plus - a.c_minus) * std::exp(a.lambda[2] * t) * a.modes[2];
        const Matrix R = spin_frame_rotation(p, t);
        const Matrix dense = R.adjoint() * dissipative_spin_exact(p, up_density(2), t) * R;
        EXPECT_LT(error_max(rho, dense), 1e-12) << t;
    }
}

TEST(ResonanceModes, OverdampedFrequencyIsUndefined)
{
    EXPECT_TRUE(std::isnan(spin_resonance_modes(5.0, 1.0).omega_tilde));
    EXPECT_NEAR(spin_resonance_modes(2.0, 1.0).omega_tilde, 0.5 * std::sqrt(12.0), 1e-15);
    EXPECT_THROW(spin_resonance_modes(0.0, 1.0), std::invalid_argument);
}

TEST(AnalyticInversion, StartsAtOneHalf)
{
    for (double gamma : {0.0, 0.01, 0.5, 2.0, 3.99})
        EXPECT_NEAR(spin_jz_analytic(0.0, gamma, 1.0), 0.5, 1e-15) << gamma;
}

TEST(AnalyticInversion, LongTimeLimit)
{
    const double gamma = 0.3, V = 0.8;
    EXPECT_NEAR(spin_jz_analytic(400.0, gamma, V), spin_jz_steady(1.0, V, 1.0, gamma), 1e-15);
    EXPECT_NEAR(spin_jz_steady(1.0, V, 1.0, gamma), -gamma * gamma / (2 * (gamma * gamma + 2 * V * V)), 1e-15);
}

TEST(AnalyticInversion, MatchesDenseSolutionOnAGrid)
{
    for (double gamma : {0.01, 0.2, 1.5}) {
        SpinModelParams p;
        p.gamma = gamma;
        for (double t = 0.0; t <= 20.0; t += 0.37) {
            const double dense = jz_of(dissipative_spin_exact(p, up_density(2), t), 0.5);
            EXPECT_NEAR(spin_jz_analytic(t, gamma, 1.0), dense, 1e-12) << gamma << " " << t;
        }
    }
    EXPECT_THROW(spin_jz_analytic(1.0, 4.0, 1.0), std::invalid_argument);
}

TEST(AnalyticInversion, ClosedLimitIsRabi)
{
    for (double t : {0.2, 1.1, 7.0})
        EXPECT_NEAR(spin_jz_analytic(t, 0.0, 0.6), 0.5 * std::cos(1.2 * t), 1e-15);
}

// --- Dicke model ------------------------------------------------------------

TEST(DickeModel, OperatorAlgebra)
{
    const auto o = dicke_operators(1.0, 5);
    EXPECT_EQ(o.dim(), 18);
    EXPECT_LT(error_max(Matrix(commutator(o.a, o.jz)), Matrix::Zero(18, 18)), 1e-15);
    EXPECT_LT(error_max(o.coupling, Matrix(2.0 * (o.a + o.a_dag) * o.jx)), 1e-14);
    EXPECT_LT(error_max(o.coupling, Matrix(o.coupling.adjoint())), 1e-15);
}

TEST(DickeModel, GeneratorParts)
{
    DickeParams p;
    p.n_max = 4;
    const auto g = dicke_generator(p);
    ASSERT_EQ(g.modulated_parts().size(), 1u);
    const auto o = dicke_operators(p.j, p.n_max);
    for (double t : {0.0, 1.3}) {
        const Matrix H = dicke_hamiltonian(p, p.lambda(t));
        const Matrix L = lindblad_superop(H, {{p.kappa, o.a}});
        EXPECT_LT(error_max(to_dense(g.eval(t)), L), 1e-14);
    }
    EXPECT_DOUBLE_EQ(p.lambda(0.0), 1.5);
    EXPECT_NEAR(p.lambda(M_PI / 4.0), 1.0, 1e-15);
}

TEST(DickeModel, ClosedUndrivenEnergyIsConserved)
{
    DickeParams p;
    p.j = 1.0;
    p.n_max = 6;
    p.kappa = 0.0;
    p.dlambda = 0.0;
    p.lambda0 = 0.3;
    const Matrix H = dicke_hamiltonian(p, p.lambda0);
    std::mt19937_64 rng(12);
    const Matrix rho0 = test::random_density(p.dim(), rng);
    const auto rec = propagate(dicke_generator(p), vec(rho0), 0.0, 10.0, opt_scheme(0.05),
                               make_engine(EngineKind::ChebyshevShifted, 1e-13));
    EXPECT_NEAR((unvec(rec.final_state) * H).trace().real(), (rho0 * H).trace().real(), 1e-11);
    EXPECT_NEAR(unvec(rec.final_state).trace().real(), 1.0, 1e-12);
}

TEST(DickeModel, PhotonDecayWithoutCoupling)
{
    // d<n>/dt = -2 kappa <n> for H = Omega a^+a and kappa D[a]
    DickeParams p;
    p.n_max = 8;
    p.lambda0 = 0.0;
    p.dlambda = 0.0;
    p.kappa = 0.1;
    const auto o = dicke_operators(p.j, p.n_max);
    Matrix rho0 = Matrix::Zero(p.dim(), p.dim());
    rho0(3, 3) = 1.0; // spin +1/2, three photons
    const auto rec = propagate(dicke_generator(p), vec(rho0), 0.0, 5.0, opt_scheme(0.05),
                               make_engine(EngineKind::ChebyshevShifted, 1e-13));
    EXPECT_NEAR((unvec(rec.final_state) * o.n).trace().real(), 3.0 * std::exp(-2 * 0.1 * 5.0), 1e-10);
}

TEST(DickeModel, WeakCouplingLevelsAtLargeCutoff)
{
    for (double j : {0.5, 5.0}) {
        DickeParams p;
        p.j = j;
        p.n_max = 20;
        p.lambda0 = 1e-3;
        const auto e = sorted_eigenvalues(dicke_hamiltonian(p, p.lambda0));
        const auto lv = dicke_levels(j, 1.0, 1e-3);
        // relative to the ground level, to first order in lambda0
        const double e0 = e[0];
        auto has = [&](double E) {
            double best = 1e9;
            for (double x : e)
                best = std::min(best, std::abs(x - e0 - E));
            return best;
        };
        EXPECT_LT(has(lv.E1p), 1e-5) << j;
        EXPECT_LT(has(lv.E1m), 1e-5) << j;
        EXPECT_LT(has(lv.E2p), 1e-5) << j;
        EXPECT_LT(has(lv.E2m), 1e-5) << j;
    }
}

TEST(DickeModel, LevelsAndTransitions)
{
    const auto l = dicke_levels(5.0, 1.0, 0.02);
    EXPECT_NEAR(l.E1p, 1.0 + std::sqrt(10.0) * 0.02, 1e-15);
    EXPECT_NEAR(l.E2p, 2.0 + std::sqrt(38.0) * 0.02, 1e-15);
    EXPECT_NEAR(l.E2m, 2.0 - std::sqrt(38.0) * 0.02, 1e-15);
    const auto up = transition_energies(5.0, 1.0, 0.02, Branch::Upper);
    const auto lo = transition_energies(5.0, 1.0, 0.02, Branch::Lower);
    for (int k = 0; k < 3; ++k) {
        EXPECT_LT(up.omega[k], up.omega[k + 1]);
        EXPECT_LT(lo.omega[k], lo.omega[k + 1]);
    }
    // mirror image about Omega
    for (int k = 0; k < 4; ++k)
        EXPECT_NEAR(up.omega[k] - 1.0, -(lo.omega[3 - k] - 1.0), 1e-15);
    // E2+ -> E1+ and E1+ -> ground
    EXPECT_NEAR(up.omega[1], l.E2p - l.E1p, 1e-15);
    EXPECT_NEAR(up.omega[2], l.E1p, 1e-15);
    EXPECT_NEAR(up.omega[3], l.E2p - l.E1m, 1e-15);
    EXPECT_EQ(up.forbidden, 3);
    EXPECT_EQ(lo.forbidden, 0);
}

TEST(DickeModel, HamiltonianConservesParity)
{
    // P = exp(i pi (a^+a + Jz + j)) is diagonal with entries +-1
    for (double j : {0.5, 2.0}) {
        DickeParams p;
        p.j = j;
        p.n_max = 6;
        const auto o = dicke_operators(j, p.n_max);
        Matrix P = Matrix::Zero(p.dim(), p.dim());
        for (Index i = 0; i < p.dim(); ++i) {
            const double q = (o.n(i, i) + o.jz(i, i)).real() + j;
            P(i, i) = std::lround(q) % 2 == 0 ? 1.0 : -1.0;
        }
        for (double lam : {0.3, 1.5})
            EXPECT_LT(commutator(P, dicke_hamiltonian(p, lam)).cwiseAbs().maxCoeff(), 1e-15);
        EXPECT_LT((P * o.a + o.a * P).cwiseAbs().maxCoeff(), 1e-15);
    }
}

TEST(DickeModel, DashedLineIsSuppressedNotAbsent)
{
    // with E2+ = (|+,1> + |-,2>)/sqrt2 and E1+- = (|+,0> +- |-,1>)/sqrt2,
    // <E1-|a|E2+> = (1 - sqrt2)/2 and <E1+|a|E2+> = (1 + sqrt2)/2
    DickeParams p;
    p.j = 0.5;
    p.n_max = 20;
    p.lambda0 = 1e-4;
    const Matrix H = dicke_hamiltonian(p, p.lambda0);
    Eigen::SelfAdjointEigenSolver<Matrix> es(H);
    const auto o = dicke_operators(p.j, p.n_max);
    const auto lv = dicke_levels(0.5, 1.0, p.lambda0);
    const double e0 = es.eigenvalues()(0);
    auto state = [&](double E) {
        Index best = 0;
        for (Index i = 0; i < H.rows(); ++i)
            if (std::abs(es.eigenvalues()(i) - e0 - E) < std::abs(es.eigenvalues()(best) - e0 - E))
                best = i;
        return Vector(es.eigenvectors().col(best));
    };
    const Vector e2p = state(lv.E2p), e1m = state(lv.E1m), e1p = state(lv.E1p);
    const double r2 = std::sqrt(2.0);
    EXPECT_NEAR(std::abs(e1p.dot(o.a * e2p)), (1 + r2) / 2, 1e-3);
    EXPECT_NEAR(std::abs(e1m.dot(o.a * e2p)), (r2 - 1) / 2, 1e-3);
}

TEST(DickeModel, GroundStateAndValidation)
{
    DickeParams p;
    p.j = 5.0;
    p.n_max = 7;
    EXPECT_EQ(p.dim(), 88);
    const Matrix rho = unvec(dicke_ground_state(p));
    const auto o = dicke_operators(p.j, p.n_max);
    EXPECT_NEAR((rho * o.jz).trace().real(), -5.0, 1e-15);
    EXPECT_NEAR((rho * o.n).trace().real(), 0.0, 1e-15);
    p.n_max = 0;
    EXPECT_THROW(p.validate(), std::invalid_argument);
    p.n_max = 5;
    p.kappa = -1.0;
    EXPECT_THROW(p.validate(), std::invalid_argument);
    p.kappa = 0.01;
    p.j = 1e6;
    p.n_max = 1 << 20;
    EXPECT_THROW(p.validate(), std::length_error);
}
