#pragma once

// Periodic steady state of a periodically modulated Liouvillian in the
// frequency domain: rho(t) = sum_{|n|<=K} rho_n e^{i n wp t} with
//     (B - i n wp) rho_n + sum_{m != 0} c_m C rho_{n-m} = 0,   tr rho_0 = 1.
// Solved by GMRES, preconditioned per harmonic with the Sylvester part
// X -> (L - i n wp) X + X R of the constant generator (Bartels-Stewart).
// The time-domain relaxation over ~1/kappa is avoided entirely; the result
// is meant as the starting point of settle_to_periodic_steady_state.

#include <cmath>
#include <functional>
#include <numbers>
#include <stdexcept>
#include <vector>

#include <Eigen/Eigenvalues>

#include "cfet/generator.hpp"
#include "cfet/liouvillian.hpp"

namespace cfet
{

struct GmresResult
{
    Vector x;
    int iterations = 0;
    double residual = 0.0; // relative, ||b - A x|| / ||b||
};

/// Restarted GMRES with right preconditioning: solves A x = b using A M.
inline GmresResult gmres(const std::function<Vector(const Vector&)>& A, const std::function<Vector(const Vector&)>& M,
                         const Vector& b, double tol, int restart, int max_iter)
{
    GmresResult res;
    const double bn = b.norm();
    res.x = Vector::Zero(b.size());
    if (bn == 0.0)
        return res;
    Vector r = b;
    while (res.iterations < max_iter) {
        const double beta = r.norm();
        res.residual = beta / bn;
        if (res.residual < tol)
            return res;
        const int m = std::min(restart, max_iter - res.iterations);
        std::vector<Vector> V{r / beta};
        Matrix H = Matrix::Zero(m + 1, m);
        std::vector<cplx> cs, sn;
        Vector g = Vector::Zero(m + 1);
        g(0) = beta;
        int k = 0;
        for (; k < m; ++k) {
            Vector w = A(M(V[k]));
            ++res.iterations;
            for (int i = 0; i <= k; ++i) {
                H(i, k) = V[i].dot(w);
                w -= H(i, k) * V[i];
            }
            const double hn = w.norm();
            H(k + 1, k) = hn;
            for (int i = 0; i < k; ++i) {
                const cplx a = H(i, k), c = H(i + 1, k);
                H(i, k) = std::conj(cs[i]) * a + std::conj(sn[i]) * c;
                H(i + 1, k) = -sn[i] * a + cs[i] * c;
            }
            const cplx a = H(k, k), c = H(k + 1, k);
            const double rr = std::hypot(std::abs(a), std::abs(c));
            cs.push_back(rr == 0.0 ? cplx(1.0) : a / rr);
            sn.push_back(rr == 0.0 ? cplx(0.0) : c / rr);
            H(k, k) = rr;
            H(k + 1, k) = 0.0;
            g(k + 1) = -sn[k] * g(k);
            g(k) = std::conj(cs[k]) * g(k);
            if (std::abs(g(k + 1)) / bn < tol || hn == 0.0) {
                ++k;
                break;
            }
            V.push_back(w / hn);
        }
        const Vector y = H.topLeftCorner(k, k).triangularView<Eigen::Upper>().solve(g.head(k));
        Vector z = Vector::Zero(b.size());
        for (int i = 0; i < k; ++i)
            z += y(i) * V[i];
        res.x += M(z);
        r = b - A(res.x);
        res.residual = r.norm() / bn;
    }
    return res;
}

/// Solves (TL + s) X + X TR = F for upper triangular TL, TR.
inline Matrix triangular_sylvester(const Matrix& TL, const Matrix& TR, cplx s, const Matrix& F, double floor)
{
    const Index d = TL.rows();
    Matrix X(d, d);
    Matrix T = TL;
    for (Index k = 0; k < d; ++k) {
        Vector rhs = F.col(k);
        if (k > 0)
            rhs.noalias() -= X.leftCols(k) * TR.col(k).head(k);
        for (Index i = 0; i < d; ++i) {
            cplx p = TL(i, i) + TR(k, k) + s;
            if (std::abs(p) < floor)
                p = floor;
            T(i, i) = p;
        }
        X.col(k) = T.triangularView<Eigen::Upper>().solve(rhs);
    }
    return X;
}

struct HarmonicBalanceResult
{
    Vector rho;          // periodic state at the requested time
    int harmonics = 0;
    int iterations = 0;
    double residual = 0.0; // relative GMRES residual
    double tail = 0.0;     // max entry of the outermost harmonics
};

/// Frequency-domain periodic state of gen (all modulations periodic with
/// period 2 pi / wp), evaluated at time t.
inline HarmonicBalanceResult harmonic_balance_state(const Generator<LiouvillianForm>& gen, double wp, double t,
                                                    int harmonics = 6, double tol = 1e-13, int max_iter = 600)
{
    if (!(wp > 0.0) || harmonics < 0)
        throw std::invalid_argument("harmonic_balance_state: needs wp > 0 and harmonics >= 0");
    const auto& parts = gen.modulated_parts();
    const int K = parts.empty() ? 0 : harmonics;
    const double T = 2.0 * std::numbers::pi / wp;

    // Fourier coefficients f_k(t) = sum_m c_km e^{i m wp t}, |m| <= 2K
    const int nf = std::max(64, 8 * K + 8);
    const int mm = 2 * K;
    std::vector<std::vector<cplx>> c(parts.size(), std::vector<cplx>(2 * mm + 1, 0.0));
    for (int s = 0; s < nf; ++s) {
        const double ts = T * s / nf;
        const auto f = gen.modulations(ts);
        const auto f1 = gen.modulations(ts + T);
        for (std::size_t k = 0; k < parts.size(); ++k) {
            if (std::abs(f1[k] - f[k]) > 1e-9 * (1.0 + std::abs(f[k])))
                throw std::invalid_argument("harmonic_balance_state: modulation is not periodic in 2 pi / wp");
            for (int m = -mm; m <= mm; ++m)
                c[k][m + mm] += f[k] * std::exp(-kI * (m * wp * ts)) / static_cast<double>(nf);
        }
    }

    std::vector<double> mean(parts.size());
    for (std::size_t k = 0; k < parts.size(); ++k)
        mean[k] = c[k][mm].real();
    const LiouvillianForm Bbar = gen.assemble(1.0, mean);
    const Index d = Bbar.system_dim();
    const Index D = d * d;
    const int nb = 2 * K + 1;

    const Eigen::ComplexSchur<Matrix> sl(Matrix(Bbar.left())), sr(Matrix(Bbar.right()));
    const Matrix& U = sl.matrixU();
    const Matrix& TL = sl.matrixT();
    const Matrix& Vr = sr.matrixU();
    const Matrix& TR = sr.matrixT();
    const double scale = std::max(TL.cwiseAbs().maxCoeff() + TR.cwiseAbs().maxCoeff(), 1e-300);
    const double floor = 1e-10 * scale;

    auto A = [&](const Vector& x) {
        Vector y(nb * D);
        Vector tmp(D);
        for (int n = -K; n <= K; ++n) {
            const Vector xn = x.segment((n + K) * D, D);
            Bbar.apply(xn, tmp);
            Vector yn = tmp - kI * (n * wp) * xn;
            for (int m = -mm; m <= mm; ++m) {
                const int src = n - m;
                if (m == 0 || src < -K || src > K)
                    continue;
                const Vector xs = x.segment((src + K) * D, D);
                for (std::size_t k = 0; k < parts.size(); ++k) {
                    const cplx w = c[k][m + mm];
                    if (std::abs(w) < 1e-15)
                        continue;
                    parts[k].op.apply(xs, tmp);
                    yn += w * tmp;
                }
            }
            y.segment((n + K) * D, D) = yn;
        }
        cplx tr = 0.0;
        for (Index i = 0; i < d; ++i)
            tr += x(K * D + i * d + i);
        for (Index i = 0; i < d; ++i)
            y(K * D + i * d + i) += tr * scale;
        return y;
    };
    auto M = [&](const Vector& x) {
        Vector y(nb * D);
        for (int n = -K; n <= K; ++n) {
            const Matrix F = Eigen::Map<const Matrix>(x.data() + (n + K) * D, d, d);
            const Matrix Ft = U.adjoint() * F * Vr;
            const Matrix X = U * triangular_sylvester(TL, TR, -kI * (n * wp), Ft, floor) * Vr.adjoint();
            y.segment((n + K) * D, D) = Eigen::Map<const Vector>(X.data(), D);
        }
        return y;
    };

    Vector b = Vector::Zero(nb * D);
    for (Index i = 0; i < d; ++i)
        b(K * D + i * d + i) = scale / static_cast<double>(d);
    const auto sol = gmres(A, M, b, tol, 120, max_iter);

    HarmonicBalanceResult out;
    out.harmonics = K;
    out.iterations = sol.iterations;
    out.residual = sol.residual;
    if (!sol.x.allFinite())
        throw NumericalFailure("harmonic_balance_state: solution is not finite", sol.residual);
    if (K > 0)
        out.tail = std::max(sol.x.segment(0, D).cwiseAbs().maxCoeff(), sol.x.segment(2 * K * D, D).cwiseAbs().maxCoeff());
    Vector x = Vector::Zero(D);
    for (int n = -K; n <= K; ++n)
        x += std::exp(kI * (n * wp * t)) * sol.x.segment((n + K) * D, D);
    Matrix rho = unvec(x);
    rho = (0.5 * (rho + rho.adjoint())).eval();
    rho /= rho.trace();
    out.rho = vec(rho);
    return out;
}

} // namespace cfet
