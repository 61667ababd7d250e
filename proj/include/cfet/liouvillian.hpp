#pragma once

// Matrix-free superoperator of sandwich form
//
//     S(rho) = L rho + rho R + sum_m w_m A_m rho A_m^+
//
// which is closed under linear combinations and contains every Lindblad
// generator: -i[H, .] + sum_k g_k D[A_k] has L = -iH - sum g_k A_k^+ A_k,
// R = +iH - sum g_k A_k^+ A_k and sandwich weights 2 g_k.
//
// The d x d factors are kept sparse so that one application costs
// O(nnz * d) instead of the O(d^4) of an explicit d^2 x d^2 matrix. Vectorized
// form (column stacking): I (x) L + R^T (x) I + sum_m w_m conj(A_m) (x) A_m.

#include <memory>
#include <span>
#include <vector>

#include <Eigen/SparseCore>

#include "cfet/operators.hpp"
#include "cfet/spectral.hpp"

namespace cfet
{

class LiouvillianForm
{
public:
    using Sparse = Eigen::SparseMatrix<cplx, Eigen::ColMajor>;

    /// Shared, immutable sandwich factor A together with cached data.
    struct SandwichOp
    {
        Sparse op;
        Sparse op_adj;
        Sparse op_t;
        Eigen::VectorXd row_abs;   // sum_k |A_ik|
        Eigen::VectorXcd diag;     // A_ii
        double norm2_sq_bound = 0; // >= ||A||_2^2
        cplx trace = 0.0;
    };

    struct Sandwich
    {
        cplx weight;
        std::shared_ptr<const SandwichOp> factor;
    };

    LiouvillianForm() = default;

    explicit LiouvillianForm(Index d)
        : d_(d), left_t_(d, d), right_(d, d)
    {}

    /// -i[H, .]
    static LiouvillianForm hamiltonian(const Matrix& H)
    {
        check_same_dim(H, {});
        LiouvillianForm f(H.rows());
        f.left_t_ = sparse((-kI * H).transpose());
        f.right_ = sparse(kI * H);
        return f;
    }

    /// -i[H, .] + sum_k rate_k D[A_k]
    static LiouvillianForm lindblad(const Matrix& H, std::span<const Jump> jumps)
    {
        check_same_dim(H, jumps);
        Matrix left = -kI * H;
        Matrix right = kI * H;
        LiouvillianForm f(H.rows());
        for (const auto& jump : jumps) {
            if (jump.rate == 0.0)
                continue;
            const Matrix AdA = jump.op.adjoint() * jump.op;
            left -= jump.rate * AdA;
            right -= jump.rate * AdA;
            f.sandwiches_.push_back({cplx(2.0 * jump.rate), make_factor(jump.op)});
        }
        f.left_t_ = sparse(left.transpose());
        f.right_ = sparse(right);
        return f;
    }

    static LiouvillianForm lindblad(const Matrix& H, const std::vector<Jump>& jumps)
    {
        return lindblad(H, std::span<const Jump>(jumps));
    }

    static std::shared_ptr<const SandwichOp> make_factor(const Matrix& A)
    {
        auto s = std::make_shared<SandwichOp>();
        s->op = sparse(A);
        s->op_adj = sparse(A.adjoint());
        s->op_t = sparse(A.transpose());
        s->row_abs = A.cwiseAbs().rowwise().sum();
        s->diag = A.diagonal();
        const double n1 = A.cwiseAbs().colwise().sum().maxCoeff();
        const double ninf = A.cwiseAbs().rowwise().sum().maxCoeff();
        s->norm2_sq_bound = n1 * ninf;
        s->trace = A.trace();
        return s;
    }

    Index system_dim() const { return d_; }
    Index dim() const { return d_ * d_; }

    Sparse left() const { return left_t_.transpose(); }
    const Sparse& right() const { return right_; }
    const std::vector<Sandwich>& sandwiches() const { return sandwiches_; }

    Matrix apply(const Matrix& rho) const
    {
        Matrix out = left() * rho;
        out.noalias() += rho * right_;
        for (const auto& s : sandwiches_) {
            if (s.weight == 0.0)
                continue;
            const Matrix tmp = s.factor->op * rho;
            out.noalias() += s.weight * (tmp * s.factor->op_adj);
        }
        return out;
    }

    void apply(const Vector& in, Vector& out) const
    {
        if (in.size() != dim())
            throw std::invalid_argument("LiouvillianForm::apply: state has wrong length");
        out.resize(dim());
        Eigen::Map<const Matrix> rho(in.data(), d_, d_);
        Eigen::Map<Matrix> res(out.data(), d_, d_);
        // Eigen's dense * sparse kernel is several times faster than
        // sparse * dense, so the left products are formed transposed.
        tmp_ = rho.transpose();
        acc_.noalias() = tmp_ * left_t_;
        for (const auto& s : sandwiches_) {
            if (s.weight == 0.0)
                continue;
            res.noalias() = rho * s.factor->op_adj;
            tmp_ = res.transpose();
            acc_.noalias() += s.weight * (tmp_ * s.factor->op_t);
        }
        res = acc_.transpose();
        res.noalias() += rho * right_;
    }

    /// Explicit d^2 x d^2 matrix; for oracles on small systems.
    Matrix to_dense() const
    {
        const Matrix id = identity(d_);
        Matrix S = kron(id, Matrix(left())) + kron(Matrix(right_).transpose(), id);
        for (const auto& s : sandwiches_) {
            const Matrix A(s.factor->op);
            S += s.weight * kron(A.conjugate(), A);
        }
        return S;
    }

    cplx trace() const
    {
        const double d = static_cast<double>(d_);
        cplx t = d * (diag_sum(left_t_) + diag_sum(right_));
        for (const auto& s : sandwiches_)
            t += s.weight * std::norm(s.factor->trace);
        return t;
    }

    bool is_zero() const
    {
        auto zero = [](const Sparse& m) {
            for (Index k = 0; k < m.outerSize(); ++k)
                for (Sparse::InnerIterator it(m, k); it; ++it)
                    if (it.value() != 0.0)
                        return false;
            return true;
        };
        if (!zero(left_t_) || !zero(right_))
            return false;
        for (const auto& s : sandwiches_)
            if (s.weight != 0.0)
                return false;
        return true;
    }

    /// Gershgorin box of the vectorized operator intersected with a bound on
    /// its numerical range. The sandwich terms enter the numerical range bound
    /// through ||A||_2^2 <= ||A||_1 ||A||_inf.
    SpectralBox spectral_bounds() const
    {
        const Matrix L(left()), R(right_);
        const Index d = d_;

        // row (i,j) of the vectorized operator: centre and off-diagonal radius
        Eigen::VectorXd rl(d), rr(d);
        for (Index i = 0; i < d; ++i) {
            rl(i) = L.row(i).cwiseAbs().sum() - std::abs(L(i, i));
            rr(i) = R.col(i).cwiseAbs().sum() - std::abs(R(i, i));
        }
        constexpr double inf = std::numeric_limits<double>::infinity();
        SpectralBox discs{inf, -inf, inf, -inf};
        for (Index j = 0; j < d; ++j) {
            for (Index i = 0; i < d; ++i) {
                cplx c = L(i, i) + R(j, j);
                double r = rl(i) + rr(j);
                for (const auto& s : sandwiches_) {
                    const auto& f = *s.factor;
                    const cplx aii = f.diag(i), ajj = f.diag(j);
                    c += s.weight * aii * std::conj(ajj);
                    r += std::abs(s.weight) *
                         (f.row_abs(i) * f.row_abs(j) - std::abs(aii) * std::abs(ajj));
                }
                discs.re_lo = std::min(discs.re_lo, c.real() - r);
                discs.re_hi = std::max(discs.re_hi, c.real() + r);
                discs.im_lo = std::min(discs.im_lo, c.imag() - r);
                discs.im_hi = std::max(discs.im_hi, c.imag() + r);
            }
        }

        double sandwich = 0.0;
        for (const auto& s : sandwiches_)
            sandwich += std::abs(s.weight) * s.factor->norm2_sq_bound;
        const Interval lre = hermitian_gershgorin(Matrix(0.5 * (L + L.adjoint())));
        const Interval rre = hermitian_gershgorin(Matrix(0.5 * (R + R.adjoint())));
        const Interval lim = hermitian_gershgorin(Matrix((L - L.adjoint()) / (2.0 * kI)));
        const Interval rim = hermitian_gershgorin(Matrix((R - R.adjoint()) / (2.0 * kI)));
        const SpectralBox range{lre.lo + rre.lo - sandwich, lre.hi + rre.hi + sandwich,
                                lim.lo + rim.lo - sandwich, lim.hi + rim.hi + sandwich};
        return discs.intersect(range);
    }

    LiouvillianForm& operator*=(cplx w)
    {
        left_t_ *= w;
        right_ *= w;
        for (auto& s : sandwiches_)
            s.weight *= w;
        return *this;
    }

    /// this += w * other
    LiouvillianForm& add_scaled(cplx w, const LiouvillianForm& other)
    {
        if (other.d_ != d_)
            throw std::invalid_argument("LiouvillianForm: dimension mismatch in linear combination");
        if (w == 0.0)
            return *this;
        left_t_ += w * other.left_t_;
        right_ += w * other.right_;
        for (const auto& s : other.sandwiches_) {
            auto it = std::find_if(sandwiches_.begin(), sandwiches_.end(),
                                   [&](const Sandwich& x) { return x.factor == s.factor; });
            if (it != sandwiches_.end())
                it->weight += w * s.weight;
            else
                sandwiches_.push_back({w * s.weight, s.factor});
        }
        return *this;
    }

private:
    static Sparse sparse(const Matrix& m)
    {
        return m.sparseView(0.0, 0.0);
    }

    static cplx diag_sum(const Sparse& m)
    {
        cplx t = 0.0;
        for (Index k = 0; k < m.outerSize(); ++k)
            for (Sparse::InnerIterator it(m, k); it; ++it)
                if (it.row() == it.col())
                    t += it.value();
        return t;
    }

    Index d_ = 0;
    Sparse left_t_, right_; // left factor stored transposed
    std::vector<Sandwich> sandwiches_;
    mutable Matrix tmp_, acc_;
};

// Generic operator interface (see spectral.hpp for the dense counterparts).

inline Index state_dim(const LiouvillianForm& L) { return L.dim(); }

inline void apply(const LiouvillianForm& L, const Vector& in, Vector& out) { L.apply(in, out); }

inline cplx operator_trace(const LiouvillianForm& L) { return L.trace(); }

inline Matrix to_dense(const LiouvillianForm& L) { return L.to_dense(); }

inline bool is_zero(const LiouvillianForm& L) { return L.is_zero(); }

inline SpectralBox spectral_bounds(const LiouvillianForm& L) { return L.spectral_bounds(); }

inline void add_scaled(LiouvillianForm& acc, double w, const LiouvillianForm& x) { acc.add_scaled(w, x); }

inline LiouvillianForm scaled(const LiouvillianForm& x, double w)
{
    LiouvillianForm out = x;
    out *= w;
    return out;
}

inline void add_scaled(Matrix& acc, double w, const Matrix& x)
{
    if (acc.rows() != x.rows() || acc.cols() != x.cols())
        throw std::invalid_argument("operator dimension mismatch in linear combination");
    if (w != 0.0)
        acc += w * x;
}

inline Matrix scaled(const Matrix& x, double w) { return w * x; }

} // namespace cfet
