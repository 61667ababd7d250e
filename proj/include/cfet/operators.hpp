#pragma once

// Operator construction for spin and boson systems, tensor products and the
// dense Lindblad superoperator.
//
// Vectorization convention (used everywhere in this library): column stacking.
// vec(rho) stacks the columns of rho, so that
//     vec(X * Y * Z) = (Z^T kron X) * vec(Y).
// Consequently a left multiplication rho -> A rho is I kron A, and a right
// multiplication rho -> rho B is B^T kron I.

#include <cmath>
#include <limits>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "cfet/types.hpp"

namespace cfet
{

struct SpinOperators
{
    double j = 0.5;
    Matrix jx, jy, jz, jplus, jminus;

    Index dim() const { return jz.rows(); }
};

struct BosonOperators
{
    int n_max = 1;
    Matrix a, a_dag;

    Index dim() const { return a.rows(); }
};

/// A dissipation channel rate * D[op], with D[A] rho = 2 A rho A^+ - A^+A rho - rho A^+A.
struct Jump
{
    double rate = 0.0;
    Matrix op;
};

/// Returns 2j after checking that j is a positive half-integer.
inline int twice_spin(double j)
{
    const double twoj = 2.0 * j;
    const double rounded = std::round(twoj);
    if (!std::isfinite(j) || rounded < 1.0 || std::abs(twoj - rounded) > 1e-12)
        throw std::invalid_argument("spin length must be a positive half-integer, got " +
                                    std::to_string(j));
    return static_cast<int>(rounded);
}

/// Angular momentum matrices in the J_z eigenbasis ordered m = j, j-1, ..., -j.
inline SpinOperators spin_operators(double j)
{
    const int twoj = twice_spin(j);
    j = 0.5 * twoj;
    const Index d = twoj + 1;

    SpinOperators s;
    s.j = j;
    s.jz = Matrix::Zero(d, d);
    s.jplus = Matrix::Zero(d, d);
    for (Index k = 0; k < d; ++k) {
        const double m = j - static_cast<double>(k);
        s.jz(k, k) = m;
        if (k > 0)
            s.jplus(k - 1, k) = std::sqrt(j * (j + 1.0) - m * (m + 1.0));
    }
    s.jminus = s.jplus.adjoint();
    s.jx = 0.5 * (s.jplus + s.jminus);
    s.jy = (s.jplus - s.jminus) / (2.0 * kI);
    return s;
}

/// Truncated Fock space with basis |0>, ..., |n_max>.
inline BosonOperators boson_operators(int n_max)
{
    if (n_max < 1)
        throw std::invalid_argument("photon cutoff n_max must be >= 1");
    const Index d = n_max + 1;
    BosonOperators b;
    b.n_max = n_max;
    b.a = Matrix::Zero(d, d);
    for (Index n = 1; n < d; ++n)
        b.a(n - 1, n) = std::sqrt(static_cast<double>(n));
    b.a_dag = b.a.adjoint();
    return b;
}

/// Largest Kronecker product dimension we are willing to form densely.
inline constexpr Index kMaxDenseDim = 1 << 16;

inline Index checked_product_dim(Index da, Index db)
{
    Index out = 0;
    if (da < 0 || db < 0 || __builtin_mul_overflow(da, db, &out) || out > kMaxDenseDim)
        throw std::length_error("tensor product dimension overflow: " + std::to_string(da) +
                                " x " + std::to_string(db));
    return out;
}

inline Matrix kron(const Matrix& A, const Matrix& B)
{
    const Index rows = checked_product_dim(A.rows(), B.rows());
    const Index cols = checked_product_dim(A.cols(), B.cols());
    Matrix K(rows, cols);
    for (Index i = 0; i < A.rows(); ++i)
        for (Index j = 0; j < A.cols(); ++j)
            K.block(i * B.rows(), j * B.cols(), B.rows(), B.cols()) = A(i, j) * B;
    return K;
}

inline Matrix commutator(const Matrix& A, const Matrix& B) { return A * B - B * A; }

inline Matrix identity(Index d) { return Matrix::Identity(d, d); }

inline Vector vec(const Matrix& rho)
{
    return Eigen::Map<const Vector>(rho.data(), rho.size());
}

inline Matrix unvec(const Vector& v)
{
    const auto d = static_cast<Index>(std::llround(std::sqrt(static_cast<double>(v.size()))));
    if (d * d != v.size())
        throw std::invalid_argument("unvec: length " + std::to_string(v.size()) +
                                    " is not a perfect square");
    return Eigen::Map<const Matrix>(v.data(), d, d);
}

inline void check_same_dim(const Matrix& H, std::span<const Jump> jumps)
{
    if (H.rows() != H.cols())
        throw std::invalid_argument("Hamiltonian must be square");
    for (const auto& jump : jumps) {
        if (jump.op.rows() != H.rows() || jump.op.cols() != H.cols())
            throw std::invalid_argument("jump operator dimension does not match Hamiltonian");
        if (!(jump.rate >= 0.0))
            throw std::invalid_argument("dissipation rates must be non-negative");
    }
}

/// Dense Liouvillian -i[H, .] + sum_k rate_k D[A_k] acting on column-stacked
/// density matrices. Only sensible for small d (the result is d^2 x d^2).
inline Matrix lindblad_superop(const Matrix& H, std::span<const Jump> jumps = {})
{
    check_same_dim(H, jumps);
    const Index d = H.rows();
    const Matrix id = identity(d);
    Matrix L = -kI * (kron(id, H) - kron(H.transpose(), id));
    for (const auto& jump : jumps) {
        const Matrix& A = jump.op;
        const Matrix AdA = A.adjoint() * A;
        L += jump.rate * (2.0 * kron(A.conjugate(), A) - kron(id, AdA) - kron(AdA.transpose(), id));
    }
    return L;
}

inline Matrix lindblad_superop(const Matrix& H, const std::vector<Jump>& jumps)
{
    return lindblad_superop(H, std::span<const Jump>(jumps));
}

/// Maximal absolute difference of matrix (or vector) elements.
template <typename DerivedA, typename DerivedB>
double error_max(const Eigen::MatrixBase<DerivedA>& a, const Eigen::MatrixBase<DerivedB>& b)
{
    if (a.rows() != b.rows() || a.cols() != b.cols())
        throw std::invalid_argument("error_max: shape mismatch");
    if (a.size() == 0)
        return 0.0;
    return (a - b).cwiseAbs().maxCoeff();
}

/// max_ij |M_ij - conj(M_ji)|
inline double hermiticity_defect(const Matrix& M)
{
    if (M.rows() != M.cols())
        throw std::invalid_argument("hermiticity_defect: matrix not square");
    return (M - M.adjoint()).cwiseAbs().maxCoeff();
}

inline bool is_hermitian(const Matrix& M, double tol = 1e-12)
{
    return M.rows() == M.cols() && hermiticity_defect(M) < tol;
}

} // namespace cfet
