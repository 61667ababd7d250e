#pragma once

#include <algorithm>
#include <cmath>
#include <limits>

#include "cfet/types.hpp"

namespace cfet
{

/// Axis-aligned box in the complex plane that contains the spectrum.
struct SpectralBox
{
    double re_lo = 0.0, re_hi = 0.0;
    double im_lo = 0.0, im_hi = 0.0;

    cplx center() const { return {0.5 * (re_lo + re_hi), 0.5 * (im_lo + im_hi)}; }
    double half_width_re() const { return 0.5 * (re_hi - re_lo); }
    double half_width_im() const { return 0.5 * (im_hi - im_lo); }

    bool contains(cplx z, double slack = 0.0) const
    {
        return z.real() >= re_lo - slack && z.real() <= re_hi + slack &&
               z.imag() >= im_lo - slack && z.imag() <= im_hi + slack;
    }

    /// Largest modulus of any point in the box.
    double radius() const
    {
        const double re = std::max(std::abs(re_lo), std::abs(re_hi));
        const double im = std::max(std::abs(im_lo), std::abs(im_hi));
        return std::hypot(re, im);
    }

    SpectralBox intersect(const SpectralBox& o) const
    {
        SpectralBox b{std::max(re_lo, o.re_lo), std::min(re_hi, o.re_hi),
                      std::max(im_lo, o.im_lo), std::min(im_hi, o.im_hi)};
        // Both are valid enclosures, so an empty intersection can only come
        // from rounding; collapse to the midpoint instead of inverting.
        if (b.re_lo > b.re_hi)
            b.re_lo = b.re_hi = 0.5 * (b.re_lo + b.re_hi);
        if (b.im_lo > b.im_hi)
            b.im_lo = b.im_hi = 0.5 * (b.im_lo + b.im_hi);
        return b;
    }
};

struct Interval
{
    double lo = 0.0, hi = 0.0;
};

/// Gershgorin interval of a hermitian matrix given as diagonal plus off-diagonal
/// absolute row sums.
template <typename Derived>
Interval hermitian_gershgorin(const Eigen::MatrixBase<Derived>& H)
{
    Interval out{std::numeric_limits<double>::infinity(), -std::numeric_limits<double>::infinity()};
    for (Index i = 0; i < H.rows(); ++i) {
        const double centre = std::real(H(i, i));
        const double r = H.row(i).cwiseAbs().sum() - std::abs(H(i, i));
        out.lo = std::min(out.lo, centre - r);
        out.hi = std::max(out.hi, centre + r);
    }
    return out;
}

/// Enclosure of the spectrum of a dense matrix: the Gershgorin disc union
/// intersected with the Gershgorin bounds on the numerical range (taken through
/// the hermitian and anti-hermitian parts). For an anti-hermitian M the real
/// extent collapses to zero, for a hermitian M the imaginary extent does.
inline SpectralBox spectral_bounds(const Matrix& M)
{
    constexpr double inf = std::numeric_limits<double>::infinity();
    SpectralBox discs{inf, -inf, inf, -inf};
    for (Index i = 0; i < M.rows(); ++i) {
        const cplx c = M(i, i);
        const double r = M.row(i).cwiseAbs().sum() - std::abs(c);
        discs.re_lo = std::min(discs.re_lo, c.real() - r);
        discs.re_hi = std::max(discs.re_hi, c.real() + r);
        discs.im_lo = std::min(discs.im_lo, c.imag() - r);
        discs.im_hi = std::max(discs.im_hi, c.imag() + r);
    }
    const Matrix herm = 0.5 * (M + M.adjoint());
    const Matrix anti = (M - M.adjoint()) / (2.0 * kI);
    const Interval re = hermitian_gershgorin(herm);
    const Interval im = hermitian_gershgorin(anti);
    return discs.intersect(SpectralBox{re.lo, re.hi, im.lo, im.hi});
}

// Generic operator interface for a dense matrix acting on vectors. The
// structured Liouvillian in liouvillian.hpp provides the same free functions.

inline Index state_dim(const Matrix& M) { return M.rows(); }

inline void apply(const Matrix& M, const Vector& in, Vector& out) { out.noalias() = M * in; }

inline cplx operator_trace(const Matrix& M) { return M.trace(); }

inline const Matrix& to_dense(const Matrix& M) { return M; }

inline bool is_zero(const Matrix& M) { return M.size() == 0 || M.cwiseAbs().maxCoeff() == 0.0; }

} // namespace cfet
