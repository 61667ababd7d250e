#pragma once

// Integer-order Bessel sequences J_0..J_n(y) and exp(-|y|) I_0..I_n(|y|) by
// Miller's backward recurrence, normalized with the generating-function sums
//     J_0 + 2 sum_k J_2k = 1,        I_0 + 2 sum_k I_k = e^y.

#include <cmath>
#include <stdexcept>
#include <vector>

namespace cfet
{

namespace detail
{

inline int miller_start(int n, double y)
{
    // well past both the requested order and the turning point |y|
    const double ay = std::abs(y);
    return static_cast<int>(std::max<double>(n, ay) + 30.0 + 4.0 * std::sqrt(std::max(ay, 1.0)));
}

} // namespace detail

/// J_k(y), k = 0..n.
inline std::vector<double> bessel_j_sequence(int n, double y)
{
    if (n < 0)
        throw std::invalid_argument("bessel_j_sequence: negative order");
    std::vector<double> out(n + 1, 0.0);
    if (y == 0.0) {
        out[0] = 1.0;
        return out;
    }
    const bool negative = y < 0.0;
    const double x = std::abs(y);
    const int start = detail::miller_start(n, x);

    std::vector<double> b(start + 2, 0.0);
    b[start + 1] = 0.0;
    b[start] = 1e-300;
    for (int k = start; k >= 1; --k) {
        b[k - 1] = (2.0 * k / x) * b[k] - b[k + 1];
        if (std::abs(b[k - 1]) > 1e250) {
            for (int m = k - 1; m <= start + 1; ++m)
                b[m] *= 1e-250;
        }
    }
    double norm = b[0];
    for (int k = 2; k <= start; k += 2)
        norm += 2.0 * b[k];
    for (int k = 0; k <= n; ++k) {
        out[k] = b[k] / norm;
        if (negative && (k % 2 == 1))
            out[k] = -out[k];
    }
    return out;
}

/// e^{-|y|} I_k(|y|), k = 0..n (exponentially scaled, so no overflow).
inline std::vector<double> bessel_i_scaled_sequence(int n, double y)
{
    if (n < 0)
        throw std::invalid_argument("bessel_i_scaled_sequence: negative order");
    std::vector<double> out(n + 1, 0.0);
    const double x = std::abs(y);
    if (x == 0.0) {
        out[0] = 1.0;
        return out;
    }
    const int start = detail::miller_start(n, x);

    std::vector<double> b(start + 2, 0.0);
    b[start] = 1e-300;
    for (int k = start; k >= 1; --k) {
        b[k - 1] = (2.0 * k / x) * b[k] + b[k + 1];
        if (b[k - 1] > 1e250) {
            for (int m = k - 1; m <= start + 1; ++m)
                b[m] *= 1e-250;
        }
    }
    double norm = b[0];
    for (int k = 1; k <= start; ++k)
        norm += 2.0 * b[k];
    for (int k = 0; k <= n; ++k)
        out[k] = b[k] / norm;
    return out;
}

} // namespace cfet
