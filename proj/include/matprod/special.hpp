#pragma once

#include <array>
#include <cmath>
#include <complex>
#include <numbers>

#include <boost/math/special_functions/digamma.hpp>
#include <boost/math/special_functions/trigamma.hpp>

namespace matprod {

using cplx = std::complex<double>;

namespace detail {

inline cplx log_gamma_lanczos(cplx z)
{
    static constexpr std::array<double, 9> c = {
        0.99999999999980993,  676.5203681218851,     -1259.1392167224028,
        771.32342877765313,   -176.61502916214059,   12.507343278686905,
        -0.13857109526572012, 9.9843695780195716e-6, 1.5056327351493116e-7};
    cplx a = c[0];
    for (int i = 1; i < 9; ++i)
        a += c[i] / (z - 1.0 + double(i));
    const cplx t = z + 6.5;
    return 0.5 * std::log(2.0 * std::numbers::pi) + (z - 0.5) * std::log(t) - t + std::log(a);
}

inline cplx log_gamma_stirling(cplx z)
{
    static constexpr std::array<double, 8> b2k = {1.0 / 6,  -1.0 / 30,     1.0 / 42,  -1.0 / 30,
                                                  5.0 / 66, -691.0 / 2730, 7.0 / 6.0, -3617.0 / 510};
    const cplx iz = 1.0 / z;
    const cplx iz2 = iz * iz;
    cplx pw = iz;
    cplx series = 0.0;
    for (int k = 1; k <= 8; ++k) {
        series += b2k[k - 1] / double(2 * k * (2 * k - 1)) * pw;
        pw *= iz2;
    }
    return (z - 0.5) * std::log(z) - z + 0.5 * std::log(2.0 * std::numbers::pi) + series;
}

// log(sin(w)) without overflow for large |Im w|; branch is arbitrary
inline cplx log_sin(cplx w)
{
    const double y = w.imag();
    const cplx I(0.0, 1.0);
    if (y > 20.0)
        return -I * w - std::log(-2.0 * I) + std::log(1.0 - std::exp(2.0 * I * w));
    if (y < -20.0)
        return I * w - std::log(2.0 * I) + std::log(1.0 - std::exp(-2.0 * I * w));
    return std::log(std::sin(w));
}

} // namespace detail

// Principal branch of log Gamma for Re z >= 1/2 (continuous, real on the positive axis).
// For Re z < 1/2 the reflection formula is used; the imaginary part is then only
// defined modulo 2*pi, which is harmless for integer powers.
inline cplx log_gamma(cplx z)
{
    if (z.real() < 0.5) {
        const cplx pi = std::numbers::pi;
        return std::log(pi) - detail::log_sin(pi * z) - log_gamma(1.0 - z);
    }
    if (std::abs(z) >= 15.0)
        return detail::log_gamma_stirling(z);
    return detail::log_gamma_lanczos(z);
}

inline bool is_gamma_pole(cplx z)
{
    return z.imag() == 0.0 && z.real() <= 0.0 && z.real() == std::round(z.real());
}

inline double digamma(double x) { return boost::math::digamma(x); }
inline double trigamma(double x) { return boost::math::trigamma(x); }

} // namespace matprod
