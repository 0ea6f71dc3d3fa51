#pragma once

#include <cmath>
#include <complex>
#include <memory>
#include <numbers>
#include <vector>

#include <Eigen/Dense>

#include "ensembles.hpp"
#include "errors.hpp"

namespace matprod {

struct BiorthogonalSystem {
    int n = 0;
    Eigen::MatrixXd coeffs;      // coeffs(k, j): coefficient of a^j in p_k, monic
    std::vector<RealFn> q;       // q_0 .. q_{n-1}
    std::vector<double> moments; // M(1) .. M(n+1) of the underlying weight, NaN outside the strip
    Strip support{0.0, kInf};

    double p(int k, double x) const
    {
        double v = 0.0;
        for (int j = k; j >= 0; --j)
            v = v * x + coeffs(k, j);
        return v;
    }
};

namespace detail {

inline void check_kernel_strip(const Ensemble& e, double hi)
{
    const Strip& st = e.symbol().strip;
    if (!(st.lo < 1.0 && st.hi > hi))
        throw Error(ErrorKind::StripViolation, "symbol strip does not contain the required interval");
}

inline double binom(int k, int j) { return std::tgamma(k + 1.0) / (std::tgamma(j + 1.0) * std::tgamma(k - j + 1.0)); }

} // namespace detail

// a_{jk} = (-1)^{k-j} C(k,j) M(k+1) / M(j+1)
inline Eigen::MatrixXd monic_coefficients(const std::vector<double>& moments, int n)
{
    Eigen::MatrixXd c = Eigen::MatrixXd::Zero(n, n);
    for (int k = 0; k < n; ++k)
        for (int j = 0; j <= k; ++j)
            c(k, j) = ((k - j) % 2 ? -1.0 : 1.0) * detail::binom(k, j) * moments[k] / moments[j];
    return c;
}

// q_l = P_l(D) omega / (l! M(l+1)) with P_l(s) = prod_{i=1}^{l} (s - i)
inline double q_func(const Ensemble& ens, int l, double x)
{
    if (l < 0 || l > ens.n)
        throw Error(ErrorKind::ParameterOutOfRange, "q_l needs 0 <= l <= n");
    detail::check_kernel_strip(ens, l + 1.0);
    if (x < ens.support.lo || x > ens.support.hi)
        return 0.0;
    const auto& d = ens.derivative();
    const double scale = 1.0 / (std::tgamma(l + 1.0) * ens.moment(l + 1.0));
    const auto P = falling_poly(l);
    if (d.closed_form)
        return d.closed_form->apply_poly(P)(x) * scale;
    return inverse_mellin(multiply_poly(d.symbol, P, scale), x, ens.tol);
}

inline BiorthogonalSystem monic_polys(const Ensemble& ens)
{
    detail::check_kernel_strip(ens, double(ens.n));
    const int n = ens.n;
    BiorthogonalSystem sys;
    sys.n = n;
    sys.support = ens.support;
    for (int j = 1; j <= n + 1; ++j)
        sys.moments.push_back(ens.symbol().strip.contains(j) ? ens.moment(j) : NAN);
    sys.coeffs = monic_coefficients(sys.moments, n);
    const auto& d = ens.derivative();
    for (int l = 0; l < n; ++l) {
        const double scale = 1.0 / (std::tgamma(l + 1.0) * sys.moments[l]);
        const auto P = falling_poly(l);
        if (d.closed_form) {
            auto f = std::make_shared<const Elementary>(d.closed_form->apply_poly(P).scaled(scale));
            sys.q.push_back([f, sup = ens.support](double x) { return x < sup.lo || x > sup.hi ? 0.0 : (*f)(x); });
        } else {
            auto sym = std::make_shared<const MellinSymbol>(multiply_poly(d.symbol, P, scale));
            const double tol = ens.tol;
            sys.q.push_back([sym, tol](double x) { return inverse_mellin(*sym, x, tol); });
        }
    }
    return sys;
}

inline double kernel_sv(const BiorthogonalSystem& sys, double x, double y)
{
    double k = 0.0;
    for (int j = 0; j < sys.n; ++j)
        k += sys.p(j, x) * sys.q[j](y);
    return k;
}

inline double kernel_sv(const Ensemble& ens, double x, double y) { return kernel_sv(monic_polys(ens), x, y); }

// sum_j x^j / M(j+1)
inline double chi(const Ensemble& ens, double x)
{
    detail::check_kernel_strip(ens, double(ens.n));
    double v = 0.0, pw = 1.0;
    for (int j = 0; j < ens.n; ++j, pw *= x)
        v += pw / ens.moment(j + 1.0);
    return v;
}

inline cplx kernel_ev(const Ensemble& ens, cplx z, cplx w)
{
    detail::check_kernel_strip(ens, double(ens.n));
    const double oz = weight_k(ens, 0, std::norm(z));
    const double ow = weight_k(ens, 0, std::norm(w));
    if (oz < 0.0 || ow < 0.0)
        throw Error(ErrorKind::NegativeWeight, "weight is negative at |z|^2");
    const cplx zw = z * std::conj(w);
    cplx s = 0.0, pw = 1.0;
    for (int j = 0; j < ens.n; ++j, pw *= zw)
        s += pw / ens.moment(j + 1.0);
    return std::sqrt(oz * ow) * s / std::numbers::pi;
}

// coefficients after multiplying by a derivative-type factor with moments m_omega(1..n)
inline Eigen::MatrixXd transfer_coefficients(const Eigen::MatrixXd& c, const std::vector<double>& m_omega)
{
    Eigen::MatrixXd r = c;
    for (Eigen::Index k = 0; k < c.rows(); ++k)
        for (Eigen::Index j = 0; j <= k; ++j)
            r(k, j) = m_omega[k] * c(k, j) / m_omega[j];
    return r;
}

inline BiorthogonalSystem transfer_system(const Ensemble& omega, const BiorthogonalSystem& sys, double tol = 1e-7)
{
    if (omega.n != sys.n)
        throw Error(ErrorKind::DimensionMismatch, "transfer needs equal dimensions");
    detail::check_kernel_strip(omega, double(sys.n));
    std::vector<double> mo;
    for (int j = 1; j <= sys.n + 1; ++j)
        mo.push_back(omega.symbol().strip.contains(j) ? omega.moment(j) : NAN);
    BiorthogonalSystem r;
    r.n = sys.n;
    r.coeffs = transfer_coefficients(sys.coeffs, mo);
    r.support = {omega.support.lo * sys.support.lo, omega.support.hi * sys.support.hi};
    for (int j = 0; j <= sys.n; ++j)
        r.moments.push_back(mo[j] * sys.moments[j]);
    auto base = std::make_shared<const Ensemble>(omega);
    for (int k = 0; k < sys.n; ++k) {
        const double mk = mo[k];
        RealFn qk = sys.q[k];
        const Strip qs = sys.support;
        r.q.push_back([base, qk, qs, mk, tol](double x) {
            auto om = [&](double y) { return weight_k(*base, 0, y); };
            return mult_convolve(om, base->support, qk, qs, x, tol) / mk;
        });
    }
    return r;
}

} // namespace matprod
