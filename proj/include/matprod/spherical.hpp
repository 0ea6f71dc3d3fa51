#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdint>
#include <vector>

#include <Eigen/Dense>

#include "densities.hpp"
#include "ensembles.hpp"
#include "errors.hpp"
#include "random.hpp"

namespace matprod {

inline std::vector<double> rho_prime(int n)
{
    if (n < 1)
        throw Error(ErrorKind::ParameterOutOfRange, "n must be at least 1");
    std::vector<double> r(n);
    for (int j = 1; j <= n; ++j)
        r[j - 1] = (2.0 * j + n - 1) / 2.0;
    return r;
}

struct SphericalPoint {
    int n = 0;
    std::vector<cplx> s;
    std::vector<double> rho;
    bool distinct = true;

    explicit SphericalPoint(std::vector<cplx> sv) : n(int(sv.size())), s(std::move(sv)), rho(rho_prime(n))
    {
        for (int j = 0; j < n; ++j)
            for (int k = 0; k < j; ++k)
                distinct = distinct && std::abs(s[j] - s[k]) > 1e-12 * (1.0 + std::abs(s[j]));
    }
};

namespace detail {

using lcplx = std::complex<long double>;

inline lcplx log_vandermonde_s(const std::vector<cplx>& s)
{
    lcplx acc = 0.0L;
    for (std::size_t j = 0; j < s.size(); ++j)
        for (std::size_t k = j + 1; k < s.size(); ++k)
            acc += std::log(lcplx(s[k]) - lcplx(s[j]));
    return acc;
}

// det[lambda_j^{s_k+(n-1)/2}] / Delta(lambda) * Delta(rho') / Delta(s), lambda sorted and distinct
inline cplx spherical_core(const std::vector<cplx>& s, const std::vector<long double>& lam)
{
    const int n = int(s.size());
    using LM = Eigen::Matrix<lcplx, Eigen::Dynamic, Eigen::Dynamic>;
    const long double lmax = std::log(lam.back());
    LM a(n, n);
    lcplx acc = 0.0L;
    for (int k = 0; k < n; ++k) {
        const lcplx e = lcplx(s[k]) + (n - 1) / 2.0L;
        acc += e * lmax;
        for (int j = 0; j < n; ++j)
            a(j, k) = std::exp(e * (std::log(lam[j]) - lmax));
    }
    const lcplx d = a.partialPivLu().determinant();
    if (d == 0.0L)
        return 0.0;
    acc += std::log(d);
    for (int j = 0; j < n; ++j)
        for (int k = j + 1; k < n; ++k)
            acc -= std::log(lam[k] - lam[j]);
    for (int j = 1; j < n; ++j)
        acc += std::lgamma(j + 1.0L);
    acc -= log_vandermonde_s(s);
    const std::complex<long double> v = std::exp(acc);
    return {double(v.real()), double(v.imag())};
}

} // namespace detail

// phi_s(g) in terms of the eigenvalues lambda of g* g
inline cplx spherical_function(const std::vector<cplx>& s, const std::vector<double>& lambda)
{
    const int n = int(s.size());
    if (int(lambda.size()) != n)
        throw Error(ErrorKind::DimensionMismatch, "s and lambda differ in length");
    if (n == 0)
        throw Error(ErrorKind::ParameterOutOfRange, "empty spectrum");
    for (double l : lambda)
        if (!(l > 0.0) || !std::isfinite(l))
            throw Error(ErrorKind::ParameterOutOfRange, "lambda must be positive and finite");
    if (!SphericalPoint(s).distinct)
        throw Error(ErrorKind::DegenerateParameter, "s has coinciding entries");

    std::vector<double> lam = lambda;
    std::sort(lam.begin(), lam.end());
    cplx ssum = 0.0;
    for (auto v : s)
        ssum += v;
    if (lam.front() == lam.back())
        return std::exp(ssum * std::log(lam.front()));

    double gap = kInf;
    for (int j = 1; j < n; ++j)
        gap = std::min(gap, lam[j] - lam[j - 1]);
    std::vector<long double> l(lam.begin(), lam.end());
    if (gap >= 1e-9 * lam.back())
        return detail::spherical_core(s, l);

    warn("near-degenerate spectrum, using perturbed extrapolation");
    auto perturbed = [&](long double eps) {
        std::vector<long double> p(n);
        for (int j = 0; j < n; ++j)
            p[j] = l[j] * (1.0L + eps * j);
        for (int j = 1; j < n; ++j)
            if (p[j] - p[j - 1] < 1e-9L * p.back())
                throw Error(ErrorKind::DegenerateSpectrum, "lambda gaps stay below threshold after perturbation");
        return detail::spherical_core(s, p);
    };
    const long double eps = 1e-6L;
    return 2.0 * perturbed(eps) - perturbed(2.0L * eps);
}

inline cplx spherical_transform(const Ensemble& ens, const std::vector<cplx>& s)
{
    const int n = ens.n;
    if (int(s.size()) != n)
        throw Error(ErrorKind::DimensionMismatch, "s must have n entries");
    const double shift = (n - 1) / 2.0;
    if (ens.is_derivative()) {
        const auto& sym = ens.symbol();
        cplx r = 1.0;
        for (int k = 0; k < n; ++k) {
            const cplx sig = s[k] - shift;
            if (!sym.strip.contains(sig.real()))
                throw Error(ErrorKind::StripViolation, "Re(s_k) - (n-1)/2 outside the strip");
            r *= std::exp(log_eval_symbol(sym, sig) - log_eval_symbol(sym, cplx(k + 1.0, 0.0)));
        }
        return r;
    }
    if (!SphericalPoint(s).distinct)
        throw Error(ErrorKind::DegenerateParameter, "s has coinciding entries");
    Eigen::MatrixXcd m(n, n);
    for (int j = 0; j < n; ++j)
        for (int k = 0; k < n; ++k)
            m(j, k) = ens.mellin_weight(j, s[k] - shift);
    const cplx d = m.partialPivLu().determinant();
    const double c = normalization_sv(ens) * factorial_product(0, n);
    const std::complex<long double> ld = std::exp(-detail::log_vandermonde_s(s));
    return c * d * cplx(double(ld.real()), double(ld.imag()));
}

// int f_SV(a) phi_s(sqrt a) (det a)^{-n} da over (0,inf)^n by a tensor log-rule;
// the Vandermonde of a cancels between density and spherical function before quadrature
inline cplx spherical_transform_numeric(const Ensemble& ens, const std::vector<cplx>& s, double panel = 0.5)
{
    const int n = ens.n;
    if (n > 3)
        throw Error(ErrorKind::ParameterOutOfRange, "numeric spherical transform is limited to n <= 3");
    if (int(s.size()) != n)
        throw Error(ErrorKind::DimensionMismatch, "s must have n entries");
    if (!SphericalPoint(s).distinct)
        throw Error(ErrorKind::DegenerateParameter, "s has coinciding entries");
    auto [lo, hi] = mass_range(ens);
    lo = std::min(lo, 1e-10);
    hi = std::min(hi * 10.0, ens.support.hi);
    const LogRule r = log_rule(lo, hi, panel);
    const std::size_t m = r.x.size();
    Eigen::MatrixXd w(n, m);
    Eigen::MatrixXcd pw(n, m);
    for (std::size_t i = 0; i < m; ++i) {
        const double x = r.x[i];
        for (int j = 0; j < n; ++j) {
            w(j, Eigen::Index(i)) = weight_k(ens, j, x) * r.w[i] * std::pow(x, -double(n));
            pw(j, Eigen::Index(i)) = std::exp((s[j] + (n - 1) / 2.0) * std::log(x));
        }
    }
    // the integrand is symmetric in the points, so strictly increasing index tuples suffice
    cplx sum = 0.0;
    auto W = [&](int j, std::size_t i) { return w(j, Eigen::Index(i)); };
    auto P = [&](int j, std::size_t i) { return pw(j, Eigen::Index(i)); };
    if (n == 1) {
        for (std::size_t i = 0; i < m; ++i)
            sum += W(0, i) * P(0, i);
    } else if (n == 2) {
        for (std::size_t i = 0; i < m; ++i)
            for (std::size_t k = i + 1; k < m; ++k)
                sum += (W(0, i) * W(1, k) - W(1, i) * W(0, k)) * (P(0, i) * P(1, k) - P(1, i) * P(0, k));
        sum *= 2.0;
    } else {
        for (std::size_t i = 0; i < m; ++i)
            for (std::size_t j = i + 1; j < m; ++j) {
                const double a01 = W(0, i) * W(1, j) - W(1, i) * W(0, j);
                const double a02 = W(0, i) * W(2, j) - W(2, i) * W(0, j);
                const double a12 = W(1, i) * W(2, j) - W(2, i) * W(1, j);
                const cplx b01 = P(0, i) * P(1, j) - P(1, i) * P(0, j);
                const cplx b02 = P(0, i) * P(2, j) - P(2, i) * P(0, j);
                const cplx b12 = P(1, i) * P(2, j) - P(2, i) * P(1, j);
                for (std::size_t k = j + 1; k < m; ++k) {
                    const double da = W(2, k) * a01 - W(1, k) * a02 + W(0, k) * a12;
                    const cplx db = P(2, k) * b01 - P(1, k) * b02 + P(0, k) * b12;
                    sum += da * db;
                }
            }
        sum *= 6.0;
    }
    const double c = normalization_sv(ens) * factorial_product(0, n - 1);
    const std::complex<long double> ld = std::exp(-detail::log_vandermonde_s(s));
    const cplx v = c * sum * cplx(double(ld.real()), double(ld.imag()));
    if (!std::isfinite(v.real()) || !std::isfinite(v.imag()))
        throw Error(ErrorKind::NonConvergent, "numeric spherical transform is not finite");
    return v;
}

// squared singular values of g
inline std::vector<double> sq_singular_values(const CMatrix& g)
{
    Eigen::JacobiSVD<CMatrix> svd(g);
    std::vector<double> v(std::size_t(g.cols()));
    for (Eigen::Index i = 0; i < g.cols(); ++i)
        v[std::size_t(i)] = svd.singularValues()(i) * svd.singularValues()(i);
    return v;
}

inline cplx spherical_function(const std::vector<cplx>& s, const CMatrix& g)
{
    return spherical_function(s, sq_singular_values(g));
}

struct MultiplicativityCheck {
    cplx mean;
    cplx stderr_; // componentwise standard errors
    cplx expected;
    bool pass;
};

// Monte Carlo of int_K phi_s(g k h) dk against phi_s(g) phi_s(h)
inline MultiplicativityCheck multiplicativity_check(const std::vector<cplx>& s, const CMatrix& g, const CMatrix& h,
                                                    int draws, std::uint64_t seed)
{
    const int n = int(s.size());
    Rng rng = make_rng(seed, 0);
    double sr = 0, si = 0, qr = 0, qi = 0;
    for (int i = 0; i < draws; ++i) {
        const CMatrix k = haar_unitary(n, rng);
        const cplx v = spherical_function(s, CMatrix(g * k * h));
        sr += v.real();
        si += v.imag();
        qr += v.real() * v.real();
        qi += v.imag() * v.imag();
    }
    MultiplicativityCheck c;
    c.mean = {sr / draws, si / draws};
    const double vr = std::max(0.0, qr / draws - c.mean.real() * c.mean.real());
    const double vi = std::max(0.0, qi / draws - c.mean.imag() * c.mean.imag());
    c.stderr_ = {std::sqrt(vr / (draws - 1)), std::sqrt(vi / (draws - 1))};
    c.expected = spherical_function(s, g) * spherical_function(s, h);
    c.pass = std::abs(c.mean.real() - c.expected.real()) <= 3 * c.stderr_.real() + 1e-12 &&
             std::abs(c.mean.imag() - c.expected.imag()) <= 3 * c.stderr_.imag() + 1e-12;
    return c;
}

} // namespace matprod
