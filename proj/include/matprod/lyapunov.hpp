#pragma once

#include <cmath>
#include <cstdint>
#include <optional>
#include <vector>

#include <Eigen/Dense>
#include <boost/math/distributions/normal.hpp>

#include "ensembles.hpp"
#include "errors.hpp"
#include "mellin.hpp"
#include "sampling.hpp"

namespace matprod {

enum class CltSource { Symbolic, Empirical };

struct CltParameters {
    Eigen::VectorXd m;
    Eigen::MatrixXd sigma;
    CltSource source = CltSource::Symbolic;
    std::size_t runs = 0;
    Eigen::VectorXd m_se;     // standard errors (empirical only)
    Eigen::MatrixXd sigma_se;
};

// m_j = (log M)'(n-j+1) / 2, sigma = diag((log M)''(n-j+1) / 4)
inline CltParameters clt_params_symbolic(const Ensemble& ens)
{
    const int n = ens.n;
    const auto& sym = ens.symbol();
    if (!(sym.strip.lo < 1.0 && sym.strip.hi > n))
        throw Error(ErrorKind::StripViolation, "strip must contain [1, n] with a margin");
    CltParameters p;
    p.m.resize(n);
    p.sigma = Eigen::MatrixXd::Zero(n, n);
    for (int j = 1; j <= n; ++j) {
        const auto [d1, d2] = log_derivatives(sym, n - j + 1.0);
        p.m(j - 1) = 0.5 * d1;
        p.sigma(j - 1, j - 1) = 0.25 * d2;
    }
    return p;
}

namespace detail {

// mean, covariance and their standard errors of the rows of x
inline CltParameters moments_of(const Eigen::MatrixXd& x)
{
    const double r = double(x.rows());
    CltParameters p;
    p.source = CltSource::Empirical;
    p.runs = std::size_t(x.rows());
    p.m = x.colwise().mean().transpose();
    const Eigen::MatrixXd c = x.rowwise() - p.m.transpose();
    p.sigma = (c.transpose() * c) / (r - 1.0);
    p.sigma = 0.5 * (p.sigma + p.sigma.transpose()).eval();
    p.m_se = (p.sigma.diagonal() / r).cwiseSqrt();
    const int n = int(x.cols());
    p.sigma_se.resize(n, n);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) {
            const Eigen::VectorXd prod = c.col(i).cwiseProduct(c.col(j));
            const double mu = prod.mean();
            p.sigma_se(i, j) = std::sqrt((prod.array() - mu).square().sum() / (r - 1.0) / r);
        }
    return p;
}

} // namespace detail

inline CltParameters clt_params_empirical(const FactorSpec& spec, std::size_t runs, std::uint64_t seed,
                                          int workers = 0)
{
    if (runs < 1000)
        throw Error(ErrorKind::ParameterOutOfRange, "empirical CLT parameters need at least 1000 runs");
    ChainOptions opt;
    opt.eigenvalues = false;
    opt.compounds = false;
    const auto s = sample_products({spec}, runs, seed, workers, opt);
    Eigen::MatrixXd x(Eigen::Index(runs), spec.n);
    for (std::size_t i = 0; i < runs; ++i)
        for (int j = 0; j < spec.n; ++j)
            x(Eigen::Index(i), j) = s[i].log_r_diag[j];
    return detail::moments_of(x);
}

struct ExponentStats {
    CltParameters lyapunov; // of (1/M) log sigma_k
    CltParameters stability; // of (1/M) log |lambda_k|
    std::vector<double> ks_lyapunov; // sqrt(M)-standardized components vs N(0,1)
    std::vector<double> ks_stability;
    int M = 0;
};

inline double normal_cdf(double x)
{
    static const boost::math::normal_distribution<double> nd(0.0, 1.0);
    return boost::math::cdf(nd, x);
}

// standardization uses the reference parameters when given, else the empirical ones
inline ExponentStats exponent_mc(const FactorSpec& spec, int M, std::size_t runs, std::uint64_t seed,
                                 const std::optional<CltParameters>& reference = {}, int workers = 0)
{
    if (M < 1 || runs < 2)
        throw Error(ErrorKind::ParameterOutOfRange, "exponent_mc needs M >= 1 and runs >= 2");
    const int n = spec.n;
    ChainOptions opt;
    opt.eigenvalues = false;
    const auto s = sample_products(std::vector<FactorSpec>(std::size_t(M), spec), runs, seed, workers, opt);
    Eigen::MatrixXd ly(Eigen::Index(runs), n), st(Eigen::Index(runs), n);
    for (std::size_t i = 0; i < runs; ++i)
        for (int j = 0; j < n; ++j) {
            ly(Eigen::Index(i), j) = s[i].log_sv[j] / M;
            st(Eigen::Index(i), j) = s[i].log_abs_ev[j] / M;
        }
    ExponentStats out;
    out.M = M;
    out.lyapunov = detail::moments_of(ly);
    out.stability = detail::moments_of(st);
    auto ks = [&](const Eigen::MatrixXd& x, const CltParameters& emp) {
        const CltParameters& ref = reference ? *reference : emp;
        std::vector<double> r;
        for (int j = 0; j < n; ++j) {
            const double sd = std::sqrt(ref.sigma(j, j));
            if (!(sd > 0.0)) {
                r.push_back(NAN);
                continue;
            }
            std::vector<double> z(runs);
            for (std::size_t i = 0; i < runs; ++i)
                z[i] = std::sqrt(double(M)) * (x(Eigen::Index(i), j) - ref.m(j)) / sd;
            std::sort(z.begin(), z.end());
            r.push_back(ks_statistic(z, normal_cdf));
        }
        return r;
    };
    out.ks_lyapunov = ks(ly, out.lyapunov);
    out.ks_stability = ks(st, out.stability);
    return out;
}

// CDF of R_jj^2 with density r^{n-j} omega(r) / M(n-j+1)
class RDiagCdf {
public:
    RDiagCdf(const Ensemble& ens, int j, double tol = 1e-12) : ens_(ens), tol_(tol)
    {
        if (j < 1 || j > ens.n)
            throw Error(ErrorKind::ParameterOutOfRange, "j must lie in 1..n");
        sigma_ = ens.n - j + 1.0;
        if (!ens.symbol().strip.contains(sigma_))
            throw Error(ErrorKind::StripViolation, "strip does not cover n-j+1");
        norm_ = ens.moment(sigma_);
        auto mass = [&](double x) { return std::pow(x, sigma_) * weight_k(ens_, 0, x); };
        lo_ = std::min(1.0, 0.5 * ens.support.hi);
        for (int i = 0; i < 600 && lo_ > ens.support.lo && std::abs(mass(lo_)) > 1e-3 * tol_ * norm_; ++i)
            lo_ *= 0.5;
        hi_ = std::max(1.0, 2.0 * ens.support.lo);
        if (std::isfinite(ens.support.hi))
            hi_ = ens.support.hi;
        else
            for (int i = 0; i < 2000 && std::abs(mass(hi_)) > 1e-3 * tol_ * norm_; ++i)
                hi_ *= 1.5;
    }

    double operator()(double r) const
    {
        if (!(r > lo_))
            return 0.0;
        if (r >= hi_)
            return 1.0;
        auto f = [&](double x) { return weight_k(ens_, 0, x); };
        const double v = mellin_numeric(f, cplx(sigma_, 0.0), {lo_, r}, tol_).real() / norm_;
        return std::clamp(v, 0.0, 1.0);
    }

    double normalization() const { return norm_; }

private:
    Ensemble ens_;
    double tol_;
    double sigma_ = 1.0;
    double norm_ = 1.0;
    double lo_ = 0.0, hi_ = kInf;
};

inline double rdiag_marginal_cdf(const Ensemble& ens, int j, double r) { return RDiagCdf(ens, j)(r); }

} // namespace matprod
