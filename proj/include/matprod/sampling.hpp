#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdint>
#include <functional>
#include <memory>
#include <numeric>
#include <optional>
#include <ostream>
#include <vector>

#include <Eigen/Dense>
#include <boost/math/interpolators/cardinal_cubic_b_spline.hpp>
#include <boost/math/quadrature/gauss.hpp>

#include "densities.hpp"
#include "ensembles.hpp"
#include "errors.hpp"
#include "kernels.hpp"
#include "parallel.hpp"
#include "random.hpp"

namespace matprod {

struct McmcConfig {
    int burn_in = 10000;
    int thinning = 10;
    double target_acceptance = 0.3;
    bool conjugate = true; // wrap diag(sqrt a) in independent Haar unitaries
};

enum class FactorKind { Ginibre, InverseGinibre, TruncatedUnitary, HaarUnitary, DiagonalFromJpdf, Fixed };

struct FactorSpec {
    FactorKind kind = FactorKind::Ginibre;
    int n = 1;
    int N = 0;                               // TruncatedUnitary ambient dimension
    std::shared_ptr<const Ensemble> ensemble; // DiagonalFromJpdf
    McmcConfig mcmc;
    CMatrix fixed;                           // Fixed

    static FactorSpec ginibre(int n) { return {FactorKind::Ginibre, n}; }
    static FactorSpec inverse_ginibre(int n) { return {FactorKind::InverseGinibre, n}; }
    static FactorSpec truncated_unitary(int n, int N) { return {FactorKind::TruncatedUnitary, n, N}; }
    static FactorSpec haar(int n) { return {FactorKind::HaarUnitary, n}; }
    static FactorSpec diagonal(const Ensemble& e, McmcConfig c = {})
    {
        return {FactorKind::DiagonalFromJpdf, e.n, 0, std::make_shared<const Ensemble>(e), c};
    }
    static FactorSpec fixed_matrix(const CMatrix& m) { return {FactorKind::Fixed, int(m.rows()), 0, nullptr, {}, m}; }

    void validate() const
    {
        if (n < 1)
            throw Error(ErrorKind::ParameterOutOfRange, "factor dimension must be positive");
        if (kind == FactorKind::TruncatedUnitary && N < 2 * n)
            throw Error(ErrorKind::ParameterOutOfRange, "truncated unitary needs N >= 2n");
        if (kind == FactorKind::DiagonalFromJpdf && (!ensemble || ensemble->n != n))
            throw Error(ErrorKind::DimensionMismatch, "diagonal factor needs an ensemble of matching n");
        if (kind == FactorKind::Fixed && (fixed.rows() != n || fixed.cols() != n))
            throw Error(ErrorKind::DimensionMismatch, "fixed factor must be n x n");
    }
};

// Random-walk Metropolis on log a targeting jpdf_sv; the chain state persists across draws.
class DiagonalChain {
public:
    DiagonalChain(std::shared_ptr<const Ensemble> ens, McmcConfig cfg, Rng& rng)
        : ens_(std::move(ens)), cfg_(cfg), n_(ens_->n), la_(n_)
    {
        start();
        warm(rng);
    }

    std::vector<double> next(Rng& rng)
    {
        for (int i = 0; i < cfg_.thinning; ++i)
            step(rng);
        std::vector<double> a(n_);
        for (int j = 0; j < n_; ++j)
            a[j] = std::exp(la_[j]);
        return a;
    }

    double step_size() const { return step_; }
    double acceptance() const { return tried_ ? double(accepted_) / tried_ : 0.0; }

private:
    double log_target(const std::vector<double>& la) const
    {
        std::vector<double> a(n_);
        double jac = 0.0;
        for (int j = 0; j < n_; ++j) {
            a[j] = std::exp(la[j]);
            jac += la[j];
            if (!(a[j] > ens_->support.lo && a[j] < ens_->support.hi))
                return -kInf;
        }
        const double v = jpdf_sv(*ens_, a, norm_).value;
        return v > 0.0 ? std::log(v) + jac : -kInf;
    }

    void start()
    {
        norm_ = normalization_sv(*ens_);
        const bool bounded = std::isfinite(ens_->support.hi);
        for (double scale : {1.0, 0.3, 3.0, 0.1, 10.0, 0.01, 100.0}) {
            for (int j = 0; j < n_; ++j)
                la_[j] = std::log(bounded ? ens_->support.hi * (j + 1.0) / (n_ + 1.0) * std::min(scale, 1.0)
                                          : scale * (j + 1.0));
            lp_ = log_target(la_);
            if (std::isfinite(lp_))
                return;
        }
        throw Error(ErrorKind::McmcNotWarm, "no starting point with positive density");
    }

    bool step(Rng& rng)
    {
        std::normal_distribution<double> nd(0.0, step_);
        std::vector<double> prop = la_;
        for (auto& v : prop)
            v += nd(rng);
        const double lp = log_target(prop);
        ++tried_;
        if (std::isfinite(lp) && std::log(std::uniform_real_distribution<double>(0.0, 1.0)(rng)) < lp - lp_) {
            la_ = std::move(prop);
            lp_ = lp;
            ++accepted_;
            return true;
        }
        return false;
    }

    void warm(Rng& rng)
    {
        const int batch = 100;
        for (int b = 0; b < cfg_.burn_in / batch; ++b) {
            int acc = 0;
            for (int i = 0; i < batch; ++i)
                acc += step(rng);
            step_ *= std::exp(double(acc) / batch - cfg_.target_acceptance);
        }
        accepted_ = tried_ = 0;
        int acc = 0;
        for (int i = 0; i < 1000; ++i)
            acc += step(rng);
        if (acc < 50 || acc > 900)
            throw Error(ErrorKind::McmcNotWarm, "acceptance rate after burn-in is " + std::to_string(acc / 1000.0));
    }

    std::shared_ptr<const Ensemble> ens_;
    McmcConfig cfg_;
    int n_;
    std::vector<double> la_;
    double lp_ = 0.0;
    double norm_ = 1.0;
    double step_ = 0.5;
    long tried_ = 0, accepted_ = 0;
};

// Draws factors from one spec; holds chain state for DiagonalFromJpdf.
class FactorSampler {
public:
    FactorSampler(FactorSpec spec, Rng& rng) : spec_(std::move(spec))
    {
        spec_.validate();
        if (spec_.kind == FactorKind::DiagonalFromJpdf)
            chain_.emplace(spec_.ensemble, spec_.mcmc, rng);
    }

    const FactorSpec& spec() const { return spec_; }

    CMatrix draw(Rng& rng)
    {
        const int n = spec_.n;
        switch (spec_.kind) {
        case FactorKind::Ginibre:
            return ginibre(n, rng);
        case FactorKind::InverseGinibre:
            for (int t = 0; t < 100; ++t) {
                const CMatrix z = ginibre(n, rng);
                Eigen::JacobiSVD<CMatrix> svd(z);
                const auto& sv = svd.singularValues();
                if (sv(n - 1) > 0.0 && sv(0) / sv(n - 1) <= 1e12)
                    return z.inverse();
            }
            throw Error(ErrorKind::SingularDraw, "inverse Ginibre retry budget exhausted");
        case FactorKind::TruncatedUnitary:
            return haar_unitary(spec_.N, rng).topLeftCorner(n, n);
        case FactorKind::HaarUnitary:
            return haar_unitary(n, rng);
        case FactorKind::DiagonalFromJpdf: {
            const auto a = chain_->next(rng);
            CMatrix d = CMatrix::Zero(n, n);
            for (int j = 0; j < n; ++j)
                d(j, j) = std::sqrt(a[j]);
            if (!spec_.mcmc.conjugate)
                return d;
            const CMatrix u = haar_unitary(n, rng);
            const CMatrix v = haar_unitary(n, rng);
            return u * d * v;
        }
        case FactorKind::Fixed:
            return spec_.fixed;
        }
        return {};
    }

private:
    FactorSpec spec_;
    std::optional<DiagonalChain> chain_;
};

inline CMatrix sample_factor(const FactorSpec& spec, Rng& rng) { return FactorSampler(spec, rng).draw(rng); }

// Spectral data of X = X_1 ... X_M, stored for the rescaled matrix exp(-log_scale) X.
struct SpectralSample {
    std::vector<double> sq_singular_values; // descending, of the rescaled matrix
    std::vector<cplx> eigenvalues;          // by descending modulus, of the rescaled matrix
    std::vector<double> log_r_diag;         // log R_jj of X
    std::vector<double> log_sv;             // log sigma_k of X, descending
    std::vector<double> log_abs_ev;         // log |lambda_k| of X, descending
    double log_scale = 0.0;

    std::vector<double> r_diag() const
    {
        std::vector<double> r(log_r_diag.size());
        for (std::size_t j = 0; j < r.size(); ++j)
            r[j] = std::exp(log_r_diag[j]);
        return r;
    }
    std::vector<double> log_sq_singular_values() const
    {
        std::vector<double> r(sq_singular_values.size());
        for (std::size_t j = 0; j < r.size(); ++j)
            r[j] = std::log(sq_singular_values[j]) + 2.0 * log_scale;
        return r;
    }
    std::vector<double> true_sq_singular_values() const
    {
        auto r = log_sq_singular_values();
        for (auto& v : r)
            v = std::exp(v);
        return r;
    }
    std::vector<cplx> true_eigenvalues() const
    {
        std::vector<cplx> r = eigenvalues;
        for (auto& v : r)
            v *= std::exp(log_scale);
        return r;
    }
};

struct ChainOptions {
    bool eigenvalues = true;
    bool compounds = true;       // log_sv / log_abs_ev from exterior-power chains
    double rescale_above = 1e8; // rescale when a diagonal entry of R leaves [1/t, t]
};

// k-th compound: minors over k-subsets in lexicographic order
inline CMatrix compound(const CMatrix& a, int k)
{
    const int n = int(a.rows());
    std::vector<std::vector<int>> subsets;
    std::vector<int> idx(k);
    std::iota(idx.begin(), idx.end(), 0);
    while (true) {
        subsets.push_back(idx);
        int i = k - 1;
        while (i >= 0 && idx[i] == n - k + i)
            --i;
        if (i < 0)
            break;
        ++idx[i];
        for (int j = i + 1; j < k; ++j)
            idx[j] = idx[j - 1] + 1;
    }
    const Eigen::Index m = Eigen::Index(subsets.size());
    CMatrix c(m, m);
    CMatrix sub(k, k);
    for (Eigen::Index r = 0; r < m; ++r)
        for (Eigen::Index q = 0; q < m; ++q) {
            for (int i = 0; i < k; ++i)
                for (int j = 0; j < k; ++j)
                    sub(i, j) = a(subsets[r][i], subsets[q][j]);
            c(r, q) = sub.determinant();
        }
    return c;
}

// X_k Q_{k+1} = Q_k R_k from the last factor backwards, so X_1...X_M = Q_1 R_1 ... R_M
inline SpectralSample product_chain(std::vector<FactorSampler>& samplers, Rng& rng, const ChainOptions& opt = {})
{
    if (samplers.empty())
        throw Error(ErrorKind::ParameterOutOfRange, "empty product chain");
    const int n = samplers.front().spec().n;
    for (const auto& s : samplers)
        if (s.spec().n != n)
            throw Error(ErrorKind::DimensionMismatch, "factor dimensions differ");
    std::vector<CMatrix> xs;
    xs.reserve(samplers.size());
    for (auto& s : samplers)
        xs.push_back(s.draw(rng));

    SpectralSample out;
    out.log_r_diag.assign(n, 0.0);
    CMatrix q = CMatrix::Identity(n, n);
    CMatrix r = CMatrix::Identity(n, n);
    std::vector<CMatrix> comp;
    std::vector<double> comp_scale(n, 0.0);
    if (opt.compounds)
        for (int c = 1; c < n; ++c) {
            const auto d = Eigen::Index(std::lround(detail::binom(n, c)));
            comp.push_back(CMatrix::Identity(d, d));
        }
    for (std::size_t k = xs.size(); k-- > 0;) {
        for (int c = 1; c <= int(comp.size()); ++c) {
            CMatrix& cm = comp[c - 1];
            cm = (c == 1 ? xs[k] : compound(xs[k], c)) * cm;
            const double mx = cm.cwiseAbs().maxCoeff();
            if (!(mx > 0.0) || !std::isfinite(mx))
                throw Error(ErrorKind::SingularDraw, "degenerate compound chain");
            cm /= mx;
            comp_scale[c] += std::log(mx);
        }
        Eigen::HouseholderQR<CMatrix> qr(xs[k] * q);
        CMatrix qk = qr.householderQ();
        CMatrix rk = qr.matrixQR().triangularView<Eigen::Upper>();
        for (int j = 0; j < n; ++j) {
            const cplx d = rk(j, j);
            const double a = std::abs(d);
            if (!(a > 0.0))
                throw Error(ErrorKind::SingularDraw, "singular factor in product chain");
            const cplx ph = d / a;
            qk.col(j) *= ph;
            rk.row(j) *= std::conj(ph);
            out.log_r_diag[j] += std::log(a);
        }
        q = qk;
        r = rk * r;
        double lo = kInf, hi = 0.0;
        for (int j = 0; j < n; ++j) {
            lo = std::min(lo, std::abs(r(j, j)));
            hi = std::max(hi, std::abs(r(j, j)));
        }
        if (hi > opt.rescale_above || lo < 1.0 / opt.rescale_above) {
            double m = 0.0;
            for (int j = 0; j < n; ++j)
                m += std::log(std::abs(r(j, j)));
            m /= n;
            r *= std::exp(-m);
            out.log_scale += m;
        }
    }
    Eigen::JacobiSVD<CMatrix> svd(r);
    for (int j = 0; j < n; ++j)
        out.sq_singular_values.push_back(svd.singularValues()(j) * svd.singularValues()(j));
    if (opt.eigenvalues) {
        Eigen::ComplexEigenSolver<CMatrix> es(q * r, false);
        out.eigenvalues.assign(es.eigenvalues().data(), es.eigenvalues().data() + n);
        std::sort(out.eigenvalues.begin(), out.eigenvalues.end(),
                  [](cplx a, cplx b) { return std::abs(a) > std::abs(b); });
    }
    if (opt.compounds) {
        // log of sigma_1...sigma_c and |lambda_1...lambda_c| from the c-th compound
        std::vector<double> ps(n + 1, 0.0), pe(n + 1, 0.0);
        for (int c = 1; c < n; ++c) {
            const CMatrix& cm = comp[c - 1];
            Eigen::JacobiSVD<CMatrix> cs(cm);
            ps[c] = std::log(cs.singularValues()(0)) + comp_scale[c];
            Eigen::ComplexEigenSolver<CMatrix> ce(cm, false);
            pe[c] = std::log(ce.eigenvalues().cwiseAbs().maxCoeff()) + comp_scale[c];
        }
        double ld = 0.0;
        for (double v : out.log_r_diag)
            ld += v;
        ps[n] = pe[n] = ld;
        for (int c = 1; c <= n; ++c) {
            out.log_sv.push_back(ps[c] - ps[c - 1]);
            out.log_abs_ev.push_back(pe[c] - pe[c - 1]);
        }
    } else {
        for (double v : out.sq_singular_values)
            out.log_sv.push_back(0.5 * std::log(v) + out.log_scale);
        for (cplx e : out.eigenvalues)
            out.log_abs_ev.push_back(std::log(std::abs(e)) + out.log_scale);
    }
    return out;
}

inline SpectralSample product_chain(const std::vector<FactorSpec>& specs, Rng& rng, const ChainOptions& opt = {})
{
    std::vector<FactorSampler> s;
    for (const auto& f : specs)
        s.emplace_back(f, rng);
    return product_chain(s, rng, opt);
}

inline constexpr std::size_t kBlockDraws = 1000;

// draws realizations in fixed blocks, each with its own stream, so results do not depend on workers
inline std::vector<SpectralSample> sample_products(const std::vector<FactorSpec>& specs, std::size_t count,
                                                   std::uint64_t seed, int workers = 0, const ChainOptions& opt = {})
{
    std::vector<SpectralSample> out(count);
    const std::size_t blocks = (count + kBlockDraws - 1) / kBlockDraws;
    parallel_for(
        blocks,
        [&](std::size_t b) {
            Rng rng = make_rng(seed, 0, b);
            std::vector<FactorSampler> s;
            for (const auto& f : specs)
                s.emplace_back(f, rng);
            const std::size_t end = std::min(count, (b + 1) * kBlockDraws);
            for (std::size_t i = b * kBlockDraws; i < end; ++i)
                out[i] = product_chain(s, rng, opt);
        },
        workers);
    return out;
}

inline double ks_statistic(const std::vector<double>& sorted, const std::function<double(double)>& cdf)
{
    const double N = double(sorted.size());
    double d = 0.0;
    for (std::size_t i = 0; i < sorted.size(); ++i) {
        const double f = cdf(sorted[i]);
        d = std::max({d, (i + 1) / N - f, f - i / N});
    }
    return std::clamp(d, 0.0, 1.0);
}

inline double ks_two_sample(std::vector<double> a, std::vector<double> b)
{
    std::sort(a.begin(), a.end());
    std::sort(b.begin(), b.end());
    std::size_t i = 0, j = 0;
    double d = 0.0;
    while (i < a.size() && j < b.size()) {
        const double x = std::min(a[i], b[j]);
        while (i < a.size() && a[i] == x)
            ++i;
        while (j < b.size() && b[j] == x)
            ++j;
        d = std::max(d, std::abs(double(i) / a.size() - double(j) / b.size()));
    }
    return d;
}

// CDF of a density on (lo, hi): cubic B-spline of x f(x) on a uniform grid in log x,
// integrated panelwise with Gauss-Legendre
class TabulatedCdf {
public:
    TabulatedCdf(const std::function<double(double)>& density, double lo, double hi, int nodes = 301)
    {
        u0_ = std::log(lo);
        h_ = (std::log(hi) - u0_) / (nodes - 1);
        std::vector<double> g(nodes);
        for (int i = 0; i < nodes; ++i) {
            const double x = std::exp(u0_ + i * h_);
            g[i] = density(x) * x;
        }
        spline_ = std::make_shared<const Spline>(g.begin(), g.end(), u0_, h_);
        cum_.assign(nodes, 0.0);
        for (int i = 1; i < nodes; ++i)
            cum_[i] = cum_[i - 1] + piece(u0_ + (i - 1) * h_, u0_ + i * h_);
        total_ = cum_.back();
    }

    double total() const { return total_; }

    double operator()(double x) const
    {
        const double u = std::log(x);
        if (!(u > u0_))
            return 0.0;
        const double k = std::floor((u - u0_) / h_);
        if (k >= double(cum_.size() - 1))
            return 1.0;
        const std::size_t i = std::size_t(k);
        return std::clamp((cum_[i] + piece(u0_ + i * h_, u)) / total_, 0.0, 1.0);
    }

private:
    using Spline = boost::math::interpolators::cardinal_cubic_b_spline<double>;

    double piece(double a, double b) const
    {
        using rule = boost::math::quadrature::gauss<double, 10>;
        return rule::integrate([this](double u) { return (*spline_)(u); }, a, b);
    }

    std::shared_ptr<const Spline> spline_;
    double u0_ = 0.0, h_ = 1.0;
    std::vector<double> cum_;
    double total_ = 1.0;
};

// CDF of the one-point density K_sv(a, a) / n
inline TabulatedCdf marginal_sv_cdf(const Ensemble& ens)
{
    const BiorthogonalSystem sys = monic_polys(ens);
    auto [lo, hi] = mass_range(ens, 1e-16);
    return TabulatedCdf([&](double a) { return kernel_sv(sys, a, a) / ens.n; }, std::min(lo, 1e-12),
                        std::min(hi * 10.0, ens.support.hi));
}

struct IndependenceReport {
    Eigen::MatrixXd corr;           // correlation of log R_jj
    std::vector<double> marginal_ks; // R_jj^2 against h_j
};

inline Eigen::MatrixXd correlation(const std::vector<std::vector<double>>& rows)
{
    const std::size_t m = rows.size();
    const int n = int(rows.front().size());
    Eigen::MatrixXd x(Eigen::Index(m), n);
    for (std::size_t i = 0; i < m; ++i)
        for (int j = 0; j < n; ++j)
            x(Eigen::Index(i), j) = rows[i][j];
    const Eigen::RowVectorXd mean = x.colwise().mean();
    x.rowwise() -= mean;
    Eigen::MatrixXd c = (x.transpose() * x) / double(m - 1);
    const Eigen::VectorXd sd = c.diagonal().cwiseSqrt();
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j)
            c(i, j) /= sd(i) * sd(j);
    return c;
}

// h_j(r) = r^{n-j} omega(r) / M(n-j+1), j = 1..n
inline double rdiag_density(const Ensemble& ens, int j, double r)
{
    const int n = ens.n;
    return std::pow(r, n - j) * weight_k(ens, 0, r) / ens.moment(n - j + 1.0);
}

inline TabulatedCdf rdiag_cdf(const Ensemble& ens, int j)
{
    auto [lo, hi] = mass_range(ens, 1e-16);
    return TabulatedCdf([&](double r) { return rdiag_density(ens, j, r); }, std::min(lo, 1e-12),
                        std::min(hi * 10.0, ens.support.hi));
}

inline IndependenceReport independence_diag(const std::vector<std::vector<double>>& r_diag, const Ensemble& ens)
{
    IndependenceReport rep;
    std::vector<std::vector<double>> logs = r_diag;
    for (auto& row : logs)
        for (auto& v : row)
            v = std::log(v);
    rep.corr = correlation(logs);
    const int n = int(r_diag.front().size());
    for (int j = 1; j <= n; ++j) {
        const TabulatedCdf cdf = rdiag_cdf(ens, j);
        std::vector<double> sq;
        for (const auto& row : r_diag)
            sq.push_back(row[j - 1] * row[j - 1]);
        std::sort(sq.begin(), sq.end());
        rep.marginal_ks.push_back(ks_statistic(sq, [&](double x) { return cdf(x); }));
    }
    return rep;
}

inline void write_samples_csv(std::ostream& os, const std::vector<SpectralSample>& samples, int n)
{
    os.precision(12);
    for (int j = 1; j <= n; ++j)
        os << "sv_" << j << ',';
    for (int j = 1; j <= n; ++j)
        os << "re_ev_" << j << ",im_ev_" << j << ',';
    for (int j = 1; j <= n; ++j)
        os << "r_" << j << ',';
    os << "log_scale\n";
    for (const auto& s : samples) {
        for (double v : s.sq_singular_values)
            os << v << ',';
        for (int j = 0; j < n; ++j) {
            const cplx e = j < int(s.eigenvalues.size()) ? s.eigenvalues[j] : cplx(NAN, NAN);
            os << e.real() << ',' << e.imag() << ',';
        }
        for (double v : s.r_diag())
            os << v << ',';
        os << s.log_scale << '\n';
    }
}

} // namespace matprod
