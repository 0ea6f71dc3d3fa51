#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <numbers>
#include <optional>
#include <vector>

#include <Eigen/Dense>

#include "ensembles.hpp"
#include "errors.hpp"
#include "parallel.hpp"

namespace matprod {

constexpr double kFlushBelow = 1e-300;

struct DensityReport {
    double value = 0.0;
    double vandermonde = 0.0;
    double determinant = 0.0;
    double normalization = 0.0;
    bool nonneg = true;
    bool flushed = false;
};

// prod_{j<k} (a_k - a_j)
template <class T>
T vandermonde(const std::vector<T>& a)
{
    T v = 1.0;
    for (std::size_t k = 0; k < a.size(); ++k)
        for (std::size_t j = 0; j < k; ++j)
            v *= a[k] - a[j];
    return v;
}

inline double determinant(const Eigen::MatrixXd& m)
{
    if (m.rows() == 0)
        return 1.0;
    return m.partialPivLu().determinant();
}

// product of row norms, an upper bound for |det|
inline double hadamard_bound(const Eigen::MatrixXd& m)
{
    double h = 1.0;
    for (Eigen::Index i = 0; i < m.rows(); ++i)
        h *= m.row(i).norm();
    return h;
}

// prod_{j=lo}^{hi} j!
inline double factorial_product(int lo, int hi)
{
    double r = 1.0;
    for (int j = std::max(lo, 2); j <= hi; ++j)
        r *= std::tgamma(j + 1.0);
    return r;
}

inline double normalization_sv(const Ensemble& ens)
{
    const int n = ens.n;
    if (ens.is_derivative()) {
        detail::check_derivative_strip(ens);
        double prod = factorial_product(0, n);
        for (int j = 1; j <= n; ++j)
            prod *= ens.moment(j);
        return 1.0 / prod;
    }
    // 1 / (n! det[int a^k w_j(a) da])
    Eigen::MatrixXd m(n, n);
    for (int j = 0; j < n; ++j)
        for (int k = 0; k < n; ++k)
            m(j, k) = ens.mellin_weight(j, cplx(k + 1.0, 0.0)).real();
    const double d = determinant(m);
    if (!std::isfinite(d) || d == 0.0)
        throw Error(ErrorKind::QuadratureFailure, "moment matrix is singular");
    return 1.0 / (std::tgamma(n + 1.0) * d);
}

inline double normalization_ev(const Ensemble& ens)
{
    return normalization_sv(ens) * factorial_product(0, ens.n - 1) / std::pow(std::numbers::pi, ens.n);
}

// weights[j][k] = w_j(a_k)
inline DensityReport jpdf_sv_from_weights(double norm, const std::vector<double>& a, const Eigen::MatrixXd& weights)
{
    DensityReport r;
    r.normalization = norm;
    r.vandermonde = vandermonde(a);
    r.determinant = determinant(weights);
    r.value = norm * r.vandermonde * r.determinant;
    if (std::abs(r.value) < kFlushBelow && r.value != 0.0) {
        r.value = 0.0;
        r.flushed = true;
    }
    r.nonneg = r.value >= 0.0;
    return r;
}

inline Eigen::MatrixXd weight_matrix(const Ensemble& ens, const std::vector<double>& a)
{
    const int n = ens.n;
    Eigen::MatrixXd w(n, n);
    for (int j = 0; j < n; ++j)
        for (int k = 0; k < n; ++k)
            w(j, k) = weight_k(ens, j, a[k]);
    return w;
}

inline DensityReport jpdf_sv(const Ensemble& ens, const std::vector<double>& a, std::optional<double> norm = {})
{
    if (int(a.size()) != ens.n)
        throw Error(ErrorKind::DimensionMismatch, "point dimension differs from n");
    for (double x : a)
        if (!(x > 0.0))
            throw Error(ErrorKind::ParameterOutOfRange, "squared singular values must be positive");
    const double c = norm ? *norm : normalization_sv(ens);
    return jpdf_sv_from_weights(c, a, weight_matrix(ens, a));
}

inline DensityReport jpdf_ev(const Ensemble& ens, const std::vector<cplx>& z, std::optional<double> norm = {})
{
    if (int(z.size()) != ens.n)
        throw Error(ErrorKind::DimensionMismatch, "point dimension differs from n");
    DensityReport r;
    r.normalization = norm ? *norm : normalization_ev(ens);
    r.vandermonde = std::norm(vandermonde(z));
    double prod = 1.0;
    for (const auto& zj : z)
        prod *= weight_k(ens, 0, std::norm(zj));
    r.determinant = prod;
    r.value = r.normalization * r.vandermonde * prod;
    if (std::abs(r.value) < kFlushBelow && r.value != 0.0) {
        r.value = 0.0;
        r.flushed = true;
    }
    r.nonneg = r.value >= 0.0;
    return r;
}

// true iff (p integer or p > n-1) and (q integer or q > n-1)
inline bool region_check(int n, double p, double q)
{
    if (n < 1 || !(p >= 0.0) || !(q >= 0.0) || !(p + q > 0.0))
        throw Error(ErrorKind::ParameterOutOfRange, "region_check needs n >= 1, p, q >= 0, p + q > 0");
    auto ok = [&](double v) { return is_integer(v) || v > n - 1.0; };
    return ok(p) && ok(q);
}

struct ScanConfig {
    std::vector<double> alphas{5.0, 10.0, 20.0, 40.0};
    int sweep_points = 200;
    double sweep_lo = 1e-4;
    double sweep_hi = 1e2;
    int lattice_points = 24;
    double lattice_lo = 1e-4;
    double lattice_hi = 1e2;
    // a determinant counts as negative only below -noise * (Hadamard bound)
    double noise = 1e-6;
    int workers = 0;
};

enum class ScanVerdict { NegativeFound, NoneFound };

inline const char* to_string(ScanVerdict v) { return v == ScanVerdict::NegativeFound ? "negative_found" : "none_found"; }

struct ScanResult {
    ScanVerdict verdict = ScanVerdict::NoneFound;
    std::optional<std::vector<double>> witness;
    double witness_value = 0.0;   // normalised density at the witness
    double witness_margin = 0.0;  // det / Hadamard bound at the witness
    std::size_t points = 0;
};

namespace detail {

inline std::vector<double> log_grid(double lo, double hi, int m)
{
    std::vector<double> g(m);
    for (int i = 0; i < m; ++i)
        g[i] = m == 1 ? lo : lo * std::pow(hi / lo, double(i) / (m - 1));
    return g;
}

struct Candidate {
    std::vector<double> point;
    double margin;
    double value;
};

inline bool better(const Candidate& a, const Candidate& b)
{
    if (a.margin != b.margin)
        return a.margin < b.margin;
    return a.point < b.point;
}

} // namespace detail

inline ScanResult positivity_scan(int n, double p, double q, const ScanConfig& cfg = {})
{
    const Ensemble ens = make_family(FamilyTag::interpolating(p, q), n);
    const double norm = normalization_sv(ens);

    // all coordinates are drawn from a finite set of abscissae, so weights are tabulated once
    std::vector<double> xs = detail::log_grid(cfg.lattice_lo, cfg.lattice_hi, cfg.lattice_points);
    const auto sweep = detail::log_grid(cfg.sweep_lo, cfg.sweep_hi, cfg.sweep_points);
    xs.insert(xs.end(), sweep.begin(), sweep.end());
    for (double a : cfg.alphas)
        for (int k = 1; k < n; ++k)
            xs.push_back(std::exp(-a / k));
    std::sort(xs.begin(), xs.end());
    xs.erase(std::unique(xs.begin(), xs.end()), xs.end());
    Eigen::MatrixXd table(n, xs.size());
    parallel_for(
        xs.size(), [&](std::size_t i) {
            for (int j = 0; j < n; ++j)
                table(j, Eigen::Index(i)) = weight_k(ens, j, xs[i]);
        },
        cfg.workers);
    auto index_of = [&](double x) { return std::size_t(std::lower_bound(xs.begin(), xs.end(), x) - xs.begin()); };

    std::vector<std::vector<std::size_t>> tuples;
    // strictly increasing lattice tuples
    std::vector<std::size_t> lat;
    for (double x : detail::log_grid(cfg.lattice_lo, cfg.lattice_hi, cfg.lattice_points))
        lat.push_back(index_of(x));
    std::vector<int> idx(n);
    for (int i = 0; i < n; ++i)
        idx[i] = i;
    const int L = int(lat.size());
    while (n <= L) {
        std::vector<std::size_t> t(n);
        for (int i = 0; i < n; ++i)
            t[i] = lat[idx[i]];
        tuples.push_back(t);
        int i = n - 1;
        while (i >= 0 && idx[i] == L - n + i)
            --i;
        if (i < 0)
            break;
        ++idx[i];
        for (int j = i + 1; j < n; ++j)
            idx[j] = idx[j - 1] + 1;
    }
    // x_k = e^{-alpha/k} for k < n with x_n swept
    for (double a : cfg.alphas)
        for (double xn : sweep) {
            std::vector<std::size_t> t;
            for (int k = 1; k < n; ++k)
                t.push_back(index_of(std::exp(-a / k)));
            t.push_back(index_of(xn));
            tuples.push_back(t);
        }

    std::vector<std::optional<detail::Candidate>> found(tuples.size());
    parallel_for(
        tuples.size(), [&](std::size_t i) {
            auto t = tuples[i];
            std::sort(t.begin(), t.end());
            if (std::adjacent_find(t.begin(), t.end()) != t.end())
                return;
            Eigen::MatrixXd w(n, n);
            std::vector<double> pt(n);
            for (int k = 0; k < n; ++k) {
                pt[k] = xs[t[k]];
                w.col(k) = table.col(Eigen::Index(t[k]));
            }
            const double h = hadamard_bound(w);
            if (!(h > 0.0) || !std::isfinite(h))
                return;
            const double d = determinant(w);
            if (d < -cfg.noise * h)
                found[i] = detail::Candidate{pt, d / h, norm * vandermonde(pt) * d};
        },
        cfg.workers);

    ScanResult res;
    res.points = tuples.size();
    std::optional<detail::Candidate> best;
    for (auto& c : found)
        if (c && (!best || detail::better(*c, *best)))
            best = c;
    if (best) {
        res.verdict = ScanVerdict::NegativeFound;
        res.witness = best->point;
        res.witness_value = best->value;
        res.witness_margin = best->margin;
    }
    return res;
}

// Nodes and weights for int_lo^hi f(x) dx, Gauss-Legendre panels in log x.
struct LogRule {
    std::vector<double> x;
    std::vector<double> w;
};

inline LogRule log_rule(double lo, double hi, double panel = 1.0)
{
    using rule = boost::math::quadrature::gauss<double, 10>;
    const double a = std::log(lo), b = std::log(hi);
    const int m = std::max(1, int(std::ceil((b - a) / panel)));
    const double h = (b - a) / m;
    LogRule r;
    const auto& ab = rule::abscissa();
    const auto& wt = rule::weights();
    for (int i = 0; i < m; ++i) {
        const double c = a + (i + 0.5) * h;
        for (std::size_t k = 0; k < ab.size(); ++k)
            for (double sg : {-1.0, 1.0}) {
                if (ab[k] == 0.0 && sg > 0)
                    continue;
                const double u = c + sg * 0.5 * h * ab[k];
                r.x.push_back(std::exp(u));
                r.w.push_back(0.5 * h * wt[k] * std::exp(u));
            }
    }
    return r;
}

// range of x carrying the mass of x^{n-1} w_j(x) for all j, from a coarse scan
inline std::pair<double, double> mass_range(const Ensemble& ens, double rel = 1e-14)
{
    const double lo_lim = std::max(ens.support.lo, 1e-30), hi_lim = std::min(ens.support.hi, 1e8);
    const auto grid = detail::log_grid(lo_lim, hi_lim, 200);
    std::vector<double> mag(grid.size(), 0.0);
    double peak = 0.0;
    for (std::size_t i = 0; i < grid.size(); ++i) {
        for (int j = 0; j < ens.n; ++j)
            mag[i] = std::max(mag[i], std::abs(weight_k(ens, j, grid[i])) * std::pow(grid[i], ens.n));
        peak = std::max(peak, mag[i]);
    }
    std::size_t a = 0, b = grid.size() - 1;
    while (a + 1 < grid.size() && mag[a + 1] < rel * peak)
        ++a;
    while (b > 0 && mag[b - 1] < rel * peak)
        --b;
    return {grid[a], grid[b]};
}

} // namespace matprod
