#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <numbers>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "matprod/densities.hpp"
#include "matprod/kernels.hpp"
#include "matprod/lyapunov.hpp"
#include "matprod/sampling.hpp"
#include "matprod/special.hpp"
#include "matprod/spherical.hpp"

using namespace matprod;

namespace {

struct Outcome {
    bool pass = true;
    std::ostringstream detail;

    void check(bool ok, const std::string& what)
    {
        if (!ok) {
            pass = false;
            detail << " [fail: " << what << "]";
        }
    }
};

double rel(double a, double b) { return std::abs(a - b) / std::abs(b); }
double rel(cplx a, cplx b) { return std::abs(a - b) / std::abs(b); }

Ensemble fam(const FamilyTag& t, int n) { return make_family(t, n); }

LogRule rule_for(const Ensemble& e)
{
    auto [lo, hi] = mass_range(e);
    lo = std::min(lo, 1e-14);
    if (!std::isfinite(e.support.hi))
        return log_rule(lo, hi, 0.5);
    LogRule r = log_rule(lo, 0.5, 0.5);
    const LogRule t = log_rule(1e-16, 0.5, 0.5);
    for (std::size_t i = 0; i < t.x.size(); ++i) {
        r.x.push_back(1.0 - t.x[i]);
        r.w.push_back(t.w[i]);
    }
    return r;
}

// one jittered point per stratum of [lo, hi], in random order
std::vector<double> stratified_point(std::mt19937_64& g, int n, double lo, double hi)
{
    std::uniform_real_distribution<double> u(0.15, 0.85);
    std::vector<double> a(n);
    for (int k = 0; k < n; ++k)
        a[k] = lo + (k + u(g)) * (hi - lo) / n;
    std::shuffle(a.begin(), a.end(), g);
    return a;
}

std::vector<double> pooled_sv(const std::vector<SpectralSample>& s)
{
    std::vector<double> v;
    for (const auto& x : s)
        for (double a : x.true_sq_singular_values())
            v.push_back(a);
    std::sort(v.begin(), v.end());
    return v;
}

MellinSymbol interp_symbol(int n, double p, double q) { return fam(FamilyTag::interpolating(p, q), n).symbol(); }

// criterion 1
void mellin_multiplicativity(Outcome& o)
{
    std::mt19937_64 g(1);
    std::uniform_real_distribution<double> re(0.2, 2.8), im(-8.0, 8.0);
    const MellinSymbol syms[] = {fam(FamilyTag::laguerre(0.5), 2).symbol(), interp_symbol(2, 0.5, 0.3),
                                 fam(FamilyTag::lognormal(0.4, 2.0), 2).symbol(), interp_symbol(2, 0, 1),
                                 fam(FamilyTag::cauchy(0, 4), 2).symbol()};
    double worst = 0.0;
    for (const auto& a : syms)
        for (const auto& b : syms) {
            const MellinSymbol ab = convolve_symbols(a, b);
            for (int i = 0; i < 20; ++i) {
                const cplx s(re(g), i < 4 ? 0.0 : im(g));
                worst = std::max(worst, rel(eval_symbol(ab, s), eval_symbol(a, s) * eval_symbol(b, s)));
            }
        }
    o.detail << "max rel err " << worst;
    o.check(worst <= 1e-12, "rel err > 1e-12");
}

// criterion 2
void inverse_mellin_oracle(Outcome& o)
{
    double worst = 0.0;
    for (int n : {1, 2, 3}) {
        const MellinSymbol w10 = interp_symbol(n, 1, 0), w01 = interp_symbol(n, 0, 1);
        for (double lx = std::log(0.01); lx <= std::log(100.0) + 1e-12; lx += std::log(100.0 / 0.01) / 40) {
            const double x = std::exp(lx);
            worst = std::max(worst, rel(inverse_mellin(w10, x), std::exp(-x)));
            worst = std::max(worst, rel(inverse_mellin(w01, x), std::exp(-1.0 / x) * std::pow(x, -(n + 1.0))));
        }
    }
    const double h2 = inverse_mellin(interp_symbol(2, 2, 0), 1.0);
    const double ref = 2.0 * std::cyl_bessel_k(0.0, 2.0);
    o.detail << "max rel err " << worst << ", h2(1) = " << h2 << " (2K0(2) = " << ref << ")";
    o.check(worst <= 1e-6, "weights rel err > 1e-6");
    o.check(std::abs(h2 - ref) <= 1e-6, "h2(1)");
    o.check(std::abs(ref - 0.227788) <= 1e-6, "2K0(2) reference");
}

// criterion 3
void biorthogonality(Outcome& o)
{
    double worst = 0.0;
    for (auto tag : {FamilyTag::laguerre(0), FamilyTag::jacobi(0, 4)})
        for (int n = 1; n <= 4; ++n) {
            const Ensemble e = fam(tag, n);
            const BiorthogonalSystem s = monic_polys(e);
            const LogRule r = rule_for(e);
            for (int l = 0; l < n; ++l)
                for (int m = 0; m < n; ++m) {
                    double v = 0.0;
                    for (std::size_t i = 0; i < r.x.size(); ++i)
                        v += r.w[i] * s.p(l, r.x[i]) * s.q[m](r.x[i]);
                    worst = std::max(worst, std::abs(v - (l == m ? 1.0 : 0.0)));
                }
        }
    o.detail << "max |<p_l,q_m> - delta| " << worst;
    o.check(worst <= 1e-6, "deviation > 1e-6");
}

// criterion 4
void determinantal(Outcome& o)
{
    std::mt19937_64 g(4);
    std::normal_distribution<double> nd(0.0, 1.0);
    double wsv = 0.0, wev = 0.0;
    for (auto tag : {FamilyTag::laguerre(0), FamilyTag::jacobi(0, 4), FamilyTag::interpolating(2, 0)})
        for (int n = 1; n <= 4; ++n) {
            Ensemble e = fam(tag, n);
            e.tol = 1e-12;
            const BiorthogonalSystem s = monic_polys(e);
            const bool finite = std::isfinite(e.support.hi);
            for (int t = 0; t < 20; ++t) {
                const auto a = stratified_point(g, n, 0.01, finite ? 1.0 : 6.0);
                Eigen::MatrixXd k(n, n);
                for (int b = 0; b < n; ++b)
                    for (int c = 0; c < n; ++c)
                        k(b, c) = kernel_sv(s, a[b], a[c]);
                wsv = std::max(wsv, rel(k.determinant() / std::tgamma(n + 1.0), jpdf_sv(e, a).value));

                std::vector<cplx> z(n);
                for (auto& v : z)
                    v = (finite ? 0.4 : 1.0) * cplx(nd(g), nd(g));
                Eigen::MatrixXcd ke(n, n);
                for (int b = 0; b < n; ++b)
                    for (int c = 0; c < n; ++c)
                        ke(b, c) = kernel_ev(e, z[b], z[c]);
                wev = std::max(wev, rel(ke.determinant() / std::tgamma(n + 1.0), cplx(jpdf_ev(e, z).value)));
            }
        }
    o.detail << "max rel err sv " << wsv << ", ev " << wev;
    o.check(wsv <= 1e-10, "sv");
    o.check(wev <= 1e-10, "ev");
}

// tensor log-rule over (0,inf)^n of jpdf_sv
double total_mass_sv(const Ensemble& e, double rel_tail, double panel)
{
    const int n = e.n;
    auto [lo, hi] = mass_range(e, rel_tail);
    const LogRule r = log_rule(lo, std::min(hi, e.support.hi), panel);
    const std::size_t m = r.x.size();
    Eigen::MatrixXd tab(n, m);
    for (std::size_t i = 0; i < m; ++i)
        for (int j = 0; j < n; ++j)
            tab(j, Eigen::Index(i)) = weight_k(e, j, r.x[i]);
    std::vector<std::size_t> idx(n, 0);
    double sum = 0.0;
    Eigen::MatrixXd w(n, n);
    std::vector<double> a(n);
    while (true) {
        double wt = 1.0;
        for (int k = 0; k < n; ++k) {
            a[k] = r.x[idx[k]];
            wt *= r.w[idx[k]];
            w.col(k) = tab.col(Eigen::Index(idx[k]));
        }
        sum += wt * vandermonde(a) * determinant(w);
        int k = n - 1;
        while (k >= 0 && ++idx[k] == m)
            idx[k--] = 0;
        if (k < 0)
            break;
    }
    return normalization_sv(e) * sum;
}

// radial log-rule in t = |z|^2, angular trapezoid with 2n nodes (exact for |Delta|^2)
double total_mass_ev(const Ensemble& e, double rel_tail, double panel)
{
    const int n = e.n;
    auto [lo, hi] = mass_range(e, rel_tail);
    const LogRule r = log_rule(lo, std::min(hi, e.support.hi), panel);
    const std::size_t m = r.x.size();
    std::vector<double> om(m);
    for (std::size_t i = 0; i < m; ++i)
        om[i] = weight_k(e, 0, r.x[i]);
    const int na = 2 * n;
    double sum = 0.0;
    std::vector<std::size_t> ri(n, 0);
    std::vector<int> ai(n, 0);
    std::vector<cplx> z(n);
    while (true) {
        double wr = 1.0;
        for (int k = 0; k < n; ++k)
            wr *= 0.5 * r.w[ri[k]] * om[ri[k]];
        if (wr != 0.0) {
            double ang = 0.0;
            std::fill(ai.begin(), ai.end(), 0);
            while (true) {
                for (int k = 0; k < n; ++k)
                    z[k] = std::polar(std::sqrt(r.x[ri[k]]), 2.0 * std::numbers::pi * ai[k] / na);
                ang += std::norm(vandermonde(z));
                int k = n - 1;
                while (k >= 1 && ++ai[k] == na)
                    ai[k--] = 0;
                if (k < 1)
                    break;
            }
            sum += wr * ang * std::pow(2.0 * std::numbers::pi / na, n - 1) * 2.0 * std::numbers::pi;
        }
        int k = n - 1;
        while (k >= 0 && ++ri[k] == m)
            ri[k--] = 0;
        if (k < 0)
            break;
    }
    return normalization_ev(e) * sum;
}

// criterion 5
void normalization(Outcome& o)
{
    double wsv = 0.0, wev = 0.0;
    for (auto tag : {FamilyTag::laguerre(0), FamilyTag::jacobi(0, 4), FamilyTag::interpolating(2, 0)})
        for (int n = 1; n <= 3; ++n) {
            const Ensemble e = fam(tag, n);
            wsv = std::max(wsv, std::abs(total_mass_sv(e, 1e-14, 1.0) - 1.0));
            wev = std::max(wev, std::abs(total_mass_ev(e, 1e-14, n < 3 ? 1.0 : 2.0) - 1.0));
        }
    o.detail << "max |mass - 1| sv " << wsv << ", ev " << wev;
    o.check(wsv <= 1e-3, "sv");
    o.check(wev <= 1e-3, "ev");
}

// criterion 6
void transfer_closure(Outcome& o)
{
    std::mt19937_64 g(6);
    double wd = 0.0, wk = 0.0, wc = 0.0;
    for (int n = 2; n <= 4; ++n) {
        const Ensemble i1 = fam(FamilyTag::interpolating(1, 0), n);
        const Ensemble c = compose(i1, i1);
        const Ensemble i2 = fam(FamilyTag::interpolating(2, 0), n);
        const BiorthogonalSystem sc = monic_polys(c), s2 = monic_polys(i2);
        for (int k = 0; k < n; ++k)
            for (int j = 0; j <= k; ++j)
                wc = std::max(wc, std::abs(sc.coeffs(k, j) - s2.coeffs(k, j)) / std::max(1.0, std::abs(s2.coeffs(k, j))));
        for (int t = 0; t < 10; ++t) {
            const auto a = stratified_point(g, n, 0.02, 8.0);
            wd = std::max(wd, rel(jpdf_sv(c, a).value, jpdf_sv(i2, a).value));
            wk = std::max(wk, rel(kernel_sv(sc, a[0], a[1]), kernel_sv(s2, a[0], a[1])));
        }
    }
    const BiorthogonalSystem s3 = monic_polys(compose(fam(FamilyTag::interpolating(1, 0), 3),
                                                      fam(FamilyTag::interpolating(1, 0), 3)));
    o.detail << "density " << wd << ", kernel " << wk << ", coeffs " << wc << ", a2 = (" << s3.coeffs(2, 0) << ", "
             << s3.coeffs(2, 1) << ")";
    o.check(wd <= 1e-6, "density");
    o.check(wk <= 1e-6, "kernel");
    o.check(wc <= 1e-6, "coefficients");
    o.check(rel(s3.coeffs(2, 0), 4.0) <= 1e-6 && rel(s3.coeffs(2, 1), -8.0) <= 1e-6, "a2 = (4, -8)");
}

// criterion 7
void kernel_transfer(Outcome& o)
{
    double wc = 0.0, wq = 0.0;
    for (int n = 2; n <= 4; ++n) {
        const Ensemble lag = fam(FamilyTag::laguerre(0), n);
        const BiorthogonalSystem t = transfer_system(lag, monic_polys(lag));
        const BiorthogonalSystem d = monic_polys(fam(FamilyTag::interpolating(2, 0), n));
        wc = std::max(wc, (t.coeffs - d.coeffs).cwiseAbs().maxCoeff());
        for (int k = 0; k < n; ++k)
            for (double x : {0.05, 0.2, 0.5, 1.0, 2.0, 5.0, 12.0})
                wq = std::max(wq, std::abs(t.q[k](x) - d.q[k](x)));
    }
    o.detail << "coeffs " << wc << ", weights " << wq;
    o.check(wc <= 1e-10, "coefficients");
    o.check(wq <= 1e-5, "weights");
}

// criterion 8
void interp_positivity(Outcome& o)
{
    struct Case {
        int n;
        double p, q;
        bool negative;
    };
    const Case cases[] = {{2, 0.5, 0, true}, {3, 1.5, 0, true}, {2, 1.5, 0, false}, {2, 2, 0, false}, {3, 2, 2.5, false}};
    std::mt19937_64 g(8);
    std::uniform_real_distribution<double> lr(std::log(1e-3), std::log(1e2)), ph(0.0, 2.0 * std::numbers::pi);
    int bad_ev = 0;
    for (const Case& c : cases) {
        const ScanResult r = positivity_scan(c.n, c.p, c.q);
        const bool neg = r.verdict == ScanVerdict::NegativeFound;
        o.detail << " (" << c.n << "," << c.p << "," << c.q << "): " << to_string(r.verdict) << ";";
        o.check(neg == c.negative, "scan verdict");
        const Ensemble e = fam(FamilyTag::interpolating(c.p, c.q), c.n);
        if (neg)
            o.check(r.witness && jpdf_sv(e, *r.witness).value < 0.0, "witness not negative");
        const double norm = normalization_ev(e);
        std::vector<cplx> z(c.n);
        for (int t = 0; t < 10000; ++t) {
            for (auto& v : z)
                v = std::polar(std::exp(0.5 * lr(g)), ph(g));
            bad_ev += jpdf_ev(e, z, norm).value < 0.0;
        }
    }
    o.detail << " negative ev density values " << bad_ev << " / 50000";
    o.check(bad_ev == 0, "negative jpdf_ev");
}

// criterion 9
void monte_carlo_vs_analytics(Outcome& o)
{
    const auto prod = sample_products({FactorSpec::ginibre(2), FactorSpec::ginibre(2)}, 100000, 91);
    const auto c1 = marginal_sv_cdf(fam(FamilyTag::interpolating(2, 0), 2));
    const double k1 = ks_statistic(pooled_sv(prod), [&](double x) { return c1(x); });

    const auto tr = sample_products({FactorSpec::truncated_unitary(2, 6)}, 100000, 92);
    const auto c2 = marginal_sv_cdf(fam(FamilyTag::jacobi(0, 4), 2));
    const double k2 = ks_statistic(pooled_sv(tr), [&](double x) { return c2(x); });

    const auto inv = sample_products({FactorSpec::inverse_ginibre(2)}, 100000, 93);
    const auto c3 = marginal_sv_cdf(invert(fam(FamilyTag::laguerre(0), 2)));
    const double k3 = ks_statistic(pooled_sv(inv), [&](double x) { return c3(x); });

    o.detail << "KS Z1Z2 " << k1 << ", truncated " << k2 << ", inverse " << k3;
    o.check(k1 < 0.01, "Z1Z2");
    o.check(k2 < 0.02, "truncated");
    o.check(k3 < 0.01, "inverse");
}

// criterion 10
void spherical_oracle(Outcome& o)
{
    const Ensemble l2 = fam(FamilyTag::laguerre(0), 2);
    const std::vector<std::vector<cplx>> pts = {
        {cplx(1.5, 1.0), 2.5}, {2.0, 3.2}, {cplx(1.2, 0.5), cplx(2.7, -0.3)}, {3.0, 1.7}, {cplx(2.0, -0.5), cplx(2.2, 0.7)}};
    double worst = 0.0;
    for (const auto& s : pts) {
        const cplx ref = std::exp(log_gamma(s[0] - 0.5) + log_gamma(s[1] - 0.5) - std::lgamma(2.0));
        worst = std::max(worst, rel(spherical_transform_numeric(l2, s), ref));
    }
    const cplx g1i = std::exp(log_gamma(cplx(1.0, 1.0)));
    const std::vector<double> rp = rho_prime(2);
    const cplx at_rho = spherical_transform_numeric(l2, {rp[0], rp[1]});
    o.detail << "max rel err " << worst << ", Gamma(1+i) = " << g1i.real() << g1i.imag() << "i, S(rho') = " << at_rho.real();
    o.check(worst <= 1e-3, "transform");
    o.check(std::abs(g1i - cplx(0.498016, -0.154949)) <= 1e-6, "Gamma(1+i)");
    o.check(std::abs(at_rho - 1.0) <= 1e-3, "S(rho')");
}

// criterion 11
void lyapunov_clt(Outcome& o)
{
    const int M = 200;
    const std::size_t runs = 5000;
    const CltParameters sym = clt_params_symbolic(fam(FamilyTag::laguerre(0), 2));
    const ExponentStats st = exponent_mc(FactorSpec::ginibre(2), M, runs, 11, sym);
    o.detail << "reference m = (" << sym.m(0) << ", " << sym.m(1) << ");";
    auto bands = [&](const char* name, const CltParameters& p, const std::vector<double>& ks) {
        o.detail << " " << name << ": m = (" << p.m(0) << ", " << p.m(1) << ")";
        for (int j = 0; j < 2; ++j) {
            const double z = (p.m(j) - sym.m(j)) / p.m_se(j);
            o.detail << " z" << j + 1 << " = " << z;
            o.check(std::abs(z) <= 3.0, std::string(name) + " mean " + std::to_string(j + 1));
        }
        const double off = p.sigma(0, 1) / p.sigma_se(0, 1);
        o.detail << ", cov12/SE = " << off << ", KS = (" << ks[0] << ", " << ks[1] << ");";
        o.check(std::abs(off) < 3.0, std::string(name) + " off-diagonal covariance");
        o.check(ks[0] < 0.03 && ks[1] < 0.03, std::string(name) + " KS");
    };
    bands("lyapunov", st.lyapunov, st.ks_lyapunov);
    bands("stability", st.stability, st.ks_stability);
}

// criterion 12
void qr_characterization(Outcome& o)
{
    const Ensemble lag = fam(FamilyTag::laguerre(0), 2);
    ChainOptions plain;
    plain.eigenvalues = false;
    plain.compounds = false;
    const auto one = sample_products({FactorSpec::ginibre(2)}, 100000, 121, 0, plain);
    std::vector<std::vector<double>> r;
    for (const auto& x : one)
        r.push_back(x.r_diag());
    const IndependenceReport rep = independence_diag(r, lag);

    const std::vector<FactorSpec> three(3, FactorSpec::ginibre(2));
    ChainOptions evs;
    evs.compounds = false;
    const auto a = sample_products(three, 100000, 122, 0, evs);
    const auto b = sample_products(three, 100000, 123, 0, plain);
    std::vector<double> radii, rjj;
    for (const auto& x : a)
        for (cplx v : x.true_eigenvalues())
            radii.push_back(std::abs(v));
    for (const auto& x : b)
        for (double v : x.r_diag())
            rjj.push_back(v);
    const double k2 = ks_two_sample(radii, rjj);
    o.detail << "corr " << rep.corr(0, 1) << ", marginal KS (" << rep.marginal_ks[0] << ", " << rep.marginal_ks[1]
             << "), radii vs R_jj two-sample KS " << k2;
    o.check(std::abs(rep.corr(0, 1)) < 0.02, "correlation");
    o.check(rep.marginal_ks[0] < 0.01 && rep.marginal_ks[1] < 0.01, "marginals");
    o.check(k2 < 0.01, "radii");
}

} // namespace

int main()
{
    struct Criterion {
        int id;
        const char* name;
        double budget; // seconds, 0 when unstated
        std::function<void(Outcome&)> run;
    };
    const std::vector<Criterion> all = {
        {1, "Mellin multiplicativity", 1.0, mellin_multiplicativity},
        {2, "inverse-Mellin oracle", 5.0, inverse_mellin_oracle},
        {3, "biorthogonality", 10.0, biorthogonality},
        {4, "determinantal identity", 0.0, determinantal},
        {5, "normalization", 60.0, normalization},
        {6, "transfer closure", 0.0, transfer_closure},
        {7, "kernel transfer", 0.0, kernel_transfer},
        {8, "interpolating positivity", 120.0, interp_positivity},
        {9, "Monte Carlo vs analytics", 300.0, monte_carlo_vs_analytics},
        {10, "spherical oracle", 0.0, spherical_oracle},
        {11, "Lyapunov CLT", 300.0, lyapunov_clt},
        {12, "QR characterization", 0.0, qr_characterization},
    };
    int failed = 0;
    for (const auto& c : all) {
        Outcome o;
        const auto t0 = std::chrono::steady_clock::now();
        try {
            c.run(o);
        } catch (const std::exception& e) {
            o.check(false, std::string("exception: ") + e.what());
        }
        const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        if (c.budget > 0.0)
            o.check(secs < c.budget, "runtime over budget");
        failed += !o.pass;
        std::printf("criterion %2d %-26s %s  %.2fs  %s\n", c.id, c.name, o.pass ? "PASS" : "FAIL", secs,
                    o.detail.str().c_str());
        std::fflush(stdout);
    }
    std::printf("%d of %zu criteria passed\n", int(all.size()) - failed, all.size());
    return failed == 0 ? 0 : 1;
}
