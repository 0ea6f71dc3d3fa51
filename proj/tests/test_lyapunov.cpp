#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <vector>

#include "matprod/lyapunov.hpp"

using namespace matprod;

namespace {

Ensemble fam(const FamilyTag& t, int n) { return make_family(t, n); }

void expect_within_se(const CltParameters& sym, const CltParameters& emp, const std::string& what)
{
    const int n = int(sym.m.size());
    for (int j = 0; j < n; ++j) {
        EXPECT_LE(std::abs(emp.m(j) - sym.m(j)), 3 * emp.m_se(j)) << what << " m_" << j;
        EXPECT_LE(std::abs(emp.sigma(j, j) - sym.sigma(j, j)), 3 * emp.sigma_se(j, j)) << what << " sigma_" << j;
    }
}

} // namespace

TEST(CltSymbolic, GinibreDigamma)
{
    const auto p = clt_params_symbolic(fam(FamilyTag::laguerre(0), 2));
    const double g = 0.57721566490153286;
    EXPECT_NEAR(p.m(0), 0.5 * (1 - g), 1e-14);
    EXPECT_NEAR(p.m(1), -0.5 * g, 1e-14);
    EXPECT_NEAR(p.m(0), 0.211392, 1e-6);
    EXPECT_NEAR(p.m(1), -0.288608, 1e-6);
    EXPECT_NEAR(p.sigma(0, 0), (std::numbers::pi * std::numbers::pi / 6 - 1) / 4, 1e-14);
    EXPECT_NEAR(p.sigma(1, 1), std::numbers::pi * std::numbers::pi / 24, 1e-14);
    EXPECT_EQ(p.sigma(0, 1), 0.0);
    EXPECT_EQ(p.sigma(1, 0), 0.0);
}

TEST(CltSymbolic, LogNormalGaussianExponent)
{
    EXPECT_NEAR(clt_params_symbolic(fam(FamilyTag::lognormal(0, 1), 1)).m(0), 0.25, 1e-15);
    const auto p = clt_params_symbolic(fam(FamilyTag::lognormal(0.4, 0.7), 4));
    for (int j = 1; j < 3; ++j)
        EXPECT_NEAR(p.m(j - 1) - p.m(j), p.m(j) - p.m(j + 1), 1e-14);
}

TEST(CltSymbolic, AdditiveUnderComposition)
{
    const auto e1 = fam(FamilyTag::jacobi(0.5, 4), 3), e2 = fam(FamilyTag::muttalib_borodin(1, 2, 0.5), 3);
    const auto a = clt_params_symbolic(e1), b = clt_params_symbolic(e2), c = clt_params_symbolic(compose(e1, e2));
    EXPECT_LT((c.m - a.m - b.m).cwiseAbs().maxCoeff(), 1e-14);
    EXPECT_LT((c.sigma - a.sigma - b.sigma).cwiseAbs().maxCoeff(), 1e-14);
}

TEST(CltSymbolic, StrictlyDecreasingMeans)
{
    for (auto tag : {FamilyTag::laguerre(0), FamilyTag::laguerre(2.5), FamilyTag::jacobi(0, 4), FamilyTag::cauchy(1, 5),
                     FamilyTag::muttalib_borodin(0, 1, 2), FamilyTag::lognormal(0.3, 0.5),
                     FamilyTag::interpolating(1.5, 2)}) {
        const auto p = clt_params_symbolic(fam(tag, 4));
        for (int j = 1; j < 4; ++j)
            EXPECT_GT(p.m(j - 1), p.m(j)) << tag.describe();
        EXPECT_LT((p.sigma - p.sigma.transpose()).cwiseAbs().maxCoeff(), 1e-12);
        EXPECT_TRUE(p.sigma.isDiagonal());
    }
}

TEST(CltSymbolic, StripViolation)
{
    auto inv = invert(fam(FamilyTag::laguerre(0), 2));
    auto d = inv.derivative();
    d.symbol.strip.hi = 2.0;
    inv.kind = d;
    EXPECT_THROW(clt_params_symbolic(inv), Error);
}

TEST(CltEmpirical, GinibreMatchesSymbolic)
{
    const auto emp = clt_params_empirical(FactorSpec::ginibre(2), 100000, 1, 1);
    const auto sym = clt_params_symbolic(fam(FamilyTag::laguerre(0), 2));
    expect_within_se(sym, emp, "ginibre");
    EXPECT_LT(std::abs(emp.sigma(0, 1)), 3 * emp.sigma_se(0, 1));
    EXPECT_EQ(emp.sigma(0, 1), emp.sigma(1, 0));
}

TEST(CltEmpirical, TruncatedUnitaryMatchesJacobi)
{
    for (int n : {2, 3}) {
        const int N = 2 * n + 2;
        const auto emp = clt_params_empirical(FactorSpec::truncated_unitary(n, N), 100000, 2, 1);
        expect_within_se(clt_params_symbolic(fam(FamilyTag::jacobi(0, N - n), n)), emp, "truncated n=" + std::to_string(n));
    }
    expect_within_se(clt_params_symbolic(fam(FamilyTag::laguerre(0), 3)),
                     clt_params_empirical(FactorSpec::ginibre(3), 100000, 3, 1), "ginibre n=3");
}

TEST(CltEmpirical, LogNormalDiagonalFactor)
{
    for (int n : {2, 3}) {
        const auto e = fam(FamilyTag::lognormal(0, 1), n);
        McmcConfig cfg;
        cfg.thinning = 20;
        const auto emp = clt_params_empirical(FactorSpec::diagonal(e, cfg), 100000, 4, 1);
        expect_within_se(clt_params_symbolic(e), emp, "lognormal n=" + std::to_string(n));
    }
}

TEST(CltEmpirical, HaarIsTrivial)
{
    const auto emp = clt_params_empirical(FactorSpec::haar(3), 1000, 5, 1);
    EXPECT_LT(emp.m.cwiseAbs().maxCoeff(), 1e-12);
    EXPECT_LT(emp.sigma.cwiseAbs().maxCoeff(), 1e-24);
    EXPECT_THROW(clt_params_empirical(FactorSpec::ginibre(2), 10, 5, 1), Error);
}

TEST(ExponentMc, DeterministicDiagonal)
{
    CMatrix d = CMatrix::Zero(2, 2);
    d(0, 0) = std::exp(1.0);
    d(1, 1) = 1.0;
    for (int M : {10, 200}) {
        const auto r = exponent_mc(FactorSpec::fixed_matrix(d), M, 3, 0, {}, 1);
        EXPECT_NEAR(r.lyapunov.m(0), 1.0, 1e-13);
        EXPECT_NEAR(r.lyapunov.m(1), 0.0, 1e-13);
        EXPECT_NEAR(r.stability.m(0), 1.0, 1e-13);
        EXPECT_NEAR(r.stability.m(1), 0.0, 1e-13);
    }
}

TEST(ExponentMc, GinibreModerateScale)
{
    const auto sym = clt_params_symbolic(fam(FamilyTag::laguerre(0), 2));
    const auto r = exponent_mc(FactorSpec::ginibre(2), 50, 2000, 6, sym, 1);
    for (int j = 0; j < 2; ++j) {
        // finite-M bias of log sigma is O(1/M); stability exponents share the limit
        EXPECT_NEAR(r.lyapunov.m(j), sym.m(j), 0.02);
        EXPECT_NEAR(r.stability.m(j), sym.m(j), 5 * r.stability.m_se(j));
        EXPECT_NEAR(r.lyapunov.sigma(j, j) * 50, sym.sigma(j, j), 0.05);
        EXPECT_LT(r.ks_stability[j], 0.05);
    }
    EXPECT_EQ(r.ks_lyapunov.size(), 2u);
}

TEST(RDiagCdf, KnownValues)
{
    const auto g = fam(FamilyTag::laguerre(0), 2);
    EXPECT_NEAR(rdiag_marginal_cdf(g, 2, std::log(2.0)), 0.5, 1e-10);
    EXPECT_NEAR(rdiag_marginal_cdf(g, 2, 1e300), 1.0, 1e-8);
    EXPECT_NEAR(rdiag_marginal_cdf(g, 1, 2.0), 1.0 - 3.0 * std::exp(-2.0), 1e-10);
    const double r = 1e-4;
    EXPECT_NEAR(rdiag_marginal_cdf(g, 1, r) / (r * r / 2), 1.0, 1e-3);
    for (auto tag : {FamilyTag::jacobi(0.5, 3), FamilyTag::cauchy(0, 4), FamilyTag::lognormal(0, 0.5)}) {
        const RDiagCdf c(fam(tag, 3), 2);
        EXPECT_NEAR(c(1e200), 1.0, 1e-8) << tag.describe();
        EXPECT_LE(c(0.5), c(0.7)) << tag.describe();
    }
    EXPECT_THROW(RDiagCdf(g, 0), Error);
}
