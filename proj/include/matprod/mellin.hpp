#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <functional>
#include <limits>
#include <numbers>
#include <optional>
#include <string>
#include <vector>

#include "errors.hpp"
#include "quadrature.hpp"
#include "special.hpp"

namespace matprod {

constexpr double kInf = std::numeric_limits<double>::infinity();

struct Strip {
    double lo = -kInf;
    double hi = kInf;

    bool contains(double x) const { return x > lo && x < hi; }
    bool covers(double a, double b) const { return lo < a && b < hi; }
    bool empty() const { return !(lo < hi); }
    Strip intersect(const Strip& o) const { return {std::max(lo, o.lo), std::min(hi, o.hi)}; }
    double width() const { return hi - lo; }
};

struct GammaFactor {
    double p;
    double beta;
    double gamma;
};

struct GaussFactor {
    double A = 0.0;
    double B = 0.0;
    double C = 0.0;
};

enum class DecayClass { Gaussian, Exponential, Polynomial, Insufficient };

inline const char* to_string(DecayClass d)
{
    switch (d) {
    case DecayClass::Gaussian: return "gaussian";
    case DecayClass::Exponential: return "exponential";
    case DecayClass::Polynomial: return "polynomial";
    case DecayClass::Insufficient: return "insufficient";
    }
    return "?";
}

inline bool is_integer(double v, double tol = 1e-12) { return std::abs(v - std::round(v)) <= tol; }

// prefactor * geo_base^s * poly(s) * exp(A s^2 + B s + C) * prod Gamma(beta s + gamma)^p
struct MellinSymbol {
    double prefactor = 1.0;
    std::vector<GammaFactor> gammas;
    std::vector<double> poly{1.0}; // ascending coefficients
    double geo_base = 1.0;
    GaussFactor gauss;
    Strip strip;

    static MellinSymbol unit() { return {}; }

    // Gamma(beta s + gamma)^p on the largest strip where it is analytic
    static MellinSymbol gamma_power(double p, double beta, double gamma)
    {
        MellinSymbol m;
        m.gammas.push_back({p, beta, gamma});
        if (p > 0.0 || !is_integer(p)) {
            const double edge = -gamma / beta;
            m.strip = beta > 0 ? Strip{edge, kInf} : Strip{-kInf, edge};
        }
        m.validate();
        return m;
    }

    void validate() const
    {
        if (!(prefactor > 0.0) || !std::isfinite(prefactor))
            throw Error(ErrorKind::ParameterOutOfRange, "symbol prefactor must be positive");
        if (!(geo_base > 0.0) || !std::isfinite(geo_base))
            throw Error(ErrorKind::ParameterOutOfRange, "geometric base must be positive");
        if (!(gauss.A >= 0.0))
            throw Error(ErrorKind::ParameterOutOfRange, "Gaussian coefficient A must be >= 0");
        if (strip.empty())
            throw Error(ErrorKind::EmptyStrip, "symbol strip is empty");
        for (const auto& g : gammas) {
            if (g.beta == 0.0)
                throw Error(ErrorKind::ParameterOutOfRange, "Gamma scale must be nonzero");
            if (!is_integer(g.p)) {
                const double a = g.beta > 0 ? strip.lo : strip.hi;
                const double z = g.beta * a + g.gamma;
                if (!(z >= -1e-12))
                    throw Error(ErrorKind::BranchError,
                                "fractional Gamma power with non-positive argument on the strip");
            }
        }
    }

    // merges Gamma factors with equal (beta, gamma) and trims the polynomial
    MellinSymbol& normalize()
    {
        std::vector<GammaFactor> merged;
        for (const auto& g : gammas) {
            auto it = std::find_if(merged.begin(), merged.end(), [&](const GammaFactor& h) {
                return h.beta == g.beta && h.gamma == g.gamma;
            });
            if (it == merged.end())
                merged.push_back(g);
            else
                it->p += g.p;
        }
        std::erase_if(merged, [](const GammaFactor& g) { return g.p == 0.0; });
        gammas = std::move(merged);
        while (poly.size() > 1 && poly.back() == 0.0)
            poly.pop_back();
        return *this;
    }

    std::size_t degree() const { return poly.size() - 1; }
};

inline cplx poly_value(const std::vector<double>& c, cplx s)
{
    cplx v = 0.0;
    for (auto it = c.rbegin(); it != c.rend(); ++it)
        v = v * s + *it;
    return v;
}

inline std::vector<double> poly_mul(const std::vector<double>& a, const std::vector<double>& b)
{
    std::vector<double> r(a.size() + b.size() - 1, 0.0);
    for (std::size_t i = 0; i < a.size(); ++i)
        for (std::size_t j = 0; j < b.size(); ++j)
            r[i + j] += a[i] * b[j];
    return r;
}

// prod_{i=1}^{l} (s - i)
inline std::vector<double> falling_poly(int l)
{
    std::vector<double> r{1.0};
    for (int i = 1; i <= l; ++i)
        r = poly_mul(r, {-double(i), 1.0});
    return r;
}

namespace detail {

inline void check_strip(const MellinSymbol& sym, double re)
{
    if (!sym.strip.contains(re))
        throw Error(ErrorKind::StripViolation, "Re(s)=" + std::to_string(re) + " outside strip (" +
                                                   std::to_string(sym.strip.lo) + ", " +
                                                   std::to_string(sym.strip.hi) + ")");
}

// log of everything except the polynomial factor
inline cplx log_eval_core(const MellinSymbol& sym, cplx s)
{
    cplx r = std::log(sym.prefactor) + s * std::log(sym.geo_base) +
             (sym.gauss.A * s + sym.gauss.B) * s + sym.gauss.C;
    for (const auto& g : sym.gammas) {
        const cplx z = g.beta * s + g.gamma;
        if (!is_integer(g.p) && z.real() <= 0.0)
            throw Error(ErrorKind::BranchError, "fractional Gamma power at non-positive argument");
        if (is_gamma_pole(z))
            return g.p > 0 ? cplx(kInf, 0.0) : cplx(-kInf, 0.0);
        r += g.p * log_gamma(z);
    }
    return r;
}

} // namespace detail

// Complex logarithm of the symbol value (imaginary part defined modulo 2*pi).
inline cplx log_eval_symbol(const MellinSymbol& sym, cplx s)
{
    detail::check_strip(sym, s.real());
    const cplx pv = poly_value(sym.poly, s);
    if (pv == 0.0)
        return {-kInf, 0.0};
    return detail::log_eval_core(sym, s) + std::log(pv);
}

inline cplx eval_symbol(const MellinSymbol& sym, cplx s)
{
    detail::check_strip(sym, s.real());
    const cplx pv = poly_value(sym.poly, s);
    if (pv == 0.0)
        return 0.0;
    const cplx l = detail::log_eval_core(sym, s);
    if (l.real() == -kInf)
        return 0.0;
    return pv * std::exp(l);
}

inline double eval_symbol(const MellinSymbol& sym, double s) { return eval_symbol(sym, cplx(s, 0.0)).real(); }

inline MellinSymbol convolve_symbols(const MellinSymbol& a, const MellinSymbol& b)
{
    MellinSymbol r;
    r.strip = a.strip.intersect(b.strip);
    if (r.strip.empty())
        throw Error(ErrorKind::EmptyStrip, "symbol strips are disjoint");
    r.prefactor = a.prefactor * b.prefactor;
    r.gammas = a.gammas;
    r.gammas.insert(r.gammas.end(), b.gammas.begin(), b.gammas.end());
    r.poly = poly_mul(a.poly, b.poly);
    r.geo_base = a.geo_base * b.geo_base;
    r.gauss = {a.gauss.A + b.gauss.A, a.gauss.B + b.gauss.B, a.gauss.C + b.gauss.C};
    r.normalize();
    r.validate();
    return r;
}

inline MellinSymbol multiply_poly(const MellinSymbol& sym, const std::vector<double>& coeffs, double scale = 1.0)
{
    MellinSymbol r = sym;
    r.poly = poly_mul(sym.poly, coeffs);
    for (double& c : r.poly)
        c *= scale;
    r.normalize();
    return r;
}

inline MellinSymbol derivative_symbol(const MellinSymbol& sym, int k)
{
    if (k < 0)
        throw Error(ErrorKind::ParameterOutOfRange, "derivative order must be nonnegative");
    if (k == 0)
        return sym;
    std::vector<double> sk(k + 1, 0.0);
    sk[k] = 1.0;
    return multiply_poly(sym, sk);
}

// symbol of s -> M(n+1-s)
inline MellinSymbol reflect_symbol(const MellinSymbol& sym, int n)
{
    if (n < 1)
        throw Error(ErrorKind::ParameterOutOfRange, "dimension must be positive");
    const double m = n + 1.0;
    MellinSymbol r;
    r.strip = {m - sym.strip.hi, m - sym.strip.lo};
    r.prefactor = sym.prefactor * std::pow(sym.geo_base, m);
    r.geo_base = 1.0 / sym.geo_base;
    for (const auto& g : sym.gammas)
        r.gammas.push_back({g.p, -g.beta, g.beta * m + g.gamma});
    const auto& [A, B, C] = sym.gauss;
    r.gauss = {A, -(2.0 * A * m + B), A * m * m + B * m + C};
    // poly(m - s) by Horner on the polynomial (m - s)
    std::vector<double> acc{0.0};
    for (auto it = sym.poly.rbegin(); it != sym.poly.rend(); ++it) {
        acc = poly_mul(acc, {m, -1.0});
        acc[0] += *it;
    }
    r.poly = acc;
    r.normalize();
    r.validate();
    return r;
}

struct DecayInfo {
    DecayClass cls;
    double rate;  // exponential rate (pi/2) sum p|beta|, or A for Gaussian
    double power; // algebraic exponent of |t| along Re s = c
};

inline DecayInfo decay_info(const MellinSymbol& sym, double c)
{
    double kappa = 0.0, power = double(sym.degree());
    for (const auto& g : sym.gammas) {
        kappa += 0.5 * std::numbers::pi * g.p * std::abs(g.beta);
        power += g.p * (g.beta * c + g.gamma - 0.5);
    }
    if (sym.gauss.A > 0.0)
        return {DecayClass::Gaussian, sym.gauss.A, power};
    if (kappa > 1e-12)
        return {DecayClass::Exponential, kappa, power};
    if (std::abs(kappa) <= 1e-12 && power < -1.0)
        return {DecayClass::Polynomial, 0.0, power};
    return {DecayClass::Insufficient, kappa, power};
}

enum class AbscissaRule { Saddle, Midpoint };

struct InverseOptions {
    double tol = 1e-10;
    std::optional<double> abscissa;
    std::optional<int> dimension;
    AbscissaRule rule = AbscissaRule::Saddle;
};

struct InverseResult {
    double value = 0.0;
    double error = 0.0;
    double abscissa = 0.0;
    double cutoff = 0.0;
};

namespace detail {

inline double midpoint_abscissa(const MellinSymbol& sym, std::optional<int> dim)
{
    double lo = sym.strip.lo, hi = sym.strip.hi;
    if (dim) {
        lo = std::max(lo, 0.0);
        hi = std::min(hi, *dim + 1.0);
        if (!(lo < hi))
            lo = sym.strip.lo, hi = sym.strip.hi;
    }
    if (std::isfinite(lo) && std::isfinite(hi))
        return 0.5 * (lo + hi);
    if (std::isfinite(lo))
        return lo + 1.0;
    if (std::isfinite(hi))
        return hi - 1.0;
    return 0.0;
}

// minimiser of |M(c)| x^{-c} over the strip, ignoring the polynomial factor
inline double saddle_abscissa(const MellinSymbol& sym, double x)
{
    constexpr double cap = 150.0;
    const double lx = std::log(x);
    const Strip& st = sym.strip;
    double delta = 0.2;
    if (std::isfinite(st.width()))
        delta = std::min(delta, st.width() / 4.0);
    auto phi = [&](double c) {
        const double v = log_eval_core(sym, cplx(c, 0.0)).real() - c * lx;
        return std::isnan(v) ? kInf : v;
    };
    double a = std::isfinite(st.lo) ? st.lo + delta : std::min(-cap, st.hi - 2 * cap);
    double b = std::isfinite(st.hi) ? st.hi - delta : std::max(cap, st.lo + 2 * cap);
    // widen an open side while phi is still falling towards it
    for (int i = 0; i < 40 && !std::isfinite(st.hi) && phi(b) < phi(b - 1.0); ++i)
        b = a + 2.0 * (b - a);
    for (int i = 0; i < 40 && !std::isfinite(st.lo) && phi(a) < phi(a + 1.0); ++i)
        a = b - 2.0 * (b - a);
    if (a >= b)
        return 0.5 * (st.lo + st.hi);
    constexpr int N = 96;
    int best = 0;
    double fbest = kInf;
    for (int i = 0; i <= N; ++i) {
        const double v = phi(a + (b - a) * i / N);
        if (v < fbest)
            fbest = v, best = i;
    }
    double lo = a + (b - a) * std::max(0, best - 1) / N;
    double hi = a + (b - a) * std::min(N, best + 1) / N;
    const double g = 0.5 * (std::sqrt(5.0) - 1.0);
    double x1 = hi - g * (hi - lo), x2 = lo + g * (hi - lo);
    double f1 = phi(x1), f2 = phi(x2);
    for (int it = 0; it < 60 && hi - lo > 1e-6; ++it) {
        if (f1 < f2) {
            hi = x2, x2 = x1, f2 = f1;
            x1 = hi - g * (hi - lo), f1 = phi(x1);
        } else {
            lo = x1, x1 = x2, f1 = f2;
            x2 = lo + g * (hi - lo), f2 = phi(x2);
        }
    }
    return 0.5 * (lo + hi);
}

inline double envelope_cutoff(const DecayInfo& d, double tol)
{
    const double L = std::log(1.0 / tol);
    switch (d.cls) {
    case DecayClass::Gaussian: return std::sqrt(L / d.rate);
    case DecayClass::Exponential: {
        double T = L / d.rate;
        for (int i = 0; i < 50; ++i)
            T = (L + std::max(0.0, d.power) * std::log(std::max(T, 1.0))) / d.rate;
        return std::max(T, 1.0);
    }
    case DecayClass::Polynomial: return std::pow(tol * std::abs(d.power + 1.0), 1.0 / (d.power + 1.0));
    default: return kInf;
    }
}

} // namespace detail

inline InverseResult inverse_mellin_ex(const MellinSymbol& sym, double x, const InverseOptions& opt = {})
{
    if (!(x > 0.0))
        throw Error(ErrorKind::ParameterOutOfRange, "inverse Mellin needs x > 0");
    double c;
    if (opt.abscissa) {
        c = *opt.abscissa;
        detail::check_strip(sym, c);
    } else if (opt.rule == AbscissaRule::Midpoint) {
        c = detail::midpoint_abscissa(sym, opt.dimension);
    } else {
        c = detail::saddle_abscissa(sym, x);
    }
    const DecayInfo d = decay_info(sym, c);
    if (d.cls == DecayClass::Insufficient)
        throw Error(ErrorKind::SlowDecay, "symbol does not decay fast enough along vertical lines");

    const double lx = std::log(x);
    auto g = [&](double t) -> double {
        const cplx s(c, t);
        const cplx l = log_eval_symbol(sym, s) - s * lx;
        if (l.real() == -kInf)
            return 0.0;
        return std::exp(l).real();
    };

    // analytic envelope bound; only used as a budget check
    constexpr double Tmax = 5e4;
    if (d.cls == DecayClass::Polynomial && detail::envelope_cutoff(d, opt.tol) > Tmax)
        throw Error(ErrorKind::NonConvergent, "truncation length beyond budget for polynomial decay");

    // the whole integral lies below the double range
    double pbound = 0.0;
    for (std::size_t i = 0; i < sym.poly.size(); ++i)
        pbound += std::abs(sym.poly[i]) * std::pow(std::abs(c) + 1.0, double(i));
    const double peak = detail::log_eval_core(sym, cplx(c, 0.0)).real() + std::log(pbound) - c * lx;
    if (peak < -780.0) {
        InverseResult out;
        out.abscissa = c;
        return out;
    }

    double phase_scale = std::abs(lx) + 0.5;
    for (const auto& gf : sym.gammas)
        phase_scale += std::abs(gf.p * gf.beta) * std::log(2.0 + std::abs(gf.beta * c));

    std::vector<double> br{0.0}, wholes;
    double t = 0.0, running = 0.0, l1 = 0.0;
    double prev_log = (log_eval_symbol(sym, cplx(c, 0.0)) - c * lx).real();
    const double floor_rel = 64 * std::numeric_limits<double>::epsilon();
    while (true) {
        double rate = phase_scale;
        for (const auto& gf : sym.gammas)
            rate += std::abs(gf.p * gf.beta) * std::log1p(std::abs(gf.beta) * t);
        rate += 2.0 * sym.gauss.A * t;
        const double h = std::clamp(4.0 / rate, 0.05, 4.0);
        auto p = quad::gauss_legendre(g, t, t + h);
        t += h;
        br.push_back(t);
        wholes.push_back(p.value);
        running += p.value;
        l1 += p.l1;
        const double cur_log = (log_eval_symbol(sym, cplx(c, t)) - cplx(c, t) * lx).real();
        // tail of a log-concave modulus beyond t is at most |g(t)| / (local decay rate)
        const double local = (prev_log - cur_log) / h;
        prev_log = cur_log;
        if (cur_log == -kInf)
            break;
        if (local > 0.0) {
            const double tail = std::exp(cur_log) / local;
            const double scale = std::max(std::abs(running), floor_rel * l1);
            if (tail <= 0.01 * opt.tol * scale && t >= 1.0)
                break;
        }
        if (t > Tmax)
            throw Error(ErrorKind::NonConvergent, "contour integrand does not decay within budget");
    }

    quad::Options qo;
    qo.rel_tol = opt.tol;
    qo.max_segments = 40000;
    auto res = quad::integrate(g, br, qo, &wholes);
    if (!res.converged)
        throw Error(ErrorKind::NonConvergent, "panel refinement stalled in inverse Mellin");
    InverseResult out;
    out.value = res.value / std::numbers::pi;
    out.error = res.error / std::numbers::pi;
    out.abscissa = c;
    out.cutoff = t;
    return out;
}

inline double inverse_mellin(const MellinSymbol& sym, double x, double tol = 1e-10)
{
    InverseOptions o;
    o.tol = tol;
    return inverse_mellin_ex(sym, x, o).value;
}

struct Window {
    double lo;
    double hi;
};

// integral of f(x) x^{s-1} over the window, in log coordinates
template <class F>
cplx mellin_numeric(F&& f, cplx s, Window w, double tol = 1e-10)
{
    if (!(w.lo > 0.0) || !(w.hi > w.lo))
        throw Error(ErrorKind::ParameterOutOfRange, "invalid Mellin window");
    const double a = std::log(w.lo), b = std::log(w.hi);
    std::vector<double> br{a, b};
    for (double u = std::ceil(a); u < b; u += 1.0)
        br.push_back(u);
    auto g = [&](double u) -> cplx {
        const double v = f(std::exp(u));
        if (v == 0.0)
            return 0.0;
        return v * std::exp(s * u);
    };
    quad::Options qo;
    qo.rel_tol = tol;
    auto res = quad::integrate(g, br, qo);
    if (!res.converged)
        throw Error(ErrorKind::NonConvergent, "Mellin quadrature did not converge");
    return res.value;
}

// d/ds log M and d^2/ds^2 log M at real s
inline std::pair<double, double> log_derivatives(const MellinSymbol& sym, double s)
{
    detail::check_strip(sym, s);
    double d1 = std::log(sym.geo_base) + 2.0 * sym.gauss.A * s + sym.gauss.B;
    double d2 = 2.0 * sym.gauss.A;
    for (const auto& g : sym.gammas) {
        const double z = g.beta * s + g.gamma;
        d1 += g.p * g.beta * digamma(z);
        d2 += g.p * g.beta * g.beta * trigamma(z);
    }
    double p = 0, dp = 0, ddp = 0;
    for (auto it = sym.poly.rbegin(); it != sym.poly.rend(); ++it) {
        ddp = ddp * s + 2.0 * dp;
        dp = dp * s + p;
        p = p * s + *it;
    }
    if (sym.poly.size() > 1) {
        if (p == 0.0)
            throw Error(ErrorKind::StripViolation, "log-derivative at a zero of the polynomial factor");
        d1 += dp / p;
        d2 += (ddp * p - dp * dp) / (p * p);
    }
    return {d1, d2};
}

} // namespace matprod
