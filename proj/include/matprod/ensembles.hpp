#pragma once

#include <cmath>
#include <functional>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "elementary.hpp"
#include "errors.hpp"
#include "mellin.hpp"
#include "quadrature.hpp"

namespace matprod {

enum class Family { Laguerre, Jacobi, CauchyLorentz, MuttalibBorodin, LogNormal, Interpolating, Composite, Inverse };

struct FamilyTag {
    Family family;
    std::vector<std::pair<std::string, double>> params;
    std::vector<FamilyTag> parts;

    static FamilyTag laguerre(double nu) { return {Family::Laguerre, {{"nu", nu}}, {}}; }
    static FamilyTag jacobi(double nu, double mu) { return {Family::Jacobi, {{"nu", nu}, {"mu", mu}}, {}}; }
    static FamilyTag cauchy(double nu, double mu) { return {Family::CauchyLorentz, {{"nu", nu}, {"mu", mu}}, {}}; }
    static FamilyTag muttalib_borodin(double nu, double alpha, double theta)
    {
        return {Family::MuttalibBorodin, {{"nu", nu}, {"alpha", alpha}, {"theta", theta}}, {}};
    }
    static FamilyTag lognormal(double nu, double alpha)
    {
        return {Family::LogNormal, {{"nu", nu}, {"alpha", alpha}}, {}};
    }
    static FamilyTag interpolating(double p, double q) { return {Family::Interpolating, {{"p", p}, {"q", q}}, {}}; }

    double param(const std::string& key) const
    {
        for (const auto& [k, v] : params)
            if (k == key)
                return v;
        throw Error(ErrorKind::SemanticError, "tag has no parameter '" + key + "'");
    }

    std::string describe() const
    {
        static const char* names[] = {"laguerre", "jacobi", "cauchy", "mb", "lognormal", "interp", "", "inv"};
        std::ostringstream os;
        os.precision(12);
        if (family == Family::Composite) {
            for (std::size_t i = 0; i < parts.size(); ++i)
                os << (i ? " * " : "") << parts[i].describe();
            return os.str();
        }
        os << names[int(family)] << '(';
        if (family == Family::Inverse) {
            os << parts.at(0).describe();
        } else {
            for (std::size_t i = 0; i < params.size(); ++i)
                os << (i ? "," : "") << params[i].first << '=' << params[i].second;
        }
        os << ')';
        return os.str();
    }
};

using RealFn = std::function<double(double)>;
using MellinFn = std::function<cplx(cplx)>;

struct DerivativeType {
    MellinSymbol symbol;
    std::optional<Elementary> closed_form;
};

struct General {
    std::vector<RealFn> weights;
    std::vector<MellinFn> mellin;
    Strip strip; // common domain of the Mellin evaluators
};

struct Ensemble {
    int n = 1;
    std::variant<DerivativeType, General> kind;
    FamilyTag tag;
    Strip support{0.0, kInf};
    double tol = 1e-10;

    bool is_derivative() const { return std::holds_alternative<DerivativeType>(kind); }
    const DerivativeType& derivative() const
    {
        if (auto* d = std::get_if<DerivativeType>(&kind))
            return *d;
        throw Error(ErrorKind::ParameterOutOfRange, "ensemble is not of derivative type");
    }
    const General& general() const { return std::get<General>(kind); }
    const MellinSymbol& symbol() const { return derivative().symbol; }

    // Mellin transform of w_k
    cplx mellin_weight(int k, cplx s) const
    {
        if (auto* d = std::get_if<DerivativeType>(&kind))
            return std::pow(s, k) * eval_symbol(d->symbol, s);
        const auto& g = general();
        if (!g.strip.contains(s.real()))
            throw Error(ErrorKind::StripViolation, "Re(s) outside the Mellin domain of the weights");
        return g.mellin.at(k)(s);
    }

    // Mellin transform of omega (derivative type)
    double moment(double s) const { return eval_symbol(symbol(), s); }
};

namespace detail {

inline void require(bool ok, const std::string& what)
{
    if (!ok)
        throw Error(ErrorKind::ParameterOutOfRange, what);
}

inline void check_derivative_strip(const Ensemble& e)
{
    const Strip& st = e.symbol().strip;
    if (!(st.lo < 1.0 && st.hi > e.n))
        throw Error(ErrorKind::StripViolation, "symbol strip does not contain [1, n]");
}

} // namespace detail

inline Ensemble make_family(const FamilyTag& tag, int n)
{
    detail::require(n >= 1, "dimension must be positive");
    Ensemble e;
    e.n = n;
    e.tag = tag;
    DerivativeType d;
    MellinSymbol& s = d.symbol;
    switch (tag.family) {
    case Family::Laguerre: {
        const double nu = tag.param("nu");
        detail::require(nu > -1.0, "laguerre needs nu > -1");
        s = MellinSymbol::gamma_power(1.0, 1.0, nu);
        d.closed_form = Elementary::exp_power(nu, 1.0, 1.0);
        break;
    }
    case Family::Jacobi: {
        const double nu = tag.param("nu"), mu = tag.param("mu");
        detail::require(nu > -1.0, "jacobi needs nu > -1");
        detail::require(mu > n - 1.0, "jacobi needs mu > n-1");
        s = MellinSymbol::gamma_power(1.0, 1.0, nu);
        s.gammas.push_back({-1.0, 1.0, nu + mu});
        s.prefactor = std::tgamma(mu);
        d.closed_form = Elementary::one_minus(nu, mu - 1.0);
        e.support = {0.0, 1.0};
        break;
    }
    case Family::CauchyLorentz: {
        const double nu = tag.param("nu"), mu = tag.param("mu");
        detail::require(nu > -1.0, "cauchy needs nu > -1");
        detail::require(mu > n - 1.0, "cauchy needs mu > n-1");
        s = convolve_symbols(MellinSymbol::gamma_power(1.0, 1.0, nu), MellinSymbol::gamma_power(1.0, -1.0, mu + 1.0));
        s.prefactor = std::exp(-std::lgamma(mu + nu + 1.0));
        d.closed_form = Elementary::one_plus(nu, -(mu + nu + 1.0));
        break;
    }
    case Family::MuttalibBorodin: {
        const double nu = tag.param("nu"), alpha = tag.param("alpha"), theta = tag.param("theta");
        detail::require(nu > -1.0, "mb needs nu > -1");
        detail::require(alpha > 0.0 && theta > 0.0, "mb needs alpha > 0 and theta > 0");
        s = MellinSymbol::gamma_power(1.0, 1.0 / theta, nu / theta);
        s.geo_base = std::pow(alpha, -1.0 / theta);
        s.prefactor = std::pow(alpha, -nu / theta) / theta;
        d.closed_form = Elementary::exp_power(nu, alpha, theta);
        break;
    }
    case Family::LogNormal: {
        const double nu = tag.param("nu"), alpha = tag.param("alpha");
        detail::require(alpha > 0.0, "lognormal needs alpha > 0");
        s.prefactor = std::sqrt(std::numbers::pi / alpha);
        s.gauss = {1.0 / (4.0 * alpha), nu / (2.0 * alpha), nu * nu / (4.0 * alpha)};
        d.closed_form = Elementary::log_gauss(nu, alpha);
        break;
    }
    case Family::Interpolating: {
        const double p = tag.param("p"), q = tag.param("q");
        detail::require(p >= 0.0 && q >= 0.0 && p + q > 0.0, "interp needs p, q >= 0 and p + q > 0");
        s = MellinSymbol::unit();
        if (p > 0.0)
            s = convolve_symbols(s, MellinSymbol::gamma_power(p, 1.0, 0.0));
        if (q > 0.0)
            s = convolve_symbols(s, MellinSymbol::gamma_power(q, -1.0, n + 1.0));
        if (p == 1.0 && q == 0.0)
            d.closed_form = Elementary::exp_power(0.0, 1.0, 1.0);
        else if (p == 0.0 && q == 1.0)
            d.closed_form = Elementary::exp_power(0.0, 1.0, 1.0).inverse(n);
        else if (p == 1.0 && q == 1.0)
            d.closed_form = Elementary::one_plus(0.0, -(n + 1.0), std::tgamma(n + 1.0));
        break;
    }
    default: throw Error(ErrorKind::ParameterOutOfRange, "not a base family");
    }
    s.validate();
    e.kind = std::move(d);
    detail::check_derivative_strip(e);
    return e;
}

// Multiplicative convolution (f * g)(x) = int f(x/y) g(y) dy/y in log coordinates.
inline double mult_convolve(const RealFn& f, Strip fsup, const RealFn& g, Strip gsup, double x, double tol = 1e-9)
{
    const double lx = std::log(x);
    auto ln = [](double v) { return v <= 0.0 ? -kInf : std::log(v); };
    const double lo = std::max(ln(gsup.lo), lx - ln(fsup.hi));
    const double hi = std::min(ln(gsup.hi), lx - ln(fsup.lo));
    if (!(lo < hi))
        return 0.0;
    auto h = [&](double u) {
        const double a = std::exp(lx - u), b = std::exp(u);
        if (!(a > 0.0) || !std::isfinite(a) || !(b > 0.0) || !std::isfinite(b))
            return 0.0;
        const double gv = g(b);
        return gv == 0.0 ? 0.0 : f(a) * gv;
    };
    double center;
    if (std::isfinite(lo) && std::isfinite(hi))
        center = 0.5 * (lo + hi);
    else if (std::isfinite(lo))
        center = std::max(lo, 0.5 * lx);
    else if (std::isfinite(hi))
        center = std::min(hi, 0.5 * lx);
    else
        center = 0.5 * lx;
    std::vector<double> br{center};
    if (std::isfinite(lo))
        br.push_back(lo);
    if (std::isfinite(hi))
        br.push_back(hi);
    constexpr double step = 0.5, max_len = 400.0;
    for (double dir : {1.0, -1.0}) {
        const double edge = dir > 0 ? hi : lo;
        double u = center, running = 0.0;
        int calm = 0;
        while (std::abs(u - center) < max_len) {
            double next = u + dir * step;
            if ((dir > 0 && next >= edge) || (dir < 0 && next <= edge))
                break;
            const double m = quad::gauss_legendre(h, std::min(u, next), std::max(u, next)).l1;
            running += m;
            u = next;
            br.push_back(u);
            calm = (running > 0.0 && m <= 1e-3 * tol * running) ? calm + 1 : 0;
            if (calm >= 3)
                break;
        }
    }
    quad::Options qo;
    qo.rel_tol = tol;
    auto r = quad::integrate(h, br, qo);
    if (!r.converged)
        throw Error(ErrorKind::QuadratureFailure, "multiplicative convolution did not converge");
    return r.value;
}

// w_k = (-x d/dx)^k omega for derivative type, the k-th listed weight otherwise
inline double weight_k(const Ensemble& ens, int k, double x)
{
    if (k < 0)
        throw Error(ErrorKind::ParameterOutOfRange, "weight index must be nonnegative");
    if (!(x >= 0.0))
        throw Error(ErrorKind::ParameterOutOfRange, "weight argument must be nonnegative");
    if (x < ens.support.lo || x > ens.support.hi)
        return 0.0;
    if (const auto* g = std::get_if<General>(&ens.kind)) {
        if (k >= ens.n)
            throw Error(ErrorKind::ParameterOutOfRange, "general ensembles carry only n weights");
        return g->weights[k](x);
    }
    const auto& d = ens.derivative();
    if (d.closed_form) {
        Elementary w = *d.closed_form;
        for (int i = 0; i < k; ++i)
            w = w.derive();
        return w(x);
    }
    if (x == 0.0)
        throw Error(ErrorKind::ParameterOutOfRange, "contour weights need x > 0");
    return inverse_mellin(derivative_symbol(d.symbol, k), x, ens.tol);
}

inline Ensemble compose(const Ensemble& e1, const Ensemble& e2, double conv_tol = 1e-9)
{
    if (e1.n != e2.n)
        throw Error(ErrorKind::DimensionMismatch, "composed ensembles must share n");
    Ensemble r;
    r.n = e1.n;
    r.tol = std::max(e1.tol, e2.tol);
    r.support = {e1.support.lo * e2.support.lo, e1.support.hi * e2.support.hi};
    r.tag.family = Family::Composite;
    for (const Ensemble* e : {&e1, &e2}) {
        if (e->tag.family == Family::Composite)
            r.tag.parts.insert(r.tag.parts.end(), e->tag.parts.begin(), e->tag.parts.end());
        else
            r.tag.parts.push_back(e->tag);
    }
    if (e1.is_derivative() && e2.is_derivative()) {
        DerivativeType d{convolve_symbols(e1.symbol(), e2.symbol()), std::nullopt};
        r.kind = std::move(d);
        return r;
    }
    if (!e1.is_derivative() && !e2.is_derivative())
        throw Error(ErrorKind::ParameterOutOfRange, "at least one composed ensemble must be of derivative type");
    const Ensemble& dt = e1.is_derivative() ? e1 : e2;
    const Ensemble& gen = e1.is_derivative() ? e2 : e1;
    const General& g = gen.general();
    General out;
    out.strip = g.strip.intersect(dt.symbol().strip);
    if (out.strip.empty())
        throw Error(ErrorKind::EmptyStrip, "Mellin domains of the factors are disjoint");
    auto omega = std::make_shared<Ensemble>(dt);
    const Strip dsup = dt.support, gsup = gen.support;
    for (int j = 0; j < r.n; ++j) {
        RealFn wj = g.weights[j];
        out.weights.push_back([omega, wj, dsup, gsup, conv_tol](double x) {
            return mult_convolve([omega](double y) { return weight_k(*omega, 0, y); }, dsup, wj, gsup, x, conv_tol);
        });
        MellinFn mj = g.mellin[j];
        out.mellin.push_back([omega, mj](cplx s) { return eval_symbol(omega->symbol(), s) * mj(s); });
    }
    r.kind = std::move(out);
    return r;
}

// derivative-type ensemble viewed as a general one
inline Ensemble as_general(const Ensemble& ens)
{
    auto base = std::make_shared<Ensemble>(ens);
    General g;
    g.strip = ens.symbol().strip;
    for (int j = 0; j < ens.n; ++j) {
        g.weights.push_back([base, j](double x) { return weight_k(*base, j, x); });
        g.mellin.push_back([base, j](cplx s) { return base->mellin_weight(j, s); });
    }
    Ensemble r = ens;
    r.kind = std::move(g);
    return r;
}

// general ensemble from pointwise weights; Mellin evaluators default to quadrature
inline Ensemble make_general(std::vector<RealFn> weights, Strip strip, Strip support = {0.0, kInf},
                             std::vector<MellinFn> mellin = {}, double tol = 1e-8)
{
    Ensemble r;
    r.n = int(weights.size());
    detail::require(r.n >= 1, "general ensemble needs at least one weight");
    if (mellin.empty()) {
        const Window win{std::max(support.lo, 1e-12), std::min(support.hi, 1e12)};
        for (const auto& w : weights)
            mellin.push_back([w, win, tol](cplx s) { return mellin_numeric(w, s, win, tol); });
    }
    if (mellin.size() != weights.size())
        throw Error(ErrorKind::DimensionMismatch, "one Mellin evaluator per weight is required");
    r.kind = General{std::move(weights), std::move(mellin), strip};
    r.tag.family = Family::Composite;
    r.support = support;
    return r;
}

inline Ensemble invert(const Ensemble& ens)
{
    const auto& d = ens.derivative();
    Ensemble r = ens;
    DerivativeType nd{reflect_symbol(d.symbol, ens.n), std::nullopt};
    if (d.closed_form)
        nd.closed_form = d.closed_form->inverse(ens.n);
    r.kind = std::move(nd);
    const double lo = ens.support.hi == kInf ? 0.0 : 1.0 / ens.support.hi;
    const double hi = ens.support.lo == 0.0 ? kInf : 1.0 / ens.support.lo;
    r.support = {lo, hi};
    if (ens.tag.family == Family::Inverse)
        r.tag = ens.tag.parts.at(0);
    else
        r.tag = {Family::Inverse, {}, {ens.tag}};
    return r;
}

// g_q(y) = h_q(e^{-y}) e^{-y} with h_q the inverse Mellin transform of Gamma(s)^q
inline double gumbel_density(double q, double y, double tol = 1e-10)
{
    if (!(q > 0.0))
        throw Error(ErrorKind::ParameterOutOfRange, "gumbel_density needs q > 0");
    return inverse_mellin(MellinSymbol::gamma_power(q, 1.0, 1.0), std::exp(-y), tol);
}

struct Diagnostics {
    bool strip_ok = false;
    DecayClass decay = DecayClass::Insufficient;
    std::vector<bool> contour_ok;   // s^k M(s) invertible along the contour, k = 0..
    std::vector<bool> integrable;   // w_k integrable on (0, inf)
    bool closed_form = false;
    bool pass = false;
    std::string advice;
};

inline Diagnostics validate(const Ensemble& ens, Strip need)
{
    Diagnostics out;
    if (!ens.is_derivative()) {
        const auto& g = ens.general();
        out.strip_ok = g.strip.lo < need.lo && g.strip.hi > need.hi;
        out.pass = out.strip_ok;
        if (!out.strip_ok)
            out.advice = "Mellin domain does not contain the required interval";
        return out;
    }
    const auto& d = ens.derivative();
    out.strip_ok = d.symbol.strip.lo < need.lo && d.symbol.strip.hi > need.hi;
    out.closed_form = d.closed_form.has_value();
    const double c = std::clamp(0.5 * (need.lo + need.hi), d.symbol.strip.lo + 1e-9, d.symbol.strip.hi - 1e-9);
    out.decay = decay_info(d.symbol, c).cls;
    const int kmax = std::max(ens.n - 1, int(std::ceil(need.hi)) - 1);
    bool all_contour = true;
    for (int k = 0; k <= kmax; ++k) {
        const bool ok = decay_info(derivative_symbol(d.symbol, k), c).cls != DecayClass::Insufficient;
        out.contour_ok.push_back(ok);
        all_contour = all_contour && ok;
    }
    for (int k = 0; k < ens.n; ++k) {
        bool ok = true;
        try {
            auto f = [&](double x) { return std::abs(weight_k(ens, k, x)); };
            const double hi = std::min(ens.support.hi, 1e8);
            const double v = mellin_numeric(f, 1.0, {std::max(ens.support.lo, 1e-10), hi}, 1e-6).real();
            ok = std::isfinite(v);
        } catch (const Error&) {
            ok = false;
        }
        out.integrable.push_back(ok);
    }
    out.pass = out.strip_ok && all_contour;
    if (!out.strip_ok)
        out.advice = "symbol strip does not contain the required interval";
    else if (!all_contour)
        out.advice = out.closed_form ? "contour decay too slow for high derivatives; use the closed form"
                                     : "contour decay too slow for high derivatives";
    return out;
}

} // namespace matprod
