#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

#include "errors.hpp"

namespace matprod {

// Closed-form weights as sums of c * v^a * (1 +- v)^b * (ln v)^m * E(v), where the
// envelope E is e^{-alpha v^theta} (ExpPower), e^{-alpha (ln v)^2} (LogGauss) or 1.
// When `inverted` is set the variable is v = 1/x, otherwise v = x.
enum class ElemKind { ExpPower, OneMinus, OnePlus, LogGauss };

struct Term {
    double c;
    double a;
    double b = 0.0;
    int m = 0;
};

struct Elementary {
    ElemKind kind = ElemKind::ExpPower;
    double alpha = 1.0;
    double theta = 1.0;
    std::vector<Term> terms;
    bool inverted = false;

    static Elementary exp_power(double nu, double alpha, double theta)
    {
        return {ElemKind::ExpPower, alpha, theta, {{1.0, nu}}};
    }
    static Elementary one_minus(double nu, double b) { return {ElemKind::OneMinus, 0.0, 1.0, {{1.0, nu, b}}}; }
    static Elementary one_plus(double nu, double b, double c = 1.0)
    {
        return {ElemKind::OnePlus, 0.0, 1.0, {{c, nu, b}}};
    }
    static Elementary log_gauss(double nu, double alpha) { return {ElemKind::LogGauss, alpha, 1.0, {{1.0, nu}}}; }

    double sigma() const
    {
        switch (kind) {
        case ElemKind::OneMinus: return -1.0;
        case ElemKind::OnePlus: return 1.0;
        default: return 0.0;
        }
    }

    Elementary& simplify()
    {
        std::vector<Term> out;
        for (const auto& t : terms) {
            if (t.c == 0.0)
                continue;
            auto it = std::find_if(out.begin(), out.end(), [&](const Term& u) {
                return u.m == t.m && std::abs(u.a - t.a) <= 1e-12 * (1.0 + std::abs(t.a)) &&
                       std::abs(u.b - t.b) <= 1e-12 * (1.0 + std::abs(t.b));
            });
            if (it == out.end())
                out.push_back(t);
            else
                it->c += t.c;
        }
        std::erase_if(out, [](const Term& t) { return t.c == 0.0; });
        terms = std::move(out);
        return *this;
    }

    // -v d/dv in the native variable
    Elementary derive_native() const
    {
        Elementary r = *this;
        r.terms.clear();
        const double sg = sigma();
        for (const auto& t : terms) {
            r.terms.push_back({-t.a * t.c, t.a, t.b, t.m});
            if (sg != 0.0 && t.b != 0.0)
                r.terms.push_back({-sg * t.b * t.c, t.a + 1.0, t.b - 1.0, t.m});
            if (t.m > 0)
                r.terms.push_back({-double(t.m) * t.c, t.a, t.b, t.m - 1});
            if (kind == ElemKind::ExpPower)
                r.terms.push_back({alpha * theta * t.c, t.a + theta, t.b, t.m});
            if (kind == ElemKind::LogGauss)
                r.terms.push_back({2.0 * alpha * t.c, t.a, t.b, t.m + 1});
        }
        return r.simplify();
    }

    // D = -x d/dx; for v = 1/x it equals +v d/dv
    Elementary derive() const
    {
        Elementary r = derive_native();
        if (inverted)
            for (auto& t : r.terms)
                t.c = -t.c;
        return r;
    }

    Elementary scaled(double s) const
    {
        Elementary r = *this;
        for (auto& t : r.terms)
            t.c *= s;
        return r.simplify();
    }

    Elementary plus(const Elementary& o) const
    {
        Elementary r = *this;
        r.terms.insert(r.terms.end(), o.terms.begin(), o.terms.end());
        return r.simplify();
    }

    // sum_i coeffs[i] D^i applied to this function
    Elementary apply_poly(const std::vector<double>& coeffs) const
    {
        Elementary acc = *this;
        acc.terms.clear();
        Elementary pw = *this;
        for (std::size_t i = 0; i < coeffs.size(); ++i) {
            if (coeffs[i] != 0.0)
                acc = acc.plus(pw.scaled(coeffs[i]));
            if (i + 1 < coeffs.size())
                pw = pw.derive();
        }
        return acc;
    }

    // f(1/x) x^{-n-1}
    Elementary inverse(int n) const
    {
        Elementary r = *this;
        r.inverted = !inverted;
        const double shift = r.inverted ? n + 1.0 : -(n + 1.0);
        for (auto& t : r.terms)
            t.a += shift;
        return r;
    }

    double operator()(double x) const
    {
        if (!(x >= 0.0))
            throw Error(ErrorKind::ParameterOutOfRange, "weight argument must be nonnegative");
        const double v = inverted ? (x == 0.0 ? std::numeric_limits<double>::infinity() : 1.0 / x) : x;
        if (kind == ElemKind::OneMinus && v > 1.0)
            return 0.0;
        if (v == 0.0 || std::isinf(v))
            return edge_value(v);
        const double lv = std::log(v);
        double env = 0.0;
        if (kind == ElemKind::ExpPower)
            env = -alpha * std::pow(v, theta);
        else if (kind == ElemKind::LogGauss)
            env = -alpha * lv * lv;
        const double sg = sigma();
        double sum = 0.0;
        for (const auto& t : terms) {
            double l = env + t.a * lv;
            if (t.b != 0.0)
                l += t.b * std::log1p(sg * v);
            double val = t.c * std::exp(l);
            if (t.m > 0)
                val *= std::pow(lv, t.m);
            sum += val;
        }
        return sum;
    }

private:
    double edge_value(double v) const
    {
        if (kind == ElemKind::LogGauss || (kind == ElemKind::ExpPower && std::isinf(v)))
            return 0.0;
        const double inf = std::numeric_limits<double>::infinity();
        double sum = 0.0;
        for (const auto& t : terms) {
            // leading exponent of v at the edge
            const double e = std::isinf(v) ? t.a + t.b : t.a;
            if (t.m > 0)
                return std::isinf(v) || e < 0 ? std::copysign(inf, t.c) : 0.0;
            if (std::isinf(v) ? e > 0 : e < 0)
                sum += std::copysign(inf, t.c);
            else if (e == 0)
                sum += t.c;
        }
        return sum;
    }
};

} // namespace matprod
