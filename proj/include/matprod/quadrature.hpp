#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <limits>
#include <queue>
#include <type_traits>
#include <utility>
#include <vector>

#include <boost/math/quadrature/gauss.hpp>

#include "errors.hpp"

namespace matprod::quad {

constexpr int kOrder = 20;

struct Options {
    double rel_tol = 1e-10;
    double abs_tol = 0.0;
    std::size_t max_segments = 20000;
};

template <class R>
struct Result {
    R value{};
    double error = 0.0;
    double l1 = 0.0;
    bool converged = false;
    std::size_t segments = 0;
};

template <class R>
struct Panel {
    R value{};
    double l1 = 0.0;
};

// Fixed-order Gauss-Legendre rule on [a,b], also returning the integral of |f|.
template <class F>
auto gauss_legendre(F& f, double a, double b)
{
    using R = std::decay_t<decltype(f(a))>;
    using rule = boost::math::quadrature::gauss<double, kOrder>;
    const auto& x = rule::abscissa();
    const auto& w = rule::weights();
    const double c = 0.5 * (a + b);
    const double h = 0.5 * (b - a);
    Panel<R> p;
    std::size_t i0 = 0;
    if constexpr (kOrder % 2 == 1) {
        R v = f(c);
        p.value = w[0] * v;
        p.l1 = w[0] * std::abs(v);
        i0 = 1;
    }
    for (std::size_t i = i0; i < x.size(); ++i) {
        R v1 = f(c - h * x[i]);
        R v2 = f(c + h * x[i]);
        p.value += w[i] * (v1 + v2);
        p.l1 += w[i] * (std::abs(v1) + std::abs(v2));
    }
    p.value *= h;
    p.l1 *= std::abs(h);
    if (!std::isfinite(std::abs(p.value)))
        throw Error(ErrorKind::QuadratureFailure, "non-finite integrand");
    return p;
}

// Globally adaptive Gauss-Legendre quadrature: each segment is compared against the
// sum over its two halves and the segment with the largest discrepancy is bisected.
// `wholes`, when given, holds the single-panel rule value for each break interval.
template <class F, class W = std::vector<double>>
auto integrate(F&& f, std::vector<double> breaks, const Options& opt = {}, const W* wholes = nullptr)
{
    using R = std::decay_t<decltype(f(0.0))>;
    struct Seg {
        double a, b;
        R whole, left, right;
        double l1, err;
    };
    if (!wholes) {
        std::sort(breaks.begin(), breaks.end());
        breaks.erase(std::unique(breaks.begin(), breaks.end()), breaks.end());
    }

    Result<R> res;
    if (breaks.size() < 2)
        return res;

    std::vector<Seg> segs;
    auto make = [&](double a, double b, R whole) {
        const double m = 0.5 * (a + b);
        auto l = gauss_legendre(f, a, m);
        auto r = gauss_legendre(f, m, b);
        Seg s{a, b, whole, l.value, r.value, l.l1 + r.l1, std::abs(l.value + r.value - whole)};
        segs.push_back(s);
    };
    for (std::size_t i = 0; i + 1 < breaks.size(); ++i) {
        if (wholes) {
            make(breaks[i], breaks[i + 1], R((*wholes)[i]));
        } else {
            auto p = gauss_legendre(f, breaks[i], breaks[i + 1]);
            make(breaks[i], breaks[i + 1], p.value);
        }
    }

    using Item = std::pair<double, std::size_t>;
    std::priority_queue<Item> heap;
    R total{};
    double err = 0.0, l1 = 0.0;
    for (std::size_t i = 0; i < segs.size(); ++i) {
        heap.push({segs[i].err, i});
        total += segs[i].left + segs[i].right;
        err += segs[i].err;
        l1 += segs[i].l1;
    }
    constexpr double eps = std::numeric_limits<double>::epsilon();
    auto target = [&] { return std::max({opt.rel_tol * std::abs(total), opt.abs_tol, 64 * eps * l1}); };

    std::size_t steps = 0;
    while (err > target() && segs.size() < opt.max_segments && !heap.empty()) {
        auto [e, idx] = heap.top();
        heap.pop();
        Seg s = segs[idx];
        if (s.b - s.a <= 1e-12 * std::max(1.0, std::abs(s.a))) {
            // cannot refine further; leave as is
            segs[idx].err = 0.0;
            err -= s.err;
            continue;
        }
        total -= s.left + s.right;
        err -= s.err;
        l1 -= s.l1;
        const double m = 0.5 * (s.a + s.b);
        segs[idx].err = -1.0; // retired
        const std::size_t i1 = segs.size();
        make(s.a, m, s.left);
        make(m, s.b, s.right);
        for (std::size_t i : {i1, i1 + 1}) {
            heap.push({segs[i].err, i});
            total += segs[i].left + segs[i].right;
            err += segs[i].err;
            l1 += segs[i].l1;
        }
        // periodic resummation against drift
        if (++steps % 256 == 0) {
            total = R{};
            err = 0.0;
            l1 = 0.0;
            for (const auto& t : segs)
                if (t.err >= 0.0) {
                    total += t.left + t.right;
                    err += t.err;
                    l1 += t.l1;
                }
        }
    }
    total = R{};
    err = 0.0;
    l1 = 0.0;
    std::size_t live = 0;
    for (const auto& t : segs)
        if (t.err >= 0.0) {
            total += t.left + t.right;
            err += t.err;
            l1 += t.l1;
            ++live;
        }
    res.value = total;
    res.error = err;
    res.l1 = l1;
    res.segments = live;
    res.converged = err <= target() * 1.0000001;
    return res;
}

// Breakpoints from `start` stepping by `h` (sign gives direction) until the
// integrand mass per panel is negligible for `quiet` panels in a row.
template <class F>
std::vector<double> march(F& f, double start, double h, double rel_tol, double max_len, int quiet = 3)
{
    std::vector<double> pts{start};
    double running = 0.0;
    int calm = 0;
    double x = start;
    while (std::abs(x - start) < max_len) {
        auto p = gauss_legendre(f, x, x + h);
        x += h;
        pts.push_back(x);
        running += p.l1;
        if (p.l1 <= 1e-3 * rel_tol * running || (running == 0.0 && std::abs(x - start) > 4 * std::abs(h)))
            ++calm;
        else
            calm = 0;
        if (calm >= quiet)
            return pts;
    }
    throw Error(ErrorKind::NonConvergent, "integrand does not decay within the search window");
}

// Integral over the whole real line of an integrand with (at least) exponential tails.
template <class F>
auto integrate_line(F&& f, double center, double h, const Options& opt = {},
                    const std::vector<double>& extra = {}, double max_len = 400.0)
{
    auto right = march(f, center, h, opt.rel_tol, max_len);
    auto left = march(f, center, -h, opt.rel_tol, max_len);
    std::vector<double> br = right;
    br.insert(br.end(), left.begin(), left.end());
    const double lo = left.back(), hi = right.back();
    for (double e : extra)
        if (e > lo && e < hi)
            br.push_back(e);
    return integrate(f, std::move(br), opt);
}

} // namespace matprod::quad
