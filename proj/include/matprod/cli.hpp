#pragma once

#include <cstdint>
#include <fstream>
#include <iostream>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "densities.hpp"
#include "errors.hpp"
#include "expr.hpp"
#include "kernels.hpp"
#include "lyapunov.hpp"
#include "sampling.hpp"
#include "spherical.hpp"

namespace matprod::cli {

using nlohmann::json;

struct CommandConfig {
    std::string subcommand;
    std::string expr;
    int n = 0;
    std::string points;
    std::string s;
    std::string factors;
    std::string input;
    std::string output;
    double lo = 0.1, hi = 5.0;
    int count = 20;
    int M = 1;
    std::size_t runs = 1000;
    std::optional<std::uint64_t> seed;
    double p = 0.0, q = 0.0;
    double tol = 1e-8;
    int workers = 0;
};

namespace detail {

[[noreturn]] inline void config_error(const std::string& m) { throw Error(ErrorKind::SemanticError, m); }

inline std::vector<std::string> split(const std::string& s, char sep)
{
    std::vector<std::string> out;
    std::string cur;
    std::istringstream is(s);
    while (std::getline(is, cur, sep))
        out.push_back(cur);
    return out;
}

inline double to_double(const std::string& s)
{
    std::size_t used = 0;
    double v = 0.0;
    try {
        v = std::stod(s, &used);
    } catch (const std::exception&) {
        config_error("not a number: '" + s + "'");
    }
    while (used < s.size() && std::isspace(static_cast<unsigned char>(s[used])))
        ++used;
    if (used != s.size())
        config_error("not a number: '" + s + "'");
    return v;
}

// "re:im" or "re"
inline cplx to_complex(const std::string& s)
{
    const auto parts = split(s, ':');
    if (parts.size() == 1)
        return to_double(parts[0]);
    if (parts.size() == 2)
        return {to_double(parts[0]), to_double(parts[1])};
    config_error("bad complex number: '" + s + "'");
}

// points separated by ';', coordinates by ','
template <class T, class F>
std::vector<std::vector<T>> parse_points(const std::string& s, int n, F conv)
{
    std::vector<std::vector<T>> pts;
    for (const auto& p : split(s, ';')) {
        std::vector<T> v;
        for (const auto& c : split(p, ','))
            v.push_back(conv(c));
        if (int(v.size()) != n)
            config_error("point '" + p + "' does not have n = " + std::to_string(n) + " coordinates");
        pts.push_back(std::move(v));
    }
    if (pts.empty())
        config_error("no points given");
    return pts;
}

inline Ensemble ensemble(const CommandConfig& c)
{
    if (c.expr.empty())
        config_error("--expr is required");
    Ensemble e = parse_ensemble_expr(c.expr, c.n);
    e.tol = c.tol;
    return e;
}

inline std::uint64_t seed(const CommandConfig& c)
{
    if (!c.seed)
        config_error("--seed is required for sampling subcommands");
    return *c.seed;
}

// factor list for sampling: ginibre | inv-ginibre | haar | truncated(N=k) | diag(<expr>), separated by ';'
inline std::vector<FactorSpec> factor_list(const std::string& text, int n)
{
    std::vector<FactorSpec> out;
    for (auto tok : split(text, ';')) {
        tok.erase(0, tok.find_first_not_of(' '));
        tok.erase(tok.find_last_not_of(' ') + 1);
        if (tok == "ginibre")
            out.push_back(FactorSpec::ginibre(n));
        else if (tok == "inv-ginibre")
            out.push_back(FactorSpec::inverse_ginibre(n));
        else if (tok == "haar")
            out.push_back(FactorSpec::haar(n));
        else if (tok.rfind("truncated(N=", 0) == 0 && tok.back() == ')')
            out.push_back(FactorSpec::truncated_unitary(n, int(to_double(tok.substr(12, tok.size() - 13)))));
        else if (tok.rfind("diag(", 0) == 0 && tok.back() == ')')
            out.push_back(FactorSpec::diagonal(parse_ensemble_expr(tok.substr(5, tok.size() - 6), n)));
        else
            config_error("unknown factor '" + tok + "'");
        out.back().validate();
    }
    if (out.empty())
        config_error("empty factor list");
    return out;
}

// --expr ginibre-chain, or an ensemble expression sampled through diagonal factors
inline std::pair<FactorSpec, Ensemble> chain_factor(const CommandConfig& c)
{
    if (c.expr == "ginibre-chain")
        return {FactorSpec::ginibre(c.n), make_family(FamilyTag::laguerre(0), c.n)};
    Ensemble e = ensemble(c);
    return {FactorSpec::diagonal(e), e};
}

inline std::vector<FactorSpec> sample_factors(const CommandConfig& c)
{
    if (!c.factors.empty())
        return factor_list(c.factors, c.n);
    if (c.expr.empty())
        config_error("sample needs --factors or --expr");
    return std::vector<FactorSpec>(std::size_t(std::max(1, c.M)), chain_factor(c).first);
}

inline json vec(const Eigen::VectorXd& v) { return std::vector<double>(v.data(), v.data() + v.size()); }

inline json mat(const Eigen::MatrixXd& m)
{
    json a = json::array();
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
        json r = json::array();
        for (Eigen::Index j = 0; j < m.cols(); ++j)
            r.push_back(m(i, j));
        a.push_back(r);
    }
    return a;
}

inline void csv_precision(std::ostream& os) { os.precision(12); }

// sq. singular values pooled from a sample CSV (columns sv_j and log_scale)
inline std::vector<double> read_sample_sv(const std::string& path, int n)
{
    std::ifstream f(path);
    if (!f)
        config_error("cannot open '" + path + "'");
    std::string line;
    if (!std::getline(f, line))
        config_error("empty sample file");
    const auto header = split(line, ',');
    std::vector<int> sv_col(n, -1);
    int ls_col = -1;
    for (int i = 0; i < int(header.size()); ++i) {
        for (int j = 0; j < n; ++j)
            if (header[i] == "sv_" + std::to_string(j + 1))
                sv_col[j] = i;
        if (header[i] == "log_scale")
            ls_col = i;
    }
    for (int c : sv_col)
        if (c < 0)
            config_error("sample file lacks sv columns for n = " + std::to_string(n));
    std::vector<double> out;
    while (std::getline(f, line)) {
        if (line.empty())
            continue;
        const auto cells = split(line, ',');
        const double ls = ls_col >= 0 ? to_double(cells.at(ls_col)) : 0.0;
        for (int c : sv_col)
            out.push_back(to_double(cells.at(c)) * std::exp(2.0 * ls));
    }
    std::sort(out.begin(), out.end());
    return out;
}

} // namespace detail

inline double compare_sv(const std::vector<double>& sorted_sv, const Ensemble& ens)
{
    const TabulatedCdf cdf = marginal_sv_cdf(ens);
    return ks_statistic(sorted_sv, [&](double x) { return cdf(x); });
}

inline void execute(const CommandConfig& c, std::ostream& out)
{
    using namespace detail;
    if (c.n < 1)
        config_error("--n must be at least 1");
    const std::string& sc = c.subcommand;
    if (sc == "density-sv") {
        const Ensemble e = ensemble(c);
        const auto pts = parse_points<double>(c.points, c.n, to_double);
        csv_precision(out);
        for (int j = 1; j <= c.n; ++j)
            out << "a_" << j << ',';
        out << "value\n";
        for (const auto& p : pts) {
            for (double a : p)
                out << a << ',';
            out << jpdf_sv(e, p).value << '\n';
        }
    } else if (sc == "density-ev") {
        const Ensemble e = ensemble(c);
        const auto pts = parse_points<cplx>(c.points, c.n, to_complex);
        csv_precision(out);
        for (int j = 1; j <= c.n; ++j)
            out << "re_" << j << ",im_" << j << ',';
        out << "value\n";
        for (const auto& p : pts) {
            for (cplx z : p)
                out << z.real() << ',' << z.imag() << ',';
            out << jpdf_ev(e, p).value << '\n';
        }
    } else if (sc == "kernel-sv") {
        const Ensemble e = ensemble(c);
        const BiorthogonalSystem sys = monic_polys(e);
        csv_precision(out);
        out << "x,y,value\n";
        for (int i = 0; i < c.count; ++i)
            for (int j = 0; j < c.count; ++j) {
                const double x = c.lo + (c.hi - c.lo) * i / std::max(1, c.count - 1);
                const double y = c.lo + (c.hi - c.lo) * j / std::max(1, c.count - 1);
                out << x << ',' << y << ',' << kernel_sv(sys, x, y) << '\n';
            }
    } else if (sc == "kernel-ev") {
        const Ensemble e = ensemble(c);
        csv_precision(out);
        out << "re,im,value\n";
        for (int i = 0; i < c.count; ++i)
            for (int j = 0; j < c.count; ++j) {
                const cplx z(c.lo + (c.hi - c.lo) * i / std::max(1, c.count - 1),
                             c.lo + (c.hi - c.lo) * j / std::max(1, c.count - 1));
                out << z.real() << ',' << z.imag() << ',' << kernel_ev(e, z, z).real() << '\n';
            }
    } else if (sc == "interp-scan") {
        ScanConfig cfg;
        cfg.workers = c.workers;
        const ScanResult r = positivity_scan(c.n, c.p, c.q, cfg);
        json j;
        j["verdict"] = to_string(r.verdict);
        j["witness"] = r.witness ? json(*r.witness) : json(nullptr);
        j["witness_value"] = r.witness ? json(r.witness_value) : json(nullptr);
        j["witness_margin"] = r.witness ? json(r.witness_margin) : json(nullptr);
        j["points"] = r.points;
        j["in_region"] = region_check(c.n, c.p, c.q);
        out << j.dump(2) << '\n';
    } else if (sc == "sample") {
        const auto specs = sample_factors(c);
        const auto s = sample_products(specs, std::size_t(std::max(1, c.count)), seed(c), c.workers);
        write_samples_csv(out, s, c.n);
    } else if (sc == "compare-sv") {
        if (c.input.empty())
            config_error("--input is required");
        const auto sv = read_sample_sv(c.input, c.n);
        json j;
        j["ks"] = compare_sv(sv, ensemble(c));
        j["samples"] = sv.size();
        out << j.dump(2) << '\n';
    } else if (sc == "lyapunov") {
        const std::uint64_t sd = seed(c);
        const auto [spec, ens] = chain_factor(c);
        const CltParameters sym = clt_params_symbolic(ens);
        const ExponentStats st = exponent_mc(spec, c.M, c.runs, sd, sym, c.workers);
        json j;
        j["m_symbolic"] = vec(sym.m);
        j["sigma_symbolic"] = mat(sym.sigma);
        j["m_empirical"] = vec(st.lyapunov.m);
        j["sigma_empirical"] = mat(st.lyapunov.sigma * double(c.M));
        j["m_stability"] = vec(st.stability.m);
        j["ks_normal"] = st.ks_lyapunov;
        j["ks_normal_stability"] = st.ks_stability;
        j["runs"] = c.runs;
        j["M"] = c.M;
        j["seed"] = sd;
        out << j.dump(2) << '\n';
    } else if (sc == "spherical-check") {
        const Ensemble e = ensemble(c);
        std::vector<cplx> s;
        for (const auto& t : split(c.s, ','))
            s.push_back(to_complex(t));
        if (int(s.size()) != c.n)
            config_error("--s needs n entries");
        const cplx a = spherical_transform(e, s);
        const cplx b = spherical_transform_numeric(e, s);
        json j;
        j["symbolic"] = {a.real(), a.imag()};
        j["numeric"] = {b.real(), b.imag()};
        j["rel_err"] = std::abs(a - b) / std::abs(a);
        out << j.dump(2) << '\n';
    } else {
        config_error("unknown subcommand '" + sc + "'");
    }
}

// Full command line handling; returns the process exit code.
inline int run(int argc, const char* const* argv, std::ostream& out = std::cout, std::ostream& err = std::cerr)
{
    CLI::App app{"Spectral statistics of products of polynomial random matrix ensembles"};
    app.require_subcommand(1);
    CommandConfig c;
    std::uint64_t seed_value = 0;

    auto common = [&](CLI::App* s) {
        s->add_option("--n", c.n, "matrix dimension")->required();
        s->add_option("--tol", c.tol, "tolerance for symbolic paths")->capture_default_str();
        s->add_option("--workers", c.workers, "worker threads (default MATPROD_WORKERS or all cores)");
        s->add_option("-o,--output", c.output, "output file (default stdout)");
    };
    auto with_expr = [&](CLI::App* s, bool required) {
        auto* o = s->add_option("--expr", c.expr, "ensemble expression");
        if (required)
            o->required();
    };
    auto with_seed = [&](CLI::App* s) { s->add_option("--seed", seed_value, "master seed")->required(); };

    for (const char* name : {"density-sv", "density-ev"}) {
        auto* s = app.add_subcommand(name, "tabulate the joint density at points");
        common(s);
        with_expr(s, true);
        s->add_option("--points", c.points, "points 'x1,x2;y1,y2' (complex coordinates as re:im)")->required();
    }
    for (const char* name : {"kernel-sv", "kernel-ev"}) {
        auto* s = app.add_subcommand(name, "tabulate the kernel on a grid");
        common(s);
        with_expr(s, true);
        s->add_option("--lo", c.lo, "grid start")->capture_default_str();
        s->add_option("--hi", c.hi, "grid end")->capture_default_str();
        s->add_option("--count", c.count, "grid points per axis")->capture_default_str()->check(CLI::PositiveNumber);
    }
    {
        auto* s = app.add_subcommand("interp-scan", "positivity scan of the interpolating ensemble");
        common(s);
        s->add_option("--p", c.p, "Gamma(s) power")->required();
        s->add_option("--q", c.q, "Gamma(n+1-s) power")->required();
    }
    {
        auto* s = app.add_subcommand("sample", "draw product-chain spectra as CSV");
        common(s);
        with_expr(s, false);
        with_seed(s);
        s->add_option("--factors", c.factors, "factors 'ginibre;inv-ginibre;haar;truncated(N=6);diag(expr)'");
        s->add_option("--M", c.M, "chain length for --expr")->capture_default_str()->check(CLI::PositiveNumber);
        s->add_option("--count", c.count, "realizations")->capture_default_str()->check(CLI::PositiveNumber);
    }
    {
        auto* s = app.add_subcommand("compare-sv", "KS of sampled squared singular values against K_sv(a,a)/n");
        common(s);
        with_expr(s, true);
        s->add_option("--input", c.input, "sample CSV")->required();
    }
    {
        auto* s = app.add_subcommand("lyapunov", "Lyapunov and stability exponents against the CLT parameters");
        common(s);
        with_expr(s, true);
        with_seed(s);
        s->add_option("--M", c.M, "chain length")->required()->check(CLI::PositiveNumber);
        s->add_option("--runs", c.runs, "realizations")->capture_default_str();
    }
    {
        auto* s = app.add_subcommand("spherical-check", "symbolic vs numeric spherical transform");
        common(s);
        with_expr(s, true);
        s->add_option("--s", c.s, "spectral parameter 're:im,re:im,...'")->required();
    }

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        out << app.help();
        return 0;
    } catch (const CLI::CallForAllHelp& e) {
        out << app.help("", CLI::AppFormatMode::All);
        return 0;
    } catch (const CLI::ParseError& e) {
        err << "error: " << e.what() << '\n';
        return 2;
    }
    c.subcommand = app.get_subcommands().front()->get_name();
    if (const auto* o = app.get_subcommands().front()->get_option_no_throw("--seed"); o && o->count() > 0)
        c.seed = seed_value;

    try {
        std::ostringstream buf;
        execute(c, buf);
        if (c.output.empty()) {
            out << buf.str();
        } else {
            std::ofstream f(c.output, std::ios::binary);
            if (!f)
                throw Error(ErrorKind::SemanticError, "cannot write '" + c.output + "'");
            f << buf.str();
        }
        return 0;
    } catch (const Error& e) {
        err << "error: " << e.what() << '\n';
        return is_config_error(e.kind()) ? 2 : 3;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << '\n';
        return 3;
    }
}

} // namespace matprod::cli
