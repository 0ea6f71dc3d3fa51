#pragma once

#include <cctype>
#include <charconv>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "ensembles.hpp"
#include "errors.hpp"

namespace matprod {

// expr := term ('*' term)* ; term := family '(' kv (',' kv)* ')' | 'inv' '(' expr ')'
class ExprParser {
public:
    ExprParser(std::string_view text, int n) : src_(text), n_(n) {}

    Ensemble parse()
    {
        Ensemble e = expr();
        skip_ws();
        if (pos_ != src_.size())
            fail({"'*'", "end of input"});
        return e;
    }

private:
    struct Spec {
        Family family;
        std::vector<std::pair<std::string, std::optional<double>>> keys; // name, default
    };

    static const std::map<std::string, Spec>& families()
    {
        static const std::map<std::string, Spec> f = {
            {"laguerre", {Family::Laguerre, {{"nu", 0.0}}}},
            {"jacobi", {Family::Jacobi, {{"nu", 0.0}, {"mu", std::nullopt}}}},
            {"cauchy", {Family::CauchyLorentz, {{"nu", 0.0}, {"mu", std::nullopt}}}},
            {"mb", {Family::MuttalibBorodin, {{"nu", 0.0}, {"alpha", 1.0}, {"theta", 1.0}}}},
            {"lognormal", {Family::LogNormal, {{"nu", 0.0}, {"alpha", 1.0}}}},
            {"interp", {Family::Interpolating, {{"p", 0.0}, {"q", 0.0}}}},
        };
        return f;
    }

    [[noreturn]] void fail(std::vector<std::string> expected, std::size_t at) const
    {
        std::string msg = "expected ";
        for (std::size_t i = 0; i < expected.size(); ++i)
            msg += (i ? " or " : "") + expected[i];
        throw ParseError(at, std::move(expected), msg);
    }
    [[noreturn]] void fail(std::vector<std::string> expected) const { fail(std::move(expected), pos_); }

    void skip_ws()
    {
        while (pos_ < src_.size() && std::isspace(static_cast<unsigned char>(src_[pos_])))
            ++pos_;
    }

    bool accept(char c)
    {
        skip_ws();
        if (pos_ < src_.size() && src_[pos_] == c) {
            ++pos_;
            return true;
        }
        return false;
    }

    void expect(char c)
    {
        if (!accept(c))
            fail({std::string("'") + c + "'"});
    }

    std::string ident()
    {
        skip_ws();
        const std::size_t start = pos_;
        while (pos_ < src_.size() && (std::isalnum(static_cast<unsigned char>(src_[pos_])) || src_[pos_] == '_'))
            ++pos_;
        return std::string(src_.substr(start, pos_ - start));
    }

    double number()
    {
        skip_ws();
        const std::size_t start = pos_;
        const char* first = src_.data() + pos_;
        const char* last = src_.data() + src_.size();
        if (first != last && *first == '+')
            ++first;
        double v = 0.0;
        auto [ptr, ec] = std::from_chars(first, last, v);
        if (ec != std::errc() || !std::isfinite(v))
            fail({"number"}, start);
        pos_ = std::size_t(ptr - src_.data());
        return v;
    }

    Ensemble expr()
    {
        Ensemble e = term();
        while (accept('*'))
            e = compose(e, term());
        return e;
    }

    Ensemble term()
    {
        skip_ws();
        const std::size_t start = pos_;
        const std::string name = ident();
        if (name == "inv") {
            expect('(');
            Ensemble inner = expr();
            expect(')');
            return invert(inner);
        }
        auto it = families().find(name);
        if (it == families().end()) {
            std::vector<std::string> exp{"'inv'"};
            for (const auto& [k, v] : families())
                exp.push_back("'" + k + "'");
            fail(exp, start);
        }
        const Spec& spec = it->second;
        expect('(');
        std::map<std::string, double> given;
        do {
            skip_ws();
            const std::size_t kpos = pos_;
            const std::string key = ident();
            if (key.empty())
                fail({"parameter name"});
            bool known = false;
            for (const auto& [k, d] : spec.keys)
                known = known || k == key;
            if (!known)
                throw SemanticError(kpos, "unknown parameter '" + key + "' for " + name);
            if (given.count(key))
                throw SemanticError(kpos, "duplicate parameter '" + key + "'");
            expect('=');
            given[key] = number();
        } while (accept(','));
        expect(')');
        FamilyTag tag{spec.family, {}, {}};
        for (const auto& [k, d] : spec.keys) {
            auto g = given.find(k);
            if (g != given.end())
                tag.params.emplace_back(k, g->second);
            else if (d)
                tag.params.emplace_back(k, *d);
            else
                throw SemanticError(start, name + " requires parameter '" + k + "'");
        }
        try {
            return make_family(tag, n_);
        } catch (const Error& err) {
            if (err.kind() == ErrorKind::ParameterOutOfRange || err.kind() == ErrorKind::StripViolation)
                throw SemanticError(start, err.what());
            throw;
        }
    }

    std::string_view src_;
    int n_;
    std::size_t pos_ = 0;
};

inline Ensemble parse_ensemble_expr(std::string_view text, int n) { return ExprParser(text, n).parse(); }

} // namespace matprod
