#pragma once

#include <boost/multiprecision/cpp_bin_float.hpp>
#include <boost/multiprecision/cpp_int.hpp>

#include <algorithm>
#include <cstddef>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "error.hpp"

namespace lramp {

using Rational = boost::multiprecision::cpp_rational;
using BigInt = boost::multiprecision::cpp_int;
using Float50 = boost::multiprecision::cpp_bin_float_50;

/// Parses "3", "-3/2" or a plain decimal such as "1.25" into an exact rational.
inline Rational parse_rational(const std::string& text)
{
    require(!text.empty(), "empty rational literal");
    try {
        if (auto slash = text.find('/'); slash != std::string::npos) {
            BigInt n(text.substr(0, slash));
            BigInt d(text.substr(slash + 1));
            require(d != 0, "zero denominator");
            return Rational(n, d);
        }
        auto dot = text.find('.');
        if (dot == std::string::npos) return Rational(BigInt(text));
        std::string digits = text.substr(0, dot) + text.substr(dot + 1);
        if (digits.empty() || digits == "-" || digits == "+") throw Error(Errc::invalid_argument, "bad literal");
        BigInt scale = 1;
        for (std::size_t i = dot + 1; i < text.size(); ++i) scale *= 10;
        return Rational(BigInt(digits), scale);
    } catch (const Error&) {
        throw;
    } catch (const std::exception&) {
        throw Error(Errc::invalid_argument, "cannot parse rational '" + text + "'");
    }
}

inline std::size_t bit_size(const Rational& r)
{
    const BigInt n = abs(numerator(r));
    const BigInt d = denominator(r);
    const std::size_t bn = n == 0 ? 0 : msb(n) + 1;
    const std::size_t bd = msb(d) + 1;
    return std::max(bn, bd);
}

/// Sparse polynomial in x and Y with exact rational coefficients.
///
/// Keys are (power of x, power of Y). Zero coefficients are never stored.
class BiPoly {
public:
    using Key = std::pair<int, int>;
    using Terms = std::map<Key, Rational>;

    BiPoly() = default;
    explicit BiPoly(const Rational& constant) { add_term(0, 0, constant); }

    static BiPoly monomial(int px, int py, const Rational& c = 1)
    {
        BiPoly p;
        p.add_term(px, py, c);
        return p;
    }

    [[nodiscard]] const Terms& terms() const noexcept { return terms_; }
    [[nodiscard]] bool is_zero() const noexcept { return terms_.empty(); }
    [[nodiscard]] std::size_t size() const noexcept { return terms_.size(); }

    [[nodiscard]] int degree_x() const noexcept
    {
        int d = -1;
        for (const auto& [k, _] : terms_) d = std::max(d, k.first);
        return d;
    }

    [[nodiscard]] std::size_t max_bits() const
    {
        std::size_t b = 0;
        for (const auto& [_, c] : terms_) b = std::max(b, bit_size(c));
        return b;
    }

    void add_term(int px, int py, const Rational& c)
    {
        if (c == 0) return;
        auto [it, inserted] = terms_.try_emplace({px, py}, c);
        if (!inserted) {
            it->second += c;
            if (it->second == 0) terms_.erase(it);
        }
    }

    BiPoly& operator+=(const BiPoly& o)
    {
        for (const auto& [k, c] : o.terms_) add_term(k.first, k.second, c);
        return *this;
    }
    BiPoly& operator-=(const BiPoly& o)
    {
        for (const auto& [k, c] : o.terms_) add_term(k.first, k.second, -c);
        return *this;
    }
    BiPoly& operator*=(const Rational& s)
    {
        if (s == 0) terms_.clear();
        for (auto& [_, c] : terms_) c *= s;
        return *this;
    }

    friend BiPoly operator+(BiPoly a, const BiPoly& b) { return a += b; }
    friend BiPoly operator-(BiPoly a, const BiPoly& b) { return a -= b; }
    friend BiPoly operator*(BiPoly a, const Rational& s) { return a *= s; }
    friend BiPoly operator*(const Rational& s, BiPoly a) { return a *= s; }
    friend BiPoly operator*(const BiPoly& a, const BiPoly& b)
    {
        BiPoly out;
        for (const auto& [ka, ca] : a.terms_)
            for (const auto& [kb, cb] : b.terms_) out.add_term(ka.first + kb.first, ka.second + kb.second, ca * cb);
        return out;
    }
    friend bool operator==(const BiPoly& a, const BiPoly& b) { return a.terms_ == b.terms_; }

    [[nodiscard]] BiPoly pow(int n) const
    {
        BiPoly out(Rational(1));
        for (int i = 0; i < n; ++i) out = out * *this;
        return out;
    }

    /// ∂/∂x
    [[nodiscard]] BiPoly dx() const
    {
        BiPoly out;
        for (const auto& [k, c] : terms_)
            if (k.first > 0) out.add_term(k.first - 1, k.second, c * k.first);
        return out;
    }

    /// Substitutes x, leaving a polynomial in Y only (stored with x-power 0).
    [[nodiscard]] BiPoly at_x(const Rational& x) const
    {
        BiPoly out;
        for (const auto& [k, c] : terms_) out.add_term(0, k.second, c * ipow(x, k.first));
        return out;
    }

    [[nodiscard]] Rational eval(const Rational& x, const Rational& Y) const
    {
        Rational s = 0;
        for (const auto& [k, c] : terms_) s += c * ipow(x, k.first) * ipow(Y, k.second);
        return s;
    }

private:
    static Rational ipow(const Rational& b, int e)
    {
        Rational r = 1;
        for (int i = 0; i < e; ++i) r *= b;
        return r;
    }

    Terms terms_;
};

/// Float evaluation of a BiPoly with 50 significant digits, so cancellation
/// between large high-order coefficients does not reach double precision.
class BiPolyEvaluator {
public:
    BiPolyEvaluator() = default;
    explicit BiPolyEvaluator(const BiPoly& p)
    {
        terms_.reserve(p.size());
        for (const auto& [k, c] : p.terms()) {
            Float50 v = Float50(numerator(c)) / Float50(denominator(c));
            terms_.push_back({k.first, k.second, v});
            max_x_ = std::max(max_x_, k.first);
            max_y_ = std::max(max_y_, k.second);
        }
    }

    [[nodiscard]] Float50 operator()(const Float50& x, const Float50& Y) const
    {
        std::vector<Float50> xp(static_cast<std::size_t>(max_x_ + 1)), yp(static_cast<std::size_t>(max_y_ + 1));
        if (!xp.empty()) xp[0] = 1;
        if (!yp.empty()) yp[0] = 1;
        for (std::size_t i = 1; i < xp.size(); ++i) xp[i] = xp[i - 1] * x;
        for (std::size_t i = 1; i < yp.size(); ++i) yp[i] = yp[i - 1] * Y;
        Float50 s = 0;
        for (const auto& t : terms_) s += t.c * xp[static_cast<std::size_t>(t.px)] * yp[static_cast<std::size_t>(t.py)];
        return s;
    }

private:
    struct Term {
        int px, py;
        Float50 c;
    };
    std::vector<Term> terms_;
    int max_x_ = 0;
    int max_y_ = 0;
};

} // namespace lramp
