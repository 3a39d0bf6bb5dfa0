#pragma once

#include <boost/multiprecision/cpp_int.hpp>

#include <complex>
#include <cstdlib>
#include <stdexcept>
#include <string>

namespace rgwb {

using Int = boost::multiprecision::cpp_int;
using Rational = boost::multiprecision::cpp_rational;

inline double to_double(const Rational& r) { return r.convert_to<double>(); }

/// Gaussian rational scalar: exact complex number with rational real and
/// imaginary parts. All series coefficients live in this field; floating
/// point only appears in the numeric front ends.
struct RationalComplex {
    Rational re{0};
    Rational im{0};

    RationalComplex() = default;
    RationalComplex(long r) : re(r) {}                       // NOLINT(google-explicit-constructor)
    RationalComplex(Rational r) : re(std::move(r)) {}        // NOLINT(google-explicit-constructor)
    RationalComplex(Rational r, Rational i) : re(std::move(r)), im(std::move(i)) {}

    static RationalComplex unit_im(long n = 1) { return RationalComplex(Rational(0), Rational(n)); }

    bool is_zero() const { return re == 0 && im == 0; }
    bool is_real() const { return im == 0; }
    bool is_imaginary() const { return re == 0 && im != 0; }

    RationalComplex conj() const { return {re, -im}; }

    RationalComplex& operator+=(const RationalComplex& o) {
        re += o.re;
        im += o.im;
        return *this;
    }
    RationalComplex& operator-=(const RationalComplex& o) {
        re -= o.re;
        im -= o.im;
        return *this;
    }
    RationalComplex& operator*=(const RationalComplex& o) {
        Rational r = re * o.re - im * o.im;
        Rational i = re * o.im + im * o.re;
        re = std::move(r);
        im = std::move(i);
        return *this;
    }
    RationalComplex& operator/=(const RationalComplex& o) {
        Rational n = o.re * o.re + o.im * o.im;
        if (n == 0) throw std::domain_error("RationalComplex: division by zero");
        Rational r = (re * o.re + im * o.im) / n;
        Rational i = (im * o.re - re * o.im) / n;
        re = std::move(r);
        im = std::move(i);
        return *this;
    }

    friend RationalComplex operator+(RationalComplex a, const RationalComplex& b) { return a += b; }
    friend RationalComplex operator-(RationalComplex a, const RationalComplex& b) { return a -= b; }
    friend RationalComplex operator*(RationalComplex a, const RationalComplex& b) { return a *= b; }
    friend RationalComplex operator/(RationalComplex a, const RationalComplex& b) { return a /= b; }
    friend RationalComplex operator-(const RationalComplex& a) { return {-a.re, -a.im}; }
    friend bool operator==(const RationalComplex& a, const RationalComplex& b) {
        return a.re == b.re && a.im == b.im;
    }
    friend bool operator!=(const RationalComplex& a, const RationalComplex& b) { return !(a == b); }
};

inline std::complex<double> to_complex(const RationalComplex& c) {
    return {to_double(c.re), to_double(c.im)};
}

inline std::string to_string(const Rational& r) { return r.str(); }

namespace detail {

// "1/2" -> "(1/2)", "-3" -> "-3", "5" -> "5"
inline std::string paren_rational(const Rational& r) {
    std::string s = r.str();
    if (denominator(r) != 1) {
        bool neg = r < 0;
        Rational a = neg ? Rational(-r) : r;
        return (neg ? "-(" : "(") + a.str() + ")";
    }
    return s;
}

}  // namespace detail

/// Canonical leading-factor form used by the pretty printers: "(1/2)", "-3",
/// "i", "-(5/192)*i", "(1/2-(1/3)*i)".
inline std::string coeff_string(const RationalComplex& c) {
    if (c.is_zero()) return "0";
    if (c.is_real()) return detail::paren_rational(c.re);
    if (c.is_imaginary()) {
        if (c.im == 1) return "i";
        if (c.im == -1) return "-i";
        return detail::paren_rational(c.im) + "*i";
    }
    std::string s = "(" + c.re.str();
    if (c.im > 0) s += "+";
    if (c.im == 1)
        s += "i";
    else if (c.im == -1)
        s += "-i";
    else {
        if (c.im < 0) s += "-";
        Rational a = c.im < 0 ? Rational(-c.im) : c.im;
        if (denominator(a) != 1)
            s += "(" + a.str() + ")*i";
        else
            s += a.str() + "*i";
    }
    return s + ")";
}

namespace detail {

/// Decimal integer parse; leading zeros must not trigger the octal reading
/// of the cpp_int string constructor.
inline Int int_from_decimal(const std::string& digits) {
    std::string s = digits;
    bool neg = false;
    if (!s.empty() && (s[0] == '+' || s[0] == '-')) {
        neg = s[0] == '-';
        s.erase(0, 1);
    }
    std::size_t k = 0;
    while (k + 1 < s.size() && s[k] == '0') ++k;
    s.erase(0, k);
    if (s.empty() || s.find_first_not_of("0123456789") != std::string::npos)
        throw std::invalid_argument("bad integer literal: '" + digits + "'");
    Int v(s);
    return neg ? Int(-v) : v;
}

}  // namespace detail

/// Exact rational from a decimal/fraction literal: "2", "-1/3", "0.125",
/// "1e-2", "2.5e3". Throws std::invalid_argument on malformed input.
inline Rational parse_rational(const std::string& text) {
    auto fail = [&]() -> Rational { throw std::invalid_argument("bad rational literal: '" + text + "'"); };
    if (text.empty()) return fail();
    auto slash = text.find('/');
    if (slash != std::string::npos) {
        std::string num = text.substr(0, slash), den = text.substr(slash + 1);
        if (num.empty() || den.empty()) return fail();
        try {
            Rational r{detail::int_from_decimal(num), detail::int_from_decimal(den)};
            return r;
        } catch (...) {
            return fail();
        }
    }
    std::size_t pos = 0;
    bool neg = false;
    if (text[pos] == '+' || text[pos] == '-') neg = text[pos++] == '-';
    std::string digits;
    long frac_digits = 0;
    bool seen_digit = false, seen_dot = false;
    for (; pos < text.size(); ++pos) {
        char ch = text[pos];
        if (ch >= '0' && ch <= '9') {
            digits += ch;
            seen_digit = true;
            if (seen_dot) ++frac_digits;
        } else if (ch == '.' && !seen_dot) {
            seen_dot = true;
        } else {
            break;
        }
    }
    if (!seen_digit) return fail();
    long exp10 = 0;
    if (pos < text.size() && (text[pos] == 'e' || text[pos] == 'E')) {
        ++pos;
        bool eneg = false;
        if (pos < text.size() && (text[pos] == '+' || text[pos] == '-')) eneg = text[pos++] == '-';
        if (pos >= text.size()) return fail();
        std::string es;
        while (pos < text.size() && text[pos] >= '0' && text[pos] <= '9') es += text[pos++];
        if (es.empty()) return fail();
        exp10 = std::strtol(es.c_str(), nullptr, 10);
        if (eneg) exp10 = -exp10;
    }
    if (pos != text.size()) return fail();
    Int mant = detail::int_from_decimal(digits.empty() ? "0" : digits);
    if (neg) mant = -mant;
    long net = exp10 - frac_digits;
    Rational r(mant);
    Int ten(10);
    if (net > 0)
        for (long k = 0; k < net; ++k) r *= ten;
    else
        for (long k = 0; k < -net; ++k) r /= ten;
    return r;
}

}  // namespace rgwb
