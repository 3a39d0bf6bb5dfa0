#pragma once

#include "rgwb/rational.hpp"

#include <complex>
#include <map>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace rgwb {

/// Exponent bookkeeping of one series term:
///   coeff * w^omega_pow * (t-t1)^t_pow * e^{i*harmonic*w*t}
///         * A^amp_pow * conj(A)^conj_pow
///         * prod eps_i^{eps_pows[i]} * prod deps_i/dt^{epsdot_pows[i]}
/// Ordering of the fields fixes the canonical term order.
struct TermKey {
    std::map<std::string, int> eps_pows;
    std::map<std::string, int> epsdot_pows;
    int harmonic = 0;
    int t_pow = 0;
    int amp_pow = 0;
    int conj_pow = 0;
    int omega_pow = 0;

    auto operator<=>(const TermKey&) const = default;

    int eps_degree() const {
        int d = 0;
        for (auto& [_, n] : eps_pows) d += n;
        return d;
    }
    int epsdot_degree() const {
        int d = 0;
        for (auto& [_, n] : epsdot_pows) d += n;
        return d;
    }
};

struct SeriesTerm {
    TermKey key;
    RationalComplex coeff;
};

/// Values plugged into a series for numeric evaluation (test and rendering
/// paths; the symbolic pipeline never touches doubles).
struct NumericContext {
    double t = 0.0;
    double t1 = 0.0;
    double omega = 1.0;
    std::complex<double> amp{1.0, 0.0};
    std::map<std::string, double> eps;
    std::map<std::string, double> epsdot;
};

namespace detail {

inline void validate_key(const TermKey& k) {
    if (k.t_pow < 0 || k.amp_pow < 0 || k.conj_pow < 0)
        throw std::domain_error("series term: negative exponent");
    for (auto& [_, n] : k.eps_pows)
        if (n < 0) throw std::domain_error("series term: negative parameter power");
    int dot_total = 0;
    for (auto& [_, n] : k.epsdot_pows) {
        if (n < 0 || n > 1) throw std::domain_error("series term: parameter-rate power must be 0 or 1");
        dot_total += n;
    }
    if (dot_total > 1) throw std::domain_error("series term: more than one parameter rate");
}

inline std::map<std::string, int> merge_pows(const std::map<std::string, int>& a,
                                             const std::map<std::string, int>& b) {
    std::map<std::string, int> r = a;
    for (auto& [name, n] : b) {
        int v = (r[name] += n);
        if (v == 0) r.erase(name);
    }
    return r;
}

}  // namespace detail

/// Finite Fourier-secular series in canonical merged form: no two stored
/// terms share a key, zero coefficients are dropped.
class FourierSecularSeries {
  public:
    using TermMap = std::map<TermKey, RationalComplex>;

    FourierSecularSeries() = default;

    /// A e^{i w t} + conj(A) e^{-i w t}
    static FourierSecularSeries bare_amplitude() {
        FourierSecularSeries s;
        TermKey k;
        k.harmonic = 1;
        k.amp_pow = 1;
        s.add_term(k, RationalComplex(1));
        TermKey kc;
        kc.harmonic = -1;
        kc.conj_pow = 1;
        s.add_term(kc, RationalComplex(1));
        return s;
    }

    static FourierSecularSeries single(const TermKey& key, RationalComplex coeff) {
        FourierSecularSeries s;
        s.add_term(key, std::move(coeff));
        return s;
    }

    bool empty() const { return terms_.empty(); }
    std::size_t size() const { return terms_.size(); }
    const TermMap& terms() const { return terms_; }

    void add_term(const TermKey& key, const RationalComplex& coeff) {
        if (coeff.is_zero()) return;
        detail::validate_key(key);
        auto [it, inserted] = terms_.try_emplace(key, coeff);
        if (!inserted) {
            it->second += coeff;
            if (it->second.is_zero()) terms_.erase(it);
        }
    }

    RationalComplex coeff(const TermKey& key) const {
        auto it = terms_.find(key);
        return it == terms_.end() ? RationalComplex() : it->second;
    }

    FourierSecularSeries& operator+=(const FourierSecularSeries& o) {
        for (auto& [k, c] : o.terms_) add_term(k, c);
        return *this;
    }
    FourierSecularSeries& operator-=(const FourierSecularSeries& o) {
        for (auto& [k, c] : o.terms_) add_term(k, -c);
        return *this;
    }
    friend FourierSecularSeries operator+(FourierSecularSeries a, const FourierSecularSeries& b) {
        return a += b;
    }
    friend FourierSecularSeries operator-(FourierSecularSeries a, const FourierSecularSeries& b) {
        return a -= b;
    }
    friend bool operator==(const FourierSecularSeries& a, const FourierSecularSeries& b) {
        return a.terms_ == b.terms_;
    }

    friend FourierSecularSeries operator*(const FourierSecularSeries& a, const FourierSecularSeries& b) {
        FourierSecularSeries r;
        for (auto& [ka, ca] : a.terms_)
            for (auto& [kb, cb] : b.terms_) {
                TermKey k;
                k.eps_pows = detail::merge_pows(ka.eps_pows, kb.eps_pows);
                k.epsdot_pows = detail::merge_pows(ka.epsdot_pows, kb.epsdot_pows);
                k.harmonic = ka.harmonic + kb.harmonic;
                k.t_pow = ka.t_pow + kb.t_pow;
                k.amp_pow = ka.amp_pow + kb.amp_pow;
                k.conj_pow = ka.conj_pow + kb.conj_pow;
                k.omega_pow = ka.omega_pow + kb.omega_pow;
                r.add_term(k, ca * cb);
            }
        return r;
    }

    FourierSecularSeries scaled(const RationalComplex& c) const {
        FourierSecularSeries r;
        for (auto& [k, v] : terms_) r.add_term(k, v * c);
        return r;
    }

    /// Multiply by w^k.
    FourierSecularSeries times_omega_pow(int k) const {
        FourierSecularSeries r;
        for (auto& [key, v] : terms_) {
            TermKey nk = key;
            nk.omega_pow += k;
            r.add_term(nk, v);
        }
        return r;
    }

    /// Termwise time derivative with eps, deps/dt, A frozen:
    /// d/dt (t-t1)^l e^{imwt} = l (t-t1)^{l-1} e^{imwt} + i m w (t-t1)^l e^{imwt}.
    FourierSecularSeries ddt() const {
        FourierSecularSeries r;
        for (auto& [k, c] : terms_) {
            if (k.t_pow > 0) {
                TermKey kd = k;
                kd.t_pow -= 1;
                r.add_term(kd, c * RationalComplex(Rational(k.t_pow)));
            }
            if (k.harmonic != 0) {
                TermKey kw = k;
                kw.omega_pow += 1;
                r.add_term(kw, c * RationalComplex::unit_im(k.harmonic));
            }
        }
        return r;
    }

    FourierSecularSeries conjugate() const {
        FourierSecularSeries r;
        for (auto& [k, c] : terms_) {
            TermKey kc = k;
            kc.harmonic = -k.harmonic;
            kc.amp_pow = k.conj_pow;
            kc.conj_pow = k.amp_pow;
            r.add_term(kc, c.conj());
        }
        return r;
    }

    /// Reality scan: every term must have its conjugate partner present.
    bool is_real_closed() const { return conjugate() == *this; }

    /// partial d/dA (A, conj(A) independent).
    FourierSecularSeries d_amp() const {
        FourierSecularSeries r;
        for (auto& [k, c] : terms_) {
            if (k.amp_pow == 0) continue;
            TermKey kd = k;
            kd.amp_pow -= 1;
            r.add_term(kd, c * RationalComplex(Rational(k.amp_pow)));
        }
        return r;
    }
    FourierSecularSeries d_conj_amp() const {
        FourierSecularSeries r;
        for (auto& [k, c] : terms_) {
            if (k.conj_pow == 0) continue;
            TermKey kd = k;
            kd.conj_pow -= 1;
            r.add_term(kd, c * RationalComplex(Rational(k.conj_pow)));
        }
        return r;
    }

    /// Terms whose eps monomial equals `mono` exactly (rate powers all zero).
    FourierSecularSeries eps_component(const std::map<std::string, int>& mono) const {
        FourierSecularSeries r;
        for (auto& [k, c] : terms_)
            if (k.eps_pows == mono && k.epsdot_pows.empty()) r.add_term(k, c);
        return r;
    }

    /// Drop terms of eps degree above `max_degree` (rate degree counts once).
    FourierSecularSeries truncate_eps_degree(int max_degree) const {
        FourierSecularSeries r;
        for (auto& [k, c] : terms_)
            if (k.eps_degree() + k.epsdot_degree() <= max_degree) r.add_term(k, c);
        return r;
    }

    std::complex<double> eval(const NumericContext& ctx) const {
        std::complex<double> sum = 0.0;
        std::complex<double> ac = std::conj(ctx.amp);
        for (auto& [k, c] : terms_) {
            std::complex<double> v = to_complex(c);
            v *= std::pow(ctx.omega, k.omega_pow);
            v *= std::pow(ctx.t - ctx.t1, k.t_pow);
            v *= std::pow(ctx.amp, k.amp_pow) * std::pow(ac, k.conj_pow);
            for (auto& [name, n] : k.eps_pows) {
                auto it = ctx.eps.find(name);
                double x = it == ctx.eps.end() ? 0.0 : it->second;
                v *= std::pow(x, n);
            }
            for (auto& [name, n] : k.epsdot_pows) {
                auto it = ctx.epsdot.find(name);
                double x = it == ctx.epsdot.end() ? 0.0 : it->second;
                v *= std::pow(x, n);
            }
            double phase = k.harmonic * ctx.omega * ctx.t;
            v *= std::complex<double>(std::cos(phase), std::sin(phase));
            sum += v;
        }
        return sum;
    }

    std::string str() const;

  private:
    TermMap terms_;
};

// ---------------------------------------------------------------------------
// Canonical pretty printer.
//
// Terms sharing (eps, epsdot, harmonic, t_pow, amp_pow-conj_pow, omega_pow)
// are folded into one factor with an integer polynomial in |A|^2, e.g.
//   (1/2)*mu*(t-t1)*A*(1-|A|^2)*e^{i w t}
// The output is deterministic and used bit-exactly by golden tests.
// ---------------------------------------------------------------------------

namespace detail {

struct GroupKey {
    std::map<std::string, int> eps_pows;
    std::map<std::string, int> epsdot_pows;
    int harmonic = 0;
    int t_pow = 0;
    int net_amp = 0;   // amp_pow - conj_pow
    int omega_pow = 0;
    auto operator<=>(const GroupKey&) const = default;
};

inline Int gcd_int(Int a, Int b) {
    if (a < 0) a = -a;
    if (b < 0) b = -b;
    while (b != 0) {
        Int t = a % b;
        a = b;
        b = t;
    }
    return a;
}

// Largest rational content of a coefficient list (all real or all imaginary):
// gcd of numerators over lcm of denominators, signed like the first entry.
inline bool rational_content(const std::vector<RationalComplex>& cs, RationalComplex& content) {
    bool all_real = true, all_imag = true;
    for (auto& c : cs) {
        if (!c.is_real()) all_real = false;
        if (!c.is_imaginary()) all_imag = false;
    }
    if (!(all_real || all_imag) || cs.empty()) return false;
    Int g = 0, l = 1;
    for (auto& c : cs) {
        const Rational& r = all_real ? c.re : c.im;
        g = gcd_int(g, numerator(r));
        l = l / gcd_int(l, denominator(r)) * denominator(r);
    }
    if (g == 0) return false;
    Rational mag(g, l);
    const Rational& first = all_real ? cs.front().re : cs.front().im;
    if (first < 0) mag = -mag;
    content = all_real ? RationalComplex(mag) : RationalComplex(Rational(0), mag);
    return true;
}

inline std::string omega_factor(int k) {
    if (k == 0) return "";
    if (k == 1) return "*w";
    if (k == -1) return "/w";
    if (k > 1) return "*w^" + std::to_string(k);
    return "/w^" + std::to_string(-k);
}

inline std::string pow_factor(const std::string& base, int n) {
    if (n == 0) return "";
    if (n == 1) return "*" + base;
    return "*" + base + "^" + std::to_string(n);
}

inline std::string harmonic_factor(int m) {
    if (m == 0) return "";
    std::string inner;
    if (m == 1)
        inner = "i w t";
    else if (m == -1)
        inner = "-i w t";
    else
        inner = std::to_string(m) + " i w t";
    return "*e^{" + inner + "}";
}

}  // namespace detail

inline std::string FourierSecularSeries::str() const {
    if (terms_.empty()) return "0";
    // Group terms; within a group record min |A|^2 power and coefficients.
    std::map<detail::GroupKey, std::map<int, RationalComplex>> groups;
    for (auto& [k, c] : terms_) {
        detail::GroupKey g{k.eps_pows, k.epsdot_pows, k.harmonic, k.t_pow, k.amp_pow - k.conj_pow,
                           k.omega_pow};
        int sq = std::min(k.amp_pow, k.conj_pow);  // |A|^{2 sq}
        groups[g][sq] = c;
    }
    std::string out;
    for (auto& [g, poly] : groups) {
        std::vector<RationalComplex> cs;
        cs.reserve(poly.size());
        for (auto& [_, c] : poly) cs.push_back(c);
        RationalComplex content(1);
        bool have_content = detail::rational_content(cs, content);
        if (!have_content) content = RationalComplex(1);

        std::string factors;
        factors += detail::omega_factor(g.omega_pow);
        for (auto& [name, n] : g.eps_pows) factors += detail::pow_factor(name, n);
        for (auto& [name, n] : g.epsdot_pows) factors += detail::pow_factor(name + "'", n);
        factors += detail::pow_factor("(t-t1)", g.t_pow);
        if (g.net_amp > 0) factors += detail::pow_factor("A", g.net_amp);
        if (g.net_amp < 0) factors += detail::pow_factor("conj(A)", -g.net_amp);

        // Residual polynomial in |A|^2 after content extraction.
        std::string polystr;
        if (poly.size() == 1) {
            auto& [sq, c0] = *poly.begin();
            RationalComplex rest = c0 / content;
            if (sq > 0) {
                if (!(rest == RationalComplex(1)))
                    polystr += "*" + coeff_string(rest) + (sq == 1 ? "*|A|^2" : "*|A|^" + std::to_string(2 * sq));
                else
                    polystr += sq == 1 ? "*|A|^2" : "*|A|^" + std::to_string(2 * sq);
            } else if (!(rest == RationalComplex(1))) {
                polystr += "*" + coeff_string(rest);
            }
        } else {
            polystr = "*(";
            bool first = true;
            for (auto& [sq, c] : poly) {
                RationalComplex rest = c / content;
                std::string cstr = coeff_string(rest);
                std::string base = sq == 0 ? "" : (sq == 1 ? "|A|^2" : "|A|^" + std::to_string(2 * sq));
                std::string piece;
                if (base.empty())
                    piece = cstr;
                else if (rest == RationalComplex(1))
                    piece = base;
                else if (rest == RationalComplex(-1))
                    piece = "-" + base;
                else
                    piece = cstr + "*" + base;
                if (first) {
                    polystr += piece;
                    first = false;
                } else if (!piece.empty() && piece[0] == '-') {
                    polystr += "-" + piece.substr(1);
                } else {
                    polystr += "+" + piece;
                }
            }
            polystr += ")";
        }

        std::string tail = factors + polystr + detail::harmonic_factor(g.harmonic);
        std::string term;
        if (content == RationalComplex(1) && !tail.empty())
            term = tail.substr(1);  // drop the leading '*'
        else if (content == RationalComplex(-1) && !tail.empty())
            term = "-" + tail.substr(1);
        else
            term = coeff_string(content) + tail;
        if (out.empty())
            out = term;
        else if (term[0] == '-')
            out += " - " + term.substr(1);
        else
            out += " + " + term;
    }
    return out;
}

}  // namespace rgwb
