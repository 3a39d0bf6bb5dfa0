#pragma once

#include "rgwb/series.hpp"

#include <utility>
#include <vector>

namespace rgwb {

/// Particular solution of  P'' + 2 i m w P' + (1-m^2) w^2 P = B (t-t1)^l,
/// attached to the oscillating factor e^{i m w t}.
///
/// For m^2 != 1 the solution is a degree-l polynomial in (t-t1), fixed by the
/// backward recursion starting from p_l = B / ((1-m^2) w^2). For m^2 == 1 the
/// operator loses its zeroth-order part; the polynomial has degree l+1 with
/// p_{l+1} = B / (2 i m w (l+1)), and the free constant p_0 is set to zero so
/// that the prime-frequency part of every order vanishes at t = t1.
///
/// All amplitude/eps exponents of the input term ride along unchanged.
inline FourierSecularSeries solve_particular(const SeriesTerm& rhs_term) {
    const TermKey& in = rhs_term.key;
    const int m = in.harmonic;
    const int l = in.t_pow;

    // Polynomial coefficients as (coeff, omega_pow) pairs, index = power of (t-t1).
    struct Mono {
        RationalComplex c;
        int wpow = 0;
        bool set = false;
    };

    FourierSecularSeries out;
    auto emit = [&](int k, const RationalComplex& c, int wpow) {
        if (c.is_zero()) return;
        TermKey key = in;
        key.t_pow = k;
        key.omega_pow = wpow;
        out.add_term(key, c);
    };

    if (m * m != 1) {
        const Rational a(Int(1) - Int(m) * Int(m));  // (1-m^2)
        std::vector<Mono> p(l + 3);
        // k = l, l-1, ..., 0 with p_{l+1} = p_{l+2} = 0:
        //   (k+2)(k+1) p_{k+2} + 2 i m w (k+1) p_{k+1} + (1-m^2) w^2 p_k = B delta_{k,l}
        for (int k = l; k >= 0; --k) {
            RationalComplex num;
            int wpow = 0;
            if (k == l) {
                num = rhs_term.coeff;
                wpow = in.omega_pow;
            }
            if (p[k + 1].set) {
                // subtract 2 i m w (k+1) p_{k+1}; all contributions share one omega power
                RationalComplex t = p[k + 1].c * RationalComplex::unit_im(2 * m * (k + 1));
                num -= t;
                wpow = p[k + 1].wpow + 1;
            }
            if (p[k + 2].set) {
                num -= p[k + 2].c * RationalComplex(Rational((k + 2) * (k + 1)));
                wpow = p[k + 2].wpow;
            }
            if (num.is_zero()) continue;
            Mono& mk = p[k];
            mk.c = num / RationalComplex(a);
            mk.wpow = wpow - 2;
            mk.set = true;
            emit(k, mk.c, mk.wpow);
        }
    } else {
        std::vector<Mono> p(l + 3);
        // p_{l+1} = B / (2 i m (l+1) w) = -i m B / (2 (l+1) w)
        {
            Mono& top = p[l + 1];
            top.c = rhs_term.coeff * RationalComplex::unit_im(-m) / RationalComplex(Rational(2 * (l + 1)));
            top.wpow = in.omega_pow - 1;
            top.set = true;
            emit(l + 1, top.c, top.wpow);
        }
        // (k+2)(k+1) p_{k+2} + 2 i m w (k+1) p_{k+1} = 0 for k < l; these fix
        // p_l ... p_1, and the free constant p_0 stays zero.
        for (int k = l - 1; k >= 0; --k) {
            if (!p[k + 2].set) continue;
            Mono& mk = p[k + 1];
            mk.c = p[k + 2].c * RationalComplex(Rational(k + 2)) * RationalComplex::unit_im(m) /
                   RationalComplex(Rational(2));
            mk.wpow = p[k + 2].wpow - 1;
            mk.set = true;
            emit(k + 1, mk.c, mk.wpow);
        }
    }
    return out;
}

/// Particular solution of y'' + w^2 y = rhs, term by term. The output has no
/// regular prime-frequency terms: every m = +-1 contribution vanishes at t = t1.
inline FourierSecularSeries solve_oscillator(const FourierSecularSeries& rhs) {
    FourierSecularSeries out;
    for (auto& [key, coeff] : rhs.terms()) out += solve_particular(SeriesTerm{key, coeff});
    return out;
}

/// y'' + w^2 y, used by the oscillator-identity checks.
inline FourierSecularSeries oscillator_apply(const FourierSecularSeries& y) {
    return y.ddt().ddt() + y.times_omega_pow(2);
}

}  // namespace rgwb
