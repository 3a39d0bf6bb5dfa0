#pragma once

#include "rgwb/model.hpp"
#include "rgwb/oscillator.hpp"
#include "rgwb/series.hpp"

#include <algorithm>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

namespace rgwb {

struct DerivationError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Monomial of an amplitude polynomial: coeff * w^omega_pow * A^amp_pow * conj(A)^conj_pow.
struct AmpMonomial {
    int amp_pow = 0;
    int conj_pow = 0;
    int omega_pow = 0;
    auto operator<=>(const AmpMonomial&) const = default;
};

using AmpPolynomial = std::map<AmpMonomial, RationalComplex>;

inline void amp_add(AmpPolynomial& p, const AmpMonomial& m, const RationalComplex& c) {
    if (c.is_zero()) return;
    auto [it, fresh] = p.try_emplace(m, c);
    if (!fresh) {
        it->second += c;
        if (it->second.is_zero()) p.erase(it);
    }
}

/// Label of one flow contribution: an adiabatic eps monomial, optionally
/// multiplied by the rate of one parameter ("omega" = the base frequency).
struct FlowKey {
    std::map<std::string, int> eps;
    std::string dot;  // "", parameter name, or "omega"

    auto operator<=>(const FlowKey&) const = default;
};

/// dA/dt = sum over entries of (eps monomial) * (rate factor) * P(A, conj A).
struct AmplitudeFlow {
    std::map<FlowKey, AmpPolynomial> entries;

    void add(const FlowKey& key, const AmpMonomial& mono, const RationalComplex& coeff) {
        if (coeff.is_zero()) return;
        auto& poly = entries[key];
        amp_add(poly, mono, coeff);
        if (poly.empty()) entries.erase(key);
    }

    const AmpPolynomial* find(const FlowKey& key) const {
        auto it = entries.find(key);
        return it == entries.end() ? nullptr : &it->second;
    }

    /// Every monomial must satisfy amp_pow - conj_pow == 1, so that the flow
    /// transforms like A under a global phase rotation.
    bool is_phase_covariant() const {
        for (auto& [_, poly] : entries)
            for (auto& [m, c] : poly)
                if (m.amp_pow - m.conj_pow != 1) return false;
        return true;
    }

    friend bool operator==(const AmplitudeFlow& a, const AmplitudeFlow& b) {
        return a.entries == b.entries;
    }
};

// ---------------------------------------------------------------------------
// Order-by-order expansion
// ---------------------------------------------------------------------------

namespace detail {

/// Right-hand side sum_terms coeff * eps * y^a * ydot^b of a model, assembled
/// from the current partial solution and truncated to the kept eps degrees.
inline FourierSecularSeries nonlinearity_series(const ModelSpec& model, const FourierSecularSeries& y,
                                                int max_degree) {
    FourierSecularSeries ydot = y.ddt();
    // Cache powers as needed.
    std::vector<FourierSecularSeries> ypow{FourierSecularSeries::single(TermKey{}, RationalComplex(1)), y};
    std::vector<FourierSecularSeries> dpow{ypow[0], ydot};
    auto power = [max_degree](std::vector<FourierSecularSeries>& cache, int n) {
        while (static_cast<int>(cache.size()) <= n)
            cache.push_back((cache.back() * cache[1]).truncate_eps_degree(max_degree));
        return cache[n];
    };
    FourierSecularSeries rhs;
    for (auto& term : model.nonlinearity) {
        FourierSecularSeries prod = power(ypow, term.y_pow) * power(dpow, term.ydot_pow);
        prod = prod.truncate_eps_degree(max_degree - 1);
        FourierSecularSeries tagged;
        for (auto& [k, c] : prod.terms()) {
            TermKey nk = k;
            nk.eps_pows[term.param] += 1;
            tagged.add_term(nk, c * RationalComplex(term.coeff));
        }
        rhs += tagged;
    }
    return rhs;
}

}  // namespace detail

/// The model's right-hand side evaluated on a series, truncated to the
/// model's maximal kept degree.
inline FourierSecularSeries model_rhs_series(const ModelSpec& model, const FourierSecularSeries& y) {
    return detail::nonlinearity_series(model, y, model.max_order());
}

/// Perturbative solution y(t, t1) of y'' + w^2 y = sum eps_i f_i(y, y') over
/// the model's order lattice, built so that the prime-frequency part of every
/// order is purely secular (vanishes at t = t1).
inline FourierSecularSeries expand(const ModelSpec& model) {
    model.validate();
    const int max_degree = model.max_order();

    FourierSecularSeries y = FourierSecularSeries::bare_amplitude();
    for (int degree = 1; degree <= max_degree; ++degree) {
        FourierSecularSeries rhs = detail::nonlinearity_series(model, y, max_degree);
        FourierSecularSeries correction;
        for (auto& mono : model.orders) {
            int total = 0;
            for (auto& [_, n] : mono) total += n;
            if (total != degree) continue;
            correction += solve_oscillator(rhs.eps_component(mono));
        }
        y += correction;
    }
    return y;
}

/// RG flow read off the solution: per eps monomial, the coefficient of the
/// (t-t1)-linear secular term at harmonic +1. Errors out if the solution
/// carries any regular prime-frequency term besides the bare amplitude.
inline AmplitudeFlow extract_flow(const FourierSecularSeries& solution) {
    AmplitudeFlow flow;
    for (auto& [k, c] : solution.terms()) {
        if (k.harmonic == 1 && k.t_pow == 0) {
            bool bare = k.eps_pows.empty() && k.epsdot_pows.empty() && k.amp_pow == 1 && k.conj_pow == 0 &&
                        k.omega_pow == 0 && c == RationalComplex(1);
            if (!bare)
                throw DerivationError(
                    "solution has a regular prime-frequency term besides the bare amplitude");
        }
        if (k.harmonic == -1 && k.t_pow == 0) {
            bool bare = k.eps_pows.empty() && k.epsdot_pows.empty() && k.amp_pow == 0 && k.conj_pow == 1 &&
                        k.omega_pow == 0 && c == RationalComplex(1);
            if (!bare)
                throw DerivationError(
                    "solution has a regular prime-frequency term besides the bare amplitude");
        }
        if (k.harmonic != 1 || k.t_pow != 1) continue;
        FlowKey fk;
        fk.eps = k.eps_pows;
        if (!k.epsdot_pows.empty()) continue;  // rate terms enter through the closed-form rules
        flow.add(fk, AmpMonomial{k.amp_pow, k.conj_pow, k.omega_pow}, c);
    }
    return flow;
}

/// Appends, for each time-dependent parameter, the first-order nonadiabatic
/// entry  (deps/dt) -> (i / 2w) F_1.
inline AmplitudeFlow nonadiabatic_eps(AmplitudeFlow flow, const ModelSpec& model) {
    for (auto& p : model.params) {
        if (!p.time_dependent) continue;
        FlowKey first;
        first.eps = {{p.name, 1}};
        const AmpPolynomial* f1 = flow.find(first);
        if (!f1) continue;
        FlowKey key;
        key.dot = p.name;
        for (auto& [m, c] : *f1) {
            AmpMonomial nm = m;
            nm.omega_pow -= 1;
            flow.add(key, nm, c * RationalComplex(Rational(0), Rational(1, 2)));
        }
    }
    return flow;
}

/// Appends the time-dependent-frequency entry  (dw/dt) -> -A / 2w, and, when
/// the model opts into the Van der Pol iteration, the mixed term whose polar
/// image is  dtheta/dt -= (mu / 16 w^2) r^2 dw/dt.
inline AmplitudeFlow nonadiabatic_omega(AmplitudeFlow flow, const ModelSpec& model) {
    if (!model.omega_time_dependent)
        throw DerivationError("frequency is not flagged time-dependent in this model");
    FlowKey key;
    key.dot = "omega";
    flow.add(key, AmpMonomial{1, 0, -1}, RationalComplex(Rational(-1, 2)));
    if (model.vdp_omega_iteration) {
        std::string mu;
        if (!model.is_pure_vdp(&mu))
            throw DerivationError("vdp_omega_iteration requires the exact (1 - y^2)*ydot nonlinearity");
        FlowKey mixed;
        mixed.eps = {{mu, 1}};
        mixed.dot = "omega";
        flow.add(mixed, AmpMonomial{2, 1, -2}, RationalComplex(Rational(0), Rational(-1, 4)));
    }
    return flow;
}

// ---------------------------------------------------------------------------
// Renormalized solution
// ---------------------------------------------------------------------------

/// y_R as a series: secular terms dropped, the amplitude promoted to A(t),
/// and for each time-dependent parameter the rate-corrected regular terms
///   (deps/dt) * 2 i m / ((m^2 - 1) w) * Y_reg_{1m} e^{i m w t}.
inline FourierSecularSeries render_solution(const FourierSecularSeries& solution,
                                            const AmplitudeFlow& flow) {
    // Which parameters carry a rate entry in the flow?
    std::vector<std::string> dotted;
    for (auto& [k, _] : flow.entries)
        if (!k.dot.empty() && k.dot != "omega") dotted.push_back(k.dot);

    FourierSecularSeries out;
    for (auto& [k, c] : solution.terms()) {
        if (k.t_pow > 0) continue;
        out.add_term(k, c);
        if (k.harmonic == 1 || k.harmonic == -1) continue;
        if (k.eps_degree() != 1 || !k.epsdot_pows.empty()) continue;
        const std::string& pname = k.eps_pows.begin()->first;
        if (std::find(dotted.begin(), dotted.end(), pname) == dotted.end()) continue;
        const int m = k.harmonic;
        TermKey nk = k;
        nk.eps_pows.clear();
        nk.epsdot_pows = {{pname, 1}};
        nk.omega_pow -= 1;
        RationalComplex factor = RationalComplex(Rational(0), Rational(2 * m)) /
                                 RationalComplex(Rational(m * m - 1));
        out.add_term(nk, c * factor);
    }
    return out;
}

// ---------------------------------------------------------------------------
// Printing
// ---------------------------------------------------------------------------

inline std::string flow_key_string(const FlowKey& k) {
    std::string s = format_eps_monomial(k.eps);
    if (!k.dot.empty()) {
        std::string dot = (k.dot == "omega" ? "w" : k.dot) + "'";
        s = s == "1" ? dot : s + "*" + dot;
    }
    return s;
}

inline std::string amp_polynomial_string(const AmpPolynomial& poly) {
    // Reuse the series printer on an equivalent harmonic-free series.
    FourierSecularSeries s;
    for (auto& [m, c] : poly) {
        TermKey k;
        k.amp_pow = m.amp_pow;
        k.conj_pow = m.conj_pow;
        k.omega_pow = m.omega_pow;
        s.add_term(k, c);
    }
    return s.str();
}

inline std::string flow_string(const AmplitudeFlow& flow) {
    if (flow.entries.empty()) return "dA/dt = 0";
    std::string out = "dA/dt = ";
    bool first = true;
    for (auto& [key, poly] : flow.entries) {
        std::string piece = flow_key_string(key) + "*( " + amp_polynomial_string(poly) + " )";
        if (first) {
            out += piece;
            first = false;
        } else {
            out += " + " + piece;
        }
    }
    return out;
}

}  // namespace rgwb
