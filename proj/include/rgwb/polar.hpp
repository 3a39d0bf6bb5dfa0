#pragma once

#include "rgwb/flow.hpp"

#include <cmath>
#include <map>
#include <stdexcept>
#include <string>

namespace rgwb {

struct CovarianceError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct PolarMonomial {
    int r_pow = 0;
    int omega_pow = 0;
    auto operator<=>(const PolarMonomial&) const = default;
};

using PolarPolynomial = std::map<PolarMonomial, Rational>;

inline void polar_add(PolarPolynomial& p, const PolarMonomial& m, const Rational& c) {
    if (c == 0) return;
    auto [it, fresh] = p.try_emplace(m, c);
    if (!fresh) {
        it->second += c;
        if (it->second == 0) p.erase(it);
    }
}

/// dr/dt = f(r, eps, rates), dtheta/dt = Omega(r, eps, rates): polynomials in
/// r with exact Rational * w^k coefficients, one entry per flow label.
struct PolarRGSystem {
    std::map<FlowKey, PolarPolynomial> f_parts;
    std::map<FlowKey, PolarPolynomial> omega_parts;

    friend bool operator==(const PolarRGSystem& a, const PolarRGSystem& b) {
        return a.f_parts == b.f_parts && a.omega_parts == b.omega_parts;
    }
};

/// Substitute A = r e^{i theta} / 2 and split real and imaginary parts:
///   dr/dt       = sum 2 Re(c) (1/2)^{p+q} r^{p+q}
///   dtheta/dt   = sum 2 Im(c) (1/2)^{p+q} r^{p+q-1}
/// Requires amp_pow - conj_pow == 1 on every monomial, else the phase does
/// not decouple.
inline PolarRGSystem polar_form(const AmplitudeFlow& flow) {
    PolarRGSystem sys;
    for (auto& [key, poly] : flow.entries) {
        for (auto& [m, c] : poly) {
            if (m.amp_pow - m.conj_pow != 1)
                throw CovarianceError("flow entry is not phase-rotation covariant");
            const int n = m.amp_pow + m.conj_pow;
            Rational half_pow(1);
            for (int k = 0; k < n; ++k) half_pow /= 2;
            Rational re = 2 * c.re * half_pow;
            Rational im = 2 * c.im * half_pow;
            if (re != 0) polar_add(sys.f_parts[key], PolarMonomial{n, m.omega_pow}, re);
            if (im != 0) polar_add(sys.omega_parts[key], PolarMonomial{n - 1, m.omega_pow}, im);
        }
        if (sys.f_parts.count(key) && sys.f_parts[key].empty()) sys.f_parts.erase(key);
        if (sys.omega_parts.count(key) && sys.omega_parts[key].empty()) sys.omega_parts.erase(key);
    }
    return sys;
}

// ---------------------------------------------------------------------------
// Numeric evaluation
// ---------------------------------------------------------------------------

/// Parameter values by name; the base frequency travels under the key "omega".
using ParamPoint = std::map<std::string, double>;

namespace detail {

inline double point_value(const ParamPoint& pt, const std::string& name) {
    auto it = pt.find(name);
    return it == pt.end() ? 0.0 : it->second;
}

inline double poly_eval(const PolarPolynomial& poly, double r, double w) {
    double s = 0.0;
    for (auto& [m, c] : poly) s += to_double(c) * std::pow(w, m.omega_pow) * std::pow(r, m.r_pow);
    return s;
}

inline double poly_eval_dr(const PolarPolynomial& poly, double r, double w) {
    double s = 0.0;
    for (auto& [m, c] : poly)
        if (m.r_pow > 0)
            s += to_double(c) * m.r_pow * std::pow(w, m.omega_pow) * std::pow(r, m.r_pow - 1);
    return s;
}

inline double poly_eval_drr(const PolarPolynomial& poly, double r, double w) {
    double s = 0.0;
    for (auto& [m, c] : poly)
        if (m.r_pow > 1)
            s += to_double(c) * m.r_pow * (m.r_pow - 1) * std::pow(w, m.omega_pow) *
                 std::pow(r, m.r_pow - 2);
    return s;
}

inline double poly_eval_domega(const PolarPolynomial& poly, double r, double w) {
    double s = 0.0;
    for (auto& [m, c] : poly)
        if (m.omega_pow != 0)
            s += to_double(c) * m.omega_pow * std::pow(w, m.omega_pow - 1) * std::pow(r, m.r_pow);
    return s;
}

inline double eps_monomial_value(const std::map<std::string, int>& mono, const ParamPoint& pt) {
    double v = 1.0;
    for (auto& [name, n] : mono) v *= std::pow(point_value(pt, name), n);
    return v;
}

// d/d(name) of the eps monomial value.
inline double eps_monomial_dparam(const std::map<std::string, int>& mono, const ParamPoint& pt,
                                  const std::string& name) {
    auto it = mono.find(name);
    if (it == mono.end()) return 0.0;
    double v = it->second * std::pow(point_value(pt, name), it->second - 1);
    for (auto& [other, n] : mono)
        if (other != name) v *= std::pow(point_value(pt, other), n);
    return v;
}

}  // namespace detail

/// One side (dr/dt or dtheta/dt) of a polar system bound to a parameter
/// point; evaluates the adiabatic part, its derivatives, and the rate
/// coefficients exactly from the stored polynomials.
class PolarSideEval {
  public:
    PolarSideEval(const std::map<FlowKey, PolarPolynomial>& parts, const ParamPoint& point)
        : parts_(&parts), pt_(&point), w_(detail::point_value(point, "omega")) {}

    /// Adiabatic value (all rates zero).
    double value(double r) const {
        return accumulate(r, [](const PolarPolynomial& p, double rr, double ww) {
            return detail::poly_eval(p, rr, ww);
        });
    }
    double d_dr(double r) const {
        return accumulate(r, [](const PolarPolynomial& p, double rr, double ww) {
            return detail::poly_eval_dr(p, rr, ww);
        });
    }
    double d_drr(double r) const {
        return accumulate(r, [](const PolarPolynomial& p, double rr, double ww) {
            return detail::poly_eval_drr(p, rr, ww);
        });
    }

    /// Sum of |contributions| to d/dr, used as the degeneracy scale.
    double d_dr_scale(double r) const {
        double s = 0.0;
        for (auto& [key, poly] : *parts_) {
            if (!key.dot.empty()) continue;
            double tag = detail::eps_monomial_value(key.eps, *pt_);
            for (auto& [m, c] : poly)
                if (m.r_pow > 0)
                    s += std::abs(tag * to_double(c) * m.r_pow * std::pow(w_, m.omega_pow) *
                                  std::pow(r, m.r_pow - 1));
        }
        return s;
    }

    /// Adiabatic d/d(param); "omega" differentiates the w^k coefficients.
    double d_dparam(const std::string& name, double r) const {
        double s = 0.0;
        for (auto& [key, poly] : *parts_) {
            if (!key.dot.empty()) continue;
            if (name == "omega") {
                s += detail::eps_monomial_value(key.eps, *pt_) * detail::poly_eval_domega(poly, r, w_);
            } else {
                double dtag = detail::eps_monomial_dparam(key.eps, *pt_, name);
                if (dtag != 0.0) s += dtag * detail::poly_eval(poly, r, w_);
            }
        }
        return s;
    }

    /// Mixed derivative d^2/(dr d(param)) of the adiabatic part.
    double d_dr_dparam(const std::string& name, double r) const {
        double s = 0.0;
        for (auto& [key, poly] : *parts_) {
            if (!key.dot.empty()) continue;
            if (name == "omega") {
                for (auto& [m, c] : poly)
                    if (m.r_pow > 0 && m.omega_pow != 0)
                        s += detail::eps_monomial_value(key.eps, *pt_) * to_double(c) * m.r_pow *
                             m.omega_pow * std::pow(w_, m.omega_pow - 1) * std::pow(r, m.r_pow - 1);
            } else {
                double dtag = detail::eps_monomial_dparam(key.eps, *pt_, name);
                if (dtag != 0.0) s += dtag * detail::poly_eval_dr(poly, r, w_);
            }
        }
        return s;
    }

    /// Coefficient of d(name)/dt: the linear rate part, evaluated at r.
    double rate_coeff(const std::string& name, double r) const {
        double s = 0.0;
        for (auto& [key, poly] : *parts_) {
            if (key.dot != name) continue;
            s += detail::eps_monomial_value(key.eps, *pt_) * detail::poly_eval(poly, r, w_);
        }
        return s;
    }

    /// Full value with supplied rates (d(name)/dt under the same names).
    double value_with_rates(double r, const ParamPoint& rates) const {
        double s = 0.0;
        for (auto& [key, poly] : *parts_) {
            double tag = detail::eps_monomial_value(key.eps, *pt_);
            if (!key.dot.empty()) tag *= detail::point_value(rates, key.dot);
            if (tag != 0.0) s += tag * detail::poly_eval(poly, r, w_);
        }
        return s;
    }

    /// Restrictions to adiabatic tags of the given total eps degree.
    double value_of_degree(int degree, double r) const {
        return accumulate_degree(degree, r, [](const PolarPolynomial& p, double rr, double ww) {
            return detail::poly_eval(p, rr, ww);
        });
    }
    double d_dr_of_degree(int degree, double r) const {
        return accumulate_degree(degree, r, [](const PolarPolynomial& p, double rr, double ww) {
            return detail::poly_eval_dr(p, rr, ww);
        });
    }
    double d_drr_of_degree(int degree, double r) const {
        return accumulate_degree(degree, r, [](const PolarPolynomial& p, double rr, double ww) {
            return detail::poly_eval_drr(p, rr, ww);
        });
    }
    double d_dparam_of_degree(int degree, const std::string& name, double r) const {
        double s = 0.0;
        for (auto& [key, poly] : *parts_) {
            if (!key.dot.empty() || tag_degree(key) != degree) continue;
            if (name == "omega") {
                s += detail::eps_monomial_value(key.eps, *pt_) * detail::poly_eval_domega(poly, r, w_);
            } else {
                double dtag = detail::eps_monomial_dparam(key.eps, *pt_, name);
                if (dtag != 0.0) s += dtag * detail::poly_eval(poly, r, w_);
            }
        }
        return s;
    }
    double d_dr_dparam_of_degree(int degree, const std::string& name, double r) const {
        double s = 0.0;
        for (auto& [key, poly] : *parts_) {
            if (!key.dot.empty() || tag_degree(key) != degree) continue;
            if (name == "omega") {
                for (auto& [m, c] : poly)
                    if (m.r_pow > 0 && m.omega_pow != 0)
                        s += detail::eps_monomial_value(key.eps, *pt_) * to_double(c) * m.r_pow *
                             m.omega_pow * std::pow(w_, m.omega_pow - 1) * std::pow(r, m.r_pow - 1);
            } else {
                double dtag = detail::eps_monomial_dparam(key.eps, *pt_, name);
                if (dtag != 0.0) s += dtag * detail::poly_eval_dr(poly, r, w_);
            }
        }
        return s;
    }

    /// Smallest total eps degree among adiabatic tags (-1 when none).
    int min_adiabatic_degree() const {
        int best = -1;
        for (auto& [key, _] : *parts_) {
            if (!key.dot.empty()) continue;
            int d = tag_degree(key);
            if (best < 0 || d < best) best = d;
        }
        return best;
    }

  private:
    static int tag_degree(const FlowKey& key) {
        int d = 0;
        for (auto& [_, n] : key.eps) d += n;
        return d;
    }

    template <class F>
    double accumulate(double r, F&& per_poly) const {
        double s = 0.0;
        for (auto& [key, poly] : *parts_) {
            if (!key.dot.empty()) continue;
            double tag = detail::eps_monomial_value(key.eps, *pt_);
            if (tag != 0.0) s += tag * per_poly(poly, r, w_);
        }
        return s;
    }

    template <class F>
    double accumulate_degree(int degree, double r, F&& per_poly) const {
        double s = 0.0;
        for (auto& [key, poly] : *parts_) {
            if (!key.dot.empty() || tag_degree(key) != degree) continue;
            double tag = detail::eps_monomial_value(key.eps, *pt_);
            if (tag != 0.0) s += tag * per_poly(poly, r, w_);
        }
        return s;
    }

    const std::map<FlowKey, PolarPolynomial>* parts_;
    const ParamPoint* pt_;
    double w_;
};

// ---------------------------------------------------------------------------
// Printing
// ---------------------------------------------------------------------------

inline std::string polar_polynomial_string(const PolarPolynomial& poly) {
    if (poly.empty()) return "0";
    std::string out;
    for (auto& [m, c] : poly) {
        std::string piece = detail::paren_rational(c);
        piece += detail::omega_factor(m.omega_pow);
        piece += detail::pow_factor("r", m.r_pow);
        if (out.empty())
            out = piece;
        else if (piece[0] == '-')
            out += " - " + piece.substr(1);
        else
            out += " + " + piece;
    }
    return out;
}

inline std::string polar_system_string(const PolarRGSystem& sys) {
    auto side = [](const std::map<FlowKey, PolarPolynomial>& parts, const std::string& lhs) {
        if (parts.empty()) return lhs + " = 0";
        std::string out = lhs + " = ";
        bool first = true;
        for (auto& [key, poly] : parts) {
            std::string piece = flow_key_string(key) + "*( " + polar_polynomial_string(poly) + " )";
            out += first ? piece : " + " + piece;
            first = false;
        }
        return out;
    };
    return side(sys.f_parts, "dr/dt") + "\n" + side(sys.omega_parts, "dtheta/dt");
}

}  // namespace rgwb
