#pragma once

#include "rgwb/rational.hpp"

#include <algorithm>
#include <cctype>
#include <map>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace rgwb {

struct ParseError : std::runtime_error {
    int line, column;
    ParseError(const std::string& msg, int l, int c)
        : std::runtime_error(msg + " (line " + std::to_string(l) + ", column " + std::to_string(c) + ")"),
          line(l),
          column(c) {}
};

struct ModelError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// One monomial of the oscillator nonlinearity: coeff * eps_param * y^y_pow * ydot^ydot_pow.
/// Every monomial carries exactly one power of one small parameter.
struct NonlinearityTerm {
    std::string param;
    Rational coeff;
    int y_pow = 0;
    int ydot_pow = 0;
};

struct ParamSpec {
    std::string name;
    std::optional<Rational> value;
    bool time_dependent = false;
};

/// Oscillator definition  y'' + w^2 y = sum_i eps_i f_i(y, y'),
/// together with the lattice of eps monomials kept in the expansion.
struct ModelSpec {
    std::optional<Rational> omega_value;
    bool omega_time_dependent = false;
    std::vector<ParamSpec> params;
    std::vector<NonlinearityTerm> nonlinearity;
    std::vector<std::map<std::string, int>> orders;
    bool vdp_omega_iteration = false;

    const ParamSpec* find_param(const std::string& name) const {
        for (auto& p : params)
            if (p.name == name) return &p;
        return nullptr;
    }

    int max_order() const {
        int d = 0;
        for (auto& mono : orders) {
            int t = 0;
            for (auto& [_, n] : mono) t += n;
            d = std::max(d, t);
        }
        return d;
    }

    double omega() const {
        if (!omega_value) throw ModelError("model has no numeric omega value");
        return to_double(*omega_value);
    }

    double param_value(const std::string& name) const {
        const ParamSpec* p = find_param(name);
        if (!p || !p->value) throw ModelError("parameter '" + name + "' has no numeric value");
        return to_double(*p->value);
    }

    /// True when the full nonlinearity is exactly (1 - y^2) y' carried by a
    /// single parameter; required before the O(mu dw/dt) iteration rule applies.
    bool is_pure_vdp(std::string* vdp_param = nullptr) const {
        if (nonlinearity.size() != 2) return false;
        const NonlinearityTerm *lin = nullptr, *cub = nullptr;
        for (auto& t : nonlinearity) {
            if (t.y_pow == 0 && t.ydot_pow == 1) lin = &t;
            if (t.y_pow == 2 && t.ydot_pow == 1) cub = &t;
        }
        if (!lin || !cub || lin->param != cub->param) return false;
        if (lin->coeff != Rational(1) || cub->coeff != Rational(-1)) return false;
        if (vdp_param) *vdp_param = lin->param;
        return true;
    }

    void validate() const {
        if (params.empty()) throw ModelError("model declares no small parameters");
        for (auto& p : params)
            if (p.name == "omega" || p.name == "y" || p.name == "ydot" || p.name == "t")
                throw ModelError("reserved name used as parameter: " + p.name);
        for (auto& t : nonlinearity) {
            if (!find_param(t.param)) throw ModelError("nonlinearity uses undeclared parameter " + t.param);
            if (t.y_pow < 0 || t.ydot_pow < 0) throw ModelError("negative power in nonlinearity");
        }
        if (orders.empty()) throw ModelError("model keeps no expansion orders");
        if (max_order() < 1) throw ModelError("expansion order must be at least 1");
        auto in_orders = [&](const std::map<std::string, int>& m) {
            return std::find(orders.begin(), orders.end(), m) != orders.end();
        };
        for (auto& mono : orders) {
            int total = 0;
            for (auto& [name, n] : mono) {
                if (!find_param(name)) throw ModelError("orders use undeclared parameter " + name);
                if (n < 1) throw ModelError("order monomial with non-positive power");
                total += n;
            }
            if (total < 1) throw ModelError("empty order monomial");
            // Each proper divisor monomial must be kept too: the inhomogeneity
            // at a given order is assembled from all lower ones.
            for (auto& [name, n] : mono) {
                for (int k = 1; k < total; ++k) {
                    if (k > n) break;
                    std::map<std::string, int> div = mono;
                    div[name] -= k;
                    if (div[name] == 0) div.erase(name);
                    if (!in_orders(div))
                        throw ModelError("order lattice is not divisor-closed (missing a lower order)");
                }
            }
        }
        for (auto& p : params) {
            if (!p.time_dependent) continue;
            std::map<std::string, int> first{{p.name, 1}};
            if (!in_orders(first))
                throw ModelError("time-dependent parameter " + p.name +
                                 " needs its first order kept in the expansion");
        }
        if (vdp_omega_iteration && !is_pure_vdp())
            throw ModelError("vdp_omega_iteration requires the exact (1 - y^2)*ydot nonlinearity");
    }
};

// ---------------------------------------------------------------------------
// Text format
//
//   # Van der Pol
//   omega = 2 [time_dependent]
//   param mu = 0.1 [time_dependent]
//   nonlinearity = mu*(1 - y^2)*ydot
//   orders = mu, mu^2
//   option vdp_omega_iteration
//
// The nonlinearity is any polynomial in y, ydot and the declared parameters
// with exact rational literals; after expansion each monomial must be linear
// in the parameters.
// ---------------------------------------------------------------------------

namespace detail {

// Polynomial in (eps..., y, ydot) used only while parsing.
struct PolyKey {
    std::map<std::string, int> eps;
    int y = 0, ydot = 0;
    auto operator<=>(const PolyKey&) const = default;
};
using Poly = std::map<PolyKey, Rational>;

inline void poly_add_term(Poly& a, const PolyKey& k, const Rational& c) {
    if (c == 0) return;
    auto [it, fresh] = a.try_emplace(k, c);
    if (!fresh) {
        it->second += c;
        if (it->second == 0) a.erase(it);
    }
}

inline void poly_add(Poly& a, const Poly& b) {
    for (auto& [k, c] : b) poly_add_term(a, k, c);
}

inline Poly poly_mul(const Poly& a, const Poly& b) {
    Poly r;
    for (auto& [ka, ca] : a)
        for (auto& [kb, cb] : b) {
            PolyKey k = ka;
            for (auto& [n, p] : kb.eps) k.eps[n] += p;
            k.y += kb.y;
            k.ydot += kb.ydot;
            poly_add_term(r, k, ca * cb);
        }
    return r;
}

class ExprParser {
  public:
    ExprParser(const std::string& text, int line, int col0) : text_(text), line_(line), col0_(col0) {}

    Poly parse() {
        Poly p = expr();
        skip_ws();
        if (pos_ != text_.size()) fail("trailing input in expression");
        return p;
    }

  private:
    const std::string& text_;
    std::size_t pos_ = 0;
    int line_, col0_;

    [[noreturn]] void fail(const std::string& msg) const {
        throw ParseError(msg, line_, col0_ + static_cast<int>(pos_));
    }
    void skip_ws() {
        while (pos_ < text_.size() && std::isspace(static_cast<unsigned char>(text_[pos_]))) ++pos_;
    }
    bool eat(char c) {
        skip_ws();
        if (pos_ < text_.size() && text_[pos_] == c) {
            ++pos_;
            return true;
        }
        return false;
    }

    Poly expr() {
        skip_ws();
        bool neg = false;
        while (eat('-')) neg = !neg;
        Poly p = term();
        if (neg) p = poly_mul(minus_one(), p);
        for (;;) {
            skip_ws();
            if (eat('+')) {
                poly_add(p, term());
            } else if (eat('-')) {
                poly_add(p, poly_mul(minus_one(), term()));
            } else {
                return p;
            }
        }
    }

    Poly term() {
        Poly p = factor();
        for (;;) {
            skip_ws();
            if (eat('*'))
                p = poly_mul(p, factor());
            else
                return p;
        }
    }

    Poly factor() {
        Poly base = atom();
        skip_ws();
        if (eat('^')) {
            skip_ws();
            std::string digits;
            while (pos_ < text_.size() && std::isdigit(static_cast<unsigned char>(text_[pos_])))
                digits += text_[pos_++];
            if (digits.empty()) fail("expected integer exponent after '^'");
            int n = std::stoi(digits);
            Poly r = one();
            for (int k = 0; k < n; ++k) r = poly_mul(r, base);
            return r;
        }
        return base;
    }

    Poly atom() {
        skip_ws();
        if (pos_ >= text_.size()) fail("unexpected end of expression");
        char c = text_[pos_];
        if (c == '(') {
            ++pos_;
            Poly p = expr();
            if (!eat(')')) fail("missing ')'");
            return p;
        }
        if (c == '-') {
            ++pos_;
            return poly_mul(minus_one(), factor());
        }
        if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') {
            std::string lit;
            while (pos_ < text_.size()) {
                char d = text_[pos_];
                if (std::isdigit(static_cast<unsigned char>(d)) || d == '.' || d == '/' || d == 'e' ||
                    d == 'E') {
                    // exponent sign
                    if ((d == 'e' || d == 'E') && pos_ + 1 < text_.size() &&
                        (text_[pos_ + 1] == '+' || text_[pos_ + 1] == '-')) {
                        lit += d;
                        lit += text_[pos_ + 1];
                        pos_ += 2;
                        continue;
                    }
                    lit += d;
                    ++pos_;
                } else {
                    break;
                }
            }
            Rational r;
            try {
                r = parse_rational(lit);
            } catch (const std::invalid_argument&) {
                fail("bad numeric literal '" + lit + "'");
            }
            Poly p;
            p[PolyKey{}] = r;
            return p;
        }
        if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
            std::string name;
            while (pos_ < text_.size() &&
                   (std::isalnum(static_cast<unsigned char>(text_[pos_])) || text_[pos_] == '_'))
                name += text_[pos_++];
            Poly p;
            PolyKey k;
            if (name == "y")
                k.y = 1;
            else if (name == "ydot")
                k.ydot = 1;
            else
                k.eps[name] = 1;
            p[k] = Rational(1);
            return p;
        }
        fail(std::string("unexpected character '") + c + "'");
    }

    static Poly one() {
        Poly p;
        p[PolyKey{}] = Rational(1);
        return p;
    }
    static Poly minus_one() {
        Poly p;
        p[PolyKey{}] = Rational(-1);
        return p;
    }
};

inline std::string trim(const std::string& s) {
    std::size_t a = s.find_first_not_of(" \t\r\n");
    if (a == std::string::npos) return "";
    std::size_t b = s.find_last_not_of(" \t\r\n");
    return s.substr(a, b - a + 1);
}

inline std::vector<std::string> split(const std::string& s, char sep) {
    std::vector<std::string> out;
    std::string cur;
    for (char c : s) {
        if (c == sep) {
            out.push_back(cur);
            cur.clear();
        } else {
            cur += c;
        }
    }
    out.push_back(cur);
    return out;
}

}  // namespace detail

inline ModelSpec parse_model(const std::string& text) {
    ModelSpec model;
    std::istringstream in(text);
    std::string raw;
    int lineno = 0;
    bool have_nonlinearity = false;
    while (std::getline(in, raw)) {
        ++lineno;
        std::string line = raw;
        auto hash = line.find('#');
        if (hash != std::string::npos) line = line.substr(0, hash);
        line = detail::trim(line);
        if (line.empty()) continue;

        auto take_flag = [&](std::string& rhs, const std::string& flag) {
            auto p = rhs.find("[" + flag + "]");
            if (p == std::string::npos) return false;
            rhs.erase(p, flag.size() + 2);
            rhs = detail::trim(rhs);
            return true;
        };

        if (line.rfind("option", 0) == 0) {
            std::string opt = detail::trim(line.substr(6));
            if (opt == "vdp_omega_iteration")
                model.vdp_omega_iteration = true;
            else
                throw ParseError("unknown option '" + opt + "'", lineno, 1);
            continue;
        }

        auto eq = line.find('=');
        if (line.rfind("param", 0) == 0) {
            std::string rest = detail::trim(line.substr(5));
            ParamSpec p;
            if (eq == std::string::npos) {
                p.time_dependent = take_flag(rest, "time_dependent");
                p.name = detail::trim(rest);
            } else {
                std::string lhs = detail::trim(line.substr(5, line.find('=') - 5));
                std::string rhs = detail::trim(line.substr(line.find('=') + 1));
                p.time_dependent = take_flag(rhs, "time_dependent");
                p.name = lhs;
                if (!rhs.empty()) {
                    try {
                        p.value = parse_rational(rhs);
                    } catch (const std::invalid_argument&) {
                        throw ParseError("bad parameter value '" + rhs + "'", lineno,
                                         static_cast<int>(line.find('=')) + 2);
                    }
                }
            }
            if (p.name.empty()) throw ParseError("parameter without a name", lineno, 1);
            model.params.push_back(std::move(p));
            continue;
        }

        if (eq == std::string::npos) throw ParseError("expected 'key = value'", lineno, 1);
        std::string key = detail::trim(line.substr(0, eq));
        std::string rhs = detail::trim(line.substr(eq + 1));

        if (key == "omega") {
            model.omega_time_dependent = take_flag(rhs, "time_dependent");
            if (!rhs.empty()) {
                try {
                    model.omega_value = parse_rational(rhs);
                } catch (const std::invalid_argument&) {
                    throw ParseError("bad omega value '" + rhs + "'", lineno, static_cast<int>(eq) + 2);
                }
            }
        } else if (key == "nonlinearity") {
            detail::ExprParser parser(rhs, lineno, static_cast<int>(eq) + 2);
            detail::Poly poly = parser.parse();
            for (auto& [k, c] : poly) {
                int deg = 0;
                std::string pname;
                for (auto& [name, n] : k.eps) {
                    deg += n;
                    pname = name;
                }
                if (deg != 1)
                    throw ParseError("nonlinearity monomial must be linear in the small parameters", lineno,
                                     static_cast<int>(eq) + 2);
                model.nonlinearity.push_back(NonlinearityTerm{pname, c, k.y, k.ydot});
            }
            have_nonlinearity = true;
        } else if (key == "orders") {
            for (auto& piece : detail::split(rhs, ',')) {
                std::string mono = detail::trim(piece);
                if (mono.empty()) throw ParseError("empty entry in orders list", lineno, 1);
                detail::ExprParser parser(mono, lineno, 1);
                detail::Poly poly = parser.parse();
                if (poly.size() != 1) throw ParseError("orders entries must be single monomials", lineno, 1);
                auto& [k, c] = *poly.begin();
                if (c != Rational(1) || k.y != 0 || k.ydot != 0)
                    throw ParseError("orders entries must be parameter monomials", lineno, 1);
                model.orders.push_back(k.eps);
            }
        } else if (key == "max_order") {
            int n = 0;
            try {
                n = std::stoi(rhs);
            } catch (...) {
                throw ParseError("bad max_order '" + rhs + "'", lineno, static_cast<int>(eq) + 2);
            }
            if (n < 1) throw ParseError("max_order must be >= 1", lineno, static_cast<int>(eq) + 2);
            model.orders.clear();
            // All monomials in the declared parameters up to total degree n.
            // Parameters must be declared before this line.
            std::vector<std::map<std::string, int>> frontier{{}};
            for (int d = 1; d <= n; ++d) {
                std::vector<std::map<std::string, int>> next;
                for (auto& mono : frontier)
                    for (auto& p : model.params) {
                        auto m = mono;
                        m[p.name] += 1;
                        if (std::find(next.begin(), next.end(), m) == next.end()) next.push_back(m);
                    }
                for (auto& m : next)
                    if (std::find(model.orders.begin(), model.orders.end(), m) == model.orders.end())
                        model.orders.push_back(m);
                frontier = std::move(next);
            }
        } else {
            throw ParseError("unknown key '" + key + "'", lineno, 1);
        }
    }
    if (!have_nonlinearity && !model.nonlinearity.empty()) throw ModelError("internal: nonlinearity state");
    model.validate();
    return model;
}

inline std::string format_eps_monomial(const std::map<std::string, int>& mono) {
    if (mono.empty()) return "1";
    std::string s;
    for (auto& [name, n] : mono) {
        if (!s.empty()) s += "*";
        s += name;
        if (n > 1) s += "^" + std::to_string(n);
    }
    return s;
}

/// Canonical text form; parse(emit(m)) == m.
inline std::string emit_model(const ModelSpec& m) {
    std::string out;
    out += "omega";
    if (m.omega_value || m.omega_time_dependent) {
        out += " =";
        if (m.omega_value) out += " " + m.omega_value->str();
        if (m.omega_time_dependent) out += " [time_dependent]";
    } else {
        out += " =";
    }
    out += "\n";
    for (auto& p : m.params) {
        out += "param " + p.name;
        if (p.value) out += " = " + p.value->str();
        if (p.time_dependent) out += p.value ? " [time_dependent]" : " = [time_dependent]";
        out += "\n";
    }
    out += "nonlinearity =";
    bool first = true;
    for (auto& t : m.nonlinearity) {
        std::string mono = t.param;
        if (t.y_pow > 0) mono += "*y" + (t.y_pow > 1 ? "^" + std::to_string(t.y_pow) : "");
        if (t.ydot_pow > 0) mono += "*ydot" + (t.ydot_pow > 1 ? "^" + std::to_string(t.ydot_pow) : "");
        Rational c = t.coeff;
        std::string sign = c < 0 ? "-" : "+";
        if (c < 0) c = -c;
        std::string cs = c == 1 ? "" : c.str() + "*";
        if (first && sign == "+")
            out += " " + cs + mono;
        else
            out += " " + sign + " " + cs + mono;
        first = false;
    }
    out += "\n";
    out += "orders =";
    first = true;
    for (auto& mono : m.orders) {
        out += first ? " " : ", ";
        out += format_eps_monomial(mono);
        first = false;
    }
    out += "\n";
    if (m.vdp_omega_iteration) out += "option vdp_omega_iteration\n";
    return out;
}

}  // namespace rgwb
