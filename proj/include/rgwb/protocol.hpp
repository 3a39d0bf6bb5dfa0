#pragma once

#include "rgwb/model.hpp"

#include <cmath>
#include <sstream>
#include <stdexcept>
#include <string>

namespace rgwb {

/// Closed loop in a two-parameter plane:
///   p1(t) = start1 + delta1 * (cos(2 pi s) - 1)
///   p2(t) = center2 + orientation * delta2 * sin(2 pi s),   s = (t - t0)/T
/// so both parameters move continuously out of (start1, center2). The loop is
/// an ellipse centered at (start1 - delta1, center2) with semi-axes
/// (delta1, delta2); orientation +1 walks it counterclockwise.
struct CycleProtocol {
    std::string param1, param2;  // param2 may be "omega"
    Rational start1{0}, delta1{0};
    Rational center2{0}, delta2{0};
    Rational T{0};
    int orientation = 1;
    Rational relax_time{0};   // before the loop, at frozen start values
    Rational settle_time{0};  // after the loop, before the phase readout
    Rational tol{Rational(1, 10000000000LL) / 10};  // 1e-11
    int crossing_margin = 2;  // full periods past the settle point before readout

    double center1_value() const { return to_double(start1) - to_double(delta1); }

    void validate() const {
        if (param1.empty() || param2.empty()) throw ModelError("protocol: missing loop parameter names");
        if (param1 == param2) throw ModelError("protocol: loop parameters must differ");
        if (T <= 0) throw ModelError("protocol: loop period must be positive");
        if (delta1 < 0 || delta2 < 0) throw ModelError("protocol: radii must be nonnegative");
        if (orientation != 1 && orientation != -1) throw ModelError("protocol: orientation must be +-1");
        if (relax_time < 0 || settle_time < 0) throw ModelError("protocol: negative wait time");
        double t = to_double(tol);
        if (!(t >= 1e-13 && t <= 1e-6)) throw ModelError("protocol: tol outside [1e-13, 1e-6]");
    }
};

inline CycleProtocol parse_protocol(const std::string& text) {
    CycleProtocol p;
    std::istringstream in(text);
    std::string raw;
    int lineno = 0;
    while (std::getline(in, raw)) {
        ++lineno;
        std::string line = raw;
        auto hash = line.find('#');
        if (hash != std::string::npos) line = line.substr(0, hash);
        line = detail::trim(line);
        if (line.empty()) continue;
        auto eq = line.find('=');
        if (eq == std::string::npos) throw ParseError("expected 'key = value'", lineno, 1);
        std::string key = detail::trim(line.substr(0, eq));
        std::string rhs = detail::trim(line.substr(eq + 1));
        auto num = [&]() {
            try {
                return parse_rational(rhs);
            } catch (const std::invalid_argument&) {
                throw ParseError("bad numeric value '" + rhs + "'", lineno, static_cast<int>(eq) + 2);
            }
        };
        if (key == "param1")
            p.param1 = rhs;
        else if (key == "param2")
            p.param2 = rhs;
        else if (key == "start1")
            p.start1 = num();
        else if (key == "delta1")
            p.delta1 = num();
        else if (key == "center2")
            p.center2 = num();
        else if (key == "delta2")
            p.delta2 = num();
        else if (key == "T")
            p.T = num();
        else if (key == "relax_time")
            p.relax_time = num();
        else if (key == "settle_time")
            p.settle_time = num();
        else if (key == "tol")
            p.tol = num();
        else if (key == "crossing_margin")
            p.crossing_margin = static_cast<int>(to_double(num()));
        else if (key == "orientation") {
            if (rhs == "ccw")
                p.orientation = 1;
            else if (rhs == "cw")
                p.orientation = -1;
            else
                throw ParseError("orientation must be ccw or cw", lineno, static_cast<int>(eq) + 2);
        } else {
            throw ParseError("unknown key '" + key + "'", lineno, 1);
        }
    }
    p.validate();
    return p;
}

/// Canonical text form; parse(emit(p)) == p.
inline std::string emit_protocol(const CycleProtocol& p) {
    std::string out;
    out += "param1 = " + p.param1 + "\n";
    out += "start1 = " + p.start1.str() + "\n";
    out += "delta1 = " + p.delta1.str() + "\n";
    out += "param2 = " + p.param2 + "\n";
    out += "center2 = " + p.center2.str() + "\n";
    out += "delta2 = " + p.delta2.str() + "\n";
    out += "T = " + p.T.str() + "\n";
    out += "orientation = " + std::string(p.orientation == 1 ? "ccw" : "cw") + "\n";
    out += "relax_time = " + p.relax_time.str() + "\n";
    out += "settle_time = " + p.settle_time.str() + "\n";
    out += "tol = " + p.tol.str() + "\n";
    out += "crossing_margin = " + std::to_string(p.crossing_margin) + "\n";
    return out;
}

inline bool operator==(const CycleProtocol& a, const CycleProtocol& b) {
    return a.param1 == b.param1 && a.param2 == b.param2 && a.start1 == b.start1 && a.delta1 == b.delta1 &&
           a.center2 == b.center2 && a.delta2 == b.delta2 && a.T == b.T && a.orientation == b.orientation &&
           a.relax_time == b.relax_time && a.settle_time == b.settle_time && a.tol == b.tol &&
           a.crossing_margin == b.crossing_margin;
}

}  // namespace rgwb
