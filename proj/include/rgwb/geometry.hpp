#pragma once

#include "rgwb/polar.hpp"
#include "rgwb/protocol.hpp"

#include <array>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

namespace rgwb {

struct NoStableCycle : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct DegenerateCycle : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct StencilOutOfDomain : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct GeometryOptions {
    double r_max = 10.0;
    /// Keep only the cycle-shift channel, with every ingredient evaluated on
    /// the cycle of the minimal-order radial flow. This isolates the part of
    /// the connection that diverges as the dissipation scale goes to zero.
    bool singular_only = false;
};

namespace detail {

template <class F>
double bracketed_root(F&& fn, double r_max, const char* what) {
    const int samples = 4096;
    double prev_r = r_max / samples;
    double prev_f = fn(prev_r);
    for (int i = 2; i <= samples; ++i) {
        double r = r_max * i / samples;
        double fr = fn(r);
        if (prev_f > 0.0 && fr <= 0.0) {
            double lo = prev_r, hi = r;
            for (int it = 0; it < 200; ++it) {
                double mid = 0.5 * (lo + hi);
                if (mid <= lo || mid >= hi) break;
                if (fn(mid) > 0.0)
                    lo = mid;
                else
                    hi = mid;
            }
            return 0.5 * (lo + hi);
        }
        prev_r = r;
        prev_f = fr;
    }
    throw NoStableCycle(what);
}

// |df/dr| below this multiple of its term-magnitude scale makes the division
// in the connection meaningless. The second term bounds the derivative left
// over at a non-simple root whose position is only known to rounding noise.
inline double degenerate_slope_tol() {
    double e = std::numeric_limits<double>::epsilon();
    return std::max(1e-12, 4.0 * std::pow(e, 2.0 / 3.0));
}

}  // namespace detail

/// Radius of the stable limit cycle: the root of the adiabatic dr/dt with a
/// positive-to-negative sign change in (0, r_max], to 1e-12 relative accuracy.
inline double limit_cycle_radius(const PolarRGSystem& sys, const ParamPoint& eps,
                                 const GeometryOptions& opt = {}) {
    PolarSideEval f(sys.f_parts, eps);
    return detail::bracketed_root([&](double r) { return f.value(r); }, opt.r_max,
                                  "no stable limit cycle in (0, r_max]");
}

struct ConnectionSample {
    ParamPoint eps;
    std::array<double, 2> a{0.0, 0.0};
    double R = 0.0;
};

/// Geometric connection one-form at a parameter point:
///   a_i = (dR/deps_i - f'_{rate_i}) / f'_r * Omega'_r + Omega'_{rate_i}
/// with r-derivatives exact from the polynomials, dR/deps by implicit
/// differentiation, and rate coefficients read off the linear rate parts.
/// The adiabatic Omega never enters: it is dynamical phase, not geometry.
inline ConnectionSample connection(const PolarRGSystem& sys, const ParamPoint& eps,
                                   const std::array<std::string, 2>& loop_params,
                                   const GeometryOptions& opt = {}) {
    PolarSideEval f(sys.f_parts, eps);
    PolarSideEval om(sys.omega_parts, eps);

    ConnectionSample out;
    out.eps = eps;

    if (!opt.singular_only) {
        double R = detail::bracketed_root([&](double r) { return f.value(r); }, opt.r_max,
                                          "no stable limit cycle in (0, r_max]");
        double fr = f.d_dr(R);
        double scale = f.d_dr_scale(R);
        if (fr == 0.0 || std::abs(fr) < detail::degenerate_slope_tol() * scale)
            throw DegenerateCycle("df/dr vanishes at the limit cycle");
        double omr = om.d_dr(R);
        out.R = R;
        for (int i = 0; i < 2; ++i) {
            const std::string& name = loop_params[i];
            double dR = -f.d_dparam(name, R) / fr;
            out.a[i] = (dR - f.rate_coeff(name, R)) / fr * omr + om.rate_coeff(name, R);
            if (!std::isfinite(out.a[i]))
                throw DegenerateCycle("connection component is not finite at this point");
        }
        return out;
    }

    // Singular channel only. g = minimal-degree adiabatic part, ftilde = rest;
    // the cycle shift dR = -ftilde(R0)/g'_r(R0) is differentiated analytically
    // so structural cancellations (e.g. a radial flow proportional to its own
    // leading parameter) survive exactly.
    const int d0 = f.min_adiabatic_degree();
    if (d0 < 0) throw NoStableCycle("adiabatic radial flow is empty");
    double R0 = detail::bracketed_root([&](double r) { return f.value_of_degree(d0, r); }, opt.r_max,
                                       "no stable cycle of the leading-order radial flow");
    double gr = f.d_dr_of_degree(d0, R0);
    double grr = f.d_drr_of_degree(d0, R0);
    if (gr == 0.0) throw DegenerateCycle("leading-order df/dr vanishes at the cycle");
    double ft = f.value(R0) - f.value_of_degree(d0, R0);
    double ftr = f.d_dr(R0) - f.d_dr_of_degree(d0, R0);
    double omr = om.d_dr(R0);
    out.R = R0;
    for (int i = 0; i < 2; ++i) {
        const std::string& name = loop_params[i];
        double g_i = f.d_dparam_of_degree(d0, name, R0);
        double gri = f.d_dr_dparam_of_degree(d0, name, R0);
        double ft_i = f.d_dparam(name, R0) - f.d_dparam_of_degree(d0, name, R0);
        double dR0 = -g_i / gr;
        double dD = grr * dR0 + gri;
        double ddR = -((ftr * dR0 + ft_i) * gr - ft * dD) / (gr * gr);
        double dR = dR0 + ddR;
        out.a[i] = (dR - f.rate_coeff(name, R0)) / gr * omr;
        if (!std::isfinite(out.a[i]))
            throw DegenerateCycle("connection component is not finite at this point");
    }
    return out;
}

struct CurvatureResult {
    ParamPoint eps;
    std::array<double, 2> a{0.0, 0.0};
    double R = 0.0;
    double chi = 0.0;
    double h = 0.0;
    double richardson_err = 0.0;
};

/// chi = d a_2 / d eps_1 - d a_1 / d eps_2 by central differences with
/// relative steps h |eps_i|; the h/2 stencil gives the Richardson error
/// estimate. Stencil points that lose the cycle raise StencilOutOfDomain.
inline CurvatureResult curvature(const PolarRGSystem& sys, const ParamPoint& eps,
                                 const std::array<std::string, 2>& loop_params, double h = 1e-4,
                                 const GeometryOptions& opt = {}) {
    for (auto& name : loop_params)
        if (detail::point_value(eps, name) == 0.0)
            throw std::invalid_argument("curvature: loop parameter '" + name + "' is zero at the center");

    auto a_at = [&](const std::string& moved, double value, int component) {
        ParamPoint pt = eps;
        pt[moved] = value;
        try {
            return connection(sys, pt, loop_params, opt).a[component];
        } catch (const NoStableCycle& e) {
            throw StencilOutOfDomain(std::string("stencil point lost the cycle: ") + e.what());
        }
    };

    auto chi_at = [&](double rel) {
        double e1 = detail::point_value(eps, loop_params[0]);
        double e2 = detail::point_value(eps, loop_params[1]);
        double h1 = rel * std::abs(e1), h2 = rel * std::abs(e2);
        double da2 = (a_at(loop_params[0], e1 + h1, 1) - a_at(loop_params[0], e1 - h1, 1)) / (2 * h1);
        double da1 = (a_at(loop_params[1], e2 + h2, 0) - a_at(loop_params[1], e2 - h2, 0)) / (2 * h2);
        return da2 - da1;
    };

    CurvatureResult out;
    ConnectionSample center = connection(sys, eps, loop_params, opt);
    out.eps = center.eps;
    out.a = center.a;
    out.R = center.R;
    out.h = h;
    double chi_h = chi_at(h);
    double chi_h2 = chi_at(h / 2);
    out.chi = chi_h;
    out.richardson_err = std::abs(chi_h2 - chi_h) / 3.0;
    return out;
}

/// Loop phase predicted from the connection. The small-loop form is
/// orientation * pi * delta1 * delta2 * chi at the ellipse center; the exact
/// form integrates a . deps around the loop with the periodic trapezoid rule
/// (doubling the grid until converged). `base` supplies the values of every
/// parameter the loop does not move (at least "omega").
enum class LoopPhaseMode { SmallLoop, LineIntegral };

inline double predicted_loop_phase(const PolarRGSystem& sys, const CycleProtocol& proto,
                                   const ParamPoint& base = {},
                                   LoopPhaseMode mode = LoopPhaseMode::SmallLoop,
                                   const GeometryOptions& opt = {}, double h = 1e-4) {
    proto.validate();
    const std::array<std::string, 2> names{proto.param1, proto.param2};
    ParamPoint center = base;
    center[proto.param1] = proto.center1_value();
    center[proto.param2] = to_double(proto.center2);

    if (mode == LoopPhaseMode::SmallLoop) {
        ParamPoint pt = center;
        CurvatureResult c = curvature(sys, pt, names, h, opt);
        return proto.orientation * M_PI * to_double(proto.delta1) * to_double(proto.delta2) * c.chi;
    }

    const double d1 = to_double(proto.delta1), d2 = to_double(proto.delta2);
    auto integrand = [&](double phi) {
        ParamPoint pt = center;
        pt[proto.param1] += d1 * std::cos(phi);
        pt[proto.param2] += proto.orientation * d2 * std::sin(phi);
        ConnectionSample s = connection(sys, pt, names, opt);
        double de1 = -d1 * std::sin(phi);
        double de2 = proto.orientation * d2 * std::cos(phi);
        return s.a[0] * de1 + s.a[1] * de2;
    };
    int n = 32;
    double prev = 0.0;
    for (int pass = 0;; ++pass) {
        double sum = 0.0;
        for (int k = 0; k < n; ++k) sum += integrand(2 * M_PI * k / n);
        double integral = sum * 2 * M_PI / n;
        if (pass > 0 && std::abs(integral - prev) <= 1e-10 * std::max(1e-30, std::abs(integral)) + 1e-14)
            return integral;
        if (n >= 4096) return integral;
        prev = integral;
        n *= 2;
    }
}

}  // namespace rgwb
