#pragma once

#include "rgwb/dop853.hpp"
#include "rgwb/geometry.hpp"
#include "rgwb/model.hpp"
#include "rgwb/polar.hpp"
#include "rgwb/protocol.hpp"

#include <algorithm>
#include <array>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <functional>
#include <limits>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

namespace rgwb {

struct CrossingMismatch : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// ---------------------------------------------------------------------------
// Parameter schedules
// ---------------------------------------------------------------------------

/// Instantaneous parameter values and rates, indexed like ModelSpec::params.
struct ParamSet {
    static constexpr std::size_t kMax = 8;
    std::array<double, kMax> values{};
    std::array<double, kMax> rates{};
    double omega = 0.0;
    double omega_rate = 0.0;
};

using Schedule = std::function<void(double, ParamSet&)>;

struct ScheduleInfo {
    Schedule eval;
    std::vector<double> breakpoints;  // integration restarts here
};

inline int param_index(const ModelSpec& model, const std::string& name) {
    for (std::size_t i = 0; i < model.params.size(); ++i)
        if (model.params[i].name == name) return static_cast<int>(i);
    return -1;
}

/// All parameters frozen at their model values.
inline ScheduleInfo constant_schedule(const ModelSpec& model) {
    ParamSet base;
    base.omega = model.omega();
    for (std::size_t i = 0; i < model.params.size(); ++i)
        base.values[i] = model.param_value(model.params[i].name);
    return {[base](double, ParamSet& out) { out = base; }, {}};
}

/// The loop protocol: frozen start values outside [t0, t0+T], the cos/sin
/// ellipse inside. Orientation multiplies the protocol's own sign.
inline ScheduleInfo loop_schedule(const ModelSpec& model, const CycleProtocol& proto, double t0,
                                  int orientation_sign) {
    proto.validate();
    ParamSet base;
    base.omega = model.omega();
    for (std::size_t i = 0; i < model.params.size(); ++i) {
        auto& p = model.params[i];
        base.values[i] = p.value ? to_double(*p.value) : 0.0;
    }
    const int i1 = proto.param1 == "omega" ? -1 : param_index(model, proto.param1);
    const int i2 = proto.param2 == "omega" ? -1 : param_index(model, proto.param2);
    if (proto.param1 != "omega" && i1 < 0)
        throw ModelError("protocol parameter '" + proto.param1 + "' not in model");
    if (proto.param2 != "omega" && i2 < 0)
        throw ModelError("protocol parameter '" + proto.param2 + "' not in model");

    const double s1 = to_double(proto.start1), d1 = to_double(proto.delta1);
    const double c2v = to_double(proto.center2), d2 = to_double(proto.delta2);
    const double T = to_double(proto.T);
    const int sign = proto.orientation * orientation_sign;

    auto eval = [=](double t, ParamSet& out) {
        out = base;
        double v1 = s1, v2 = c2v, r1 = 0.0, r2 = 0.0;
        if (t >= t0 && t <= t0 + T) {
            double phase = 2.0 * M_PI * (t - t0) / T;
            double rate = 2.0 * M_PI / T;
            v1 = s1 + d1 * (std::cos(phase) - 1.0);
            r1 = -d1 * rate * std::sin(phase);
            v2 = c2v + sign * d2 * std::sin(phase);
            r2 = sign * d2 * rate * std::cos(phase);
        }
        if (i1 >= 0) {
            out.values[i1] = v1;
            out.rates[i1] = r1;
        } else {
            out.omega = v1;
            out.omega_rate = r1;
        }
        if (i2 >= 0) {
            out.values[i2] = v2;
            out.rates[i2] = r2;
        } else {
            out.omega = v2;
            out.omega_rate = r2;
        }
    };
    return {eval, {t0, t0 + T}};
}

// ---------------------------------------------------------------------------
// Direct integration of the oscillator
// ---------------------------------------------------------------------------

/// Model nonlinearity flattened to index-based terms for the inner loop.
struct CompiledModel {
    struct Term {
        int param;
        double coeff;
        int y_pow, ydot_pow;
    };
    std::vector<Term> terms;
    std::size_t n_params = 0;
};

inline CompiledModel compile_model(const ModelSpec& model) {
    model.validate();
    if (model.params.size() > ParamSet::kMax) throw ModelError("too many parameters");
    CompiledModel cm;
    cm.n_params = model.params.size();
    for (auto& t : model.nonlinearity)
        cm.terms.push_back({param_index(model, t.param), to_double(t.coeff), t.y_pow, t.ydot_pow});
    return cm;
}

/// y'' + w(t)^2 y = sum eps_i(t) f_i(y, y') as a first-order system in (y, y').
inline Dop853<2>::Rhs oscillator_rhs(const CompiledModel& cm, const Schedule& schedule) {
    return [&cm, schedule](double t, const std::array<double, 2>& y, std::array<double, 2>& dydt) {
        ParamSet ps;
        schedule(t, ps);
        double force = -ps.omega * ps.omega * y[0];
        for (auto& term : cm.terms) {
            double v = ps.values[term.param] * term.coeff;
            for (int k = 0; k < term.y_pow; ++k) v *= y[0];
            for (int k = 0; k < term.ydot_pow; ++k) v *= y[1];
            force += v;
        }
        dydt[0] = y[1];
        dydt[1] = force;
    };
}

/// Integrate the oscillator over [t_begin, t_end], restarting at schedule
/// breakpoints, feeding every accepted step to the observer.
template <class Observer>
void integrate_model(const ModelSpec& model, const ScheduleInfo& schedule, double t_begin, double t_end,
                     double tol, std::array<double, 2>& state, Observer&& observer) {
    if (!(tol >= 1e-13 && tol <= 1e-6)) throw std::invalid_argument("tol outside [1e-13, 1e-6]");
    CompiledModel cm = compile_model(model);
    Dop853<2>::Options opt;
    opt.rtol = tol;
    opt.atol = tol;
    Dop853<2> solver(oscillator_rhs(cm, schedule.eval), opt);

    std::vector<double> cuts{t_begin};
    for (double b : schedule.breakpoints)
        if (b > t_begin && b < t_end) cuts.push_back(b);
    cuts.push_back(t_end);
    std::sort(cuts.begin(), cuts.end());

    for (std::size_t i = 0; i + 1 < cuts.size(); ++i) {
        solver.integrate(cuts[i], state, cuts[i + 1],
                         [&](const Dop853<2>::DenseStep& step, double t, const std::array<double, 2>& y) {
                             state = y;
                             observer(step, t, y);
                         });
    }
}

// ---------------------------------------------------------------------------
// Zero-crossing phase measurement
// ---------------------------------------------------------------------------

struct PhaseMeasurement {
    double t_plus = std::numeric_limits<double>::quiet_NaN();
    double t_minus = std::numeric_limits<double>::quiet_NaN();
    long crossing_index = -1;
    double theta = std::numeric_limits<double>::quiet_NaN();
    double T = 0.0;
};

namespace detail {

/// Upward (y' > 0) zero crossings of y located on dense output, recorded
/// from `t_from` on.
class CrossingRecorder {
  public:
    CrossingRecorder(double t_from, double time_tol) : t_from_(t_from), tol_(time_tol) {}

    void operator()(const Dop853<2>::DenseStep& step, double /*t*/, const std::array<double, 2>&) {
        double ya = step.value(0, step.t0);
        double yb = step.value(0, step.t1);
        if (!(ya < 0.0 && yb >= 0.0)) return;
        double lo = step.t0, hi = step.t1;
        // Bisection gets within Newton's basin; Newton polishes.
        for (int i = 0; i < 40 && hi - lo > tol_; ++i) {
            double mid = 0.5 * (lo + hi);
            if (step.value(0, mid) < 0.0)
                lo = mid;
            else
                hi = mid;
        }
        double root = 0.5 * (lo + hi);
        for (int i = 0; i < 4; ++i) {
            double fv = step.value(0, root);
            double dv = step.derivative(0, root);
            if (dv == 0.0) break;
            double next = root - fv / dv;
            if (next < step.t0 || next > step.t1) break;
            if (std::abs(next - root) < 0.25 * tol_) {
                root = next;
                break;
            }
            root = next;
        }
        if (root >= t_from_ && step.derivative(0, root) > 0.0) times_.push_back(root);
    }

    const std::vector<double>& times() const { return times_; }

  private:
    double t_from_, tol_;
    std::vector<double> times_;
};

}  // namespace detail

/// One traversal of the protocol loop with the given orientation sign;
/// returns the upward-crossing timestamps counted from loop start.
inline std::vector<double> run_cycle(const ModelSpec& model, const CycleProtocol& proto,
                                     int orientation_sign) {
    const double omega0 = model.omega();
    const double t0 = to_double(proto.relax_time);
    const double T = to_double(proto.T);
    const double settle = to_double(proto.settle_time);
    const double period = 2.0 * M_PI / omega0;
    const double t_end = t0 + T + settle + (proto.crossing_margin + 4) * period;

    ScheduleInfo sched = loop_schedule(model, proto, t0, orientation_sign);
    detail::CrossingRecorder rec(t0, 1e-10 / omega0);
    std::array<double, 2> state{2.0, 0.0};  // default on-cycle start
    integrate_model(model, sched, 0.0, t_end, to_double(proto.tol), state, rec);
    return rec.times();
}

/// Pairing of the two crossing lists: both runs must agree on the count at
/// loop end, and the phase is read off the first common crossing past
/// `t_pick`:  theta = omega0 (t_minus - t_plus) / 2.
inline PhaseMeasurement pair_phase_from_crossings(const std::vector<double>& plus,
                                                  const std::vector<double>& minus, double t_loop_end,
                                                  double t_pick, double omega0) {
    auto count_until = [](const std::vector<double>& v, double t) {
        return static_cast<long>(std::lower_bound(v.begin(), v.end(), t) - v.begin());
    };
    long n_plus = count_until(plus, t_loop_end);
    long n_minus = count_until(minus, t_loop_end);
    if (n_plus != n_minus)
        throw CrossingMismatch("loop traversals disagree on the oscillation count (" +
                               std::to_string(n_plus) + " vs " + std::to_string(n_minus) + ")");

    long idx = count_until(plus, t_pick);
    if (idx >= static_cast<long>(plus.size()) || idx >= static_cast<long>(minus.size()))
        throw CrossingMismatch("no usable crossing past the settle window");

    PhaseMeasurement m;
    m.crossing_index = idx;
    m.t_plus = plus[idx];
    m.t_minus = minus[idx];
    m.theta = 0.5 * omega0 * (m.t_minus - m.t_plus);
    return m;
}

/// Loop phase from the paired traversal: the loop is walked in the protocol
/// orientation and its reverse, the same upward crossing (first one at least
/// `settle_time` past the loop, plus `crossing_margin` periods) is located in
/// both runs, and theta = omega0 (t_minus - t_plus) / 2. The dynamical phase
/// cancels in the difference.
inline PhaseMeasurement run_cycle_pair(const ModelSpec& model, const CycleProtocol& proto) {
    proto.validate();
    const double relax = to_double(proto.relax_time);
    const double mu0 = to_double(proto.start1);
    if (relax * std::abs(mu0) < 10.0)
        throw std::invalid_argument("protocol: relax_time too short for the cycle to establish");

    const double omega0 = model.omega();
    const double t0 = relax;
    const double T = to_double(proto.T);
    const double settle = to_double(proto.settle_time);
    const double period = 2.0 * M_PI / omega0;

    std::vector<double> plus = run_cycle(model, proto, +1);
    std::vector<double> minus = run_cycle(model, proto, -1);
    double t_pick = t0 + T + settle + proto.crossing_margin * period;
    PhaseMeasurement m = pair_phase_from_crossings(plus, minus, t0 + T, t_pick, omega0);
    m.T = T;
    return m;
}

// ---------------------------------------------------------------------------
// Polar RG flow integration
// ---------------------------------------------------------------------------

/// Polar system flattened to index-based terms.
struct CompiledPolar {
    struct Term {
        int dot;            // parameter index, -2 for omega, -1 for none
        double coeff;
        int r_pow, omega_pow;
        std::vector<std::pair<int, int>> eps;  // (parameter index, power)
    };
    std::vector<Term> f_terms, omega_terms;
};

inline CompiledPolar compile_polar(const PolarRGSystem& sys, const ModelSpec& model) {
    CompiledPolar out;
    auto flatten = [&](const std::map<FlowKey, PolarPolynomial>& parts,
                       std::vector<CompiledPolar::Term>& dst) {
        for (auto& [key, poly] : parts) {
            int dot = -1;
            if (key.dot == "omega")
                dot = -2;
            else if (!key.dot.empty()) {
                dot = param_index(model, key.dot);
                if (dot < 0) throw ModelError("flow rate tag '" + key.dot + "' not in model");
            }
            std::vector<std::pair<int, int>> eps;
            for (auto& [name, n] : key.eps) {
                int idx = param_index(model, name);
                if (idx < 0) throw ModelError("flow tag parameter '" + name + "' not in model");
                eps.emplace_back(idx, n);
            }
            for (auto& [m, c] : poly)
                dst.push_back({dot, to_double(c), m.r_pow, m.omega_pow, eps});
        }
    };
    flatten(sys.f_parts, out.f_terms);
    flatten(sys.omega_parts, out.omega_terms);
    return out;
}

inline Dop853<2>::Rhs polar_rhs(const CompiledPolar& cp, const Schedule& schedule) {
    auto side = [](const std::vector<CompiledPolar::Term>& terms, const ParamSet& ps, double r) {
        double sum = 0.0;
        for (auto& t : terms) {
            double v = t.coeff;
            if (t.dot == -2)
                v *= ps.omega_rate;
            else if (t.dot >= 0)
                v *= ps.rates[t.dot];
            if (v == 0.0) continue;
            for (auto& [idx, n] : t.eps)
                for (int k = 0; k < n; ++k) v *= ps.values[idx];
            v *= std::pow(ps.omega, t.omega_pow);
            for (int k = 0; k < t.r_pow; ++k) v *= r;
            sum += v;
        }
        return sum;
    };
    return [&cp, schedule, side](double t, const std::array<double, 2>& y, std::array<double, 2>& dydt) {
        ParamSet ps;
        schedule(t, ps);
        dydt[0] = side(cp.f_terms, ps, y[0]);
        dydt[1] = side(cp.omega_terms, ps, y[0]);
    };
}

/// Integrate (r, theta) under the polar RG system with the given schedule.
template <class Observer>
void flow_integrate(const PolarRGSystem& sys, const ModelSpec& model, const ScheduleInfo& schedule,
                    double t_begin, double t_end, double tol, std::array<double, 2>& state,
                    Observer&& observer) {
    CompiledPolar cp = compile_polar(sys, model);
    Dop853<2>::Options opt;
    opt.rtol = tol;
    opt.atol = tol;
    opt.dense = false;
    Dop853<2> solver(polar_rhs(cp, schedule.eval), opt);

    std::vector<double> cuts{t_begin};
    for (double b : schedule.breakpoints)
        if (b > t_begin && b < t_end) cuts.push_back(b);
    cuts.push_back(t_end);
    std::sort(cuts.begin(), cuts.end());
    for (std::size_t i = 0; i + 1 < cuts.size(); ++i) {
        solver.integrate(cuts[i], state, cuts[i + 1],
                         [&](const Dop853<2>::DenseStep&, double, const std::array<double, 2>& y) {
                             state = y;
                         });
    }
}

/// Loop phase predicted by the RG flow itself: integrate the polar system
/// around the loop in both orientations and halve the final phase difference.
inline double flow_loop_phase(const PolarRGSystem& sys, const ModelSpec& model,
                              const CycleProtocol& proto) {
    proto.validate();
    const double t0 = to_double(proto.relax_time);
    const double T = to_double(proto.T);
    const double t_end = t0 + T + to_double(proto.settle_time);

    ParamPoint start;
    start["omega"] = model.omega();
    for (auto& p : model.params) start[p.name] = p.value ? to_double(*p.value) : 0.0;
    start[proto.param1] = to_double(proto.start1);
    start[proto.param2] = to_double(proto.center2);
    double r0 = limit_cycle_radius(sys, start);

    auto run = [&](int sign) {
        ScheduleInfo sched = loop_schedule(model, proto, t0, sign);
        std::array<double, 2> state{r0, 0.0};
        flow_integrate(sys, model, sched, 0.0, t_end, to_double(proto.tol), state,
                       [](const Dop853<2>::DenseStep&, double, const std::array<double, 2>&) {});
        return state[1];
    };
    double theta_plus = run(+1);
    double theta_minus = run(-1);
    return 0.5 * (theta_plus - theta_minus);
}

// ---------------------------------------------------------------------------
// Period sweeps
// ---------------------------------------------------------------------------

inline unsigned sweep_pool_size(std::size_t jobs) {
    unsigned n = std::thread::hardware_concurrency();
    if (n == 0) n = 1;
    if (const char* env = std::getenv("RGWB_THREADS")) {
        long v = std::strtol(env, nullptr, 10);
        if (v >= 1) n = static_cast<unsigned>(v);
    }
    return std::min<unsigned>(n, static_cast<unsigned>(jobs));
}

struct SweepEntry {
    double T = 0.0;
    PhaseMeasurement measurement;
    std::string error;  // nonempty when the run failed
};

/// run_cycle_pair for each period in the list (ascending); failures are
/// collected per entry, not fatal.
inline std::vector<SweepEntry> sweep_T(const ModelSpec& model, const CycleProtocol& proto,
                                       const std::vector<double>& T_list) {
    for (std::size_t i = 1; i < T_list.size(); ++i)
        if (!(T_list[i] > T_list[i - 1])) throw std::invalid_argument("sweep periods must ascend");
    std::vector<SweepEntry> out(T_list.size());
    std::atomic<std::size_t> next{0};
    auto worker = [&]() {
        for (;;) {
            std::size_t i = next.fetch_add(1);
            if (i >= T_list.size()) return;
            out[i].T = T_list[i];
            try {
                CycleProtocol p = proto;
                char buf[64];
                std::snprintf(buf, sizeof buf, "%.17g", T_list[i]);
                p.T = parse_rational(buf);
                out[i].measurement = run_cycle_pair(model, p);
            } catch (const std::exception& e) {
                out[i].error = e.what();
            }
        }
    };
    unsigned n = sweep_pool_size(T_list.size());
    std::vector<std::thread> pool;
    for (unsigned i = 1; i < n; ++i) pool.emplace_back(worker);
    worker();
    for (auto& th : pool) th.join();
    return out;
}

/// CSV with one row per sweep entry; 17 significant digits throughout.
inline std::string sweep_csv(const std::vector<SweepEntry>& entries, double omega0, double theta_pred) {
    auto num = [](double v) {
        char buf[64];
        std::snprintf(buf, sizeof buf, "%.17g", v);
        return std::string(buf);
    };
    std::string out = "T,omega0T,theta_plus_run_crossing,t_plus,t_minus,theta,theta_geom_pred,rel_err\n";
    for (auto& e : entries) {
        const PhaseMeasurement& m = e.measurement;
        double rel =
            theta_pred != 0.0 ? std::abs(m.theta - theta_pred) / std::abs(theta_pred)
                              : std::numeric_limits<double>::quiet_NaN();
        out += num(e.T) + "," + num(omega0 * e.T) + "," + std::to_string(m.crossing_index) + "," +
               num(m.t_plus) + "," + num(m.t_minus) + "," + num(m.theta) + "," + num(theta_pred) + "," +
               num(rel) + "\n";
    }
    return out;
}

}  // namespace rgwb
