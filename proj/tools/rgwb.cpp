// rgwb: derive amplitude equations for weakly nonlinear oscillators, compute
// the geometry of their limit cycles, and measure loop phases by direct
// simulation. Subcommands: derive, curvature, simulate, validate.

#include "rgwb/flow.hpp"
#include "rgwb/geometry.hpp"
#include "rgwb/model.hpp"
#include "rgwb/polar.hpp"
#include "rgwb/simulate.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>

namespace {

using nlohmann::json;
using namespace rgwb;

std::string read_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_output(const std::string& out_path, const std::string& text) {
    if (out_path.empty()) {
        std::cout << text;
        if (!text.empty() && text.back() != '\n') std::cout << '\n';
        return;
    }
    std::ofstream out(out_path);
    if (!out) throw std::runtime_error("cannot write " + out_path);
    out << text;
}

std::string fmt17(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

/// Full derivation pipeline: expansion, flow, rate corrections, polar form.
struct Derivation {
    FourierSecularSeries solution;
    AmplitudeFlow flow;
    PolarRGSystem polar;
};

Derivation derive_model(const ModelSpec& model) {
    Derivation d;
    d.solution = expand(model);
    d.flow = extract_flow(d.solution);
    d.flow = nonadiabatic_eps(d.flow, model);
    if (model.omega_time_dependent) d.flow = nonadiabatic_omega(d.flow, model);
    d.polar = polar_form(d.flow);
    return d;
}

json flow_json(const AmplitudeFlow& flow) {
    json entries = json::array();
    for (auto& [key, poly] : flow.entries) {
        json monos = json::array();
        for (auto& [m, c] : poly)
            monos.push_back({{"amp_pow", m.amp_pow},
                             {"conj_pow", m.conj_pow},
                             {"omega_pow", m.omega_pow},
                             {"re", to_string(c.re)},
                             {"im", to_string(c.im)}});
        entries.push_back({{"tag", flow_key_string(key)}, {"monomials", monos}});
    }
    return entries;
}

json polar_json(const PolarRGSystem& sys) {
    auto side = [](const std::map<FlowKey, PolarPolynomial>& parts) {
        json entries = json::array();
        for (auto& [key, poly] : parts) {
            json monos = json::array();
            for (auto& [m, c] : poly)
                monos.push_back(
                    {{"r_pow", m.r_pow}, {"omega_pow", m.omega_pow}, {"coeff", to_string(c)}});
            entries.push_back({{"tag", flow_key_string(key)}, {"monomials", monos}});
        }
        return entries;
    };
    return {{"dr_dt", side(sys.f_parts)}, {"dtheta_dt", side(sys.omega_parts)}};
}

// Reference amplitude equations and polar systems for the two bundled
// models, entered from their closed forms.
RationalComplex re_(long n, long d) { return RationalComplex(Rational(n, d)); }
RationalComplex im_(long n, long d) { return RationalComplex(Rational(0), Rational(n, d)); }

AmplitudeFlow vdp_reference_flow() {
    AmplitudeFlow f;
    FlowKey mu1{{{"mu", 1}}, ""}, mu2{{{"mu", 2}}, ""}, mud{{}, "mu"}, wd{{}, "omega"},
        muwd{{{"mu", 1}}, "omega"};
    f.add(mu1, {1, 0, 0}, re_(1, 2));
    f.add(mu1, {2, 1, 0}, re_(-1, 2));
    f.add(mu2, {1, 0, -1}, im_(-1, 8));
    f.add(mu2, {2, 1, -1}, im_(1, 2));
    f.add(mu2, {3, 2, -1}, im_(-7, 16));
    f.add(mud, {1, 0, -1}, im_(1, 4));
    f.add(mud, {2, 1, -1}, im_(-1, 4));
    f.add(wd, {1, 0, -1}, re_(-1, 2));
    f.add(muwd, {2, 1, -2}, im_(-1, 4));
    return f;
}

AmplitudeFlow vdpd_reference_flow() {
    AmplitudeFlow f;
    FlowKey mu1{{{"mu", 1}}, ""}, b1{{{"beta", 1}}, ""}, mb{{{"mu", 1}, {"beta", 1}}, ""},
        mud{{}, "mu"}, bd{{}, "beta"};
    f.add(mu1, {1, 0, 0}, re_(1, 2));
    f.add(mu1, {2, 1, 0}, re_(-1, 2));
    f.add(b1, {2, 1, -1}, im_(3, 2));
    f.add(mb, {2, 1, -2}, re_(-3, 4));
    f.add(mb, {3, 2, -2}, re_(1, 2));
    f.add(mud, {1, 0, -1}, im_(1, 4));
    f.add(mud, {2, 1, -1}, im_(-1, 4));
    f.add(bd, {2, 1, -2}, re_(-3, 4));
    return f;
}

/// True when the model is one of the two bundled references; fills `expect`.
bool reference_flow_for(const ModelSpec& model, AmplitudeFlow& expect) {
    std::string vdp_param;
    if (model.is_pure_vdp(&vdp_param) && vdp_param == "mu" && model.vdp_omega_iteration &&
        model.omega_time_dependent) {
        expect = vdp_reference_flow();
        return true;
    }
    bool has_beta = model.find_param("beta") != nullptr;
    bool has_mu = model.find_param("mu") != nullptr;
    if (has_beta && has_mu && model.params.size() == 2 && !model.omega_time_dependent &&
        model.nonlinearity.size() == 3) {
        expect = vdpd_reference_flow();
        return true;
    }
    return false;
}

ParamPoint parse_eps_point(const std::string& text) {
    ParamPoint pt;
    std::stringstream ss(text);
    std::string piece;
    while (std::getline(ss, piece, ',')) {
        auto eq = piece.find('=');
        if (eq == std::string::npos) throw std::runtime_error("bad --eps entry '" + piece + "'");
        std::string name = detail::trim(piece.substr(0, eq));
        pt[name] = to_double(parse_rational(detail::trim(piece.substr(eq + 1))));
    }
    return pt;
}

ParamPoint model_point(const ModelSpec& model) {
    ParamPoint pt;
    pt["omega"] = model.omega();
    for (auto& p : model.params) pt[p.name] = p.value ? to_double(*p.value) : 0.0;
    return pt;
}

int cmd_derive(const std::string& model_path, bool golden, bool as_json, const std::string& out) {
    ModelSpec model = parse_model(read_file(model_path));
    Derivation d = derive_model(model);

    if (golden) {
        AmplitudeFlow expect;
        if (!reference_flow_for(model, expect)) {
            std::cerr << "no built-in reference table for this model\n";
            return 2;
        }
        if (d.flow == expect) {
            std::cout << "golden: OK\n";
            return 0;
        }
        std::cerr << "golden: MISMATCH\nderived:  " << flow_string(d.flow)
                  << "\nexpected: " << flow_string(expect) << "\n";
        return 1;
    }

    if (as_json) {
        json doc{{"amplitude_equation", flow_string(d.flow)},
                 {"flow", flow_json(d.flow)},
                 {"polar", polar_json(d.polar)},
                 {"polar_text", polar_system_string(d.polar)},
                 {"solution", d.solution.str()}};
        write_output(out, doc.dump(2));
        return 0;
    }
    std::string text = flow_string(d.flow) + "\n" + polar_system_string(d.polar) + "\n";
    write_output(out, text);
    return 0;
}

int cmd_curvature(const std::string& model_path, const std::string& eps_text, bool singular_only,
                  double h, const std::string& out) {
    ModelSpec model = parse_model(read_file(model_path));
    Derivation d = derive_model(model);
    ParamPoint pt = model_point(model);
    for (auto& [k, v] : parse_eps_point(eps_text)) pt[k] = v;

    std::array<std::string, 2> names;
    {
        // Loop parameters: the --eps list in the order given.
        std::vector<std::string> listed;
        std::stringstream ss(eps_text);
        std::string piece;
        while (std::getline(ss, piece, ','))
            listed.push_back(detail::trim(piece.substr(0, piece.find('='))));
        if (listed.size() != 2) throw std::runtime_error("--eps must name exactly two parameters");
        names = {listed[0], listed[1]};
    }

    GeometryOptions opt;
    opt.singular_only = singular_only;
    CurvatureResult c = curvature(d.polar, pt, names, h, opt);
    json doc{{"eps", {{names[0], pt[names[0]]}, {names[1], pt[names[1]]}, {"omega", pt["omega"]}}},
             {"a", {c.a[0], c.a[1]}},
             {"R", c.R},
             {"chi", c.chi},
             {"h", c.h},
             {"richardson_err", c.richardson_err}};
    write_output(out, doc.dump(2));
    return 0;
}

int cmd_simulate(const std::string& model_path, const std::string& proto_path,
                 const std::string& orientation, const std::string& sweep_text, const std::string& out,
                 const std::string& plot_path) {
    ModelSpec model = parse_model(read_file(model_path));
    CycleProtocol proto = parse_protocol(read_file(proto_path));
    Derivation d = derive_model(model);
    double theta_pred = predicted_loop_phase(d.polar, proto, model_point(model));

    if (orientation == "ccw" || orientation == "cw") {
        // Single traversal: report the crossing timestamps only.
        int sign = orientation == "ccw" ? +1 : -1;
        std::vector<double> times = run_cycle(model, proto, sign * proto.orientation);
        std::string text = "crossing_index,t\n";
        for (std::size_t i = 0; i < times.size(); ++i)
            text += std::to_string(i) + "," + fmt17(times[i]) + "\n";
        write_output(out, text);
        return 0;
    }

    std::vector<double> T_list;
    if (!sweep_text.empty()) {
        std::stringstream ss(sweep_text);
        std::string piece;
        while (std::getline(ss, piece, ','))
            T_list.push_back(to_double(parse_rational(detail::trim(piece))));
    } else {
        T_list.push_back(to_double(proto.T));
    }
    std::vector<SweepEntry> entries = sweep_T(model, proto, T_list);
    write_output(out, sweep_csv(entries, model.omega(), theta_pred));
    if (!plot_path.empty()) {
        // gnuplot-ready two-column data: T theta
        std::string text = "# T theta\n";
        for (auto& e : entries) text += fmt17(e.T) + " " + fmt17(e.measurement.theta) + "\n";
        std::ofstream plot(plot_path);
        if (!plot) throw std::runtime_error("cannot write " + plot_path);
        plot << text;
    }
    for (auto& e : entries)
        if (!e.error.empty()) {
            std::cerr << "T=" << e.T << ": " << e.error << "\n";
            return 1;
        }
    return 0;
}

int cmd_validate(const std::string& model_path, const std::string& proto_path, double tol,
                 bool singular_only) {
    ModelSpec model = parse_model(read_file(model_path));
    CycleProtocol proto = parse_protocol(read_file(proto_path));
    Derivation d = derive_model(model);

    GeometryOptions opt;
    opt.singular_only = singular_only;
    double theta_pred =
        predicted_loop_phase(d.polar, proto, model_point(model), LoopPhaseMode::SmallLoop, opt);
    double theta_flow = flow_loop_phase(d.polar, model, proto);
    PhaseMeasurement sim = run_cycle_pair(model, proto);

    // Plateau check: halving the loop period should barely move the phase.
    CycleProtocol half = proto;
    half.T = proto.T / 2;
    PhaseMeasurement sim_half = run_cycle_pair(model, half);
    bool at_plateau = std::abs(sim_half.theta - sim.theta) <= 0.05 * std::abs(sim.theta);

    auto rel = [](double a, double b) {
        double scale = std::max(std::abs(a), std::abs(b));
        return scale == 0.0 ? 0.0 : std::abs(a - b) / scale;
    };
    double sim_vs_flow = rel(sim.theta, theta_flow);
    double sim_vs_pred = rel(sim.theta, theta_pred);
    double flow_vs_pred = rel(theta_flow, theta_pred);

    std::cout << "theta_sim  = " << fmt17(sim.theta) << "  (t+ " << fmt17(sim.t_plus) << ", t- "
              << fmt17(sim.t_minus) << ", crossing " << sim.crossing_index << ")\n"
              << "theta_flow = " << fmt17(theta_flow) << "\n"
              << "theta_pred = " << fmt17(theta_pred) << "\n"
              << "sim_vs_flow  rel err = " << fmt17(sim_vs_flow) << "\n"
              << "sim_vs_pred  rel err = " << fmt17(sim_vs_pred) << "\n"
              << "flow_vs_pred rel err = " << fmt17(flow_vs_pred) << "\n";

    bool ok = true;
    if (!at_plateau) {
        std::cout << "FAIL: not at plateau (theta(T/2) differs from theta(T) by "
                  << fmt17(rel(sim_half.theta, sim.theta) * 100) << "%)\n";
        ok = false;
    }
    for (auto [name, err] : {std::pair<const char*, double>{"sim_vs_flow", sim_vs_flow},
                             {"sim_vs_pred", sim_vs_pred},
                             {"flow_vs_pred", flow_vs_pred}}) {
        if (err > tol) {
            std::cout << "FAIL: " << name << " exceeds tolerance " << tol << "\n";
            ok = false;
        }
    }
    std::cout << (ok ? "PASS" : "FAIL") << "\n";
    return ok ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"amplitude-equation workbench for weakly nonlinear oscillators"};
    app.require_subcommand(1);

    std::string model_path, proto_path, out_path, eps_text, orientation = "both", sweep_text, plot_path;
    bool golden = false, as_json = false, singular_only = false;
    double h = 1e-4, tol = 0.10;

    CLI::App* derive = app.add_subcommand("derive", "print the amplitude and polar equations");
    derive->add_option("--model", model_path, "model file")->required();
    derive->add_flag("--golden", golden, "compare against the built-in reference tables");
    derive->add_flag("--json", as_json, "emit JSON instead of text");
    derive->add_option("--out", out_path, "output path (default stdout)");

    CLI::App* curv = app.add_subcommand("curvature", "connection and curvature at a parameter point");
    curv->add_option("--model", model_path, "model file")->required();
    curv->add_option("--eps", eps_text, "loop-parameter point, e.g. mu=0.1,omega=2")->required();
    curv->add_flag("--singular-only", singular_only, "keep only the singular channel");
    curv->add_option("--fd-step", h, "relative finite-difference step");
    curv->add_option("--out", out_path, "output path (default stdout)");

    CLI::App* sim = app.add_subcommand("simulate", "measure loop phases by direct integration");
    sim->add_option("--model", model_path, "model file")->required();
    sim->add_option("--protocol", proto_path, "protocol file")->required();
    sim->add_option("--orientation", orientation, "ccw, cw, or both")
        ->check(CLI::IsMember({"ccw", "cw", "both"}));
    sim->add_option("--sweep", sweep_text, "comma-separated list of loop periods T");
    sim->add_option("--out", out_path, "output path (default stdout)");
    sim->add_option("--plot", plot_path, "also write two-column T-vs-theta data here");

    CLI::App* val = app.add_subcommand("validate", "compare simulated, flow, and predicted phases");
    val->add_option("--model", model_path, "model file")->required();
    val->add_option("--protocol", proto_path, "protocol file")->required();
    val->add_option("--tol", tol, "pairwise relative tolerance");
    val->add_flag("--singular-only", singular_only, "use the singular channel for the prediction");

    CLI11_PARSE(app, argc, argv);

    try {
        if (derive->parsed()) return cmd_derive(model_path, golden, as_json, out_path);
        if (curv->parsed()) return cmd_curvature(model_path, eps_text, singular_only, h, out_path);
        if (sim->parsed())
            return cmd_simulate(model_path, proto_path, orientation, sweep_text, out_path, plot_path);
        if (val->parsed()) return cmd_validate(model_path, proto_path, tol, singular_only);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
