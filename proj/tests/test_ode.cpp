#include "rgwb/dop853.hpp"

#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <vector>

using namespace rgwb;

namespace {

Dop853<2>::Rhs harmonic(double w) {
    return [w](double, const std::array<double, 2>& y, std::array<double, 2>& d) {
        d[0] = y[1];
        d[1] = -w * w * y[0];
    };
}

}  // namespace

TEST_CASE("harmonic oscillator stays on the energy shell") {
    const double w = 2.0;
    Dop853<2>::Options opt;
    opt.rtol = 1e-13;
    opt.atol = 1e-13;
    Dop853<2> solver(harmonic(w), opt);
    std::array<double, 2> y{1.0, 0.0};
    const double E0 = 0.5 * (y[1] * y[1] + w * w * y[0] * y[0]);
    double worst = 0.0;
    solver.integrate(0.0, y, 1e4 / w, [&](const Dop853<2>::DenseStep&, double, const std::array<double, 2>& s) {
        double E = 0.5 * (s[1] * s[1] + w * w * s[0] * s[0]);
        worst = std::max(worst, std::abs(E - E0) / E0);
    });
    CHECK(worst < 1e-10);
}

TEST_CASE("solution matches the closed form to integrator accuracy") {
    const double w = 1.7;
    Dop853<2>::Options opt;
    opt.rtol = 1e-12;
    opt.atol = 1e-12;
    Dop853<2> solver(harmonic(w), opt);
    std::array<double, 2> y0{0.3, -0.4};
    auto y = solver.integrate_to(0.0, y0, 50.0);
    double c = std::cos(w * 50.0), s = std::sin(w * 50.0);
    double y_exact = y0[0] * c + y0[1] / w * s;
    double v_exact = -y0[0] * w * s + y0[1] * c;
    CHECK(y[0] == Catch::Approx(y_exact).margin(1e-9));
    CHECK(y[1] == Catch::Approx(v_exact).margin(1e-9));
}

TEST_CASE("dense output interpolates between steps") {
    const double w = 1.0;
    Dop853<2>::Options opt;
    opt.rtol = 1e-11;
    opt.atol = 1e-11;
    Dop853<2> solver(harmonic(w), opt);
    std::array<double, 2> y0{1.0, 0.0};
    double worst_v = 0.0, worst_d = 0.0;
    solver.integrate(0.0, y0, 20.0, [&](const Dop853<2>::DenseStep& st, double, const std::array<double, 2>&) {
        for (int k = 1; k < 5; ++k) {
            double t = st.t0 + (st.t1 - st.t0) * k / 5.0;
            worst_v = std::max(worst_v, std::abs(st.value(0, t) - std::cos(t)));
            worst_d = std::max(worst_d, std::abs(st.derivative(0, t) + std::sin(t)));
        }
    });
    CHECK(worst_v < 1e-10);
    CHECK(worst_d < 1e-9);
}

TEST_CASE("dense endpoints agree with the step states") {
    Dop853<2>::Options opt;
    Dop853<2> solver(harmonic(1.3), opt);
    std::array<double, 2> y0{0.7, 0.1};
    std::array<double, 2> prev = y0;
    solver.integrate(0.0, y0, 10.0, [&](const Dop853<2>::DenseStep& st, double t,
                                        const std::array<double, 2>& y) {
        CHECK(st.value(0, st.t0) == Catch::Approx(prev[0]).margin(1e-13));
        CHECK(st.value(0, st.t1) == Catch::Approx(y[0]).margin(1e-13));
        CHECK(st.t1 == Catch::Approx(t));
        prev = y;
    });
}

TEST_CASE("van der pol relaxes onto the limit cycle") {
    const double w = 2.0, mu = 0.1;
    Dop853<2>::Options opt;
    opt.rtol = 1e-10;
    opt.atol = 1e-10;
    Dop853<2> solver(
        [w, mu](double, const std::array<double, 2>& y, std::array<double, 2>& d) {
            d[0] = y[1];
            d[1] = -w * w * y[0] + mu * (1 - y[0] * y[0]) * y[1];
        },
        opt);
    std::array<double, 2> y{0.3, 0.0};
    // after mu t = 10 the peak displacement sits within 1% of 2
    auto ye = solver.integrate_to(0.0, y, 10.0 / mu);
    double peak = 0.0;
    solver.integrate(10.0 / mu, ye, 10.0 / mu + 2.0 * M_PI / w,
                     [&](const Dop853<2>::DenseStep& st, double, const std::array<double, 2>&) {
                         for (int k = 0; k <= 20; ++k) {
                             double t = st.t0 + (st.t1 - st.t0) * k / 20.0;
                             peak = std::max(peak, std::abs(st.value(0, t)));
                         }
                     });
    CHECK(peak == Catch::Approx(2.0).epsilon(0.01));
}

TEST_CASE("step size underflow is reported") {
    Dop853<2>::Options opt;
    opt.rtol = 1e-13;
    opt.atol = 0.0;
    // A right-hand side with a singularity the controller cannot cross.
    Dop853<2> solver(
        [](double t, const std::array<double, 2>& y, std::array<double, 2>& d) {
            d[0] = y[0] / (1.0 - t);
            d[1] = 0.0;
        },
        opt);
    std::array<double, 2> y{1.0, 0.0};
    CHECK_THROWS_AS(solver.integrate_to(0.0, y, 2.0), StepUnderflow);
}
