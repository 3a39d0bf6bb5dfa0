#pragma once

#include <array>
#include <cmath>
#include <cstddef>
#include <functional>
#include <limits>
#include <stdexcept>

namespace rgwb {

struct StepUnderflow : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Adaptive eighth-order Dormand-Prince integrator (the classic 8(5,3) pair
/// of Hairer, Norsett and Wanner) with seventh-order dense output. Fixed
/// compile-time dimension; the systems here are all two-dimensional.
template <std::size_t N>
class Dop853 {
  public:
    using State = std::array<double, N>;
    using Rhs = std::function<void(double, const State&, State&)>;

    struct Options {
        double rtol = 1e-11;
        double atol = 1e-11;
        double h_max = 0.0;   // 0: span of the integration interval
        double h_init = 0.0;  // 0: automatic
        bool dense = true;    // compute interpolation coefficients per step
    };

    /// Interpolant over one accepted step [t0, t1].
    struct DenseStep {
        double t0 = 0.0, t1 = 0.0;
        std::array<std::array<double, 8>, N> r{};

        double value(std::size_t comp, double t) const {
            const double h = t1 - t0;
            const double s = (t - t0) / h, s1 = 1.0 - s;
            const auto& c = r[comp];
            double a6 = c[6] + s * c[7];
            double a5 = c[5] + s1 * a6;
            double a4 = c[4] + s * a5;
            double a3 = c[3] + s1 * a4;
            double a2 = c[2] + s * a3;
            double a1 = c[1] + s1 * a2;
            return c[0] + s * a1;
        }

        double derivative(std::size_t comp, double t) const {
            const double h = t1 - t0;
            const double s = (t - t0) / h, s1 = 1.0 - s;
            const auto& c = r[comp];
            double a6 = c[6] + s * c[7];
            double a5 = c[5] + s1 * a6;
            double a4 = c[4] + s * a5;
            double a3 = c[3] + s1 * a4;
            double a2 = c[2] + s * a3;
            double a1 = c[1] + s1 * a2;
            return (a1 - s * (a2 - s1 * (a3 - s * (a4 - s1 * (a5 - s * (a6 - s1 * c[7])))))) / h;
        }
    };

    Dop853(Rhs rhs, Options opt) : f_(std::move(rhs)), opt_(opt) {}

    /// Advance from (t0, y0) to t_end; the observer is invoked after every
    /// accepted step as observer(step, t, y) where step covers [t_prev, t].
    template <class Observer>
    void integrate(double t0, State y0, double t_end, Observer&& observer) {
        if (t_end <= t0) return;
        const double hmax = opt_.h_max > 0.0 ? opt_.h_max : t_end - t0;
        double t = t0;
        State y = y0, k1;
        f_(t, y, k1);
        ++n_eval_;
        double h = opt_.h_init > 0.0 ? opt_.h_init : initial_step(t, y, k1, hmax);
        double facold = 1e-4;
        bool reject = false;
        DenseStep step;

        while (t < t_end) {
            bool last = false;
            if (h >= t_end - t) {
                h = t_end - t;
                last = true;
            }
            if (!last && h < 1e3 * std::numeric_limits<double>::epsilon() * std::max(std::abs(t), 1.0))
                throw StepUnderflow("integration step size underflow");

            State y_new, k_last;
            double err = try_step(t, y, k1, h, y_new, k_last);
            if (!std::isfinite(err)) err = 1e10;  // force a rejection and shrink

            const double expo1 = 1.0 / 8.0;
            double fac11 = std::pow(err, expo1);
            const double safe = 0.9, facc1 = 1.0 / 0.333, facc2 = 1.0 / 6.0;
            double fac = std::max(facc2, std::min(facc1, fac11 / safe));
            double hnew = h / fac;

            if (err <= 1.0) {
                facold = std::max(err, 1e-4);
                if (opt_.dense) fill_dense(step, t, y, k1, h, y_new, k_last);
                t += h;
                y = y_new;
                k1 = k_last;
                if (hnew > hmax) hnew = hmax;
                if (reject) hnew = std::min(hnew, h);
                reject = false;
                h = hnew;
                observer(step, t, y);
            } else {
                h = h / std::min(facc1, fac11 / safe);
                reject = true;
            }
            ++n_step_;
        }
    }

    /// Convenience entry point without inspection of intermediate steps.
    State integrate_to(double t0, const State& y0, double t_end) {
        State y = y0;
        integrate(t0, y0, t_end, [&y](const DenseStep&, double, const State& yy) { y = yy; });
        return y;
    }

    long evaluations() const { return n_eval_; }
    long steps() const { return n_step_; }

  private:
    Rhs f_;
    Options opt_;
    long n_eval_ = 0;
    long n_step_ = 0;

    double scale_for(double a, double b) const {
        double sk = opt_.atol + opt_.rtol * std::max(std::abs(a), std::abs(b));
        return std::max(sk, std::numeric_limits<double>::min());
    }

    double initial_step(double t, const State& y, const State& f0, double hmax) {
        double dnf = 0.0, dny = 0.0;
        for (std::size_t i = 0; i < N; ++i) {
            double sk = scale_for(y[i], y[i]);
            dnf += (f0[i] / sk) * (f0[i] / sk);
            dny += (y[i] / sk) * (y[i] / sk);
        }
        double h = (dnf <= 1e-10 || dny <= 1e-10) ? 1e-6 : 0.01 * std::sqrt(dny / dnf);
        h = std::min(h, hmax);
        State y1, f1;
        for (std::size_t i = 0; i < N; ++i) y1[i] = y[i] + h * f0[i];
        f_(t + h, y1, f1);
        ++n_eval_;
        double der2 = 0.0;
        for (std::size_t i = 0; i < N; ++i) {
            double sk = scale_for(y[i], y[i]);
            der2 += ((f1[i] - f0[i]) / sk) * ((f1[i] - f0[i]) / sk);
        }
        der2 = std::sqrt(der2) / h;
        double der12 = std::max(der2, std::sqrt(dnf));
        double h1 = der12 <= 1e-15 ? std::max(1e-6, h * 1e-3) : std::pow(0.01 / der12, 1.0 / 8.0);
        return std::min({100.0 * h, h1, hmax});
    }

    // One trial step of size h. Returns the scaled error; on acceptance the
    // caller uses y_new and k_last = f(t+h, y_new). Stage slopes that the
    // dense output needs again are stashed in s_.
    double try_step(double t, const State& y, const State& k1, double h, State& y_new, State& k_last) {
        auto& s = s_;
        State w;
        auto stage = [&](int idx, double c, auto&&... terms) {
            for (std::size_t i = 0; i < N; ++i) {
                double acc = 0.0;
                ((acc += terms.first * terms.second[i]), ...);
                w[i] = y[i] + h * acc;
            }
            f_(t + c * h, w, s[idx]);
            ++n_eval_;
        };
        using P = std::pair<double, const State&>;

        stage(2, c2, P{a21, k1});
        stage(3, c3, P{a31, k1}, P{a32, s[2]});
        stage(4, c4, P{a41, k1}, P{a43, s[3]});
        stage(5, c5, P{a51, k1}, P{a53, s[3]}, P{a54, s[4]});
        stage(6, c6, P{a61, k1}, P{a64, s[4]}, P{a65, s[5]});
        stage(7, c7, P{a71, k1}, P{a74, s[4]}, P{a75, s[5]}, P{a76, s[6]});
        stage(8, c8, P{a81, k1}, P{a84, s[4]}, P{a85, s[5]}, P{a86, s[6]}, P{a87, s[7]});
        stage(9, c9, P{a91, k1}, P{a94, s[4]}, P{a95, s[5]}, P{a96, s[6]}, P{a97, s[7]}, P{a98, s[8]});
        stage(10, c10, P{a101, k1}, P{a104, s[4]}, P{a105, s[5]}, P{a106, s[6]}, P{a107, s[7]},
              P{a108, s[8]}, P{a109, s[9]});
        stage(11, c11, P{a111, k1}, P{a114, s[4]}, P{a115, s[5]}, P{a116, s[6]}, P{a117, s[7]},
              P{a118, s[8]}, P{a119, s[9]}, P{a1110, s[10]});
        stage(12, 1.0, P{a121, k1}, P{a124, s[4]}, P{a125, s[5]}, P{a126, s[6]}, P{a127, s[7]},
              P{a128, s[8]}, P{a129, s[9]}, P{a1210, s[10]}, P{a1211, s[11]});

        State bsum;
        for (std::size_t i = 0; i < N; ++i) {
            bsum[i] = b1 * k1[i] + b6 * s[6][i] + b7 * s[7][i] + b8 * s[8][i] + b9 * s[9][i] +
                      b10 * s[10][i] + b11 * s[11][i] + b12 * s[12][i];
            y_new[i] = y[i] + h * bsum[i];
        }

        double err3 = 0.0, err5 = 0.0;
        for (std::size_t i = 0; i < N; ++i) {
            double sk = scale_for(y[i], y_new[i]);
            double e3 = bsum[i] - bhh1 * k1[i] - bhh2 * s[9][i] - bhh3 * s[12][i];
            double e5 = e51 * k1[i] + e56 * s[6][i] + e57 * s[7][i] + e58 * s[8][i] + e59 * s[9][i] +
                        e510 * s[10][i] + e511 * s[11][i] + e512 * s[12][i];
            err3 += (e3 / sk) * (e3 / sk);
            err5 += (e5 / sk) * (e5 / sk);
        }
        double deno = err5 + 0.01 * err3;
        if (deno <= 0.0) deno = 1.0;
        double err = std::abs(h) * err5 * std::sqrt(1.0 / (N * deno));

        f_(t + h, y_new, k_last);
        ++n_eval_;
        return err;
    }

    void fill_dense(DenseStep& step, double t, const State& y, const State& k1, double h,
                    const State& y_new, const State& k_last) {
        auto& s = s_;
        step.t0 = t;
        step.t1 = t + h;
        for (std::size_t i = 0; i < N; ++i) {
            auto& r = step.r[i];
            r[0] = y[i];
            r[1] = y_new[i] - y[i];
            r[2] = h * k1[i] - r[1];
            r[3] = r[1] - h * k_last[i] - r[2];
            r[4] = d41 * k1[i] + d46 * s[6][i] + d47 * s[7][i] + d48 * s[8][i] + d49 * s[9][i] +
                   d410 * s[10][i] + d411 * s[11][i] + d412 * s[12][i];
            r[5] = d51 * k1[i] + d56 * s[6][i] + d57 * s[7][i] + d58 * s[8][i] + d59 * s[9][i] +
                   d510 * s[10][i] + d511 * s[11][i] + d512 * s[12][i];
            r[6] = d61 * k1[i] + d66 * s[6][i] + d67 * s[7][i] + d68 * s[8][i] + d69 * s[9][i] +
                   d610 * s[10][i] + d611 * s[11][i] + d612 * s[12][i];
            r[7] = d71 * k1[i] + d76 * s[6][i] + d77 * s[7][i] + d78 * s[8][i] + d79 * s[9][i] +
                   d710 * s[10][i] + d711 * s[11][i] + d712 * s[12][i];
        }
        // Three extra stages for the seventh-order interpolant.
        State w, k14, k15, k16;
        for (std::size_t i = 0; i < N; ++i)
            w[i] = y[i] + h * (a141 * k1[i] + a147 * s[7][i] + a148 * s[8][i] + a149 * s[9][i] +
                               a1410 * s[10][i] + a1411 * s[11][i] + a1412 * s[12][i] + a1413 * k_last[i]);
        f_(t + c14 * h, w, k14);
        for (std::size_t i = 0; i < N; ++i)
            w[i] = y[i] + h * (a151 * k1[i] + a156 * s[6][i] + a157 * s[7][i] + a158 * s[8][i] +
                               a1511 * s[11][i] + a1512 * s[12][i] + a1513 * k_last[i] + a1514 * k14[i]);
        f_(t + c15 * h, w, k15);
        for (std::size_t i = 0; i < N; ++i)
            w[i] = y[i] + h * (a161 * k1[i] + a166 * s[6][i] + a167 * s[7][i] + a168 * s[8][i] +
                               a169 * s[9][i] + a1613 * k_last[i] + a1614 * k14[i] + a1615 * k15[i]);
        f_(t + c16 * h, w, k16);
        n_eval_ += 3;
        for (std::size_t i = 0; i < N; ++i) {
            auto& r = step.r[i];
            r[4] = h * (r[4] + d413 * k_last[i] + d414 * k14[i] + d415 * k15[i] + d416 * k16[i]);
            r[5] = h * (r[5] + d513 * k_last[i] + d514 * k14[i] + d515 * k15[i] + d516 * k16[i]);
            r[6] = h * (r[6] + d613 * k_last[i] + d614 * k14[i] + d615 * k15[i] + d616 * k16[i]);
            r[7] = h * (r[7] + d713 * k_last[i] + d714 * k14[i] + d715 * k15[i] + d716 * k16[i]);
        }
    }

    std::array<State, 13> s_{};  // stage slopes, 1-based; s_[1] unused (k1 passed in)

    // Node, matrix, weight and error coefficients of the 8(5,3) pair.
    static constexpr double c2 = 0.526001519587677318785587544488e-01;
    static constexpr double c3 = 0.789002279381515978178381316732e-01;
    static constexpr double c4 = 0.118350341907227396726757197510e+00;
    static constexpr double c5 = 0.281649658092772603273242802490e+00;
    static constexpr double c6 = 0.333333333333333333333333333333e+00;
    static constexpr double c7 = 0.25e+00;
    static constexpr double c8 = 0.307692307692307692307692307692e+00;
    static constexpr double c9 = 0.651282051282051282051282051282e+00;
    static constexpr double c10 = 0.6e+00;
    static constexpr double c11 = 0.857142857142857142857142857142e+00;
    static constexpr double c14 = 0.1e+00;
    static constexpr double c15 = 0.2e+00;
    static constexpr double c16 = 0.777777777777777777777777777778e+00;

    static constexpr double a21 = 5.26001519587677318785587544488e-2;
    static constexpr double a31 = 1.97250569845378994544595329183e-2;
    static constexpr double a32 = 5.91751709536136983633785987549e-2;
    static constexpr double a41 = 2.95875854768068491816892993775e-2;
    static constexpr double a43 = 8.87627564304205475450678981324e-2;
    static constexpr double a51 = 2.41365134159266685502369798665e-1;
    static constexpr double a53 = -8.84549479328286085344864962717e-1;
    static constexpr double a54 = 9.24834003261792003115737966543e-1;
    static constexpr double a61 = 3.7037037037037037037037037037e-2;
    static constexpr double a64 = 1.70828608729473871279604482173e-1;
    static constexpr double a65 = 1.25467687566822425016691814123e-1;
    static constexpr double a71 = 3.7109375e-2;
    static constexpr double a74 = 1.70252211019544039314978060272e-1;
    static constexpr double a75 = 6.02165389804559606850219397283e-2;
    static constexpr double a76 = -1.7578125e-2;
    static constexpr double a81 = 3.70920001185047927108779319836e-2;
    static constexpr double a84 = 1.70383925712239993810214054705e-1;
    static constexpr double a85 = 1.07262030446373284651809199168e-1;
    static constexpr double a86 = -1.53194377486244017527936158236e-2;
    static constexpr double a87 = 8.27378916381402288758473766002e-3;
    static constexpr double a91 = 6.24110958716075717114429577812e-1;
    static constexpr double a94 = -3.36089262944694129406857109825e0;
    static constexpr double a95 = -8.68219346841726006818189891453e-1;
    static constexpr double a96 = 2.75920996994467083049415600797e1;
    static constexpr double a97 = 2.01540675504778934086186788979e1;
    static constexpr double a98 = -4.34898841810699588477366255144e1;
    static constexpr double a101 = 4.77662536438264365890433908527e-1;
    static constexpr double a104 = -2.48811461997166764192642586468e0;
    static constexpr double a105 = -5.90290826836842996371446475743e-1;
    static constexpr double a106 = 2.12300514481811942347288949897e1;
    static constexpr double a107 = 1.52792336328824235832596922938e1;
    static constexpr double a108 = -3.32882109689848629194453265587e1;
    static constexpr double a109 = -2.03312017085086261358222928593e-2;
    static constexpr double a111 = -9.3714243008598732571704021658e-1;
    static constexpr double a114 = 5.18637242884406370830023853209e0;
    static constexpr double a115 = 1.09143734899672957818500254654e0;
    static constexpr double a116 = -8.14978701074692612513997267357e0;
    static constexpr double a117 = -1.85200656599969598641566180701e1;
    static constexpr double a118 = 2.27394870993505042818970056734e1;
    static constexpr double a119 = 2.49360555267965238987089396762e0;
    static constexpr double a1110 = -3.0467644718982195003823669022e0;
    static constexpr double a121 = 2.27331014751653820792359768449e0;
    static constexpr double a124 = -1.05344954667372501984066689879e1;
    static constexpr double a125 = -2.00087205822486249909675718444e0;
    static constexpr double a126 = -1.79589318631187989172765950534e1;
    static constexpr double a127 = 2.79488845294199600508499808837e1;
    static constexpr double a128 = -2.85899827713502369474065508674e0;
    static constexpr double a129 = -8.87285693353062954433549289258e0;
    static constexpr double a1210 = 1.23605671757943030647266201528e1;
    static constexpr double a1211 = 6.43392746015763530355970484046e-1;

    static constexpr double a141 = 5.61675022830479523392909219681e-2;
    static constexpr double a147 = 2.53500210216624811088794765333e-1;
    static constexpr double a148 = -2.46239037470802489917441475441e-1;
    static constexpr double a149 = -1.24191423263816360469010140626e-1;
    static constexpr double a1410 = 1.5329179827876569731206322685e-1;
    static constexpr double a1411 = 8.20105229563468988491666602057e-3;
    static constexpr double a1412 = 7.56789766054569976138603589584e-3;
    static constexpr double a1413 = -8.298e-3;
    static constexpr double a151 = 3.18346481635021405060768473261e-2;
    static constexpr double a156 = 2.83009096723667755288322961402e-2;
    static constexpr double a157 = 5.35419883074385676223797384372e-2;
    static constexpr double a158 = -5.49237485713909884646569340306e-2;
    static constexpr double a1511 = -1.08347328697249322858509316994e-4;
    static constexpr double a1512 = 3.82571090835658412954920192323e-4;
    static constexpr double a1513 = -3.40465008687404560802977114492e-4;
    static constexpr double a1514 = 1.41312443674632500278074618366e-1;
    static constexpr double a161 = -4.28896301583791923408573538692e-1;
    static constexpr double a166 = -4.69762141536116384314449447206e0;
    static constexpr double a167 = 7.68342119606259904184240953878e0;
    static constexpr double a168 = 4.06898981839711007970213554331e0;
    static constexpr double a169 = 3.56727187455281109270669543021e-1;
    static constexpr double a1613 = -1.39902416515901462129418009734e-3;
    static constexpr double a1614 = 2.9475147891527723389556272149e0;
    static constexpr double a1615 = -9.15095847217987001081870187138e0;

    static constexpr double b1 = 5.42937341165687622380535766363e-2;
    static constexpr double b6 = 4.45031289275240888144113950566e0;
    static constexpr double b7 = 1.89151789931450038304281599044e0;
    static constexpr double b8 = -5.8012039600105847814672114227e0;
    static constexpr double b9 = 3.1116436695781989440891606237e-1;
    static constexpr double b10 = -1.52160949662516078556178806805e-1;
    static constexpr double b11 = 2.01365400804030348374776537501e-1;
    static constexpr double b12 = 4.47106157277725905176885569043e-2;

    static constexpr double bhh1 = 0.244094488188976377952755905512e+00;
    static constexpr double bhh2 = 0.733846688281611857341361741547e+00;
    static constexpr double bhh3 = 0.220588235294117647058823529412e-01;

    static constexpr double e51 = 0.1312004499419488073250102996e-01;
    static constexpr double e56 = -0.1225156446376204440720569753e+01;
    static constexpr double e57 = -0.4957589496572501915214079952e+00;
    static constexpr double e58 = 0.1664377182454986536961530415e+01;
    static constexpr double e59 = -0.3503288487499736816886487290e+00;
    static constexpr double e510 = 0.3341791187130174790297318841e+00;
    static constexpr double e511 = 0.8192320648511571246570742613e-01;
    static constexpr double e512 = -0.2235530786388629525884427845e-01;

    static constexpr double d41 = -0.84289382761090128651353491142e+01;
    static constexpr double d46 = 0.56671495351937776962531783590e+00;
    static constexpr double d47 = -0.30689499459498916912797304727e+01;
    static constexpr double d48 = 0.23846676565120698287728149680e+01;
    static constexpr double d49 = 0.21170345824450282767155149946e+01;
    static constexpr double d410 = -0.87139158377797299206789907490e+00;
    static constexpr double d411 = 0.22404374302607882758541771650e+01;
    static constexpr double d412 = 0.63157877876946881815570249290e+00;
    static constexpr double d413 = -0.88990336451333310820698117400e-01;
    static constexpr double d414 = 0.18148505520854727256656404962e+02;
    static constexpr double d415 = -0.91946323924783554000451984436e+01;
    static constexpr double d416 = -0.44360363875948939664310572000e+01;
    static constexpr double d51 = 0.10427508642579134603413151009e+02;
    static constexpr double d56 = 0.24228349177525818288430175319e+03;
    static constexpr double d57 = 0.16520045171727028198505394887e+03;
    static constexpr double d58 = -0.37454675472269020279518312152e+03;
    static constexpr double d59 = -0.22113666853125306036270938578e+02;
    static constexpr double d510 = 0.77334326684722638389603898808e+01;
    static constexpr double d511 = -0.30674084731089398182061213626e+02;
    static constexpr double d512 = -0.93321305264302278729567221706e+01;
    static constexpr double d513 = 0.15697238121770843886131091075e+02;
    static constexpr double d514 = -0.31139403219565177677282850411e+02;
    static constexpr double d515 = -0.93529243588444783865713862664e+01;
    static constexpr double d516 = 0.35816841486394083752465898540e+02;
    static constexpr double d61 = 0.19985053242002433820987653617e+02;
    static constexpr double d66 = -0.38703730874935176555105901742e+03;
    static constexpr double d67 = -0.18917813819516756882830838328e+03;
    static constexpr double d68 = 0.52780815920542364900561016686e+03;
    static constexpr double d69 = -0.11573902539959630126141871134e+02;
    static constexpr double d610 = 0.68812326946963000169666922661e+01;
    static constexpr double d611 = -0.10006050966910838403183860980e+01;
    static constexpr double d612 = 0.77771377980534432092869265740e+00;
    static constexpr double d613 = -0.27782057523535084065932004339e+01;
    static constexpr double d614 = -0.60196695231264120758267380846e+02;
    static constexpr double d615 = 0.84320405506677161018159903784e+02;
    static constexpr double d616 = 0.11992291136182789328035130030e+02;
    static constexpr double d71 = -0.25693933462703749003312586129e+02;
    static constexpr double d76 = -0.15418974869023643374053993627e+03;
    static constexpr double d77 = -0.23152937917604549567536039109e+03;
    static constexpr double d78 = 0.35763911791061412378285349910e+03;
    static constexpr double d79 = 0.93405324183624310003907691704e+02;
    static constexpr double d710 = -0.37458323136451633156875139351e+02;
    static constexpr double d711 = 0.10409964950896230045147246184e+03;
    static constexpr double d712 = 0.29840293426660503123344363579e+02;
    static constexpr double d713 = -0.43533456590011143754432175058e+02;
    static constexpr double d714 = 0.96324553959188282948394950600e+02;
    static constexpr double d715 = -0.39177261675615439165231486172e+02;
    static constexpr double d716 = -0.14972683625798562581422125276e+03;
};

}  // namespace rgwb
