#include "rgwb/series.hpp"

#include <catch2/catch_amalgamated.hpp>

#include <complex>
#include <random>

using namespace rgwb;

namespace {

TermKey key(int m, int l, int p, int q, int wpow = 0, std::map<std::string, int> eps = {},
            std::map<std::string, int> epsdot = {}) {
    TermKey k;
    k.harmonic = m;
    k.t_pow = l;
    k.amp_pow = p;
    k.conj_pow = q;
    k.omega_pow = wpow;
    k.eps_pows = std::move(eps);
    k.epsdot_pows = std::move(epsdot);
    return k;
}

FourierSecularSeries random_real_series(std::mt19937& rng, int nterms) {
    std::uniform_int_distribution<int> m(-3, 3), l(0, 2), pq(0, 2), w(-2, 0), num(-6, 6), den(1, 5);
    FourierSecularSeries s;
    for (int i = 0; i < nterms; ++i) {
        TermKey k = key(m(rng), l(rng), pq(rng), pq(rng), w(rng));
        RationalComplex c(Rational(num(rng), den(rng)), Rational(num(rng), den(rng)));
        s.add_term(k, c);
        TermKey kc = k;
        kc.harmonic = -k.harmonic;
        std::swap(kc.amp_pow, kc.conj_pow);
        s.add_term(kc, c.conj());
    }
    return s;
}

NumericContext random_context(std::mt19937& rng) {
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    NumericContext ctx;
    ctx.t = 1.0 + u(rng);
    ctx.t1 = ctx.t - 0.25 * u(rng);
    ctx.omega = 1.5 + 0.5 * u(rng);
    ctx.amp = {0.5 + 0.4 * u(rng), 0.4 * u(rng)};
    ctx.eps["mu"] = 0.3 + 0.1 * u(rng);
    ctx.eps["beta"] = 0.2 + 0.1 * u(rng);
    ctx.epsdot["mu"] = 0.05 * u(rng);
    return ctx;
}

}  // namespace

TEST_CASE("additive inverse cancels exactly") {
    FourierSecularSeries y0 = FourierSecularSeries::bare_amplitude();
    CHECK((y0 - y0).empty());
    FourierSecularSeries neg = y0.scaled(RationalComplex(-1));
    CHECK((y0 + neg).empty());
}

TEST_CASE("merging equal keys sums coefficients") {
    FourierSecularSeries s;
    s.add_term(key(1, 1, 2, 1), RationalComplex(Rational(1, 3)));
    s.add_term(key(1, 1, 2, 1), RationalComplex(Rational(1, 6)));
    REQUIRE(s.size() == 1);
    CHECK(s.coeff(key(1, 1, 2, 1)) == RationalComplex(Rational(1, 2)));
    s.add_term(key(1, 1, 2, 1), RationalComplex(Rational(-1, 2)));
    CHECK(s.empty());
}

TEST_CASE("orders do not merge across eps monomials") {
    FourierSecularSeries a;
    a.add_term(key(1, 0, 1, 0), RationalComplex(1));
    FourierSecularSeries b;
    b.add_term(key(1, 0, 1, 0, 0, {{"mu", 1}}), RationalComplex(1));
    FourierSecularSeries sum = a + b;
    CHECK(sum.size() == 2);
}

TEST_CASE("square of the bare solution") {
    FourierSecularSeries y0 = FourierSecularSeries::bare_amplitude();
    FourierSecularSeries sq = y0 * y0;
    // A^2 e^{2iwt} + 2|A|^2 + conj(A)^2 e^{-2iwt}
    REQUIRE(sq.size() == 3);
    CHECK(sq.coeff(key(2, 0, 2, 0)) == RationalComplex(1));
    CHECK(sq.coeff(key(0, 0, 1, 1)) == RationalComplex(2));
    CHECK(sq.coeff(key(-2, 0, 0, 2)) == RationalComplex(1));
}

TEST_CASE("prime-frequency coefficient of y0^2 y0'") {
    FourierSecularSeries y0 = FourierSecularSeries::bare_amplitude();
    FourierSecularSeries prod = y0 * y0 * y0.ddt();
    // e^{iwt} part carries i w A |A|^2
    CHECK(prod.coeff(key(1, 0, 2, 1, 1)) == RationalComplex::unit_im());
}

TEST_CASE("multiplying by the empty series annihilates") {
    FourierSecularSeries y0 = FourierSecularSeries::bare_amplitude();
    CHECK((y0 * FourierSecularSeries{}).empty());
}

TEST_CASE("time derivative") {
    FourierSecularSeries a = FourierSecularSeries::single(key(1, 0, 1, 0), RationalComplex(1));
    FourierSecularSeries da = a.ddt();
    REQUIRE(da.size() == 1);
    CHECK(da.coeff(key(1, 0, 1, 0, 1)) == RationalComplex::unit_im());

    FourierSecularSeries b = FourierSecularSeries::single(key(1, 1, 0, 0), RationalComplex(1));
    FourierSecularSeries db = b.ddt();
    CHECK(db.coeff(key(1, 0, 0, 0)) == RationalComplex(1));
    CHECK(db.coeff(key(1, 1, 0, 0, 1)) == RationalComplex::unit_im());
}

TEST_CASE("product rule against numeric evaluation") {
    std::mt19937 rng(7);
    for (int trial = 0; trial < 25; ++trial) {
        FourierSecularSeries a = random_real_series(rng, 3);
        FourierSecularSeries b = random_real_series(rng, 3);
        FourierSecularSeries lhs = (a * b).ddt();
        FourierSecularSeries rhs = a.ddt() * b + a * b.ddt();
        NumericContext ctx = random_context(rng);
        std::complex<double> l = lhs.eval(ctx), r = rhs.eval(ctx);
        CHECK(std::abs(l - r) < 1e-12 * (1.0 + std::abs(l)));
        CHECK(lhs == rhs);
    }
}

TEST_CASE("multiplication agrees with numeric evaluation") {
    std::mt19937 rng(11);
    for (int trial = 0; trial < 25; ++trial) {
        FourierSecularSeries a = random_real_series(rng, 4);
        FourierSecularSeries b = random_real_series(rng, 4);
        FourierSecularSeries prod = a * b;
        NumericContext ctx = random_context(rng);
        std::complex<double> lhs = prod.eval(ctx);
        std::complex<double> rhs = a.eval(ctx) * b.eval(ctx);
        CHECK(std::abs(lhs - rhs) < 1e-11 * (1.0 + std::abs(rhs)));
    }
}

TEST_CASE("conjugation closure is preserved by the algebra") {
    std::mt19937 rng(13);
    for (int trial = 0; trial < 25; ++trial) {
        FourierSecularSeries a = random_real_series(rng, 4);
        FourierSecularSeries b = random_real_series(rng, 3);
        REQUIRE(a.is_real_closed());
        CHECK((a * b).is_real_closed());
        CHECK(a.ddt().is_real_closed());
        CHECK((a + b).is_real_closed());
    }
}

TEST_CASE("rate powers cap at one") {
    TermKey k = key(1, 0, 1, 0, 0, {}, {{"mu", 1}});
    FourierSecularSeries a = FourierSecularSeries::single(k, RationalComplex(1));
    CHECK_THROWS_AS(a * a, std::domain_error);
    TermKey bad = key(1, 0, 1, 0);
    bad.epsdot_pows = {{"mu", 2}};
    FourierSecularSeries s;
    CHECK_THROWS_AS(s.add_term(bad, RationalComplex(1)), std::domain_error);
    TermKey two = key(1, 0, 1, 0);
    two.epsdot_pows = {{"mu", 1}, {"beta", 1}};
    CHECK_THROWS_AS(s.add_term(two, RationalComplex(1)), std::domain_error);
}

TEST_CASE("canonical table is insertion-order independent") {
    std::mt19937 rng(17);
    FourierSecularSeries fwd, bwd;
    std::vector<SeriesTerm> terms;
    for (int i = 0; i < 30; ++i) {
        std::uniform_int_distribution<int> m(-2, 2), l(0, 2), pq(0, 2), num(-5, 5), den(1, 4);
        terms.push_back(
            {key(m(rng), l(rng), pq(rng), pq(rng)), RationalComplex(Rational(num(rng), den(rng)))});
    }
    for (auto& t : terms) fwd.add_term(t.key, t.coeff);
    for (auto it = terms.rbegin(); it != terms.rend(); ++it) bwd.add_term(it->key, it->coeff);
    CHECK(fwd == bwd);
    CHECK(fwd.str() == bwd.str());
}

TEST_CASE("pretty printer canonical forms") {
    // (1/2)*(t-t1)*A*(1-|A|^2)*e^{i w t}
    FourierSecularSeries s;
    s.add_term(key(1, 1, 1, 0), RationalComplex(Rational(1, 2)));
    s.add_term(key(1, 1, 2, 1), RationalComplex(Rational(-1, 2)));
    CHECK(s.str() == "(1/2)*(t-t1)*A*(1-|A|^2)*e^{i w t}");

    FourierSecularSeries t;
    t.add_term(key(3, 0, 3, 0, -1), RationalComplex(Rational(0), Rational(1, 8)));
    CHECK(t.str() == "(1/8)*i/w*A^3*e^{3 i w t}");

    FourierSecularSeries u;
    u.add_term(key(5, 0, 5, 0, -2), RationalComplex(Rational(-5, 192)));
    CHECK(u.str() == "-(5/192)/w^2*A^5*e^{5 i w t}");

    FourierSecularSeries v;
    v.add_term(key(1, 1, 1, 0, -1), RationalComplex(Rational(0), Rational(-2, 16)));
    v.add_term(key(1, 1, 2, 1, -1), RationalComplex(Rational(0), Rational(8, 16)));
    v.add_term(key(1, 1, 3, 2, -1), RationalComplex(Rational(0), Rational(-7, 16)));
    CHECK(v.str() == "-(1/16)*i/w*(t-t1)*A*(2-8*|A|^2+7*|A|^4)*e^{i w t}");

    FourierSecularSeries w;
    w.add_term(key(0, 0, 0, 0), RationalComplex(1));
    CHECK(w.str() == "1");
    CHECK(FourierSecularSeries{}.str() == "0");

    FourierSecularSeries x;
    x.add_term(key(-1, 0, 0, 1, 0, {{"mu", 1}}), RationalComplex(Rational(3, 4)));
    CHECK(x.str() == "(3/4)*mu*conj(A)*e^{-i w t}");

    FourierSecularSeries z;
    z.add_term(key(2, 0, 2, 0, 0, {}, {{"mu", 1}}), RationalComplex(1));
    CHECK(z.str() == "mu'*A^2*e^{2 i w t}");
}
