#include "rgwb/rational.hpp"

#include <catch2/catch_amalgamated.hpp>

#include <random>

using namespace rgwb;

TEST_CASE("rationals stay reduced with positive denominators") {
    Rational r = Rational(6) / Rational(-8);
    CHECK(numerator(r) == -3);
    CHECK(denominator(r) == 4);
    CHECK(to_string(r) == "-3/4");
    CHECK(to_string(Rational(4, 2)) == "2");
    CHECK(denominator(Rational(3, 6) - Rational(1, 2)) == 1);
}

TEST_CASE("complex arithmetic is exact") {
    RationalComplex a(Rational(1, 3), Rational(-2, 7));
    RationalComplex b(Rational(5, 2), Rational(1, 4));
    CHECK((a + b) - b == a);
    CHECK(a * b == b * a);
    CHECK((a * b) / b == a);
    CHECK(a * a.conj() == RationalComplex(a.re * a.re + a.im * a.im));
    CHECK((RationalComplex::unit_im() * RationalComplex::unit_im()) == RationalComplex(-1));
}

TEST_CASE("field laws on random values") {
    std::mt19937 rng(20240811);
    std::uniform_int_distribution<long> num(-12, 12), den(1, 9);
    auto rc = [&]() { return RationalComplex(Rational(num(rng), den(rng)), Rational(num(rng), den(rng))); };
    for (int i = 0; i < 200; ++i) {
        RationalComplex a = rc(), b = rc(), c = rc();
        CHECK(a * (b + c) == a * b + a * c);
        CHECK((a + b) + c == a + (b + c));
        if (!c.is_zero()) CHECK((a * c) / c == a);
    }
}

TEST_CASE("literal parsing is exact") {
    CHECK(parse_rational("0.125") == Rational(1, 8));
    CHECK(parse_rational("-0.1") == Rational(-1, 10));
    CHECK(parse_rational("2.0") == Rational(2));
    CHECK(parse_rational("1e-2") == Rational(1, 100));
    CHECK(parse_rational("2.5e3") == Rational(2500));
    CHECK(parse_rational("-7/3") == Rational(-7, 3));
    CHECK(parse_rational("1e-11") == Rational(1, Int("100000000000")));
    CHECK_THROWS_AS(parse_rational("abc"), std::invalid_argument);
    CHECK_THROWS_AS(parse_rational("1.2.3"), std::invalid_argument);
    CHECK_THROWS_AS(parse_rational(""), std::invalid_argument);
}

TEST_CASE("coefficient strings") {
    CHECK(coeff_string(RationalComplex(Rational(1, 2))) == "(1/2)");
    CHECK(coeff_string(RationalComplex(Rational(-5, 192))) == "-(5/192)");
    CHECK(coeff_string(RationalComplex(3)) == "3");
    CHECK(coeff_string(RationalComplex::unit_im()) == "i");
    CHECK(coeff_string(-RationalComplex::unit_im()) == "-i");
    CHECK(coeff_string(RationalComplex(Rational(0), Rational(-1, 16))) == "-(1/16)*i");
    CHECK(coeff_string(RationalComplex(Rational(1, 2), Rational(3, 4))) == "(1/2+(3/4)*i)");
}
