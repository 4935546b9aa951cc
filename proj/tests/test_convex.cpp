#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "pgn/convex.hpp"

using namespace pgn;

namespace {
Rational Q(const char* s) { return Rational::parse(s); }
std::vector<Rational> seq(std::initializer_list<const char*> vals) {
    std::vector<Rational> v;
    for (auto* s : vals) v.push_back(Q(s));
    return v;
}
}  // namespace

TEST_CASE("rational arithmetic basics") {
    CHECK(Q("-6/5") + Q("1/2") + Q("7/10") == Q("0"));
    CHECK(Q("2/4") == Q("1/2"));
    CHECK(Q("1/3") < Q("1/2"));
    CHECK((Q("-3/7") * Q("-7/3")) == Q("1"));
    CHECK(Q("-5").str() == "-5");
    CHECK(Q("10/-4").str() == "-5/2");
    CHECK_THROWS_AS(Rational::parse("1/0"), std::domain_error);
    CHECK(Q("-7/2").abs() == Q("7/2"));
    CHECK(Q("-3").positive_part() == Q("0"));
}

TEST_CASE("lower convex hull of sequences") {
    CHECK(convexify(seq({"0", "-1", "-2", "-1", "0"})) == seq({"0", "-1", "-2", "-1", "0"}));
    CHECK(convexify(seq({"0", "0", "-1", "0", "0"})) == seq({"0", "-1/2", "-1", "-1/2", "0"}));
    CHECK(convexify(seq({"0", "1", "0"})) == seq({"0", "0", "0"}));
}

TEST_CASE("hull of sparse points includes flats") {
    std::vector<std::pair<int, Rational>> pts{{0, Q("0")}, {2, Q("-2")}, {4, Q("0")}};
    auto h = convexify(pts, 4);
    CHECK(h == seq({"0", "-1", "-2", "-1", "0"}));
    CHECK_THROWS_AS(convexify({{1, Q("0")}, {4, Q("0")}}, 4), Error);
}

TEST_CASE("height sequence shift") {
    auto a = seq({"0", "-3", "-4", "-3", "0"});
    auto rho = seq({"0", "2", "2", "2", "0"});
    CHECK(shift_height(a, rho) == seq({"0", "-1", "-2", "-1", "0"}));

    CHECK(shift_height(a, seq({"0", "0", "0", "0", "0"})) == a);
    CHECK(shift_height(seq({"0", "-1", "0"}), seq({"0", "1", "0"})) == seq({"0", "0", "0"}));
    CHECK_THROWS_WITH_AS(shift_height(a, seq({"0", "-1", "3", "-1", "0"})),
                         doctest::Contains("NotConcave"), Error);

    // The shift lies between a and a + max rho and depends only on the values
    // of rho at the nontrivial places.
    auto shifted = shift_height(a, rho);
    for (size_t l = 0; l < a.size(); ++l) {
        CHECK(a[l] <= shifted[l]);
        CHECK(shifted[l] <= a[l] + Q("2"));
    }
}

TEST_CASE("vanishing numbers") {
    CHECK(vanishing_number(seq({"0", "-1", "0"}), 1) == Q("1"));
    CHECK(vanishing_number(seq({"0", "-2", "-2", "0"}), 1) == Q("1"));
    CHECK(vanishing_number(seq({"0", "0", "-1", "0"}), 1) == Q("0"));  // flat place

    // zeta_l > 0 iff the second difference is positive, and the level really
    // leaves the hull at zeta_l but not just before.
    auto a = seq({"0", "-5/2", "-3", "-3/2", "0"});
    for (int l = 1; l <= 3; ++l) {
        Rational z = vanishing_number(a, l);
        CHECK((z.is_positive()) == (second_difference(a, l).is_positive()));
        if (z.is_positive()) {
            std::vector<Rational> rho, rho_smaller;
            int n = static_cast<int>(a.size()) - 1;
            for (int i = 0; i <= n; ++i) {
                rho.push_back(z * Rational(i) * Rational(n - i));
                rho_smaller.push_back(z * Rational(i) * Rational(n - i) * Q("9/10"));
            }
            auto hull = shift_height(a, rho);
            auto hull_smaller = shift_height(a, rho_smaller);
            CHECK_FALSE(second_difference(hull, l).is_positive());
            CHECK(second_difference(hull_smaller, l).is_positive());
        }
    }
}

TEST_CASE("piecewise linear function evaluation and inverse") {
    PLFunction f({Q("0"), Q("1"), Q("3")}, {Q("0"), Q("2"), Q("3")});
    CHECK(f(Q("1/2")) == Q("1"));
    CHECK(f(Q("2")) == Q("5/2"));
    CHECK(f.inverse(Q("5/2")) == Q("2"));
    CHECK(f.inverse(Q("0")) == Q("0"));
}
