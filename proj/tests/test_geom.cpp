#include "doctest.h"
#include "ell/geom.hpp"
#include "fixtures.hpp"
#include "helpers.hpp"

#include <random>

using namespace ell;
using namespace testutil;

TEST_CASE("polynomial parser") {
    std::vector<Generator> g = {{"h", 1, -1}, {"e", 1, -1}};
    Poly p = parse_poly("1 + 3h - e + 3h^2 - e^2", g);
    CHECK(p.coeff(mono_of({1, 0})) == Rational(3));
    CHECK(p.coeff(mono_of({0, 2})) == Rational(-1));
    CHECK(p.constant_term() == Rational(1));
    CHECK(parse_poly("(1+h)^3", g, 2) == parse_poly("1 + 3h + 3h^2", g));
    CHECK(parse_poly("3/2 h e", g) == parse_poly("3/2*h*e", g));
    CHECK(parse_poly("-(h - e)", g) == parse_poly("e - h", g));
    CHECK(parse_poly("2h", g).str(g) == "2 h");
    CHECK_THROWS_AS(parse_poly("1 + x", g), ParseError);
    CHECK_THROWS_AS(parse_poly("1 +", g), ParseError);
    CHECK_THROWS_AS(parse_poly("(h", g), ParseError);
    CHECK_THROWS_AS(parse_poly("h/0", g), ParseError);
    CHECK(parse_mono("h^2", g) == mono_of({2, 0}));
    CHECK_THROWS_AS(parse_mono("2h", g), ParseError);
    // round trip through the printer
    std::mt19937 rng(3);
    std::uniform_int_distribution<int> c(-4, 4), e(0, 3);
    for (int i = 0; i < 20; ++i) {
        Poly q;
        for (int j = 0; j < 5; ++j) q.add_term(mono_of({e(rng), e(rng)}), Rational(c(rng), 1 + e(rng)));
        CHECK(parse_poly(q.str(g), g) == q);
    }
}

TEST_CASE("integration functional") {
    ManifoldModel p2 = projective_space(2);
    CHECK(integrate(p2, parse_poly("3h^2", p2.gens)) == Rational(3));
    CHECK(integrate(p2, parse_poly("1 + 5h", p2.gens)) == Rational(0));
    ManifoldModel k3 = k3_model();
    CHECK_NOTHROW(validate(k3));
    CHECK(integrate(k3, parse_poly("c2", k3.gens)) == Rational(24));
    CHECK(integrate(k3, parse_poly("c1^2 + c2", k3.gens)) == Rational(24));
    // strict mode refuses undeclared top monomials
    ManifoldModel bl = blowup_surface_point_model(p2);
    CHECK(integrate(bl, parse_poly("h e", bl.gens)) == Rational(0));
    CHECK_THROWS_AS(integrate(bl, parse_poly("h e", bl.gens), true), ModelError);
}

TEST_CASE("power sums by Newton's identities") {
    std::vector<Generator> g = {{"c", 1, -1}};
    auto p = power_sums(parse_poly("1 + c", g), g, 4, 1);
    for (int k = 1; k <= 4; ++k) CHECK(p[k] == Poly::generator(0).pow(k, g, -1));
    ManifoldModel p2 = projective_space(2);
    auto q = power_sums(p2.chern, p2.gens, 2, 2);
    CHECK(q[1] == parse_poly("3h", p2.gens));
    CHECK(q[2] == parse_poly("3h^2", p2.gens));
    // explicit roots: chern of a sum of line bundles, power sums computed directly
    std::vector<Generator> gens = {{"a", 1, -1}, {"b", 1, -1}, {"c", 1, -1}, {"d", 1, -1}};
    std::mt19937 rng(11);
    std::uniform_int_distribution<int> coef(-3, 3);
    for (int trial = 0; trial < 5; ++trial) {
        int rank = 1 + trial % 4;
        std::vector<Poly> roots;
        Poly total = Poly::constant(Rational(1));
        for (int i = 0; i < rank; ++i) {
            Poly r;
            for (int j = 0; j < 4; ++j) r.add_term(mono_of({j == 0, j == 1, j == 2, j == 3}), Rational(coef(rng)));
            roots.push_back(r);
            total = Poly::mul(total, Poly::constant(Rational(1)) + r, gens, 4);
        }
        auto ps = power_sums(total, gens, 4, rank);
        for (int k = 1; k <= 4; ++k) {
            Poly direct;
            for (const auto& r : roots) direct = direct + r.pow(k, gens, 4);
            CHECK(ps[k] == direct);
        }
        CHECK(chern_from_power_sums(ps, gens, 4) == total);
    }
}

TEST_CASE("Whitney additivity of power sums") {
    ManifoldModel a = projective_space(1), b = k3_model();
    ManifoldModel ab = product_model(a, b);
    auto pa = power_sums(a.chern, a.gens, 3, 1);
    auto pb = power_sums(b.chern, b.gens, 3, 2);
    auto pab = power_sums(ab.chern, ab.gens, 3, 3);
    std::vector<int> ma = {0}, mb = {1, 2};
    for (int k = 1; k <= 3; ++k) {
        Poly expect = pa[k].remapped(ma) + pb[k].remapped(mb);
        // drop monomials above the factor caps (they vanish on the product)
        Poly got;
        for (const auto& [m, c] : pab[k].terms()) got.add_term(m, c);
        Poly exp_trim;
        for (const auto& [m, c] : expect.terms())
            if (m[0] <= 1 && 2 * m[2] + m[1] <= 2) exp_trim.add_term(m, c);
        Poly got_trim;
        for (const auto& [m, c] : got.terms())
            if (m[0] <= 1 && 2 * m[2] + m[1] <= 2) got_trim.add_term(m, c);
        CHECK(got_trim == exp_trim);
    }
}

TEST_CASE("sum over roots") {
    ManifoldModel p2 = projective_space(2);
    auto lt = model_truncation(p2, 1, 0, 0, 0);
    auto st = window(1, 0, 0, 0, {{"x", 1}}, 2);
    auto ps = power_sums(p2.chern, p2.gens, 2, 2);
    QSeries x = QSeries::monomial(st, key(*st, 0, 0, 0, {1}), 1);
    QSeries h1 = sum_over_roots(x, 0, ps, lt);
    CHECK(same_terms(h1, poly_to_series(parse_poly("3h", p2.gens), lt)));
    QSeries h2 = sum_over_roots(x * x, 0, ps, lt);
    CHECK(same_terms(h2, poly_to_series(parse_poly("3h^2", p2.gens), lt)));
    // exp(sum log(1 + x_i)) is the total Chern class
    for (const ManifoldModel& m : {p2, k3_model(), blowup_surface_point_model(p2)}) {
        auto t = model_truncation(m, 1, 0, 0, 0);
        auto s = window(1, 0, 0, 0, {{"x", 1}}, m.dim);
        QSeries l = log(QSeries::one(s) + QSeries::monomial(s, key(*s, 0, 0, 0, {1}), 1));
        QSeries c = exp(sum_over_roots(l, 0, power_sums(m.chern, m.gens, m.dim, m.dim), t));
        CHECK(same_terms(c, poly_to_series(m.chern, t)));
    }
}

TEST_CASE("product and blowup models") {
    ManifoldModel p1 = projective_space(1);
    ManifoldModel q = p1xp1_model();
    CHECK(q.gens.size() == 2);
    CHECK(q.gens[1].name == "h2");
    CHECK(integrate(q, parse_poly("h h2", q.gens)) == Rational(1));
    CHECK(integrate(q, parse_poly("h^2", q.gens)) == Rational(0));
    CHECK(integrate(q, q.chern) == Rational(4));
    ManifoldModel xp = product_model(k3_model(), point_model());
    CHECK(xp.dim == 2);
    CHECK(integrate(xp, xp.chern) == Rational(24));
    // associativity up to names
    ManifoldModel a = product_model(product_model(p1, p1), p1), b = product_model(p1, product_model(p1, p1));
    CHECK(a.integrals == b.integrals);
    CHECK(a.chern == b.chern);

    ManifoldModel bl = blowup_surface_point_model(projective_space(2));
    CHECK_NOTHROW(validate(bl));
    Poly c1 = bl.chern.degree_part(bl.gens, 1), c2 = bl.chern.degree_part(bl.gens, 2);
    CHECK(integrate(bl, Poly::mul(c1, c1, bl.gens, 2)) == Rational(8));
    CHECK(integrate(bl, c2) == Rational(4));
    CHECK(*bl.euler == Rational(4));
    REQUIRE(bl.divisors.size() == 1);
    CHECK(bl.divisors[0].delta == Rational(1));
    // two blowups at distinct points, either order
    ManifoldModel b2 = blowup_surface_point_model(bl, "f");
    CHECK(integrate(b2, b2.chern.degree_part(b2.gens, 2)) == Rational(5));
    Poly c1b = b2.chern.degree_part(b2.gens, 1);
    CHECK(integrate(b2, Poly::mul(c1b, c1b, b2.gens, 2)) == Rational(7));
    CHECK_THROWS_AS(blowup_surface_point_model(p1), ModelError);
}

TEST_CASE("model validation") {
    ManifoldModel m = p2_with_divisor(2, Rational(-1), "C");
    CHECK_THROWS_AS(validate(m), KawamataError);
    m.divisors[0].delta = Rational(-1, 2);
    CHECK_NOTHROW(validate(m));
    ManifoldModel k = k3_model();
    k.euler = Rational(23);
    CHECK_THROWS_AS(validate(k), ModelError);
    OrbifoldDatum d = swap_orbifold();
    CHECK_NOTHROW(validate(d));
    d.loci[1].tangent[1].lambda_h = Rational(1);
    CHECK_THROWS_AS(validate(d), ModelError);
    d = swap_orbifold();
    d.loci[1].multiplicity = 0;
    CHECK_THROWS_AS(validate(d), ModelError);
}
