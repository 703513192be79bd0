#include "doctest.h"
#include "ell/errors.hpp"
#include "ell/geom.hpp"
#include "ell/toroidal.hpp"

#include <algorithm>
#include <set>

using namespace ell;

namespace {

std::string fan_path(const std::string& f) { return std::string(ELL_DATA_DIR) + "/fans/" + f; }

FanFile index3_plane() { return parse_fan_file(fan_path("index3_plane.fan")); }

Rational rnd(std::mt19937_64& rng) {
    std::uniform_int_distribution<long long> n(-40, 40), d(1, 29);
    long long a = 0;
    while (a == 0) a = n(rng);
    return Rational(a, d(rng));
}

// Random compatible function: pulled-back polynomial plus point functions.
PiecewiseFunction random_function(const SimplicialFan& fan, std::mt19937_64& rng) {
    PiecewiseFunction f = nu_pullback(fan, random_mpoly(fan.rank, 2, 3, rng));
    for (int k = 0; k < 3; ++k) {
        std::size_t c = rng() % fan.cones.size();
        std::vector<int> e(fan.rank);
        for (auto& x : e) x = static_cast<int>(rng() % 3);
        auto p = point_function(fan, monomial_point(fan, c, e));
        Rational a(static_cast<long long>(rng() % 7) - 3);
        for (auto& m : p.on_cone) m = m.scaled(a);
        f = f + p;
    }
    return f;
}

std::vector<std::vector<int>> nonempty_faces(int r) {
    std::vector<std::vector<int>> out;
    for (unsigned m = 1; m < (1u << r); ++m) {
        std::vector<int> f;
        for (int i = 0; i < r; ++i)
            if (m & (1u << i)) f.push_back(i);
        out.push_back(f);
    }
    return out;
}

}  // namespace

TEST_CASE("smith and hermite forms") {
    CHECK(smith_invariants({{2, 0}, {0, 3}}) == std::vector<long long>{1, 6});
    CHECK(smith_invariants({{2, 1}, {1, 2}}) == std::vector<long long>{1, 3});
    CHECK(smith_invariants({{2, 4, 4}, {-6, 6, 12}, {10, -4, -16}}) == std::vector<long long>{2, 6, 12});
    auto h = hermite_basis({{2, 1}, {1, 2}});
    CHECK(h[0][1] == 0);
    CHECK(h[0][0] * h[1][1] == 3);
    CHECK(determinant(to_qmat({{1, 2}, {3, 4}})) == Rational(-2));
    auto inv = inverse(to_qmat({{2, 1}, {1, 2}}));
    CHECK(inv[0][0] == Rational(2, 3));
    CHECK(inv[0][1] == Rational(-1, 3));
    CHECK_THROWS_AS(inverse(to_qmat({{1, 2}, {2, 4}})), DomainError);
    CHECK_THROWS_AS(LatticePair::make({{1, 2}, {2, 4}}), DomainError);
}

TEST_CASE("quotient group elements") {
    CHECK(quotient_group_elements(LatticePair::identity(2)) == std::vector<IVec>{{0, 0}});
    CHECK(quotient_group_elements(LatticePair::make({{3, 0}, {0, 1}})).size() == 3);
    FanFile f = index3_plane();
    auto g = quotient_group_elements(f.lattice);
    REQUIRE(g.size() == 3);
    // in every cone basis the cosets have distinct fractional coordinates in {0, 1/3, 2/3}
    for (std::size_t c = 0; c < f.fan.cones.size(); ++c) {
        std::set<QVec> fracs;
        for (const auto& v : g) {
            QVec y = f.fan.dual_coords(c, QVec{Rational(v[0]), Rational(v[1])});
            for (auto& t : y) t = t.frac();
            for (const auto& t : y) CHECK((t * Rational(3)).is_integer());
            fracs.insert(y);
        }
        CHECK(fracs.size() == 3);
        CHECK(fracs.count(QVec{Rational(0), Rational(0)}) == 1);
    }
    for (std::size_t a = 0; a < g.size(); ++a)
        for (std::size_t b = 0; b < a; ++b) {
            IVec d{g[a][0] - g[b][0], g[a][1] - g[b][1]};
            CHECK_FALSE(f.lattice.contains(d));
        }
}

TEST_CASE("face and transverse indices multiply to the index") {
    std::mt19937_64 rng(11);
    for (int t = 0; t < 30; ++t) {
        int r = 1 + static_cast<int>(rng() % 3);
        LatticePair lp = random_sublattice(r, 12, rng);
        CHECK(static_cast<long long>(quotient_group_elements(lp).size()) == lp.index());
        for (const auto& face : nonempty_faces(r))
            CHECK(lp.face_index(face) * lp.transverse_index(face) == lp.index());
    }
    LatticePair lp = LatticePair::make({{2, 0}, {0, 1}});
    CHECK(lp.face_index({0}) == 2);
    CHECK(lp.transverse_index({1}) == 2);
}

TEST_CASE("index-3 plane identity at 20 random rational points") {
    FanFile f = index3_plane();
    CHECK(f.lattice.index() == 3);
    std::mt19937_64 rng(20);
    int done = 0;
    while (done < 20) {
        Rational x1 = rnd(rng), x2 = rnd(rng);
        Rational d1 = x1 - Rational(2) * x2, d2 = Rational(2) * x2 - x1, d3 = Rational(2) * x1 - x2, d4 = x2 - Rational(2) * x1;
        if (d1.is_zero() || d3.is_zero()) continue;
        Rational lhs = (x2 * d1 / Rational(3)).inv() + (d2 / Rational(3) * d3 / Rational(3)).inv() + (x1 * d4 / Rational(3)).inv();
        CHECK(lhs == Rational(3) / (x1 * x2));
        CHECK(firstorth_defect(f.fan, f.lattice, {x1, x2}).is_zero());
        ++done;
    }
}

TEST_CASE("fan validation") {
    FanFile f = index3_plane();
    CHECK(check_fan(f.fan, &f.lattice, 20, 1).ok);
    SimplicialFan gap = f.fan;
    gap.cones.pop_back();
    auto rep = check_fan(gap, nullptr, 20, 1);
    CHECK_FALSE(rep.ok);
    SimplicialFan overlap = f.fan;
    overlap.cones.push_back({{1, 0}, {0, 1}});
    CHECK_FALSE(check_fan(overlap, nullptr, 20, 1).ok);
    SimplicialFan outside = f.fan;
    outside.cones[0][0] = {3, -1};
    CHECK_FALSE(check_fan(outside, nullptr, 20, 1).ok);
    LatticePair full = LatticePair::identity(2);
    auto uni = check_unimodular(f.fan, full);
    CHECK_FALSE(uni.ok);
    CHECK(uni.problems.front().find("determinant 3") != std::string::npos);
}

TEST_CASE("firstorth and toricsum on the bundled fans") {
    for (const char* name : {"index3_plane.fan", "octant_index2.fan", "quadrant_split.fan"}) {
        FanFile f = parse_fan_file(fan_path(name));
        CHECK_MESSAGE(check_fan(f.fan, &f.lattice, 20, 3).ok, name);
        CHECK_MESSAGE(verify_firstorth(f.fan, f.lattice, 20, 7), name);
    }
    for (const char* name : {"half_plane.fan", "plane_quadrants.fan"}) {
        FanFile f = parse_fan_file(fan_path(name));
        CHECK_MESSAGE(check_fan(f.fan, &f.lattice, 20, 3).ok, name);
        CHECK_MESSAGE(verify_toricsum(f.fan, 20, 7), name);
    }
    FanFile bad = parse_fan_file(fan_path("index3_wrong_lattice.fan"));
    CHECK_FALSE(verify_firstorth(bad.fan, bad.lattice, 20, 7));
    CHECK_FALSE(check_unimodular(bad.fan, bad.lattice).ok);
    // trivial one-cone subdivision
    SimplicialFan one{2, {{{1, 0}, {0, 1}}}, {}};
    CHECK(verify_firstorth(one, LatticePair::identity(2), 5, 1));
    // contract: no subspace factor
    CHECK_THROWS_AS(verify_toricsum(one, 5, 1), DomainError);
    // 1/x + 1/(-x) = 0
    SimplicialFan line{1, {{{1}}, {{-1}}}, {0}};
    CHECK(verify_toricsum(line, 5, 1));
    // a non-unimodular toricsum fan: 1/(x/2) + 1/(-x) != 0
    SimplicialFan skew{1, {{{2}}, {{-1}}}, {0}};
    CHECK_FALSE(verify_toricsum(skew, 5, 1));
}

TEST_CASE("theta identity on the orthant fans") {
    cplx tau(0.13, 1.1);
    SimplicialFan one{2, {{{1, 0}, {0, 1}}}, {}};
    CHECK(verify_mainthetalemma(one, LatticePair::identity(2), {Rational(1, 5), Rational(2, 7)}, tau, 3, 1) < 1e-12);
    FanFile f = index3_plane();
    CHECK(verify_mainthetalemma(f.fan, f.lattice, {Rational(3, 11), Rational(-2, 13)}, tau, 5, 9) < 1e-8);
    CHECK(verify_mainthetalemma(f.fan, f.lattice, {Rational(1, 1000), Rational(1, 997)}, tau, 5, 4) < 1e-8);
    FanFile o = parse_fan_file(fan_path("octant_index2.fan"));
    CHECK(verify_mainthetalemma(o.fan, o.lattice, {Rational(1, 7), Rational(2, 9), Rational(-1, 5)}, cplx(0, 1.3), 3, 2) <
          1e-8);
    // the wrong index breaks it
    FanFile bad = parse_fan_file(fan_path("index3_wrong_lattice.fan"));
    CHECK(verify_mainthetalemma(bad.fan, bad.lattice, {Rational(3, 11), Rational(-2, 13)}, tau, 2, 9) > 1e-3);
}

TEST_CASE("firstorth as the leading term of the theta identity") {
    FanFile f = index3_plane();
    std::vector<cplx> x{cplx(0.7, 0.2), cplx(-0.4, 0.9)};
    CHECK(theta_leading_term_residual(f.fan, f.lattice, {Rational(3, 11), Rational(-2, 13)}, x, cplx(0.1, 1.2), 1e-3) <
          1e-6);
    FanFile o = parse_fan_file(fan_path("octant_index2.fan"));
    std::vector<cplx> x3{cplx(0.5, 0.1), cplx(0.3, -0.6), cplx(-0.8, 0.2)};
    CHECK(theta_leading_term_residual(o.fan, o.lattice, {Rational(1, 7), Rational(2, 9), Rational(-1, 5)}, x3, cplx(0, 1.1),
                                      1e-3) < 1e-6);
}

TEST_CASE("pullback") {
    FanFile f = index3_plane();
    auto c = nu_pullback(f.fan, MPoly::constant(2, Rational(5)));
    for (const auto& p : c.on_cone) CHECK(p == MPoly::constant(2, Rational(5)));
    // x1 becomes the piecewise-linear function whose value at each generator is its first coordinate
    auto x1 = nu_pullback(f.fan, MPoly::variable(2, 0));
    for (std::size_t k = 0; k < f.fan.cones.size(); ++k)
        for (int j = 0; j < 2; ++j) {
            QVec e(2);
            e[j] = Rational(1);
            CHECK(x1.on_cone[k].eval(e) == Rational(f.fan.cones[k][j][0]));
        }
    std::mt19937_64 rng(5);
    for (int t = 0; t < 5; ++t) {
        MPoly a = random_mpoly(2, 3, 4, rng), b = random_mpoly(2, 3, 4, rng);
        auto lhs = nu_pullback(f.fan, a * b), rhs = nu_pullback(f.fan, a) * nu_pullback(f.fan, b);
        for (std::size_t k = 0; k < lhs.on_cone.size(); ++k) CHECK(lhs.on_cone[k] == rhs.on_cone[k]);
        CHECK_FALSE(compatibility_violation(f.fan, nu_pullback(f.fan, a)));
    }
}

TEST_CASE("point functions round-trip") {
    FanFile f = index3_plane();
    for (std::size_t c = 0; c < f.fan.cones.size(); ++c)
        for (int a = 0; a < 3; ++a)
            for (int b = 0; b < 3; ++b) {
                IVec v = monomial_point(f.fan, c, {a, b});
                auto pf = point_function(f.fan, v);
                CHECK(pf.on_cone[c].terms.size() == 1);
                CHECK(pf.on_cone[c].terms.begin()->first == std::vector<int>{a, b});
                CHECK_FALSE(compatibility_violation(f.fan, pf));
            }
    CHECK_THROWS_AS(point_function(f.fan, {1, 0}), DomainError);
}

TEST_CASE("pushforward examples") {
    FanFile f = index3_plane();
    const auto& fan = f.fan;
    const auto& lp = f.lattice;
    // nu_*(1) = |N:Nhat|, and the projection formula with f = 1
    CHECK(nu_pushforward(fan, lp, nu_pullback(fan, MPoly::constant(2, Rational(1)))) == MPoly::constant(2, Rational(3)));
    MPoly g = MPoly::variable(2, 0) * MPoly::variable(2, 1) + MPoly::constant(2, Rational(-2));
    CHECK(nu_pushforward(fan, lp, nu_pullback(fan, g)) == g.scaled(Rational(3)));
    // minimal point of an interior ray: the image has smaller dimension
    CHECK(nu_pushforward(fan, lp, point_function(fan, {2, 1})).is_zero());
    CHECK(nu_pushforward(fan, lp, point_function(fan, {1, 2})).is_zero());
    // minimal interior point of a maximal cone: d prod x_i
    MPoly x1x2 = MPoly::variable(2, 0) * MPoly::variable(2, 1);
    CHECK(nu_pushforward(fan, lp, point_function(fan, {3, 3})) == x1x2);
    CHECK(nu_pushforward(fan, lp, point_function(fan, {3, 3}), Rational(2)) == x1x2.scaled(Rational(2)));
    // single cone, identity lattice
    SimplicialFan one{2, {{{1, 0}, {0, 1}}}, {}};
    PiecewiseFunction unit{{MPoly::constant(2, Rational(1))}};
    CHECK(nu_pushforward(one, LatticePair::identity(2), unit) == MPoly::constant(2, Rational(1)));
    // faces: the ray e1 sees the cone (3,0); restriction of nu_*(1) is 3
    CHECK(nu_pushforward(fan, lp, nu_pullback(fan, MPoly::constant(2, Rational(1))), Rational(1), {0}) ==
          MPoly::constant(1, Rational(3)));
}

TEST_CASE("pushforward rejects incompatible data and names the wall") {
    FanFile f = index3_plane();
    PiecewiseFunction bad{{MPoly::constant(2, Rational(1)), MPoly::constant(2, Rational(2)), MPoly::constant(2, Rational(2))}};
    CHECK(compatibility_violation(f.fan, bad));
    auto wall = wall_residue_violation(f.fan, bad, 3, 1);
    REQUIRE(wall);
    CHECK(wall->find("[(2,1)]") != std::string::npos);
    try {
        nu_pushforward(f.fan, f.lattice, bad);
        FAIL("no error");
    } catch (const DomainError& e) {
        CHECK(std::string(e.what()).find("wall") != std::string::npos);
    }
}

TEST_CASE("degree count flags a cone that is not a lattice basis") {
    FanFile f = index3_plane();
    CHECK_FALSE(degree_count_violation(f.fan, f.lattice, Rational(1)));
    CHECK_FALSE(degree_count_violation(f.fan, f.lattice, Rational(2)));
    SimplicialFan skew{2, {{{1, 0}, {1, 2}}, {{1, 2}, {0, 1}}}};
    REQUIRE(check_fan(skew, nullptr, 10, 1).ok);
    auto v = degree_count_violation(skew, LatticePair::identity(2), Rational(1));
    REQUIRE(v);
    CHECK(v->find("(1,0)") != std::string::npos);
}

TEST_CASE("divide_linear") {
    std::mt19937_64 rng(3);
    for (int t = 0; t < 20; ++t) {
        MPoly a = random_mpoly(3, 3, 5, rng);
        QVec l{Rational(static_cast<long long>(rng() % 5) - 2), Rational(1, 2), Rational(static_cast<long long>(rng() % 3))};
        auto q = divide_linear(a * MPoly::linear(l), l);
        REQUIRE(q);
        CHECK(*q == a);
    }
    MPoly x = MPoly::variable(2, 0) + MPoly::constant(2, Rational(1));
    CHECK_FALSE(divide_linear(x, {Rational(0), Rational(1)}));
}

TEST_CASE("pushforward contract on random subdivisions") {
    std::mt19937_64 rng(2024);
    int checked = 0;
    for (int t = 0; t < 24; ++t) {
        int r = 1 + t % 3;
        LatticePair lp = random_sublattice(r, 6, rng);
        SimplicialFan fan = random_subdivision(lp, 1 + static_cast<int>(rng() % 4), rng);
        auto rep = check_fan(fan, &lp, 10, t);
        REQUIRE_MESSAGE(rep.ok, (rep.problems.empty() ? "" : rep.problems.front()));
        Rational d(1 + static_cast<long long>(rng() % 2));
        PiecewiseFunction f = random_function(fan, rng);
        MPoly g = random_mpoly(r, 2, 3, rng);
        CHECK_FALSE(compatibility_violation(fan, f));
        CHECK_FALSE(wall_residue_violation(fan, f, 2, t));
        CHECK_FALSE(degree_count_violation(fan, lp, d));
        MPoly push = nu_pushforward(fan, lp, f, d);
        // projection formula
        CHECK(nu_pushforward(fan, lp, nu_pullback(fan, g) * f, d) == g * push);
        CHECK(nu_pushforward(fan, lp, nu_pullback(fan, g), d) == g.scaled(d * Rational(lp.index())));
        // the symbolic result agrees with pointwise evaluation
        for (int k = 0; k < 3; ++k) {
            QVec x(r);
            for (auto& v : x) v = rnd(rng);
            try {
                CHECK(push.eval(x) == nu_pushforward_at(fan, lp, f, d, {}, x));
            } catch (const DomainError&) {
            }
        }
        // compatible with face restrictions
        for (const auto& face : nonempty_faces(r)) {
            std::vector<int> keep = face;
            CHECK(push.restrict_to(keep) == nu_pushforward(fan, lp, f, d, face));
        }
        ++checked;
    }
    CHECK(checked == 24);
}

TEST_CASE("rho_lite") {
    ManifoldModel p2 = projective_space(2);
    Poly h = Poly::generator(0);
    Poly h2 = Poly::mul(h, h, p2.gens, 2);
    // two lines meeting in a point
    SncComplex lines{{h, h}, {{{0}, h}, {{1}, h}, {{0, 1}, h2}}, {}};
    MPoly x1 = MPoly::variable(2, 0), x2 = MPoly::variable(2, 1);
    CHECK(rho_lite(lines, p2, x1) == h);
    CHECK(integrate(p2, rho_lite(lines, p2, x1 * x2)) == Rational(1));
    CHECK(rho_lite(lines, p2, x1 * x2) == Poly::mul(rho_lite(lines, p2, x1), rho_lite(lines, p2, x2), p2.gens, 2));
    CHECK(rho_lite(lines, p2, x1 * x1) == h2);
    std::mt19937_64 rng(8);
    for (int t = 0; t < 10; ++t) {
        MPoly a = random_mpoly(2, 2, 3, rng), b = random_mpoly(2, 2, 3, rng);
        CHECK(integrate(p2, rho_lite(lines, p2, a * b)) ==
              integrate(p2, Poly::mul(rho_lite(lines, p2, a), rho_lite(lines, p2, b), p2.gens, 2)));
    }
    // two fibres of the same ruling on P1 x P1: no common cone, both sides vanish
    ManifoldModel q = product_model(projective_space(1), projective_space(1));
    Poly a = Poly::generator(0);
    SncComplex fibres{{a, a}, {{{0}, a}, {{1}, a}}, {{0, 1}}};
    CHECK(rho_lite(fibres, q, x1 * x2).is_zero());
    CHECK(integrate(q, Poly::mul(rho_lite(fibres, q, x1), rho_lite(fibres, q, x2), q.gens, 2)).is_zero());
    // undeclared stratum
    SncComplex partial{{h, h}, {{{0}, h}, {{1}, h}}, {}};
    CHECK_THROWS_AS(rho_lite(partial, p2, x1 * x2), DomainError);
}

TEST_CASE("fan files") {
    FanFile f = index3_plane();
    CHECK(f.name == "index3_plane");
    CHECK(f.fan.cones.size() == 3);
    for (const char* name : {"index3_plane.fan", "index3_wrong_lattice.fan", "octant_index2.fan", "quadrant_split.fan",
                             "half_plane.fan", "plane_quadrants.fan"}) {
        FanFile a = parse_fan_file(fan_path(name));
        FanFile b = parse_fan_text(serialize(a));
        CHECK(b.fan.cones == a.fan.cones);
        CHECK(b.fan.free == a.fan.free);
        CHECK(b.lattice.gens == a.lattice.gens);
        CHECK(b.name == a.name);
    }
    auto err = [](const std::string& text) -> std::string {
        try {
            parse_fan_text(text, "t");
        } catch (const Error& e) {
            return e.what();
        }
        return "";
    };
    CHECK(err("[cone]\ngens = [[1,0],[0,1]]\n").find("t:1: [cone] before [lattice]") != std::string::npos);
    CHECK(err("[lattice]\nrank = 2\n[cone]\ngens = [[1,0],[0,1,2]]\n").find("t:4:") != std::string::npos);
    CHECK(err("[lattice]\nrank = 2\nsublattice = [[1,2],[2,4]]\n[cone]\ngens = [[1,0],[0,1]]\n").find("t:1:") !=
          std::string::npos);
    CHECK(err("[lattice]\nrank = 2\n[cone]\ngens = [[1,0],[1,1]]\n").find("t:1:") != std::string::npos);  // gap
    CHECK(err("[lattice]\nrank = 2\ncolour = 3\n").find("t:3: unknown key 'colour'") != std::string::npos);
    CHECK(err("[lattice]\nrank = 2\n[cone]\ngens = [[1,0],[0,1]\n").find("t:4: bad list") != std::string::npos);
}

TEST_CASE("packaged pushforward contract") {
    FanFile f = index3_plane();
    CHECK_FALSE(push_contract_violation(f.fan, f.lattice, Rational(1), 4, 3));
    CHECK_FALSE(random_push_contract_violation(9, 3, 11));
    // a cone that is not a basis of the lattice breaks the degree count
    SimplicialFan skew{2, {{{1, 0}, {1, 2}}, {{1, 2}, {0, 1}}}, {}};
    auto v = push_contract_violation(skew, LatticePair::identity(2), Rational(1), 1, 3);
    REQUIRE(v);
    CHECK(v->find("degree count") == 0);
}
