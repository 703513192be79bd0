#include "doctest.h"
#include "ell/genus.hpp"
#include "ell/model_io.hpp"
#include "fixtures.hpp"

using namespace ell;
using namespace testutil;

namespace {

std::string model_path(const std::string& f) { return std::string(ELL_DATA_DIR) + "/models/" + f; }

std::string error_of(const std::string& text) {
    try {
        parse_model_text(text, "t");
    } catch (const Error& e) {
        return e.what();
    }
    return "";
}

const char* kP2 = "[manifold]\nname = P2\ndim = 2\n[generators]\nh = 1\n[integrate]\nh^2 = 1\n[chern]\ntotal = 1 + 3h + 3h^2\n";

}  // namespace

TEST_CASE("model files equal the hand-built fixtures") {
    CHECK(parse_manifold_file(model_path("p2.model")) == projective_space(2));
    CHECK(parse_manifold_file(model_path("p1.model")) == projective_space(1));
    CHECK(parse_manifold_file(model_path("k3.model")) == k3_model());
    CHECK(parse_manifold_file(model_path("p1xp1.model")) == p1xp1_model());
    CHECK(parse_manifold_file(model_path("bl_p2.model")) == blowup_surface_point_model(projective_space(2)));
    ManifoldModel conic = p2_with_divisor(2, Rational(-1, 2), "C");
    CHECK(parse_manifold_file(model_path("p2_half_conic.model")) == conic);
    ParsedModel sw = parse_model_file(model_path("swap.model"));
    REQUIRE(std::holds_alternative<OrbifoldDatum>(sw));
    CHECK(std::get<OrbifoldDatum>(sw) == swap_orbifold());
}

TEST_CASE("serialize then parse is the identity") {
    std::vector<ManifoldModel> ms = {point_model(), projective_space(3), k3_model(), p1xp1_model(),
                                     blowup_surface_point_model(p1xp1_model()),
                                     p2_with_divisor(1, Rational(1, 2), "L"),
                                     product_model(k3_model(), projective_space(1))};
    for (const auto& m : ms) {
        ParsedModel back = parse_model_text(serialize(m));
        REQUIRE(std::holds_alternative<ManifoldModel>(back));
        CHECK_MESSAGE(std::get<ManifoldModel>(back) == m, serialize(m));
    }
    for (const auto& d : {swap_orbifold(), trivial_datum(p2_with_divisor(2, Rational(-1, 3), "C"))}) {
        ParsedModel back = parse_model_text(serialize(d));
        REQUIRE(std::holds_alternative<OrbifoldDatum>(back));
        CHECK_MESSAGE(std::get<OrbifoldDatum>(back) == d, serialize(d));
    }
}

TEST_CASE("parsed half-conic pair reproduces the McKay identity") {
    GenusConfig cfg;
    cfg.Q = 3;
    cfg.W = 4;
    auto sw = std::get<OrbifoldDatum>(parse_model_file(model_path("swap.model")));
    QSeries r = verify_mckay(sw, parse_manifold_file(model_path("p2_half_conic.model")), cfg);
    CHECK(r.empty());
}

TEST_CASE("model parse errors") {
    try {
        parse_manifold_file(model_path("p2_bad_line.model"));
        FAIL("no error");
    } catch (const KawamataError& e) {
        std::string w = e.what();
        CHECK(w.find("'L'") != std::string::npos);
        CHECK(w.find(":18:") != std::string::npos);
    }
    std::string base = kP2;
    CHECK(error_of(base + "colour = red\n").find("t:10: unknown key 'colour'") != std::string::npos);
    CHECK(error_of(base + "[wat]\n").find("t:10: unknown section [wat]") != std::string::npos);
    CHECK(error_of("[manifold]\nname = X\n").find("needs 'dim'") != std::string::npos);
    CHECK(error_of("name = X\n").find("t:1: entry before any section") != std::string::npos);
    CHECK(error_of("[manifold]\nname = X\ndim = 1\n[generators]\nh = 1\n[integrate]\nh^2 = 1\n")
              .find("t:7: 'h^2' is not of top degree 1") != std::string::npos);
    CHECK(error_of("[manifold]\nname = X\ndim = 1\n[generators]\nh = 1\n[chern]\ntotal = 1 + 2g\n").find("t:7:") !=
          std::string::npos);
    CHECK(error_of("[manifold]\nname = X\ndim = 1\nname = Y\n").find("t:4: repeated key") != std::string::npos);
    CHECK(error_of("[manifold]\nname = X\ndim = 1\n[generators]\nh = 1 group 0\n").find("t:5: group 0") !=
          std::string::npos);
    // chern class not starting with 1 is a model error, reported against the header
    CHECK(error_of("[manifold]\nname = X\ndim = 1\n[generators]\nh = 1\n[integrate]\nh = 1\n[chern]\ntotal = 2h\n")
              .find("t:1:") != std::string::npos);
    CHECK(error_of("").find("empty") != std::string::npos);
    // orbifold specifics
    std::string orb = "[orbifold]\nname = O\ndim = 0\ngroup_order = 2\n";
    CHECK(error_of(orb + "[locus]\npair = e,e\ndim = 0\nmultiplicity = 0\n").find("t:8: multiplicity must be positive") !=
          std::string::npos);
    CHECK(error_of(orb + "[tangent]\nlambda = (0, 0)\nrank = 0\n").find("t:5: [tangent] outside a [locus]") !=
          std::string::npos);
    CHECK(error_of(orb + "[divisor]\nname = D\ndelta = -3/2\n").find("'D'") != std::string::npos);
    CHECK(error_of(orb + "[locus]\npair = e,e\ndim = 0\n[tangent]\nlambda = (0, 1/2\nrank = 0\n").find("t:9:") !=
          std::string::npos);
    auto pt = std::get<OrbifoldDatum>(parse_model_text(orb + "[locus]\npair = e,e\ndim = 0\nmultiplicity = 2\n"));
    CHECK(pt.loci.size() == 1);
    CHECK(pt.loci[0].space.integrals.at(Mono{}) == Rational(1));
}
