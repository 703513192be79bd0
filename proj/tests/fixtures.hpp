// Hand-built models shared by the tests (independent of the file parser).
#ifndef ELL_TEST_FIXTURES_HPP
#define ELL_TEST_FIXTURES_HPP

#include "ell/geom.hpp"

namespace testutil {

using namespace ell;

inline Mono mono_of(std::initializer_list<int> e) {
    Mono m{};
    int i = 0;
    for (int x : e) m[i++] = static_cast<std::uint8_t>(x);
    return m;
}

// Abstract K3: formal c1, c2 with c1^2 = 0 and c2 = 24.
inline ManifoldModel k3_model() {
    ManifoldModel m;
    m.name = "K3";
    m.dim = 2;
    m.gens = {{"c1", 1, -1}, {"c2", 2, -1}};
    m.integrals[mono_of({2, 0})] = 0;
    m.integrals[mono_of({0, 1})] = 24;
    m.chern = parse_poly("1 + c1 + c2", m.gens);
    m.euler = Rational(24);
    m.c1_zero = true;
    return m;
}

inline ManifoldModel p1xp1_model() { return product_model(projective_space(1), projective_space(1)); }

// P^2 with a divisor of class k h and pair coefficient delta.
inline ManifoldModel p2_with_divisor(int k, Rational delta, const std::string& name) {
    ManifoldModel m = projective_space(2);
    m.name = "P2+" + name;
    m.divisors.push_back({name, Poly::generator(0).scaled(Rational(k)), delta});
    return m;
}

// P^1 x P^1 with the factor swap: four commuting pairs of Z/2.
inline OrbifoldDatum swap_orbifold() {
    OrbifoldDatum d;
    d.name = "P1xP1/swap";
    d.dim = 2;
    d.group_order = 2;
    FixedLocus whole;
    whole.label = "e,e";
    whole.space = p1xp1_model();
    whole.tangent.push_back({0, 0, 2, whole.space.chern});
    d.loci.push_back(whole);
    // the diagonal P^1: tangent line (trivial) plus normal line (sign)
    ManifoldModel diag = projective_space(1, "a");
    Poly c = parse_poly("1 + 2a", diag.gens);
    struct P {
        const char* label;
        Rational g, h;
    };
    for (P p : {P{"e,s", 0, Rational(1, 2)}, P{"s,e", Rational(1, 2), 0}, P{"s,s", Rational(1, 2), Rational(1, 2)}}) {
        FixedLocus L;
        L.label = p.label;
        L.space = diag;
        L.tangent.push_back({0, 0, 1, c});
        L.tangent.push_back({p.g, p.h, 1, c});
        d.loci.push_back(L);
    }
    return d;
}

}  // namespace testutil

#endif
