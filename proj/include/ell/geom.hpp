// Compact manifolds presented by graded generators and an integration
// functional, plus fixed-locus and group data for orbifold computations.
//
// All ring work happens in the free graded-commutative algebra on the
// declared generators.  Relations are only visible through integrate(),
// which reads the top-degree part.
#ifndef ELL_GEOM_HPP
#define ELL_GEOM_HPP

#include "ell/poly.hpp"

#include <map>
#include <optional>
#include <string>
#include <vector>

namespace ell {

struct Divisor {
    std::string name;
    Poly cls;
    Rational delta;  // the pair coefficient: the factor uses theta(e - (delta+1) z)
    bool operator==(const Divisor&) const = default;
};

struct ManifoldModel {
    std::string name;
    int dim = 0;
    std::vector<Generator> gens;
    std::vector<int> group_caps;          // per-group degree caps (products of models)
    std::map<Mono, Rational> integrals;   // top-degree monomial -> intersection number
    Poly chern = Poly::constant(Rational(1));
    std::vector<Divisor> divisors;
    std::optional<Rational> euler;
    bool c1_zero = false;

    int generator_index(const std::string& name) const;
    bool operator==(const ManifoldModel&) const = default;
};

// Checks the structural invariants; throws ModelError / KawamataError.
void validate(const ManifoldModel& m);

// Linear functional on the degree-dim part.  Strict mode refuses monomials
// with no declared intersection number.
Rational integrate(const ManifoldModel& m, const Poly& p, bool strict = false);

// Elementary symmetric parts c_k = degree-k part of a total Chern class.
std::vector<Poly> chern_classes(const Poly& total, const std::vector<Generator>& gens, int n);
// Power sums p_0..p_n of the Chern roots (p_0 = rank) by Newton's identities.
std::vector<Poly> power_sums(const Poly& total, const std::vector<Generator>& gens, int n, int rank);
// Inverse direction: total Chern class from power sums (Newton again).
Poly chern_from_power_sums(const std::vector<Poly>& p, const std::vector<Generator>& gens, int n);

// Truncation over the model's generators (nmax = dim) with the given q/y window.
TruncationPtr model_truncation(const ManifoldModel& m, int D, int Q, int W, int slope, int P = 0);

// Sum over Chern roots of h(x), where h lives over a truncation whose only
// generator (index slot) is the root variable:  rank * h_0 + sum_k h_k p_k.
QSeries sum_over_roots(const QSeries& h, int slot, const std::vector<Poly>& psums, const TruncationPtr& target);
// h evaluated at a class:  sum_k h_k cls^k.
QSeries substitute_class(const QSeries& h, int slot, const Poly& cls, const TruncationPtr& target);
// Integral of the nilpotent part, coefficientwise; out has no generators.
QSeries integrate_series(const ManifoldModel& m, const QSeries& s, const TruncationPtr& out, bool strict = false);

// ---- builders ------------------------------------------------------------

ManifoldModel point_model();
ManifoldModel projective_space(int n, const std::string& gen = "h");
// Generators of b that clash with a's are renamed (suffix digits).
ManifoldModel product_model(const ManifoldModel& a, const ManifoldModel& b);
// Blowup of a surface at a point: new generator e with e^2 = -1, c1 -> c1 - e,
// c2 -> c2 - e^2, exceptional divisor with pair coefficient 1.
ManifoldModel blowup_surface_point_model(const ManifoldModel& base, const std::string& gen = "e");

// ---- orbifold data ---------------------------------------------------------

struct TangentSummand {
    Rational lambda_g, lambda_h;  // characters in [0,1)
    int rank = 0;
    Poly chern;  // total Chern class in the locus generators
    bool operator==(const TangentSummand&) const = default;
};

struct DivisorRestriction {
    std::string divisor;  // name of an ambient divisor
    Poly cls;             // restricted class on the locus
    Rational eps_g, eps_h;
    bool operator==(const DivisorRestriction&) const = default;
};

struct FixedLocus {
    std::string label;  // "g,h"
    int multiplicity = 1;
    ManifoldModel space;
    std::vector<TangentSummand> tangent;
    std::vector<DivisorRestriction> divisors;
    bool operator==(const FixedLocus&) const = default;
};

struct AmbientDivisor {
    std::string name;
    Rational delta;
    bool operator==(const AmbientDivisor&) const = default;
};

struct OrbifoldDatum {
    std::string name;
    int dim = 0;
    int group_order = 1;
    std::vector<AmbientDivisor> divisors;
    std::vector<FixedLocus> loci;

    const AmbientDivisor& divisor(const std::string& name) const;
    bool operator==(const OrbifoldDatum&) const = default;
};

void validate(const OrbifoldDatum& d);

// The model itself as a datum for the trivial group.
OrbifoldDatum trivial_datum(const ManifoldModel& m);

}  // namespace ell

#endif
