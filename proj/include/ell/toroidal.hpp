// Local toric models of toroidal morphisms: a finite-index sublattice
// Nhat of N = Z^r, a subdivision of the first orthant into cones that are
// unimodular in Nhat, piecewise polynomials on it, pullback and pushforward,
// and verifiers for the orthant identities (rational and theta versions).
//
// Everything combinatorial is exact.  Rational-function identities are
// checked by evaluation at random rational points (Schwartz-Zippel: a
// nonzero numerator of degree d vanishes at a point drawn uniformly from
// S^r with probability <= d/|S|); pushforwards are also computed
// symbolically by exact division by the wall forms.
#ifndef ELL_TOROIDAL_HPP
#define ELL_TOROIDAL_HPP

#include "ell/rational.hpp"
#include "ell/theta.hpp"

#include <cstdint>
#include <map>
#include <optional>
#include <random>
#include <string>
#include <vector>

namespace ell {

class Poly;
struct ManifoldModel;

using IVec = std::vector<long long>;
using QVec = std::vector<Rational>;
using QMat = std::vector<QVec>;  // row-major

// ---- integer / rational linear algebra -------------------------------------

// Rows are the vectors.  Nonzero invariant factors d_1 | d_2 | ...
std::vector<long long> smith_invariants(std::vector<IVec> rows);
// Lower-triangular basis (as rows) of the lattice spanned by full-rank rows.
std::vector<IVec> hermite_basis(std::vector<IVec> rows);
Rational determinant(QMat m);
// Throws DomainError when singular.
QMat inverse(const QMat& m);
QMat to_qmat(const std::vector<IVec>& rows);
// m * v
QVec mat_vec(const QMat& m, const QVec& v);

// ---- lattices ----------------------------------------------------------------

struct LatticePair {
    int rank = 0;
    std::vector<IVec> gens;  // generators of Nhat as vectors of N

    // Throws DomainError on a singular or ill-shaped generator set.
    static LatticePair make(std::vector<IVec> gens);
    static LatticePair identity(int rank);

    // |N : Nhat| from the determinant, cross-checked against the Smith form.
    long long index() const;
    bool contains(const IVec& v) const;
    // |Z^I : Nhat meet span(e_i, i in I)|.
    long long face_index(const std::vector<int>& coords) const;
    // |N/Z^I : image of Nhat|, the number of sheets the torus of the face splits into.
    long long transverse_index(const std::vector<int>& coords) const;
};

// One representative per coset of Nhat in N (0 <= v_i < h_i for the Hermite diagonal).
std::vector<IVec> quotient_group_elements(const LatticePair& lp);

// ---- fans --------------------------------------------------------------------

struct SimplicialFan {
    int rank = 0;
    std::vector<std::vector<IVec>> cones;  // maximal cones, rank generators each
    std::vector<int> free;                 // coordinates of the subspace factor; empty: first orthant

    SimplicialFan() = default;
    SimplicialFan(int r, std::vector<std::vector<IVec>> c, std::vector<int> f = {})
        : rank(r), cones(std::move(c)), free(std::move(f)) {}

    bool in_support(const QVec& x) const;
    // Coordinates of x in the generator basis of cone c (the dual forms x_{i;C}).
    QVec dual_coords(std::size_t c, const QVec& x) const;
    // Inverse generator matrices, cached on first use.
    const QMat& dual_matrix(std::size_t c) const;

private:
    mutable std::vector<QMat> inv_;
    mutable std::vector<std::vector<IVec>> inv_for_;  // the cones the cache was built from
};

struct FanReport {
    bool ok = true;
    std::vector<std::string> problems;
    void fail(std::string s) {
        ok = false;
        problems.push_back(std::move(s));
    }
};

// Shape, support, wall pairing and covering (random generic points land in
// exactly one cone).  With lp, also that every cone is a basis of Nhat.
FanReport check_fan(const SimplicialFan& fan, const LatticePair* lp, int trials, std::uint64_t seed);
// Just the unimodularity part.
FanReport check_unimodular(const SimplicialFan& fan, const LatticePair& lp);

// Random subdivision of the first orthant, unimodular in lp: the orthant
// spanned by the smallest multiples of e_i in Nhat is resolved by stellar
// subdivisions at parallelepiped points, then `extra` random stellar
// subdivisions at sums of generators of random faces are applied.
SimplicialFan random_subdivision(const LatticePair& lp, int extra, std::mt19937_64& rng);
// Random sublattice of Z^rank with index <= max_index.
LatticePair random_sublattice(int rank, int max_index, std::mt19937_64& rng);

// ---- polynomials in dual coordinates ----------------------------------------

struct MPoly {
    int nvars = 0;
    std::map<std::vector<int>, Rational> terms;

    static MPoly constant(int nvars, const Rational& c);
    static MPoly variable(int nvars, int i);
    static MPoly linear(const QVec& coeffs);

    bool is_zero() const { return terms.empty(); }
    int degree() const;
    void add(const std::vector<int>& e, const Rational& c);
    Rational eval(const QVec& x) const;
    // p(A y): x_i = sum_j A[i][j] y_j, A has nvars rows.
    MPoly compose(const QMat& a) const;
    // Set the variables not in keep to zero; keep[k] becomes variable k.
    MPoly restrict_to(const std::vector<int>& keep) const;
    std::string str(const std::string& var = "x") const;

    friend MPoly operator+(const MPoly& a, const MPoly& b);
    friend MPoly operator-(const MPoly& a, const MPoly& b);
    friend MPoly operator*(const MPoly& a, const MPoly& b);
    MPoly scaled(const Rational& c) const;
    bool operator==(const MPoly& o) const { return nvars == o.nvars && terms == o.terms; }
};

// a = q * l exactly, l linear and nonzero; nullopt when l does not divide a.
std::optional<MPoly> divide_linear(const MPoly& a, const QVec& l);

MPoly random_mpoly(int nvars, int maxdeg, int nterms, std::mt19937_64& rng);

// ---- piecewise functions -----------------------------------------------------

// On each maximal cone, a polynomial in that cone's dual coordinates
// (variable k pairs with generator k of the cone).
struct PiecewiseFunction {
    std::vector<MPoly> on_cone;

    friend PiecewiseFunction operator*(const PiecewiseFunction& a, const PiecewiseFunction& b);
    friend PiecewiseFunction operator+(const PiecewiseFunction& a, const PiecewiseFunction& b);
};

// The function of a lattice point v of Nhat: prod y_i^{k_i} on the cones
// whose coordinates k of v are all >= 0, zero elsewhere.
PiecewiseFunction point_function(const SimplicialFan& fan, const IVec& v);
// Inverse of point_function on one monomial of one cone.
IVec monomial_point(const SimplicialFan& fan, std::size_t cone, const std::vector<int>& exps);
// First pair of cones whose restrictions to their common face disagree.
std::optional<std::string> compatibility_violation(const SimplicialFan& fan, const PiecewiseFunction& f);

// Pullback of a polynomial in the coordinates x_i of N.
PiecewiseFunction nu_pullback(const SimplicialFan& fan, const MPoly& g);

// Residue check on every interior wall: the poles of the two adjacent terms
// along the wall cancel.  Returns the offending wall, or nullopt.
std::optional<std::string> wall_residue_violation(const SimplicialFan& fan, const PiecewiseFunction& f, int trials,
                                                  std::uint64_t seed);

// (nu_* f) on the face of the orthant spanned by e_i, i in coords (all
// coordinates when empty), as a polynomial in those x_i.  d is the number
// of components over the open orthant; the face gets d times the number of
// torus sheets it splits into.  Throws DomainError naming a wall when a pole
// survives.
MPoly nu_pushforward(const SimplicialFan& fan, const LatticePair& lp, const PiecewiseFunction& f,
                     const Rational& d = Rational(1), std::vector<int> coords = {});
// Same quantity evaluated pointwise (x given in the face coordinates).
Rational nu_pushforward_at(const SimplicialFan& fan, const LatticePair& lp, const PiecewiseFunction& f,
                           const Rational& d, const std::vector<int>& coords, const QVec& x);
// Cover degree attached to a face: d * transverse_index.
Rational face_degree(const LatticePair& lp, const Rational& d, const std::vector<int>& coords);

// For every cone Chat1 of the induced subdivision of a face F and every
// face F2 = F + {i0}: sum over cones Chat2 of F2 containing Chat1 of
// |det Chat2| d_{F2} equals |det Chat1| d_F.  Returns the first failure.
std::optional<std::string> degree_count_violation(const SimplicialFan& fan, const LatticePair& lp, const Rational& d);

// A pulled-back random polynomial plus a few random point functions.
PiecewiseFunction random_compatible_function(const SimplicialFan& fan, std::mt19937_64& rng);
// The pushforward contract for one fan, with `trials` random functions f and
// polynomials g: compatibility, wall residues, degree count, the projection
// formula, nu_* nu^* g = d |N:Nhat| g, symbolic against pointwise values, and
// restriction to every face.  Returns the first failure.
std::optional<std::string> push_contract_violation(const SimplicialFan& fan, const LatticePair& lp, const Rational& d,
                                                   int trials, std::uint64_t seed);
// Same on `fans` random subdivisions of random sublattices (rank 1..max_rank, index <= 6).
std::optional<std::string> random_push_contract_violation(int fans, int max_rank, std::uint64_t seed);

// ---- the orthant identities --------------------------------------------------

// sum_C 1/prod x_{i;C} - |N:Nhat| / prod x_i at x (exact).
Rational firstorth_defect(const SimplicialFan& fan, const LatticePair& lp, const QVec& x);
// Requires a first-orthant fan; exact zero at `trials` random points.
bool verify_firstorth(const SimplicialFan& fan, const LatticePair& lp, int trials, std::uint64_t seed);
// Requires a nonempty subspace factor; sum_C 1/prod x_{i;C} = 0 at random points.
bool verify_toricsum(const SimplicialFan& fan, int trials, std::uint64_t seed);

// Both sides of the theta identity at u = x / (2 pi i); a holds the values a(e_i).
struct ThetaSides {
    cplx lhs, rhs;
};
ThetaSides mainthetalemma_sides(const SimplicialFan& fan, const LatticePair& lp, const QVec& a, const std::vector<cplx>& u,
                                cplx tau);
// Max relative residual |lhs - rhs| / max(1, |rhs|) over `trials` random u.
double verify_mainthetalemma(const SimplicialFan& fan, const LatticePair& lp, const QVec& a, cplx tau, int trials,
                             std::uint64_t seed);
// eps^r lhs(eps x) extrapolated to eps = 0 from eps0, eps0/2, eps0/4 (Richardson),
// compared with sum_C 1/prod x_{i;C}.  Relative difference.
double theta_leading_term_residual(const SimplicialFan& fan, const LatticePair& lp, const QVec& a,
                                   const std::vector<cplx>& x, cplx tau, double eps0);

// ---- rho, light version ------------------------------------------------------

// Snc divisor complex on a model: cones are the index sets I with a
// declared stratum class Z_I (transverse, connected strata only).
struct SncComplex {
    std::vector<Poly> divisors;                   // classes D_i
    std::map<std::vector<int>, Poly> strata;      // sorted I -> class of Z_I
    std::vector<std::vector<int>> empty;          // sorted I with empty intersection
};
// f a polynomial in x_1..x_n.  A monomial with support I and exponents k maps
// to Z_I prod D_i^{k_i - 1}; it maps to 0 when I contains a declared empty
// set, and raises DomainError when I is neither (undeclared stratum).
Poly rho_lite(const SncComplex& cx, const ManifoldModel& m, const MPoly& f);

// ---- fan files -----------------------------------------------------------------

struct FanFile {
    std::string name;
    LatticePair lattice;
    SimplicialFan fan;
    Rational degree = Rational(1);
};
FanFile parse_fan_text(const std::string& text, const std::string& source = "<text>");
FanFile parse_fan_file(const std::string& path);
std::string serialize(const FanFile& f);

}  // namespace ell

#endif
