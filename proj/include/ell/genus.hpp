// Elliptic genera: smooth, pairs (hat normalization) and orbifold triples.
//
// Every locus contribution is evaluated as
//     integral of  c * q^A y^B * exp( sum of logs of theta quotients over roots )
// so there is exactly one exp per locus.  Work happens in an enlarged sloped
// window; results are restricted to the requested rectangle |y| <= W, q <= Q
// with an exactness check.
#ifndef ELL_GENUS_HPP
#define ELL_GENUS_HPP

#include "ell/geom.hpp"
#include "ell/theta.hpp"

#include <map>
#include <string>

namespace ell {

struct GenusConfig {
    int Q = 6;
    int W = 8;
    int D = 0;       // 0: smallest denominator that holds every exponent
    int slope = 0;   // 0: automatic
    int guard = -1;  // extra y room in the working window; -1: automatic
    bool strict = false;
};

struct GenusResult {
    std::string name;
    int dim = 0;
    bool hat = false;       // divided by the prefactor per Chern root
    QSeries series;         // in the output rectangle
    QSeries working;        // same value on the enlarged window, exact there
    std::string note;

    GenusResult() : series(nullptr_trunc()), working(nullptr_trunc()) {}
    static TruncationPtr nullptr_trunc();
};

// Denominator needed for a datum (pairs included).
int required_denominator(const OrbifoldDatum& d, bool hat);

// Smooth genus; the model must have no divisors.
GenusResult elliptic_genus(const ManifoldModel& m, const GenusConfig& cfg = {});
// Singular genus of the pair (model, sum of delta_k E_k) with each Chern-root
// factor divided by thetabar(-z)/thetabar'(0).
GenusResult pair_elliptic_genus(const ManifoldModel& m, const GenusConfig& cfg = {});
// Orbifold genus of a triple (no hat).
GenusResult orbifold_elliptic_genus(const OrbifoldDatum& d, const GenusConfig& cfg = {});

// Multiplies a hat result by (thetabar(-z)/thetabar'(0))^dim, returning the
// output-window series.
QSeries unhat(const GenusResult& g);

// The q^0 row: y exponent -> coefficient.
std::map<Rational, CycRational> chi_y_specialize(const QSeries& s);
std::map<Rational, CycRational> chi_y_specialize(const GenusResult& g);
// Sum of the q^0 row (value at y = 1).
CycRational chi_y_at_one(const std::map<Rational, CycRational>& row);

// Ell_orb(lhs) - prefactor^dim * hat-Ell(rhs), on the shared output window.
QSeries verify_mckay(const OrbifoldDatum& lhs, const ManifoldModel& rhs, const GenusConfig& cfg = {});

// ---- numeric -----------------------------------------------------------------

// Numeric smooth genus at a point, from theta Taylor data in the root variable.
cplx numeric_elliptic_genus(const ManifoldModel& m, cplx z, cplx tau);

struct JacobiResiduals {
    double shift_z = 0;   // phi(z+1) - phi(z)
    double shift_tau = 0; // phi(z, tau+1) - phi(z, tau)
    double s_transform = 0; // phi(z/tau, -1/tau) - e^{2 pi i m z^2/tau} phi(z, tau)
    double max() const { return std::max({shift_z, shift_tau, s_transform}); }
};
// Residuals relative to max(1, |phi(z, tau)|); index m = dim/2.
JacobiResiduals verify_jacobi(const ManifoldModel& m, cplx z, cplx tau);

}  // namespace ell

#endif
