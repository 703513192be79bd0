// Jacobi theta function: formal reduced series and a numeric evaluator.
//
// Convention: theta(z, tau) = q^{1/8} 2 sin(pi z) prod (1-q^l)(1-q^l y)(1-q^l/y)
//                            = -i q^{1/8} thetabar(z, tau),
// and only thetabar is stored.  Every quotient used by the genus code has as
// many thetas upstairs as downstairs, so the -i q^{1/8} never matters.
#ifndef ELL_THETA_HPP
#define ELL_THETA_HPP

#include "ell/series.hpp"

#include <complex>
#include <optional>

namespace ell {

using cplx = std::complex<double>;

// Exponent in units of 1/D; throws ParameterError when off the lattice.
long long to_units(const Rational& r, int D, const char* what);

// c * q^A * y^B * exp(log): the shape every theta quotient is kept in.
struct FactorLog {
    CycRational c = CycRational(1);
    long long qA = 0;  // units of 1/D
    long long yB = 0;
    QSeries log;

    explicit FactorLog(TruncationPtr t) : log(std::move(t)) {}

    FactorLog& operator*=(const FactorLog& o);
    FactorLog pow(int r) const;
    // The series value c q^A y^B exp(log).
    QSeries expand() const;
};

// thetabar(z) through the window (needs D even).
QSeries theta_bar(const TruncationPtr& t);
// thetabar'(0) / (2 pi i) = prod (1-q^l)^3.
QSeries theta_prime_zero(const TruncationPtr& t);

// theta(u + alpha - beta tau - a z) / theta(u + alpha - beta tau - b z) in log
// form, with u = x / (2 pi i) for the nilpotent generator x_gen (or u = 0 when
// x_gen < 0).  When alpha = beta = b = 0 the denominator vanishes at x = 0;
// pass times_x to get x times the quotient instead.  Roots of unity are taken
// in Q(zeta_N); N = 0 picks the denominator of alpha.
FactorLog theta_quotient(const TruncationPtr& t, const Rational& alpha, const Rational& beta, const Rational& a,
                         const Rational& b, int x_gen = -1, bool times_x = false, int N = 0);

struct ThetaFactor {
    Rational alpha, beta, z_mult;
    int x_gen = -1;
    QSeries value;
};

// theta(u + alpha - beta tau - a z) / theta(u + alpha - beta tau) * y^{a beta},
// multiplied by x when alpha = beta = 0 (the untwisted Chern-root factor).
ThetaFactor theta_factor(const Rational& alpha, const Rational& beta, const Rational& z_mult, int x_gen,
                         const TruncationPtr& t, int N = 0);

// 2 pi i theta(-z) / theta'(0) = thetabar(-z) / prod (1-q^l)^3.
FactorLog ell_prefactor(const TruncationPtr& t);

// ---- numeric -----------------------------------------------------------

// k-th z-derivative of theta(z, tau) from the half-integer sum.
cplx numeric_theta(cplx z, cplx tau, int deriv = 0);
// Same sum cut off at |m| <= bound; for convergence checks.
cplx numeric_theta_bounded(cplx z, cplx tau, int bound, int deriv = 0);
// theta via the product formula (independent representation).
cplx numeric_theta_product(cplx z, cplx tau);
// Max residual of theta(z+1) = -theta(z) and theta(z+tau) = -e^{-2 pi i z - pi i tau} theta(z),
// applied m and n times respectively.
double verify_quasi_periodicity(cplx z, cplx tau, int m, int n);

// Numeric value of the same quotient theta_quotient represents (no x).
cplx numeric_theta_quotient(const Rational& alpha, const Rational& beta, const Rational& a, const Rational& b, cplx z,
                            cplx tau);

}  // namespace ell

#endif
