// Symmetric products: S_n orbifold data for X^n, the twisted series
// F_{i,j,s}, both sides of the DMVV product formula and the Hilbert-scheme
// generating series.
//
// Exponent bookkeeping follows the genus code: everything is kept in units of
// 1/D.  Working windows are sloped (weight y + s q) so that exp and products
// can be tracked exactly; public entry points return data on the rectangle
// q <= Q, |y| <= W, p <= P and throw PrecisionError when that rectangle is not
// known exactly.
#ifndef ELL_SYMPROD_HPP
#define ELL_SYMPROD_HPP

#include "ell/genus.hpp"

#include <map>
#include <utility>
#include <vector>

namespace ell {

// Coefficients c(m, l) of a genus series, known on q <= Q, |y| <= W.
struct CoeffTable {
    int D = 1;
    int Q = 0;
    int W = 0;
    std::map<std::pair<long long, long long>, CycRational> c;  // (m, l) in units of 1/D

    // s must be p-free, generator-free, slope 0 and exact on its window.
    static CoeffTable from_series(const QSeries& s);
    // Uses the unhatted series for pair results.
    static CoeffTable from_genus(const GenusResult& g);

    bool known(long long m, long long l) const;
    // Errors (PrecisionError) outside the known rectangle; zero for absent terms inside.
    CycRational at(const Rational& m, const Rational& l) const;
    // Smallest integer s >= 1 with |l| <= L0 + s m on the table, L0 the q^0 bound.
    int slope_bound() const;
    // Max |l| at q^0.
    Rational l0() const;
    bool q_integral() const;
};

// Sum over c(m,l) e^{-2 pi i m s / j} y^{il} q^{im/j}: the genus at
// (iz, (i tau - s)/j).  target must have a denominator divisible by
// D * j and room for every term it can hold.
QSeries f_ijs(const CoeffTable& t, int i, int j, int s, const TruncationPtr& target);

// exp( sum_{ij <= P} p^{ij}/(ij) sum_s F_{i,j,s} ) on a working window with p-cap P.
QSeries dmvv_lhs_exp(const CoeffTable& t, const TruncationPtr& work);
// prod_{i <= P, m, l} (1 - p^i y^l q^m)^{-c(mi, l)}, each factor a binomial series.
QSeries dmvv_rhs_product(const CoeffTable& t, const TruncationPtr& work);

// Working window used for (P, Q, W) on this table, or PrecisionError when
// the table is too small.
TruncationPtr dmvv_working_window(const CoeffTable& t, int P, int Q, int W);
// Output rectangle for (P, Q, W) on this table.
TruncationPtr dmvv_output_window(const CoeffTable& t, int P, int Q, int W);

struct DmvvResult {
    QSeries lhs, rhs, residual;
};
// Both sides and their difference on the output rectangle.
DmvvResult dmvv_sides(const CoeffTable& t, int P, int Q, int W);
// Generating series of the elliptic genera of Hilbert schemes of a surface.
QSeries hilbert_scheme_series(const CoeffTable& t, int P, int Q, int W);
// lhs - rhs for a pair table.
QSeries dmvv_pairs_check(const CoeffTable& t, int P, int Q, int W);

// Table of Ell(X) (unhatted pair genus when X carries divisors) large enough
// for dmvv_sides(t, P, Q, W).
CoeffTable dmvv_table(const ManifoldModel& m, int P, int Q, int W, int extra_guard = 0);

// Table plus both sides for a model, widening the table until the output
// rectangle is exact (a few attempts, then the PrecisionError propagates).
struct DmvvRun {
    CoeffTable table;
    DmvvResult sides;
};
DmvvRun dmvv_for_model(const ManifoldModel& m, int P, int Q, int W);

// p^n coefficient of s moved onto target (same or compatible denominator).
QSeries p_coefficient(const QSeries& s, int n, const TruncationPtr& target);
// Same series on a window with another denominator; exponents must stay integral.
QSeries change_denominator(const QSeries& s, const TruncationPtr& target);

// ---- S_n orbifold data ------------------------------------------------------

// Commuting pairs of S_n acting on X^n (n <= 3, X without divisors); pairs
// with identical fixed-point data are merged into one locus with multiplicity.
OrbifoldDatum symmetric_power_datum(const ManifoldModel& m, int n);

// ---- character identities (numeric) -----------------------------------------

// (lambda(g), lambda(h)) for an orbit of type (i, j, s): (m/(ij), n/j) with
// 0 <= n < j, 0 <= m < ij, m = n s mod j.
std::vector<std::pair<Rational, Rational>> orbit_characters(int i, int j, int s);
// Product over characters of theta(u + l - z)/theta(u + l) e^{2 pi i lh z}
// against theta(iu - iz, tau')/theta(iu, tau'), tau' = (i tau - s)/j.
double character_product_residual(int i, int j, int s, cplx u, cplx z, cplx tau);
// The u-independent limit over nontrivial characters.
double character_product_limit_residual(int i, int j, int s, cplx u, cplx z, cplx tau);
// Sum over characters of theta(u + l - v)/theta(u + l) e^{2 pi i lh v}.
double character_sum_residual(int i, int j, int s, cplx u, cplx v, cplx tau);

}  // namespace ell

#endif
