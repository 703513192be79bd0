// Small builders shared by the unit tests.
#ifndef ELL_TEST_HELPERS_HPP
#define ELL_TEST_HELPERS_HPP

#include "doctest.h"
#include "ell/series.hpp"

#include <initializer_list>
#include <random>

namespace testutil {

using namespace ell;

inline TruncationPtr window(int D, int Q, int W, int P = 0, std::vector<Generator> gens = {}, int nmax = 0,
                            int slope = 0) {
    Truncation t;
    t.D = D;
    t.Q = Q;
    t.W = W;
    t.P = P;
    t.gens = std::move(gens);
    t.nmax = nmax;
    t.slope = slope;
    return make_truncation(t);
}

// Key from rational exponents q, y (as num/den pairs over the window's D).
inline ExponentKey key(const Truncation& t, Rational q, Rational y, int p = 0, std::initializer_list<int> nilp = {}) {
    ExponentKey k;
    Rational qq = q * Rational(t.D), yy = y * Rational(t.D);
    if (!(qq.is_integer())) throw ParameterError("q exponent off lattice");
    if (!(yy.is_integer())) throw ParameterError("y exponent off lattice");
    k.q = static_cast<int>(qq.num());
    k.y = static_cast<int>(yy.num());
    k.p = p;
    int i = 0;
    for (int e : nilp) k.nilp[i++] = static_cast<std::uint8_t>(e);
    return k;
}

inline QSeries mono(const TruncationPtr& t, Rational q, Rational y, CycRational c = 1, int p = 0,
                    std::initializer_list<int> nilp = {}) {
    return QSeries::monomial(t, key(*t, q, y, p, nilp), c);
}

// Random series with small integer coefficients on exponents in the window.
inline QSeries random_series(const TruncationPtr& t, std::mt19937& rng, int nterms, int qspan, int yspan,
                             bool positive_y = false) {
    std::uniform_int_distribution<int> cq(0, qspan * t->D), cy(positive_y ? 0 : -yspan * t->D, yspan * t->D),
        cc(-3, 3), cp(0, t->P);
    std::vector<QSeries::Term> terms;
    for (int i = 0; i < nterms; ++i) {
        ExponentKey k;
        k.q = cq(rng);
        k.y = cy(rng);
        k.p = cp(rng);
        terms.emplace_back(k, CycRational(cc(rng)));
    }
    return QSeries::from_terms(t, terms);
}

inline bool same_terms(const QSeries& a, const QSeries& b) {
    if (a.size() != b.size()) return false;
    for (size_t i = 0; i < a.size(); ++i)
        if (!(a.terms()[i].first == b.terms()[i].first) || a.terms()[i].second != b.terms()[i].second) return false;
    return true;
}

}  // namespace testutil

#endif
