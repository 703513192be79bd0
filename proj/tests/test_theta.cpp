#include "doctest.h"
#include "ell/theta.hpp"
#include "helpers.hpp"

#include <cmath>
#include <numbers>

using namespace ell;
using namespace testutil;

namespace {

const cplx kI(0, 1);
constexpr double kPi = std::numbers::pi;

// The triple product expanded term by term in a wide window, as an oracle.
QSeries triple_product(const TruncationPtr& t) {
    QSeries r = mono(t, 0, Rational(1, 2)) - mono(t, 0, Rational(-1, 2));
    for (int l = 1; l <= t->Q; ++l) {
        r = r * (QSeries::one(t) - mono(t, l, 0));
        r = r * (QSeries::one(t) - mono(t, l, 1));
        r = r * (QSeries::one(t) - mono(t, l, -1));
    }
    return r;
}

QSeries flip_y(const QSeries& s) {
    std::vector<QSeries::Term> terms;
    for (auto [k, c] : s.terms()) {
        k.y = -k.y;
        terms.emplace_back(k, c);
    }
    return QSeries::from_terms(s.trunc_ptr(), terms);
}

cplx thetabar_numeric(cplx z, cplx tau) { return numeric_theta(z, tau) / (-kI * std::exp(kI * kPi * tau / 4.0)); }

}  // namespace

TEST_CASE("thetabar low coefficients and oddness") {
    auto t = window(2, 4, 8);
    QSeries th = theta_bar(t);
    // the sum formula agrees with the triple product where the latter is exact
    auto wide = window(2, 4, 16);
    QSeries prod = triple_product(wide).restricted(t);
    CHECK(same_terms(th, prod));
    CHECK(th.coefficient(key(*t, 0, Rational(1, 2))) == CycRational(1));
    CHECK(th.coefficient(key(*t, 0, Rational(-1, 2))) == CycRational(-1));
    // q^1: -(y^{1/2} - y^{-1/2})(1 + y + y^{-1}) = -y^{3/2} + y^{-3/2}, the y^{\pm 1/2} terms cancel
    CHECK(th.coefficient(key(*t, 1, Rational(3, 2))) == CycRational(-1));
    CHECK(th.coefficient(key(*t, 1, Rational(-3, 2))) == CycRational(1));
    CHECK(th.coefficient(key(*t, 1, Rational(1, 2))) == CycRational(0));
    CHECK(same_terms(flip_y(th), -th));
}

TEST_CASE("thetabar'(0) is the cube of the eta product") {
    auto t = window(1, 10, 0);
    QSeries tp = theta_prime_zero(t);
    CHECK(tp.coefficient(ExponentKey{}) == CycRational(1));
    CHECK(tp.coefficient(key(*t, 1, 0)) == CycRational(-3));
    QSeries eta = QSeries::one(t);
    for (int l = 1; l <= 10; ++l) eta = eta * (QSeries::one(t) - mono(t, l, 0));
    CHECK(same_terms(tp, eta * eta * eta));
    // thetabar(z) / thetabar'(0) has leading term y^{1/2} - y^{-1/2}
    auto t2 = window(2, 3, 6);
    QSeries r = theta_bar(t2) * invert(theta_prime_zero(t2));
    CHECK(r.coefficient(key(*t2, 0, Rational(1, 2))) == CycRational(1));
    CHECK(r.coefficient(key(*t2, 0, Rational(-1, 2))) == CycRational(-1));
}

TEST_CASE("numeric theta: sum vs product, parity, convergence") {
    std::mt19937 rng(17);
    std::uniform_real_distribution<double> u(-0.5, 0.5), v(0.5, 2.0);
    for (int i = 0; i < 10; ++i) {
        cplx tau(u(rng), v(rng));
        cplx z(u(rng), 0.8 * tau.imag() * u(rng));
        cplx s = numeric_theta(z, tau), p = numeric_theta_product(z, tau);
        CHECK(std::abs(s - p) < 1e-12 * std::max(1.0, std::abs(s)));
        CHECK(std::abs(numeric_theta(-z, tau) + s) < 1e-12 * std::max(1.0, std::abs(s)));
        int B = 12;
        CHECK(std::abs(numeric_theta_bounded(z, tau, B, 0) - numeric_theta_bounded(z, tau, B + 5, 0)) <
              1e-13 * std::max(1.0, std::abs(s)));
    }
    CHECK(std::abs(numeric_theta(0, cplx(0, 1))) < 1e-15);
    CHECK_THROWS_AS(numeric_theta(0.1, cplx(0.3, 0)), DomainError);
    // derivative by finite differences
    cplx tau(0.1, 1.1), z(0.2, 0.1);
    double h = 1e-5;
    cplx fd = (numeric_theta(z + h, tau) - numeric_theta(z - h, tau)) / (2 * h);
    CHECK(std::abs(fd - numeric_theta(z, tau, 1)) < 1e-7);
}

TEST_CASE("quasi-periodicity") {
    CHECK(verify_quasi_periodicity(cplx(0.3, 0.1), cplx(0, 2), 1, 1) < 1e-10);
    CHECK(verify_quasi_periodicity(cplx(0.3, 0.1), cplx(0, 2), 0, 0) == 0.0);
    std::mt19937 rng(23);
    std::uniform_real_distribution<double> u(-0.5, 0.5), v(0.8, 2.0);
    for (int i = 0; i < 20; ++i) {
        cplx tau(u(rng), v(rng));
        cplx z(u(rng), 0.3 * tau.imag() * u(rng));
        CHECK(verify_quasi_periodicity(z, tau, 1 + i % 3, (i % 5) - 2) < 1e-9);
    }
}

TEST_CASE("formal thetabar matches the numeric sum (Q = 20)") {
    auto t = window(2, 20, 8);
    QSeries th = theta_bar(t);
    std::mt19937 rng(1);
    std::uniform_real_distribution<double> u(-0.5, 0.5), v(1.0, 2.0);
    for (int i = 0; i < 10; ++i) {
        cplx tau(u(rng), v(rng));
        cplx z(u(rng), 0.5 * u(rng));
        cplx f = evaluate(th, z, tau), n = thetabar_numeric(z, tau);
        CHECK(std::abs(f - n) < 1e-9 * std::max(1.0, std::abs(n)));
    }
}

TEST_CASE("theta factors agree with numeric quotients") {
    // window wide enough in slope for beta up to 1/2 with z multiple 1
    auto t = window(12, 12, 8, 0, {}, 0, 3);
    std::mt19937 rng(5);
    std::uniform_real_distribution<double> u(-0.5, 0.5), v(1.0, 1.6);
    struct Case {
        Rational alpha, beta, a;
    };
    std::vector<Case> cases = {{Rational(1, 2), 0, 1},           {0, Rational(1, 2), 1},
                               {Rational(1, 3), Rational(2, 3), 1}, {Rational(1, 6), 0, Rational(1, 2)},
                               {Rational(2, 3), Rational(1, 3), 2}, {Rational(1, 2), Rational(1, 2), Rational(3, 2)}};
    for (const auto& cs : cases) {
        ThetaFactor f = theta_factor(cs.alpha, cs.beta, cs.a, -1, t);
        for (int i = 0; i < 5; ++i) {
            cplx tau(u(rng), v(rng));
            cplx z(u(rng), 0.05 * u(rng));
            cplx n = numeric_theta_quotient(cs.alpha, cs.beta, cs.a, 0, z, tau) *
                     std::exp(2.0 * kPi * kI * (cs.a * cs.beta).to_double() * z);
            cplx fv = evaluate(f.value, z, tau);
            CHECK_MESSAGE(std::abs(fv - n) < 1e-8 * std::max(1.0, std::abs(n)),
                          "alpha=" << cs.alpha.str() << " beta=" << cs.beta.str() << " a=" << cs.a.str());
        }
    }
}

TEST_CASE("general quotients with both z multiples nonzero") {
    // theta(-z)/theta(-(d+1)z) needs a y-expansion that is one-sided; test at small |y|
    auto t = window(4, 6, 16, 0, {}, 0, 4);
    FactorLog F = theta_quotient(t, 0, 0, 1, Rational(3, 2));
    QSeries s = F.expand();
    CHECK(s.fully_exact());
    cplx tau(0.1, 1.2);
    for (double im : {0.25, 0.3}) {
        cplx z(0.13, im);
        cplx n = numeric_theta_quotient(0, 0, 1, Rational(3, 2), z, tau);
        // truncation in y costs about |y|^{W}
        double tol = 50 * std::pow(std::abs(std::exp(2.0 * kPi * kI * z)), 16);
        CHECK(std::abs(evaluate(s, z, tau) - n) < tol + 1e-10);
    }
}

TEST_CASE("zero set and singular cases") {
    auto t = window(2, 3, 4, 0, {{"x", 1}}, 2, 1);
    // untwisted denominator theta(u) vanishes at u = 0
    CHECK_THROWS_AS(theta_factor(0, 0, 1, -1, t), SingularityError);
    CHECK_THROWS_AS(theta_quotient(t, 0, 0, 1, 0, 0, false), SingularityError);
    // numerator theta(u - 0 z) vanishes at u = 0 as well
    CHECK_THROWS_AS(theta_quotient(t, 0, 0, 0, 1, 0, false), SingularityError);
    // with x: x theta(u - z)/theta(u) has constant term thetabar(-z)/thetabar'(0)
    ThetaFactor f = theta_factor(0, 0, 1, 0, t);
    QSeries pre = ell_prefactor(t).expand();
    for (const auto& [k, c] : pre.terms()) CHECK(f.value.coefficient(k) == c);
    // twisted denominators never vanish
    CHECK_NOTHROW(theta_factor(Rational(1, 2), 0, 1, -1, t));
    CHECK_NOTHROW(theta_factor(0, Rational(1, 2), 1, -1, t));
}

TEST_CASE("untwisted x-factor matches the Taylor expansion of the numeric quotient") {
    // x theta(x/2pi i - z)/theta(x/2pi i), compared coefficientwise in x at a numeric point
    auto t = window(2, 10, 8, 0, {{"x", 1}}, 3, 1);
    ThetaFactor f = theta_factor(0, 0, 1, 0, t);
    cplx tau(0.05, 1.3), z(0.21, 0.02);
    // numeric Taylor coefficients: numerator N(x) = theta(x/2pi i - z), denominator theta(x/2pi i)/x
    std::vector<cplx> num(4), den(4);
    cplx s = 1.0 / (2.0 * kPi * kI);
    double fact = 1;
    for (int j = 0; j < 4; ++j) {
        if (j) fact *= j;
        num[j] = numeric_theta(-z, tau, j) * std::pow(s, j) / fact;
        den[j] = numeric_theta(0, tau, j + 1) * std::pow(s, j + 1) / (fact * (j + 1));
    }
    // series division
    std::vector<cplx> quo(4);
    for (int j = 0; j < 4; ++j) {
        cplx acc = num[j];
        for (int i = 0; i < j; ++i) acc -= quo[i] * den[j - i];
        quo[j] = acc / den[0];
    }
    for (int j = 0; j < 4; ++j) {
        // collect the x^j part of the formal value and evaluate
        std::vector<QSeries::Term> part;
        for (const auto& [k, c] : f.value.terms())
            if (k.nilp[0] == j) {
                ExponentKey kk = k;
                kk.nilp[0] = 0;
                part.emplace_back(kk, c);
            }
        auto t0 = window(2, 10, 8, 0, {}, 0, 1);
        cplx fv = evaluate(QSeries::from_terms(t0, part), z, tau);
        CHECK(std::abs(fv - quo[j]) < 1e-8 * std::max(1.0, std::abs(quo[j])));
    }
}
