#include "ell/theta.hpp"

#include <cmath>
#include <numbers>

namespace ell {

namespace {

constexpr double kPi = std::numbers::pi;
const cplx kI(0.0, 1.0);

Rational rat_frac(const Rational& r) { return r.frac(); }

int auto_conductor(const Rational& alpha, int N) {
    if (N > 0) {
        if (N % rat_frac(alpha).den() != 0)
            throw ParameterError("conductor " + std::to_string(N) + " does not contain the character " + alpha.str());
        return N;
    }
    return static_cast<int>(rat_frac(alpha).den());
}

// Collects terms of a log series; exponents are rational and converted once.
struct LogBuilder {
    const TruncationPtr& t;
    int N;
    std::vector<QSeries::Term> terms;

    // Adds coef * q^qe * y^ye * x^j.
    void add(const CycRational& coef, const Rational& qe, const Rational& ye, int x_gen, int j) {
        ExponentKey k;
        k.q = static_cast<std::int32_t>(to_units(qe, t->D, "q"));
        k.y = static_cast<std::int32_t>(to_units(ye, t->D, "y"));
        if (j > 0) {
            if (x_gen < 0) return;
            if (j > 255) return;
            k.nilp[x_gen] = static_cast<std::uint8_t>(j);
        }
        terms.emplace_back(k, coef);
    }

    // Adds sign * log(1 - s), s = zeta^sigma q^qe y^ye e^{eps x}, s small.
    void log_one_minus(int sign, const Rational& sigma, const Rational& qe, const Rational& ye, int eps, int x_gen) {
        if (qe.sign() < 0 || (qe.is_zero() && ye.sign() <= 0))
            throw ParameterError("log(1 - s) requested for a non-small s");
        const Truncation& tr = *t;
        int nmax = x_gen >= 0 ? tr.nmax : 0;
        for (long long k = 1;; ++k) {
            Rational kq = qe * Rational(k), ky = ye * Rational(k);
            if (kq > Rational(tr.Q)) break;
            long long qu = to_units(kq, tr.D, "q");
            long long yu = to_units(ky, tr.D, "y");
            if (qe.is_zero() && yu > tr.y_hi(qu)) break;
            if (yu > tr.y_hi(qu)) {
                if (qe.sign() > 0 && ye.sign() >= 0) break;
                continue;
            }
            CycRational z = CycRational::root_of_unity(sigma * Rational(k), N);
            // e^{k eps x} = sum_j (k eps)^j x^j / j!
            Rational xk(1);
            for (int j = 0; j <= nmax; ++j) {
                if (j > 0) xk = xk * Rational(k * eps) / Rational(j);
                if (xk.is_zero()) break;
                add(z * CycRational(Rational(-sign) * xk / Rational(k)), kq, ky, x_gen, j);
            }
        }
    }

    QSeries build() { return QSeries::from_terms(t, std::move(terms)); }
};

// e^{eps x} - 1 as a series in x.
QSeries exp_x_minus_one(const TruncationPtr& t, int x_gen, int eps) {
    std::vector<QSeries::Term> terms;
    Rational c(1);
    for (int j = 1; j <= t->nmax; ++j) {
        c = c * Rational(eps) / Rational(j);
        ExponentKey k;
        k.nilp[x_gen] = static_cast<std::uint8_t>(j);
        terms.emplace_back(k, CycRational(c));
    }
    return QSeries::from_terms(t, std::move(terms));
}

// Multiplies F by the prefactor-free part of (1 - s) (numerator when sign = +1,
// denominator when sign = -1), where s = zeta^sigma q^qe y^ye e^{eps x}.
void one_minus_factor(FactorLog& F, LogBuilder& lb, int sign, const Rational& sigma, const Rational& qe,
                      const Rational& ye, int eps, int x_gen, bool& used_times_x, bool times_x) {
    if (qe.sign() > 0 || ye.sign() > 0) {
        lb.log_one_minus(sign, sigma, qe, ye, eps, x_gen);
        return;
    }
    const TruncationPtr& t = lb.t;
    if (!rat_frac(sigma).is_zero()) {
        // 1 - zeta e^{eps x} = (1 - zeta)(1 - zeta (e^{eps x} - 1) / (1 - zeta))
        CycRational z = CycRational::root_of_unity(sigma, lb.N);
        CycRational c = CycRational(1) - z;
        F.c = sign > 0 ? F.c * c : F.c / c;
        if (x_gen >= 0) {
            QSeries u = QSeries::one(t) + exp_x_minus_one(t, x_gen, eps).scaled(-z / c);
            QSeries l = log(u);
            F.log = sign > 0 ? F.log + l : F.log - l;
        }
        return;
    }
    // 1 - e^{eps x}: vanishes at x = 0.
    if (sign > 0) throw SingularityError("theta quotient has a vanishing numerator (z multiple 0)");
    if (x_gen < 0 || !times_x)
        throw SingularityError("theta quotient has a pole: the denominator theta vanishes identically");
    // 1 - e^{eps x} = (-eps x) * g(x), g(x) = (e^{eps x} - 1) / (eps x); the x is absorbed by the caller.
    std::vector<QSeries::Term> terms;
    Rational c(1);
    for (int j = 0; j <= t->nmax; ++j) {
        // g = sum_j eps^j x^j / (j+1)!
        if (j > 0) c = c * Rational(eps) / Rational(j + 1);
        ExponentKey k;
        k.nilp[x_gen] = static_cast<std::uint8_t>(j);
        terms.emplace_back(k, CycRational(c));
    }
    QSeries g = QSeries::from_terms(t, std::move(terms));
    F.log = F.log - log(g);
    F.c = F.c / CycRational(Rational(-eps));
    used_times_x = true;
}

}  // namespace

long long to_units(const Rational& r, int D, const char* what) {
    Rational u = r * Rational(D);
    if (!u.is_integer())
        throw ParameterError(std::string(what) + " exponent " + r.str() + " needs a denominator dividing " +
                             std::to_string(D));
    return u.num();
}

FactorLog& FactorLog::operator*=(const FactorLog& o) {
    c = c * o.c;
    qA += o.qA;
    yB += o.yB;
    log = log + o.log;
    return *this;
}

FactorLog FactorLog::pow(int r) const {
    FactorLog F(log.trunc_ptr());
    CycRational cr(1);
    CycRational base = r >= 0 ? c : c.inv();
    for (int i = 0; i < std::abs(r); ++i) cr = cr * base;
    F.c = cr;
    F.qA = qA * r;
    F.yB = yB * r;
    F.log = log.scaled(CycRational(r));
    return F;
}

QSeries FactorLog::expand() const {
    ExponentKey m;
    m.q = static_cast<std::int32_t>(qA);
    m.y = static_cast<std::int32_t>(yB);
    return exp(log).shifted(m, c);
}

QSeries theta_bar(const TruncationPtr& t) {
    if (t->D % 2 != 0) throw ParameterError("thetabar needs an even exponent denominator");
    // thetabar = sum_n (-1)^n q^{n(n+1)/2} y^{n+1/2}
    std::vector<QSeries::Term> terms;
    for (long long n = 0;; ++n) {
        long long qe = n * (n + 1) / 2;
        if (qe > t->Q) break;
        for (long long m : {n, -n - 1}) {
            ExponentKey k;
            k.q = static_cast<std::int32_t>(qe * t->D);
            k.y = static_cast<std::int32_t>((2 * m + 1) * t->D / 2);
            terms.emplace_back(k, CycRational(m % 2 == 0 ? 1 : -1));
        }
    }
    return QSeries::from_terms(t, std::move(terms));
}

QSeries theta_prime_zero(const TruncationPtr& t) {
    // prod (1-q^l)^3 = sum_n (-1)^n (2n+1) q^{n(n+1)/2}
    std::vector<QSeries::Term> terms;
    for (long long n = 0;; ++n) {
        long long qe = n * (n + 1) / 2;
        if (qe > t->Q) break;
        ExponentKey k;
        k.q = static_cast<std::int32_t>(qe * t->D);
        terms.emplace_back(k, CycRational((n % 2 == 0 ? 1 : -1) * (2 * n + 1)));
    }
    return QSeries::from_terms(t, std::move(terms));
}

FactorLog theta_quotient(const TruncationPtr& t, const Rational& alpha_in, const Rational& beta,
                         const Rational& a, const Rational& b, int x_gen, bool times_x, int N) {
    if (beta.sign() < 0 || beta >= Rational(1)) throw ParameterError("beta must lie in [0,1), got " + beta.str());
    if (alpha_in.sign() < 0 || alpha_in >= Rational(1))
        throw ParameterError("alpha must lie in [0,1), got " + alpha_in.str());
    if (x_gen >= static_cast<int>(t->gens.size())) throw ParameterError("nilpotent generator index out of range");
    const Rational& alpha = alpha_in;
    N = auto_conductor(alpha, N);
    FactorLog F(t);
    LogBuilder lb{t, N, {}};
    const bool twisted_q = beta.sign() > 0;
    // W = e^x zeta^alpha q^{-beta} y^{-c}; form "+" writes W^{1/2} - W^{-1/2} = W^{1/2}(1 - W^{-1}),
    // form "-" writes it as -W^{-1/2}(1 - W).  Pick the one whose bracket is small.
    const bool num_plus = twisted_q || a.sign() >= 0;
    const bool den_plus = twisted_q || b.sign() >= 0;
    Rational yB(0);
    if (num_plus && den_plus) {
        yB = -(a - b) / Rational(2);
    } else if (!num_plus && !den_plus) {
        yB = (a - b) / Rational(2);
    } else if (!num_plus && den_plus) {
        // -W_a^{-1/2} / W_b^{1/2} = -e^{-x} zeta^{-alpha} y^{(a+b)/2}   (beta = 0 here)
        F.c = -CycRational::root_of_unity(-alpha, N);
        yB = (a + b) / Rational(2);
        if (x_gen >= 0) lb.add(CycRational(-1), 0, 0, x_gen, 1);
    } else {
        F.c = -CycRational::root_of_unity(alpha, N);
        yB = -(a + b) / Rational(2);
        if (x_gen >= 0) lb.add(CycRational(1), 0, 0, x_gen, 1);
    }
    bool used_times_x = false;
    // Brackets.  W^{-1} = e^{-x} zeta^{-alpha} q^{beta} y^{c}; W = e^x zeta^alpha q^{-beta} y^{-c}.
    if (num_plus)
        one_minus_factor(F, lb, +1, -alpha, beta, a, -1, x_gen, used_times_x, times_x);
    else
        one_minus_factor(F, lb, +1, alpha, 0, -a, +1, x_gen, used_times_x, times_x);
    if (den_plus)
        one_minus_factor(F, lb, -1, -alpha, beta, b, -1, x_gen, used_times_x, times_x);
    else
        one_minus_factor(F, lb, -1, alpha, 0, -b, +1, x_gen, used_times_x, times_x);
    if (times_x && !used_times_x)
        throw ParameterError("times_x only applies when the denominator vanishes at x = 0");
    // Product part: prod_l (1 - q^l W_c)(1 - q^l / W_c), numerator c = a, denominator c = b.
    for (long long l = 1; Rational(l) - beta <= Rational(t->Q); ++l) {
        Rational ql = Rational(l);
        for (int side = 0; side < 2; ++side) {
            int sign = side == 0 ? +1 : -1;
            const Rational& cz = side == 0 ? a : b;
            lb.log_one_minus(sign, alpha, ql - beta, -cz, +1, x_gen);
            lb.log_one_minus(sign, -alpha, ql + beta, cz, -1, x_gen);
        }
    }
    F.log = F.log + lb.build();
    F.yB = to_units(yB, t->D, "y");
    return F;
}

ThetaFactor theta_factor(const Rational& alpha, const Rational& beta, const Rational& z_mult, int x_gen,
                         const TruncationPtr& t, int N) {
    bool untwisted = alpha.is_zero() && beta.is_zero();
    FactorLog F = theta_quotient(t, alpha, beta, z_mult, 0, x_gen, untwisted && x_gen >= 0, N);
    F.yB += to_units(z_mult * beta, t->D, "y");
    ThetaFactor out{alpha, beta, z_mult, x_gen, F.expand()};
    return out;
}

FactorLog ell_prefactor(const TruncationPtr& t) {
    // thetabar(-z) / prod(1-q^l)^3 = y^{-1/2} (1 - y) prod (1-q^l y)(1-q^l/y) / prod (1-q^l)^2
    FactorLog F(t);
    LogBuilder lb{t, 1, {}};
    lb.log_one_minus(+1, 0, 0, 1, 0, -1);
    for (long long l = 1; l <= t->Q; ++l) {
        lb.log_one_minus(+1, 0, l, 1, 0, -1);
        lb.log_one_minus(+1, 0, l, -1, 0, -1);
        lb.log_one_minus(-2, 0, l, 0, 0, -1);
    }
    F.log = lb.build();
    F.yB = to_units(Rational(-1, 2), t->D, "y");
    return F;
}

// ---- numeric ------------------------------------------------------------

cplx numeric_theta_bounded(cplx z, cplx tau, int bound, int deriv) {
    if (tau.imag() <= 0) throw DomainError("theta needs Im tau > 0");
    // theta = -i sum_{m in Z + 1/2} (-1)^{m-1/2} e^{pi i m^2 tau} e^{2 pi i m z}
    cplx s = 0;
    for (int n = -bound; n < bound; ++n) {
        double m = n + 0.5;
        cplx term = std::exp(kI * kPi * (m * m * tau + 2.0 * m * z));
        if (deriv) term *= std::pow(2.0 * kPi * kI * m, deriv);
        s += (n % 2 == 0 ? 1.0 : -1.0) * term;
    }
    return -kI * s;
}

cplx numeric_theta(cplx z, cplx tau, int deriv) {
    if (tau.imag() <= 0) throw DomainError("theta needs Im tau > 0");
    // |term| = exp(-pi m^2 Im tau - 2 pi m Im z) (times |2 pi m|^deriv); stop well past the peak.
    double peak = std::abs(z.imag()) / tau.imag();
    int bound = static_cast<int>(peak) + 2;
    while (true) {
        double m = bound + 0.5;
        double lg = -kPi * m * m * tau.imag() + 2 * kPi * m * std::abs(z.imag()) + deriv * std::log(2 * kPi * m);
        if (m > peak + 1 && lg < -45) break;
        ++bound;
        if (bound > 100000) throw DomainError("theta sum did not converge");
    }
    return numeric_theta_bounded(z, tau, bound + 1, deriv);
}

cplx numeric_theta_product(cplx z, cplx tau) {
    if (tau.imag() <= 0) throw DomainError("theta needs Im tau > 0");
    cplx q = std::exp(2.0 * kPi * kI * tau), y = std::exp(2.0 * kPi * kI * z);
    cplx v = std::exp(kPi * kI * tau / 4.0) * 2.0 * std::sin(kPi * z);
    cplx ql = 1;
    double ymax = std::max(std::abs(y), 1 / std::abs(y));
    for (int l = 1; l < 100000; ++l) {
        ql *= q;
        v *= (1.0 - ql) * (1.0 - ql * y) * (1.0 - ql / y);
        if (std::abs(ql) * ymax < 1e-19) break;
    }
    return v;
}

double verify_quasi_periodicity(cplx z, cplx tau, int m, int n) {
    cplx base = numeric_theta(z, tau);
    double scale = std::max(1.0, std::abs(base));
    // theta(z + m) = (-1)^m theta(z)
    double r1 = std::abs(numeric_theta(z + double(m), tau) - (m % 2 == 0 ? 1.0 : -1.0) * base) / scale;
    // theta(z + n tau) by iterating theta(w + tau) = -e^{-2 pi i w - pi i tau} theta(w)
    cplx expect = base;
    cplx w = z;
    for (int k = 0; k < std::abs(n); ++k) {
        if (n > 0) {
            expect = -std::exp(-2.0 * kPi * kI * w - kPi * kI * tau) * expect;
            w += tau;
        } else {
            w -= tau;
            expect = expect / (-std::exp(-2.0 * kPi * kI * w - kPi * kI * tau));
        }
    }
    double r2 = std::abs(numeric_theta(z + double(n) * tau, tau) - expect) / std::max(1.0, std::abs(expect));
    return std::max(r1, r2);
}

cplx numeric_theta_quotient(const Rational& alpha, const Rational& beta, const Rational& a, const Rational& b, cplx z,
                            cplx tau) {
    cplx shift = alpha.to_double() - beta.to_double() * tau;
    return numeric_theta(shift - a.to_double() * z, tau) / numeric_theta(shift - b.to_double() * z, tau);
}

}  // namespace ell
