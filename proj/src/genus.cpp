#include "ell/genus.hpp"

#include <cmath>
#include <numbers>
#include <numeric>

namespace ell {

TruncationPtr GenusResult::nullptr_trunc() {
    static const TruncationPtr t = make_truncation(Truncation{});
    return t;
}

namespace {

long long lcm_den(long long acc, const Rational& r) { return std::lcm(acc, r.den()); }

struct Plan {
    int D = 2;
    int slope = 1;
    int guard = 1;
};

// Largest z multiple per unit of q room over all product terms: a / (1 - beta).
Rational slope_need(const OrbifoldDatum& d) {
    Rational need(1);  // untwisted roots and the prefactor: q^l y^{-1}
    for (const auto& L : d.loci) {
        for (const auto& t : L.tangent) need = std::max(need, Rational(1) / (Rational(1) - t.lambda_h));
        for (const auto& r : L.divisors) {
            Rational a = d.divisor(r.divisor).delta + Rational(1);
            Rational room = Rational(1) - r.eps_h;
            need = std::max({need, a / room, Rational(1) / room, a});
        }
    }
    return need;
}

int ceil_int(const Rational& r) {
    long long f = r.floor();
    return static_cast<int>(Rational(f) == r ? f : f + 1);
}

Plan make_plan(const OrbifoldDatum& d, bool hat, const GenusConfig& cfg) {
    Plan p;
    int need_D = required_denominator(d, hat);
    if (cfg.D > 0) {
        if (cfg.D % need_D != 0)
            throw ParameterError("exponent denominator " + std::to_string(cfg.D) + " must be a multiple of " +
                                 std::to_string(need_D) + " for '" + d.name + "'");
        p.D = cfg.D;
    } else {
        p.D = need_D;
    }
    p.slope = cfg.slope > 0 ? cfg.slope : std::max(1, ceil_int(slope_need(d)));
    if (cfg.guard >= 0) {
        p.guard = cfg.guard;
    } else {
        // y^{-1/2} per root, the divisor prefactors, and room to undo the hat
        Rational g = Rational(d.dim, 2) + Rational(1);
        for (const auto& a : d.divisors) g += Rational(1) + (a.delta.sign() < 0 ? -a.delta : a.delta);
        if (hat) g += Rational(d.dim, 2);
        p.guard = ceil_int(g);
    }
    return p;
}

TruncationPtr slot_window(const Plan& p, int Q, int W, int n) {
    Truncation t;
    t.D = p.D;
    t.Q = Q;
    t.W = W + p.guard;
    t.slope = p.slope;
    t.nmax = n;
    t.gens = {Generator{"x", 1, -1}};
    return make_truncation(std::move(t));
}

TruncationPtr plain_window(int D, int Q, int W, int slope) {
    Truncation t;
    t.D = D;
    t.Q = Q;
    t.W = W;
    t.slope = slope;
    return make_truncation(std::move(t));
}

QSeries locus_value(const OrbifoldDatum& d, const FixedLocus& L, bool hat, const Plan& p, int Q, int W,
                    const TruncationPtr& out, bool strict) {
    const ManifoldModel& X = L.space;
    const int n = X.dim;
    TruncationPtr lt = model_truncation(X, p.D, Q, W + p.guard, p.slope);
    TruncationPtr st = slot_window(p, Q, W, n);
    QSeries lam(lt);
    CycRational c(1);
    long long A = 0, B = 0;
    std::optional<FactorLog> pre;
    if (hat) pre = ell_prefactor(st).pow(-1);
    for (const auto& T : L.tangent) {
        const bool untwisted = T.lambda_g.is_zero() && T.lambda_h.is_zero();
        FactorLog F = theta_quotient(st, T.lambda_g, T.lambda_h, Rational(1), Rational(0), 0, untwisted);
        F.yB += to_units(T.lambda_h, p.D, "y");
        if (hat && untwisted) F *= *pre;
        auto ps = power_sums(T.chern, X.gens, n, T.rank);
        lam = lam + sum_over_roots(F.log, 0, ps, lt);
        FactorLog Fr = F.pow(T.rank);
        c = c * Fr.c;
        A += Fr.qA;
        B += Fr.yB;
    }
    for (const auto& R : L.divisors) {
        const Rational delta = d.divisor(R.divisor).delta;
        const Rational a = delta + Rational(1);
        FactorLog F1 = theta_quotient(st, R.eps_g, R.eps_h, a, Rational(1), 0, false);
        F1.yB += to_units(delta * R.eps_h, p.D, "y");
        FactorLog F2 = theta_quotient(st, Rational(0), Rational(0), Rational(1), a, -1, false);
        lam = lam + substitute_class(F1.log, 0, R.cls, lt) + substitute_class(F2.log, -1, Poly(), lt);
        c = c * F1.c * F2.c;
        A += F1.qA + F2.qA;
        B += F1.yB + F2.yB;
    }
    QSeries e = exp(lam);
    QSeries v = integrate_series(X, e, out, strict);
    ExponentKey m;
    m.q = static_cast<std::int32_t>(A);
    m.y = static_cast<std::int32_t>(B);
    return v.shifted(m, c * CycRational(L.multiplicity));
}

GenusResult run(const OrbifoldDatum& d, bool hat, const GenusConfig& cfg) {
    validate(d);
    if (cfg.Q < 0 || cfg.W < 0) throw ParameterError("window sizes must be non-negative");
    Plan p = make_plan(d, hat, cfg);
    GenusResult r;
    r.name = d.name;
    r.dim = d.dim;
    r.hat = hat;
    for (int attempt = 0;; ++attempt) {
        try {
            TruncationPtr work = plain_window(p.D, cfg.Q, cfg.W + p.guard, p.slope);
            QSeries total(work);
            for (const auto& L : d.loci) total = total + locus_value(d, L, hat, p, cfg.Q, cfg.W, work, cfg.strict);
            if (d.group_order != 1) total = total.scaled(CycRational(Rational(1, d.group_order)));
            TruncationPtr outw = plain_window(p.D, cfg.Q, cfg.W, 0);
            r.series = total.restricted(outw, true);
            r.working = total;
            break;
        } catch (const PrecisionError&) {
            if (attempt >= 3 || cfg.guard >= 0) throw;
            p.guard += 2 + p.guard;
            p.slope += 1;
        }
    }
    r.note = "D=" + std::to_string(p.D) + " slope=" + std::to_string(p.slope) + " guard=" + std::to_string(p.guard) +
             (hat ? " hat" : "");
    return r;
}

}  // namespace

int required_denominator(const OrbifoldDatum& d, bool hat) {
    (void)hat;
    long long D = 2;
    for (const auto& L : d.loci) {
        for (const auto& t : L.tangent) D = lcm_den(D, t.lambda_h);
        for (const auto& r : L.divisors) {
            Rational delta = d.divisor(r.divisor).delta;
            D = lcm_den(D, delta / Rational(2));
            D = lcm_den(D, r.eps_h);
            D = lcm_den(D, delta * r.eps_h);
            D = lcm_den(D, (delta + Rational(1)) * r.eps_h);
        }
    }
    for (const auto& a : d.divisors) D = lcm_den(D, a.delta / Rational(2));
    if (D > 1 << 20) throw ParameterError("exponent denominator too large");
    return static_cast<int>(D);
}

GenusResult elliptic_genus(const ManifoldModel& m, const GenusConfig& cfg) {
    if (!m.divisors.empty())
        throw ModelError("model '" + m.name + "' has divisors; use the pair genus");
    return run(trivial_datum(m), false, cfg);
}

GenusResult pair_elliptic_genus(const ManifoldModel& m, const GenusConfig& cfg) {
    return run(trivial_datum(m), true, cfg);
}

GenusResult orbifold_elliptic_genus(const OrbifoldDatum& d, const GenusConfig& cfg) { return run(d, false, cfg); }

QSeries unhat(const GenusResult& g) {
    if (!g.hat) return g.series;
    const TruncationPtr& w = g.working.trunc_ptr();
    QSeries pre = ell_prefactor(w).pow(g.dim).expand();
    QSeries v = g.working * pre;
    return v.restricted(g.series.trunc_ptr(), true);
}

std::map<Rational, CycRational> chi_y_specialize(const QSeries& s) {
    std::map<Rational, CycRational> row;
    const int D = s.trunc().D;
    for (const auto& [k, c] : s.terms()) {
        if (k.q != 0 || k.p != 0 || !(k.nilp == decltype(k.nilp){})) continue;
        ExponentKey kk = k;
        s.coefficient(kk);  // throws past the exact region
        row[Rational(k.y, D)] = c;
    }
    return row;
}

std::map<Rational, CycRational> chi_y_specialize(const GenusResult& g) {
    return chi_y_specialize(g.hat ? unhat(g) : g.series);
}

CycRational chi_y_at_one(const std::map<Rational, CycRational>& row) {
    CycRational s(0);
    for (const auto& [e, c] : row) s += c;
    return s;
}

QSeries verify_mckay(const OrbifoldDatum& lhs, const ManifoldModel& rhs, const GenusConfig& cfg) {
    if (lhs.dim != rhs.dim)
        throw ParameterError("dimension mismatch: " + std::to_string(lhs.dim) + " vs " + std::to_string(rhs.dim));
    GenusConfig c = cfg;
    int D1 = required_denominator(lhs, false), D2 = required_denominator(trivial_datum(rhs), true);
    int D = std::lcm(D1, D2);
    if (cfg.D > 0) {
        if (cfg.D % D != 0) throw ParameterError("exponent denominator must be a multiple of " + std::to_string(D));
        D = cfg.D;
    }
    c.D = D;
    GenusResult L = orbifold_elliptic_genus(lhs, c);
    GenusResult R = pair_elliptic_genus(rhs, c);
    return L.series - unhat(R);
}

// ---- numeric -------------------------------------------------------------------

namespace {

constexpr double kPi = std::numbers::pi;

// Taylor coefficients of log(x theta(x/2 pi i - z)/theta(x/2 pi i)) up to x^n.
std::vector<cplx> root_log_taylor(cplx z, cplx tau, int n) {
    const cplx s = 1.0 / (2.0 * kPi * cplx(0, 1));
    std::vector<cplx> num(n + 1), den(n + 1), f(n + 1);
    double fact = 1;
    for (int j = 0; j <= n; ++j) {
        if (j) fact *= j;
        num[j] = numeric_theta(-z, tau, j) * std::pow(s, j) / fact;
        den[j] = numeric_theta(0, tau, j + 1) * std::pow(s, j + 1) / (fact * (j + 1));
    }
    for (int j = 0; j <= n; ++j) {
        cplx acc = num[j];
        for (int i = 0; i < j; ++i) acc -= f[i] * den[j - i];
        f[j] = acc / den[0];
    }
    // log f = log f0 + log(1 + g), l_k = h_k - (1/k) sum_{j<k} j l_j h_{k-j}
    std::vector<cplx> h(n + 1), l(n + 1);
    for (int j = 0; j <= n; ++j) h[j] = f[j] / f[0];
    l[0] = std::log(f[0]);
    for (int k = 1; k <= n; ++k) {
        cplx acc = h[k];
        for (int j = 1; j < k; ++j) acc -= static_cast<double>(j) / k * l[j] * h[k - j];
        l[k] = acc;
    }
    return l;
}

NSeries poly_to_nseries(const Poly& p, const TruncationPtr& t) {
    std::vector<NSeries::Term> terms;
    for (const auto& [m, c] : p.terms()) {
        ExponentKey k;
        for (int i = 0; i < kMaxGenerators; ++i) k.nilp[i] = m[i];
        terms.emplace_back(k, c.to_double());
    }
    return NSeries::from_terms(t, std::move(terms));
}

}  // namespace

cplx numeric_elliptic_genus(const ManifoldModel& m, cplx z, cplx tau) {
    if (tau.imag() <= 0) throw DomainError("Im tau must be positive");
    if (!m.divisors.empty()) throw ModelError("numeric genus is for models without divisors");
    const int n = m.dim;
    if (n == 0) return integrate(m, Poly::constant(Rational(1))).to_double();
    auto l = root_log_taylor(z, tau, n);
    TruncationPtr t = model_truncation(m, 1, 0, 0, 0);
    auto ps = power_sums(m.chern, m.gens, n, n);
    NSeries lam(t);
    for (int k = 1; k <= n; ++k) lam = lam + poly_to_nseries(ps[k], t).scaled(l[k]);
    NSeries e = exp(lam);
    cplx acc = 0;
    for (const auto& [k, c] : e.terms()) {
        if (nilp_degree(*t, k) != n) continue;
        Mono mono{};
        for (int i = 0; i < kMaxGenerators; ++i) mono[i] = k.nilp[i];
        auto it = m.integrals.find(mono);
        if (it != m.integrals.end()) acc += c * it->second.to_double();
    }
    return acc * std::exp(static_cast<double>(n) * l[0]);
}

JacobiResiduals verify_jacobi(const ManifoldModel& m, cplx z, cplx tau) {
    if (tau.imag() <= 0) throw DomainError("Im tau must be positive");
    const cplx I(0, 1);
    const double index = m.dim / 2.0;
    cplx phi = numeric_elliptic_genus(m, z, tau);
    double scale = std::max(1.0, std::abs(phi));
    JacobiResiduals r;
    r.shift_z = std::abs(numeric_elliptic_genus(m, z + 1.0, tau) - phi) / scale;
    r.shift_tau = std::abs(numeric_elliptic_genus(m, z, tau + 1.0) - phi) / scale;
    cplx s = numeric_elliptic_genus(m, z / tau, -1.0 / tau);
    r.s_transform = std::abs(s - std::exp(2.0 * kPi * I * index * z * z / tau) * phi) / scale;
    return r;
}

}  // namespace ell
