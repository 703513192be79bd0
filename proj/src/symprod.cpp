#include "ell/symprod.hpp"

#include <algorithm>
#include <numeric>
#include <set>

namespace ell {

namespace {

long long ceil_div(long long a, long long b) { return a >= 0 ? (a + b - 1) / b : -((-a) / b); }

TruncationPtr rect(int D, int Q, int W, int P = 0, int slope = 0) {
    Truncation t;
    t.D = D;
    t.Q = Q;
    t.W = W;
    t.P = P;
    t.slope = slope;
    return make_truncation(t);
}

int lcm_upto(int P) {
    int L = 1;
    for (int j = 2; j <= P; ++j) L = std::lcm(L, j);
    return L;
}

}  // namespace

// ---- CoeffTable -------------------------------------------------------------

CoeffTable CoeffTable::from_series(const QSeries& s) {
    const Truncation& t = s.trunc();
    if (!t.gens.empty() || t.P != 0 || t.slope != 0 || t.q_floor != 0)
        throw ParameterError("coefficient tables need a plain rectangular q,y series");
    if (!s.fully_exact()) throw PrecisionError("coefficient table source is not exact on its window");
    CoeffTable c;
    c.D = t.D;
    c.Q = t.Q;
    c.W = t.W;
    for (const auto& [k, v] : s.terms()) c.c[{k.q, k.y}] = v;
    return c;
}

CoeffTable CoeffTable::from_genus(const GenusResult& g) { return from_series(unhat(g)); }

bool CoeffTable::known(long long m, long long l) const {
    return m >= 0 && m <= static_cast<long long>(Q) * D && std::llabs(l) <= static_cast<long long>(W) * D;
}

CycRational CoeffTable::at(const Rational& m, const Rational& l) const {
    Rational mm = m * Rational(D), ll = l * Rational(D);
    if (!mm.is_integer() || !ll.is_integer()) return CycRational(0);
    if (!known(mm.num(), ll.num()))
        throw PrecisionError("c(" + m.str() + ", " + l.str() + ") lies outside the table (q <= " + std::to_string(Q) +
                             ", |y| <= " + std::to_string(W) + ")");
    auto it = c.find({mm.num(), ll.num()});
    return it == c.end() ? CycRational(0) : it->second;
}

Rational CoeffTable::l0() const {
    long long L = 0;
    for (const auto& [k, v] : c)
        if (k.first == 0) L = std::max(L, std::llabs(k.second));
    return Rational(L, D);
}

int CoeffTable::slope_bound() const {
    long long L0 = (l0() * Rational(D)).num();
    long long s = 1;
    for (const auto& [k, v] : c) {
        if (k.first == 0) continue;
        long long excess = std::llabs(k.second) - L0;
        if (excess > 0) s = std::max(s, ceil_div(excess, k.first));
    }
    return static_cast<int>(s);
}

bool CoeffTable::q_integral() const {
    for (const auto& [k, v] : c)
        if (k.first % D != 0) return false;
    return true;
}

// ---- twisted series and the two sides -----------------------------------------

QSeries f_ijs(const CoeffTable& t, int i, int j, int s, const TruncationPtr& target) {
    if (i < 1 || j < 1 || s < 0 || s >= j) throw ParameterError("f_ijs needs i, j >= 1 and 0 <= s < j");
    const Truncation& w = *target;
    if (w.D % (t.D * j) != 0)
        throw ParameterError("window denominator " + std::to_string(w.D) + " must be a multiple of " +
                             std::to_string(t.D * j));
    const long long scale = w.D / t.D;  // table units -> window units
    // every (m, l) landing inside the window must be in the table
    for (long long m = 0; i * m * scale / j <= w.qmax(); ++m) {
        long long A = i * m * scale / j;
        if (i * m * scale % j != 0) continue;
        long long lo = w.y_lo(A), hi = w.y_hi(A);
        long long need = std::max(std::llabs(lo), std::llabs(hi)) / (i * scale);
        if (m > static_cast<long long>(t.Q) * t.D || need > static_cast<long long>(t.W) * t.D)
            throw PrecisionError("table (q <= " + std::to_string(t.Q) + ", |y| <= " + std::to_string(t.W) +
                                 ") too small for F(" + std::to_string(i) + "," + std::to_string(j) + "," +
                                 std::to_string(s) + ") on " + w.describe());
    }
    std::vector<QSeries::Term> terms;
    for (const auto& [k, c] : t.c) {
        const long long m = k.first, l = k.second;
        ExponentKey key;
        if (i * m * scale % j != 0) throw ParameterError("q exponent off the window lattice");
        key.q = static_cast<std::int32_t>(i * m * scale / j);
        key.y = static_cast<std::int32_t>(i * l * scale);
        if (key.q > w.qmax()) continue;
        // e^{-2 pi i m s / j}, m in units of 1/D
        Rational phase = Rational(-m * s, static_cast<long long>(t.D) * j).frac();
        CycRational z = phase.is_zero() ? CycRational(1) : CycRational::root_of_unity(phase, static_cast<int>(phase.den()));
        terms.emplace_back(key, c * z);
    }
    return QSeries::from_terms(target, std::move(terms));
}

QSeries dmvv_lhs_exp(const CoeffTable& t, const TruncationPtr& work) {
    const int P = work->P;
    QSeries L(work);
    for (int i = 1; i <= P; ++i)
        for (int j = 1; i * j <= P; ++j) {
            QSeries sum(work);
            for (int s = 0; s < j; ++s) sum += f_ijs(t, i, j, s, work);
            ExponentKey pk;
            pk.p = i * j;
            L += sum.shifted(pk, CycRational(Rational(1, i * j)));
        }
    // every term of L carries p, so the exponential series stops at L^P / P!;
    // summing it directly keeps the exactness bookkeeping tight
    QSeries acc = QSeries::one(work), Lk = QSeries::one(work);
    for (int k = 1; k <= P; ++k) {
        Lk = (Lk * L).scaled(CycRational(Rational(1, k)));
        acc += Lk;
    }
    return acc;
}

QSeries dmvv_rhs_product(const CoeffTable& t, const TruncationPtr& work) {
    const Truncation& w = *work;
    const int P = w.P;
    if (w.D % t.D != 0) throw ParameterError("window denominator must be a multiple of the table's");
    if (!t.q_integral()) throw ParameterError("the product formula needs integral q exponents");
    const long long scale = w.D / t.D;
    QSeries acc = QSeries::one(work);
    for (int i = 1; i <= P; ++i) {
        for (long long mq = 0; mq <= w.qmax(); mq += w.D) {  // integer q powers only
            const long long m = mq / w.D;                    // q^m in the factor
            const long long mi = m * i * t.D;                // c(mi, .) in table units
            // the whole y range of the window at q^m must be readable
            long long need = std::max(std::llabs(w.y_lo(mq)), std::llabs(w.y_hi(mq))) / scale;
            if (m * i > t.Q || need > static_cast<long long>(t.W) * t.D)
                throw PrecisionError("table (q <= " + std::to_string(t.Q) + ", |y| <= " + std::to_string(t.W) +
                                     ") too small for the product on " + w.describe());
            for (auto it = t.c.lower_bound({mi, std::numeric_limits<long long>::min()});
                 it != t.c.end() && it->first.first == mi; ++it) {
                const Rational c = it->second.rational();
                ExponentKey xk;
                xk.p = i;
                xk.q = static_cast<std::int32_t>(mq);
                xk.y = static_cast<std::int32_t>(it->first.second * scale);
                QSeries X = QSeries::monomial(work, xk, CycRational(1));
                // (1 - X)^{-c} = sum_k binom(c + k - 1, k) X^k
                QSeries factor = QSeries::one(work), Xk = QSeries::one(work);
                Rational b(1);
                for (int k = 1; k * i <= P; ++k) {
                    b = b * (c + Rational(k - 1)) / Rational(k);
                    Xk = Xk * X;
                    factor += Xk.scaled(CycRational(b));
                }
                acc = acc * factor;
            }
        }
    }
    return acc;
}

TruncationPtr dmvv_working_window(const CoeffTable& t, int P, int Q, int W) {
    if (P < 0 || Q < 0 || W < 0) throw ParameterError("negative DMVV window");
    const int s = std::max(1, P) * t.slope_bound();
    const int D = t.D * lcm_upto(std::max(P, 1));
    // widest y window the table supports at this slope
    long long Wt = t.W;
    if (static_cast<long long>(P) * Q > t.Q)
        throw PrecisionError("table reaches q^" + std::to_string(t.Q) + ", the product needs q^" +
                             std::to_string(P * Q));
    long long Ww = Wt - static_cast<long long>(s) * Q;
    if (Ww < W)
        throw PrecisionError("table y-window " + std::to_string(t.W) + " leaves no room for |y| <= " +
                             std::to_string(W) + " at slope " + std::to_string(s));
    return rect(D, Q, static_cast<int>(Ww), P, s);
}

TruncationPtr dmvv_output_window(const CoeffTable& t, int P, int Q, int W) {
    return rect(t.D * lcm_upto(std::max(P, 1)), Q, W, P, 0);
}

DmvvResult dmvv_sides(const CoeffTable& t, int P, int Q, int W) {
    TruncationPtr work = dmvv_working_window(t, P, Q, W);
    TruncationPtr out = dmvv_output_window(t, P, Q, W);
    QSeries lhs = dmvv_lhs_exp(t, work).restricted(out, true);
    QSeries rhs = dmvv_rhs_product(t, work).restricted(out, true);
    QSeries res = lhs - rhs;
    return {lhs, rhs, res};
}

QSeries hilbert_scheme_series(const CoeffTable& t, int P, int Q, int W) {
    TruncationPtr work = dmvv_working_window(t, P, Q, W);
    return dmvv_rhs_product(t, work).restricted(dmvv_output_window(t, P, Q, W), true);
}

QSeries dmvv_pairs_check(const CoeffTable& t, int P, int Q, int W) { return dmvv_sides(t, P, Q, W).residual; }

CoeffTable dmvv_table(const ManifoldModel& m, int P, int Q, int W, int extra_guard) {
    // per unit of q the y-degree of the genus grows by at most max(1, |delta + 1|)
    Rational s0(1);
    for (const auto& d : m.divisors) {
        Rational a = d.delta + Rational(1);
        if (a < Rational(0)) a = -a;
        if (a > s0) s0 = a;
    }
    const int s = std::max(1, P) * static_cast<int>(ceil_div(s0.num(), s0.den()));
    // exp and products lose about P^2 dim/2 of y room
    const int guard = std::max(1, P) * std::max(1, P) * ((m.dim + 1) / 2) + 2 + extra_guard;
    GenusConfig cfg;
    cfg.Q = std::max(1, P) * Q;
    cfg.W = W + guard + s * Q;
    GenusResult g = m.divisors.empty() ? elliptic_genus(m, cfg) : pair_elliptic_genus(m, cfg);
    return CoeffTable::from_genus(g);
}

DmvvRun dmvv_for_model(const ManifoldModel& m, int P, int Q, int W) {
    int extra = 0;
    for (int attempt = 0;; ++attempt) {
        try {
            CoeffTable t = dmvv_table(m, P, Q, W, extra);
            DmvvResult r = dmvv_sides(t, P, Q, W);
            return {std::move(t), std::move(r)};
        } catch (const PrecisionError&) {
            if (attempt == 3) throw;
            extra = 2 * extra + 4;
        }
    }
}

// ---- denominators and p-coefficients ------------------------------------------

QSeries change_denominator(const QSeries& s, const TruncationPtr& target) {
    const Truncation& a = s.trunc();
    const Truncation& b = *target;
    if (a.gens != b.gens) throw ParameterError("change_denominator keeps the generators");
    if (a.D == b.D) return s.restricted(target);
    // same window shape over the new denominator, then restrict
    Truncation mid = a;
    mid.D = b.D;
    mid.q_floor = a.q_floor * b.D / a.D;
    std::vector<QSeries::Term> terms;
    for (const auto& [k, c] : s.terms()) {
        ExponentKey nk = k;
        long long q = static_cast<long long>(k.q) * b.D, y = static_cast<long long>(k.y) * b.D;
        if (q % a.D != 0 || y % a.D != 0)
            throw ParameterError("exponent " + format_key(a, k) + " is not a multiple of 1/" + std::to_string(b.D));
        nk.q = static_cast<std::int32_t>(q / a.D);
        nk.y = static_cast<std::int32_t>(y / a.D);
        terms.emplace_back(nk, c);
    }
    QSeries r = QSeries::from_terms(make_truncation(mid), std::move(terms));
    // exactness bounds scale with the unit (rounded down)
    auto rescale = [&](long long v) { return v >= 0 ? v * b.D / a.D : -ceil_div(-v * b.D, a.D); };
    r.set_exactness(rescale(s.exact_w()), rescale(s.exact_q()), s.clipped_low());
    return r.restricted(target);
}

QSeries p_coefficient(const QSeries& s, int n, const TruncationPtr& target) {
    const Truncation& a = s.trunc();
    if (n < 0 || n > a.P) throw ParameterError("p^" + std::to_string(n) + " is outside the series' p range");
    Truncation mid = a;
    mid.P = 0;
    std::vector<QSeries::Term> terms;
    for (const auto& [k, c] : s.terms())
        if (k.p == n) {
            ExponentKey nk = k;
            nk.p = 0;
            terms.emplace_back(nk, c);
        }
    QSeries r = QSeries::from_terms(make_truncation(mid), std::move(terms));
    r.set_exactness(s.exact_w(), s.exact_q(), s.clipped_low());
    return change_denominator(r, target);
}

// ---- S_n orbifold data ----------------------------------------------------------

namespace {

using Perm = std::vector<int>;

Perm compose(const Perm& a, const Perm& b) {  // a after b
    Perm r(a.size());
    for (size_t i = 0; i < a.size(); ++i) r[i] = a[b[i]];
    return r;
}

Perm identity_perm(int n) {
    Perm p(n);
    std::iota(p.begin(), p.end(), 0);
    return p;
}

int order(const Perm& p) {
    Perm id = identity_perm(static_cast<int>(p.size())), q = p;
    int k = 1;
    while (q != id) {
        q = compose(p, q);
        ++k;
    }
    return k;
}

Perm power(const Perm& p, int k) {
    Perm r = identity_perm(static_cast<int>(p.size()));
    for (int i = 0; i < k; ++i) r = compose(p, r);
    return r;
}

std::string cycle_str(const Perm& p) {
    std::string out;
    std::vector<bool> seen(p.size());
    for (size_t i = 0; i < p.size(); ++i) {
        if (seen[i] || p[i] == static_cast<int>(i)) continue;
        out += "(";
        for (size_t k = i; !seen[k]; k = p[k]) {
            seen[k] = true;
            out += std::to_string(k + 1);
        }
        out += ")";
    }
    return out.empty() ? "e" : out;
}

// Orbits of <g, h> on {0..n-1}.
std::vector<std::vector<int>> orbits(const Perm& g, const Perm& h) {
    const int n = static_cast<int>(g.size());
    std::vector<int> comp(n, -1);
    std::vector<std::vector<int>> out;
    for (int i = 0; i < n; ++i) {
        if (comp[i] >= 0) continue;
        std::vector<int> orb{i}, stack{i};
        comp[i] = static_cast<int>(out.size());
        while (!stack.empty()) {
            int x = stack.back();
            stack.pop_back();
            for (int y : {g[x], h[x]})
                if (comp[y] < 0) {
                    comp[y] = comp[i];
                    orb.push_back(y);
                    stack.push_back(y);
                }
        }
        std::sort(orb.begin(), orb.end());
        out.push_back(orb);
    }
    return out;
}

// Characters of <g, h> occurring in the permutation representation on an orbit.
std::vector<std::pair<Rational, Rational>> orbit_chars(const Perm& g, const Perm& h, const std::vector<int>& orb) {
    const int k = static_cast<int>(orb.size());
    const int og = order(g), oh = order(h);
    const int o = orb.front();
    std::vector<std::pair<int, int>> kernel;
    for (int u = 0; u <= og; ++u)
        for (int v = 0; v <= oh; ++v)
            if (compose(power(g, u), power(h, v))[o] == o) kernel.emplace_back(u, v);
    std::vector<std::pair<Rational, Rational>> out;
    for (int a = 0; a < k; ++a)
        for (int b = 0; b < k; ++b) {
            bool ok = true;
            for (auto [u, v] : kernel) ok = ok && (u * a + v * b) % k == 0;
            if (ok) out.emplace_back(Rational(a, k), Rational(b, k));
        }
    if (static_cast<int>(out.size()) != k) throw Error("internal: wrong number of orbit characters");
    std::sort(out.begin(), out.end(), [](const auto& x, const auto& y) {
        return x.first < y.first || (x.first == y.first && x.second < y.second);
    });
    return out;
}

}  // namespace

OrbifoldDatum symmetric_power_datum(const ManifoldModel& m, int n) {
    if (n < 1 || n > 3) throw ParameterError("symmetric powers are built for 1 <= n <= 3, got " + std::to_string(n));
    if (!m.divisors.empty()) throw ModelError("symmetric power data need a model without divisors");
    validate(m);
    if (n == 1) {
        OrbifoldDatum d = trivial_datum(m);
        d.name = m.name;
        return d;
    }
    std::vector<Perm> G;
    Perm p = identity_perm(n);
    do G.push_back(p);
    while (std::next_permutation(p.begin(), p.end()));

    OrbifoldDatum d;
    d.name = "Sym" + std::to_string(n) + "(" + m.name + ")";
    d.dim = n * m.dim;
    d.group_order = static_cast<int>(G.size());
    // canonical signature: per-orbit character lists, sorted
    using Sig = std::vector<std::vector<std::pair<Rational, Rational>>>;
    std::vector<Sig> sigs;
    auto sig_less = [](const Sig& a, const Sig& b) {
        if (a.size() != b.size()) return a.size() < b.size();
        for (size_t i = 0; i < a.size(); ++i) {
            if (a[i].size() != b[i].size()) return a[i].size() < b[i].size();
            for (size_t k = 0; k < a[i].size(); ++k) {
                if (a[i][k].first != b[i][k].first) return a[i][k].first < b[i][k].first;
                if (a[i][k].second != b[i][k].second) return a[i][k].second < b[i][k].second;
            }
        }
        return false;
    };
    for (const auto& g : G)
        for (const auto& h : G) {
            if (compose(g, h) != compose(h, g)) continue;
            Sig sig;
            for (const auto& orb : orbits(g, h)) sig.push_back(orbit_chars(g, h, orb));
            std::sort(sig.begin(), sig.end(), [&](const auto& a, const auto& b) { return sig_less(Sig{a}, Sig{b}); });
            auto it = std::find_if(sigs.begin(), sigs.end(),
                                   [&](const Sig& s) { return !sig_less(s, sig) && !sig_less(sig, s); });
            if (it != sigs.end()) {
                d.loci[it - sigs.begin()].multiplicity += 1;
                continue;
            }
            sigs.push_back(sig);
            FixedLocus L;
            L.label = cycle_str(g) + "," + cycle_str(h);
            // locus: one copy of X per orbit
            ManifoldModel space = m;
            for (size_t k = 1; k < sig.size(); ++k) space = product_model(space, m);
            space.name = sig.size() == 1 ? m.name : m.name + "^" + std::to_string(sig.size());
            L.space = space;
            L.tangent.push_back({0, 0, space.dim, space.chern});
            const int ng = static_cast<int>(m.gens.size());
            for (size_t k = 0; k < sig.size(); ++k) {
                std::vector<int> map(ng);
                for (int a = 0; a < ng; ++a) map[a] = static_cast<int>(k) * ng + a;
                Poly ck = m.chern.remapped(map);
                for (const auto& [lg, lh] : sig[k]) {
                    if (lg.is_zero() && lh.is_zero()) continue;
                    L.tangent.push_back({lg, lh, m.dim, ck});
                }
            }
            if (L.space.dim == 0) L.tangent.clear();
            d.loci.push_back(std::move(L));
        }
    validate(d);
    return d;
}

// ---- character identities -------------------------------------------------------

std::vector<std::pair<Rational, Rational>> orbit_characters(int i, int j, int s) {
    if (i < 1 || j < 1 || s < 0 || s >= j) throw ParameterError("orbit type needs i, j >= 1 and 0 <= s < j");
    std::vector<std::pair<Rational, Rational>> out;
    for (int n = 0; n < j; ++n)
        for (int m = 0; m < i * j; ++m)
            if (((m - n * s) % j + j) % j == 0) out.emplace_back(Rational(m, i * j), Rational(n, j));
    return out;
}

namespace {

const cplx two_pi_i(0, 2 * 3.14159265358979323846);

cplx lam(const std::pair<Rational, Rational>& l, cplx tau) {
    return l.first.to_double() - l.second.to_double() * tau;
}

double rel(cplx a, cplx b) { return std::abs(a - b) / std::max(1.0, std::abs(b)); }

}  // namespace

double character_product_residual(int i, int j, int s, cplx u, cplx z, cplx tau) {
    cplx tp = (double(i) * tau - double(s)) / double(j);
    cplx lhs = 1;
    for (const auto& l : orbit_characters(i, j, s)) {
        cplx w = u + lam(l, tau);
        lhs *= numeric_theta(w - z, tau) / numeric_theta(w, tau) * std::exp(two_pi_i * l.second.to_double() * z);
    }
    cplx rhs = numeric_theta(double(i) * (u - z), tp) / numeric_theta(double(i) * u, tp);
    return rel(lhs, rhs);
}

double character_product_limit_residual(int i, int j, int s, cplx u, cplx z, cplx tau) {
    cplx tp = (double(i) * tau - double(s)) / double(j);
    cplx lhs = 1;
    for (const auto& l : orbit_characters(i, j, s)) {
        if (l.first.is_zero() && l.second.is_zero()) continue;
        cplx a = lam(l, tau);
        lhs *= numeric_theta(u + a, tau) * numeric_theta(a - z, tau) /
               (numeric_theta(u + a - z, tau) * numeric_theta(a, tau));
    }
    cplx num = numeric_theta(double(i) * u, tp) * numeric_theta(u - z, tau) * numeric_theta(-double(i) * z, tp) *
               numeric_theta(0, tau, 1);
    cplx den = numeric_theta(double(i) * (u - z), tp) * numeric_theta(u, tau) * double(i) * numeric_theta(0, tp, 1) *
               numeric_theta(-z, tau);
    return rel(lhs, num / den);
}

double character_sum_residual(int i, int j, int s, cplx u, cplx v, cplx tau) {
    cplx tp = (double(i) * tau - double(s)) / double(j);
    cplx lhs = 0;
    for (const auto& l : orbit_characters(i, j, s)) {
        cplx w = u + lam(l, tau);
        lhs += numeric_theta(w - v, tau) / numeric_theta(w, tau) * std::exp(two_pi_i * l.second.to_double() * v);
    }
    cplx num = double(i) * numeric_theta(0, tp, 1) * numeric_theta(-v, tau) *
               numeric_theta(double(i) * u - v / double(j), tp);
    cplx den = numeric_theta(0, tau, 1) * numeric_theta(-v / double(j), tp) * numeric_theta(double(i) * u, tp);
    return rel(lhs, num / den);
}

}  // namespace ell
