#include "ell/geom.hpp"

#include <set>

namespace ell {

int ManifoldModel::generator_index(const std::string& n) const {
    for (size_t i = 0; i < gens.size(); ++i)
        if (gens[i].name == n) return static_cast<int>(i);
    return -1;
}

void validate(const ManifoldModel& m) {
    const std::string who = "model '" + m.name + "': ";
    if (m.dim < 0) throw ModelError(who + "negative dimension");
    if (m.gens.size() > static_cast<size_t>(kMaxGenerators))
        throw ModelError(who + "too many generators (at most " + std::to_string(kMaxGenerators) + ")");
    std::set<std::string> names;
    for (const auto& g : m.gens) {
        if (g.degree < 1) throw ModelError(who + "generator '" + g.name + "' needs a positive degree");
        if (!names.insert(g.name).second) throw ModelError(who + "duplicate generator '" + g.name + "'");
        if (g.group >= static_cast<int>(m.group_caps.size()))
            throw ModelError(who + "generator group out of range");
    }
    for (const auto& [mono, v] : m.integrals)
        if (mono_degree(mono, m.gens) != m.dim)
            throw ModelError(who + "intersection number declared for " + mono_str(mono, m.gens) +
                             ", which is not of top degree");
    if (m.chern.constant_term() != Rational(1)) throw ModelError(who + "total Chern class must start with 1");
    if (m.chern.max_degree(m.gens) > m.dim) throw ModelError(who + "Chern class has terms above the dimension");
    std::set<std::string> dnames;
    for (const auto& d : m.divisors) {
        if (!dnames.insert(d.name).second) throw ModelError(who + "duplicate divisor '" + d.name + "'");
        if (d.delta + Rational(1) <= Rational(0))
            throw KawamataError(who + "divisor '" + d.name + "' has coefficient " + d.delta.str() +
                                "; the pair is not log-terminal (need coefficient > -1)");
        for (const auto& [mono, c] : d.cls.terms())
            if (mono_degree(mono, m.gens) != 1)
                throw ModelError(who + "divisor '" + d.name + "' class must be of degree 1");
    }
    if (m.euler) {
        Rational e = integrate(m, m.chern.degree_part(m.gens, m.dim));
        if (e != *m.euler)
            throw ModelError(who + "declared Euler number " + m.euler->str() + " but the top Chern class integrates to " +
                             e.str());
    }
    if (m.c1_zero) {
        // c1 * (anything of degree dim-1) must vanish; checked on monomials.
        Poly c1 = m.chern.degree_part(m.gens, 1);
        for (const auto& [mono, v] : m.integrals) {
            (void)v;
            for (size_t i = 0; i < m.gens.size(); ++i) {
                if (!mono[i] || m.gens[i].degree != 1) continue;
                Mono rest = mono;
                rest[i]--;
                Poly r;
                r.add_term(rest, Rational(1));
                if (!integrate(m, Poly::mul(c1, r, m.gens, -1)).is_zero())
                    throw ModelError(who + "declared c1 = 0 but c1 pairs nontrivially with " + mono_str(rest, m.gens));
            }
        }
    }
}

Rational integrate(const ManifoldModel& m, const Poly& p, bool strict) {
    Rational acc(0);
    for (const auto& [mono, c] : p.terms()) {
        if (mono_degree(mono, m.gens) != m.dim) continue;
        auto it = m.integrals.find(mono);
        if (it == m.integrals.end()) {
            if (strict)
                throw ModelError("model '" + m.name + "': no intersection number for " + mono_str(mono, m.gens));
            continue;
        }
        acc += c * it->second;
    }
    return acc;
}

std::vector<Poly> chern_classes(const Poly& total, const std::vector<Generator>& gens, int n) {
    std::vector<Poly> e(n + 1);
    for (int k = 0; k <= n; ++k) e[k] = total.degree_part(gens, k);
    return e;
}

std::vector<Poly> power_sums(const Poly& total, const std::vector<Generator>& gens, int n, int rank) {
    if (total.constant_term() != Rational(1)) throw ModelError("power sums need a Chern class with constant term 1");
    auto e = chern_classes(total, gens, n);
    std::vector<Poly> p(n + 1);
    p[0] = Poly::constant(Rational(rank));
    for (int k = 1; k <= n; ++k) {
        Poly acc = e[k].scaled(Rational(k % 2 ? k : -k));
        for (int i = 1; i < k; ++i) {
            Poly t = Poly::mul(e[i], p[k - i], gens, n);
            acc = acc + (i % 2 ? t : -t);
        }
        p[k] = acc;
    }
    return p;
}

Poly chern_from_power_sums(const std::vector<Poly>& p, const std::vector<Generator>& gens, int n) {
    std::vector<Poly> e(n + 1);
    e[0] = Poly::constant(Rational(1));
    Poly total = e[0];
    for (int k = 1; k <= n; ++k) {
        Poly acc;
        for (int i = 1; i <= k && i < static_cast<int>(p.size()); ++i) {
            Poly t = Poly::mul(e[k - i], p[i], gens, n);
            acc = acc + (i % 2 ? t : -t);
        }
        e[k] = acc.scaled(Rational(1, k));
        total = total + e[k];
    }
    return total;
}

TruncationPtr model_truncation(const ManifoldModel& m, int D, int Q, int W, int slope, int P) {
    Truncation t;
    t.D = D;
    t.Q = Q;
    t.W = W;
    t.slope = slope;
    t.P = P;
    t.nmax = m.dim;
    t.gens = m.gens;
    t.group_caps = m.group_caps;
    return make_truncation(std::move(t));
}

namespace {

// The x^k coefficient of h (slot generator only) as a series over target.
std::vector<QSeries> slot_parts(const QSeries& h, int slot, const TruncationPtr& target, int kmax) {
    const Truncation& ht = h.trunc();
    if (ht.D != target->D) throw ParameterError("root substitution needs matching exponent denominators");
    std::vector<std::vector<QSeries::Term>> parts(kmax + 1);
    for (const auto& [k, c] : h.terms()) {
        for (size_t i = 0; i < ht.gens.size(); ++i)
            if (static_cast<int>(i) != slot && k.nilp[i])
                throw ParameterError("series uses a generator other than the root slot");
        int j = slot >= 0 ? k.nilp[slot] : 0;
        if (j > kmax) continue;
        ExponentKey kk = k;
        kk.nilp = {};
        parts[j].emplace_back(kk, c);
    }
    std::vector<QSeries> out;
    out.reserve(kmax + 1);
    for (int j = 0; j <= kmax; ++j) {
        QSeries s = QSeries::from_terms(target, std::move(parts[j]));
        // carry exactness; slopes may differ between the two windows
        const long long ds = static_cast<long long>(ht.slope) - target->slope;
        const long long worst = std::max(ds * target->q_floor, ds * target->qmax());
        s.set_exactness(h.exact_w() - worst, h.exact_q(), h.clipped_low() || s.clipped_low());
        out.push_back(std::move(s));
    }
    return out;
}

}  // namespace

QSeries sum_over_roots(const QSeries& h, int slot, const std::vector<Poly>& psums, const TruncationPtr& target) {
    const int n = target->nmax;
    auto parts = slot_parts(h, slot, target, n);
    QSeries acc = parts[0].scaled(CycRational(psums.empty() ? Rational(0) : psums[0].constant_term()));
    for (int k = 1; k <= n && k < static_cast<int>(psums.size()); ++k) {
        if (parts[k].empty() && psums[k].is_zero()) continue;
        acc = acc + parts[k] * poly_to_series(psums[k], target);
    }
    if (psums.empty() || psums[0].constant_term().is_zero()) {
        // pure power-sum use: the constant part must vanish
        if (!parts[0].empty()) throw ParameterError("sum over roots of a series with a constant part needs a rank");
    }
    return acc;
}

QSeries substitute_class(const QSeries& h, int slot, const Poly& cls, const TruncationPtr& target) {
    const int n = target->nmax;
    auto parts = slot_parts(h, slot, target, n);
    QSeries acc = parts[0];
    Poly pw = Poly::constant(Rational(1));
    for (int k = 1; k <= n; ++k) {
        pw = Poly::mul(pw, cls, target->gens, n);
        if (pw.is_zero()) break;
        if (parts[k].empty()) continue;
        acc = acc + parts[k] * poly_to_series(pw, target);
    }
    return acc;
}

QSeries integrate_series(const ManifoldModel& m, const QSeries& s, const TruncationPtr& out, bool strict) {
    const Truncation& st = s.trunc();
    std::vector<QSeries::Term> terms;
    for (const auto& [k, c] : s.terms()) {
        if (nilp_degree(st, k) != m.dim) continue;
        Mono mono{};
        for (size_t i = 0; i < st.gens.size(); ++i) mono[i] = k.nilp[i];
        auto it = m.integrals.find(mono);
        if (it == m.integrals.end()) {
            if (strict) throw ModelError("model '" + m.name + "': no intersection number for " + mono_str(mono, m.gens));
            continue;
        }
        ExponentKey kk = k;
        kk.nilp = {};
        terms.emplace_back(kk, c * CycRational(it->second));
    }
    QSeries r = QSeries::from_terms(out, std::move(terms));
    const long long ds = static_cast<long long>(st.slope) - out->slope;
    const long long worst = std::max(ds * out->q_floor, ds * out->qmax());
    r.set_exactness(s.exact_w() - worst, s.exact_q(), s.clipped_low() || r.clipped_low());
    return r;
}

// ---- builders --------------------------------------------------------------

ManifoldModel point_model() {
    ManifoldModel m;
    m.name = "point";
    m.dim = 0;
    m.integrals[Mono{}] = Rational(1);
    m.euler = Rational(1);
    m.c1_zero = true;
    return m;
}

ManifoldModel projective_space(int n, const std::string& gen) {
    if (n < 0) throw ParameterError("negative dimension");
    if (n == 0) return point_model();
    ManifoldModel m;
    m.name = "P" + std::to_string(n);
    m.dim = n;
    m.gens = {Generator{gen, 1, -1}};
    Mono top{};
    top[0] = static_cast<std::uint8_t>(n);
    m.integrals[top] = Rational(1);
    // (1+h)^{n+1} truncated
    m.chern = (Poly::constant(Rational(1)) + Poly::generator(0)).pow(n + 1, m.gens, n);
    m.euler = Rational(n + 1);
    return m;
}

ManifoldModel product_model(const ManifoldModel& a, const ManifoldModel& b) {
    if (a.gens.size() + b.gens.size() > static_cast<size_t>(kMaxGenerators))
        throw ModelError("product of '" + a.name + "' and '" + b.name + "' needs more than " +
                         std::to_string(kMaxGenerators) + " generators");
    ManifoldModel m;
    m.name = a.name + "x" + b.name;
    m.dim = a.dim + b.dim;
    // degree caps: each factor's generators stay within that factor's dimension
    auto add_factor = [&](const ManifoldModel& f, std::vector<int>& map) {
        int base = static_cast<int>(m.group_caps.size());
        bool grouped = !f.group_caps.empty();
        if (grouped)
            for (int c : f.group_caps) m.group_caps.push_back(c);
        else if (!f.gens.empty())
            m.group_caps.push_back(f.dim);
        for (const auto& g : f.gens) {
            Generator ng = g;
            ng.group = grouped ? (g.group >= 0 ? base + g.group : -1) : base;
            std::string nm = g.name;
            for (int suffix = 2; m.generator_index(nm) >= 0; ++suffix) nm = g.name + std::to_string(suffix);
            ng.name = nm;
            map.push_back(static_cast<int>(m.gens.size()));
            m.gens.push_back(ng);
        }
    };
    std::vector<int> ma, mb;
    add_factor(a, ma);
    add_factor(b, mb);
    for (const auto& [xa, va] : a.integrals)
        for (const auto& [xb, vb] : b.integrals) {
            Mono mono{};
            for (size_t i = 0; i < ma.size(); ++i) mono[ma[i]] = xa[i];
            for (size_t i = 0; i < mb.size(); ++i) mono[mb[i]] = xb[i];
            m.integrals[mono] = va * vb;
        }
    m.chern = Poly::mul(a.chern.remapped(ma), b.chern.remapped(mb), m.gens, m.dim);
    for (const auto& d : a.divisors) m.divisors.push_back({d.name, d.cls.remapped(ma), d.delta});
    for (const auto& d : b.divisors) {
        std::string nm = d.name;
        for (int suffix = 2;; ++suffix) {
            bool clash = false;
            for (const auto& e : m.divisors) clash = clash || e.name == nm;
            if (!clash) break;
            nm = d.name + std::to_string(suffix);
        }
        m.divisors.push_back({nm, d.cls.remapped(mb), d.delta});
    }
    if (a.euler && b.euler) m.euler = *a.euler * *b.euler;
    m.c1_zero = a.c1_zero && b.c1_zero;
    return m;
}

ManifoldModel blowup_surface_point_model(const ManifoldModel& base, const std::string& gen) {
    if (base.dim != 2) throw ModelError("point blowup model needs a surface, got dimension " + std::to_string(base.dim));
    if (base.gens.size() >= static_cast<size_t>(kMaxGenerators)) throw ModelError("no room for another generator");
    ManifoldModel m = base;
    m.name = "Bl(" + base.name + ")";
    std::string nm = gen;
    for (int suffix = 2; m.generator_index(nm) >= 0; ++suffix) nm = gen + std::to_string(suffix);
    int gi = static_cast<int>(m.gens.size());
    m.gens.push_back(Generator{nm, 1, m.group_caps.empty() ? -1 : 0});
    if (!m.group_caps.empty()) {
        // a blown-up product no longer splits; drop the caps
        m.group_caps.clear();
        for (auto& g : m.gens) g.group = -1;
    }
    Mono e2{};
    e2[gi] = 2;
    m.integrals[e2] = Rational(-1);  // mixed monomials with e integrate to 0 by default
    Poly e = Poly::generator(gi);
    Poly e_sq = Poly::mul(e, e, m.gens, 2);
    m.chern = m.chern - e - e_sq;
    std::string dn = "E";
    for (int suffix = 2;; ++suffix) {
        bool clash = false;
        for (const auto& d : m.divisors) clash = clash || d.name == dn;
        if (!clash) break;
        dn = "E" + std::to_string(suffix);
    }
    m.divisors.push_back({dn, e, Rational(1)});
    if (m.euler) m.euler = *m.euler + Rational(1);
    m.c1_zero = false;
    return m;
}

// ---- orbifold data -----------------------------------------------------------

const AmbientDivisor& OrbifoldDatum::divisor(const std::string& n) const {
    for (const auto& d : divisors)
        if (d.name == n) return d;
    throw ModelError("orbifold '" + name + "': unknown divisor '" + n + "'");
}

void validate(const OrbifoldDatum& d) {
    const std::string who = "orbifold '" + d.name + "': ";
    if (d.group_order < 1) throw ModelError(who + "group order must be positive");
    for (const auto& a : d.divisors)
        if (a.delta + Rational(1) <= Rational(0))
            throw KawamataError(who + "divisor '" + a.name + "' has coefficient " + a.delta.str() +
                                "; need coefficient > -1");
    std::set<std::string> labels;
    auto in_unit = [](const Rational& r) { return r.sign() >= 0 && r < Rational(1); };
    for (const auto& L : d.loci) {
        const std::string lw = who + "locus '" + L.label + "': ";
        if (!labels.insert(L.label).second) throw ModelError(lw + "duplicate label");
        if (L.multiplicity < 1) throw ModelError(lw + "multiplicity must be positive");
        validate(L.space);
        if (L.space.dim > d.dim) throw ModelError(lw + "locus dimension exceeds the ambient dimension");
        int total = 0, fixed = 0;
        for (const auto& t : L.tangent) {
            if (!in_unit(t.lambda_g) || !in_unit(t.lambda_h))
                throw ModelError(lw + "tangent character (" + t.lambda_g.str() + "," + t.lambda_h.str() +
                                 ") outside [0,1)");
            if (t.rank < 1) throw ModelError(lw + "tangent summand rank must be positive");
            if (t.chern.constant_term() != Rational(1))
                throw ModelError(lw + "tangent summand Chern class must start with 1");
            total += t.rank;
            if (t.lambda_g.is_zero() && t.lambda_h.is_zero()) {
                fixed += t.rank;
                if (!(t.chern == L.space.chern))
                    throw ModelError(lw + "the character-(0,0) summand must carry the locus Chern class");
            }
        }
        if (total != d.dim)
            throw ModelError(lw + "tangent ranks add up to " + std::to_string(total) + ", expected " +
                             std::to_string(d.dim));
        if (fixed != L.space.dim)
            throw ModelError(lw + "character-(0,0) rank " + std::to_string(fixed) + " differs from the locus dimension " +
                             std::to_string(L.space.dim));
        std::set<std::string> seen;
        for (const auto& r : L.divisors) {
            d.divisor(r.divisor);
            if (!seen.insert(r.divisor).second) throw ModelError(lw + "divisor '" + r.divisor + "' restricted twice");
            if (!in_unit(r.eps_g) || !in_unit(r.eps_h))
                throw ModelError(lw + "divisor character outside [0,1)");
            for (const auto& [mono, c] : r.cls.terms())
                if (mono_degree(mono, L.space.gens) != 1)
                    throw ModelError(lw + "restricted class of '" + r.divisor + "' must be of degree 1");
        }
    }
}

OrbifoldDatum trivial_datum(const ManifoldModel& m) {
    OrbifoldDatum d;
    d.name = m.name;
    d.dim = m.dim;
    d.group_order = 1;
    FixedLocus L;
    L.label = "e,e";
    L.space = m;
    L.space.divisors.clear();
    L.tangent.push_back({Rational(0), Rational(0), m.dim, m.chern});
    if (m.dim == 0) L.tangent.clear();
    for (const auto& dv : m.divisors) {
        d.divisors.push_back({dv.name, dv.delta});
        L.divisors.push_back({dv.name, dv.cls, Rational(0), Rational(0)});
    }
    d.loci.push_back(std::move(L));
    return d;
}

}  // namespace ell
