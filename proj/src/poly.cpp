#include "ell/poly.hpp"

#include <cctype>

namespace ell {

int mono_degree(const Mono& m, const std::vector<Generator>& gens) {
    int d = 0;
    for (size_t i = 0; i < gens.size(); ++i) d += gens[i].degree * m[i];
    return d;
}

std::string mono_str(const Mono& m, const std::vector<Generator>& gens) {
    std::string s;
    for (size_t i = 0; i < gens.size(); ++i) {
        if (!m[i]) continue;
        if (!s.empty()) s += "*";
        s += gens[i].name;
        if (m[i] > 1) s += "^" + std::to_string(m[i]);
    }
    return s.empty() ? "1" : s;
}

Poly Poly::constant(const Rational& c) {
    Poly p;
    p.add_term(Mono{}, c);
    return p;
}

Poly Poly::generator(int i) {
    Poly p;
    Mono m{};
    m[i] = 1;
    p.add_term(m, Rational(1));
    return p;
}

Rational Poly::coeff(const Mono& m) const {
    auto it = t_.find(m);
    return it == t_.end() ? Rational(0) : it->second;
}

void Poly::add_term(const Mono& m, const Rational& c) {
    if (c.is_zero()) return;
    auto [it, fresh] = t_.try_emplace(m, c);
    if (!fresh) {
        it->second += c;
        if (it->second.is_zero()) t_.erase(it);
    }
}

Poly operator+(const Poly& a, const Poly& b) {
    Poly r = a;
    for (const auto& [m, c] : b.t_) r.add_term(m, c);
    return r;
}

Poly operator-(const Poly& a, const Poly& b) { return a + (-b); }

Poly Poly::operator-() const { return scaled(Rational(-1)); }

Poly Poly::scaled(const Rational& c) const {
    Poly r;
    if (c.is_zero()) return r;
    for (const auto& [m, x] : t_) r.t_.emplace(m, x * c);
    return r;
}

Poly Poly::mul(const Poly& a, const Poly& b, const std::vector<Generator>& gens, int maxdeg) {
    Poly r;
    for (const auto& [ma, ca] : a.t_)
        for (const auto& [mb, cb] : b.t_) {
            Mono m{};
            bool ok = true;
            for (int i = 0; i < kMaxGenerators; ++i) {
                int e = ma[i] + mb[i];
                if (e > 255) ok = false;
                m[i] = static_cast<std::uint8_t>(e);
            }
            if (!ok) throw ParameterError("monomial exponent overflow");
            if (maxdeg >= 0 && mono_degree(m, gens) > maxdeg) continue;
            r.add_term(m, ca * cb);
        }
    return r;
}

Poly Poly::pow(int e, const std::vector<Generator>& gens, int maxdeg) const {
    if (e < 0) throw ParameterError("negative power of a polynomial");
    Poly r = constant(Rational(1));
    for (int i = 0; i < e; ++i) r = mul(r, *this, gens, maxdeg);
    return r;
}

Poly Poly::degree_part(const std::vector<Generator>& gens, int d) const {
    Poly r;
    for (const auto& [m, c] : t_)
        if (mono_degree(m, gens) == d) r.t_.emplace(m, c);
    return r;
}

int Poly::max_degree(const std::vector<Generator>& gens) const {
    int d = -1;
    for (const auto& [m, c] : t_) d = std::max(d, mono_degree(m, gens));
    return d;
}

Poly Poly::remapped(const std::vector<int>& map) const {
    Poly r;
    for (const auto& [m, c] : t_) {
        Mono nm{};
        for (size_t i = 0; i < map.size(); ++i)
            if (m[i]) nm[map[i]] = m[i];
        r.add_term(nm, c);
    }
    return r;
}

std::string Poly::str(const std::vector<Generator>& gens) const {
    if (t_.empty()) return "0";
    // lowest degree first, then monomial order
    std::vector<std::pair<Mono, Rational>> items(t_.begin(), t_.end());
    std::stable_sort(items.begin(), items.end(), [&](const auto& x, const auto& y) {
        return mono_degree(x.first, gens) < mono_degree(y.first, gens);
    });
    std::string s;
    bool first = true;
    for (const auto& [m, c] : items) {
        Rational a = c;
        if (!first) {
            s += a.sign() < 0 ? " - " : " + ";
            if (a.sign() < 0) a = -a;
        }
        bool unit = (m == Mono{});
        if (unit) {
            s += a.str();
        } else {
            if (a == Rational(-1))
                s += "-";
            else if (!a.is_one())
                s += a.str() + " ";
            s += mono_str(m, gens);
        }
        first = false;
    }
    return s;
}

// ---- parser --------------------------------------------------------------

namespace {

struct PolyParser {
    const std::string& s;
    const std::vector<Generator>& gens;
    int maxdeg;
    size_t i = 0;

    [[noreturn]] void fail(const std::string& msg) const {
        throw ParseError(msg + " at column " + std::to_string(i + 1) + " in '" + s + "'");
    }
    void skip() {
        while (i < s.size() && std::isspace(static_cast<unsigned char>(s[i]))) ++i;
    }
    bool at_end() {
        skip();
        return i >= s.size();
    }
    char peek() {
        skip();
        return i < s.size() ? s[i] : '\0';
    }

    long long integer() {
        skip();
        size_t j = i;
        while (j < s.size() && std::isdigit(static_cast<unsigned char>(s[j]))) ++j;
        if (j == i) fail("expected an integer");
        long long v = std::stoll(s.substr(i, j - i));
        i = j;
        return v;
    }

    Poly expr() {
        Poly r;
        int sign = 1;
        if (peek() == '+' || peek() == '-') {
            sign = s[i] == '-' ? -1 : 1;
            ++i;
        }
        r = term().scaled(Rational(sign));
        while (true) {
            char c = peek();
            if (c != '+' && c != '-') break;
            ++i;
            r = r + term().scaled(Rational(c == '-' ? -1 : 1));
        }
        return r;
    }

    Poly term() {
        Poly r = factor();
        while (true) {
            char c = peek();
            if (c == '*') {
                ++i;
                r = Poly::mul(r, factor(), gens, maxdeg);
            } else if (c == '(' || std::isalpha(static_cast<unsigned char>(c)) || c == '_' ||
                       std::isdigit(static_cast<unsigned char>(c))) {
                r = Poly::mul(r, factor(), gens, maxdeg);
            } else {
                break;
            }
        }
        return r;
    }

    Poly factor() {
        Poly base = atom();
        if (peek() == '^') {
            ++i;
            long long e = integer();
            if (e > 64) fail("exponent too large");
            base = base.pow(static_cast<int>(e), gens, maxdeg);
        }
        return base;
    }

    Poly atom() {
        char c = peek();
        if (c == '(') {
            ++i;
            Poly r = expr();
            if (peek() != ')') fail("expected ')'");
            ++i;
            return r;
        }
        if (std::isdigit(static_cast<unsigned char>(c))) {
            long long n = integer();
            long long d = 1;
            if (peek() == '/') {
                ++i;
                d = integer();
                if (d == 0) fail("zero denominator");
            }
            return Poly::constant(Rational(n, d));
        }
        if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
            size_t j = i;
            while (j < s.size() && (std::isalnum(static_cast<unsigned char>(s[j])) || s[j] == '_')) ++j;
            std::string name = s.substr(i, j - i);
            for (size_t g = 0; g < gens.size(); ++g)
                if (gens[g].name == name) {
                    i = j;
                    return Poly::generator(static_cast<int>(g));
                }
            fail("unknown generator '" + name + "'");
        }
        fail(c ? std::string("unexpected '") + c + "'" : "unexpected end of expression");
    }
};

}  // namespace

Poly parse_poly(const std::string& text, const std::vector<Generator>& gens, int maxdeg) {
    PolyParser p{text, gens, maxdeg};
    if (p.at_end()) throw ParseError("empty polynomial");
    Poly r = p.expr();
    if (!p.at_end()) p.fail("trailing input");
    return r;
}

Mono parse_mono(const std::string& text, const std::vector<Generator>& gens) {
    Poly p = parse_poly(text, gens);
    if (p.terms().size() != 1 || !p.terms().begin()->second.is_one())
        throw ParseError("expected a single monomial, got '" + text + "'");
    return p.terms().begin()->first;
}

QSeries poly_to_series(const Poly& p, const TruncationPtr& t, const std::vector<int>& gen_map) {
    std::vector<QSeries::Term> terms;
    for (const auto& [m, c] : p.terms()) {
        ExponentKey k;
        for (int i = 0; i < kMaxGenerators; ++i) {
            if (!m[i]) continue;
            int to = gen_map.empty() ? i : gen_map[i];
            if (to < 0 || to >= static_cast<int>(t->gens.size()))
                throw ParameterError("polynomial uses a generator the series window lacks");
            k.nilp[to] = m[i];
        }
        terms.emplace_back(k, CycRational(c));
    }
    return QSeries::from_terms(t, std::move(terms));
}

}  // namespace ell
