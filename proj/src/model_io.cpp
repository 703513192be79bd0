#include "ell/model_io.hpp"

#include <fstream>
#include <functional>
#include <set>
#include <sstream>

namespace ell {

std::string trim(const std::string& s) {
    size_t a = s.find_first_not_of(" \t\r");
    if (a == std::string::npos) return "";
    size_t b = s.find_last_not_of(" \t\r");
    return s.substr(a, b - a + 1);
}

std::string read_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ParseError("cannot open '" + path + "'");
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

std::vector<IniSection> read_sections(const std::string& text, const std::string& source) {
    std::vector<IniSection> out;
    std::istringstream in(text);
    std::string raw;
    int line = 0;
    while (std::getline(in, raw)) {
        ++line;
        auto hash = raw.find('#');
        std::string s = trim(hash == std::string::npos ? raw : raw.substr(0, hash));
        if (s.empty()) continue;
        if (s.front() == '[') {
            if (s.back() != ']') throw ParseError(source + ":" + std::to_string(line) + ": unterminated section header");
            out.push_back({trim(s.substr(1, s.size() - 2)), line, {}});
            continue;
        }
        auto eq = s.find('=');
        if (eq == std::string::npos) throw ParseError(source + ":" + std::to_string(line) + ": expected 'key = value'");
        if (out.empty()) throw ParseError(source + ":" + std::to_string(line) + ": entry before any section");
        IniEntry e{trim(s.substr(0, eq)), trim(s.substr(eq + 1)), line};
        if (e.key.empty()) throw ParseError(source + ":" + std::to_string(line) + ": empty key");
        out.back().entries.push_back(std::move(e));
    }
    return out;
}

std::pair<Rational, Rational> parse_rational_pair(const std::string& s0) {
    std::string s = trim(s0);
    if (s.size() < 2 || s.front() != '(' || s.back() != ')') throw ParseError("expected a pair '(a, b)', got '" + s0 + "'");
    s = s.substr(1, s.size() - 2);
    auto comma = s.find(',');
    if (comma == std::string::npos) throw ParseError("expected a pair '(a, b)', got '" + s0 + "'");
    return {Rational::parse(trim(s.substr(0, comma))), Rational::parse(trim(s.substr(comma + 1)))};
}

namespace {

struct Ctx {
    std::string source;
    [[noreturn]] void fail(int line, const std::string& msg) const {
        throw ParseError(source + ":" + std::to_string(line) + ": " + msg);
    }
    template <class F>
    auto at(int line, F f) const {
        try {
            return f();
        } catch (const ParseError& e) {
            fail(line, e.what());
        } catch (const ModelError& e) {
            fail(line, e.what());
        }
    }
    int integer(const IniEntry& e) const {
        return at(e.line, [&] {
            Rational r = Rational::parse(e.value);
            if (!r.is_integer()) throw ParseError("'" + e.key + "' must be an integer");
            return static_cast<int>(r.num());
        });
    }
    Rational rational(const IniEntry& e) const {
        return at(e.line, [&] { return Rational::parse(e.value); });
    }
    bool boolean(const IniEntry& e) const {
        if (e.value == "true") return true;
        if (e.value == "false") return false;
        fail(e.line, "'" + e.key + "' must be true or false");
    }
};

std::vector<int> int_list(const Ctx& ctx, const IniEntry& e) {
    std::vector<int> out;
    std::stringstream ss(e.value);
    std::string tok;
    while (std::getline(ss, tok, ',')) {
        int v = ctx.integer(IniEntry{e.key, trim(tok), e.line});
        if (v < 0) ctx.fail(e.line, "'" + e.key + "' entries must be non-negative");
        out.push_back(v);
    }
    return out;
}

// Dispatches entries of a section to handlers; rejects unknown and repeated keys.
void each_key(const Ctx& ctx, const IniSection& s,
              const std::map<std::string, std::function<void(const IniEntry&)>>& handlers,
              const std::vector<std::string>& required = {}) {
    std::set<std::string> seen;
    for (const auto& e : s.entries) {
        auto it = handlers.find(e.key);
        if (it == handlers.end()) ctx.fail(e.line, "unknown key '" + e.key + "' in [" + s.name + "]");
        if (!seen.insert(e.key).second) ctx.fail(e.line, "repeated key '" + e.key + "'");
        it->second(e);
    }
    for (const auto& r : required)
        if (!seen.count(r)) ctx.fail(s.line, "[" + s.name + "] needs '" + r + "'");
}

// Sections that describe a manifold (the model itself or an orbifold locus).
bool manifold_section(const Ctx& ctx, const IniSection& s, ManifoldModel& m) {
    if (s.name == "generators") {
        for (const auto& e : s.entries) {
            if (m.generator_index(e.key) >= 0) ctx.fail(e.line, "generator '" + e.key + "' declared twice");
            for (char c : e.key)
                if (!std::isalnum(static_cast<unsigned char>(c)) && c != '_')
                    ctx.fail(e.line, "generator names are letters, digits and '_'");
            if (!std::isalpha(static_cast<unsigned char>(e.key[0])) && e.key[0] != '_')
                ctx.fail(e.line, "generator names start with a letter");
            // "degree" or "degree group k"
            std::istringstream vs(e.value);
            std::string dtok, word;
            int group = -1;
            vs >> dtok;
            if (vs >> word) {
                if (word != "group" || !(vs >> group) || group < 0 || (vs >> word))
                    ctx.fail(e.line, "expected 'degree' or 'degree group k'");
            }
            int deg = ctx.integer(IniEntry{e.key, dtok, e.line});
            if (deg < 1) ctx.fail(e.line, "generator degree must be positive");
            if (group >= static_cast<int>(m.group_caps.size()))
                ctx.fail(e.line, "group " + std::to_string(group) + " has no entry in group_caps");
            if (m.gens.size() >= static_cast<size_t>(kMaxGenerators)) ctx.fail(e.line, "too many generators");
            m.gens.push_back(Generator{e.key, deg, group});
        }
        return true;
    }
    if (s.name == "integrate") {
        for (const auto& e : s.entries) {
            Mono mono = ctx.at(e.line, [&] { return parse_mono(e.key, m.gens); });
            if (mono_degree(mono, m.gens) != m.dim)
                ctx.fail(e.line, "'" + e.key + "' is not of top degree " + std::to_string(m.dim));
            if (m.integrals.count(mono)) ctx.fail(e.line, "intersection number for '" + e.key + "' given twice");
            m.integrals[mono] = ctx.rational(e);
        }
        return true;
    }
    if (s.name == "chern") {
        each_key(ctx, s, {{"total", [&](const IniEntry& e) {
                               m.chern = ctx.at(e.line, [&] { return parse_poly(e.value, m.gens, m.dim); });
                           }}},
                 {"total"});
        return true;
    }
    return false;
}

ManifoldModel parse_manifold(const Ctx& ctx, const std::vector<IniSection>& secs) {
    ManifoldModel m;
    each_key(ctx, secs[0],
             {{"name", [&](const IniEntry& e) { m.name = e.value; }},
              {"dim", [&](const IniEntry& e) { m.dim = ctx.integer(e); }},
              {"euler", [&](const IniEntry& e) { m.euler = ctx.rational(e); }},
              {"c1_zero", [&](const IniEntry& e) { m.c1_zero = ctx.boolean(e); }},
              {"group_caps", [&](const IniEntry& e) { m.group_caps = int_list(ctx, e); }}},
             {"name", "dim"});
    if (m.dim < 0) ctx.fail(secs[0].line, "dimension must be non-negative");
    for (size_t i = 1; i < secs.size(); ++i) {
        const auto& s = secs[i];
        if (manifold_section(ctx, s, m)) continue;
        if (s.name == "divisor") {
            Divisor d;
            int delta_line = s.line;
            each_key(ctx, s,
                     {{"name", [&](const IniEntry& e) { d.name = e.value; }},
                      {"class", [&](const IniEntry& e) {
                           d.cls = ctx.at(e.line, [&] { return parse_poly(e.value, m.gens); });
                       }},
                      {"delta", [&](const IniEntry& e) {
                           d.delta = ctx.rational(e);
                           delta_line = e.line;
                       }}},
                     {"name", "class", "delta"});
            if (d.delta + Rational(1) <= Rational(0))
                throw KawamataError(ctx.source + ":" + std::to_string(delta_line) + ": divisor '" + d.name +
                                    "' has coefficient " + d.delta.str() +
                                    "; the pair is not log-terminal (need coefficient > -1)");
            m.divisors.push_back(std::move(d));
            continue;
        }
        ctx.fail(s.line, "unknown section [" + s.name + "] in a manifold file");
    }
    if (m.dim == 0 && m.integrals.empty()) m.integrals[Mono{}] = Rational(1);
    ctx.at(secs[0].line, [&] {
        validate(m);
        return 0;
    });
    return m;
}

OrbifoldDatum parse_orbifold(const Ctx& ctx, const std::vector<IniSection>& secs) {
    OrbifoldDatum d;
    each_key(ctx, secs[0],
             {{"name", [&](const IniEntry& e) { d.name = e.value; }},
              {"dim", [&](const IniEntry& e) { d.dim = ctx.integer(e); }},
              {"group_order", [&](const IniEntry& e) { d.group_order = ctx.integer(e); }}},
             {"name", "dim", "group_order"});
    FixedLocus* cur = nullptr;
    std::vector<int> default_chern;  // tangent summands waiting for the locus Chern class
    int locus_line = 0;
    auto finish = [&] {
        if (!cur) return;
        if (cur->space.dim == 0 && cur->space.integrals.empty()) cur->space.integrals[Mono{}] = Rational(1);
        for (int i : default_chern) cur->tangent[i].chern = cur->space.chern;
        default_chern.clear();
    };
    for (size_t i = 1; i < secs.size(); ++i) {
        const auto& s = secs[i];
        if (s.name == "divisor") {
            if (cur) ctx.fail(s.line, "ambient [divisor] sections must come before the first [locus]");
            AmbientDivisor a;
            each_key(ctx, s,
                     {{"name", [&](const IniEntry& e) { a.name = e.value; }},
                      {"delta", [&](const IniEntry& e) {
                           a.delta = ctx.rational(e);
                           if (a.delta + Rational(1) <= Rational(0))
                               throw KawamataError(ctx.source + ":" + std::to_string(e.line) + ": divisor '" + a.name +
                                                   "' has coefficient " + a.delta.str() +
                                                   "; the pair is not log-terminal (need coefficient > -1)");
                       }}},
                     {"name", "delta"});
            d.divisors.push_back(a);
            continue;
        }
        if (s.name == "locus") {
            finish();
            d.loci.emplace_back();
            cur = &d.loci.back();
            locus_line = s.line;
            each_key(ctx, s,
                     {{"pair", [&](const IniEntry& e) { cur->label = e.value; }},
                      {"multiplicity", [&](const IniEntry& e) {
                           cur->multiplicity = ctx.integer(e);
                           if (cur->multiplicity < 1) ctx.fail(e.line, "multiplicity must be positive");
                       }},
                      {"dim", [&](const IniEntry& e) { cur->space.dim = ctx.integer(e); }},
                      {"name", [&](const IniEntry& e) { cur->space.name = e.value; }},
                      {"euler", [&](const IniEntry& e) { cur->space.euler = ctx.rational(e); }},
                      {"group_caps", [&](const IniEntry& e) { cur->space.group_caps = int_list(ctx, e); }}},
                     {"pair", "dim"});
            if (cur->space.name.empty()) cur->space.name = d.name + "[" + cur->label + "]";
            continue;
        }
        if (!cur) ctx.fail(s.line, "[" + s.name + "] outside a [locus]");
        if (manifold_section(ctx, s, cur->space)) continue;
        if (s.name == "tangent") {
            TangentSummand t;
            bool has_chern = false;
            each_key(ctx, s,
                     {{"lambda", [&](const IniEntry& e) {
                           auto [g, h] = ctx.at(e.line, [&] { return parse_rational_pair(e.value); });
                           t.lambda_g = g;
                           t.lambda_h = h;
                       }},
                      {"rank", [&](const IniEntry& e) { t.rank = ctx.integer(e); }},
                      {"chern", [&](const IniEntry& e) {
                           t.chern = ctx.at(e.line, [&] { return parse_poly(e.value, cur->space.gens, cur->space.dim); });
                           has_chern = true;
                       }}},
                     {"lambda", "rank"});
            if (!has_chern) {
                if (t.lambda_g.is_zero() && t.lambda_h.is_zero())
                    default_chern.push_back(static_cast<int>(cur->tangent.size()));
                else
                    ctx.fail(s.line, "twisted tangent summand needs 'chern'");
            }
            cur->tangent.push_back(t);
            continue;
        }
        if (s.name == "restrict") {
            DivisorRestriction r;
            each_key(ctx, s,
                     {{"divisor", [&](const IniEntry& e) { r.divisor = e.value; }},
                      {"class", [&](const IniEntry& e) {
                           r.cls = ctx.at(e.line, [&] { return parse_poly(e.value, cur->space.gens); });
                       }},
                      {"epsilon", [&](const IniEntry& e) {
                           auto [g, h] = ctx.at(e.line, [&] { return parse_rational_pair(e.value); });
                           r.eps_g = g;
                           r.eps_h = h;
                       }}},
                     {"divisor", "class"});
            cur->divisors.push_back(r);
            continue;
        }
        ctx.fail(s.line, "unknown section [" + s.name + "] in an orbifold file");
    }
    finish();
    (void)locus_line;
    ctx.at(secs[0].line, [&] {
        validate(d);
        return 0;
    });
    return d;
}

std::string join_ints(const std::vector<int>& v) {
    std::string s;
    for (size_t i = 0; i < v.size(); ++i) s += (i ? ", " : "") + std::to_string(v[i]);
    return s;
}

std::string pair_str(const Rational& a, const Rational& b) { return "(" + a.str() + ", " + b.str() + ")"; }

void write_manifold_body(std::ostringstream& os, const ManifoldModel& m) {
    if (!m.gens.empty()) {
        os << "\n[generators]\n";
        for (const auto& g : m.gens) {
            os << g.name << " = " << g.degree;
            if (g.group >= 0) os << " group " << g.group;
            os << "\n";
        }
    }
    if (!m.integrals.empty() && !(m.dim == 0 && m.integrals.size() == 1 && m.integrals.begin()->second.is_one())) {
        os << "\n[integrate]\n";
        for (const auto& [mono, v] : m.integrals) os << mono_str(mono, m.gens) << " = " << v.str() << "\n";
    }
    os << "\n[chern]\ntotal = " << m.chern.str(m.gens) << "\n";
}

}  // namespace

ParsedModel parse_model_text(const std::string& text, const std::string& source) {
    Ctx ctx{source};
    auto secs = read_sections(text, source);
    if (secs.empty()) throw ParseError(source + ": empty model file");
    if (secs[0].name == "manifold") return parse_manifold(ctx, secs);
    if (secs[0].name == "orbifold") return parse_orbifold(ctx, secs);
    ctx.fail(secs[0].line, "the first section must be [manifold] or [orbifold]");
}

ParsedModel parse_model_file(const std::string& path) { return parse_model_text(read_file(path), path); }

ManifoldModel parse_manifold_file(const std::string& path) {
    ParsedModel p = parse_model_file(path);
    if (auto* m = std::get_if<ManifoldModel>(&p)) return *m;
    throw ParseError(path + ": expected a [manifold] file");
}

std::string serialize(const ManifoldModel& m) {
    std::ostringstream os;
    os << "[manifold]\nname = " << m.name << "\ndim = " << m.dim << "\n";
    if (m.euler) os << "euler = " << m.euler->str() << "\n";
    if (m.c1_zero) os << "c1_zero = true\n";
    if (!m.group_caps.empty()) os << "group_caps = " << join_ints(m.group_caps) << "\n";
    write_manifold_body(os, m);
    for (const auto& d : m.divisors)
        os << "\n[divisor]\nname = " << d.name << "\nclass = " << d.cls.str(m.gens) << "\ndelta = " << d.delta.str()
           << "\n";
    return os.str();
}

std::string serialize(const OrbifoldDatum& d) {
    std::ostringstream os;
    os << "[orbifold]\nname = " << d.name << "\ndim = " << d.dim << "\ngroup_order = " << d.group_order << "\n";
    for (const auto& a : d.divisors) os << "\n[divisor]\nname = " << a.name << "\ndelta = " << a.delta.str() << "\n";
    for (const auto& L : d.loci) {
        os << "\n[locus]\npair = " << L.label << "\nname = " << L.space.name << "\ndim = " << L.space.dim << "\n";
        if (L.multiplicity != 1) os << "multiplicity = " << L.multiplicity << "\n";
        if (L.space.euler) os << "euler = " << L.space.euler->str() << "\n";
        if (!L.space.group_caps.empty()) os << "group_caps = " << join_ints(L.space.group_caps) << "\n";
        write_manifold_body(os, L.space);
        for (const auto& t : L.tangent)
            os << "\n[tangent]\nlambda = " << pair_str(t.lambda_g, t.lambda_h) << "\nrank = " << t.rank
               << "\nchern = " << t.chern.str(L.space.gens) << "\n";
        for (const auto& r : L.divisors)
            os << "\n[restrict]\ndivisor = " << r.divisor << "\nclass = " << r.cls.str(L.space.gens)
               << "\nepsilon = " << pair_str(r.eps_g, r.eps_h) << "\n";
    }
    return os.str();
}

}  // namespace ell
