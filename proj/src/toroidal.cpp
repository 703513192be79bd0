#include "ell/toroidal.hpp"

#include "ell/errors.hpp"
#include "ell/geom.hpp"
#include "ell/model_io.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>
#include <sstream>

namespace ell {

namespace {

std::string vec_str(const IVec& v) {
    std::string s = "(";
    for (std::size_t i = 0; i < v.size(); ++i) s += (i ? "," : "") + std::to_string(v[i]);
    return s + ")";
}

std::string cone_str(const std::vector<IVec>& gens) {
    std::string s = "[";
    for (std::size_t i = 0; i < gens.size(); ++i) s += (i ? " " : "") + vec_str(gens[i]);
    return s + "]";
}

QVec to_qvec(const IVec& v) {
    QVec r;
    r.reserve(v.size());
    for (long long x : v) r.emplace_back(x);
    return r;
}

// Columns are the generators: x = G y.
QMat generator_matrix(const std::vector<IVec>& gens, const std::vector<int>& coords) {
    QMat m(coords.size(), QVec(gens.size()));
    for (std::size_t i = 0; i < coords.size(); ++i)
        for (std::size_t j = 0; j < gens.size(); ++j) m[i][j] = Rational(gens[j][coords[i]]);
    return m;
}

std::vector<int> all_coords(int r) {
    std::vector<int> c(r);
    std::iota(c.begin(), c.end(), 0);
    return c;
}

// Deterministic per-trial generator.
std::mt19937_64 trial_rng(std::uint64_t seed, int trial) {
    std::seed_seq s{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(trial)};
    return std::mt19937_64(s);
}

Rational random_rational(std::mt19937_64& rng, bool nonzero, bool positive) {
    std::uniform_int_distribution<long long> num(positive ? 1 : -60, 60), den(1, 37);
    for (;;) {
        long long n = num(rng);
        if (nonzero && n == 0) continue;
        return Rational(n, den(rng));
    }
}

QVec random_point(int r, const std::vector<int>& free, std::mt19937_64& rng) {
    QVec x(r);
    for (int i = 0; i < r; ++i) {
        bool f = std::find(free.begin(), free.end(), i) != free.end();
        x[i] = random_rational(rng, true, !f);
    }
    return x;
}

bool same_set(std::vector<IVec> a, std::vector<IVec> b) {
    std::sort(a.begin(), a.end());
    std::sort(b.begin(), b.end());
    return a == b;
}

int index_of(const std::vector<IVec>& gens, const IVec& v) {
    for (std::size_t i = 0; i < gens.size(); ++i)
        if (gens[i] == v) return static_cast<int>(i);
    return -1;
}

// Primitive integer multiple with first nonzero entry positive: l = lambda * key.
IVec primitive_key(const QVec& l, Rational& lambda) {
    long long den = 1;
    for (const auto& c : l) den = lcm_ll(den, c.den());
    IVec v(l.size());
    long long g = 0;
    for (std::size_t i = 0; i < l.size(); ++i) {
        v[i] = (l[i] * Rational(den)).num();
        g = gcd_ll(g, std::llabs(v[i]));
    }
    if (g == 0) throw DomainError("zero linear form");
    std::size_t first = 0;
    while (v[first] == 0) ++first;
    if (v[first] < 0) g = -g;
    for (auto& x : v) x /= g;
    lambda = l[first] / Rational(v[first]);
    return v;
}

}  // namespace

// ---- linear algebra ------------------------------------------------------------

std::vector<long long> smith_invariants(std::vector<IVec> a) {
    std::size_t rows = a.size(), cols = rows ? a[0].size() : 0;
    std::vector<long long> out;
    std::size_t t = 0;
    while (t < rows && t < cols) {
        // pivot: smallest nonzero |entry| in the lower-right block
        long long best = 0;
        std::size_t pi = 0, pj = 0;
        for (std::size_t i = t; i < rows; ++i)
            for (std::size_t j = t; j < cols; ++j)
                if (a[i][j] != 0 && (best == 0 || std::llabs(a[i][j]) < best)) best = std::llabs(a[i][j]), pi = i, pj = j;
        if (best == 0) break;
        std::swap(a[t], a[pi]);
        for (auto& row : a) std::swap(row[t], row[pj]);
        bool clean = true;
        for (std::size_t i = t + 1; i < rows; ++i) {
            long long q = a[i][t] / a[t][t];
            for (std::size_t j = t; j < cols; ++j) a[i][j] -= q * a[t][j];
            if (a[i][t] != 0) clean = false;
        }
        for (std::size_t j = t + 1; j < cols; ++j) {
            long long q = a[t][j] / a[t][t];
            for (std::size_t i = t; i < rows; ++i) a[i][j] -= q * a[i][t];
            if (a[t][j] != 0) clean = false;
        }
        if (!clean) continue;
        // divisibility: fold an offending row into row t and go again
        bool divides = true;
        for (std::size_t i = t + 1; i < rows && divides; ++i)
            for (std::size_t j = t + 1; j < cols; ++j)
                if (a[i][j] % a[t][t] != 0) {
                    for (std::size_t k = t; k < cols; ++k) a[t][k] += a[i][k];
                    divides = false;
                    break;
                }
        if (!divides) continue;
        out.push_back(std::llabs(a[t][t]));
        ++t;
    }
    return out;
}

std::vector<IVec> hermite_basis(std::vector<IVec> rows) {
    if (rows.empty()) return {};
    int r = static_cast<int>(rows[0].size());
    std::vector<IVec> basis(r);
    for (int col = r - 1; col >= 0; --col) {
        // gcd elimination in this column among the remaining rows
        for (;;) {
            std::size_t piv = rows.size();
            for (std::size_t i = 0; i < rows.size(); ++i)
                if (rows[i][col] != 0 && (piv == rows.size() || std::llabs(rows[i][col]) < std::llabs(rows[piv][col])))
                    piv = i;
            if (piv == rows.size()) throw DomainError("lattice generators do not have full rank");
            bool done = true;
            for (std::size_t i = 0; i < rows.size(); ++i) {
                if (i == piv || rows[i][col] == 0) continue;
                long long q = rows[i][col] / rows[piv][col];
                for (int k = 0; k < r; ++k) rows[i][k] -= q * rows[piv][k];
                if (rows[i][col] != 0) done = false;
            }
            if (done) {
                IVec b = rows[piv];
                if (b[col] < 0)
                    for (auto& x : b) x = -x;
                basis[col] = b;
                rows.erase(rows.begin() + static_cast<long>(piv));
                break;
            }
        }
    }
    // reduce the entries left of the diagonal
    for (int i = 0; i < r; ++i)
        for (int j = i - 1; j >= 0; --j) {
            long long h = basis[j][j];
            long long q = basis[i][j] >= 0 ? basis[i][j] / h : -((-basis[i][j] + h - 1) / h);
            for (int k = 0; k <= j; ++k) basis[i][k] -= q * basis[j][k];
        }
    return basis;
}

Rational determinant(QMat m) {
    std::size_t n = m.size();
    Rational det(1);
    for (std::size_t c = 0; c < n; ++c) {
        std::size_t p = c;
        while (p < n && m[p][c].is_zero()) ++p;
        if (p == n) return Rational(0);
        if (p != c) {
            std::swap(m[p], m[c]);
            det = -det;
        }
        det *= m[c][c];
        Rational inv = m[c][c].inv();
        for (std::size_t i = c + 1; i < n; ++i) {
            if (m[i][c].is_zero()) continue;
            Rational f = m[i][c] * inv;
            for (std::size_t j = c; j < n; ++j) m[i][j] -= f * m[c][j];
        }
    }
    return det;
}

QMat inverse(const QMat& m0) {
    std::size_t n = m0.size();
    QMat m = m0, inv(n, QVec(n));
    for (std::size_t i = 0; i < n; ++i) inv[i][i] = Rational(1);
    for (std::size_t c = 0; c < n; ++c) {
        std::size_t p = c;
        while (p < n && m[p][c].is_zero()) ++p;
        if (p == n) throw DomainError("singular matrix");
        std::swap(m[p], m[c]);
        std::swap(inv[p], inv[c]);
        Rational s = m[c][c].inv();
        for (std::size_t j = 0; j < n; ++j) {
            m[c][j] *= s;
            inv[c][j] *= s;
        }
        for (std::size_t i = 0; i < n; ++i) {
            if (i == c || m[i][c].is_zero()) continue;
            Rational f = m[i][c];
            for (std::size_t j = 0; j < n; ++j) {
                m[i][j] -= f * m[c][j];
                inv[i][j] -= f * inv[c][j];
            }
        }
    }
    return inv;
}

QMat to_qmat(const std::vector<IVec>& rows) {
    QMat m;
    for (const auto& r : rows) m.push_back(to_qvec(r));
    return m;
}

QVec mat_vec(const QMat& m, const QVec& v) {
    QVec r(m.size());
    for (std::size_t i = 0; i < m.size(); ++i)
        for (std::size_t j = 0; j < v.size(); ++j)
            if (!m[i][j].is_zero()) r[i] += m[i][j] * v[j];
    return r;
}

// ---- lattices ---------------------------------------------------------------------

LatticePair LatticePair::make(std::vector<IVec> gens) {
    LatticePair lp;
    lp.rank = static_cast<int>(gens.size());
    for (const auto& g : gens)
        if (static_cast<int>(g.size()) != lp.rank)
            throw DomainError("sublattice generator " + vec_str(g) + " has the wrong length");
    lp.gens = std::move(gens);
    if (determinant(to_qmat(lp.gens)).is_zero()) throw DomainError("sublattice generators are linearly dependent");
    return lp;
}

LatticePair LatticePair::identity(int rank) {
    std::vector<IVec> g(rank, IVec(rank, 0));
    for (int i = 0; i < rank; ++i) g[i][i] = 1;
    return make(g);
}

long long LatticePair::index() const {
    Rational det = determinant(to_qmat(gens));
    long long d = std::llabs(det.num());
    long long snf = 1;
    for (long long x : smith_invariants(gens)) snf *= x;
    if (snf != d) throw DomainError("index mismatch: determinant " + std::to_string(d) + ", Smith form " + std::to_string(snf));
    return d;
}

bool LatticePair::contains(const IVec& v) const {
    // v = sum c_k gens[k]  <=>  c = (G^T)^{-1} v with G^T having the gens as columns
    QMat cols(rank, QVec(rank));
    for (int i = 0; i < rank; ++i)
        for (int k = 0; k < rank; ++k) cols[i][k] = Rational(gens[k][i]);
    QVec c = mat_vec(inverse(cols), to_qvec(v));
    return std::all_of(c.begin(), c.end(), [](const Rational& x) { return x.is_integer(); });
}

long long LatticePair::face_index(const std::vector<int>& coords) const {
    // Hermite basis with the face coordinates first: its first |I| rows span the intersection.
    std::vector<int> order = coords;
    for (int i = 0; i < rank; ++i)
        if (std::find(coords.begin(), coords.end(), i) == coords.end()) order.push_back(i);
    std::vector<IVec> permuted;
    for (const auto& g : gens) {
        IVec p(rank);
        for (int i = 0; i < rank; ++i) p[i] = g[order[i]];
        permuted.push_back(p);
    }
    auto h = hermite_basis(permuted);
    long long idx = 1;
    for (std::size_t k = 0; k < coords.size(); ++k) idx *= h[k][k];
    return idx;
}

long long LatticePair::transverse_index(const std::vector<int>& coords) const {
    std::vector<int> rest;
    for (int i = 0; i < rank; ++i)
        if (std::find(coords.begin(), coords.end(), i) == coords.end()) rest.push_back(i);
    if (rest.empty()) return 1;
    std::vector<IVec> proj;
    for (const auto& g : gens) {
        IVec p;
        for (int i : rest) p.push_back(g[i]);
        proj.push_back(p);
    }
    auto inv = smith_invariants(proj);
    if (inv.size() != rest.size()) throw DomainError("projected sublattice is not of full rank");
    long long idx = 1;
    for (long long x : inv) idx *= x;
    return idx;
}

std::vector<IVec> quotient_group_elements(const LatticePair& lp) {
    auto h = hermite_basis(lp.gens);
    std::vector<IVec> out{IVec(lp.rank, 0)};
    for (int k = 0; k < lp.rank; ++k) {
        std::vector<IVec> next;
        for (const auto& v : out)
            for (long long t = 0; t < h[k][k]; ++t) {
                IVec w = v;
                w[k] = t;
                next.push_back(w);
            }
        out = std::move(next);
    }
    return out;
}

// ---- fans ----------------------------------------------------------------------------

bool SimplicialFan::in_support(const QVec& x) const {
    for (int i = 0; i < rank; ++i)
        if (std::find(free.begin(), free.end(), i) == free.end() && x[i].sign() < 0) return false;
    return true;
}

const QMat& SimplicialFan::dual_matrix(std::size_t c) const {
    if (inv_.size() != cones.size()) {
        inv_.assign(cones.size(), QMat{});
        inv_for_.assign(cones.size(), {});
    }
    if (inv_[c].empty() || inv_for_[c] != cones[c]) {
        inv_[c] = inverse(generator_matrix(cones[c], all_coords(rank)));
        inv_for_[c] = cones[c];
    }
    return inv_[c];
}

QVec SimplicialFan::dual_coords(std::size_t c, const QVec& x) const { return mat_vec(dual_matrix(c), x); }

FanReport check_unimodular(const SimplicialFan& fan, const LatticePair& lp) {
    FanReport rep;
    long long idx = lp.index();
    for (const auto& cone : fan.cones) {
        for (const auto& g : cone)
            if (!lp.contains(g)) rep.fail("generator " + vec_str(g) + " is not in the sublattice");
        Rational det = determinant(generator_matrix(cone, all_coords(fan.rank)));
        if (det.is_zero() || std::llabs(det.num()) != idx || !det.is_integer())
            rep.fail("cone " + cone_str(cone) + " has determinant " + det.str() + ", not a basis of the sublattice (index " +
                     std::to_string(idx) + ")");
    }
    return rep;
}

FanReport check_fan(const SimplicialFan& fan, const LatticePair* lp, int trials, std::uint64_t seed) {
    FanReport rep;
    int r = fan.rank;
    if (r <= 0) {
        rep.fail("rank must be positive");
        return rep;
    }
    if (fan.cones.empty()) rep.fail("no cones");
    for (int f : fan.free)
        if (f < 0 || f >= r) rep.fail("free coordinate out of range");
    for (const auto& cone : fan.cones) {
        if (static_cast<int>(cone.size()) != r) {
            rep.fail("cone " + cone_str(cone) + " does not have " + std::to_string(r) + " generators");
            continue;
        }
        for (const auto& g : cone) {
            if (static_cast<int>(g.size()) != r) rep.fail("generator " + vec_str(g) + " has the wrong length");
            else if (!fan.in_support(to_qvec(g))) rep.fail("generator " + vec_str(g) + " lies outside the support");
        }
    }
    if (!rep.ok) return rep;
    for (std::size_t c = 0; c < fan.cones.size(); ++c) {
        if (determinant(generator_matrix(fan.cones[c], all_coords(r))).is_zero())
            rep.fail("cone " + cone_str(fan.cones[c]) + " is degenerate");
        for (std::size_t d = 0; d < c; ++d)
            if (same_set(fan.cones[c], fan.cones[d])) rep.fail("cone " + cone_str(fan.cones[c]) + " is listed twice");
    }
    if (!rep.ok) return rep;

    // walls: each facet off the support boundary is shared with exactly one cone on the other side
    for (std::size_t c = 0; c < fan.cones.size(); ++c) {
        const auto& cone = fan.cones[c];
        for (int k = 0; k < r; ++k) {
            std::vector<IVec> facet;
            for (int j = 0; j < r; ++j)
                if (j != k) facet.push_back(cone[j]);
            bool boundary = false;
            for (int i = 0; i < r && !boundary; ++i) {
                if (std::find(fan.free.begin(), fan.free.end(), i) != fan.free.end()) continue;
                boundary = std::all_of(facet.begin(), facet.end(), [&](const IVec& g) { return g[i] == 0; });
            }
            if (boundary) continue;
            int partners = 0;
            for (std::size_t d = 0; d < fan.cones.size(); ++d) {
                if (d == c) continue;
                const auto& other = fan.cones[d];
                if (!std::all_of(facet.begin(), facet.end(), [&](const IVec& g) { return index_of(other, g) >= 0; }))
                    continue;
                ++partners;
                for (const auto& w : other)
                    if (index_of(facet, w) < 0 && fan.dual_coords(c, to_qvec(w))[k].sign() >= 0)
                        rep.fail("cones " + cone_str(cone) + " and " + cone_str(other) + " overlap across their common facet");
            }
            if (partners != 1)
                rep.fail("interior facet " + cone_str(facet) + " of " + cone_str(cone) + " lies in " + std::to_string(partners) +
                         " other cones");
        }
    }
    // covering
    for (int t = 0; t < trials && rep.ok; ++t) {
        auto rng = trial_rng(seed, t);
        for (;;) {
            QVec x = random_point(r, fan.free, rng);
            int inside = 0;
            bool on_wall = false;
            for (std::size_t c = 0; c < fan.cones.size(); ++c) {
                QVec y = fan.dual_coords(c, x);
                bool nonneg = std::all_of(y.begin(), y.end(), [](const Rational& v) { return v.sign() >= 0; });
                if (!nonneg) continue;
                if (std::any_of(y.begin(), y.end(), [](const Rational& v) { return v.is_zero(); })) on_wall = true;
                ++inside;
            }
            if (on_wall) continue;  // resample off the walls
            if (inside != 1) {
                std::ostringstream os;
                os << "point (";
                for (int i = 0; i < r; ++i) os << (i ? "," : "") << x[i];
                os << ") lies in " << inside << " cones";
                rep.fail(os.str());
            }
            break;
        }
    }
    if (lp && rep.ok) {
        if (lp->rank != r) rep.fail("lattice rank differs from fan rank");
        else {
            auto u = check_unimodular(fan, *lp);
            for (auto& p : u.problems) rep.fail(p);
        }
    }
    return rep;
}

namespace {

// Stellar subdivision at p, which lies in the relative interior of the face spanned by tau.
void star_subdivide(SimplicialFan& fan, const std::vector<IVec>& tau, const IVec& p) {
    std::vector<std::vector<IVec>> out;
    for (const auto& cone : fan.cones) {
        bool contains = std::all_of(tau.begin(), tau.end(), [&](const IVec& g) { return index_of(cone, g) >= 0; });
        if (!contains) {
            out.push_back(cone);
            continue;
        }
        for (const auto& g : tau) {
            auto c = cone;
            c[index_of(cone, g)] = p;
            out.push_back(c);
        }
    }
    fan.cones = std::move(out);
}

}  // namespace

SimplicialFan random_subdivision(const LatticePair& lp, int extra, std::mt19937_64& rng) {
    int r = lp.rank;
    SimplicialFan fan;
    fan.rank = r;
    std::vector<IVec> rays;
    long long idx = lp.index();
    for (int i = 0; i < r; ++i) {
        IVec v(r, 0);
        for (long long k = 1; k <= idx; ++k) {
            v[i] = k;
            if (lp.contains(v)) break;
        }
        rays.push_back(v);
    }
    fan.cones.push_back(rays);
    // resolve
    for (;;) {
        bool changed = false;
        for (std::size_t c = 0; c < fan.cones.size() && !changed; ++c) {
            const auto& cone = fan.cones[c];
            Rational det = determinant(generator_matrix(cone, all_coords(r)));
            if (std::llabs(det.num()) == idx) continue;
            const QMat& inv = fan.dual_matrix(c);
            for (const auto& u : lp.gens) {
                QVec lam = mat_vec(inv, to_qvec(u));
                for (auto& l : lam) l = l.frac();
                if (std::all_of(lam.begin(), lam.end(), [](const Rational& l) { return l.is_zero(); })) continue;
                IVec p(r, 0);
                std::vector<IVec> tau;
                for (int j = 0; j < r; ++j) {
                    if (lam[j].is_zero()) continue;
                    tau.push_back(cone[j]);
                }
                QVec pq(r);
                for (int j = 0; j < r; ++j)
                    for (int i = 0; i < r; ++i) pq[i] += lam[j] * Rational(cone[j][i]);
                for (int i = 0; i < r; ++i) p[i] = pq[i].num();
                auto copy = tau;
                star_subdivide(fan, copy, p);
                changed = true;
                break;
            }
        }
        if (!changed) break;
    }
    for (int e = 0; e < extra && r >= 2; ++e) {
        std::uniform_int_distribution<std::size_t> pick(0, fan.cones.size() - 1);
        const auto cone = fan.cones[pick(rng)];
        std::vector<IVec> tau;
        while (tau.size() < 2) {
            tau.clear();
            for (const auto& g : cone)
                if (rng() % 2) tau.push_back(g);
        }
        IVec p(r, 0);
        for (const auto& g : tau)
            for (int i = 0; i < r; ++i) p[i] += g[i];
        star_subdivide(fan, tau, p);
    }
    return fan;
}

LatticePair random_sublattice(int rank, int max_index, std::mt19937_64& rng) {
    // random lower-triangular Hermite basis
    for (;;) {
        std::vector<IVec> b(rank, IVec(rank, 0));
        long long idx = 1;
        for (int i = 0; i < rank; ++i) {
            std::uniform_int_distribution<long long> d(1, max_index);
            b[i][i] = d(rng);
            idx *= b[i][i];
        }
        if (idx > max_index) continue;
        for (int i = 0; i < rank; ++i)
            for (int j = 0; j < i; ++j) {
                std::uniform_int_distribution<long long> o(0, b[j][j] - 1);
                b[i][j] = o(rng);
            }
        return LatticePair::make(b);
    }
}

// ---- polynomials --------------------------------------------------------------------

MPoly MPoly::constant(int nvars, const Rational& c) {
    MPoly p;
    p.nvars = nvars;
    p.add(std::vector<int>(nvars, 0), c);
    return p;
}

MPoly MPoly::variable(int nvars, int i) {
    MPoly p;
    p.nvars = nvars;
    std::vector<int> e(nvars, 0);
    e[i] = 1;
    p.add(e, Rational(1));
    return p;
}

MPoly MPoly::linear(const QVec& coeffs) {
    MPoly p;
    p.nvars = static_cast<int>(coeffs.size());
    for (int i = 0; i < p.nvars; ++i) {
        std::vector<int> e(p.nvars, 0);
        e[i] = 1;
        p.add(e, coeffs[i]);
    }
    return p;
}

int MPoly::degree() const {
    int d = -1;
    for (const auto& [e, c] : terms) d = std::max(d, std::accumulate(e.begin(), e.end(), 0));
    return d;
}

void MPoly::add(const std::vector<int>& e, const Rational& c) {
    if (c.is_zero()) return;
    auto it = terms.find(e);
    if (it == terms.end()) {
        terms.emplace(e, c);
        return;
    }
    it->second += c;
    if (it->second.is_zero()) terms.erase(it);
}

Rational MPoly::eval(const QVec& x) const {
    Rational s;
    for (const auto& [e, c] : terms) {
        Rational m = c;
        for (int i = 0; i < nvars; ++i)
            for (int k = 0; k < e[i]; ++k) m *= x[i];
        s += m;
    }
    return s;
}

MPoly operator+(const MPoly& a, const MPoly& b) {
    MPoly r = a;
    r.nvars = std::max(a.nvars, b.nvars);
    for (const auto& [e, c] : b.terms) r.add(e, c);
    return r;
}

MPoly operator-(const MPoly& a, const MPoly& b) { return a + b.scaled(Rational(-1)); }

MPoly operator*(const MPoly& a, const MPoly& b) {
    if (a.nvars != b.nvars && !a.is_zero() && !b.is_zero()) throw DomainError("polynomials in different variables");
    MPoly r;
    r.nvars = std::max(a.nvars, b.nvars);
    for (const auto& [ea, ca] : a.terms)
        for (const auto& [eb, cb] : b.terms) {
            std::vector<int> e(r.nvars);
            for (int i = 0; i < r.nvars; ++i) e[i] = ea[i] + eb[i];
            r.add(e, ca * cb);
        }
    return r;
}

MPoly MPoly::scaled(const Rational& c) const {
    MPoly r;
    r.nvars = nvars;
    if (c.is_zero()) return r;
    for (const auto& [e, v] : terms) r.terms.emplace(e, v * c);
    return r;
}

MPoly MPoly::compose(const QMat& a) const {
    int m = a.empty() ? 0 : static_cast<int>(a[0].size());
    if (static_cast<int>(a.size()) != nvars) throw DomainError("composition with a matrix of the wrong shape");
    std::vector<std::vector<MPoly>> powers(nvars);  // powers[i][k] = (row i)^k
    MPoly r;
    r.nvars = m;
    for (const auto& [e, c] : terms) {
        MPoly t = MPoly::constant(m, c);
        for (int i = 0; i < nvars; ++i) {
            auto& pw = powers[i];
            if (pw.empty()) pw.push_back(MPoly::constant(m, Rational(1)));
            while (static_cast<int>(pw.size()) <= e[i]) pw.push_back(pw.back() * MPoly::linear(a[i]));
            if (e[i]) t = t * pw[e[i]];
        }
        r = r + t;
    }
    return r;
}

MPoly MPoly::restrict_to(const std::vector<int>& keep) const {
    MPoly r;
    r.nvars = static_cast<int>(keep.size());
    for (const auto& [e, c] : terms) {
        int kept = 0;
        for (int i : keep) kept += e[i];
        if (kept != std::accumulate(e.begin(), e.end(), 0)) continue;
        std::vector<int> ne(keep.size());
        for (std::size_t k = 0; k < keep.size(); ++k) ne[k] = e[keep[k]];
        r.add(ne, c);
    }
    return r;
}

std::string MPoly::str(const std::string& var) const {
    if (terms.empty()) return "0";
    std::string s;
    for (auto it = terms.rbegin(); it != terms.rend(); ++it) {
        const auto& [e, c] = *it;
        std::string mono;
        for (int i = 0; i < nvars; ++i) {
            if (!e[i]) continue;
            if (!mono.empty()) mono += "*";
            mono += var + std::to_string(i + 1);
            if (e[i] > 1) mono += "^" + std::to_string(e[i]);
        }
        Rational a = c;
        bool neg = a.sign() < 0;
        if (neg) a = -a;
        s += s.empty() ? (neg ? "-" : "") : (neg ? " - " : " + ");
        if (mono.empty()) s += a.str();
        else if (a.is_one()) s += mono;
        else s += a.str() + "*" + mono;
    }
    return s;
}

std::optional<MPoly> divide_linear(const MPoly& a, const QVec& l) {
    int n = static_cast<int>(l.size());
    int j = n - 1;
    while (j >= 0 && l[j].is_zero()) --j;
    if (j < 0) throw DomainError("division by the zero form");
    // a as a polynomial in x_j with coefficients in the other variables
    std::map<int, MPoly> coef;
    int top = 0;
    for (const auto& [e, c] : a.terms) {
        auto e0 = e;
        e0[j] = 0;
        auto& slot = coef[e[j]];
        slot.nvars = n;
        slot.add(e0, c);
        top = std::max(top, e[j]);
    }
    QVec rest = l;
    rest[j] = Rational(0);
    MPoly r = MPoly::linear(rest);
    Rational inv = l[j].inv();
    MPoly q;
    q.nvars = n;
    MPoly carry;
    carry.nvars = n;
    for (int k = top; k >= 1; --k) {
        MPoly ak = coef.count(k) ? coef[k] : MPoly{n, {}};
        MPoly qk = (ak - carry).scaled(inv);  // coefficient of x_j^{k-1} in q
        for (const auto& [e, c] : qk.terms) {
            auto e1 = e;
            e1[j] = k - 1;
            q.add(e1, c);
        }
        carry = qk * r;
    }
    MPoly a0 = coef.count(0) ? coef[0] : MPoly{n, {}};
    if (!(a0 - carry).is_zero()) return std::nullopt;
    return q;
}

MPoly random_mpoly(int nvars, int maxdeg, int nterms, std::mt19937_64& rng) {
    MPoly p;
    p.nvars = nvars;
    std::uniform_int_distribution<int> deg(0, maxdeg), coef(-5, 5);
    for (int t = 0; t < nterms; ++t) {
        std::vector<int> e(nvars, 0);
        int d = deg(rng);
        for (int k = 0; k < d; ++k) e[rng() % nvars]++;
        p.add(e, Rational(coef(rng)));
    }
    return p;
}

// ---- piecewise functions ---------------------------------------------------------------

PiecewiseFunction operator*(const PiecewiseFunction& a, const PiecewiseFunction& b) {
    PiecewiseFunction r;
    for (std::size_t i = 0; i < a.on_cone.size(); ++i) r.on_cone.push_back(a.on_cone[i] * b.on_cone[i]);
    return r;
}

PiecewiseFunction operator+(const PiecewiseFunction& a, const PiecewiseFunction& b) {
    PiecewiseFunction r;
    for (std::size_t i = 0; i < a.on_cone.size(); ++i) r.on_cone.push_back(a.on_cone[i] + b.on_cone[i]);
    return r;
}

PiecewiseFunction point_function(const SimplicialFan& fan, const IVec& v) {
    PiecewiseFunction f;
    for (std::size_t c = 0; c < fan.cones.size(); ++c) {
        QVec k = fan.dual_coords(c, to_qvec(v));
        MPoly p;
        p.nvars = fan.rank;
        if (std::all_of(k.begin(), k.end(), [](const Rational& x) { return x.sign() >= 0; })) {
            std::vector<int> e;
            for (const auto& x : k) {
                if (!x.is_integer()) throw DomainError("point " + vec_str(v) + " is not a lattice point of cone " + cone_str(fan.cones[c]));
                e.push_back(static_cast<int>(x.num()));
            }
            p.add(e, Rational(1));
        }
        f.on_cone.push_back(p);
    }
    return f;
}

IVec monomial_point(const SimplicialFan& fan, std::size_t cone, const std::vector<int>& exps) {
    IVec v(fan.rank, 0);
    for (int j = 0; j < fan.rank; ++j)
        for (int i = 0; i < fan.rank; ++i) v[i] += exps[j] * fan.cones[cone][j][i];
    return v;
}

std::optional<std::string> compatibility_violation(const SimplicialFan& fan, const PiecewiseFunction& f) {
    for (std::size_t a = 0; a < fan.cones.size(); ++a)
        for (std::size_t b = a + 1; b < fan.cones.size(); ++b) {
            std::vector<int> ka, kb;
            for (std::size_t i = 0; i < fan.cones[a].size(); ++i) {
                int j = index_of(fan.cones[b], fan.cones[a][i]);
                if (j >= 0) ka.push_back(static_cast<int>(i)), kb.push_back(j);
            }
            if (!(f.on_cone[a].restrict_to(ka) == f.on_cone[b].restrict_to(kb)))
                return "restrictions of cones " + cone_str(fan.cones[a]) + " and " + cone_str(fan.cones[b]) +
                       " to their common face disagree";
        }
    return std::nullopt;
}

PiecewiseFunction nu_pullback(const SimplicialFan& fan, const MPoly& g) {
    if (g.nvars != fan.rank) throw DomainError("pullback of a polynomial in the wrong number of variables");
    PiecewiseFunction f;
    for (const auto& cone : fan.cones) f.on_cone.push_back(g.compose(generator_matrix(cone, all_coords(fan.rank))));
    return f;
}

std::optional<std::string> wall_residue_violation(const SimplicialFan& fan, const PiecewiseFunction& f, int trials,
                                                  std::uint64_t seed) {
    int r = fan.rank;
    for (std::size_t a = 0; a < fan.cones.size(); ++a)
        for (std::size_t b = a + 1; b < fan.cones.size(); ++b) {
            std::vector<int> shared_a;
            int ka = -1, kb = -1;
            for (int i = 0; i < r; ++i) {
                if (index_of(fan.cones[b], fan.cones[a][i]) >= 0) shared_a.push_back(i);
                else ka = i;
            }
            if (static_cast<int>(shared_a.size()) != r - 1) continue;
            for (int i = 0; i < r; ++i)
                if (index_of(fan.cones[a], fan.cones[b][i]) < 0) kb = i;
            const QMat& ia = fan.dual_matrix(a);
            const QMat& ib = fan.dual_matrix(b);
            // the two wall forms are proportional: l_b = mu l_a
            Rational mu;
            for (int i = 0; i < r; ++i)
                if (!ia[ka][i].is_zero()) {
                    mu = ib[kb][i] / ia[ka][i];
                    break;
                }
            for (int i = 0; i < r; ++i)
                if (ib[kb][i] != mu * ia[ka][i]) return "cones " + cone_str(fan.cones[a]) + " and " + cone_str(fan.cones[b]) + " do not meet along a wall";
            std::vector<IVec> wall;
            for (int i : shared_a) wall.push_back(fan.cones[a][i]);
            for (int t = 0; t < trials; ++t) {
                auto rng = trial_rng(seed, t);
                QVec x(r);
                for (const auto& g : wall) {
                    Rational s = random_rational(rng, true, true);
                    for (int i = 0; i < r; ++i) x[i] += s * Rational(g[i]);
                }
                auto residue = [&](std::size_t c, int k) {
                    QVec y = fan.dual_coords(c, x);
                    Rational v = f.on_cone[c].eval(y);
                    for (int i = 0; i < r; ++i) v *= x[i];
                    for (int i = 0; i < r; ++i)
                        if (i != k) v /= y[i];
                    return v;
                };
                if (!(residue(a, ka) + residue(b, kb) / mu).is_zero())
                    return "pole along the wall " + cone_str(wall) + " between " + cone_str(fan.cones[a]) + " and " +
                           cone_str(fan.cones[b]);
            }
        }
    return std::nullopt;
}

Rational face_degree(const LatticePair& lp, const Rational& d, const std::vector<int>& coords) {
    return d * Rational(lp.transverse_index(coords));
}

namespace {

struct FaceCone {
    std::size_t cone;         // a maximal cone containing it
    std::vector<int> slots;   // its generators as indices into that cone
    QMat dual;                // dual forms in the face coordinates
};

std::vector<FaceCone> face_cones(const SimplicialFan& fan, const std::vector<int>& coords) {
    int r = fan.rank;
    std::vector<FaceCone> out;
    std::vector<std::vector<IVec>> seen;
    for (std::size_t c = 0; c < fan.cones.size(); ++c) {
        std::vector<int> slots;
        std::vector<IVec> gens;
        for (int j = 0; j < r; ++j) {
            const auto& g = fan.cones[c][j];
            bool inside = true;
            for (int i = 0; i < r; ++i)
                if (g[i] != 0 && std::find(coords.begin(), coords.end(), i) == coords.end()) inside = false;
            if (inside) slots.push_back(j), gens.push_back(g);
        }
        if (slots.size() != coords.size()) continue;
        if (std::any_of(seen.begin(), seen.end(), [&](const auto& s) { return same_set(s, gens); })) continue;
        seen.push_back(gens);
        out.push_back({c, slots, inverse(generator_matrix(gens, coords))});
    }
    return out;
}

std::vector<int> normalize_coords(const SimplicialFan& fan, std::vector<int> coords) {
    if (!fan.free.empty()) throw DomainError("pushforward needs a subdivision of the first orthant");
    if (coords.empty()) coords = all_coords(fan.rank);
    std::sort(coords.begin(), coords.end());
    return coords;
}

}  // namespace

MPoly nu_pushforward(const SimplicialFan& fan, const LatticePair& lp, const PiecewiseFunction& f, const Rational& d,
                     std::vector<int> coords) {
    coords = normalize_coords(fan, std::move(coords));
    int k = static_cast<int>(coords.size());
    auto cones = face_cones(fan, coords);
    // distinct hyperplanes among the dual forms
    std::vector<IVec> keys;
    struct Term {
        MPoly f;
        Rational lambda;
        std::vector<int> keys;
    };
    std::vector<Term> terms;
    for (const auto& fc : cones) {
        Term t;
        t.f = f.on_cone[fc.cone].restrict_to(fc.slots).compose(fc.dual);
        t.lambda = Rational(1);
        for (const auto& row : fc.dual) {
            Rational lam;
            IVec key = primitive_key(row, lam);
            t.lambda *= lam;
            int pos = index_of(keys, key);
            if (pos < 0) pos = static_cast<int>(keys.size()), keys.push_back(key);
            t.keys.push_back(pos);
        }
        terms.push_back(std::move(t));
    }
    MPoly prod_x = MPoly::constant(k, Rational(1));
    for (int i = 0; i < k; ++i) prod_x = prod_x * MPoly::variable(k, i);
    MPoly num;
    num.nvars = k;
    for (const auto& t : terms) {
        MPoly v = (t.f * prod_x).scaled(t.lambda.inv());
        for (std::size_t q = 0; q < keys.size(); ++q)
            if (std::find(t.keys.begin(), t.keys.end(), static_cast<int>(q)) == t.keys.end())
                v = v * MPoly::linear(to_qvec(keys[q]));
        num = num + v;
    }
    for (const auto& key : keys) {
        auto q = divide_linear(num, to_qvec(key));
        if (!q) {
            std::ostringstream os;
            os << "pushforward keeps a pole along the wall ";
            for (int i = 0; i < k; ++i) os << (i ? " + " : "") << key[i] << "*x" << coords[i] + 1;
            os << " = 0";
            throw DomainError(os.str());
        }
        num = *q;
    }
    return num.scaled(face_degree(lp, d, coords));
}

Rational nu_pushforward_at(const SimplicialFan& fan, const LatticePair& lp, const PiecewiseFunction& f, const Rational& d,
                           const std::vector<int>& coords0, const QVec& x) {
    auto coords = normalize_coords(fan, coords0);
    Rational px(1);
    for (const auto& v : x) px *= v;
    Rational s;
    for (const auto& fc : face_cones(fan, coords)) {
        QVec y = mat_vec(fc.dual, x);
        Rational v = f.on_cone[fc.cone].restrict_to(fc.slots).eval(y) * px;
        for (const auto& yi : y) {
            if (yi.is_zero()) throw DomainError("evaluation point lies on a wall");
            v /= yi;
        }
        s += v;
    }
    return s * face_degree(lp, d, coords);
}

std::optional<std::string> degree_count_violation(const SimplicialFan& fan, const LatticePair& lp, const Rational& d) {
    int r = fan.rank;
    if (!fan.free.empty()) throw DomainError("degree count needs a subdivision of the first orthant");
    auto abs_det = [&](const std::vector<IVec>& gens, const std::vector<int>& coords) {
        Rational det = determinant(generator_matrix(gens, coords));
        return det.sign() < 0 ? -det : det;
    };
    for (unsigned mask = 1; mask < (1u << r); ++mask) {
        std::vector<int> face;
        for (int i = 0; i < r; ++i)
            if (mask & (1u << i)) face.push_back(i);
        Rational dF = face_degree(lp, d, face);
        for (const auto& c1 : face_cones(fan, face)) {
            std::vector<IVec> g1;
            for (int s : c1.slots) g1.push_back(fan.cones[c1.cone][s]);
            Rational rhs = abs_det(g1, face) * dF;
            for (int i0 = 0; i0 < r; ++i0) {
                if (mask & (1u << i0)) continue;
                std::vector<int> face2 = face;
                face2.push_back(i0);
                std::sort(face2.begin(), face2.end());
                Rational dF2 = face_degree(lp, d, face2), lhs;
                for (const auto& c2 : face_cones(fan, face2)) {
                    std::vector<IVec> g2;
                    for (int s : c2.slots) g2.push_back(fan.cones[c2.cone][s]);
                    bool contains = std::all_of(g1.begin(), g1.end(), [&](const IVec& g) { return index_of(g2, g) >= 0; });
                    if (contains) lhs += abs_det(g2, face2) * dF2;
                }
                if (lhs != rhs)
                    return "degree count fails for cone " + cone_str(g1) + " going up along e" + std::to_string(i0 + 1) + ": " +
                           lhs.str() + " vs " + rhs.str();
            }
        }
    }
    return std::nullopt;
}

// ---- the orthant identities -------------------------------------------------------

Rational firstorth_defect(const SimplicialFan& fan, const LatticePair& lp, const QVec& x) {
    Rational s;
    for (std::size_t c = 0; c < fan.cones.size(); ++c) {
        QVec y = fan.dual_coords(c, x);
        Rational p(1);
        for (const auto& v : y) p *= v;
        if (p.is_zero()) throw DomainError("evaluation point lies on a wall");
        s += p.inv();
    }
    Rational px(1);
    for (const auto& v : x) px *= v;
    if (px.is_zero()) throw DomainError("evaluation point lies on a coordinate hyperplane");
    return s - Rational(lp.index()) / px;
}

namespace {

bool on_some_wall(const SimplicialFan& fan, const QVec& x) {
    for (const auto& v : x)
        if (v.is_zero()) return true;
    for (std::size_t c = 0; c < fan.cones.size(); ++c)
        for (const auto& v : fan.dual_coords(c, x))
            if (v.is_zero()) return true;
    return false;
}

void require_fan(const SimplicialFan& fan, std::uint64_t seed) {
    auto rep = check_fan(fan, nullptr, 8, seed);
    if (!rep.ok) throw DomainError("not a fan on its declared support: " + rep.problems.front());
}

}  // namespace

bool verify_firstorth(const SimplicialFan& fan, const LatticePair& lp, int trials, std::uint64_t seed) {
    if (!fan.free.empty()) throw DomainError("firstorth needs a fan in the first orthant");
    require_fan(fan, seed);
    for (int t = 0; t < trials; ++t) {
        auto rng = trial_rng(seed, t);
        QVec x;
        do x = random_point(fan.rank, {}, rng);
        while (on_some_wall(fan, x));
        // any sign is fine for a rational identity
        for (auto& v : x)
            if (rng() % 2) v = -v;
        if (on_some_wall(fan, x)) continue;
        if (!firstorth_defect(fan, lp, x).is_zero()) return false;
    }
    return true;
}

bool verify_toricsum(const SimplicialFan& fan, int trials, std::uint64_t seed) {
    if (fan.free.empty()) throw DomainError("toricsum does not apply: the support has no subspace factor");
    require_fan(fan, seed);
    for (int t = 0; t < trials; ++t) {
        auto rng = trial_rng(seed, t);
        QVec x;
        do x = random_point(fan.rank, fan.free, rng);
        while (on_some_wall(fan, x));
        Rational s;
        for (std::size_t c = 0; c < fan.cones.size(); ++c) {
            Rational p(1);
            for (const auto& v : fan.dual_coords(c, x)) p *= v;
            s += p.inv();
        }
        if (!s.is_zero()) return false;
    }
    return true;
}

PiecewiseFunction random_compatible_function(const SimplicialFan& fan, std::mt19937_64& rng) {
    PiecewiseFunction f = nu_pullback(fan, random_mpoly(fan.rank, 2, 3, rng));
    for (int k = 0; k < 3; ++k) {
        std::size_t c = rng() % fan.cones.size();
        std::vector<int> e(fan.rank);
        for (auto& x : e) x = static_cast<int>(rng() % 3);
        auto p = point_function(fan, monomial_point(fan, c, e));
        Rational a(static_cast<long long>(rng() % 7) - 3);
        for (auto& m : p.on_cone) m = m.scaled(a);
        f = f + p;
    }
    return f;
}

std::optional<std::string> push_contract_violation(const SimplicialFan& fan, const LatticePair& lp, const Rational& d,
                                                   int trials, std::uint64_t seed) {
    if (!fan.free.empty()) throw DomainError("the pushforward needs a fan in the first orthant");
    const int r = fan.rank;
    if (auto v = degree_count_violation(fan, lp, d)) return "degree count: " + *v;
    for (int t = 0; t < trials; ++t) {
        auto rng = trial_rng(seed, t);
        PiecewiseFunction f = random_compatible_function(fan, rng);
        MPoly g = random_mpoly(r, 2, 3, rng);
        std::string tag = "trial " + std::to_string(t) + ": ";
        if (auto v = compatibility_violation(fan, f)) return tag + "incompatible function: " + *v;
        if (auto v = wall_residue_violation(fan, f, 2, seed + t)) return tag + "residue: " + *v;
        MPoly push;
        try {
            push = nu_pushforward(fan, lp, f, d);
        } catch (const DomainError& e) {
            return tag + e.what();
        }
        if (!(nu_pushforward(fan, lp, nu_pullback(fan, g) * f, d) == g * push)) return tag + "projection formula fails";
        if (!(nu_pushforward(fan, lp, nu_pullback(fan, g), d) == g.scaled(d * Rational(lp.index()))))
            return tag + "nu_* nu^* g is not d |N:Nhat| g";
        for (int k = 0; k < 3; ++k) {
            QVec x;
            do x = random_point(r, {}, rng);
            while (on_some_wall(fan, x));
            if (!(push.eval(x) == nu_pushforward_at(fan, lp, f, d, {}, x)))
                return tag + "symbolic and pointwise pushforwards differ";
        }
        for (unsigned m = 1; m < (1u << r); ++m) {
            std::vector<int> face;
            for (int i = 0; i < r; ++i)
                if (m & (1u << i)) face.push_back(i);
            if (!(push.restrict_to(face) == nu_pushforward(fan, lp, f, d, face)))
                {
                std::string s = "face restriction differs on {";
                for (std::size_t i = 0; i < face.size(); ++i) s += (i ? "," : "") + std::to_string(face[i] + 1);
                return tag + s + "}";
            }
        }
    }
    return std::nullopt;
}

std::optional<std::string> random_push_contract_violation(int fans, int max_rank, std::uint64_t seed) {
    for (int t = 0; t < fans; ++t) {
        auto rng = trial_rng(seed, t);
        int r = 1 + t % max_rank;
        LatticePair lp = random_sublattice(r, 6, rng);
        SimplicialFan fan = random_subdivision(lp, 1 + static_cast<int>(rng() % 4), rng);
        auto rep = check_fan(fan, &lp, 10, seed + t);
        if (!rep.ok) return "random fan " + std::to_string(t) + ": " + rep.problems.front();
        Rational d(1 + static_cast<long long>(rng() % 2));
        if (auto v = push_contract_violation(fan, lp, d, 2, rng())) return "random fan " + std::to_string(t) + ", " + *v;
    }
    return std::nullopt;
}

namespace {

constexpr double kPi = 3.14159265358979323846;
const cplx kTwoPiI(0.0, 2.0 * kPi);

struct PhiEval {
    cplx tau, dtheta0;
    explicit PhiEval(cplx t) : tau(t), dtheta0(numeric_theta(0.0, t, 1)) {}
    // theta'(0) theta(w - b) / (2 pi i theta(w) theta(-b))
    cplx operator()(cplx w, double b) const {
        cplx den = kTwoPiI * numeric_theta(w, tau) * numeric_theta(-b, tau);
        if (std::abs(den) < 1e-12) throw SingularityError("theta quotient at a pole");
        return dtheta0 * numeric_theta(w - b, tau) / den;
    }
};

}  // namespace

ThetaSides mainthetalemma_sides(const SimplicialFan& fan, const LatticePair& lp, const QVec& a, const std::vector<cplx>& u,
                                cplx tau) {
    int r = fan.rank;
    if (!fan.free.empty()) throw DomainError("the theta identity needs a fan in the first orthant");
    PhiEval phi(tau);
    auto group = quotient_group_elements(lp);
    ThetaSides s{};
    for (std::size_t c = 0; c < fan.cones.size(); ++c) {
        const QMat& inv = fan.dual_matrix(c);
        std::vector<cplx> uc(r, 0.0);
        std::vector<double> ac(r, 0.0);
        for (int j = 0; j < r; ++j) {
            for (int i = 0; i < r; ++i) uc[j] += inv[j][i].to_double() * u[i];
            Rational v;
            for (int i = 0; i < r; ++i) v += a[i] * Rational(fan.cones[c][j][i]);
            ac[j] = v.to_double();
        }
        std::vector<QVec> frac;
        for (const auto& g : group) {
            QVec f = mat_vec(inv, to_qvec(g));
            for (auto& x : f) x = x.frac();
            frac.push_back(f);
        }
        for (const auto& g : frac)
            for (const auto& h : frac) {
                cplx term = 1.0;
                for (int j = 0; j < r; ++j) {
                    double gj = g[j].to_double(), hj = h[j].to_double();
                    term *= phi(uc[j] + gj - hj * tau, ac[j]) * std::exp(kTwoPiI * ac[j] * hj);
                }
                s.lhs += term;
            }
    }
    s.rhs = static_cast<double>(lp.index());
    for (int i = 0; i < r; ++i) s.rhs *= phi(u[i], a[i].to_double());
    return s;
}

double verify_mainthetalemma(const SimplicialFan& fan, const LatticePair& lp, const QVec& a, cplx tau, int trials,
                             std::uint64_t seed) {
    require_fan(fan, seed);
    double worst = 0.0;
    for (int t = 0; t < trials; ++t) {
        auto rng = trial_rng(seed, t);
        std::uniform_real_distribution<double> re(-0.45, 0.45), im(-0.3, 0.3);
        for (int attempt = 0;; ++attempt) {
            std::vector<cplx> u(fan.rank);
            for (auto& v : u) v = cplx(re(rng), im(rng) * tau.imag());
            try {
                auto s = mainthetalemma_sides(fan, lp, a, u, tau);
                worst = std::max(worst, std::abs(s.lhs - s.rhs) / std::max(1.0, std::abs(s.rhs)));
                break;
            } catch (const SingularityError&) {
                if (attempt > 20) throw;  // resample near a theta zero
            }
        }
    }
    return worst;
}

double theta_leading_term_residual(const SimplicialFan& fan, const LatticePair& lp, const QVec& a,
                                   const std::vector<cplx>& x, cplx tau, double eps0) {
    int r = fan.rank;
    auto scaled = [&](double eps) {
        std::vector<cplx> u(r);
        for (int i = 0; i < r; ++i) u[i] = eps * x[i] / kTwoPiI;
        return std::pow(eps, r) * mainthetalemma_sides(fan, lp, a, u, tau).lhs;
    };
    cplx l0 = scaled(eps0), l1 = scaled(eps0 / 2), l2 = scaled(eps0 / 4);
    cplx r1 = 2.0 * l1 - l0, r2 = 2.0 * l2 - l1;
    cplx lead = (4.0 * r2 - r1) / 3.0;
    cplx expect = 0.0;
    for (std::size_t c = 0; c < fan.cones.size(); ++c) {
        const QMat& inv = fan.dual_matrix(c);
        cplx p = 1.0;
        for (int j = 0; j < r; ++j) {
            cplx y = 0.0;
            for (int i = 0; i < r; ++i) y += inv[j][i].to_double() * x[i];
            p *= y;
        }
        expect += 1.0 / p;
    }
    return std::abs(lead - expect) / std::max(1.0, std::abs(expect));
}

// ---- rho ------------------------------------------------------------------------------

Poly rho_lite(const SncComplex& cx, const ManifoldModel& m, const MPoly& f) {
    int n = static_cast<int>(cx.divisors.size());
    if (f.nvars != n && !f.is_zero()) throw DomainError("function has the wrong number of variables");
    Poly out;
    for (const auto& [e, c] : f.terms) {
        std::vector<int> support;
        for (int i = 0; i < n; ++i)
            if (e[i] > 0) support.push_back(i);
        Poly term = Poly::constant(c);
        if (!support.empty()) {
            auto it = cx.strata.find(support);
            if (it == cx.strata.end()) {
                bool empty = std::any_of(cx.empty.begin(), cx.empty.end(), [&](const std::vector<int>& s) {
                    return std::includes(support.begin(), support.end(), s.begin(), s.end());
                });
                if (empty) continue;
                std::string name = "{";
                for (std::size_t k = 0; k < support.size(); ++k) name += (k ? "," : "") + std::to_string(support[k] + 1);
                throw DomainError("undeclared stratum " + name + "}");
            }
            term = Poly::mul(term, it->second, m.gens, m.dim);
            for (int i : support) term = Poly::mul(term, cx.divisors[i].pow(e[i] - 1, m.gens, m.dim), m.gens, m.dim);
        }
        out = out + term;
    }
    return out;
}

// ---- fan files --------------------------------------------------------------------------

namespace {

std::vector<IVec> parse_vectors(const std::string& text) {
    auto j = nlohmann::json::parse(text);
    if (!j.is_array()) throw ParseError("expected a list of integer vectors");
    std::vector<IVec> out;
    for (const auto& row : j) {
        if (!row.is_array()) throw ParseError("expected a list of integer vectors");
        IVec v;
        for (const auto& x : row) {
            if (!x.is_number_integer()) throw ParseError("non-integer entry in a vector");
            v.push_back(x.get<long long>());
        }
        out.push_back(v);
    }
    return out;
}

std::string vectors_json(const std::vector<IVec>& vs) {
    nlohmann::json j = nlohmann::json::array();
    for (const auto& v : vs) j.push_back(v);
    return j.dump();
}

}  // namespace

FanFile parse_fan_text(const std::string& text, const std::string& source) {
    auto fail = [&](int line, const std::string& msg) -> void {
        throw ParseError(source + ":" + std::to_string(line) + ": " + msg);
    };
    FanFile out;
    bool have_lattice = false;
    int lattice_line = 0;
    std::vector<IVec> sub;
    for (const auto& sec : read_sections(text, source)) {
        std::set<std::string> seen;
        if (sec.name == "lattice") {
            if (have_lattice) fail(sec.line, "repeated [lattice]");
            have_lattice = true;
            lattice_line = sec.line;
            for (const auto& e : sec.entries) {
                if (!seen.insert(e.key).second) fail(e.line, "repeated key '" + e.key + "'");
                try {
                    if (e.key == "name") out.name = e.value;
                    else if (e.key == "rank") {
                        Rational r = Rational::parse(e.value);
                        if (!r.is_integer() || r.sign() <= 0) throw ParseError("rank must be a positive integer");
                        out.fan.rank = static_cast<int>(r.num());
                    } else if (e.key == "sublattice") sub = parse_vectors(e.value);
                    else if (e.key == "free") {
                        auto j = nlohmann::json::parse(e.value);
                        for (const auto& x : j) {
                            if (!x.is_number_integer()) throw ParseError("free lists coordinates 1..rank");
                            out.fan.free.push_back(x.get<int>() - 1);
                        }
                    } else if (e.key == "degree") {
                        out.degree = Rational::parse(e.value);
                        if (out.degree.sign() <= 0) throw ParseError("degree must be positive");
                    } else
                        throw ParseError("unknown key '" + e.key + "'");
                } catch (const nlohmann::json::exception& ex) {
                    fail(e.line, std::string("bad list: ") + ex.what());
                } catch (const Error& ex) {
                    std::string w = ex.what();
                    fail(e.line, w);
                }
            }
            if (!seen.count("rank")) fail(sec.line, "[lattice] needs 'rank'");
        } else if (sec.name == "cone") {
            if (!have_lattice) fail(sec.line, "[cone] before [lattice]");
            bool got = false;
            for (const auto& e : sec.entries) {
                if (e.key != "gens") fail(e.line, "unknown key '" + e.key + "'");
                if (got) fail(e.line, "repeated key 'gens'");
                got = true;
                try {
                    auto g = parse_vectors(e.value);
                    if (static_cast<int>(g.size()) != out.fan.rank) throw ParseError("a cone needs rank generators");
                    for (const auto& v : g)
                        if (static_cast<int>(v.size()) != out.fan.rank) throw ParseError("generator " + vec_str(v) + " has the wrong length");
                    out.fan.cones.push_back(g);
                } catch (const nlohmann::json::exception& ex) {
                    fail(e.line, std::string("bad list: ") + ex.what());
                } catch (const Error& ex) {
                    std::string w = ex.what();
                    fail(e.line, w);
                }
            }
            if (!got) fail(sec.line, "[cone] needs 'gens'");
        } else {
            fail(sec.line, "unknown section [" + sec.name + "]");
        }
    }
    if (!have_lattice) throw ParseError(source + ": missing [lattice]");
    try {
        out.lattice = sub.empty() ? LatticePair::identity(out.fan.rank) : LatticePair::make(sub);
        if (out.lattice.rank != out.fan.rank) throw DomainError("sublattice rank differs from rank");
    } catch (const Error& ex) {
        std::string w = ex.what();
        fail(lattice_line, w);
    }
    auto rep = check_fan(out.fan, nullptr, 16, 1);
    if (!rep.ok) fail(lattice_line, rep.problems.front());
    return out;
}

FanFile parse_fan_file(const std::string& path) { return parse_fan_text(read_file(path), path); }

std::string serialize(const FanFile& f) {
    std::ostringstream os;
    os << "[lattice]\n";
    if (!f.name.empty()) os << "name = " << f.name << "\n";
    os << "rank = " << f.fan.rank << "\n";
    os << "sublattice = " << vectors_json(f.lattice.gens) << "\n";
    if (!f.fan.free.empty()) {
        nlohmann::json j = nlohmann::json::array();
        for (int i : f.fan.free) j.push_back(i + 1);
        os << "free = " << j.dump() << "\n";
    }
    if (!f.degree.is_one()) os << "degree = " << f.degree << "\n";
    for (const auto& c : f.fan.cones) os << "\n[cone]\ngens = " << vectors_json(c) << "\n";
    return os.str();
}

}  // namespace ell
