// Truncated multivariate Puiseux series in q, y, p and nilpotent generators.
//
// Exponents of q and y are stored as integers in units of 1/D.  The window is
//
//     q_floor <= q <= Q,   -W - slope*q <= y <= W + slope*(Q - q),
//     p <= P,   weighted nilpotent degree <= nmax (plus optional group caps).
//
// With slope = 0 this is the plain rectangle |y| <= W.  A positive slope keeps
// the upper edge a level set of the weight  w = y + slope*q,  which makes the
// truncation an ideal for series whose terms have w >= 0; such products lose
// nothing inside the window.  Every series tracks how far its coefficients are
// known exactly (exact_w on the weight, exact_q on the q exponent), and
// coefficient() refuses to read past that.
#ifndef ELL_SERIES_HPP
#define ELL_SERIES_HPP

#include "ell/cyclotomic.hpp"
#include "ell/errors.hpp"
#include "ell/rational.hpp"

#include <algorithm>
#include <array>
#include <complex>
#include <cstdint>
#include <functional>
#include <limits>
#include <memory>
#include <queue>
#include <sstream>
#include <string>
#include <unordered_map>
#include <unordered_set>
#include <utility>
#include <vector>

namespace ell {

constexpr int kMaxGenerators = 8;

struct Generator {
    std::string name;
    int degree = 1;
    int group = -1;  // index into Truncation::group_caps, or -1
    bool operator==(const Generator&) const = default;
};

struct Truncation {
    int D = 1;
    int Q = 6;
    int W = 8;
    int slope = 0;
    int P = 0;
    int nmax = 0;
    long long q_floor = 0;  // units of 1/D
    std::vector<Generator> gens;
    std::vector<int> group_caps;

    bool operator==(const Truncation&) const = default;

    long long qmax() const { return static_cast<long long>(Q) * D; }
    long long y_hi(long long A) const { return static_cast<long long>(W) * D + slope * (qmax() - A); }
    long long y_lo(long long A) const { return -static_cast<long long>(W) * D - slope * std::max<long long>(A, 0); }
    long long top_weight() const { return static_cast<long long>(W) * D + slope * qmax(); }
    long long weight(long long A, long long B) const { return B + slope * A; }
    int generator_index(const std::string& name) const {
        for (size_t i = 0; i < gens.size(); ++i)
            if (gens[i].name == name) return static_cast<int>(i);
        return -1;
    }
    std::string describe() const;
};

using TruncationPtr = std::shared_ptr<const Truncation>;

inline TruncationPtr make_truncation(Truncation t) {
    if (t.D < 1 || t.Q < 0 || t.W < 0 || t.slope < 0 || t.P < 0 || t.nmax < 0)
        throw ParameterError("truncation parameters must be non-negative (D positive)");
    if (t.gens.size() > static_cast<size_t>(kMaxGenerators))
        throw ParameterError("at most " + std::to_string(kMaxGenerators) + " nilpotent generators per series");
    for (const auto& g : t.gens)
        if (g.group >= static_cast<int>(t.group_caps.size()))
            throw ParameterError("generator group index out of range");
    return std::make_shared<const Truncation>(std::move(t));
}

struct ExponentKey {
    std::int32_t q = 0;  // units of 1/D
    std::int32_t y = 0;  // units of 1/D
    std::int32_t p = 0;
    std::array<std::uint8_t, kMaxGenerators> nilp{};

    bool operator==(const ExponentKey&) const = default;
    auto operator<=>(const ExponentKey&) const = default;  // q, then y, then p, then nilp

    bool is_zero() const { return *this == ExponentKey{}; }
};

struct ExponentKeyHash {
    size_t operator()(const ExponentKey& k) const noexcept {
        std::uint64_t n = 0;
        for (int i = 0; i < kMaxGenerators; ++i) n = (n << 8) | k.nilp[i];
        std::uint64_t h = static_cast<std::uint32_t>(k.q);
        h = h * 0x9E3779B97F4A7C15ULL ^ static_cast<std::uint32_t>(k.y);
        h = h * 0x9E3779B97F4A7C15ULL ^ static_cast<std::uint32_t>(k.p);
        h = h * 0x9E3779B97F4A7C15ULL ^ n;
        return static_cast<size_t>(h ^ (h >> 29));
    }
};

inline int nilp_degree(const Truncation& t, const ExponentKey& k) {
    int d = 0;
    for (size_t i = 0; i < t.gens.size(); ++i) d += t.gens[i].degree * k.nilp[i];
    return d;
}

// Sum of keys; returns false when the nilpotent part overflows its caps.
inline bool add_keys(const Truncation& t, const ExponentKey& a, const ExponentKey& b, ExponentKey& out) {
    out.q = a.q + b.q;
    out.y = a.y + b.y;
    out.p = a.p + b.p;
    if (out.p > t.P) return false;
    int deg = 0;
    const size_t ng = t.gens.size();
    for (size_t i = 0; i < ng; ++i) {
        int e = a.nilp[i] + b.nilp[i];
        if (e > 255) return false;
        out.nilp[i] = static_cast<std::uint8_t>(e);
        deg += t.gens[i].degree * e;
    }
    if (deg > t.nmax) return false;
    if (!t.group_caps.empty()) {
        std::array<int, kMaxGenerators> gd{};
        for (size_t i = 0; i < ng; ++i)
            if (t.gens[i].group >= 0) gd[t.gens[i].group] += t.gens[i].degree * out.nilp[i];
        for (size_t g = 0; g < t.group_caps.size(); ++g)
            if (gd[g] > t.group_caps[g]) return false;
    }
    return true;
}

enum class WindowStatus { Inside, Above, Below };

// Below = dropped on the low side (q < q_floor or y below the lower edge);
// such drops can corrupt later products and are flagged on the series.
inline WindowStatus window_status(const Truncation& t, const ExponentKey& k) {
    if (k.q < t.q_floor) return WindowStatus::Below;
    if (k.q > t.qmax()) return WindowStatus::Above;
    if (k.y < t.y_lo(k.q)) return WindowStatus::Below;
    if (k.y > t.y_hi(k.q)) return WindowStatus::Above;
    if (k.p < 0) return WindowStatus::Below;
    if (k.p > t.P) return WindowStatus::Above;
    int deg = 0;
    for (size_t i = 0; i < t.gens.size(); ++i) deg += t.gens[i].degree * k.nilp[i];
    if (deg > t.nmax) return WindowStatus::Above;
    if (!t.group_caps.empty()) {
        std::array<int, kMaxGenerators> gd{};
        for (size_t i = 0; i < t.gens.size(); ++i)
            if (t.gens[i].group >= 0) gd[t.gens[i].group] += t.gens[i].degree * k.nilp[i];
        for (size_t g = 0; g < t.group_caps.size(); ++g)
            if (gd[g] > t.group_caps[g]) return WindowStatus::Above;
    }
    return WindowStatus::Inside;
}

std::string format_exponent(long long units, int D);
std::string format_key(const Truncation& t, const ExponentKey& k);

// ---- coefficient traits -------------------------------------------------

template <class C>
struct CoeffTraits;

template <>
struct CoeffTraits<CycRational> {
    static CycRational zero() { return CycRational(); }
    static CycRational one() { return CycRational(1); }
    static bool is_zero(const CycRational& c) { return c.is_zero(); }
    static CycRational from_rational(const Rational& r) { return CycRational(r); }
    static CycRational inv(const CycRational& c) { return c.inv(); }
    static std::string str(const CycRational& c) { return c.str(); }
};

template <>
struct CoeffTraits<std::complex<double>> {
    using C = std::complex<double>;
    static C zero() { return 0.0; }
    static C one() { return 1.0; }
    static bool is_zero(const C& c) { return c == 0.0; }
    static C from_rational(const Rational& r) { return r.to_double(); }
    static C inv(const C& c) {
        if (c == 0.0) throw InversionError("inverse of zero");
        return 1.0 / c;
    }
    static std::string str(const C& c) {
        std::ostringstream os;
        os.precision(17);
        os << "(" << c.real() << (c.imag() < 0 ? "" : "+") << c.imag() << "i)";
        return os.str();
    }
};

// ---- series ----------------------------------------------------------------

template <class C>
class Series {
public:
    using Coeff = C;
    using Traits = CoeffTraits<C>;
    using Term = std::pair<ExponentKey, C>;

    explicit Series(TruncationPtr t)
        : t_(std::move(t)), top_w_(t_->top_weight()), top_q_(t_->qmax()) {}

    static Series zero(TruncationPtr t) { return Series(std::move(t)); }
    static Series constant(TruncationPtr t, const C& c) { return monomial(std::move(t), ExponentKey{}, c); }
    static Series one(TruncationPtr t) { return constant(std::move(t), Traits::one()); }
    static Series monomial(TruncationPtr t, const ExponentKey& k, const C& c) {
        Series s(std::move(t));
        s.push_checked(k, c);
        return s;
    }
    // Builds from arbitrary (possibly repeated, unsorted) terms.
    static Series from_terms(TruncationPtr t, std::vector<Term> terms) {
        Series s(std::move(t));
        std::sort(terms.begin(), terms.end(), [](const Term& a, const Term& b) { return a.first < b.first; });
        for (size_t i = 0; i < terms.size();) {
            C acc = terms[i].second;
            size_t j = i + 1;
            while (j < terms.size() && terms[j].first == terms[i].first) acc += terms[j++].second;
            s.push_checked(terms[i].first, acc);
            i = j;
        }
        return s;
    }

    const Truncation& trunc() const { return *t_; }
    const TruncationPtr& trunc_ptr() const { return t_; }
    const std::vector<Term>& terms() const { return terms_; }
    size_t size() const { return terms_.size(); }
    bool empty() const { return terms_.empty(); }

    long long exact_w() const { return top_w_; }
    long long exact_q() const { return top_q_; }
    bool clipped_low() const { return clipped_; }
    bool fully_exact() const { return !clipped_ && top_w_ >= t_->top_weight() && top_q_ >= t_->qmax(); }
    void set_exactness(long long w, long long q, bool clipped) {
        top_w_ = std::min(w, t_->top_weight());
        top_q_ = std::min(q, t_->qmax());
        clipped_ = clipped;
    }

    long long min_weight() const {
        long long m = std::numeric_limits<long long>::max() / 4;
        for (const auto& [k, c] : terms_) m = std::min(m, t_->weight(k.q, k.y));
        return m;
    }
    long long min_q() const {
        long long m = std::numeric_limits<long long>::max() / 4;
        for (const auto& [k, c] : terms_) m = std::min<long long>(m, k.q);
        return m;
    }

    // Coefficient lookup; errors outside the window or past the exact region.
    C coefficient(const ExponentKey& k) const {
        if (window_status(*t_, k) != WindowStatus::Inside)
            throw OutOfWindowError("coefficient " + format_key(*t_, k) + " lies outside the window " + t_->describe());
        if (clipped_ || t_->weight(k.q, k.y) > top_w_ || k.q > top_q_)
            throw PrecisionError("coefficient " + format_key(*t_, k) + " is past the exactly known region");
        return get(k);
    }
    // Stored coefficient or zero, no checks.
    C get(const ExponentKey& k) const {
        auto it = std::lower_bound(terms_.begin(), terms_.end(), k,
                                   [](const Term& a, const ExponentKey& b) { return a.first < b; });
        if (it != terms_.end() && it->first == k) return it->second;
        return Traits::zero();
    }

    Series operator-() const {
        Series r = *this;
        for (auto& [k, c] : r.terms_) c = -c;
        return r;
    }

    friend Series operator+(const Series& a, const Series& b) {
        check_same(a, b);
        Series r(a.t_);
        r.terms_.reserve(a.terms_.size() + b.terms_.size());
        size_t i = 0, j = 0;
        while (i < a.terms_.size() || j < b.terms_.size()) {
            if (j == b.terms_.size() || (i < a.terms_.size() && a.terms_[i].first < b.terms_[j].first)) {
                r.terms_.push_back(a.terms_[i++]);
            } else if (i == a.terms_.size() || b.terms_[j].first < a.terms_[i].first) {
                r.terms_.push_back(b.terms_[j++]);
            } else {
                C c = a.terms_[i].second + b.terms_[j].second;
                if (!Traits::is_zero(c)) r.terms_.emplace_back(a.terms_[i].first, std::move(c));
                ++i;
                ++j;
            }
        }
        r.top_w_ = std::min(a.top_w_, b.top_w_);
        r.top_q_ = std::min(a.top_q_, b.top_q_);
        r.clipped_ = a.clipped_ || b.clipped_;
        return r;
    }
    friend Series operator-(const Series& a, const Series& b) { return a + (-b); }

    friend Series operator*(const Series& a, const Series& b) {
        check_same(a, b);
        const Truncation& t = *a.t_;
        Series r(a.t_);
        std::unordered_map<ExponentKey, C, ExponentKeyHash> acc;
        acc.reserve(a.terms_.size() + b.terms_.size());
        ExponentKey k;
        const long long qmax = t.qmax();
        bool clipped = a.clipped_ || b.clipped_;
        for (const auto& [ka, ca] : a.terms_) {
            for (const auto& [kb, cb] : b.terms_) {
                if (static_cast<long long>(ka.q) + kb.q > qmax) break;  // b is sorted by q
                if (!add_keys(t, ka, kb, k)) continue;
                if (k.y > t.y_hi(k.q)) continue;
                if (k.y < t.y_lo(k.q) || k.q < t.q_floor) {
                    clipped = true;
                    continue;
                }
                auto [it, fresh] = acc.try_emplace(k, ca * cb);
                if (!fresh) it->second += ca * cb;
            }
        }
        r.terms_.reserve(acc.size());
        for (auto& [key, c] : acc)
            if (!Traits::is_zero(c)) r.terms_.emplace_back(key, std::move(c));
        std::sort(r.terms_.begin(), r.terms_.end(), [](const Term& x, const Term& y) { return x.first < y.first; });
        const long long wa = a.min_weight(), wb = b.min_weight();
        const long long qa = a.min_q(), qb = b.min_q();
        r.top_w_ = std::min({t.top_weight(), a.top_w_ + wb, b.top_w_ + wa});
        r.top_q_ = std::min({t.qmax(), a.top_q_ + qb, b.top_q_ + qa});
        r.clipped_ = clipped;
        return r;
    }

    Series& operator+=(const Series& b) { return *this = *this + b; }
    Series& operator-=(const Series& b) { return *this = *this - b; }
    Series& operator*=(const Series& b) { return *this = *this * b; }

    Series scaled(const C& c) const {
        if (Traits::is_zero(c)) {
            Series r(t_);
            r.top_w_ = top_w_;
            r.top_q_ = top_q_;
            r.clipped_ = clipped_;
            return r;
        }
        Series r = *this;
        for (auto& [k, x] : r.terms_) x = x * c;
        return r;
    }

    // Multiplication by c * (monomial with key m).
    Series shifted(const ExponentKey& m, const C& c) const {
        Series r(t_);
        bool clipped = clipped_;
        ExponentKey k;
        for (const auto& [kk, x] : terms_) {
            k.q = kk.q + m.q;
            k.y = kk.y + m.y;
            k.p = kk.p + m.p;
            bool ok = true;
            for (int i = 0; i < kMaxGenerators; ++i) {
                int e = kk.nilp[i] + m.nilp[i];
                if (e > 255) ok = false;
                k.nilp[i] = static_cast<std::uint8_t>(std::min(e, 255));
            }
            if (!ok) continue;
            auto st = window_status(*t_, k);
            if (st == WindowStatus::Below) clipped = true;
            if (st != WindowStatus::Inside) continue;
            r.terms_.emplace_back(k, x * c);
        }
        // shifting preserves order
        r.top_w_ = std::min(t_->top_weight(), top_w_ + t_->weight(m.q, m.y));
        r.top_q_ = std::min(t_->qmax(), top_q_ + m.q);
        r.clipped_ = clipped;
        return r;
    }

    // Drop every term outside the given window; the window must share D and
    // generators, and must fit inside this series' exact region when
    // require_exact is set.
    Series restricted(TruncationPtr nt, bool require_exact = false) const {
        const Truncation& n = *nt;
        if (n.D != t_->D || n.gens.size() != t_->gens.size())
            throw ParameterError("restriction needs the same denominator and generators");
        for (size_t i = 0; i < n.gens.size(); ++i)
            if (n.gens[i].name != t_->gens[i].name || n.gens[i].degree != t_->gens[i].degree)
                throw ParameterError("restriction needs the same generators");
        // New exact weight: all new-window keys with new weight <= tw must have
        // old weight <= top_w_.  Old - new weight = (s_old - s_new) * q.
        const long long ds = static_cast<long long>(t_->slope) - n.slope;
        const long long worst = std::max(ds * n.q_floor, ds * n.qmax());
        long long tw = top_w_ - worst;
        long long tq = top_q_;
        // Keys of the new window that the old window never held are unknown.
        bool contained = n.qmax() <= t_->qmax() && n.q_floor >= t_->q_floor && n.P <= t_->P && n.nmax <= t_->nmax;
        for (long long A : {n.q_floor, n.qmax()}) {
            if (n.y_hi(A) > t_->y_hi(A) && A <= t_->qmax()) contained = false;
            if (n.y_lo(A) < t_->y_lo(A)) contained = false;
        }
        if (!contained) {
            // Only the overlap is meaningful: cap by the old window's top edge.
            tw = std::min(tw, t_->top_weight() - worst);
            tq = std::min(tq, t_->qmax());
        }
        Series r(nt);
        for (const auto& [k, c] : terms_)
            if (window_status(n, k) == WindowStatus::Inside) r.terms_.emplace_back(k, c);
        r.top_w_ = std::min(n.top_weight(), tw);
        r.top_q_ = std::min(n.qmax(), tq);
        r.clipped_ = clipped_ || !contained;
        if (require_exact && !r.fully_exact())
            throw PrecisionError("series is not known exactly on the requested window " + n.describe() +
                                 " (exact weight " + std::to_string(r.top_w_) + " of " +
                                 std::to_string(n.top_weight()) + ")");
        return r;
    }

    // Same terms over a truncation with identical window but different
    // generators (terms using dropped generators must be absent).
    Series rebased(TruncationPtr nt, const std::vector<int>& gen_map) const {
        Series r(nt);
        for (const auto& [k, c] : terms_) {
            ExponentKey nk = k;
            nk.nilp = {};
            for (size_t i = 0; i < t_->gens.size(); ++i) {
                if (k.nilp[i] == 0) continue;
                if (gen_map[i] < 0) throw ParameterError("rebasing drops a generator that is in use");
                nk.nilp[gen_map[i]] = k.nilp[i];
            }
            auto st = window_status(*nt, nk);
            if (st == WindowStatus::Below) r.clipped_ = true;
            if (st == WindowStatus::Inside) r.terms_.emplace_back(nk, c);
        }
        std::sort(r.terms_.begin(), r.terms_.end(), [](const Term& x, const Term& y) { return x.first < y.first; });
        const long long ds = static_cast<long long>(t_->slope) - nt->slope;
        const long long worst = std::max(ds * nt->q_floor, ds * nt->qmax());
        r.top_w_ = std::min(nt->top_weight(), top_w_ - worst);
        r.top_q_ = std::min(nt->qmax(), top_q_);
        r.clipped_ = r.clipped_ || clipped_;
        return r;
    }

    template <class F>
    auto map_coeffs(F f, TruncationPtr nt = nullptr) const {
        using D2 = decltype(f(std::declval<const C&>()));
        Series<D2> r(nt ? nt : t_);
        std::vector<typename Series<D2>::Term> out;
        out.reserve(terms_.size());
        for (const auto& [k, c] : terms_) out.emplace_back(k, f(c));
        r = Series<D2>::from_terms(r.trunc_ptr(), std::move(out));
        r.set_exactness(top_w_, top_q_, clipped_);
        return r;
    }

    // Canonical text form, one term per line.
    std::string str() const {
        std::ostringstream os;
        if (terms_.empty()) return "0\n";
        for (const auto& [k, c] : terms_) {
            os << Traits::str(c);
            std::string m = format_key(*t_, k);
            if (!m.empty()) os << " * " << m;
            os << "\n";
        }
        return os.str();
    }

    // Direct access for builders that guarantee sorted, in-window, nonzero terms.
    std::vector<Term>& raw_terms() { return terms_; }

private:
    template <class>
    friend class Series;

    static void check_same(const Series& a, const Series& b) {
        if (a.t_ != b.t_ && !(*a.t_ == *b.t_))
            throw ParameterError("mismatched truncation parameters: " + a.t_->describe() + " vs " + b.t_->describe());
    }

    void push_checked(const ExponentKey& k, const C& c) {
        if (Traits::is_zero(c)) return;
        auto st = window_status(*t_, k);
        if (st == WindowStatus::Below) clipped_ = true;
        if (st != WindowStatus::Inside) return;
        if (!terms_.empty() && !(terms_.back().first < k)) {
            // keep sorted
            auto it = std::lower_bound(terms_.begin(), terms_.end(), k,
                                       [](const Term& a, const ExponentKey& b) { return a.first < b; });
            if (it != terms_.end() && it->first == k) {
                it->second += c;
                if (Traits::is_zero(it->second)) terms_.erase(it);
                return;
            }
            terms_.insert(it, Term(k, c));
            return;
        }
        terms_.emplace_back(k, c);
    }

    TruncationPtr t_;
    std::vector<Term> terms_;
    long long top_w_;
    long long top_q_;
    bool clipped_ = false;
};

using QSeries = Series<CycRational>;
using NSeries = Series<std::complex<double>>;

// ---- graded recursions: inverse, exp, log ------------------------------------

namespace detail {

// Linear grading phi(k) = Kq*q + y + Kp*p + Kn*nilp_degree with phi >= 1 on
// every key of `support`; throws InversionError when none exists.
struct Grading {
    long long Kq = 0, Kp = 0, Kn = 0;
    const Truncation* t = nullptr;
    long long operator()(const ExponentKey& k) const {
        return Kq * k.q + k.y + Kp * k.p + Kn * nilp_degree(*t, k);
    }
};

template <class C>
Grading positive_grading(const Series<C>& r, const char* what) {
    const Truncation& t = r.trunc();
    Grading g;
    g.t = &t;
    for (const auto& [k, c] : r.terms()) {
        if (k.p == 0 && nilp_degree(t, k) == 0) {
            if (k.q < 0 || (k.q == 0 && k.y <= 0))
                throw InversionError(std::string(what) + ": term " + format_key(t, k) +
                                     " is not small; the expansion would not terminate");
            if (k.q > 0) g.Kq = std::max(g.Kq, (-static_cast<long long>(k.y)) / k.q + 1);
        }
    }
    for (const auto& [k, c] : r.terms()) {
        int nd = nilp_degree(t, k);
        if (k.p == 0 && nd > 0) {
            long long base = g.Kq * k.q + k.y;
            if (base < 1) g.Kn = std::max(g.Kn, (1 - base + nd - 1) / nd);
        }
    }
    g.Kn = std::max<long long>(g.Kn, 1);
    for (const auto& [k, c] : r.terms()) {
        if (k.p > 0) {
            long long base = g.Kq * k.q + k.y + g.Kn * nilp_degree(t, k);
            if (base < 1) g.Kp = std::max(g.Kp, (1 - base + k.p - 1) / k.p);
        }
    }
    g.Kp = std::max<long long>(g.Kp, 1);
    return g;
}

enum class Recursion { Inverse, Exp, Log };

// Computes 1/(1+r), exp(r) or log(1+r) for r without constant term.
template <class C>
Series<C> graded_recursion(const Series<C>& r, Recursion mode) {
    using Traits = CoeffTraits<C>;
    using Term = typename Series<C>::Term;
    const Truncation& t = r.trunc();
    const char* what = mode == Recursion::Inverse ? "invert" : (mode == Recursion::Exp ? "exp" : "log");
    Grading phi = positive_grading(r, what);

    std::vector<std::pair<ExponentKey, C>> rs;
    std::vector<long long> rphi;
    for (const auto& [k, c] : r.terms()) {
        rs.emplace_back(k, c);
        rphi.push_back(phi(k));
    }
    long long min_rphi = std::numeric_limits<long long>::max();
    for (long long v : rphi) min_rphi = std::min(min_rphi, v);

    std::unordered_map<ExponentKey, C, ExponentKeyHash> val;
    std::unordered_set<ExponentKey, ExponentKeyHash> queued;
    using QE = std::pair<long long, ExponentKey>;
    std::priority_queue<QE, std::vector<QE>, std::greater<QE>> pq;
    bool clipped = r.clipped_low();
    long long max_phi = 0;

    auto push = [&](const ExponentKey& k) {
        if (queued.count(k)) return;
        auto st = window_status(t, k);
        if (st == WindowStatus::Below) {
            clipped = true;
            return;
        }
        if (st != WindowStatus::Inside) return;
        queued.insert(k);
        pq.emplace(phi(k), k);
    };
    auto successors = [&](const ExponentKey& k) {
        ExponentKey n;
        for (const auto& [s, c] : rs) {
            if (static_cast<long long>(k.q) + s.q > t.qmax()) continue;
            if (!add_keys(t, k, s, n)) continue;
            push(n);
        }
    };

    ExponentKey zero{};
    if (mode != Recursion::Log) {
        val.emplace(zero, Traits::one());
        queued.insert(zero);
        successors(zero);
    } else {
        for (const auto& [s, c] : rs) push(s);
    }

    ExponentKey d;
    while (!pq.empty()) {
        auto [ph, k] = pq.top();
        pq.pop();
        max_phi = std::max(max_phi, ph);
        C acc = Traits::zero();
        bool any = false;
        for (size_t i = 0; i < rs.size(); ++i) {
            const ExponentKey& s = rs[i].first;
            // d = k - s
            d.q = k.q - s.q;
            d.y = k.y - s.y;
            d.p = k.p - s.p;
            bool ok = d.p >= 0;
            for (int g = 0; g < kMaxGenerators && ok; ++g) {
                int e = static_cast<int>(k.nilp[g]) - s.nilp[g];
                if (e < 0) ok = false;
                d.nilp[g] = static_cast<std::uint8_t>(e < 0 ? 0 : e);
            }
            if (!ok) continue;
            auto it = val.find(d);
            if (it == val.end()) continue;
            const C& s_c = rs[i].second;
            switch (mode) {
                case Recursion::Inverse: acc += s_c * it->second; break;
                case Recursion::Exp: acc += s_c * it->second * Traits::from_rational(Rational(rphi[i])); break;
                case Recursion::Log: acc += s_c * it->second * Traits::from_rational(Rational(phi(d))); break;
            }
            any = true;
        }
        C v = Traits::zero();
        switch (mode) {
            case Recursion::Inverse: v = -acc; break;
            case Recursion::Exp: v = acc * Traits::from_rational(Rational(1, ph)); break;
            case Recursion::Log: {
                v = r.get(k);
                if (any) v = v - acc * Traits::from_rational(Rational(1, ph));
                break;
            }
        }
        if (Traits::is_zero(v)) continue;
        val.emplace(k, v);
        successors(k);
    }

    std::vector<Term> out;
    out.reserve(val.size());
    for (auto& [k, c] : val)
        if (!Traits::is_zero(c)) out.emplace_back(k, std::move(c));
    Series<C> res = Series<C>::from_terms(r.trunc_ptr(), std::move(out));
    // Each term is a product of at most kmax factors of r.
    long long kmax = min_rphi > 0 ? std::max<long long>(1, max_phi / min_rphi) : 1;
    long long mw = std::min<long long>(0, r.min_weight());
    long long mq = std::min<long long>(0, r.min_q());
    if (r.empty()) {
        mw = 0;
        mq = 0;
    }
    res.set_exactness(r.exact_w() + (kmax - 1) * mw, r.exact_q() + (kmax - 1) * mq, clipped);
    return res;
}

}  // namespace detail

// Leading term under the (q, y, p, nilpotent) order.
template <class C>
const typename Series<C>::Term& leading_term(const Series<C>& a) {
    if (a.empty()) throw InversionError("series is zero");
    return a.terms().front();
}

template <class C>
Series<C> invert(const Series<C>& a) {
    using Traits = CoeffTraits<C>;
    const auto& [m, c] = leading_term(a);
    if (m.p != 0 || std::any_of(m.nilp.begin(), m.nilp.end(), [](std::uint8_t e) { return e != 0; }))
        throw InversionError("leading term " + format_key(a.trunc(), m) + " is not a unit");
    C cinv = Traits::inv(c);
    ExponentKey minv{};
    minv.q = -m.q;
    minv.y = -m.y;
    // a = c m (1 + r)
    Series<C> unit = a.shifted(minv, cinv);
    Series<C> r = unit - Series<C>::one(a.trunc_ptr());
    Series<C> inv = detail::graded_recursion(r, detail::Recursion::Inverse);
    return inv.shifted(minv, cinv);
}

template <class C>
Series<C> exp(const Series<C>& a) {
    if (!CoeffTraits<C>::is_zero(a.get(ExponentKey{})))
        throw InversionError("exp needs a series without constant term");
    return detail::graded_recursion(a, detail::Recursion::Exp);
}

template <class C>
Series<C> log(const Series<C>& a) {
    C c0 = a.get(ExponentKey{});
    if (!(c0 == CoeffTraits<C>::one())) throw InversionError("log needs constant term one");
    Series<C> r = a - Series<C>::one(a.trunc_ptr());
    return detail::graded_recursion(r, detail::Recursion::Log);
}

template <class C>
Series<C> pow_int(const Series<C>& a, int n) {
    if (n < 0) return pow_int(invert(a), -n);
    Series<C> r = Series<C>::one(a.trunc_ptr());
    Series<C> b = a;
    while (n > 0) {
        if (n & 1) r = r * b;
        n >>= 1;
        if (n) b = b * b;
    }
    return r;
}

// q -> q^r, y -> y^s with positive rational r, s.
template <class C>
Series<C> substitute_scale(const Series<C>& a, const Rational& r, const Rational& s) {
    if (r.sign() <= 0 || s.sign() <= 0) throw ParameterError("substitute_scale needs positive exponents");
    const Truncation& t = a.trunc();
    std::vector<typename Series<C>::Term> out;
    for (const auto& [k, c] : a.terms()) {
        Rational nq = r * Rational(k.q), ny = s * Rational(k.y);
        if (!nq.is_integer() || !ny.is_integer())
            throw ParameterError("substitution leaves the exponent lattice 1/" + std::to_string(t.D));
        ExponentKey nk = k;
        nk.q = static_cast<std::int32_t>(nq.num());
        nk.y = static_cast<std::int32_t>(ny.num());
        out.emplace_back(nk, c);
    }
    Series<C> res = Series<C>::from_terms(a.trunc_ptr(), std::move(out));
    // New key (rA, sB) is exact when the old (A, B) was: old weight
    // B + s0 A = B'/s + s0 A'/r and new weight B' + s0 A'.
    const Rational s0(t.slope);
    Rational worst(std::numeric_limits<int>::min());
    for (long long A : {t.q_floor, t.qmax()}) {
        Rational v = Rational(A) * (s0 / r - s0 / s);
        if (v > worst) worst = v;
    }
    Rational tw = s * (Rational(a.exact_w()) - worst);
    Rational tq = r * Rational(a.exact_q());
    res.set_exactness(std::min<long long>(tw.floor(), t.top_weight()), std::min<long long>(tq.floor(), t.qmax()),
                      res.clipped_low() || a.clipped_low());
    return res;
}

// j * sum over terms whose q exponent is a multiple of j, with q^(m) -> q^(m/j).
template <class C>
Series<C> comb_select(const Series<C>& a, int j) {
    if (j < 1) throw ParameterError("comb_select needs j >= 1");
    if (j == 1) return a;
    const Truncation& t = a.trunc();
    std::vector<typename Series<C>::Term> out;
    const long long unit = static_cast<long long>(j) * t.D;
    C jj = CoeffTraits<C>::from_rational(Rational(j));
    for (const auto& [k, c] : a.terms()) {
        if (k.q % unit != 0) continue;
        ExponentKey nk = k;
        nk.q = static_cast<std::int32_t>(k.q / j);
        out.emplace_back(nk, c * jj);
    }
    Series<C> res = Series<C>::from_terms(a.trunc_ptr(), std::move(out));
    // old weight = B + s j A' = new weight + s (j - 1) A'
    long long worst = static_cast<long long>(t.slope) * (j - 1) * std::max<long long>(0, t.qmax());
    res.set_exactness(a.exact_w() - worst, a.exact_q() / j, a.clipped_low());
    return res;
}

// Evaluates at q = e^{2 pi i tau}, y = e^{2 pi i z}; nilpotents and p must be absent.
std::complex<double> evaluate(const QSeries& s, std::complex<double> z, std::complex<double> tau,
                              std::complex<double> p = 0.0);

}  // namespace ell

#endif
