#include "ell/cyclotomic.hpp"

#include "ell/errors.hpp"

#include <cmath>
#include <map>
#include <memory>
#include <mutex>
#include <numbers>
#include <sstream>

namespace ell {

namespace {

struct Context {
    int N = 1;
    int phi = 1;
    std::vector<long long> poly;                // monic, degree phi
    std::vector<std::vector<long long>> red;    // x^k mod poly for k < 2*phi - 1
};

std::vector<long long> poly_divide_exact(std::vector<long long> num, const std::vector<long long>& den) {
    // den monic
    int dn = static_cast<int>(num.size()) - 1;
    int dd = static_cast<int>(den.size()) - 1;
    std::vector<long long> q(dn - dd + 1, 0);
    for (int k = dn - dd; k >= 0; --k) {
        long long c = num[k + dd];
        q[k] = c;
        for (int i = 0; i <= dd; ++i) num[k + i] -= c * den[i];
    }
    return q;
}

const Context& context(int N) {
    static std::mutex mu;
    static std::map<int, std::unique_ptr<Context>> cache;
    if (N < 1) throw DomainError("cyclotomic conductor must be positive");
    std::lock_guard<std::mutex> lock(mu);
    auto it = cache.find(N);
    if (it != cache.end()) return *it->second;
    // Build every divisor's context first, smallest first.
    for (int d = 1; d <= N; ++d) {
        if (N % d != 0 || cache.count(d)) continue;
        auto ctx = std::make_unique<Context>();
        ctx->N = d;
        std::vector<long long> p(d + 1, 0);
        p[0] = -1;
        p[d] = 1;
        for (int e = 1; e < d; ++e)
            if (d % e == 0) p = poly_divide_exact(p, cache.at(e)->poly);
        ctx->poly = p;
        int phi = static_cast<int>(p.size()) - 1;
        ctx->phi = phi;
        int len = std::max(d, 2 * phi - 1);
        ctx->red.assign(len, std::vector<long long>(phi, 0));
        std::vector<long long> cur(phi, 0);
        cur[0] = 1;
        for (int k = 0; k < len; ++k) {
            ctx->red[k] = cur;
            long long top = cur[phi - 1];
            for (int i = phi - 1; i > 0; --i) cur[i] = cur[i - 1] - top * p[i];
            cur[0] = -top * p[0];
        }
        cache.emplace(d, std::move(ctx));
    }
    return *cache.at(N);
}

const Context& ensure_context(int N) { return context(N); }

int lcm_int(int a, int b) { return static_cast<int>(lcm_ll(a, b)); }

}  // namespace

const std::vector<long long>& cyclotomic_polynomial(int N) { return ensure_context(N).poly; }

int euler_phi(int N) { return ensure_context(N).phi; }

CycRational::CycRational(int N, Coeffs c) : N_(N) {
    const auto& ctx = ensure_context(N);
    c_.assign(ctx.phi, Rational(0));
    for (size_t k = 0; k < c.size(); ++k) {
        if (c[k].is_zero()) continue;
        const auto& red = ctx.red[k % static_cast<size_t>(N)];
        for (int i = 0; i < ctx.phi; ++i)
            if (red[i] != 0) c_[i] += c[k] * Rational(red[i]);
    }
}

CycRational CycRational::zeta(int N, long long k) {
    const auto& ctx = ensure_context(N);
    k %= N;
    if (k < 0) k += N;
    Coeffs c(ctx.phi);
    for (int i = 0; i < ctx.phi; ++i) c[i] = Rational(ctx.red[k][i]);
    CycRational r;
    r.N_ = N;
    r.c_ = std::move(c);
    return r;
}

CycRational CycRational::root_of_unity(const Rational& r, int N) {
    Rational f = r.frac();
    Rational scaled = f * Rational(N);
    if (!scaled.is_integer())
        throw ParameterError("root of unity exp(2 pi i " + r.str() + ") not in Q(zeta_" + std::to_string(N) + ")");
    return zeta(N, scaled.num());
}

bool CycRational::is_zero() const {
    for (const auto& x : c_)
        if (!x.is_zero()) return false;
    return true;
}

bool CycRational::is_one() const {
    if (!c_[0].is_one()) return false;
    for (size_t k = 1; k < c_.size(); ++k)
        if (!c_[k].is_zero()) return false;
    return true;
}

bool CycRational::is_rational() const {
    for (size_t k = 1; k < c_.size(); ++k)
        if (!c_[k].is_zero()) return false;
    return true;
}

Rational CycRational::rational() const {
    if (!is_rational()) throw DomainError("cyclotomic element is not rational: " + str());
    return c_[0];
}

CycRational CycRational::lift(int L) const {
    if (L == N_) return *this;
    if (L % N_ != 0) throw ParameterError("cannot lift Q(zeta_" + std::to_string(N_) + ") to conductor " + std::to_string(L));
    const auto& ctx = ensure_context(L);
    if (is_rational()) {
        Coeffs c(ctx.phi);
        c[0] = c_[0];
        return CycRational(L, c);
    }
    int step = L / N_;
    CycRational out(L, Coeffs(ctx.phi));
    for (size_t k = 0; k < c_.size(); ++k) {
        if (c_[k].is_zero()) continue;
        out = out + zeta(L, static_cast<long long>(k) * step) * CycRational(c_[k]);
    }
    return out;
}

std::complex<double> CycRational::to_complex() const {
    std::complex<double> s = 0;
    for (size_t k = 0; k < c_.size(); ++k) {
        if (c_[k].is_zero()) continue;
        double ang = 2 * std::numbers::pi * static_cast<double>(k) / N_;
        s += c_[k].to_double() * std::complex<double>(std::cos(ang), std::sin(ang));
    }
    return s;
}

std::string CycRational::str() const {
    if (is_rational()) return c_[0].str();
    std::ostringstream os;
    os << "(";
    bool first = true;
    for (size_t k = 0; k < c_.size(); ++k) {
        if (c_[k].is_zero()) continue;
        if (!first) os << (c_[k].sign() < 0 ? " - " : " + ");
        Rational a = (!first && c_[k].sign() < 0) ? -c_[k] : c_[k];
        if (k == 0) {
            os << a.str();
        } else {
            if (!a.is_one()) os << a.str() << "*";
            os << "E(" << N_ << ")";
            if (k > 1) os << "^" << k;
        }
        first = false;
    }
    os << ")";
    return os.str();
}

CycRational CycRational::operator-() const {
    CycRational r = *this;
    for (auto& x : r.c_) x = -x;
    return r;
}

CycRational operator+(const CycRational& a, const CycRational& b) {
    if (a.N_ != b.N_) {
        if (b.is_rational() && b.c_.size() == 1) {
            CycRational r = a;
            r.c_[0] += b.c_[0];
            return r;
        }
        if (a.is_rational() && a.c_.size() == 1) {
            CycRational r = b;
            r.c_[0] += a.c_[0];
            return r;
        }
        int L = lcm_int(a.N_, b.N_);
        return a.lift(L) + b.lift(L);
    }
    CycRational r = a;
    for (size_t k = 0; k < r.c_.size(); ++k)
        if (!b.c_[k].is_zero()) r.c_[k] += b.c_[k];
    return r;
}

CycRational operator-(const CycRational& a, const CycRational& b) { return a + (-b); }

CycRational operator*(const CycRational& a, const CycRational& b) {
    if (a.c_.size() == 1 && b.c_.size() == 1) {
        CycRational r;
        r.N_ = std::max(a.N_, b.N_);  // conductors 1 and 2 only
        r.c_[0] = a.c_[0] * b.c_[0];
        return r;
    }
    if (a.N_ != b.N_) {
        if (b.is_rational()) {
            CycRational r = a;
            if (!b.c_[0].is_one())
                for (auto& x : r.c_) x *= b.c_[0];
            return r;
        }
        if (a.is_rational()) {
            CycRational r = b;
            if (!a.c_[0].is_one())
                for (auto& x : r.c_) x *= a.c_[0];
            return r;
        }
        int L = lcm_int(a.N_, b.N_);
        return a.lift(L) * b.lift(L);
    }
    const auto& ctx = ensure_context(a.N_);
    int phi = ctx.phi;
    CycRational::Coeffs conv(2 * phi - 1);
    for (int i = 0; i < phi; ++i) {
        if (a.c_[i].is_zero()) continue;
        for (int j = 0; j < phi; ++j) {
            if (b.c_[j].is_zero()) continue;
            conv[i + j] += a.c_[i] * b.c_[j];
        }
    }
    CycRational::Coeffs out(phi);
    for (int k = 0; k < 2 * phi - 1; ++k) {
        if (conv[k].is_zero()) continue;
        if (k < phi) {
            out[k] += conv[k];
            continue;
        }
        const auto& red = ctx.red[k];
        for (int i = 0; i < phi; ++i)
            if (red[i] != 0) out[i] += conv[k] * Rational(red[i]);
    }
    CycRational r;
    r.N_ = a.N_;
    r.c_ = std::move(out);
    return r;
}

CycRational CycRational::inv() const {
    if (is_zero()) throw DomainError("inverse of zero in Q(zeta_" + std::to_string(N_) + ")");
    if (is_rational()) {
        CycRational r = *this;
        r.c_[0] = c_[0].inv();
        return r;
    }
    const auto& ctx = ensure_context(N_);
    int phi = ctx.phi;
    // Columns: this * zeta^j. Solve M b = e_0.
    std::vector<std::vector<Rational>> m(phi, std::vector<Rational>(phi + 1));
    for (int j = 0; j < phi; ++j) {
        CycRational col = *this * zeta(N_, j);
        for (int i = 0; i < phi; ++i) m[i][j] = col.c_[i];
    }
    m[0][phi] = Rational(1);
    for (int col = 0; col < phi; ++col) {
        int piv = -1;
        for (int r = col; r < phi; ++r)
            if (!m[r][col].is_zero()) {
                piv = r;
                break;
            }
        if (piv < 0) throw DomainError("singular multiplication matrix in cyclotomic inverse");
        std::swap(m[piv], m[col]);
        Rational p = m[col][col].inv();
        for (int c = col; c <= phi; ++c) m[col][c] *= p;
        for (int r = 0; r < phi; ++r) {
            if (r == col || m[r][col].is_zero()) continue;
            Rational f = m[r][col];
            for (int c = col; c <= phi; ++c) m[r][c] -= f * m[col][c];
        }
    }
    Coeffs b(phi);
    for (int i = 0; i < phi; ++i) b[i] = m[i][phi];
    return CycRational(N_, b);
}

bool operator==(const CycRational& a, const CycRational& b) {
    if (a.N_ == b.N_) {
        for (size_t k = 0; k < a.c_.size(); ++k)
            if (a.c_[k] != b.c_[k]) return false;
        return true;
    }
    return (a - b).is_zero();
}

}  // namespace ell
