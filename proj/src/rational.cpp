#include "ell/rational.hpp"

#include "ell/errors.hpp"

#include <limits>
#include <ostream>

namespace ell {

namespace {

using i128 = __int128;
using u128 = unsigned __int128;

constexpr long long kMax = std::numeric_limits<long long>::max();

u128 gcd_u128(u128 a, u128 b) {
    while (b != 0) {
        u128 t = a % b;
        a = b;
        b = t;
    }
    return a;
}

u128 abs128(i128 v) { return v < 0 ? static_cast<u128>(-v) : static_cast<u128>(v); }

bool fits(i128 v) { return v <= kMax && v >= -kMax; }

mpz_class to_mpz(i128 v) {
    bool neg = v < 0;
    u128 u = abs128(v);
    mpz_class hi(static_cast<unsigned long>(static_cast<std::uint64_t>(u >> 64)));
    mpz_class lo(static_cast<unsigned long>(static_cast<std::uint64_t>(u)));
    mpz_class r = (hi << 64) + lo;
    return neg ? mpz_class(-r) : r;
}

}  // namespace

long long gcd_ll(long long a, long long b) {
    a = a < 0 ? -a : a;
    b = b < 0 ? -b : b;
    while (b != 0) {
        long long t = a % b;
        a = b;
        b = t;
    }
    return a;
}

long long lcm_ll(long long a, long long b) {
    if (a == 0 || b == 0) return 0;
    return (a / gcd_ll(a, b)) * b;
}

Rational::Rational(long long n, long long d) {
    if (d == 0) throw DomainError("rational with zero denominator");
    *this = from_i128(n, d);
}

Rational::Rational(const mpq_class& q) {
    big_ = std::make_unique<mpq_class>(q);
    big_->canonicalize();
    normalize_big();
}

Rational Rational::from_i128(i128 n, i128 d) {
    if (d < 0) {
        n = -n;
        d = -d;
    }
    u128 g = gcd_u128(abs128(n), static_cast<u128>(d));
    if (g > 1) {
        n /= static_cast<i128>(g);
        d /= static_cast<i128>(g);
    }
    Rational r;
    if (fits(n) && fits(d)) {
        r.n_ = static_cast<long long>(n);
        r.d_ = static_cast<long long>(d);
    } else {
        r.big_ = std::make_unique<mpq_class>(to_mpz(n), to_mpz(d));
        r.big_->canonicalize();
    }
    return r;
}

void Rational::normalize_big() {
    if (!big_) return;
    const mpz_class& n = big_->get_num();
    const mpz_class& d = big_->get_den();
    if (n.fits_slong_p() && d.fits_slong_p() && n.get_si() != std::numeric_limits<long>::min()) {
        n_ = n.get_si();
        d_ = d.get_si();
        big_.reset();
    }
}

Rational Rational::parse(const std::string& s) {
    auto slash = s.find('/');
    try {
        if (slash == std::string::npos) {
            mpq_class q(mpz_class(s, 10));
            return Rational(q);
        }
        mpz_class n(s.substr(0, slash), 10);
        mpz_class d(s.substr(slash + 1), 10);
        if (d == 0) throw ParseError("rational with zero denominator: " + s);
        return Rational(mpq_class(n, d));
    } catch (const std::invalid_argument&) {
        throw ParseError("not a rational number: '" + s + "'");
    }
}

bool Rational::is_integer() const { return big_ ? big_->get_den() == 1 : d_ == 1; }

int Rational::sign() const {
    if (big_) return sgn(*big_);
    return (n_ > 0) - (n_ < 0);
}

mpq_class Rational::to_mpq() const {
    if (big_) return *big_;
    mpq_class q(mpz_class(static_cast<long>(n_)), mpz_class(static_cast<long>(d_)));
    return q;
}

double Rational::to_double() const {
    if (big_) return big_->get_d();
    return static_cast<double>(n_) / static_cast<double>(d_);
}

std::string Rational::str() const {
    if (big_) return big_->get_str();
    if (d_ == 1) return std::to_string(n_);
    return std::to_string(n_) + "/" + std::to_string(d_);
}

long long Rational::num() const {
    if (big_) throw DomainError("numerator does not fit in 64 bits");
    return n_;
}

long long Rational::den() const {
    if (big_) throw DomainError("denominator does not fit in 64 bits");
    return d_;
}

long long Rational::floor() const {
    if (big_) {
        mpz_class f;
        mpz_fdiv_q(f.get_mpz_t(), big_->get_num_mpz_t(), big_->get_den_mpz_t());
        if (!f.fits_slong_p()) throw DomainError("floor does not fit in 64 bits");
        return f.get_si();
    }
    long long q = n_ / d_;
    if ((n_ % d_ != 0) && (n_ < 0)) --q;
    return q;
}

Rational Rational::operator-() const {
    if (big_) return Rational(mpq_class(-*big_));
    Rational r;
    r.n_ = -n_;
    r.d_ = d_;
    return r;
}

Rational Rational::inv() const {
    if (is_zero()) throw DomainError("division by zero");
    if (big_) return Rational(mpq_class(1 / *big_));
    return from_i128(d_, n_);
}

Rational operator+(const Rational& a, const Rational& b) {
    if (!a.big_ && !b.big_) {
        if (a.d_ == 1 && b.d_ == 1) {
            long long s;
            if (!__builtin_add_overflow(a.n_, b.n_, &s) && s != std::numeric_limits<long long>::min()) {
                Rational r;
                r.n_ = s;
                return r;
            }
        }
        return Rational::from_i128(static_cast<i128>(a.n_) * b.d_ + static_cast<i128>(b.n_) * a.d_,
                                   static_cast<i128>(a.d_) * b.d_);
    }
    return Rational(mpq_class(a.to_mpq() + b.to_mpq()));
}

Rational operator-(const Rational& a, const Rational& b) { return a + (-b); }

Rational operator*(const Rational& a, const Rational& b) {
    if (!a.big_ && !b.big_) {
        if (a.d_ == 1 && b.d_ == 1) {
            long long p;
            if (!__builtin_mul_overflow(a.n_, b.n_, &p) && p != std::numeric_limits<long long>::min()) {
                Rational r;
                r.n_ = p;
                return r;
            }
        }
        long long g1 = gcd_ll(a.n_, b.d_);
        long long g2 = gcd_ll(b.n_, a.d_);
        if (g1 == 0) g1 = 1;
        if (g2 == 0) g2 = 1;
        i128 n = static_cast<i128>(a.n_ / g1) * (b.n_ / g2);
        i128 d = static_cast<i128>(a.d_ / g2) * (b.d_ / g1);
        if (fits(n) && fits(d)) {
            Rational r;
            r.n_ = static_cast<long long>(n);
            r.d_ = static_cast<long long>(d);
            if (r.n_ == 0) r.d_ = 1;
            return r;
        }
        return Rational::from_i128(n, d);
    }
    return Rational(mpq_class(a.to_mpq() * b.to_mpq()));
}

Rational operator/(const Rational& a, const Rational& b) { return a * b.inv(); }

bool operator==(const Rational& a, const Rational& b) {
    if (!a.big_ && !b.big_) return a.n_ == b.n_ && a.d_ == b.d_;
    return a.to_mpq() == b.to_mpq();
}

bool operator<(const Rational& a, const Rational& b) {
    if (!a.big_ && !b.big_) return static_cast<i128>(a.n_) * b.d_ < static_cast<i128>(b.n_) * a.d_;
    return a.to_mpq() < b.to_mpq();
}

std::ostream& operator<<(std::ostream& os, const Rational& r) { return os << r.str(); }

}  // namespace ell
