// Exact rationals: int64 fast path, GMP fallback on overflow.
#ifndef ELL_RATIONAL_HPP
#define ELL_RATIONAL_HPP

#include <gmpxx.h>

#include <cstdint>
#include <iosfwd>
#include <memory>
#include <string>
#include <type_traits>

namespace ell {

class Rational {
public:
    Rational() = default;
    template <class T, std::enable_if_t<std::is_integral_v<T>, int> = 0>
    Rational(T n) : n_(static_cast<long long>(n)), d_(1) {}  // NOLINT(google-explicit-constructor)
    Rational(long long n, long long d);
    explicit Rational(const mpq_class& q);

    Rational(const Rational& o) : n_(o.n_), d_(o.d_) {
        if (o.big_) big_ = std::make_unique<mpq_class>(*o.big_);
    }
    Rational(Rational&&) noexcept = default;
    Rational& operator=(const Rational& o) {
        if (this != &o) {
            n_ = o.n_;
            d_ = o.d_;
            big_ = o.big_ ? std::make_unique<mpq_class>(*o.big_) : nullptr;
        }
        return *this;
    }
    Rational& operator=(Rational&&) noexcept = default;

    // Accepts "a", "-a", "a/b".
    static Rational parse(const std::string& s);

    bool is_zero() const { return !big_ && n_ == 0; }
    bool is_one() const { return !big_ && n_ == 1 && d_ == 1; }
    bool is_integer() const;
    bool is_small() const { return !big_; }
    int sign() const;

    mpq_class to_mpq() const;
    double to_double() const;
    std::string str() const;

    // Numerator/denominator; throw if they do not fit in int64.
    long long num() const;
    long long den() const;

    long long floor() const;
    Rational frac() const { return *this - Rational(floor()); }

    Rational operator-() const;
    Rational inv() const;

    friend Rational operator+(const Rational& a, const Rational& b);
    friend Rational operator-(const Rational& a, const Rational& b);
    friend Rational operator*(const Rational& a, const Rational& b);
    friend Rational operator/(const Rational& a, const Rational& b);
    Rational& operator+=(const Rational& b) { return *this = *this + b; }
    Rational& operator-=(const Rational& b) { return *this = *this - b; }
    Rational& operator*=(const Rational& b) { return *this = *this * b; }
    Rational& operator/=(const Rational& b) { return *this = *this / b; }

    friend bool operator==(const Rational& a, const Rational& b);
    friend bool operator!=(const Rational& a, const Rational& b) { return !(a == b); }
    friend bool operator<(const Rational& a, const Rational& b);
    friend bool operator>(const Rational& a, const Rational& b) { return b < a; }
    friend bool operator<=(const Rational& a, const Rational& b) { return !(b < a); }
    friend bool operator>=(const Rational& a, const Rational& b) { return !(a < b); }

private:
    static Rational from_i128(__int128 n, __int128 d);
    void normalize_big();

    long long n_ = 0;
    long long d_ = 1;                 // > 0, gcd(n_, d_) == 1 in the small form
    std::unique_ptr<mpq_class> big_;  // set when the value does not fit
};

std::ostream& operator<<(std::ostream& os, const Rational& r);

long long gcd_ll(long long a, long long b);
long long lcm_ll(long long a, long long b);

}  // namespace ell

#endif
