// Elements of Q(zeta_N), stored as coefficient vectors modulo the N-th
// cyclotomic polynomial.
#ifndef ELL_CYCLOTOMIC_HPP
#define ELL_CYCLOTOMIC_HPP

#include "ell/rational.hpp"

#include <boost/container/small_vector.hpp>

#include <complex>
#include <string>
#include <vector>

namespace ell {

// Coefficients of the N-th cyclotomic polynomial, lowest degree first.
const std::vector<long long>& cyclotomic_polynomial(int N);
int euler_phi(int N);

class CycRational {
public:
    using Coeffs = boost::container::small_vector<Rational, 4>;

    CycRational() : N_(1), c_(1) {}
    template <class T, std::enable_if_t<std::is_integral_v<T>, int> = 0>
    CycRational(T n) : N_(1), c_{Rational(n)} {}  // NOLINT(google-explicit-constructor)
    CycRational(const Rational& r) : N_(1), c_{r} {}  // NOLINT(google-explicit-constructor)
    CycRational(int N, Coeffs c);

    // zeta_N^k
    static CycRational zeta(int N, long long k);
    // exp(2 pi i r); the denominator of r must divide N.
    static CycRational root_of_unity(const Rational& r, int N);

    int conductor() const { return N_; }
    const Coeffs& coeffs() const { return c_; }

    bool is_zero() const;
    bool is_one() const;
    bool is_rational() const;
    // Value as a rational; throws if not rational.
    Rational rational() const;

    // Re-express over Q(zeta_L); L must be a multiple of the conductor.
    CycRational lift(int L) const;

    std::complex<double> to_complex() const;
    std::string str() const;

    CycRational operator-() const;
    CycRational inv() const;

    friend CycRational operator+(const CycRational& a, const CycRational& b);
    friend CycRational operator-(const CycRational& a, const CycRational& b);
    friend CycRational operator*(const CycRational& a, const CycRational& b);
    friend CycRational operator/(const CycRational& a, const CycRational& b) { return a * b.inv(); }
    CycRational& operator+=(const CycRational& b) { return *this = *this + b; }
    CycRational& operator-=(const CycRational& b) { return *this = *this - b; }
    CycRational& operator*=(const CycRational& b) { return *this = *this * b; }

    friend bool operator==(const CycRational& a, const CycRational& b);
    friend bool operator!=(const CycRational& a, const CycRational& b) { return !(a == b); }

private:
    int N_;
    Coeffs c_;
};

}  // namespace ell

#endif
