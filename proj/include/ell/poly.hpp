// Polynomials in graded commuting generators with rational coefficients.
#ifndef ELL_POLY_HPP
#define ELL_POLY_HPP

#include "ell/series.hpp"

#include <map>
#include <string>
#include <vector>

namespace ell {

using Mono = std::array<std::uint8_t, kMaxGenerators>;

int mono_degree(const Mono& m, const std::vector<Generator>& gens);
std::string mono_str(const Mono& m, const std::vector<Generator>& gens);

class Poly {
public:
    Poly() = default;
    static Poly constant(const Rational& c);
    static Poly generator(int i);

    const std::map<Mono, Rational>& terms() const { return t_; }
    bool is_zero() const { return t_.empty(); }
    Rational coeff(const Mono& m) const;
    Rational constant_term() const { return coeff(Mono{}); }
    void add_term(const Mono& m, const Rational& c);

    friend Poly operator+(const Poly& a, const Poly& b);
    friend Poly operator-(const Poly& a, const Poly& b);
    friend bool operator==(const Poly& a, const Poly& b) { return a.t_ == b.t_; }
    Poly operator-() const;
    Poly scaled(const Rational& c) const;

    // Product dropping every monomial of degree > maxdeg (maxdeg < 0: keep all).
    static Poly mul(const Poly& a, const Poly& b, const std::vector<Generator>& gens, int maxdeg);
    Poly pow(int e, const std::vector<Generator>& gens, int maxdeg) const;
    Poly degree_part(const std::vector<Generator>& gens, int d) const;
    int max_degree(const std::vector<Generator>& gens) const;
    // Renumber generators: new index of old generator i is map[i].
    Poly remapped(const std::vector<int>& map) const;

    std::string str(const std::vector<Generator>& gens) const;

private:
    std::map<Mono, Rational> t_;
};

// Parses sums of terms like "1 + 3h + 3/2 h^2", "(1+h)^3", "h1*h2", "-e".
Poly parse_poly(const std::string& text, const std::vector<Generator>& gens, int maxdeg = -1);
// Parses a single monomial such as "h^2", "h1 h2", "1".
Mono parse_mono(const std::string& text, const std::vector<Generator>& gens);

// Polynomial as a series constant in q, y.
QSeries poly_to_series(const Poly& p, const TruncationPtr& t, const std::vector<int>& gen_map = {});

}  // namespace ell

#endif
