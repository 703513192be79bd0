#include "ell/series.hpp"

#include <cmath>
#include <numbers>

namespace ell {

std::string Truncation::describe() const {
    std::ostringstream os;
    os << "(D=" << D << ", Q=" << Q << ", W=" << W;
    if (slope) os << ", slope=" << slope;
    os << ", P=" << P << ", nmax=" << nmax << ", q_floor=" << format_exponent(q_floor, D);
    if (!gens.empty()) {
        os << ", gens=";
        for (size_t i = 0; i < gens.size(); ++i) os << (i ? "," : "") << gens[i].name << ":" << gens[i].degree;
    }
    os << ")";
    return os.str();
}

std::string format_exponent(long long units, int D) { return Rational(units, D).str(); }

std::string format_key(const Truncation& t, const ExponentKey& k) {
    std::string s;
    auto add = [&](const std::string& part) {
        if (!s.empty()) s += " ";
        s += part;
    };
    if (k.q != 0) add("q^(" + format_exponent(k.q, t.D) + ")");
    if (k.y != 0) add("y^(" + format_exponent(k.y, t.D) + ")");
    if (k.p != 0) add("p^" + std::to_string(k.p));
    for (size_t i = 0; i < t.gens.size(); ++i)
        if (k.nilp[i] != 0) add(t.gens[i].name + "^" + std::to_string(k.nilp[i]));
    return s;
}

std::complex<double> evaluate(const QSeries& s, std::complex<double> z, std::complex<double> tau,
                              std::complex<double> p) {
    using namespace std::complex_literals;
    const double two_pi = 2 * std::numbers::pi;
    const int D = s.trunc().D;
    std::complex<double> total = 0;
    for (const auto& [k, c] : s.terms()) {
        for (auto e : k.nilp)
            if (e) throw DomainError("numeric evaluation of a series with nilpotent generators");
        std::complex<double> m = std::exp(1i * two_pi * (tau * (double(k.q) / D) + z * (double(k.y) / D)));
        if (k.p) m *= std::pow(p, k.p);
        total += c.to_complex() * m;
    }
    return total;
}

}  // namespace ell
