#include "mtlab/exponents.hpp"

#include "mtlab/errors.hpp"

namespace mtlab {

std::string to_string(const Rational& q) {
    if (q.denominator() == 1) return std::to_string(q.numerator());
    return std::to_string(q.numerator()) + "/" + std::to_string(q.denominator());
}

ExponentTable::ExponentTable(int n_) : n(n_) {
    if (n < 2) throw ConfigError("exponent table needs n >= 2");
    Rational N(n), one(1), two(2);
    p = N * (N + 1);
    r = p / (p - two);
    a_MT = (N - 3) / two + two / N - two / (N * N * (N + 1));
    a_tube = (N - 2) + two / (N * (N + 1));
    e_T = -(N + 1) / (two * r);
    e_L = e_T + one / (N * r);
    e_S = e_L;
    e_P = -one / r;
    thm54_i = -(N + 1) / two + two / N - two / (N * (N + 1));
    thm54_ii = -one / r;
    thm54_iii = -(N + 1) / (two * r);
    ell_L = one / N - two / (N * N * (N + 1));
    ell_P = two / (N * (N + 1));
    ell_S = one / N;
}

Rational ExponentTable::rhs_power(const std::string& id) const {
    if (id == "cor31a") return e_T;
    if (id == "thm22") return Rational(0);
    if (id == "cor33") return e_L;
    if (id == "cor34") return e_P;
    if (id == "cor35") return e_S;
    if (id == "thm11") return a_MT;
    if (id == "thm16") return a_tube;
    if (id == "thm41") return Rational(n - 1) + e_S;
    throw ConfigError("unknown inequality id '" + id + "'");
}

}  // namespace mtlab
