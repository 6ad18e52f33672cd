#pragma once
#include <boost/rational.hpp>
#include <string>

namespace mtlab {

using Rational = boost::rational<long long>;

std::string to_string(const Rational& q);
inline double to_double(const Rational& q) { return boost::rational_cast<double>(q); }

struct ExponentTable {
    int n;
    Rational p, r;
    Rational a_MT, a_tube;
    Rational e_T, e_L, e_S, e_P;
    Rational thm54_i, thm54_ii, thm54_iii;  // lower bounds, (i) as printed
    Rational ell_L, ell_P, ell_S;           // working-scale exponents l = R^{...}

    explicit ExponentTable(int n);
    // R-power carried by the RHS of inequality `id`
    Rational rhs_power(const std::string& id) const;
};

}  // namespace mtlab
