#pragma once
#include "mtlab/core.hpp"

namespace mtlab::bump {

// beyond this |x| the tabulated phi is treated as 0
inline constexpr double kRange = 96.0;

// 1-D plateau: 1 on [-1/4,1/4], 0 outside (-1/2,1/2), C-infinity
double hat(double t);
// phi = inverse Fourier transform of hat (real, even); table + cubic Hermite
double phi(double x);
double dphi(double x);
// direct quadrature, used to build and to test the table
double phi_exact(double x);
double dphi_exact(double x);

// integral of rho(t)^2 cos(2 pi d t); rho = hat, or hat(2 .) when narrow
double gram(double d, bool narrow = false);
// integral over R of |phi|^p
double phi_lp(double p);

// tensor forms
double Phi(const Vec& y);
double Phi_hat(const Vec& eta);
inline double Phi_l2sq(int n) { return std::pow(gram(0.0), n); }
inline double Phi_lp(int n, double p) { return std::pow(phi_lp(p), n); }

}  // namespace mtlab::bump
