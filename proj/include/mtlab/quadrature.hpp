#pragma once
#include <vector>

namespace mtlab {

struct GaussRule {
    std::vector<double> x;  // nodes on [-1,1]
    std::vector<double> w;
};

// cached Gauss-Legendre rule with q nodes
const GaussRule& gauss_legendre(int q);

// nodes/weights of q-point rule mapped to [a,b], appended
void gauss_on(double a, double b, int q, std::vector<double>& x, std::vector<double>& w);

}  // namespace mtlab
