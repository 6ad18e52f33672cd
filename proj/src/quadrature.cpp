#include "mtlab/quadrature.hpp"

#include <boost/math/special_functions/legendre.hpp>
#include <map>
#include <memory>
#include <mutex>

namespace mtlab {

const GaussRule& gauss_legendre(int q) {
    static std::mutex mu;
    static std::map<int, std::unique_ptr<GaussRule>> cache;
    std::lock_guard lock(mu);
    auto& slot = cache[q];
    if (!slot) {
        auto rule = std::make_unique<GaussRule>();
        auto zeros = boost::math::legendre_p_zeros<double>(q);  // non-negative zeros
        auto weight = [q](double x) {
            double d = boost::math::legendre_p_prime(q, x);
            return 2.0 / ((1.0 - x * x) * d * d);
        };
        for (auto it = zeros.rbegin(); it != zeros.rend(); ++it) {
            if (*it == 0.0) continue;
            rule->x.push_back(-*it);
            rule->w.push_back(weight(*it));
        }
        if (q % 2 == 1) {
            rule->x.push_back(0.0);
            rule->w.push_back(weight(0.0));
        }
        for (double z : zeros) {
            if (z == 0.0) continue;
            rule->x.push_back(z);
            rule->w.push_back(weight(z));
        }
        slot = std::move(rule);
    }
    return *slot;
}

void gauss_on(double a, double b, int q, std::vector<double>& x, std::vector<double>& w) {
    const auto& g = gauss_legendre(q);
    double h = 0.5 * (b - a), m = 0.5 * (a + b);
    for (std::size_t i = 0; i < g.x.size(); ++i) {
        x.push_back(m + h * g.x[i]);
        w.push_back(h * g.w[i]);
    }
}

}  // namespace mtlab
