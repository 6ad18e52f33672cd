#pragma once
#include <boost/random/mersenne_twister.hpp>
#include <boost/random/normal_distribution.hpp>
#include <boost/random/uniform_int_distribution.hpp>
#include <boost/random/uniform_real_distribution.hpp>
#include <cstdint>

#include "mtlab/core.hpp"

namespace mtlab {

class Rng {
public:
    explicit Rng(std::uint64_t seed) : eng_(seed) {}
    double uniform(double a = 0.0, double b = 1.0) {
        return boost::random::uniform_real_distribution<double>(a, b)(eng_);
    }
    long integer(long lo, long hi) {
        return boost::random::uniform_int_distribution<long>(lo, hi)(eng_);
    }
    double normal() { return boost::random::normal_distribution<double>()(eng_); }
    cplx cnormal() { return {normal() * std::sqrt(0.5), normal() * std::sqrt(0.5)}; }
    cplx unimodular() { return expi(uniform(0.0, kTwoPi)); }
    // uniform point in the ball of radius r centred at 0
    Vec in_ball(int n, double r) {
        Vec v(n);
        for (;;) {
            for (int i = 0; i < n; ++i) v[i] = uniform(-1.0, 1.0);
            if (v.squaredNorm() <= 1.0) return v * r;
        }
    }
    boost::random::mt19937_64& engine() { return eng_; }

private:
    boost::random::mt19937_64 eng_;
};

}  // namespace mtlab
