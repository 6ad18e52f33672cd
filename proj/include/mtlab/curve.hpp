#pragma once
#include <functional>
#include <string>

#include "mtlab/core.hpp"

namespace mtlab {

// Parametrized curve with derivatives up to order n+1.
class CurveSpec {
public:
    using Oracle = std::function<Vec(double xi, int order)>;

    CurveSpec(std::string name, int n, Oracle d, double wellcurved_floor, double a = 0.0,
              double b = 1.0);

    static CurveSpec moment(int n);
    // (xi, sin xi, cos xi - 1), n = 3
    static CurveSpec helix();
    static CurveSpec by_name(const std::string& name, int n);

    int n() const { return n_; }
    const std::string& name() const { return name_; }
    double a() const { return a_; }
    double b() const { return b_; }
    double floor() const { return floor_; }

    Vec point(double xi) const { return d_(xi, 0); }
    Vec deriv(double xi, int j) const { return d_(xi, j); }
    // columns Gamma', ..., Gamma^(n)
    Mat jet(double xi) const;
    double wedge(double xi) const;
    double speed(double xi) const { return deriv(xi, 1).norm(); }
    // sup over sampled parameters of |Gamma'| and of max_j |Gamma^(j)|
    double max_speed() const { return max_speed_; }
    double cn1_norm() const { return cn1_; }

    double arclength(double s, double t) const;
    // parameter t with arclength(s, t) = len
    double advance(double s, double len) const;
    double total_length() const { return arclength(a_, b_); }

private:
    std::string name_;
    int n_;
    Oracle d_;
    double floor_, a_, b_;
    double max_speed_ = 0.0, cn1_ = 0.0;
};

struct FrenetFrame {
    double xi;
    Mat e;  // columns e_1..e_n
};

FrenetFrame frenet_frame(const CurveSpec& curve, double t);

}  // namespace mtlab
