#pragma once
#include <cstdint>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include "mtlab/geometry.hpp"

namespace mtlab {

struct IVecHash {
    std::size_t operator()(const IVec& v) const;
};
struct IVecEq {
    bool operator()(const IVec& a, const IVec& b) const { return a == b; }
};
template <class T>
using LatticeMap = std::unordered_map<IVec, T, IVecHash, IVecEq>;

// Non-negative weight on Z^n: sparse list of lattice points, or the constant c everywhere.
class Weight {
public:
    explicit Weight(int n) : n_(n) {}
    static Weight constant(int n, double c);
    static Weight indicator(const std::vector<IVec>& pts);
    // lattice points of `region` inside B_radius (centred at 0)
    static Weight indicator(const Region& region, double radius);
    // f(x) on lattice points of B_radius
    template <class F>
    static Weight sampled(int n, double radius, F f);

    int n() const { return n_; }
    bool is_constant() const { return constant_; }
    double constant_value() const { return c_; }
    const std::vector<IVec>& points() const { return pts_; }
    const std::vector<double>& values() const { return val_; }
    std::size_t size() const { return pts_.size(); }

    void add(const IVec& p, double v);
    double at(const IVec& p) const;
    double total(double r = 1.0) const;  // sum of w^r
    Weight translated(const IVec& v) const;
    Weight scaled(double s) const;

    // dense box form
    struct Dense {
        IVec lo, hi;
        std::vector<double> v;
        double at(const IVec& p) const;
    };
    Dense to_dense() const;
    static Weight from_dense(const Dense& d);

private:
    int n_;
    bool constant_ = false;
    double c_ = 0.0;
    std::vector<IVec> pts_;
    std::vector<double> val_;
    LatticeMap<std::size_t> index_;
};

std::vector<IVec> lattice_ball(int n, double radius, const Vec& center = Vec());

template <class F>
Weight Weight::sampled(int n, double radius, F f) {
    Weight w(n);
    for (const auto& p : lattice_ball(n, radius)) {
        double v = f(Vec(p.cast<double>()));
        if (v > 0.0) w.add(p, v);
    }
    return w;
}

// (sum over region of w^r)^{1/r}
double mass(const Weight& w, const Region& region, double r);

struct SupResult {
    double value = 0.0;
    int dir = -1;
    IVec m;
    Vec shift;
    std::string describe() const;
};

SupResult sup_mass(const Weight& w, const GeomFamily& family, double r);

struct MollifyResult {
    Weight w;
    double C = 1.0;  // max ratio of adjacent values on the essential support
};
MollifyResult mollify_unit(const Weight& w, int cutoff = 16);
// unit-mass kernel Phi^2 / ||Phi||^2 on the lattice
double mollifier_kernel(const IVec& z);

struct PointConfiguration {
    int n = 2;
    long N = 0, mu = 0;
    double R = 0.0;
    std::uint64_t seed = 0;
    std::vector<IVec> points;
    std::optional<double> certified_volume;  // exhaustive minimum
    std::optional<double> sampled_volume;    // minimum over sampled subsets
    long samples = 0;
    double target() const;  // (mu/N)^{(mu-1)/(mu-n)} R^n
    double constant() const;
};

double hull_volume(const std::vector<Vec>& pts);

enum class HullCheck { Exhaustive, Sampled, None };

struct CarberyOptions {
    double target_constant = 0.3;
    int budget = 400;
    long samples = 20000;
    HullCheck check = HullCheck::Exhaustive;
};

PointConfiguration carbery_points(int n, long N, long mu, double R, std::uint64_t seed,
                                  const CarberyOptions& opt = {});
// minimum hull volume over all (or sampled) mu-subsets
double min_subset_volume(const std::vector<IVec>& pts, long mu, HullCheck check, long samples,
                         std::uint64_t seed, std::vector<int>* argmin = nullptr);

Weight multibush_weight(const PointConfiguration& cfg);

}  // namespace mtlab
