#pragma once
#include <functional>
#include <string>
#include <unordered_map>
#include <vector>

#include "mtlab/lab.hpp"

namespace mtlab {

InequalityInstance bump_weight_instance(int n, double R, std::uint64_t seed = 1);
InequalityInstance bush_instance(int n, double R);
InequalityInstance single_packet_instance(int n, double R, std::uint64_t seed = 1);
// g = sum_v a_v 1_{S_v} on consecutive arcs of arclength 1/R, w = 1 on B_R
InequalityInstance arc_sum_instance(int n, double R, const std::vector<cplx>& a);

// Dyadic hierarchy tau = [i 2^-k, (i+1) 2^-k), k = 0..levels.
struct AxiomaticStructure {
    CurveSpec curve = CurveSpec::moment(2);
    double R = 0.0;
    int levels = 0;  // finest level, 2^-levels ~ R^{-1/n}
    std::function<cplx(int level, int index, const Vec& x)> F;
    double support_radius = 0.0;  // the fields are concentrated on this ball

    int count(int level) const { return 1 << level; }
    double xi(int level, int index) const;  // parameter of the interval centre
};

// genuine wave-packet hierarchy: F_tau = sum of the components whose box lies in tau
AxiomaticStructure packet_structure(const SleeveField& f, double support_radius);

struct AxiomReport {
    double C0 = 0.0, C1 = 0.0, C2 = 0.0;
    double overlap = 0.0;  // worst overlap count among the DA2 test bodies used
    long da2_bodies = 0, da2_skipped = 0;
    bool da0 = false, da1 = false, da2 = false;
    bool pass() const { return da0 && da1 && da2; }
};

struct AxiomOptions {
    int points = 1500;
    int translates = 100;
    int body_samples = 3000;
    int planks = 10;
    std::uint64_t seed = 11;
};

AxiomReport axiom_check(const AxiomaticStructure& s, const AxiomOptions& opt = {});

enum class MultibushVariant { L, P, S };
MultibushVariant variant_from_string(const std::string& s);
std::string to_string(MultibushVariant v);

// one tile of the half-shifted tilings at box scale 1/l
struct Tube {
    int dir = 0;
    int shift = 0;  // bit mask of half shifts
    IVec m;
    cplx c{1.0, 0.0};
};

struct MultibushPlan {
    MultibushVariant variant = MultibushVariant::S;
    int n = 3;
    double R = 0.0;
    double ell = 0.0;
    double ell_exact = 0.0;
    std::uint64_t seed = 0;
    std::vector<IVec> balls;                  // accepted centres B_1..B_m in order
    std::vector<std::vector<int>> ball_tubes; // T_j as indices into tubes
    std::vector<Tube> tubes;                  // every phased tube
    std::vector<double> aligned;              // aligned prediction at each ball
    std::vector<double> achieved;             // |F| at each ball centre
    long target = 0;                          // count the greedy is compared with
};

struct MultibushOptions {
    double density = 1.0;    // N = density * R^{exponent}
    int greedy_passes = 1;
    long mc_samples = 20000;
    bool permute = false;    // re-run the alignment in a shuffled ball order
};

struct MultibushResult {
    AxiomaticStructure structure;
    Weight w{3};
    MultibushPlan plan;
    PointConfiguration points;
    double energy_w = 0.0;     // integral |F|^2 w
    double norm2 = 0.0;        // Monte Carlo ||F||^2
    double norm2_sigma = 0.0;
    double norm2_upper = 0.0;  // estimate + 3 sigma
    double sup = 0.0;          // sup over the variant's family of w
    double ratio = 0.0;        // energy_w / (sup * norm2_upper)
    double lower_exponent = 0.0;  // target exponent a for the certified ratio
    double c_ratio = 0.0;      // ratio / ((log R)^-3 R^a)
    double c_balls = 0.0;      // m / ((log R)^-2 target)
    double min_alignment = 0.0;   // min over balls of achieved / aligned
    double energy_bound = 0.0;    // norm2_upper / R^n (L,P) or / R^{(n+3)/2} (S)
};

// evaluates F = sum of phased tubes (plus unit phases on untouched tubes for L, P)
class MultibushField {
public:
    MultibushField(const CurveSpec& curve, const MultibushPlan& plan);
    cplx F_tau(int dir, const Vec& x) const;
    cplx F(const Vec& x) const;
    int directions() const { return int(boxes_.size()); }
    const AnisotropicBox& box(int d) const { return boxes_[std::size_t(d)]; }
    double tube_value(const Tube& t, const Vec& x) const;

private:
    MultibushPlan plan_;
    std::vector<AnisotropicBox> boxes_;
    std::vector<Vec> shifts_;
    std::vector<std::unordered_map<std::uint64_t, int>> index_;  // packed tile index per (dir, shift)
    bool fill_ = false;
};

MultibushResult build_multibush(MultibushVariant variant, int n, double R, std::uint64_t seed,
                                const MultibushOptions& opt = {});

double multibush_ell(MultibushVariant v, int n, double R, double* exact = nullptr);

}  // namespace mtlab
