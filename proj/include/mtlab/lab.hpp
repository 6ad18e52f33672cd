#pragma once
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "mtlab/exponents.hpp"
#include "mtlab/extension.hpp"
#include "mtlab/sleeve.hpp"
#include "mtlab/weights.hpp"

namespace mtlab {

inline const std::vector<std::string>& inequality_ids() {
    static const std::vector<std::string> ids{"cor31a", "cor33", "cor34", "cor35", "thm22", "thm41", "thm11", "thm16"};
    return ids;
}
bool is_extension_id(const std::string& id);

struct InequalityInstance {
    std::string id;
    std::optional<SleeveField> f;    // packet-side ids
    std::optional<CurveDensity> g;   // extension-side ids
    Weight w{2};
    double R = 0.0;
    double r = 0.0;  // 0 means the table value p/(p-2)
    double eps = 0.05;
    double K = 10.0;
    std::string label;  // generator recipe, kept for reporting

    int n() const;
    double r_value() const;
};

double weighted_energy(const SleeveField& f, const Weight& w);
double weighted_energy(const Field& f, const Weight& w);
// sum over supp w inside B_R of |Eg|^2 w
double weighted_extension_energy(const CurveDensity& g, const Weight& w, double R);
// Eg at lattice points, sharing phase factors along rows
std::vector<cplx> extend_lattice(const CurveDensity& g, const std::vector<IVec>& pts, double R);

double lhs_functional(const InequalityInstance& inst);
double rhs_functional(const InequalityInstance& inst);

struct Evaluation {
    double lhs = 0.0, rhs = 0.0, ratio = 0.0;
};
Evaluation evaluate(const InequalityInstance& inst);

struct SlopeFit {
    double slope = 0.0, intercept = 0.0, residual = 0.0;
    bool degenerate = false;
};
// OLS of log2 y against log2 x; needs >= 3 distinct x
SlopeFit fit_loglog(const std::vector<double>& x, const std::vector<double>& y);

struct SweepRow {
    std::string id;
    int n = 0;
    double R = 0.0, lhs = 0.0, rhs = 0.0, ratio = 0.0;
    std::string label;
};

struct SweepResult {
    std::string id;
    int n = 0;
    std::vector<SweepRow> rows;
    SlopeFit fit;       // all rows
    SlopeFit fit_max;   // per-R maximum ratio
    double max_ratio = 0.0;
    double max_recipe_slope = 0.0;  // worst slope of a recipe followed across R
};

using InstanceGenerator = std::function<std::vector<InequalityInstance>(double R)>;
SweepResult exponent_sweep(const std::string& id, int n, const InstanceGenerator& gen,
                           const std::vector<double>& Rs);

// random corpus used by the inequality monitors
std::vector<InequalityInstance> random_instances(const std::string& id, const CurveSpec& curve, double R,
                                                 int count, std::uint64_t seed);

enum class IncidenceMode { Contain, Intersect };

struct Stratum {
    long M = 0;
    long cubes = 0;
    double lhs = 0.0, rhs = 0.0;
};

struct RefinedReport {
    double lhs = 0.0, rhs = 0.0, ratio = 0.0;
    long M = 0;
    std::vector<Stratum> strata;
};

struct RefinedOptions {
    double p = 0.0;  // 0 means n(n+1)
    double eps = 0.05;
    double quad_spacing = 0.5;
    IncidenceMode mode = IncidenceMode::Contain;
};

RefinedReport refined_decoupling_check(const SleeveField& packets, const Region& ball,
                                       const RefinedOptions& opt = {});

struct LatticeWindow {
    double radius = 0.0;
    double spacing = 0.5;
};
double bdg_decoupling_check(const SleeveField& f, double p, const LatticeWindow& win);
double square_function_monitor(const SleeveField& f, double p, const LatticeWindow& win);

bool regions_intersect(const Region& a, const Region& b);

}  // namespace mtlab
