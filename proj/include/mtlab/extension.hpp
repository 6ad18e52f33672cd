#pragma once
#include <functional>
#include <vector>

#include "mtlab/wavepacket.hpp"

namespace mtlab {

// g sampled at curve nodes; weights already include arclength |Gamma'|
struct CurveDensity {
    CurveSpec curve;
    std::vector<double> xi, w;
    std::vector<cplx> g;
    double step = 0.0;  // largest gap between consecutive parameter nodes

    std::size_t size() const { return xi.size(); }
    double norm2() const;  // integral of |g|^2 d lambda
    cplx integral() const;
    CurveDensity modulated(const Vec& x0) const;  // g e^{-2 pi i x0.Gamma}
    CurveDensity scaled(cplx s) const;
};

using DensityFn = std::function<cplx(double xi)>;

// Gauss-Legendre panels of q nodes
CurveDensity make_density(const CurveSpec& curve, const DensityFn& g, int panels, int q = 16);
// panels resolving the oscillation of e^{2 pi i x.Gamma} on B_R
CurveDensity density_for_scale(const CurveSpec& curve, const DensityFn& g, double R);

// g = sum_v a_v 1_{S_v}, S_v disjoint arcs of arclength 1/R starting at arclength offsets
CurveDensity arc_density(const CurveSpec& curve, double R, const std::vector<cplx>& a,
                         std::vector<double> offsets = {});

double max_extend_step(const CurveSpec& curve, double R);
// panels refined until the direct-sum step rule holds at scale R
CurveDensity density_for_direct_sum(const CurveSpec& curve, const DensityFn& g, double R);

// Eg on a unit-spacing grid (separable GEMM); QuadratureError when under-resolved
Field extend(const CurveDensity& g, const Grid& grid, double R);
std::vector<cplx> extend_at(const CurveDensity& g, const std::vector<Vec>& xs, double R);

struct Localized {
    Field f;
    double min_on_ball = 0.0;  // min Phi_1 on B_R
};
double phi1(const Vec& x, double R);
double phi1_min_on_ball(int n);
Localized localize(const Field& Eg, double R);

// integral over B_R of |Eg|^2 through the closed-form ball kernel
double ball_energy(const CurveDensity& g, double R);
// same integral by lattice sum over B_R (slow; cross-check)
double ball_energy_lattice(const CurveDensity& g, double R);
double agmon_hormander_ratio(const CurveDensity& g, double R);

// Fourier transform of the indicator of B_R at |zeta| = rho
double ball_kernel(int n, double R, double rho);

}  // namespace mtlab
