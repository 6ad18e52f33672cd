#pragma once
#include <vector>

#include "mtlab/geometry.hpp"

namespace mtlab {

// Affine lattice {origin + basis k : lo <= k <= hi}, row-major, last axis fastest.
struct Grid {
    Vec origin;
    Mat basis;
    IVec lo, hi;

    int n() const { return int(origin.size()); }
    std::vector<int> dims() const;
    std::size_t size() const;
    IVec index(std::size_t flat) const;
    Vec point(std::size_t flat) const;
    double cell_volume() const { return std::abs(basis.determinant()); }

    // unit lattice on the cube [-ceil(R), ceil(R)]^n
    static Grid unit_cube(int n, double R);
    // theta-adapted lattice T^{-1}(Z^n / s) with |y|_inf <= half
    static Grid adapted(const AnisotropicBox& box, double half, int s = 2);
};

struct Field {
    Grid grid;
    std::vector<cplx> v;

    explicit Field(Grid g) : grid(std::move(g)), v(grid.size(), cplx(0.0, 0.0)) {}
    double norm2() const;  // rectangle rule for the squared L2 norm
    double norm_p(double p) const;
    double max_abs() const;
};

// out = M applied along `axis` of a row-major tensor
std::vector<cplx> apply_axis(const std::vector<cplx>& in, const std::vector<int>& dims, int axis,
                             const Eigen::MatrixXcd& M);

struct WavePacketCoeff {
    int theta = 0;
    IVec m;
    cplx a;
};

struct DecomposeOptions {
    int m_radius = 8;             // beyond the energetic support
    double energy_floor = 1e-7;   // |f| below this fraction of max is not energetic
    double drop_tol = 1e-14;      // relative to max |a|
    double leak_tol = 1e-6;
    bool check_support = true;
};

struct DecomposeResult {
    std::vector<WavePacketCoeff> coeffs;
    double tail = 0.0;      // sqrt(dropped / total coefficient energy)
    double leakage = 0.0;   // energy fraction of f_hat o A outside [-1/4,1/4]^n
    double energy = 0.0;    // ||f||^2 / |det T|
};

DecomposeResult decompose(const Field& f, const AnisotropicBox& theta,
                          const DecomposeOptions& opt = {});

// sum of f_T over coefficients whose theta index is box.index
Field reconstruct(const std::vector<WavePacketCoeff>& coeffs, const BoxSet& boxes, const Grid& grid);

struct ParsevalReport {
    double lhs = 0.0, rhs = 0.0, ratio = 1.0;
};
ParsevalReport parseval_check(const Field& f, const std::vector<WavePacketCoeff>& coeffs,
                              const AnisotropicBox& theta);

// closed forms for a single packet
double packet_l2sq(const AnisotropicBox& theta, cplx a);
double packet_lp(const AnisotropicBox& theta, cplx a, double p);
cplx packet_value(const AnisotropicBox& theta, const IVec& m, cplx a, const Vec& x);

double packet_weight(const AnisotropicBox& theta, int N, const Vec& x);
inline int default_weight_order(int n) { return 2 * n + 4; }

}  // namespace mtlab
