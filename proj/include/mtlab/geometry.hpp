#pragma once
#include <string>
#include <vector>

#include "mtlab/curve.hpp"

namespace mtlab {

// Parallelepiped c + A[-1/2,1/2]^n, slab |u.(x-c)| <= h, or ball |x-c| <= rho.
struct Region {
    enum class Kind { Parallelepiped, Slab, Ball };
    Kind kind = Kind::Parallelepiped;
    Vec center;
    Mat A, Ainv;
    Vec normal;
    double half_width = 0.0;
    double radius = 0.0;

    static Region parallelepiped(Vec center, Mat A);
    static Region cube(Vec center, double side);
    static Region slab(Vec point, Vec normal, double half_width);
    static Region ball(Vec center, double radius);

    int dim() const { return int(center.size()); }
    // membership in the copy dilated by `dilate` about the center
    bool contains(const Vec& x, double dilate = 1.0) const;
    bool contains_all(const std::vector<Vec>& pts, double dilate = 1.0) const;
    double volume() const;  // infinite for slabs
    std::vector<Vec> corners() const;
    Region dilated(double s) const;
    Region translated(const Vec& v) const;
};

struct AnisotropicBox {
    int index = 0;
    double xi = 0.0;
    double delta = 0.0;
    Vec center;    // Gamma(xi)
    Mat L;         // columns delta^j Gamma^(j)(xi) / j!
    Mat T, Tinv;   // T = L^t
    double detT = 0.0;  // |det T|
    FrenetFrame frame;

    Vec eta(const Vec& zeta) const;  // A^{-1}(zeta)
    Vec zeta(const Vec& eta) const { return center + L * eta; }
    // zeta in A[-s, s]^n
    bool contains(const Vec& zeta, double s = 1.0) const;
};

AnisotropicBox make_box(const CurveSpec& curve, double xi, double delta, int index = 0);

struct ScaleInfo {
    double requested = 0.0;
    double R = 0.0;  // snapped to 2^{n r}
    int r = 0;
    double delta = 0.0;
    std::string warning;
};

ScaleInfo normalize_scale(int n, double R);

struct BoxSet {
    CurveSpec curve;
    ScaleInfo scale;
    std::vector<AnisotropicBox> boxes;

    int n() const { return curve.n(); }
    double R() const { return scale.R; }
    std::size_t size() const { return boxes.size(); }
    const AnisotropicBox& operator[](std::size_t i) const { return boxes[i]; }
    // indices of all boxes containing zeta (A[-1,1]^n)
    std::vector<int> containing(const Vec& zeta) const;
};

BoxSet curvature_boxes(const CurveSpec& curve, double R);

// T = T_theta^{-1}(m + s + [-1/2,1/2]^n); s is a tiling shift (0 for the canonical lattice)
struct Plank {
    int theta = 0;
    IVec m;
    Vec shift;
};

Plank make_plank(const AnisotropicBox& box, const IVec& m);
Region plank_region(const AnisotropicBox& box, const Plank& p);
IVec plank_index(const AnisotropicBox& box, const Vec& x, const Vec& shift = Vec());

enum class SliceKind { L, P };

std::vector<Region> derived_family(const AnisotropicBox& box, const Plank& p, SliceKind kind,
                                   double epsilon, double R);
Region hyperplane_slab(const AnisotropicBox& box, const Region& slab_L);

long incidence_count(const Region& Q, const std::vector<Region>& planks, double dilate);

enum class FamilyKind { T, L, P, S };
FamilyKind family_from_string(const std::string& s);
std::string to_string(FamilyKind k);

// Sampled family: one direction per (refined) box, 2^n half-shifted tilings for T/L/P.
// Member regions of direction d are {x : M_d x - s - m in [-1/2,1/2]^n}.
struct GeomFamily {
    FamilyKind kind = FamilyKind::T;
    double R = 0.0;
    double epsilon = 0.0;  // members are R^eps-dilates when > 0
    std::vector<AnisotropicBox> dirs;
    std::vector<Mat> M;         // tiling matrices (T/L/P)
    std::vector<Vec> normals;   // unit tangents (S)
    std::vector<Vec> shifts;    // {0,1/2}^n

    Region member(std::size_t dir, const IVec& m, const Vec& shift) const;
};

GeomFamily make_family(const CurveSpec& curve, double R, FamilyKind kind, int refine = 1,
                       double epsilon = 0.0);

}  // namespace mtlab
