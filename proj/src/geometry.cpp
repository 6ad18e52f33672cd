#include "mtlab/geometry.hpp"

#include <boost/math/special_functions/factorials.hpp>
#include <cmath>
#include <fmt/format.h>

#include "mtlab/errors.hpp"

namespace mtlab {

namespace {
constexpr double kTol = 1e-12;
}

Region Region::parallelepiped(Vec center, Mat A) {
    Region g;
    g.kind = Kind::Parallelepiped;
    g.center = std::move(center);
    g.Ainv = A.inverse();
    g.A = std::move(A);
    return g;
}

Region Region::cube(Vec center, double side) {
    int n = int(center.size());
    return parallelepiped(std::move(center), side * Mat::Identity(n, n));
}

Region Region::slab(Vec point, Vec normal, double half_width) {
    Region g;
    g.kind = Kind::Slab;
    g.center = std::move(point);
    g.normal = normal.normalized();
    g.half_width = half_width;
    return g;
}

Region Region::ball(Vec center, double radius) {
    Region g;
    g.kind = Kind::Ball;
    g.center = std::move(center);
    g.radius = radius;
    return g;
}

bool Region::contains(const Vec& x, double dilate) const {
    switch (kind) {
        case Kind::Parallelepiped:
            return (Ainv * (x - center)).cwiseAbs().maxCoeff() <= 0.5 * dilate + kTol;
        case Kind::Slab:
            return std::abs(normal.dot(x - center)) <= dilate * half_width + kTol;
        case Kind::Ball:
            return (x - center).norm() <= dilate * radius + kTol;
    }
    return false;
}

bool Region::contains_all(const std::vector<Vec>& pts, double dilate) const {
    for (const auto& p : pts)
        if (!contains(p, dilate)) return false;
    return true;
}

double Region::volume() const {
    switch (kind) {
        case Kind::Parallelepiped: return std::abs(A.determinant());
        case Kind::Slab: return INFINITY;
        case Kind::Ball: {
            int n = dim();
            return std::pow(kPi, 0.5 * n) / std::tgamma(0.5 * n + 1) * std::pow(radius, n);
        }
    }
    return 0.0;
}

std::vector<Vec> Region::corners() const {
    if (kind != Kind::Parallelepiped) throw DomainError("corners of a non-parallelepiped region");
    int n = dim();
    std::vector<Vec> out;
    for (int mask = 0; mask < (1 << n); ++mask) {
        Vec y(n);
        for (int i = 0; i < n; ++i) y[i] = (mask >> i & 1) ? 0.5 : -0.5;
        out.push_back(center + A * y);
    }
    return out;
}

Region Region::dilated(double s) const {
    Region g = *this;
    if (kind == Kind::Parallelepiped) {
        g.A *= s;
        g.Ainv /= s;
    } else if (kind == Kind::Slab) {
        g.half_width *= s;
    } else {
        g.radius *= s;
    }
    return g;
}

Region Region::translated(const Vec& v) const {
    Region g = *this;
    g.center += v;
    return g;
}

Vec AnisotropicBox::eta(const Vec& zeta) const { return T.transpose().inverse() * (zeta - center); }

bool AnisotropicBox::contains(const Vec& zeta, double s) const {
    return eta(zeta).cwiseAbs().maxCoeff() <= s + kTol;
}

AnisotropicBox make_box(const CurveSpec& curve, double xi, double delta, int index) {
    int n = curve.n();
    AnisotropicBox b;
    b.index = index;
    b.xi = xi;
    b.delta = delta;
    b.center = curve.point(xi);
    b.L.resize(n, n);
    for (int j = 1; j <= n; ++j)
        b.L.col(j - 1) = std::pow(delta, j) / boost::math::factorial<double>(j) * curve.deriv(xi, j);
    b.T = b.L.transpose();
    b.Tinv = b.T.inverse();
    b.detT = std::abs(b.T.determinant());
    b.frame = frenet_frame(curve, xi);
    return b;
}

ScaleInfo normalize_scale(int n, double R) {
    if (!(R >= 1.0) || !std::isfinite(R)) throw ConfigError(fmt::format("invalid scale R = {}", R));
    ScaleInfo s;
    s.requested = R;
    s.r = std::max(1, int(std::ceil(std::log2(R) / n - 1e-12)));
    s.R = std::ldexp(1.0, n * s.r);
    s.delta = std::ldexp(1.0, -s.r);
    if (s.R != R) s.warning = fmt::format("R = {} is not in 2^(nN); rounded up to {}", R, s.R);
    return s;
}

std::vector<int> BoxSet::containing(const Vec& zeta) const {
    std::vector<int> out;
    for (const auto& b : boxes)
        if (b.contains(zeta)) out.push_back(b.index);
    return out;
}

BoxSet curvature_boxes(const CurveSpec& curve, double R) {
    BoxSet set{curve, normalize_scale(curve.n(), R), {}};
    int count = 1 << set.scale.r;
    double len = curve.b() - curve.a();
    for (int i = 0; i < count; ++i)
        set.boxes.push_back(make_box(curve, curve.a() + (i + 0.5) * set.scale.delta * len,
                                     set.scale.delta * len, i));
    return set;
}

Plank make_plank(const AnisotropicBox& box, const IVec& m) {
    return {box.index, m, Vec::Zero(m.size())};
}

Region plank_region(const AnisotropicBox& box, const Plank& p) {
    Vec s = p.shift.size() ? p.shift : Vec::Zero(p.m.size());
    return Region::parallelepiped(box.Tinv * (p.m.cast<double>() + s), box.Tinv);
}

IVec plank_index(const AnisotropicBox& box, const Vec& x, const Vec& shift) {
    Vec y = box.T * x;
    if (shift.size()) y -= shift;
    IVec m(y.size());
    // half-open cells [-1/2,1/2): ties go to the lower index
    for (int i = 0; i < y.size(); ++i) m[i] = int(std::floor(y[i] + 0.5));
    return m;
}

namespace {

std::vector<Region> slice(const Region& parent, const std::vector<int>& counts) {
    int n = parent.dim();
    std::vector<Region> out;
    std::vector<int> idx(n, 0);
    Mat D = Mat::Zero(n, n);
    for (int j = 0; j < n; ++j) D(j, j) = 1.0 / counts[j];
    Mat A = parent.A * D;
    for (;;) {
        Vec y(n);
        for (int j = 0; j < n; ++j) y[j] = -0.5 + (idx[j] + 0.5) / counts[j];
        out.push_back(Region::parallelepiped(parent.center + parent.A * y, A));
        int j = n - 1;
        while (j >= 0 && ++idx[j] == counts[j]) idx[j--] = 0;
        if (j < 0) break;
    }
    return out;
}

}  // namespace

std::vector<Region> derived_family(const AnisotropicBox& box, const Plank& p, SliceKind kind,
                                   double epsilon, double R) {
    int n = int(p.m.size());
    Region T = plank_region(box, p);
    int k = int(std::lround(1.0 / box.delta));
    std::vector<int> lc(n, 1);
    lc[0] = k;
    auto Ls = slice(T, lc);
    if (kind == SliceKind::L) return Ls;
    double rho = std::pow(R, epsilon);
    std::vector<int> pc(n);
    for (int j = 1; j <= n; ++j) {
        double base = (j == 1 || j == n) ? 1.0 : std::pow(box.delta, -j);
        pc[j - 1] = int(std::ceil(rho * base - 1e-9));
    }
    std::vector<Region> out;
    for (const auto& L : Ls) {
        auto tubes = slice(L.dilated(rho), pc);
        out.insert(out.end(), tubes.begin(), tubes.end());
    }
    return out;
}

Region hyperplane_slab(const AnisotropicBox& box, const Region& L) {
    return Region::slab(L.center, box.frame.e.col(0), 1.0);
}

long incidence_count(const Region& Q, const std::vector<Region>& planks, double dilate) {
    auto pts = Q.corners();
    long c = 0;
    for (const auto& T : planks)
        if (T.contains_all(pts, dilate)) ++c;
    return c;
}

FamilyKind family_from_string(const std::string& s) {
    if (s == "T") return FamilyKind::T;
    if (s == "L") return FamilyKind::L;
    if (s == "P") return FamilyKind::P;
    if (s == "S") return FamilyKind::S;
    throw ConfigError("unknown family '" + s + "'");
}

std::string to_string(FamilyKind k) {
    switch (k) {
        case FamilyKind::T: return "T";
        case FamilyKind::L: return "L";
        case FamilyKind::P: return "P";
        case FamilyKind::S: return "S";
    }
    return "?";
}

Region GeomFamily::member(std::size_t d, const IVec& m, const Vec& shift) const {
    double rho = std::pow(R, epsilon);
    if (kind == FamilyKind::S) {
        // m[0] indexes the offset along the normal in unit steps
        return Region::slab(normals[d] * (m[0] + (shift.size() ? shift[0] : 0.0)), normals[d], rho);
    }
    Mat Minv = M[d].inverse();
    return Region::parallelepiped(Minv * (m.cast<double>() + shift), rho * Minv);
}

GeomFamily make_family(const CurveSpec& curve, double R, FamilyKind kind, int refine,
                       double epsilon) {
    int n = curve.n();
    ScaleInfo sc = normalize_scale(n, R);
    GeomFamily f;
    f.kind = kind;
    f.R = sc.R;
    f.epsilon = epsilon;
    int count = (1 << sc.r) * std::max(1, refine);
    double step = (curve.b() - curve.a()) / count;
    double k = 1.0 / sc.delta;
    for (int i = 0; i < count; ++i) {
        auto b = make_box(curve, curve.a() + (i + 0.5) * step, sc.delta, i);
        Mat D = Mat::Identity(n, n);
        if (kind == FamilyKind::L) D(0, 0) = k;
        if (kind == FamilyKind::P)
            for (int j = 1; j < n; ++j) D(j - 1, j - 1) = std::pow(k, j);
        f.M.push_back(D * b.T);
        f.normals.push_back(b.frame.e.col(0));
        f.dirs.push_back(std::move(b));
    }
    for (int mask = 0; mask < (1 << n); ++mask) {
        Vec s(n);
        for (int j = 0; j < n; ++j) s[j] = (mask >> j & 1) ? 0.5 : 0.0;
        f.shifts.push_back(s);
    }
    return f;
}

}  // namespace mtlab
