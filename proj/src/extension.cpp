#include "mtlab/extension.hpp"

#include <algorithm>
#include <boost/math/special_functions/bessel.hpp>
#include <cmath>
#include <fmt/format.h>

#include "mtlab/bump.hpp"
#include "mtlab/errors.hpp"
#include "mtlab/quadrature.hpp"

namespace mtlab {

double CurveDensity::norm2() const {
    double acc = 0.0;
    for (std::size_t k = 0; k < size(); ++k) acc += w[k] * std::norm(g[k]);
    return acc;
}

cplx CurveDensity::integral() const {
    cplx acc(0.0, 0.0);
    for (std::size_t k = 0; k < size(); ++k) acc += w[k] * g[k];
    return acc;
}

CurveDensity CurveDensity::modulated(const Vec& x0) const {
    CurveDensity d = *this;
    for (std::size_t k = 0; k < size(); ++k) d.g[k] *= expi(-kTwoPi * x0.dot(curve.point(xi[k])));
    return d;
}

CurveDensity CurveDensity::scaled(cplx s) const {
    CurveDensity d = *this;
    for (auto& v : d.g) v *= s;
    return d;
}

namespace {

void finish(CurveDensity& d) {
    d.step = 0.0;
    for (std::size_t k = 1; k < d.xi.size(); ++k) d.step = std::max(d.step, d.xi[k] - d.xi[k - 1]);
    if (d.xi.size() == 1) d.step = 0.0;
}

}  // namespace

CurveDensity make_density(const CurveSpec& curve, const DensityFn& g, int panels, int q) {
    CurveDensity d{curve, {}, {}, {}, 0.0};
    std::vector<double> w;
    double h = (curve.b() - curve.a()) / panels;
    for (int p = 0; p < panels; ++p) gauss_on(curve.a() + p * h, curve.a() + (p + 1) * h, q, d.xi, w);
    for (std::size_t k = 0; k < d.xi.size(); ++k) {
        d.w.push_back(w[k] * curve.speed(d.xi[k]));
        d.g.push_back(g(d.xi[k]));
    }
    finish(d);
    return d;
}

double max_extend_step(const CurveSpec& curve, double R) {
    return 0.1 / (kTwoPi * R * curve.max_speed());
}

CurveDensity density_for_scale(const CurveSpec& curve, const DensityFn& g, double R) {
    int q = 16;
    int panels = int(std::ceil(R * curve.max_speed() * (curve.b() - curve.a()) / 2.5)) + 4;
    return make_density(curve, g, panels, q);
}

CurveDensity density_for_direct_sum(const CurveSpec& curve, const DensityFn& g, double R) {
    double lim = max_extend_step(curve, R);
    int panels = std::max(1, int(std::ceil((curve.b() - curve.a()) / (8.0 * lim))));
    for (;;) {
        CurveDensity d = make_density(curve, g, panels);
        if (d.step <= lim) return d;
        panels = int(std::ceil(panels * 1.25 * d.step / lim));
    }
}

CurveDensity arc_density(const CurveSpec& curve, double R, const std::vector<cplx>& a,
                         std::vector<double> offsets) {
    double total = curve.total_length(), len = 1.0 / R;
    std::size_t V = a.size();
    if (offsets.empty())
        for (std::size_t v = 0; v < V; ++v) offsets.push_back(v * total / std::max<std::size_t>(V, 1));
    if (offsets.size() != V) throw ConfigError("arc offsets and coefficients differ in length");
    std::vector<std::size_t> order(V);
    for (std::size_t v = 0; v < V; ++v) order[v] = v;
    std::sort(order.begin(), order.end(), [&](auto i, auto j) { return offsets[i] < offsets[j]; });
    for (std::size_t i = 0; i < V; ++i) {
        double s = offsets[order[i]];
        if (s < -1e-12 || s + len > total + 1e-12) throw ConfigError("arc leaves the curve");
        if (i + 1 < V && offsets[order[i + 1]] < s + len - 1e-12) throw ConfigError("overlapping arcs");
    }
    CurveDensity d{curve, {}, {}, {}, 0.0};
    for (std::size_t i = 0; i < V; ++i) {
        std::size_t v = order[i];
        double t0 = curve.advance(curve.a(), offsets[v]);
        double t1 = std::min(curve.b(), curve.advance(t0, len));
        int q = std::max(12, int(std::ceil(2.0 * (t1 - t0) / max_extend_step(curve, R))));
        std::vector<double> x, w;
        gauss_on(t0, t1, q, x, w);
        double gap = 0.0;
        for (std::size_t k = 0; k < x.size(); ++k) {
            d.xi.push_back(x[k]);
            d.w.push_back(w[k] * curve.speed(x[k]));
            d.g.push_back(a[v]);
            if (k) gap = std::max(gap, x[k] - x[k - 1]);
        }
        d.step = std::max(d.step, gap);
    }
    return d;
}

namespace {

void check_step(const CurveDensity& g, double R) {
    double lim = max_extend_step(g.curve, R);
    if (g.step > lim)
        throw QuadratureError(fmt::format("curve step {:.3e} exceeds {:.3e} at R = {}", g.step, lim, R));
}

}  // namespace

std::vector<cplx> extend_at(const CurveDensity& g, const std::vector<Vec>& xs, double R) {
    check_step(g, R);
    std::vector<Vec> pts(g.size());
    for (std::size_t k = 0; k < g.size(); ++k) pts[k] = g.curve.point(g.xi[k]);
    std::vector<cplx> out(xs.size());
    parallel_for(xs.size(), [&](std::size_t i) {
        cplx acc(0.0, 0.0);
        for (std::size_t k = 0; k < g.size(); ++k) acc += g.w[k] * g.g[k] * expi(kTwoPi * xs[i].dot(pts[k]));
        out[i] = acc;
    });
    return out;
}

Field extend(const CurveDensity& g, const Grid& grid, double R) {
    check_step(g, R);
    int n = grid.n();
    Field out(grid);
    Mat off = grid.basis - Mat(grid.basis.diagonal().asDiagonal());
    if (off.cwiseAbs().maxCoeff() > 0.0 || n < 2) {
        std::vector<Vec> xs(grid.size());
        for (std::size_t i = 0; i < xs.size(); ++i) xs[i] = grid.point(i);
        out.v = extend_at(g, xs, R);
        return out;
    }
    auto dims = grid.dims();
    std::size_t K = g.size();
    std::vector<Eigen::MatrixXcd> E(n);
    for (int j = 0; j < n; ++j) {
        E[j].resize(dims[j], K);
        for (std::size_t k = 0; k < K; ++k) {
            double gam = g.curve.point(g.xi[k])[j];
            for (int a = 0; a < dims[j]; ++a) {
                double x = grid.origin[j] + grid.basis(j, j) * (grid.lo[j] + a);
                E[j](a, k) = expi(kTwoPi * x * gam);
            }
        }
    }
    Eigen::VectorXcd c(K);
    for (std::size_t k = 0; k < K; ++k) c[k] = g.w[k] * g.g[k];
    std::size_t prefix = 1;
    for (int j = 0; j < n - 2; ++j) prefix *= dims[j];
    int X = dims[n - 2], Y = dims[n - 1];
    Eigen::MatrixXcd Ylast = E[n - 1].transpose();
    parallel_for(prefix, [&](std::size_t p) {
        Eigen::VectorXcd u = c;
        std::size_t r = p;
        for (int j = n - 3; j >= 0; --j) {
            u = u.cwiseProduct(E[j].row(int(r % dims[j])).transpose());
            r /= dims[j];
        }
        Eigen::MatrixXcd A = E[n - 2] * u.asDiagonal();
        Eigen::Matrix<cplx, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> B = A * Ylast;
        std::copy(B.data(), B.data() + std::size_t(X) * Y, out.v.begin() + p * X * Y);
    });
    return out;
}

double phi1(const Vec& x, double R) {
    double v = 1.0, p0 = bump::phi(0.0);
    for (int j = 0; j < x.size(); ++j) v *= bump::phi(x[j] / (2.0 * R)) / p0;
    return v;
}

double phi1_min_on_ball(int n) {
    // minimum over the unit sphere of prod phi(u_j/2)/phi(0); sampled on a fine grid for n <= 3
    double best = INFINITY;
    auto val = [&](const Vec& u) { return phi1(u, 1.0); };
    if (n == 2) {
        for (int i = 0; i <= 4096; ++i) {
            double t = kPi * i / 8192;
            Vec u(2);
            u << std::cos(t), std::sin(t);
            best = std::min(best, val(u));
        }
    } else if (n == 3) {
        for (int i = 0; i <= 512; ++i)
            for (int j = 0; j <= 512; ++j) {
                double t = 0.5 * kPi * i / 512, s = 0.5 * kPi * j / 512;
                Vec u(3);
                u << std::sin(t) * std::cos(s), std::sin(t) * std::sin(s), std::cos(t);
                best = std::min(best, val(u));
            }
    } else {
        Vec e = Vec::Zero(n);
        e[0] = 1.0;
        best = std::min(val(e), val(Vec::Constant(n, 1.0 / std::sqrt(double(n)))));
    }
    return best;
}

Localized localize(const Field& Eg, double R) {
    const Grid& g = Eg.grid;
    int n = g.n();
    for (int j = 0; j < n; ++j) {
        double lo = g.origin[j] + g.basis(j, j) * g.lo[j], hi = g.origin[j] + g.basis(j, j) * g.hi[j];
        if (lo > -4.0 * R + 1e-9 || hi < 4.0 * R - 1e-9)
            throw DomainError(fmt::format("grid does not cover B_4R for R = {}", R));
    }
    Localized L{Field(g), INFINITY};
    for (std::size_t i = 0; i < Eg.v.size(); ++i) {
        Vec x = g.point(i);
        double p = phi1(x, R);
        L.f.v[i] = p * Eg.v[i];
        if (x.norm() <= R) L.min_on_ball = std::min(L.min_on_ball, p);
    }
    return L;
}

namespace {

struct BallKernel {
    int n;
    double R, vol;
    BallKernel(int n_, double R_)
        : n(n_), R(R_), vol(std::pow(kPi, 0.5 * n_) / std::tgamma(0.5 * n_ + 1) * std::pow(R_, n_)) {}
    double operator()(double rho) const {
        double z = kTwoPi * R * rho;
        if (z < 1e-3) return vol * (1.0 - z * z / (2.0 * (n + 2)));
        if (n == 2) return R * boost::math::cyl_bessel_j(1, z) / rho;
        if (n == 3) return (std::sin(z) - z * std::cos(z)) / (2.0 * kPi * kPi * rho * rho * rho);
        return std::pow(R / rho, 0.5 * n) * boost::math::cyl_bessel_j(0.5 * n, z);
    }
};

}  // namespace

double ball_kernel(int n, double R, double rho) { return BallKernel(n, R)(rho); }

double ball_energy(const CurveDensity& g, double R) {
    int n = g.curve.n();
    std::size_t K = g.size();
    std::vector<Vec> pts(K);
    std::vector<cplx> c(K);
    for (std::size_t k = 0; k < K; ++k) {
        pts[k] = g.curve.point(g.xi[k]);
        c[k] = g.w[k] * g.g[k];
    }
    BallKernel ker(n, R);
    double k0 = ker(0.0);
    return parallel_sum<double>(K, [&](std::size_t i) {
        double acc = std::norm(c[i]) * k0;
        for (std::size_t j = i + 1; j < K; ++j)
            acc += 2.0 * (c[i] * std::conj(c[j])).real() * ker((pts[i] - pts[j]).norm());
        return acc;
    });
}

double ball_energy_lattice(const CurveDensity& g, double R) {
    int n = g.curve.n();
    double h = 0.25;
    Grid grid = Grid::unit_cube(n, R / h);
    grid.basis *= h;
    std::vector<Vec> xs;
    for (std::size_t i = 0; i < grid.size(); ++i) {
        Vec x = grid.point(i);
        if (x.norm() <= R) xs.push_back(x);
    }
    CurveDensity d = g;
    d.step = 0.0;  // the lattice check is only used at small R
    auto v = extend_at(d, xs, R);
    double acc = 0.0;
    for (const auto& z : v) acc += std::norm(z);
    return acc * std::pow(h, n);
}

double agmon_hormander_ratio(const CurveDensity& g, double R) {
    double nrm = g.norm2();
    if (!(nrm > 0.0)) throw InvalidInstance("zero density");
    return ball_energy(g, R) / (std::pow(R, g.curve.n() - 1) * nrm);
}

}  // namespace mtlab
