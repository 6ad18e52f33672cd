#include <gtest/gtest.h>

#include <boost/math/special_functions/bessel.hpp>
#include <cmath>

#include "mtlab/errors.hpp"
#include "mtlab/extension.hpp"
#include "mtlab/lab.hpp"
#include "mtlab/rng.hpp"

using namespace mtlab;

namespace {

cplx smooth_g(double xi) { return cplx(1.0 + 0.5 * std::cos(3.0 * xi), 0.3 * xi); }

// plain Riemann sum on a fine uniform parameter grid
cplx naive_extend(const CurveSpec& c, const DensityFn& g, const Vec& x, int M = 40000) {
    double h = (c.b() - c.a()) / M;
    cplx acc(0.0, 0.0);
    for (int i = 0; i < M; ++i) {
        double t = c.a() + (i + 0.5) * h;
        acc += g(t) * c.speed(t) * expi(kTwoPi * x.dot(c.point(t))) * h;
    }
    return acc;
}

}  // namespace

TEST(Extend, ValueAtOriginIsArclength) {
    auto c = CurveSpec::moment(2);
    auto d = density_for_direct_sum(c, [](double) { return cplx(1.0); }, 1.0);
    auto v = extend_at(d, {Vec::Zero(2)}, 1.0);
    double arclen = std::sqrt(5.0) / 2.0 + std::asinh(2.0) / 4.0;
    EXPECT_NEAR(v[0].real(), arclen, 1e-13);
    EXPECT_NEAR(v[0].imag(), 0.0, 1e-14);
    EXPECT_NEAR(c.total_length(), arclen, 1e-10);
}

TEST(Extend, AgreesWithRiemannSum) {
    Rng rng(3);
    for (int n : {2, 3}) {
        auto c = CurveSpec::moment(n);
        double R = 16;
        auto d = density_for_direct_sum(c, smooth_g, R);
        for (int i = 0; i < 5; ++i) {
            Vec x = rng.in_ball(n, R);
            cplx got = extend_at(d, {x}, R)[0], want = naive_extend(c, smooth_g, x);
            EXPECT_LT(std::abs(got - want), 1e-6) << n;
        }
    }
}

TEST(Extend, SeparableGridMatchesPointwise) {
    for (int n : {2, 3}) {
        auto c = CurveSpec::moment(n);
        double R = 8;
        auto d = density_for_direct_sum(c, smooth_g, R);
        auto grid = Grid::unit_cube(n, R);
        auto F = extend(d, grid, R);
        std::vector<Vec> xs;
        for (std::size_t i = 0; i < grid.size(); i += 37) xs.push_back(grid.point(i));
        auto v = extend_at(d, xs, R);
        for (std::size_t k = 0; k < xs.size(); ++k) EXPECT_LT(std::abs(F.v[k * 37] - v[k]), 1e-10);
    }
}

TEST(Extend, ModulationIsTranslation) {
    auto c = CurveSpec::moment(2);
    double R = 16;
    auto d = density_for_direct_sum(c, smooth_g, 2 * R);
    Rng rng(4);
    Vec x0 = rng.in_ball(2, R / 2);
    auto dm = d.modulated(x0);
    for (int i = 0; i < 10; ++i) {
        Vec x = rng.in_ball(2, R / 2);
        cplx a = extend_at(dm, {x}, 2 * R)[0], b = extend_at(d, {Vec(x - x0)}, 2 * R)[0];
        EXPECT_LT(std::abs(a - b), 1e-11);
    }
    EXPECT_NEAR(dm.norm2(), d.norm2(), 1e-13);
}

TEST(Extend, Linearity) {
    auto c = CurveSpec::moment(3);
    double R = 8;
    auto f = density_for_direct_sum(c, smooth_g, R);
    auto g = density_for_direct_sum(c, [](double t) { return cplx(std::sin(5 * t), 1.0); }, R);
    auto h = f;
    cplx al(0.3, -1.2), be(2.0, 0.5);
    for (std::size_t k = 0; k < h.size(); ++k) h.g[k] = al * f.g[k] + be * g.g[k];
    Rng rng(5);
    for (int i = 0; i < 10; ++i) {
        Vec x = rng.in_ball(3, R);
        cplx lhs = extend_at(h, {x}, R)[0];
        cplx rhs = al * extend_at(f, {x}, R)[0] + be * extend_at(g, {x}, R)[0];
        EXPECT_LT(std::abs(lhs - rhs), 1e-11);
    }
    EXPECT_NEAR(f.scaled(al).norm2(), std::norm(al) * f.norm2(), 1e-12);
}

TEST(Extend, UnderResolvedCurveRaises) {
    auto c = CurveSpec::moment(2);
    auto d = make_density(c, smooth_g, 1, 4);
    EXPECT_THROW(extend_at(d, {Vec::Zero(2)}, 1024), QuadratureError);
    EXPECT_THROW(extend(d, Grid::unit_cube(2, 4), 1024), QuadratureError);
}

TEST(BallKernel, MatchesPolarQuadratureAndBesselForm) {
    // n = 2: integrate over the disc in polar coordinates
    double R = 1.5, rho = 0.7;
    int M = 2000;
    double acc = 0.0;
    for (int i = 0; i < M; ++i) {
        double r = (i + 0.5) * R / M;
        for (int j = 0; j < M; ++j) {
            double t = (j + 0.5) * kTwoPi / M;
            acc += std::cos(kTwoPi * r * rho * std::cos(t)) * r * (R / M) * (kTwoPi / M);
        }
    }
    EXPECT_NEAR(ball_kernel(2, R, rho), acc, 1e-5);
    for (double r : {0.05, 0.4, 2.3}) {
        double z = kTwoPi * R * r;
        EXPECT_NEAR(ball_kernel(3, R, r), std::pow(R / r, 1.5) * boost::math::cyl_bessel_j(1.5, z), 1e-10);
    }
    EXPECT_NEAR(ball_kernel(3, 1.0, 0.0), 4.0 * kPi / 3.0, 1e-12);
    EXPECT_NEAR(ball_kernel(2, 1.0, 1e-6), kPi, 1e-8);
}

TEST(BallEnergy, KernelFormMatchesLatticeSum) {
    for (int n : {2, 3}) {
        double R = n == 2 ? 8 : 4;
        auto d = density_for_direct_sum(CurveSpec::moment(n), smooth_g, R);
        double a = ball_energy(d, R), b = ball_energy_lattice(d, R);
        EXPECT_NEAR(a / b, 1.0, 0.03) << n;
    }
}

TEST(BallEnergy, GrowthIsCodimensionPower) {
    // log-log slope of the ball energy of a smooth density is n - 1
    for (int n : {2, 3}) {
        auto c = CurveSpec::moment(n);
        std::vector<double> lr, le;
        for (double R : {32.0, 64.0, 128.0, n == 2 ? 256.0 : 16.0}) {
            auto d = density_for_scale(c, smooth_g, R);
            lr.push_back(R);
            le.push_back(ball_energy(d, R));
            double ah = agmon_hormander_ratio(d, R);
            EXPECT_GT(ah, 0.05);
            EXPECT_LT(ah, 20.0);
        }
        auto fit = fit_loglog(lr, le);
        EXPECT_NEAR(fit.slope, n - 1, 0.2) << n;
    }
}

TEST(Arcs, NormAndConfigErrors) {
    auto c = CurveSpec::moment(2);
    double R = 64;
    auto d = arc_density(c, R, {1.0});
    EXPECT_NEAR(d.norm2(), 1.0 / R, 1e-12);
    auto e = arc_density(c, R, {1.0, cplx(0.0, 2.0)}, {0.0, 0.5});
    EXPECT_NEAR(e.norm2(), 5.0 / R, 1e-12);
    EXPECT_THROW(arc_density(c, R, {1.0, 1.0}, {0.1, 0.1 + 0.5 / R}), ConfigError);
    EXPECT_THROW(arc_density(c, R, {1.0}, {c.total_length()}), ConfigError);
    EXPECT_THROW(arc_density(c, R, {1.0, 1.0}, {0.0}), ConfigError);
    EXPECT_THROW(agmon_hormander_ratio(arc_density(c, R, {0.0}), R), InvalidInstance);
}

TEST(Localize, WeightBoundedBelowOnBall) {
    for (int n : {2, 3}) {
        double R = n == 2 ? 8 : 4;
        auto d = density_for_direct_sum(CurveSpec::moment(n), smooth_g, 4 * R);
        auto grid = Grid::unit_cube(n, 4 * R);
        auto Eg = extend(d, grid, 4 * R);
        auto L = localize(Eg, R);
        double floor = phi1_min_on_ball(n);
        EXPECT_GT(floor, 0.0);
        EXPECT_GE(L.min_on_ball, floor - 1e-12);
        for (std::size_t i = 0; i < Eg.v.size(); ++i) EXPECT_LE(std::abs(L.f.v[i]), std::abs(Eg.v[i]) * (1 + 1e-12));
        EXPECT_THROW(localize(extend(d, Grid::unit_cube(n, R), 4 * R), R), DomainError);
    }
}
