#include <gtest/gtest.h>

#include <cmath>

#include "mtlab/errors.hpp"
#include "mtlab/rng.hpp"
#include "mtlab/weights.hpp"

using namespace mtlab;

namespace {

IVec iv(int a, int b) {
    IVec v(2);
    v << a, b;
    return v;
}

Weight random_weight(int n, double radius, int count, std::uint64_t seed) {
    Rng rng(seed);
    Weight w(n);
    for (int i = 0; i < count; ++i) {
        Vec x = rng.in_ball(n, radius);
        IVec p(n);
        for (int j = 0; j < n; ++j) p[j] = int(std::lround(x[j]));
        w.add(p, rng.uniform(0.1, 2.0));
    }
    return w;
}

// brute force over members; tiles are half-open so boundary points count once
double brute_sup(const Weight& w, const GeomFamily& fam, double r) {
    double best = 0.0;
    for (std::size_t d = 0; d < fam.dirs.size(); ++d)
        for (const auto& s : fam.shifts)
            for (const auto& p : w.points()) {
                Vec y = fam.M[d] * p.cast<double>() - s;
                Vec m = (y.array() + 0.5).floor().matrix();
                double acc = 0.0;
                for (std::size_t i = 0; i < w.size(); ++i) {
                    Vec u = fam.M[d] * w.points()[i].cast<double>() - s - m;
                    if ((u.array() >= -0.5).all() && (u.array() < 0.5).all()) acc += std::pow(w.values()[i], r);
                }
                best = std::max(best, std::pow(acc, 1.0 / r));
            }
    return best;
}

}  // namespace

TEST(Mass, HandOracles) {
    Weight w(2);
    w.add(iv(0, 0), 1.0);
    w.add(iv(1, 0), 2.0);
    w.add(iv(5, 5), 7.0);
    auto cube = Region::cube(Vec::Zero(2), 3.0);
    EXPECT_NEAR(mass(w, cube, 1.0), 3.0, 1e-15);
    EXPECT_NEAR(mass(w, cube, 2.0), std::sqrt(5.0), 1e-15);
    EXPECT_NEAR(mass(w, Region::ball(Vec::Zero(2), 10.0), 3.0), std::cbrt(1.0 + 8.0 + 343.0), 1e-12);
    EXPECT_EQ(mass(w, Region::cube(Vec::Constant(2, 50.0), 1.0), 1.0), 0.0);
    auto c = Weight::constant(2, 3.0);
    EXPECT_NEAR(mass(c, cube, 2.0), 3.0 * 3.0, 1e-12);
    EXPECT_THROW(mass(c, Region::slab(Vec::Zero(2), Vec::Unit(2, 0), 1.0), 1.0), DomainError);
}

TEST(Mass, MonotoneInExponentAndHolder) {
    auto w = random_weight(2, 20.0, 200, 7);
    auto ball = Region::ball(Vec::Zero(2), 12.0);
    long K = 0;
    for (const auto& p : w.points()) K += ball.contains(p.cast<double>());
    ASSERT_GT(K, 10);
    double prev = INFINITY;
    for (double r : {1.0, 1.5, 2.0, 3.0, 6.0}) {
        double m = mass(w, ball, r);
        EXPECT_LE(m, prev * (1 + 1e-14));
        prev = m;
    }
    for (auto [r1, r2] : {std::pair{1.0, 2.0}, std::pair{2.0, 6.0}, std::pair{1.5, 3.0}})
        EXPECT_LE(mass(w, ball, r1), std::pow(double(K), 1.0 / r1 - 1.0 / r2) * mass(w, ball, r2) * (1 + 1e-14));
}

TEST(SupMass, MatchesBruteForce) {
    auto curve = CurveSpec::moment(2);
    auto w = random_weight(2, 24.0, 120, 8);
    for (auto kind : {FamilyKind::T, FamilyKind::L}) {
        auto fam = make_family(curve, 16, kind);
        for (double r : {1.0, 2.0}) {
            auto s = sup_mass(w, fam, r);
            EXPECT_NEAR(s.value, brute_sup(w, fam, r), 1e-12 * s.value) << to_string(kind) << " " << r;
            EXPECT_GE(mass(w, fam.member(std::size_t(s.dir), s.m, s.shift), r), s.value * (1 - 1e-12));
        }
    }
}

TEST(SupMass, MonotoneInWeight) {
    auto fam = make_family(CurveSpec::moment(2), 16, FamilyKind::T);
    auto w = random_weight(2, 24.0, 100, 9);
    Weight bigger = w.scaled(1.0);
    Rng rng(10);
    for (int i = 0; i < 40; ++i) bigger.add(iv(int(rng.integer(-20, 20)), int(rng.integer(-20, 20))), 0.5);
    EXPECT_LE(sup_mass(w, fam, 1.0).value, sup_mass(bigger, fam, 1.0).value);
    EXPECT_NEAR(sup_mass(w.scaled(3.0), fam, 2.0).value, 3.0 * sup_mass(w, fam, 2.0).value, 1e-12);
}

TEST(SupMass, SlabsAreTranslationCovariant) {
    auto fam = make_family(CurveSpec::moment(3), 64, FamilyKind::S);
    auto w = random_weight(3, 16.0, 150, 11);
    IVec v(3);
    v << 7, -3, 11;
    double a = sup_mass(w, fam, 1.0).value, b = sup_mass(w.translated(v), fam, 1.0).value;
    EXPECT_NEAR(a, b, 1e-12 * a);
    EXPECT_THROW(sup_mass(Weight::constant(3, 1.0), fam, 1.0), DomainError);
}

TEST(SupMass, ConstantWeightIsTileVolume) {
    auto fam = make_family(CurveSpec::moment(2), 64, FamilyKind::T);
    auto s = sup_mass(Weight::constant(2, 2.0), fam, 2.0);
    EXPECT_NEAR(s.value, 2.0 * std::sqrt(std::pow(64.0, 1.5)), 1e-9 * s.value);
}

TEST(Mollify, PreservesMassAndConstants) {
    double ksum = 0.0;
    for (const auto& z : lattice_ball(2, 40.0)) ksum += mollifier_kernel(z);
    EXPECT_NEAR(ksum, 1.0, 1e-6);
    Weight d(2);
    d.add(iv(0, 0), 1.0);
    auto m = mollify_unit(d);
    EXPECT_NEAR(m.w.total(), 1.0, 1e-4);
    EXPECT_GE(m.C, 1.0);
    EXPECT_TRUE(std::isfinite(m.C));
    auto w = random_weight(2, 10.0, 30, 12);
    EXPECT_NEAR(mollify_unit(w).w.total(), w.total(), 1e-4 * w.total());
    auto c = mollify_unit(Weight::constant(2, 4.0));
    EXPECT_TRUE(c.w.is_constant());
    EXPECT_EQ(c.w.constant_value(), 4.0);
    EXPECT_EQ(c.C, 1.0);
}

TEST(Hull, DeterminantOracle) {
    Rng rng(13);
    for (int n : {2, 3}) {
        for (int t = 0; t < 50; ++t) {
            std::vector<Vec> P;
            Mat A(n, n);
            Vec o = rng.in_ball(n, 5.0);
            P.push_back(o);
            for (int j = 0; j < n; ++j) {
                Vec e = rng.in_ball(n, 5.0);
                A.col(j) = e;
                P.push_back(o + e);
            }
            EXPECT_NEAR(hull_volume(P), std::abs(A.determinant()) / std::tgamma(n + 1.0), 1e-9);
        }
    }
    std::vector<Vec> cube;
    for (int i = 0; i < 8; ++i) cube.push_back(Vec(Eigen::Vector3d(i & 1, (i >> 1) & 1, (i >> 2) & 1)));
    cube.push_back(Vec::Constant(3, 0.5));
    EXPECT_NEAR(hull_volume(cube), 1.0, 1e-12);
}

TEST(Hull, MinSubsetVolume) {
    std::vector<IVec> pts{iv(0, 0), iv(2, 0), iv(0, 2), iv(2, 2), iv(1, 1)};
    std::vector<int> arg;
    EXPECT_EQ(min_subset_volume(pts, 3, HullCheck::Exhaustive, 0, 1, &arg), 0.0);
    ASSERT_EQ(arg.size(), 3u);
    EXPECT_NEAR(min_subset_volume(pts, 4, HullCheck::Exhaustive, 0, 1), 2.0, 1e-12);
    EXPECT_THROW(min_subset_volume(pts, 6, HullCheck::Exhaustive, 0, 1), ConfigError);
}

TEST(Carbery, SmallConfigurationIsCertified) {
    auto cfg = carbery_points(2, 20, 6, 32, 1);
    ASSERT_EQ(cfg.points.size(), 20u);
    ASSERT_TRUE(cfg.certified_volume.has_value());
    EXPECT_GT(cfg.constant(), 0.0);
    EXPECT_NEAR(*cfg.certified_volume, min_subset_volume(cfg.points, 6, HullCheck::Exhaustive, 0, 0), 1e-12);
    EXPECT_NEAR(cfg.constant(), *cfg.certified_volume / cfg.target(), 1e-12);
    for (std::size_t i = 0; i < cfg.points.size(); ++i) {
        EXPECT_LE(cfg.points[i].cast<double>().norm(), 32.0);
        for (std::size_t j = 0; j < i; ++j) EXPECT_GE((cfg.points[i] - cfg.points[j]).cast<double>().norm(), 2.0);
    }
    auto again = carbery_points(2, 20, 6, 32, 1);
    EXPECT_EQ(again.points, cfg.points);
    auto w = multibush_weight(cfg);
    EXPECT_EQ(w.size(), 20u);
    EXPECT_EQ(w.total(), 20.0);
    for (const auto& p : cfg.points) EXPECT_EQ(w.at(p), 1.0);
}

TEST(Carbery, RejectsBadParameters) {
    EXPECT_THROW(carbery_points(2, 5, 6, 32, 1), ConfigError);
    EXPECT_THROW(carbery_points(2, 10, 3, 32, 1), ConfigError);
    EXPECT_THROW(carbery_points(2, 5000, 6, 8, 1), PackingError);
}

TEST(Mollify, HolderOrderPointwise) {
    Rng rng(14);
    double r = 1.5;
    for (int t = 0; t < 1000; ++t) {
        Weight w(2), wr(2);
        for (int i = 0; i < 3; ++i) {
            IVec p = iv(int(rng.integer(-6, 6)), int(rng.integer(-6, 6)));
            if (w.at(p) > 0.0) continue;
            double v = rng.uniform(0.0, 3.0);
            w.add(p, v);
            wr.add(p, std::pow(v, r));
        }
        auto a = mollify_unit(w, 4).w, b = mollify_unit(wr, 4).w;
        for (std::size_t i = 0; i < a.size(); ++i)
            ASSERT_LE(a.values()[i], std::pow(b.at(a.points()[i]), 1.0 / r) * (1 + 1e-12) + 1e-300);
    }
}

TEST(Mass, IndicatorWeightsScaleExactlyInExponent) {
    auto w = random_weight(2, 20.0, 200, 15);
    Weight ind = Weight::indicator(w.points());
    auto ball = Region::ball(Vec::Constant(2, 3.0), 9.0);
    for (double r : {1.5, 2.0, 6.0}) EXPECT_NEAR(mass(ind, ball, r), std::pow(mass(ind, ball, 1.0), 1.0 / r), 1e-12);
    EXPECT_NEAR(mass(Weight::indicator({iv(0, 0)}), ball, 1.5), 1.0, 1e-15);
}

TEST(Hull, PlanarSubsetsAgainstMonotoneChain) {
    auto cross = [](const Vec& o, const Vec& a, const Vec& b) {
        return (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0]);
    };
    Rng rng(16);
    for (int t = 0; t < 100; ++t) {
        std::vector<Vec> P;
        for (int i = 0; i < 6; ++i) P.push_back(rng.in_ball(2, 30.0));
        auto S = P;
        std::sort(S.begin(), S.end(), [](const Vec& a, const Vec& b) { return a[0] < b[0] || (a[0] == b[0] && a[1] < b[1]); });
        std::vector<Vec> H(2 * S.size());
        std::size_t k = 0;
        for (std::size_t i = 0; i < S.size(); ++i) {
            while (k >= 2 && cross(H[k - 2], H[k - 1], S[i]) <= 0) --k;
            H[k++] = S[i];
        }
        for (std::size_t i = S.size() - 1, lo = k + 1; i-- > 0;) {
            while (k >= lo && cross(H[k - 2], H[k - 1], S[i]) <= 0) --k;
            H[k++] = S[i];
        }
        double area = 0.0;
        for (std::size_t i = 0; i + 1 < k; ++i) area += H[i][0] * H[i + 1][1] - H[i + 1][0] * H[i][1];
        EXPECT_NEAR(hull_volume(P), 0.5 * std::abs(area), 1e-9 * std::abs(area));
    }
}
