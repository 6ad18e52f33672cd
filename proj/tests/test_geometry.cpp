#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>

#include "mtlab/errors.hpp"
#include "mtlab/geometry.hpp"
#include "mtlab/lab.hpp"
#include "mtlab/rng.hpp"

using namespace mtlab;

namespace {

double frame_residual(const Mat& e) {
    return (e.transpose() * e - Mat::Identity(e.rows(), e.cols())).cwiseAbs().maxCoeff();
}

}  // namespace

TEST(Frenet, MomentCurveAtZeroIsStandardBasis) {
    for (int n : {2, 3}) {
        auto fr = frenet_frame(CurveSpec::moment(n), 0.0);
        EXPECT_LT((fr.e - Mat::Identity(n, n)).cwiseAbs().maxCoeff(), 1e-12) << n;
    }
}

TEST(Frenet, HandGramSchmidtAtHalf) {
    // Gamma' = (1, 1), Gamma'' = (0, 2) at xi = 1/2
    auto fr = frenet_frame(CurveSpec::moment(2), 0.5);
    Vec e1(2), e2(2);
    e1 << 1.0 / std::sqrt(2.0), 1.0 / std::sqrt(2.0);
    e2 << -1.0 / std::sqrt(2.0), 1.0 / std::sqrt(2.0);
    EXPECT_LT((fr.e.col(0) - e1).norm(), 1e-12);
    EXPECT_LT((fr.e.col(1) - e2).norm(), 1e-12);
    EXPECT_LT(frame_residual(fr.e), 1e-10);
}

TEST(Frenet, OrthonormalAndOrientedOnRandomParameters) {
    Rng rng(3);
    for (const auto& curve : {CurveSpec::moment(2), CurveSpec::moment(3), CurveSpec::moment(4), CurveSpec::helix()}) {
        double worst = 0.0;
        for (int i = 0; i < 1000; ++i) {
            double t = rng.uniform(curve.a(), curve.b());
            auto fr = frenet_frame(curve, t);
            worst = std::max(worst, frame_residual(fr.e));
            for (int j = 0; j < curve.n(); ++j) EXPECT_GT(fr.e.col(j).dot(curve.deriv(t, j + 1)), 0.0);
        }
        EXPECT_LE(worst, 1e-10) << curve.name();
    }
}

TEST(Curve, HelixNeedsThreeDimensions) {
    EXPECT_THROW(CurveSpec::by_name("helix", 2), ConfigError);
    EXPECT_THROW(CurveSpec::by_name("spiral", 3), ConfigError);
}

TEST(Boxes, CountsAndSides) {
    auto b2 = curvature_boxes(CurveSpec::moment(2), 256);
    ASSERT_EQ(b2.size(), 16u);
    EXPECT_DOUBLE_EQ(b2[0].delta, 1.0 / 16);
    EXPECT_NEAR(b2[0].L.col(1).norm(), 1.0 / 256, 1e-15);
    auto b3 = curvature_boxes(CurveSpec::moment(3), 512);
    ASSERT_EQ(b3.size(), 8u);
    auto curve = CurveSpec::moment(3);
    for (const auto& b : b3.boxes)
        for (int j = 1; j <= 3; ++j) {
            Vec want = std::pow(0.125, j) * curve.deriv(b.xi, j) / std::tgamma(j + 1.0);
            EXPECT_LT((b.L.col(j - 1) - want).norm(), 1e-15);
        }
    EXPECT_NEAR(std::abs(b3[0].L.determinant()), std::pow(2.0, -18), 1e-20);
}

TEST(Boxes, NonDyadicScaleRoundsUpWithWarning) {
    auto s = normalize_scale(2, 100);
    EXPECT_EQ(s.R, 256);
    EXPECT_FALSE(s.warning.empty());
    EXPECT_TRUE(normalize_scale(3, 512).warning.empty());
    EXPECT_THROW(normalize_scale(2, 0.5), ConfigError);
}

TEST(Boxes, CurvePointsLieInTheirBox) {
    auto curve = CurveSpec::moment(2);
    auto boxes = curvature_boxes(curve, 256);
    for (const auto& b : boxes.boxes)
        for (int i = 0; i < 100; ++i) {
            double xi = (b.index + (i + 0.5) / 100.0) * b.delta;
            EXPECT_TRUE(b.contains(curve.point(xi))) << b.index << " " << xi;
        }
}

TEST(Boxes, SleeveCoversNeighbourhoodOfCurve) {
    auto curve = CurveSpec::moment(3);
    auto boxes = curvature_boxes(curve, 512);
    Rng rng(5);
    for (int i = 0; i < 2000; ++i) {
        // points of the curve within 1/R of an arc endpoint, and a thin tube around the curve
        const auto& b = boxes[std::size_t(i) % boxes.size()];
        double edge = (i % 2 ? b.index : b.index + 1) * b.delta;
        double xi = std::clamp(edge + rng.uniform(-1.0, 1.0) / 512, 0.0, 1.0);
        EXPECT_FALSE(boxes.containing(curve.point(xi)).empty()) << xi;
        Vec z = curve.point(rng.uniform()) + rng.in_ball(3, 0.2 / 512);
        EXPECT_FALSE(boxes.containing(z).empty());
    }
}

TEST(Planks, TilingHasExactlyOneCell) {
    auto boxes = curvature_boxes(CurveSpec::moment(2), 256);
    Rng rng(7);
    for (int i = 0; i < 10000; ++i) {
        Vec x = rng.in_ball(2, 256);
        const auto& b = boxes[std::size_t(i) % boxes.size()];
        IVec m = plank_index(b, x);
        EXPECT_TRUE(plank_region(b, make_plank(b, m)).contains(x));
        int hits = 0;
        for (int dx = -1; dx <= 1; ++dx)
            for (int dy = -1; dy <= 1; ++dy) {
                IVec k = m;
                k[0] += dx;
                k[1] += dy;
                Vec y = b.T * x - k.cast<double>();
                hits += (y.array() >= -0.5).all() && (y.array() < 0.5).all();
            }
        EXPECT_EQ(hits, 1);
    }
}

TEST(Planks, VolumeLawUniformOverTheta) {
    for (int n : {2, 3}) {
        double R = n == 2 ? 256 : 512;
        auto boxes = curvature_boxes(CurveSpec::moment(n), R);
        double lo = 1e300, hi = 0.0;
        for (const auto& b : boxes.boxes) {
            double v = plank_region(b, make_plank(b, IVec::Zero(n))).volume() / std::pow(R, (n + 1) / 2.0);
            lo = std::min(lo, v);
            hi = std::max(hi, v);
        }
        EXPECT_GT(lo, 0.05);
        EXPECT_LT(hi, 1.0 + 1e-12);
    }
}

TEST(DerivedFamily, SliceCounts) {
    auto b2 = curvature_boxes(CurveSpec::moment(2), 256);
    auto p2 = make_plank(b2[3], IVec::Zero(2));
    auto L2 = derived_family(b2[3], p2, SliceKind::L, 0.0, 256);
    EXPECT_EQ(L2.size(), 16u);
    // n = 2: every L is already a tube
    auto P2 = derived_family(b2[3], p2, SliceKind::P, 0.0, 256);
    EXPECT_EQ(P2.size(), L2.size());

    auto b3 = curvature_boxes(CurveSpec::moment(3), 512);
    auto p3 = make_plank(b3[2], IVec::Zero(3));
    auto L3 = derived_family(b3[2], p3, SliceKind::L, 0.0, 512);
    EXPECT_EQ(L3.size(), 8u);
    auto P3 = derived_family(b3[2], p3, SliceKind::P, 0.0, 512);
    EXPECT_EQ(P3.size(), 8u * 64u);
}

TEST(DerivedFamily, SlicesPartitionThePlank) {
    auto b3 = curvature_boxes(CurveSpec::moment(3), 512);
    auto p = make_plank(b3[5], IVec::Constant(3, 2));
    Region T = plank_region(b3[5], p);
    auto P3 = derived_family(b3[5], p, SliceKind::P, 0.0, 512);
    Rng rng(9);
    long bad = 0;
    for (int i = 0; i < 20000; ++i) {
        Vec u(3);
        for (int j = 0; j < 3; ++j) u[j] = rng.uniform(-0.6, 0.6);
        Vec x = T.center + T.A * u;
        int c = 0;
        for (const auto& r : P3) c += r.contains(x);
        bool inside = T.contains(x);
        // interior points in exactly one piece, exterior points in none (ties on faces have measure 0)
        bad += inside ? (c != 1) : (c != 0);
    }
    EXPECT_EQ(bad, 0);
}

TEST(HyperplaneSlab, ContainsItsL) {
    for (int n : {2, 3}) {
        double R = n == 2 ? 256 : 512;
        auto boxes = curvature_boxes(CurveSpec::moment(n), R);
        const auto& b = boxes[1];
        auto Ls = derived_family(b, make_plank(b, IVec::Zero(n)), SliceKind::L, 0.0, R);
        for (const auto& L : Ls) {
            Region S = hyperplane_slab(b, L);
            EXPECT_DOUBLE_EQ(S.half_width, 1.0);
            EXPECT_TRUE(S.contains_all(L.corners(), 1.0 + 1e-9));
            Vec far = L.center + 3.0 * S.normal;
            EXPECT_FALSE(S.contains(far));
        }
    }
}

TEST(Incidence, FarCubeZeroAndSelfOne) {
    auto boxes = curvature_boxes(CurveSpec::moment(2), 256);
    const auto& b = boxes[4];
    Region T = plank_region(b, make_plank(b, IVec::Zero(2)));
    Vec c = Vec::Constant(2, 5000.0);
    EXPECT_EQ(incidence_count(Region::cube(c, 4.0), {T}, 1.0), 0);
    EXPECT_EQ(incidence_count(Region::cube(T.center, 4.0), {T}, 2.0), 1);
}

TEST(Incidence, FullBushThroughOrigin) {
    auto boxes = curvature_boxes(CurveSpec::moment(2), 64);
    ASSERT_EQ(boxes.size(), 8u);
    std::vector<Region> bush;
    for (const auto& b : boxes.boxes) bush.push_back(plank_region(b, make_plank(b, IVec::Zero(2))));
    Region Q = Region::cube(Vec::Zero(2), 1.0);
    long brute = 0;
    for (const auto& T : bush) brute += T.contains_all(Q.corners());
    EXPECT_EQ(brute, 8);
    EXPECT_EQ(incidence_count(Q, bush, 1.0), 8);
}

TEST(Regions, IntersectionAgreesWithSampling) {
    Rng rng(13);
    auto boxes = curvature_boxes(CurveSpec::moment(3), 64);
    for (int trial = 0; trial < 200; ++trial) {
        const auto& b = boxes[std::size_t(trial) % boxes.size()];
        Region P = plank_region(b, make_plank(b, IVec::Zero(3)));
        Region Q = trial % 2 ? Region::cube(rng.in_ball(3, 30.0), 4.0) : Region::ball(rng.in_ball(3, 30.0), 3.0);
        bool hit = false;
        for (int i = 0; i < 4000 && !hit; ++i) {
            Vec u(3);
            for (int j = 0; j < 3; ++j) u[j] = rng.uniform(-0.5, 0.5);
            hit = Q.contains(P.center + P.A * u);
        }
        // sampling can only miss a thin overlap, never invent one
        if (hit) EXPECT_TRUE(regions_intersect(P, Q));
        if (!regions_intersect(P, Q)) EXPECT_FALSE(hit);
    }
}

TEST(Families, SampledGridSizes) {
    auto curve = CurveSpec::moment(2);
    auto T = make_family(curve, 256, FamilyKind::T);
    EXPECT_EQ(T.dirs.size(), 16u);
    EXPECT_EQ(T.shifts.size(), 4u);
    EXPECT_EQ(family_from_string("S"), FamilyKind::S);
    EXPECT_THROW(family_from_string("Q"), ConfigError);
}
