#include "mtlab/extremal.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "mtlab/bump.hpp"
#include "mtlab/errors.hpp"
#include "mtlab/rng.hpp"

namespace mtlab {

InequalityInstance bump_weight_instance(int n, double R, std::uint64_t seed) {
    auto curve = CurveSpec::moment(n);
    auto boxes = curvature_boxes(curve, R);
    double Rs = boxes.R();
    Rng rng(seed);
    SleeveField f(boxes);
    for (int i = 0; i < 16; ++i) {
        int th = int(rng.integer(0, long(boxes.size()) - 1));
        f.add_generator(th, Profile::Packet, plank_index(boxes[th], rng.in_ball(n, 0.5 * Rs)), rng.cnormal());
    }
    InequalityInstance inst;
    inst.id = "cor31a";
    inst.label = "bump";
    inst.R = Rs;
    inst.f = std::move(f);
    inst.w = Weight::sampled(n, 2.0 * Rs, [&](const Vec& x) { return bump::Phi(x / Rs); });
    return inst;
}

InequalityInstance bush_instance(int n, double R) {
    auto curve = CurveSpec::moment(n);
    auto boxes = curvature_boxes(curve, R);
    SleeveField f(boxes);
    for (std::size_t th = 0; th < boxes.size(); ++th) f.add_generator(int(th), Profile::Packet, IVec::Zero(n), 1.0);
    InequalityInstance inst;
    inst.id = "cor31a";
    inst.label = "bush";
    inst.R = boxes.R();
    inst.f = std::move(f);
    inst.w = Weight::indicator(Region::ball(Vec::Zero(n), 1.0), 1.0);
    return inst;
}

InequalityInstance single_packet_instance(int n, double R, std::uint64_t seed) {
    auto curve = CurveSpec::moment(n);
    auto boxes = curvature_boxes(curve, R);
    Rng rng(seed);
    int th = int(rng.integer(0, long(boxes.size()) - 1));
    SleeveField f(boxes);
    f.add_generator(th, Profile::Packet, IVec::Zero(n), 1.0);
    const auto& box = boxes[std::size_t(th)];
    InequalityInstance inst;
    inst.id = "cor35";
    inst.label = "single";
    inst.R = boxes.R();
    inst.w = Weight::indicator(plank_region(box, make_plank(box, IVec::Zero(n))), 4.0 * boxes.R());
    inst.f = std::move(f);
    return inst;
}

InequalityInstance arc_sum_instance(int n, double R, const std::vector<cplx>& a) {
    auto curve = CurveSpec::moment(n);
    std::vector<double> off;
    for (std::size_t v = 0; v < a.size(); ++v) off.push_back(double(v) / R);
    InequalityInstance inst;
    inst.id = "thm16";
    inst.label = "arcs";
    inst.R = R;
    inst.g = arc_density(curve, R, a, off);
    inst.w = Weight::constant(n, 1.0);
    return inst;
}

double AxiomaticStructure::xi(int level, int index) const {
    double h = (curve.b() - curve.a()) / double(1 << level);
    return curve.a() + (index + 0.5) * h;
}

AxiomaticStructure packet_structure(const SleeveField& f, double support_radius) {
    AxiomaticStructure s;
    s.curve = f.boxes().curve;
    s.R = f.R();
    int B = int(f.boxes().size());
    s.levels = 0;
    while ((1 << s.levels) < B) ++s.levels;
    s.support_radius = support_radius;
    int L = s.levels;
    s.F = [f, L](int level, int index, const Vec& x) {
        int lo = index << (L - level), hi = (index + 1) << (L - level);
        cplx acc(0.0, 0.0);
        for (std::size_t c = 0; c < f.components().size(); ++c) {
            int th = f.components()[c].theta;
            if (th >= lo && th < hi) acc += f.eval_component(c, x);
        }
        return acc;
    };
    return s;
}

namespace {

// Gamma(tau)^* for the interval (level, index): A = T^{-1} of the box at delta = 2^-level
AnisotropicBox level_box(const AxiomaticStructure& s, int level, int index) {
    return make_box(s.curve, s.xi(level, index), std::ldexp(1.0, -level), index);
}

Vec cube_point(Rng& rng, int n, double half) {
    Vec u(n);
    for (int j = 0; j < n; ++j) u[j] = rng.uniform(-half, half);
    return u;
}

}  // namespace

AxiomReport axiom_check(const AxiomaticStructure& s, const AxiomOptions& opt) {
    AxiomReport rep;
    int n = s.curve.n();
    Rng rng(opt.seed);
    int L = s.levels;
    // values[level][index][point] on a common sample of the support ball
    std::vector<Vec> pts(std::size_t(opt.points));
    for (auto& p : pts) p = rng.in_ball(n, s.support_radius);
    auto sample_all = [&](const std::vector<Vec>& xs) {
        std::vector<std::vector<std::vector<cplx>>> v(std::size_t(L + 1));
        for (int k = 0; k <= L; ++k) {
            v[k].assign(std::size_t(s.count(k)), std::vector<cplx>(xs.size()));
            for (int i = 0; i < s.count(k); ++i)
                parallel_for(xs.size(), [&](std::size_t q) { v[k][i][q] = s.F(k, i, xs[q]); });
        }
        return v;
    };
    auto V = sample_all(pts);

    // DA0: every gamma against every finer dyadic partition of it
    for (int k = 0; k < L; ++k)
        for (int g = 0; g < s.count(k); ++g) {
            double top = 0.0;
            for (const auto& z : V[k][g]) top = std::max(top, std::abs(z));
            for (int k2 = k + 1; k2 <= L; ++k2) {
                int span = 1 << (k2 - k);
                for (std::size_t q = 0; q < pts.size(); ++q) {
                    double num = std::abs(V[k][g][q]);
                    if (num <= 1e-12 * top) continue;
                    double den = 0.0;
                    for (int t = g * span; t < (g + 1) * span; ++t) den += std::abs(V[k2][t][q]);
                    rep.C0 = std::max(rep.C0, den > 0.0 ? num / den : std::numeric_limits<double>::infinity());
                }
            }
        }
    rep.da0 = rep.C0 <= std::pow(2.0, n);

    // DA1: sup over a translate K of Gamma(tau)^* against the L2 average over 2K, on odd midpoint grids (the centre is a node)
    auto midpoints = [n](int g, double half) {
        std::vector<Vec> out;
        IVec c = IVec::Zero(n);
        for (;;) {
            Vec u(n);
            for (int j = 0; j < n; ++j) u[j] = -half + (c[j] + 0.5) * 2.0 * half / g;
            out.push_back(u);
            int j = n - 1;
            while (j >= 0 && ++c[j] == g) {
                c[j] = 0;
                --j;
            }
            if (j < 0) break;
        }
        return out;
    };
    auto gridK = midpoints(n == 2 ? 7 : 5, 1.0);
    auto grid2K = midpoints(n == 2 ? 13 : 7, 2.0);
    for (int k = 0; k <= L; ++k)
        for (int i = 0; i < s.count(k); ++i) {
            double top = 0.0;
            for (const auto& z : V[k][i]) top = std::max(top, std::abs(z));
            if (top == 0.0) continue;
            std::vector<std::size_t> live;
            for (std::size_t q = 0; q < pts.size(); ++q)
                if (std::abs(V[k][i][q]) >= 0.1 * top && pts[q].norm() <= 0.5 * s.support_radius) live.push_back(q);
            if (live.empty()) continue;
            auto box = level_box(s, k, i);
            for (int t = 0; t < opt.translates; ++t) {
                Vec x0 = pts[live[std::size_t(rng.integer(0, long(live.size()) - 1))]];
                double sup = 0.0, avg = 0.0;
                for (const auto& u : gridK) sup = std::max(sup, std::abs(s.F(k, i, x0 + box.Tinv * u)));
                for (const auto& u : grid2K) avg += std::norm(s.F(k, i, x0 + box.Tinv * u));
                avg = std::sqrt(avg / double(grid2K.size()));
                if (sup == 0.0) continue;
                rep.C1 = std::max(rep.C1, avg > 0.0 ? sup / avg : std::numeric_limits<double>::infinity());
            }
        }
    rep.da1 = rep.C1 <= std::pow(4.0, n);

    // DA2: test bodies B_R and random planks; the overlap hypothesis is checked first
    struct Body {
        Region K;
        Mat dual;  // zeta in K^* iff |dual^T zeta|_1 <= 1 (plank) or |zeta| <= 1/r (ball)
        bool ball = false;
    };
    std::vector<Body> bodies;
    bodies.push_back({Region::ball(Vec::Zero(n), s.support_radius), Mat(), true});
    for (int b = 0; b < opt.planks; ++b) {
        int k = int(rng.integer(0, L));
        int i = int(rng.integer(0, s.count(k) - 1));
        auto box = level_box(s, k, i);
        Vec x0 = rng.in_ball(n, 0.5 * s.support_radius);
        bodies.push_back({Region::parallelepiped(x0, 2.0 * box.Tinv), box.Tinv, false});
    }
    auto in_dual = [&](const Body& B, const Vec& z) {
        if (B.ball) return z.norm() <= 1.0 / B.K.radius;
        return (B.dual.transpose() * z).cwiseAbs().sum() <= 1.0;
    };
    auto dual_point = [&](const Body& B) {
        Vec v(n);
        for (;;) {
            for (int j = 0; j < n; ++j) v[j] = rng.uniform(-1.0, 1.0);
            if (B.ball) {
                if (v.norm() <= 1.0) return Vec(v / B.K.radius);
            } else if (v.cwiseAbs().sum() <= 1.0) {
                return Vec(B.dual.transpose().inverse() * v);
            }
        }
    };
    // overlap of {Gamma(tau) + K^*} for the partition at level k2 inside gamma
    auto overlap = [&](const Body& B, int k2, int first, int count) {
        double worst = 0.0;
        double h = (s.curve.b() - s.curve.a()) / double(1 << k2);
        for (int t = first; t < first + count; ++t)
            for (int q = 0; q < 12; ++q) {
                double xi = s.curve.a() + (t + rng.uniform()) * h;
                Vec z = s.curve.point(xi) + dual_point(B);
                int c = 0;
                for (int t2 = first; t2 < first + count; ++t2) {
                    bool hit = false;
                    for (int e = 0; e <= 32 && !hit; ++e)
                        hit = in_dual(B, z - s.curve.point(s.curve.a() + (t2 + e / 32.0) * h));
                    c += hit;
                }
                worst = std::max(worst, double(c));
            }
        return worst;
    };
    for (const auto& B : bodies) {
        std::vector<Vec> xs(std::size_t(opt.body_samples));
        for (auto& x : xs) {
            if (B.ball) {
                x = rng.in_ball(n, B.K.radius);
            } else {
                x = B.K.center + B.K.A * cube_point(rng, n, 0.5);
            }
        }
        auto W = sample_all(xs);
        auto energy = [&](int k, int i) {
            double e = 0.0;
            for (const auto& z : W[k][i]) e += std::norm(z);
            return e;
        };
        for (int k = 0; k < L; ++k)
            for (int g = 0; g < s.count(k); ++g)
                for (int k2 : {k + 1, L}) {
                    int span = 1 << (k2 - k);
                    double ov = overlap(B, k2, g * span, span);
                    if (ov > 3.0) {
                        ++rep.da2_skipped;
                        continue;
                    }
                    rep.overlap = std::max(rep.overlap, ov);
                    double top = energy(k, g), bottom = 0.0;
                    for (int t = g * span; t < (g + 1) * span; ++t) bottom += energy(k2, t);
                    ++rep.da2_bodies;
                    if (top == 0.0) continue;
                    rep.C2 = std::max(rep.C2, bottom > 0.0 ? top / bottom : std::numeric_limits<double>::infinity());
                    if (k2 == k + 1 && L == k + 1) break;
                }
    }
    rep.da2 = rep.da2_bodies > 0 && rep.C2 <= std::pow(2.0, n);
    return rep;
}

MultibushVariant variant_from_string(const std::string& s) {
    if (s == "L") return MultibushVariant::L;
    if (s == "P") return MultibushVariant::P;
    if (s == "S") return MultibushVariant::S;
    throw ConfigError("unknown multibush variant '" + s + "'");
}

std::string to_string(MultibushVariant v) {
    switch (v) {
        case MultibushVariant::L: return "L";
        case MultibushVariant::P: return "P";
        case MultibushVariant::S: return "S";
    }
    return "?";
}

double multibush_ell(MultibushVariant v, int n, double R, double* exact) {
    double e;
    if (v == MultibushVariant::L)
        e = 1.0 / n - 2.0 / (n * n * (n + 1.0));
    else if (v == MultibushVariant::P)
        e = 2.0 / (n * (n + 1.0));
    else
        e = n == 2 ? 1.0 / 3.0 : 1.0 / n;
    double x = std::pow(R, e);
    if (exact) *exact = x;
    double lo = std::exp2(std::floor(std::log2(x) + 1e-12)), hi = 2.0 * lo;
    double ell = (x - lo <= hi - x) ? lo : hi;
    ell = std::max(ell, 4.0);
    double canon = std::exp2(std::ceil(std::log2(std::pow(R, 1.0 / n)) - 1e-12));
    return std::min(ell, canon);
}

namespace {

constexpr double kReach = 1.75;  // profile truncation in tile units
inline double profile(const Vec& u) { return std::exp(-kTwoPi * u.squaredNorm()); }
// the half-shifted tilings sum to 2^{n/2} per unit of profile, so each tube carries (d / 2^n)^{1/2}
inline double tube_amp(double ell, int n) { return std::sqrt(1.0 / ell) * std::exp2(-0.5 * n); }

std::vector<Vec> half_shifts(int n) {
    std::vector<Vec> out;
    for (int mask = 0; mask < (1 << n); ++mask) {
        Vec s(n);
        for (int j = 0; j < n; ++j) s[j] = (mask >> j & 1) ? 0.5 : 0.0;
        out.push_back(s);
    }
    return out;
}

// tile index packed into 63 bits
std::uint64_t tile_key(const int* m, int n) {
    int bits = 63 / n;
    long off = 1L << (bits - 1);
    std::uint64_t k = 0;
    for (int j = 0; j < n; ++j) {
        if (m[j] <= -off || m[j] >= off) throw DomainError("tile index out of range");
        k = (k << bits) | std::uint64_t(m[j] + off);
    }
    return k;
}
std::uint64_t tile_key(const IVec& m) { return tile_key(m.data(), int(m.size())); }

// tiles whose profile centre lies within kReach of y; f(m, key, |y - m|^2)
template <class F>
void for_each_near(const Vec& y, int n, F&& f) {
    int lo[8], hi[8], m[8];
    for (int j = 0; j < n; ++j) {
        lo[j] = int(std::ceil(y[j] - kReach));
        hi[j] = int(std::floor(y[j] + kReach));
        m[j] = lo[j];
    }
    for (;;) {
        double r2 = 0.0;
        for (int j = 0; j < n; ++j) r2 += (y[j] - m[j]) * (y[j] - m[j]);
        if (r2 <= kReach * kReach) f(m, tile_key(m, n), r2);
        int j = n - 1;
        while (j >= 0 && ++m[j] > hi[j]) {
            m[j] = lo[j];
            --j;
        }
        if (j < 0) break;
    }
}

}  // namespace

MultibushField::MultibushField(const CurveSpec& curve, const MultibushPlan& plan) : plan_(plan) {
    int D = int(std::lround(plan.ell));
    for (int i = 0; i < D; ++i) boxes_.push_back(make_box(curve, curve.a() + (i + 0.5) * (curve.b() - curve.a()) / D, 1.0 / plan.ell, i));
    shifts_ = half_shifts(plan.n);
    index_.resize(boxes_.size() * shifts_.size());
    for (std::size_t t = 0; t < plan.tubes.size(); ++t) {
        const auto& tb = plan.tubes[t];
        index_[std::size_t(tb.dir) * shifts_.size() + std::size_t(tb.shift)][tile_key(tb.m)] = int(t);
    }
    fill_ = plan.variant != MultibushVariant::S;
}

double MultibushField::tube_value(const Tube& t, const Vec& x) const {
    const auto& b = boxes_[std::size_t(t.dir)];
    return tube_amp(plan_.ell, plan_.n) * profile(b.T * x - t.m.cast<double>() - shifts_[std::size_t(t.shift)]);
}

cplx MultibushField::F_tau(int dir, const Vec& x) const {
    const auto& b = boxes_[std::size_t(dir)];
    int n = plan_.n;
    Vec y = b.T * x;
    double amp = tube_amp(plan_.ell, n);
    cplx acc(0.0, 0.0);
    for (std::size_t s = 0; s < shifts_.size(); ++s) {
        const auto& idx = index_[std::size_t(dir) * shifts_.size() + s];
        Vec ys = y - shifts_[s];
        for_each_near(ys, n, [&](const int* m, std::uint64_t key, double r2) {
            auto it = idx.find(key);
            cplx c;
            if (it != idx.end()) {
                c = plan_.tubes[std::size_t(it->second)].c;
            } else {
                if (!fill_) return;
                Vec centre = shifts_[s];
                for (int j = 0; j < n; ++j) centre[j] += m[j];
                if ((b.Tinv * centre).norm() > plan_.R) return;
                c = 1.0;
            }
            acc += c * std::exp(-kTwoPi * r2);
        });
    }
    return amp * acc * expi(-kTwoPi * x.dot(b.center));
}

cplx MultibushField::F(const Vec& x) const {
    cplx acc(0.0, 0.0);
    for (int d = 0; d < directions(); ++d) acc += F_tau(d, x);
    return acc;
}

namespace {

// closed form of the inner product of two modulated Gaussian tubes
cplx gauss_inner(const AnisotropicBox& b1, const Vec& a, const AnisotropicBox& b2, const Vec& b) {
    int n = int(a.size());
    Mat A = kTwoPi * (b1.T.transpose() * b1.T + b2.T.transpose() * b2.T);
    Eigen::VectorXcd B(n);
    Vec lin = 2.0 * kTwoPi * (b1.T.transpose() * a + b2.T.transpose() * b);
    Vec dxi = b1.center - b2.center;
    for (int j = 0; j < n; ++j) B[j] = cplx(lin[j], kTwoPi * dxi[j]);
    double C = -kTwoPi * (a.squaredNorm() + b.squaredNorm());
    Eigen::MatrixXcd Ainv = A.inverse().cast<cplx>();
    cplx q = (B.transpose() * Ainv * B)(0, 0) / 4.0;
    return std::sqrt(std::pow(kPi, n) / A.determinant()) * std::exp(q + C);
}

}  // namespace

MultibushResult build_multibush(MultibushVariant variant, int n, double R, std::uint64_t seed,
                                const MultibushOptions& opt) {
    if (n < 2) throw ConfigError("multibush needs n >= 2");
    if (n == 2 && variant != MultibushVariant::S) throw ConfigError("n = 2 supports the S variant only");
    auto curve = CurveSpec::moment(n);
    MultibushResult res;
    auto& plan = res.plan;
    plan.variant = variant;
    plan.n = n;
    plan.R = R;
    plan.seed = seed;
    plan.ell = multibush_ell(variant, n, R, &plan.ell_exact);
    double expo = variant == MultibushVariant::L ? (n - 1) / 2.0 + 1.0 / n
                  : variant == MultibushVariant::P ? n - 1.0 : 1.0;
    plan.target = long(std::llround(std::pow(R, expo)));
    long N = std::max<long>(n + 2, long(std::llround(opt.density * std::pow(R, expo))));
    long mu = std::max<long>(n + 2, long(std::ceil(std::log(R))));
    CarberyOptions copt;
    copt.check = HullCheck::None;
    res.points = carbery_points(n, N, mu, R - 1.0, seed, copt);
    res.w = multibush_weight(res.points);

    int D = int(std::lround(plan.ell));
    std::vector<AnisotropicBox> boxes;
    for (int i = 0; i < D; ++i) boxes.push_back(make_box(curve, curve.a() + (i + 0.5) * (curve.b() - curve.a()) / D, 1.0 / plan.ell, i));
    auto shifts = half_shifts(n);
    std::size_t S = shifts.size();
    std::vector<Vec> rownorm;
    for (const auto& b : boxes) rownorm.push_back(b.T.rowwise().norm());

    // greedy ball selection (seed-shuffled scan, first qualifying ball accepted)
    std::vector<LatticeMap<char>> blocked(std::size_t(D) * S);
    std::vector<std::size_t> order(res.points.points.size());
    std::iota(order.begin(), order.end(), 0);
    Rng rng(seed ^ 0x5DEECE66DULL);
    for (std::size_t i = order.size(); i > 1; --i) std::swap(order[i - 1], order[std::size_t(rng.integer(0, long(i) - 1))]);
    int need = (D + 1) / 2;
    for (int pass = 0; pass < opt.greedy_passes; ++pass)
        for (std::size_t oi : order) {
            const IVec& p = res.points.points[oi];
            if (std::find(plan.balls.begin(), plan.balls.end(), p) != plan.balls.end()) continue;
            Vec x = p.cast<double>();
            std::vector<Tube> chosen;
            for (int d = 0; d < D; ++d) {
                Vec y = boxes[d].T * x;
                for (std::size_t s = 0; s < S; ++s) {
                    Vec ys = y - shifts[s];
                    IVec m(n);
                    bool inside = true;
                    for (int j = 0; j < n; ++j) {
                        m[j] = int(std::lround(ys[j]));
                        inside = inside && std::abs(ys[j] - m[j]) + rownorm[d][j] <= 0.5;
                    }
                    if (!inside || blocked[std::size_t(d) * S + s].count(m)) continue;
                    chosen.push_back({d, int(s), m, cplx(1.0, 0.0)});
                    break;
                }
            }
            if (int(chosen.size()) < need) continue;
            std::vector<int> ids;
            for (auto& t : chosen) {
                ids.push_back(int(plan.tubes.size()));
                plan.tubes.push_back(t);
            }
            plan.balls.push_back(p);
            plan.ball_tubes.push_back(ids);
            // block every tile meeting the unit ball
            for (int d = 0; d < D; ++d) {
                Vec y = boxes[d].T * x;
                for (std::size_t s = 0; s < S; ++s) {
                    Vec ys = y - shifts[s];
                    IVec lo(n), hi(n);
                    for (int j = 0; j < n; ++j) {
                        lo[j] = int(std::ceil(ys[j] - 0.5 - rownorm[d][j]));
                        hi[j] = int(std::floor(ys[j] + 0.5 + rownorm[d][j]));
                    }
                    IVec m = lo;
                    for (;;) {
                        blocked[std::size_t(d) * S + s][m] = 1;
                        int j = n - 1;
                        while (j >= 0 && ++m[j] > hi[j]) {
            m[j] = lo[j];
            --j;
        }
                        if (j < 0) break;
                    }
                }
            }
        }
    long m = long(plan.balls.size());
    double logR = std::log(R);
    res.c_balls = double(m) / (std::pow(logR, -2.0) * double(plan.target));
    if (m == 0 || res.c_balls < 0.05)
        throw ConstructionError(fmt::format("greedy selection stalled at {} balls", m), m);

    // forward phase alignment; tiles containing x_j without a phase are aligned there
    std::vector<std::unordered_map<std::uint64_t, int>> phased(std::size_t(D) * S);
    std::vector<std::size_t> align_order(static_cast<std::size_t>(m));
    std::iota(align_order.begin(), align_order.end(), 0);
    if (opt.permute)
        for (std::size_t i = align_order.size(); i > 1; --i)
            std::swap(align_order[i - 1], align_order[std::size_t(rng.integer(0, long(i) - 1))]);
    std::vector<Tube> all;
    double amp = tube_amp(plan.ell, n);
    plan.aligned.assign(std::size_t(m), 0.0);
    for (std::size_t j : align_order) {
        Vec x = plan.balls[j].cast<double>();
        cplx Sj(0.0, 0.0);
        std::vector<Tube> fresh;
        for (int d = 0; d < D; ++d) {
            Vec y = boxes[d].T * x;
            cplx mod = expi(-kTwoPi * x.dot(boxes[d].center));
            for (std::size_t s = 0; s < S; ++s) {
                Vec ys = y - shifts[s];
                auto& mp = phased[std::size_t(d) * S + s];
                for_each_near(ys, n, [&](const int*, std::uint64_t key, double r2) {
                    auto it = mp.find(key);
                    if (it != mp.end()) Sj += all[std::size_t(it->second)].c * amp * std::exp(-kTwoPi * r2) * mod;
                });
            }
        }
        for (int id : plan.ball_tubes[j]) fresh.push_back(plan.tubes[std::size_t(id)]);
        if (variant != MultibushVariant::S)
            for (int d = 0; d < D; ++d) {
                Vec y = boxes[d].T * x;
                for (std::size_t s = 0; s < S; ++s) {
                    Vec ys = y - shifts[s];
                    IVec mm(n);
                    for (int q = 0; q < n; ++q) mm[q] = int(std::lround(ys[q]));
                    Vec centre = boxes[d].Tinv * (mm.cast<double>() + shifts[s]);
                    if (centre.norm() > R) continue;
                    bool dup = false;
                    for (const auto& f : fresh) dup = dup || (f.dir == d && f.shift == int(s) && f.m == mm);
                    if (!dup) fresh.push_back({d, int(s), mm, cplx(1.0, 0.0)});
                }
            }
        double phase = std::abs(Sj) > 0.0 ? std::arg(Sj) : 0.0;
        double pred = std::abs(Sj);
        for (auto& t : fresh) {
            auto& mp = phased[std::size_t(t.dir) * S + std::size_t(t.shift)];
            std::uint64_t key = tile_key(t.m);
            if (mp.count(key)) continue;
            Vec ys = boxes[t.dir].T * x - shifts[std::size_t(t.shift)];
            double v = amp * profile(ys - t.m.cast<double>());
            t.c = expi(phase + kTwoPi * x.dot(boxes[t.dir].center));
            pred += v;
            mp[key] = int(all.size());
            all.push_back(t);
        }
        plan.aligned[j] = pred;
    }
    // ball_tubes re-indexed into the phased list
    for (std::size_t j = 0; j < plan.ball_tubes.size(); ++j)
        for (int& id : plan.ball_tubes[j]) {
            const auto& t = plan.tubes[std::size_t(id)];
            id = phased[std::size_t(t.dir) * S + std::size_t(t.shift)].at(tile_key(t.m));
        }
    plan.tubes = std::move(all);

    MultibushField field(curve, plan);
    plan.achieved.assign(std::size_t(m), 0.0);
    parallel_for(std::size_t(m), [&](std::size_t j) { plan.achieved[j] = std::abs(field.F(plan.balls[j].cast<double>())); });
    res.min_alignment = std::numeric_limits<double>::infinity();
    for (long j = 0; j < m; ++j) res.min_alignment = std::min(res.min_alignment, plan.achieved[j] / plan.aligned[j]);

    const auto& wp = res.w.points();
    res.energy_w = parallel_sum<double>(wp.size(), [&](std::size_t i) {
        return std::norm(field.F(wp[i].cast<double>())) * res.w.values()[i];
    });

    if (variant == MultibushVariant::S) {
        // exact Gram sum over the involved tubes
        const auto& tb = plan.tubes;
        std::vector<Vec> off(tb.size());
        for (std::size_t i = 0; i < tb.size(); ++i) off[i] = tb[i].m.cast<double>() + shifts[std::size_t(tb[i].shift)];
        double total = parallel_sum<double>(tb.size(), [&](std::size_t i) {
            double acc = 0.0;
            Vec ci = boxes[tb[i].dir].Tinv * off[i];
            for (std::size_t k = 0; k < tb.size(); ++k) {
                Vec ck = boxes[tb[k].dir].Tinv * off[k];
                if ((ci - ck).norm() > 2.0 * R + 4.0) continue;
                cplx g = gauss_inner(boxes[tb[i].dir], off[i], boxes[tb[k].dir], off[k]);
                acc += std::real(tb[i].c * std::conj(tb[k].c) * g);
            }
            return acc * tube_amp(plan.ell, n) * tube_amp(plan.ell, n);
        });
        res.norm2 = total;
        res.norm2_sigma = 0.0;
        res.norm2_upper = total;
    } else {
        double margin = 0.0;
        for (const auto& b : boxes) margin = std::max(margin, 0.5 * b.Tinv.cwiseAbs().rowwise().sum().norm() * (1.0 + 2.0 * kReach));
        double rad = R + margin;
        double vol = std::pow(kPi, 0.5 * n) / std::tgamma(0.5 * n + 1.0) * std::pow(rad, n);
        std::vector<Vec> xs(std::size_t(opt.mc_samples));
        Rng mc(seed ^ 0xA5A5A5A5ULL);
        for (auto& x : xs) x = mc.in_ball(n, rad);
        std::vector<double> v(xs.size());
        parallel_for(xs.size(), [&](std::size_t i) { v[i] = std::norm(field.F(xs[i])); });
        double mean = std::accumulate(v.begin(), v.end(), 0.0) / double(v.size());
        double var = 0.0;
        for (double t : v) var += (t - mean) * (t - mean);
        var /= double(v.size() - 1);
        res.norm2 = vol * mean;
        res.norm2_sigma = vol * std::sqrt(var / double(v.size()));
        res.norm2_upper = res.norm2 + 3.0 * res.norm2_sigma;
    }

    FamilyKind kind = variant == MultibushVariant::L ? FamilyKind::L
                      : variant == MultibushVariant::P ? FamilyKind::P : FamilyKind::S;
    res.sup = sup_mass(res.w, make_family(curve, R, kind), 1.0).value;
    res.ratio = res.energy_w / (res.sup * res.norm2_upper);
    ExponentTable tab(n);
    res.lower_exponent = variant == MultibushVariant::L ? to_double(tab.e_L)
                         : variant == MultibushVariant::P ? to_double(tab.thm54_ii) : to_double(tab.thm54_iii);
    res.c_ratio = res.ratio / (std::pow(logR, -3.0) * std::pow(R, res.lower_exponent));
    res.energy_bound = res.norm2_upper / (variant == MultibushVariant::S ? std::pow(R, (n + 3) / 2.0) : std::pow(R, n));

    // hierarchy: packets at scale 1/l, sums above, d^{1/2} 1_{B_R} below
    AxiomaticStructure& st = res.structure;
    st.curve = curve;
    st.R = R;
    st.levels = int(std::lround(std::log2(std::pow(R, 1.0 / n))));
    st.support_radius = R;
    int kl = int(std::lround(std::log2(plan.ell)));
    auto fld = std::make_shared<MultibushField>(field);
    st.F = [fld, kl, R](int level, int index, const Vec& x) -> cplx {
        if (level == kl) return fld->F_tau(index, x);
        if (level > kl) return x.norm() <= R ? cplx(std::ldexp(1.0, -level / 2) * (level % 2 ? std::sqrt(0.5) : 1.0), 0.0) : cplx(0.0, 0.0);
        cplx acc(0.0, 0.0);
        int span = 1 << (kl - level);
        for (int t = index * span; t < (index + 1) * span; ++t) acc += fld->F_tau(t, x);
        return acc;
    };
    return res;
}

}  // namespace mtlab
