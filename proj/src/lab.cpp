#include "mtlab/lab.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numeric>

#include "mtlab/bump.hpp"
#include "mtlab/errors.hpp"
#include "mtlab/rng.hpp"

namespace mtlab {

bool is_extension_id(const std::string& id) { return id == "thm11" || id == "thm16" || id == "thm41"; }

namespace {

void check_id(const std::string& id) {
    const auto& ids = inequality_ids();
    if (std::find(ids.begin(), ids.end(), id) == ids.end()) throw ConfigError("unknown inequality id '" + id + "'");
}

const CurveSpec& instance_curve(const InequalityInstance& inst) {
    if (inst.f) return inst.f->boxes().curve;
    if (inst.g) return inst.g->curve;
    throw ConfigError("instance has neither a field nor a density");
}

// w restricted to the lattice points of B_R
Weight restrict_to_ball(const Weight& w, double R) {
    Weight out(w.n());
    if (w.is_constant()) {
        for (const auto& p : lattice_ball(w.n(), R)) out.add(p, w.constant_value());
        return out;
    }
    for (std::size_t i = 0; i < w.size(); ++i)
        if (w.points()[i].cast<double>().norm() <= R) out.add(w.points()[i], w.values()[i]);
    return out;
}

double family_sup(const Weight& w, const CurveSpec& curve, double R, FamilyKind kind, double r,
                  double eps = 0.0) {
    if (!w.is_constant() && w.size() == 0) return 0.0;
    if (w.is_constant() && kind == FamilyKind::S) return std::numeric_limits<double>::infinity();
    return sup_mass(w, make_family(curve, R, kind, 1, eps), r).value;
}

// sum of w^r over the dilate of each packet's plank
std::vector<double> plank_masses(const SleeveField& f, const std::vector<WavePacketCoeff>& pk,
                                 const Weight& w, double r, double dilate) {
    int n = f.n();
    std::vector<double> out(pk.size(), 0.0);
    parallel_for(pk.size(), [&](std::size_t i) {
        const auto& box = f.boxes()[pk[i].theta];
        if (w.is_constant()) {
            out[i] = std::pow(w.constant_value(), r) * std::pow(dilate, n) / box.detT;
            return;
        }
        Region T = plank_region(box, make_plank(box, pk[i].m));
        double acc = 0.0;
        for (std::size_t j = 0; j < w.size(); ++j)
            if (T.contains(w.points()[j].cast<double>(), dilate)) acc += std::pow(w.values()[j], r);
        out[i] = acc;
    });
    return out;
}

double thm22_rhs(const InequalityInstance& inst) {
    const SleeveField& f = *inst.f;
    int n = f.n();
    double R = f.R(), r = inst.r_value(), p = 2.0 * r / (r - 1.0);
    double norm2 = f.norm2();
    if (norm2 == 0.0) return 0.0;
    auto pk = f.packets();
    std::vector<double> l2(pk.size()), vol(pk.size());
    for (std::size_t i = 0; i < pk.size(); ++i) {
        const auto& box = f.boxes()[pk[i].theta];
        l2[i] = packet_l2sq(box, pk[i].a);
        vol[i] = 1.0 / box.detT;
    }
    double tail_norm = std::pow(norm2, 2.0 / p);
    auto sum_at = [&](double dilate) {
        auto mass = plank_masses(f, pk, inst.w, r, dilate);
        double s = 0.0;
        for (std::size_t i = 0; i < pk.size(); ++i) s += l2[i] * mass[i] / (vol[i] * std::pow(dilate, n));
        return s;
    };
    double rho = std::pow(R, inst.eps);
    // main term: |T| in the denominator, not |2 R^eps T|
    double main = std::pow(R, inst.eps) * std::pow(sum_at(2.0 * rho) * std::pow(2.0 * rho, n), 1.0 / r) * tail_norm;
    double rap = 0.0;
    for (int m = 1; m <= 12; ++m) {
        double t = std::pow(2.0, -m * inst.K) * std::pow(sum_at(std::ldexp(1.0, m)), 1.0 / r);
        rap = std::max(rap, t);
    }
    return main + std::pow(R, -inst.K) * rap * tail_norm;
}

}  // namespace

int InequalityInstance::n() const {
    if (f) return f->n();
    if (g) return g->curve.n();
    return w.n();
}

double InequalityInstance::r_value() const {
    if (r > 0.0) return r;
    return to_double(ExponentTable(n()).r);
}

double weighted_energy(const SleeveField& f, const Weight& w) {
    if (w.n() != f.n()) throw DomainError("weight and field dimensions differ");
    if (w.is_constant()) return w.constant_value() * f.norm2();
    const auto& pts = w.points();
    return parallel_sum<double>(pts.size(), [&](std::size_t i) {
        return std::norm(f.eval(pts[i].cast<double>())) * w.values()[i];
    });
}

double weighted_energy(const Field& f, const Weight& w) {
    const Grid& g = f.grid;
    if (w.n() != g.n()) throw DomainError("weight and field dimensions differ");
    if (!g.basis.isIdentity() || g.origin.cwiseAbs().maxCoeff() > 0.0)
        throw DomainError("weighted energy needs the unit lattice");
    if (w.is_constant()) return w.constant_value() * f.norm2();
    double acc = 0.0;
    auto dims = g.dims();
    for (std::size_t i = 0; i < w.size(); ++i) {
        const IVec& p = w.points()[i];
        std::size_t flat = 0;
        bool inside = true;
        for (int j = 0; j < g.n(); ++j) {
            if (p[j] < g.lo[j] || p[j] > g.hi[j]) {
                inside = false;
                break;
            }
            flat = flat * dims[j] + std::size_t(p[j] - g.lo[j]);
        }
        if (!inside) throw DomainError("weight support leaves the field grid");
        acc += std::norm(f.v[flat]) * w.values()[i];
    }
    return acc;
}

std::vector<cplx> extend_lattice(const CurveDensity& g, const std::vector<IVec>& pts, double R) {
    if (g.step > max_extend_step(g.curve, R))
        throw QuadratureError(fmt::format("curve step {:.3e} exceeds {:.3e} at R = {}", g.step,
                                          max_extend_step(g.curve, R), R));
    std::size_t K = g.size(), P = pts.size();
    std::vector<cplx> out(P);
    if (P == 0) return out;
    int n = g.curve.n();
    Mat G(K, n);
    Eigen::VectorXcd c(K), z(K);
    for (std::size_t k = 0; k < K; ++k) {
        G.row(k) = g.curve.point(g.xi[k]).transpose();
        c[k] = g.w[k] * g.g[k];
        z[k] = expi(kTwoPi * G(k, n - 1));
    }
    std::vector<std::size_t> order(P);
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](auto a, auto b) {
        return std::lexicographical_compare(pts[a].data(), pts[a].data() + n, pts[b].data(), pts[b].data() + n);
    });
    // rows share every coordinate but the last
    std::vector<std::size_t> starts;
    for (std::size_t i = 0; i < P; ++i)
        if (i == 0 || pts[order[i]].head(n - 1) != pts[order[i - 1]].head(n - 1)) starts.push_back(i);
    starts.push_back(P);
    parallel_for(starts.size() - 1, [&](std::size_t row) {
        const IVec& first = pts[order[starts[row]]];
        Eigen::VectorXcd u(K), v(K);
        for (std::size_t k = 0; k < K; ++k) {
            double ph = 0.0;
            for (int j = 0; j + 1 < n; ++j) ph += first[j] * G(k, j);
            u[k] = c[k] * expi(kTwoPi * ph);
        }
        int last = 0, steps = 0;
        for (std::size_t i = starts[row]; i < starts[row + 1]; ++i) {
            int x = pts[order[i]][n - 1];
            if (i > starts[row] && x == last + 1 && steps < 64) {
                v = v.cwiseProduct(z);
                ++steps;
            } else {
                for (std::size_t k = 0; k < K; ++k) v[k] = u[k] * expi(kTwoPi * x * G(k, n - 1));
                steps = 0;
            }
            last = x;
            out[order[i]] = v.sum();
        }
    });
    return out;
}

double weighted_extension_energy(const CurveDensity& g, const Weight& w, double R) {
    Weight wb = restrict_to_ball(w, R);
    auto vals = extend_lattice(g, wb.points(), R);
    double acc = 0.0;
    for (std::size_t i = 0; i < vals.size(); ++i) acc += std::norm(vals[i]) * wb.values()[i];
    return acc;
}

double lhs_functional(const InequalityInstance& inst) {
    check_id(inst.id);
    if (is_extension_id(inst.id)) {
        if (!inst.g) throw ConfigError(inst.id + " needs an extension density");
        return weighted_extension_energy(*inst.g, inst.w, inst.R);
    }
    if (!inst.f) throw ConfigError(inst.id + " needs a sleeve field");
    return weighted_energy(*inst.f, inst.w);
}

double rhs_functional(const InequalityInstance& inst) {
    check_id(inst.id);
    const CurveSpec& curve = instance_curve(inst);
    int n = curve.n();
    ExponentTable tab(n);
    double r = inst.r_value();
    double power = to_double(tab.rhs_power(inst.id));
    if (is_extension_id(inst.id)) {
        if (!inst.g) throw ConfigError(inst.id + " needs an extension density");
        double R = inst.R;
        double g2 = inst.g->norm2();
        if (g2 == 0.0) return 0.0;
        Weight wb = restrict_to_ball(inst.w, R);
        FamilyKind kind = inst.id == "thm16" ? FamilyKind::P : FamilyKind::S;
        double sup = family_sup(wb, curve, R, kind, r);
        return std::pow(R, inst.eps) * std::pow(R, power) * sup * g2;
    }
    if (!inst.f) throw ConfigError(inst.id + " needs a sleeve field");
    if (inst.id == "thm22") return thm22_rhs(inst);
    double R = inst.f->R();
    double f2 = inst.f->norm2();
    if (f2 == 0.0) return 0.0;
    double pre = std::pow(R, inst.eps) * std::pow(R, power);
    if (inst.id == "cor31a") {
        double main = family_sup(inst.w, curve, R, FamilyKind::T, r, inst.eps);
        double main_r = std::pow(main, r);
        // RapDec part: m = 1 on the 2-dilated family, m >= 2 bounded through the total mass
        double d1 = std::pow(family_sup(inst.w, curve, R, FamilyKind::T, r, 1.0 / std::log2(R)), r);
        double rap;
        if (inst.w.is_constant()) {
            rap = std::pow(2.0, n - inst.K) * std::pow(main, r) / std::pow(R, n * inst.eps);
        } else {
            rap = std::max(std::pow(2.0, -inst.K) * d1, std::pow(2.0, -2.0 * inst.K) * inst.w.total(r));
        }
        return pre * std::pow(main_r + std::pow(R, -inst.K) * rap, 1.0 / r) * f2;
    }
    FamilyKind kind = inst.id == "cor33" ? FamilyKind::L : inst.id == "cor34" ? FamilyKind::P : FamilyKind::S;
    return pre * family_sup(inst.w, curve, R, kind, r) * f2;
}

Evaluation evaluate(const InequalityInstance& inst) {
    Evaluation e;
    e.lhs = lhs_functional(inst);
    e.rhs = rhs_functional(inst);
    e.ratio = e.rhs > 0.0 ? e.lhs / e.rhs : (e.lhs > 0.0 ? std::numeric_limits<double>::infinity() : 0.0);
    return e;
}

SlopeFit fit_loglog(const std::vector<double>& x, const std::vector<double>& y) {
    if (x.size() != y.size()) throw ConfigError("fit inputs differ in length");
    std::vector<double> xs(x);
    std::sort(xs.begin(), xs.end());
    if (std::unique(xs.begin(), xs.end()) - xs.begin() < 3) throw ConfigError("slope fit needs at least 3 scales");
    SlopeFit fit;
    std::vector<double> lx, ly;
    for (std::size_t i = 0; i < x.size(); ++i) {
        if (!(x[i] > 0.0) || !(y[i] > 0.0) || !std::isfinite(y[i])) {
            fit.degenerate = true;
            fit.slope = fit.intercept = fit.residual = std::numeric_limits<double>::quiet_NaN();
            return fit;
        }
        lx.push_back(std::log2(x[i]));
        ly.push_back(std::log2(y[i]));
    }
    double N = double(lx.size());
    double mx = std::accumulate(lx.begin(), lx.end(), 0.0) / N;
    double my = std::accumulate(ly.begin(), ly.end(), 0.0) / N;
    double sxx = 0.0, sxy = 0.0;
    for (std::size_t i = 0; i < lx.size(); ++i) {
        sxx += (lx[i] - mx) * (lx[i] - mx);
        sxy += (lx[i] - mx) * (ly[i] - my);
    }
    fit.slope = sxy / sxx;
    fit.intercept = my - fit.slope * mx;
    double ss = 0.0;
    for (std::size_t i = 0; i < lx.size(); ++i) {
        double e = ly[i] - fit.intercept - fit.slope * lx[i];
        ss += e * e;
    }
    fit.residual = std::sqrt(ss / N);
    return fit;
}

SweepResult exponent_sweep(const std::string& id, int n, const InstanceGenerator& gen,
                           const std::vector<double>& Rs) {
    check_id(id);
    std::vector<double> uniq(Rs);
    std::sort(uniq.begin(), uniq.end());
    if (std::unique(uniq.begin(), uniq.end()) - uniq.begin() < 3) throw ConfigError("sweep needs at least 3 scales");
    SweepResult res;
    res.id = id;
    res.n = n;
    std::map<double, double> best;
    std::map<std::string, std::pair<std::vector<double>, std::vector<double>>> recipes;
    for (double R : Rs) {
        for (const auto& inst : gen(R)) {
            if (inst.id != id) throw ConfigError("generator produced a different inequality id");
            Evaluation e = evaluate(inst);
            double Rv = inst.f ? inst.f->R() : inst.R;
            res.rows.push_back({id, n, Rv, e.lhs, e.rhs, e.ratio, inst.label});
            best[Rv] = std::max(best[Rv], e.ratio);
            res.max_ratio = std::max(res.max_ratio, e.ratio);
            if (!inst.label.empty()) {
                recipes[inst.label].first.push_back(Rv);
                recipes[inst.label].second.push_back(e.ratio);
            }
        }
    }
    std::vector<double> x, y;
    for (const auto& row : res.rows) {
        x.push_back(row.R);
        y.push_back(row.ratio);
    }
    res.fit = fit_loglog(x, y);
    std::vector<double> bx, by;
    for (const auto& [R, v] : best) {
        bx.push_back(R);
        by.push_back(v);
    }
    res.fit_max = fit_loglog(bx, by);
    res.max_recipe_slope = -std::numeric_limits<double>::infinity();
    for (const auto& [label, xy] : recipes) {
        std::vector<double> xs(xy.first);
        std::sort(xs.begin(), xs.end());
        if (std::unique(xs.begin(), xs.end()) - xs.begin() < 3) continue;
        SlopeFit f = fit_loglog(xy.first, xy.second);
        if (!f.degenerate) res.max_recipe_slope = std::max(res.max_recipe_slope, f.slope);
    }
    return res;
}

namespace {

std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t a, std::uint64_t b = 0) {
    std::uint64_t h = seed * 0x9E3779B97F4A7C15ULL ^ (a + 0x632BE59BD9B4E019ULL) * 0xBF58476D1CE4E5B9ULL;
    h ^= (b + 0x94D049BB133111EBULL) * 0xD6E8FEB86659FD93ULL;
    h ^= h >> 31;
    return h;
}

IVec round_vec(const Vec& v) {
    IVec out(v.size());
    for (int j = 0; j < v.size(); ++j) out[j] = int(std::lround(v[j]));
    return out;
}

Weight region_weight(const Region& reg, double R) { return Weight::indicator(reg, R); }

// 1-tube of length 2R along the final Frenet direction at xi, through x0
Region tube_region(const CurveSpec& curve, double xi, const Vec& x0, double R) {
    int n = curve.n();
    FrenetFrame fr = frenet_frame(curve, xi);
    Mat A(n, n);
    for (int j = 0; j < n; ++j) A.col(j) = fr.e.col(j) * (j == n - 1 ? 2.0 * R : 1.0);
    return Region::parallelepiped(x0, A);
}

Weight random_weight(const std::string& kind, const CurveSpec& curve, double R, Rng& rng,
                     const SleeveField* f, const std::vector<WavePacketCoeff>* pk) {
    int n = curve.n();
    double t = rng.uniform(curve.a(), curve.b());
    Vec x0 = rng.in_ball(n, 0.5 * R);
    if (kind == "const") return Weight::constant(n, rng.uniform(0.5, 2.0));
    if (kind == "ball") return region_weight(Region::ball(x0, std::pow(R, 1.0 / n)), 2.0 * R);
    if (kind == "slab") return region_weight(Region::slab(x0, frenet_frame(curve, t).e.col(0), 0.5), R);
    if (kind == "tube") return region_weight(tube_region(curve, t, x0, R), R);
    if (kind == "bump") {
        double s = std::sqrt(R);
        return Weight::sampled(n, 3.0 * s, [&](const Vec& x) { return bump::Phi(x / s); }).translated(round_vec(x0));
    }
    if (kind == "plank" && f && pk && !pk->empty()) {
        const auto& c = (*pk)[std::size_t(rng.integer(0, long(pk->size()) - 1))];
        const auto& box = f->boxes()[c.theta];
        return region_weight(plank_region(box, make_plank(box, c.m)), 2.0 * R);
    }
    // sparse random points with random heights
    Weight w(n);
    long count = rng.integer(long(std::sqrt(R)), long(R));
    for (long i = 0; i < count; ++i) w.add(round_vec(rng.in_ball(n, R)), rng.uniform(0.1, 1.0));
    return w;
}

SleeveField random_packets(const std::string& kind, const BoxSet& boxes, Rng& rng) {
    SleeveField f(boxes);
    int B = int(boxes.size());
    double R = boxes.R();
    if (kind == "single") {
        int th = int(rng.integer(0, B - 1));
        f.add_generator(th, Profile::Packet, plank_index(boxes[th], rng.in_ball(boxes.n(), 0.5 * R)), 1.0);
    } else if (kind == "bush") {
        for (int th = 0; th < B; ++th)
            f.add_generator(th, Profile::Packet, plank_index(boxes[th], Vec::Zero(boxes.n())), rng.unimodular());
    } else {
        long count = rng.integer(4, 24);
        for (long i = 0; i < count; ++i) {
            int th = int(rng.integer(0, B - 1));
            f.add_generator(th, Profile::Packet, plank_index(boxes[th], rng.in_ball(boxes.n(), 0.5 * R)), rng.cnormal());
        }
    }
    return f;
}

CurveDensity random_density(const std::string& kind, const CurveSpec& curve, double R, Rng& rng) {
    int n = curve.n();
    if (kind == "arcs") {
        long total = long(std::floor(curve.total_length() * R));
        long V = rng.integer(1, std::min<long>(total, 16));
        std::vector<long> slots(total);
        std::iota(slots.begin(), slots.end(), 0);
        std::vector<double> off;
        std::vector<cplx> a;
        for (long v = 0; v < V; ++v) {
            long j = rng.integer(v, total - 1);
            std::swap(slots[v], slots[j]);
            off.push_back(double(slots[v]) / R);
            a.push_back(rng.cnormal());
        }
        return arc_density(curve, R, a, off);
    }
    if (kind == "focus") {
        Vec x0 = rng.in_ball(n, 0.5 * R);
        return density_for_direct_sum(curve, [](double) { return cplx(1.0, 0.0); }, R).modulated(x0);
    }
    if (kind == "trig") {
        std::vector<cplx> a(6);
        std::vector<int> k(6);
        for (int i = 0; i < 6; ++i) {
            a[i] = rng.cnormal();
            k[i] = int(rng.integer(-8, 8));
        }
        return density_for_direct_sum(curve, [a, k](double t) {
            cplx s(0.0, 0.0);
            for (int i = 0; i < 6; ++i) s += a[i] * expi(kTwoPi * k[i] * t);
            return s;
        }, R);
    }
    return density_for_direct_sum(curve, [](double) { return cplx(1.0, 0.0); }, R);
}

}  // namespace

std::vector<InequalityInstance> random_instances(const std::string& id, const CurveSpec& curve, double R,
                                                 int count, std::uint64_t seed) {
    check_id(id);
    static const std::vector<std::string> packet_kinds{"random", "bush", "single"};
    static const std::vector<std::string> density_kinds{"one", "trig", "arcs", "focus"};
    std::vector<std::string> weight_kinds{"points", "ball", "slab", "tube", "bump", "plank", "const"};
    if (id == "cor35" || id == "thm41" || is_extension_id(id))
        weight_kinds.pop_back();  // constant weights make hyperplane-slab sups infinite
    bool ext = is_extension_id(id);
    std::optional<BoxSet> boxes;
    if (!ext) boxes = curvature_boxes(curve, R);
    std::vector<InequalityInstance> out;
    for (int j = 0; j < count; ++j) {
        // the recipe depends on j only, so recipe j is followed across scales
        Rng pick(mix_seed(seed, std::uint64_t(j)));
        std::string wk = weight_kinds[std::size_t(pick.integer(0, long(weight_kinds.size()) - 1))];
        const auto& kinds = ext ? density_kinds : packet_kinds;
        std::string fk = kinds[std::size_t(pick.integer(0, long(kinds.size()) - 1))];
        // same draws at every R: positions scale with R
        Rng rng(mix_seed(seed, std::uint64_t(j), 1));
        InequalityInstance inst;
        inst.id = id;
        inst.label = fmt::format("{}:{}:{}", j, fk, wk);
        if (ext) {
            inst.R = R;
            inst.g = random_density(fk, curve, R, rng);
            inst.w = random_weight(wk, curve, R, rng, nullptr, nullptr);
        } else {
            inst.f = random_packets(fk, *boxes, rng);
            inst.R = inst.f->R();
            auto pk = inst.f->packets();
            inst.w = random_weight(wk, curve, inst.R, rng, &*inst.f, &pk);
        }
        out.push_back(std::move(inst));
    }
    return out;
}

namespace {

// projection of a region onto the unit axis u: centre and half-length
std::pair<double, double> project(const Region& a, const Vec& u) {
    switch (a.kind) {
        case Region::Kind::Parallelepiped:
            return {u.dot(a.center), 0.5 * (a.A.transpose() * u).cwiseAbs().sum()};
        case Region::Kind::Ball:
            return {u.dot(a.center), a.radius};
        case Region::Kind::Slab:
            if (std::abs(std::abs(u.dot(a.normal)) - 1.0) < 1e-12) return {u.dot(a.center), a.half_width};
            return {0.0, std::numeric_limits<double>::infinity()};
    }
    return {0.0, 0.0};
}

std::vector<Vec> separating_axes(const Region& a) {
    std::vector<Vec> ax;
    if (a.kind == Region::Kind::Parallelepiped)
        for (int j = 0; j < a.dim(); ++j) ax.push_back(a.Ainv.row(j).transpose().normalized());
    if (a.kind == Region::Kind::Slab) ax.push_back(a.normal.normalized());
    return ax;
}

}  // namespace

bool regions_intersect(const Region& a, const Region& b) {
    if (a.dim() != b.dim()) throw DomainError("region dimensions differ");
    if (a.kind == Region::Kind::Ball && b.kind == Region::Kind::Ball)
        return (a.center - b.center).norm() <= a.radius + b.radius;
    if (a.kind == Region::Kind::Ball || b.kind == Region::Kind::Ball) {
        const Region& ball = a.kind == Region::Kind::Ball ? a : b;
        const Region& other = a.kind == Region::Kind::Ball ? b : a;
        if (other.kind == Region::Kind::Slab)
            return std::abs(other.normal.normalized().dot(ball.center - other.center)) <= other.half_width + ball.radius;
        // distance from the centre to the parallelepiped by projected gradient on the unit cube
        Vec y = (other.Ainv * (ball.center - other.center)).cwiseMax(-0.5).cwiseMin(0.5);
        Mat H = other.A.transpose() * other.A;
        double step = 1.0 / H.norm();
        for (int it = 0; it < 2000; ++it) {
            Vec grad = other.A.transpose() * (other.center + other.A * y - ball.center);
            Vec next = (y - step * grad).cwiseMax(-0.5).cwiseMin(0.5);
            if ((next - y).norm() < 1e-14) break;
            y = next;
        }
        return (other.center + other.A * y - ball.center).norm() <= ball.radius + 1e-9;
    }
    std::vector<Vec> axes = separating_axes(a);
    auto bx = separating_axes(b);
    axes.insert(axes.end(), bx.begin(), bx.end());
    if (a.dim() == 3 && a.kind == Region::Kind::Parallelepiped && b.kind == Region::Kind::Parallelepiped)
        for (int i = 0; i < 3; ++i)
            for (int j = 0; j < 3; ++j) {
                Eigen::Vector3d e = Eigen::Vector3d(a.A.col(i)).cross(Eigen::Vector3d(b.A.col(j)));
                if (e.norm() > 1e-12 * a.A.col(i).norm() * b.A.col(j).norm()) axes.push_back(Vec(e.normalized()));
            }
    for (const auto& u : axes) {
        auto [ca, ha] = project(a, u);
        auto [cb, hb] = project(b, u);
        if (std::isfinite(ha) && std::isfinite(hb) && std::abs(ca - cb) > ha + hb + 1e-12) return false;
    }
    return true;
}

RefinedReport refined_decoupling_check(const SleeveField& f, const Region& ball, const RefinedOptions& opt) {
    RefinedReport rep;
    auto pk = f.packets();
    if (pk.empty()) return rep;
    int n = f.n();
    double R = f.R();
    double p = opt.p > 0.0 ? opt.p : double(n * (n + 1));
    if (p < 2.0 || p > n * (n + 1) + 1e-12) throw ConfigError("p must lie in [2, n(n+1)]");
    double side = std::round(std::pow(R, 1.0 / n));
    double rho = std::pow(R, opt.eps);
    std::vector<Region> planks;
    double rhs_sum = 0.0;
    for (const auto& c : pk) {
        const auto& box = f.boxes()[c.theta];
        planks.push_back(plank_region(box, make_plank(box, c.m)));
        rhs_sum += std::pow(packet_lp(box, c.a, p), p);
    }
    // cubes of side R^{1/n} on the grid side * Z^n whose centres lie in the ball
    std::vector<Region> cubes;
    {
        int reach = int(std::ceil((ball.radius + side) / side));
        IVec k = IVec::Constant(n, -reach);
        for (;;) {
            Vec c = (k.cast<double>().array() + 0.5).matrix() * side;
            if ((c - ball.center).norm() <= ball.radius) cubes.push_back(Region::cube(c, side));
            int j = n - 1;
            while (j >= 0 && ++k[j] > reach) k[j--] = -reach;
            if (j < 0) break;
        }
    }
    std::vector<long> counts(cubes.size());
    std::vector<Region> dil;
    for (const auto& T : planks) dil.push_back(T.dilated(rho));
    parallel_for(cubes.size(), [&](std::size_t q) {
        if (opt.mode == IncidenceMode::Contain) {
            counts[q] = incidence_count(cubes[q], planks, rho);
        } else {
            long c = 0;
            for (const auto& T : dil) c += regions_intersect(cubes[q], T);
            counts[q] = c;
        }
    });
    // midpoint rule on each cube
    int per = int(std::round(side / opt.quad_spacing));
    double h = side / per, cell = std::pow(h, n);
    std::size_t npts = 1;
    for (int j = 0; j < n; ++j) npts *= std::size_t(per);
    std::vector<double> integral(cubes.size(), 0.0);
    for (std::size_t q = 0; q < cubes.size(); ++q) {
        if (counts[q] == 0) continue;
        Vec lo = cubes[q].center - Vec::Constant(n, 0.5 * side);
        integral[q] = parallel_sum<double>(npts, [&](std::size_t i) {
            Vec x = lo;
            std::size_t r = i;
            for (int j = n - 1; j >= 0; --j) {
                x[j] += (double(r % per) + 0.5) * h;
                r /= per;
            }
            return std::pow(std::abs(f.eval(x)), p) * cell;
        });
    }
    std::map<long, Stratum> strata;
    for (std::size_t q = 0; q < cubes.size(); ++q) {
        if (counts[q] == 0) continue;
        long M = 1;
        while (M < counts[q]) M *= 2;
        auto& s = strata[M];
        s.M = M;
        ++s.cubes;
        s.lhs += integral[q];
    }
    for (auto& [M, s] : strata) {
        s.lhs = std::pow(s.lhs, 1.0 / p);
        s.rhs = rho * std::pow(double(M), 0.5 - 1.0 / p) * std::pow(rhs_sum, 1.0 / p);
        rep.strata.push_back(s);
        if (s.lhs > rep.lhs) {
            rep.lhs = s.lhs;
            rep.rhs = s.rhs;
            rep.M = M;
        }
    }
    rep.ratio = rep.rhs > 0.0 ? rep.lhs / rep.rhs : 0.0;
    return rep;
}

namespace {

struct WindowSums {
    double lp = 0.0, l2 = 0.0, sq_sup = 0.0;
    std::vector<double> theta_lp;
};

// lattice h Z^n inside the window ball; per-theta pieces group components by box
WindowSums window_sums(const SleeveField& f, double p, const LatticeWindow& win) {
    int n = f.n();
    std::map<int, int> slot;
    for (const auto& c : f.components()) slot.emplace(c.theta, int(slot.size()));
    std::vector<int> comp_slot;
    for (const auto& c : f.components()) comp_slot.push_back(slot[c.theta]);
    std::size_t S = slot.size();
    int reach = int(std::floor(win.radius / win.spacing));
    std::size_t side = std::size_t(2 * reach + 1), total = 1;
    for (int j = 0; j < n; ++j) total *= side;
    double cell = std::pow(win.spacing, n);
    std::size_t chunks = (total + kChunk - 1) / kChunk;
    std::vector<WindowSums> part(chunks);
    parallel_chunks(total, [&](std::size_t c, std::size_t lo, std::size_t hi) {
        WindowSums acc;
        acc.theta_lp.assign(S, 0.0);
        std::vector<cplx> piece(S);
        for (std::size_t i = lo; i < hi; ++i) {
            Vec x(n);
            std::size_t r = i;
            for (int j = n - 1; j >= 0; --j) {
                x[j] = (double(r % side) - reach) * win.spacing;
                r /= side;
            }
            if (x.norm() > win.radius) continue;
            std::fill(piece.begin(), piece.end(), cplx(0.0, 0.0));
            for (std::size_t k = 0; k < f.components().size(); ++k) piece[comp_slot[k]] += f.eval_component(k, x);
            cplx total_v(0.0, 0.0);
            double sq = 0.0;
            for (std::size_t s = 0; s < S; ++s) {
                total_v += piece[s];
                double a = std::abs(piece[s]);
                sq += a * a;
                acc.theta_lp[s] += std::pow(a, p) * cell;
            }
            double a = std::abs(total_v);
            acc.lp += std::pow(a, p) * cell;
            acc.l2 += a * a * cell;
            acc.sq_sup = std::max(acc.sq_sup, sq);
        }
        part[c] = std::move(acc);
    });
    WindowSums out;
    out.theta_lp.assign(S, 0.0);
    for (const auto& w : part) {
        if (w.theta_lp.empty()) continue;
        out.lp += w.lp;
        out.l2 += w.l2;
        out.sq_sup = std::max(out.sq_sup, w.sq_sup);
        for (std::size_t s = 0; s < S; ++s) out.theta_lp[s] += w.theta_lp[s];
    }
    return out;
}

}  // namespace

double bdg_decoupling_check(const SleeveField& f, double p, const LatticeWindow& win) {
    if (f.empty()) return 0.0;
    WindowSums s = window_sums(f, p, win);
    double den = 0.0;
    for (double t : s.theta_lp) den += std::pow(t, 2.0 / p);
    if (den == 0.0) return 0.0;
    return std::pow(s.lp, 1.0 / p) / std::sqrt(den);
}

double square_function_monitor(const SleeveField& f, double p, const LatticeWindow& win) {
    if (f.empty()) return 0.0;
    WindowSums s = window_sums(f, p, win);
    double den = std::pow(s.sq_sup, 0.5 * (p - 2.0)) * s.l2;
    return den > 0.0 ? s.lp / den : 0.0;
}

}  // namespace mtlab
