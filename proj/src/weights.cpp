#include "mtlab/weights.hpp"

#include <algorithm>
#include <boost/container_hash/hash.hpp>
#include <boost/geometry.hpp>
#include <boost/geometry/geometries/point_xy.hpp>
#include <fmt/format.h>
#include <numeric>
#include <set>

#include "mtlab/bump.hpp"
#include "mtlab/errors.hpp"
#include "mtlab/rng.hpp"

namespace mtlab {

std::size_t IVecHash::operator()(const IVec& v) const { return boost::hash_range(v.data(), v.data() + v.size()); }

Weight Weight::constant(int n, double c) {
    if (c < 0) throw ConfigError("negative weight");
    Weight w(n);
    w.constant_ = true;
    w.c_ = c;
    return w;
}

Weight Weight::indicator(const std::vector<IVec>& pts) {
    if (pts.empty()) throw ConfigError("indicator of an empty point set needs a dimension");
    Weight w(int(pts.front().size()));
    for (const auto& p : pts) w.add(p, 1.0);
    return w;
}

Weight Weight::indicator(const Region& region, double radius) {
    int n = region.dim();
    Weight w(n);
    Vec lo = Vec::Constant(n, -radius), hi = Vec::Constant(n, radius);
    if (region.kind != Region::Kind::Slab) {
        Vec half = region.kind == Region::Kind::Ball ? Vec::Constant(n, region.radius)
                                                     : Vec(0.5 * region.A.cwiseAbs().rowwise().sum());
        lo = lo.cwiseMax(region.center - half);
        hi = hi.cwiseMin(region.center + half);
    }
    IVec a(n), b(n);
    for (int j = 0; j < n; ++j) {
        a[j] = int(std::ceil(lo[j]));
        b[j] = int(std::floor(hi[j]));
        if (a[j] > b[j]) return w;
    }
    IVec p = a;
    for (;;) {
        Vec x = p.cast<double>();
        if (x.norm() <= radius && region.contains(x)) w.add(p, 1.0);
        int j = n - 1;
        while (j >= 0 && ++p[j] > b[j]) {
            p[j] = a[j];
            --j;
        }
        if (j < 0) break;
    }
    return w;
}

void Weight::add(const IVec& p, double v) {
    if (constant_) throw DomainError("cannot add points to a constant weight");
    if (v < 0 || !std::isfinite(v)) throw ConfigError("weights must be finite and non-negative");
    if (p.size() != n_) throw DomainError("weight point has wrong dimension");
    auto it = index_.find(p);
    if (it != index_.end()) {
        val_[it->second] += v;
        return;
    }
    index_.emplace(p, pts_.size());
    pts_.push_back(p);
    val_.push_back(v);
}

double Weight::at(const IVec& p) const {
    if (constant_) return c_;
    auto it = index_.find(p);
    return it == index_.end() ? 0.0 : val_[it->second];
}

double Weight::total(double r) const {
    if (constant_) return c_ == 0.0 ? 0.0 : INFINITY;
    double acc = 0.0;
    for (double v : val_) acc += std::pow(v, r);
    return acc;
}

Weight Weight::translated(const IVec& v) const {
    if (constant_) return *this;
    Weight w(n_);
    for (std::size_t i = 0; i < pts_.size(); ++i) w.add(pts_[i] + v, val_[i]);
    return w;
}

Weight Weight::scaled(double s) const {
    Weight w = *this;
    w.c_ *= s;
    for (auto& v : w.val_) v *= s;
    return w;
}

double Weight::Dense::at(const IVec& p) const {
    std::size_t flat = 0;
    for (int j = 0; j < p.size(); ++j) {
        if (p[j] < lo[j] || p[j] > hi[j]) return 0.0;
        flat = flat * (hi[j] - lo[j] + 1) + (p[j] - lo[j]);
    }
    return v[flat];
}

Weight::Dense Weight::to_dense() const {
    if (constant_) throw DomainError("constant weight has no finite dense form");
    Dense d{IVec::Zero(n_), IVec::Zero(n_), {}};
    if (!pts_.empty()) {
        d.lo = d.hi = pts_.front();
        for (const auto& p : pts_) {
            d.lo = d.lo.cwiseMin(p);
            d.hi = d.hi.cwiseMax(p);
        }
    }
    std::size_t total = 1;
    for (int j = 0; j < n_; ++j) total *= std::size_t(d.hi[j] - d.lo[j] + 1);
    d.v.assign(pts_.empty() ? 0 : total, 0.0);
    for (std::size_t i = 0; i < pts_.size(); ++i) {
        std::size_t flat = 0;
        for (int j = 0; j < n_; ++j) flat = flat * (d.hi[j] - d.lo[j] + 1) + (pts_[i][j] - d.lo[j]);
        d.v[flat] = val_[i];
    }
    return d;
}

Weight Weight::from_dense(const Dense& d) {
    int n = int(d.lo.size());
    Weight w(n);
    for (std::size_t i = 0; i < d.v.size(); ++i) {
        if (d.v[i] == 0.0) continue;
        IVec p(n);
        std::size_t r = i;
        for (int j = n - 1; j >= 0; --j) {
            int len = d.hi[j] - d.lo[j] + 1;
            p[j] = d.lo[j] + int(r % len);
            r /= len;
        }
        w.add(p, d.v[i]);
    }
    return w;
}

std::vector<IVec> lattice_ball(int n, double radius, const Vec& center) {
    Vec c = center.size() ? center : Vec::Zero(n);
    IVec lo(n), hi(n);
    for (int j = 0; j < n; ++j) {
        lo[j] = int(std::ceil(c[j] - radius - 1e-12));
        hi[j] = int(std::floor(c[j] + radius + 1e-12));
    }
    std::vector<IVec> out;
    IVec p = lo;
    for (;;) {
        if ((p.cast<double>() - c).squaredNorm() <= radius * radius + 1e-9) out.push_back(p);
        int j = n - 1;
        while (j >= 0 && ++p[j] > hi[j]) {
            p[j] = lo[j];
            --j;
        }
        if (j < 0) break;
    }
    return out;
}

double mass(const Weight& w, const Region& region, double r) {
    if (w.is_constant()) {
        double v = region.volume();
        if (!std::isfinite(v)) throw DomainError("mass of a constant weight on an unbounded region");
        return w.constant_value() * std::pow(v, 1.0 / r);
    }
    double acc = 0.0;
    const auto& pts = w.points();
    const auto& val = w.values();
    for (std::size_t i = 0; i < pts.size(); ++i)
        if (region.contains(pts[i].cast<double>())) acc += std::pow(val[i], r);
    return std::pow(acc, 1.0 / r);
}

std::string SupResult::describe() const {
    std::string m_s, s_s;
    for (int j = 0; j < m.size(); ++j) m_s += fmt::format("{}{}", j ? "," : "", m[j]);
    for (int j = 0; j < shift.size(); ++j) s_s += fmt::format("{}{}", j ? "," : "", shift[j]);
    return fmt::format("dir={} m=({}) shift=({})", dir, m_s, s_s);
}

SupResult sup_mass(const Weight& w, const GeomFamily& fam, double r) {
    int n = w.n();
    double rho = std::pow(fam.R, fam.epsilon);
    SupResult best;
    if (w.is_constant()) {
        if (fam.kind == FamilyKind::S) throw DomainError("constant weight on hyperplane slabs is unbounded");
        for (std::size_t d = 0; d < fam.M.size(); ++d) {
            double v = w.constant_value() * std::pow(rho, double(n) / r) *
                       std::pow(1.0 / std::abs(fam.M[d].determinant()), 1.0 / r);
            if (v > best.value) best = {v, int(d), IVec::Zero(n), Vec::Zero(n)};
        }
        return best;
    }
    const auto& pts = w.points();
    std::vector<double> wr(pts.size());
    for (std::size_t i = 0; i < pts.size(); ++i) wr[i] = std::pow(w.values()[i], r);
    std::size_t D = fam.dirs.size();
    std::vector<SupResult> per(D);
    parallel_for(D, [&](std::size_t d) {
        SupResult loc;
        loc.dir = int(d);
        if (fam.kind == FamilyKind::S) {
            std::vector<std::pair<double, double>> proj(pts.size());
            for (std::size_t i = 0; i < pts.size(); ++i) proj[i] = {fam.normals[d].dot(pts[i].cast<double>()), wr[i]};
            std::sort(proj.begin(), proj.end());
            double acc = 0.0;
            std::size_t lo = 0;
            double width = 2.0 * rho + 1e-12;
            for (std::size_t hi = 0; hi < proj.size(); ++hi) {
                acc += proj[hi].second;
                while (proj[hi].first - proj[lo].first > width) acc -= proj[lo++].second;
                if (acc > loc.value) {
                    loc.value = acc;
                    loc.m = IVec::Zero(1);
                    loc.shift = Vec::Constant(1, proj[lo].first + rho);
                }
            }
        } else {
            const Mat& M = fam.M[d];
            for (const auto& s : fam.shifts) {
                LatticeMap<double> acc;
                for (std::size_t i = 0; i < pts.size(); ++i) {
                    Vec y = M * pts[i].cast<double>() - s;
                    if (rho <= 1.0) {
                        IVec m(n);
                        for (int j = 0; j < n; ++j) m[j] = int(std::floor(y[j] + 0.5));
                        acc[m] += wr[i];
                        continue;
                    }
                    IVec lo(n), hi(n);
                    for (int j = 0; j < n; ++j) {
                        lo[j] = int(std::ceil(y[j] - 0.5 * rho - 1e-12));
                        hi[j] = int(std::floor(y[j] + 0.5 * rho + 1e-12));
                    }
                    IVec m = lo;
                    for (;;) {
                        acc[m] += wr[i];
                        int j = n - 1;
                        while (j >= 0 && ++m[j] > hi[j]) {
            m[j] = lo[j];
            --j;
        }
                        if (j < 0) break;
                    }
                }
                for (const auto& [m, v] : acc)
                    if (v > loc.value || (v == loc.value && loc.m.size() && std::lexicographical_compare(
                                                                m.data(), m.data() + n, loc.m.data(), loc.m.data() + n))) {
                        loc.value = v;
                        loc.m = m;
                        loc.shift = s;
                    }
            }
        }
        per[d] = loc;
    });
    for (const auto& p : per)
        if (p.value > best.value) best = p;
    best.value = std::pow(best.value, 1.0 / r);
    return best;
}

double mollifier_kernel(const IVec& z) {
    double v = bump::Phi(z.cast<double>());
    return v * v / bump::Phi_l2sq(int(z.size()));
}

MollifyResult mollify_unit(const Weight& w, int cutoff) {
    if (w.is_constant()) return {w, 1.0};
    int n = w.n();
    std::vector<IVec> offs;
    std::vector<double> ker;
    for (const auto& z : lattice_ball(n, cutoff * std::sqrt(double(n)))) {
        if (z.cwiseAbs().maxCoeff() > cutoff) continue;
        offs.push_back(z);
        ker.push_back(mollifier_kernel(z));
    }
    LatticeMap<double> acc;
    for (std::size_t i = 0; i < w.size(); ++i)
        for (std::size_t q = 0; q < offs.size(); ++q) acc[w.points()[i] + offs[q]] += ker[q] * w.values()[i];
    std::vector<std::pair<IVec, double>> items(acc.begin(), acc.end());
    std::sort(items.begin(), items.end(), [](const auto& a, const auto& b) {
        return std::lexicographical_compare(a.first.data(), a.first.data() + a.first.size(), b.first.data(),
                                            b.first.data() + b.first.size());
    });
    MollifyResult res{Weight(n), 1.0};
    double vmax = 0.0;
    for (const auto& [p, v] : items) vmax = std::max(vmax, v);
    for (const auto& [p, v] : items)
        if (v > 0.0) res.w.add(p, v);
    // adjacent-value ratio on the essential support (values >= 1e-3 of max)
    for (const auto& [p, v] : items) {
        if (v < 1e-3 * vmax) continue;
        for (int j = 0; j < n; ++j) {
            IVec q = p;
            q[j] += 1;
            auto it = acc.find(q);
            if (it == acc.end() || it->second < 1e-3 * vmax) continue;
            res.C = std::max(res.C, std::max(v / it->second, it->second / v));
        }
    }
    return res;
}

double PointConfiguration::target() const {
    return std::pow(double(mu) / N, double(mu - 1) / double(mu - n)) * std::pow(R, n);
}

double PointConfiguration::constant() const {
    double v = certified_volume ? *certified_volume : sampled_volume.value_or(0.0);
    return v / target();
}

namespace {

namespace bg = boost::geometry;
using P2 = bg::model::d2::point_xy<double>;

double hull_area_2d(const std::vector<std::pair<double, double>>& xy) {
    bg::model::multi_point<P2> mp;
    for (const auto& [x, y] : xy) bg::append(mp, P2(x, y));
    bg::model::polygon<P2> hull;
    bg::convex_hull(mp, hull);
    return std::abs(bg::area(hull));
}

double hull_volume_3d(const std::vector<Vec>& p) {
    std::size_t k = p.size();
    if (k < 4) return 0.0;
    Vec c = Vec::Zero(3);
    double scale = 0.0;
    for (const auto& q : p) c += q;
    c /= double(k);
    for (const auto& q : p) scale = std::max(scale, (q - c).norm());
    if (scale == 0.0) return 0.0;
    double eps = 1e-9 * scale;
    std::set<std::vector<bool>> seen;
    double vol = 0.0;
    for (std::size_t i = 0; i < k; ++i)
        for (std::size_t j = i + 1; j < k; ++j)
            for (std::size_t l = j + 1; l < k; ++l) {
                Eigen::Vector3d a = p[i], b = p[j], d = p[l];
                Eigen::Vector3d nrm = (b - a).cross(d - a);
                if (nrm.norm() < eps * scale) continue;
                nrm.normalize();
                int pos = 0, neg = 0;
                std::vector<bool> on(k, false);
                for (std::size_t q = 0; q < k; ++q) {
                    double s = nrm.dot(Eigen::Vector3d(p[q]) - a);
                    if (s > eps) ++pos;
                    else if (s < -eps) ++neg;
                    else on[q] = true;
                }
                if (pos && neg) continue;
                if (!seen.insert(on).second) continue;
                Eigen::Vector3d u = (b - a).normalized(), v = nrm.cross(u);
                std::vector<std::pair<double, double>> xy;
                for (std::size_t q = 0; q < k; ++q)
                    if (on[q]) xy.push_back({u.dot(Eigen::Vector3d(p[q]) - a), v.dot(Eigen::Vector3d(p[q]) - a)});
                double h = std::abs(nrm.dot(Eigen::Vector3d(c) - a));
                vol += hull_area_2d(xy) * h / 3.0;
            }
    return vol;
}

}  // namespace

double hull_volume(const std::vector<Vec>& pts) {
    if (pts.empty()) return 0.0;
    int n = int(pts.front().size());
    if (n == 2) {
        if (pts.size() < 3) return 0.0;
        std::vector<std::pair<double, double>> xy;
        for (const auto& q : pts) xy.push_back({q[0], q[1]});
        return hull_area_2d(xy);
    }
    if (n == 3) return hull_volume_3d(pts);
    throw ConfigError(fmt::format("hull volume not implemented for n = {}", n));
}

double min_subset_volume(const std::vector<IVec>& pts, long mu, HullCheck check, long samples,
                         std::uint64_t seed, std::vector<int>* argmin) {
    long N = long(pts.size());
    if (mu > N || mu < 1) throw ConfigError("invalid subset size");
    std::vector<Vec> P(N);
    for (long i = 0; i < N; ++i) P[i] = pts[i].cast<double>();
    double best = INFINITY;
    std::vector<int> idx(mu), arg;
    std::vector<Vec> sub(mu);
    auto eval = [&]() {
        for (long j = 0; j < mu; ++j) sub[j] = P[idx[j]];
        double v = hull_volume(sub);
        if (v < best) {
            best = v;
            arg = idx;
        }
    };
    if (check == HullCheck::Exhaustive) {
        std::iota(idx.begin(), idx.end(), 0);
        for (;;) {
            eval();
            long j = mu - 1;
            while (j >= 0 && idx[j] == N - mu + j) --j;
            if (j < 0) break;
            ++idx[j];
            for (long q = j + 1; q < mu; ++q) idx[q] = idx[q - 1] + 1;
        }
    } else {
        Rng rng(seed);
        std::vector<int> all(N);
        std::iota(all.begin(), all.end(), 0);
        for (long s = 0; s < samples; ++s) {
            for (long j = 0; j < mu; ++j) std::swap(all[j], all[rng.integer(j, N - 1)]);
            std::copy(all.begin(), all.begin() + mu, idx.begin());
            std::sort(idx.begin(), idx.end());
            eval();
        }
    }
    if (argmin) *argmin = arg;
    return best;
}

PointConfiguration carbery_points(int n, long N, long mu, double R, std::uint64_t seed,
                                  const CarberyOptions& opt) {
    if (!(N >= mu && mu >= n + 2)) throw ConfigError("carbery_points needs N >= mu >= n + 2");
    double ball = std::pow(kPi, 0.5 * n) / std::tgamma(0.5 * n + 1);
    if (N * ball > ball * std::pow(R + 1.0, n)) throw PackingError("N unit balls cannot fit in B_R");
    PointConfiguration cfg;
    cfg.n = n;
    cfg.N = N;
    cfg.mu = mu;
    cfg.R = R;
    cfg.seed = seed;
    Rng rng(seed);
    // occupancy map: separation >= 2 only needs the |o|^2 < 4 stencil
    std::vector<IVec> stencil;
    {
        IVec o = IVec::Constant(n, -1);
        for (;;) {
            if (o.squaredNorm() < 4) stencil.push_back(o);
            int j = n - 1;
            while (j >= 0 && ++o[j] > 1) o[j--] = -1;
            if (j < 0) break;
        }
    }
    LatticeMap<long> occupied;
    auto separated = [&](const IVec& p, long skip) {
        for (const auto& o : stencil) {
            auto it = occupied.find(IVec(p + o));
            if (it != occupied.end() && it->second != skip) return false;
        }
        return true;
    };
    auto draw = [&](long slot) {
        for (long tries = 0; tries < 2000000; ++tries) {
            Vec x = rng.in_ball(n, R);
            IVec p(n);
            for (int j = 0; j < n; ++j) p[j] = int(std::lround(x[j]));
            if (p.cast<double>().norm() > R) continue;
            if (separated(p, slot)) return p;
        }
        throw PackingError(fmt::format("could not place {} separated points in B_{}", N, R));
    };
    std::vector<IVec> pts;
    for (long i = 0; i < N; ++i) {
        pts.push_back(draw(-1));
        occupied[pts.back()] = i;
    }
    bool exhaustive = opt.check == HullCheck::Exhaustive;
    if (opt.check == HullCheck::None) {
        cfg.points = pts;
        return cfg;
    }
    double goal = opt.target_constant * cfg.target();
    std::vector<IVec> best_pts = pts;
    double best_vol = -1.0;
    for (int it = 0; it <= opt.budget; ++it) {
        std::vector<int> arg;
        double v = min_subset_volume(pts, mu, opt.check, opt.samples, seed + it, &arg);
        if (v > best_vol) {
            best_vol = v;
            best_pts = pts;
        }
        if (v >= goal || it == opt.budget) break;
        long slot = arg[rng.integer(0, mu - 1)];
        IVec q = draw(slot);
        occupied.erase(pts[slot]);
        pts[slot] = q;
        occupied[q] = slot;
    }
    cfg.points = best_pts;
    if (exhaustive)
        cfg.certified_volume = best_vol;
    else {
        cfg.sampled_volume = best_vol;
        cfg.samples = opt.samples;
    }
    return cfg;
}

Weight multibush_weight(const PointConfiguration& cfg) { return Weight::indicator(cfg.points); }

}  // namespace mtlab
