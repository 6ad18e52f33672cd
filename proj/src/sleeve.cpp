#include "mtlab/sleeve.hpp"

#include <map>
#include <unordered_map>

#include "mtlab/bump.hpp"
#include "mtlab/errors.hpp"

namespace mtlab {

double rho_check(Profile p, const Vec& y) {
    if (p == Profile::Packet) return bump::Phi(y);
    double v = 1.0;
    for (int i = 0; i < y.size(); ++i) v *= 0.5 * bump::phi(0.5 * y[i]);
    return v;
}

double rho_hat(Profile p, const Vec& eta) {
    return p == Profile::Packet ? bump::Phi_hat(eta) : bump::Phi_hat(2.0 * eta);
}

SleeveField SleeveField::from_packets(BoxSet boxes, const std::vector<WavePacketCoeff>& coeffs) {
    SleeveField f(std::move(boxes));
    for (const auto& c : coeffs) f.add_generator(c.theta, Profile::Packet, c.m, c.a);
    return f;
}

SleeveComponent& SleeveField::add(int theta, Profile p) {
    if (theta < 0 || std::size_t(theta) >= boxes_.size()) throw DomainError("box index out of range");
    for (auto& c : comps_)
        if (c.theta == theta && c.profile == p) return c;
    comps_.push_back({theta, p, {}, {}});
    return comps_.back();
}

void SleeveField::add_generator(int theta, Profile p, const IVec& k, cplx b) {
    auto& c = add(theta, p);
    c.k.push_back(k);
    c.b.push_back(b);
}

bool SleeveField::empty() const {
    for (const auto& c : comps_)
        for (const auto& b : c.b)
            if (b != cplx(0.0, 0.0)) return false;
    return true;
}

SleeveField SleeveField::scaled(cplx s) const {
    SleeveField f = *this;
    for (auto& c : f.comps_)
        for (auto& b : c.b) b *= s;
    return f;
}

cplx SleeveField::eval_component(std::size_t ci, const Vec& x) const {
    const auto& c = comps_[ci];
    const auto& box = boxes_[c.theta];
    Vec y = box.T * x;
    double reach = c.profile == Profile::Packet ? bump::kRange : 2.0 * bump::kRange;
    cplx acc(0.0, 0.0);
    for (std::size_t g = 0; g < c.k.size(); ++g) {
        Vec u = y - c.k[g].cast<double>();
        if (u.cwiseAbs().maxCoeff() >= reach) continue;
        acc += c.b[g] * rho_check(c.profile, u);
    }
    return box.detT * expi(kTwoPi * x.dot(box.center)) * acc;
}

cplx SleeveField::eval(const Vec& x) const {
    cplx acc(0.0, 0.0);
    for (std::size_t c = 0; c < comps_.size(); ++c) acc += eval_component(c, x);
    return acc;
}

std::vector<cplx> SleeveField::eval_many(const std::vector<Vec>& xs) const {
    std::vector<cplx> out(xs.size());
    parallel_for(xs.size(), [&](std::size_t i) { out[i] = eval(xs[i]); });
    return out;
}

Field SleeveField::sample(const Grid& g) const {
    Field f(g);
    parallel_for(f.v.size(), [&](std::size_t i) { f.v[i] = eval(g.point(i)); });
    return f;
}

Field SleeveField::sample_component(std::size_t ci, const Grid& g) const {
    const auto& c = comps_[ci];
    const auto& box = boxes_[c.theta];
    int n = g.n();
    Mat D = box.T * g.basis;
    Vec y0 = box.T * g.origin;
    if ((D - Mat(D.diagonal().asDiagonal())).cwiseAbs().maxCoeff() > 1e-9 * D.cwiseAbs().maxCoeff()) {
        Field f(g);
        parallel_for(f.v.size(), [&](std::size_t i) { f.v[i] = eval_component(ci, g.point(i)); });
        return f;
    }
    // separable: sum_k b_k prod_j rho1(y_j - k_j)
    IVec lo = c.k.front(), hi = lo;
    for (const auto& k : c.k) {
        lo = lo.cwiseMin(k);
        hi = hi.cwiseMax(k);
    }
    std::vector<int> cur(n), dims = g.dims();
    std::size_t total = 1;
    for (int j = 0; j < n; ++j) total *= (cur[j] = hi[j] - lo[j] + 1);
    std::vector<cplx> A(total, cplx(0.0, 0.0));
    for (std::size_t q = 0; q < c.k.size(); ++q) {
        std::size_t flat = 0;
        for (int j = 0; j < n; ++j) flat = flat * cur[j] + (c.k[q][j] - lo[j]);
        A[flat] += c.b[q];
    }
    bool narrow = c.profile == Profile::Narrow;
    for (int j = 0; j < n; ++j) {
        Eigen::MatrixXcd M(dims[j], cur[j]);
        for (int k = 0; k < dims[j]; ++k)
            for (int m = 0; m < cur[j]; ++m) {
                double u = y0[j] + D(j, j) * (g.lo[j] + k) - (lo[j] + m);
                M(k, m) = narrow ? 0.5 * bump::phi(0.5 * u) : bump::phi(u);
            }
        A = apply_axis(A, cur, j, M);
        cur[j] = dims[j];
    }
    Field f(g);
    for (std::size_t i = 0; i < f.v.size(); ++i)
        f.v[i] = box.detT * expi(kTwoPi * g.point(i).dot(box.center)) * A[i];
    return f;
}

namespace {

struct GramCache {
    std::unordered_map<long, double> v[2];
    double operator()(int d, bool narrow) {
        auto& m = v[narrow];
        auto it = m.find(d);
        if (it != m.end()) return it->second;
        return m[d] = bump::gram(double(d), narrow);
    }
};

cplx poly(const SleeveComponent& c, const Vec& eta) {
    cplx acc(0.0, 0.0);
    for (std::size_t q = 0; q < c.k.size(); ++q) acc += c.b[q] * expi(-kTwoPi * c.k[q].cast<double>().dot(eta));
    return acc;
}

// integral of f_hat_a conj(f_hat_b) over the frequency side
cplx cross_term(const SleeveComponent& a, const AnisotropicBox& A, const SleeveComponent& b,
                const AnisotropicBox& B) {
    int n = int(A.center.size());
    int K = 0;
    for (const auto& k : a.k) K = std::max(K, k.cwiseAbs().maxCoeff());
    for (const auto& k : b.k) K = std::max(K, k.cwiseAbs().maxCoeff());
    int G = 48 + 8 * K;
    if (std::pow(double(G), n) > 4e7) G = int(std::pow(4e7, 1.0 / n));
    Mat LinvB = B.L.inverse();
    Vec off = LinvB * (A.center - B.center);
    Mat M = LinvB * A.L;
    std::size_t total = 1;
    for (int j = 0; j < n; ++j) total *= G;
    cplx acc = parallel_sum<cplx>(total, [&](std::size_t i) -> cplx {
        Vec eta(n);
        std::size_t r = i;
        for (int j = n - 1; j >= 0; --j) {
            eta[j] = -0.5 + (double(r % G) + 0.5) / G;
            r /= G;
        }
        double ra = rho_hat(a.profile, eta);
        if (ra == 0.0) return {0.0, 0.0};
        Vec e2 = off + M * eta;
        double rb = rho_hat(b.profile, e2);
        if (rb == 0.0) return {0.0, 0.0};
        return ra * rb * poly(a, eta) * std::conj(poly(b, e2));
    });
    return acc * A.detT / double(total);
}

}  // namespace

double SleeveField::norm2() const {
    GramCache gc;
    double total = 0.0;
    for (const auto& c : comps_) {
        const auto& box = boxes_[c.theta];
        bool narrow = c.profile == Profile::Narrow;
        cplx acc(0.0, 0.0);
        for (std::size_t p = 0; p < c.k.size(); ++p)
            for (std::size_t q = 0; q < c.k.size(); ++q) {
                double gv = 1.0;
                for (int j = 0; j < n(); ++j) gv *= gc(c.k[p][j] - c.k[q][j], narrow);
                acc += c.b[p] * std::conj(c.b[q]) * gv;
            }
        total += box.detT * acc.real();
    }
    // components sharing a box, and packet-profile neighbours, overlap in frequency
    for (std::size_t i = 0; i < comps_.size(); ++i)
        for (std::size_t j = i + 1; j < comps_.size(); ++j) {
            const auto &a = comps_[i], &b = comps_[j];
            int gap = std::abs(a.theta - b.theta);
            bool touch = gap == 0 || (gap == 1 && (a.profile == Profile::Packet || b.profile == Profile::Packet));
            if (!touch || a.k.empty() || b.k.empty()) continue;
            total += 2.0 * cross_term(a, boxes_[a.theta], b, boxes_[b.theta]).real();
        }
    return total;
}

std::vector<WavePacketCoeff> SleeveField::packets(double rel_tol, int radius) const {
    std::map<std::pair<int, std::vector<int>>, cplx> acc;
    int n = this->n();
    for (const auto& c : comps_) {
        if (c.profile == Profile::Packet) {
            for (std::size_t q = 0; q < c.k.size(); ++q) {
                std::vector<int> key(c.k[q].data(), c.k[q].data() + n);
                acc[{c.theta, key}] += c.b[q];
            }
            continue;
        }
        IVec lo = c.k.front(), hi = lo;
        for (const auto& k : c.k) {
            lo = lo.cwiseMin(k);
            hi = hi.cwiseMax(k);
        }
        lo.array() -= radius;
        hi.array() += radius;
        std::vector<int> dims(n);
        std::size_t total = 1;
        for (int j = 0; j < n; ++j) total *= (dims[j] = hi[j] - lo[j] + 1);
        std::vector<cplx> vals(total);
        parallel_for(total, [&](std::size_t i) {
            IVec m(n);
            std::size_t r = i;
            for (int j = n - 1; j >= 0; --j) {
                m[j] = lo[j] + int(r % dims[j]);
                r /= dims[j];
            }
            cplx s(0.0, 0.0);
            for (std::size_t q = 0; q < c.k.size(); ++q)
                s += c.b[q] * rho_check(Profile::Narrow, (m - c.k[q]).cast<double>());
            vals[i] = s;
        });
        for (std::size_t i = 0; i < total; ++i) {
            std::vector<int> key(n);
            std::size_t r = i;
            for (int j = n - 1; j >= 0; --j) {
                key[j] = lo[j] + int(r % dims[j]);
                r /= dims[j];
            }
            acc[{c.theta, key}] += vals[i];
        }
    }
    double amax = 0.0;
    for (const auto& [k, a] : acc) amax = std::max(amax, std::abs(a));
    std::vector<WavePacketCoeff> out;
    for (const auto& [k, a] : acc) {
        if (std::abs(a) <= rel_tol * amax || a == cplx(0.0, 0.0)) continue;
        out.push_back({k.first, Eigen::Map<const IVec>(k.second.data(), n), a});
    }
    return out;
}

}  // namespace mtlab
