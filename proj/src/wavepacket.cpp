#include "mtlab/wavepacket.hpp"

#include <fmt/format.h>

#include "mtlab/bump.hpp"
#include "mtlab/errors.hpp"

namespace mtlab {

std::vector<int> Grid::dims() const {
    std::vector<int> d(n());
    for (int i = 0; i < n(); ++i) d[i] = hi[i] - lo[i] + 1;
    return d;
}

std::size_t Grid::size() const {
    std::size_t s = 1;
    for (int d : dims()) s *= std::size_t(std::max(d, 0));
    return s;
}

IVec Grid::index(std::size_t flat) const {
    auto d = dims();
    IVec k(n());
    for (int i = n() - 1; i >= 0; --i) {
        k[i] = lo[i] + int(flat % d[i]);
        flat /= d[i];
    }
    return k;
}

Vec Grid::point(std::size_t flat) const { return origin + basis * index(flat).cast<double>(); }

Grid Grid::unit_cube(int n, double R) {
    int c = int(std::ceil(R));
    return {Vec::Zero(n), Mat::Identity(n, n), IVec::Constant(n, -c), IVec::Constant(n, c)};
}

Grid Grid::adapted(const AnisotropicBox& box, double half, int s) {
    int n = int(box.center.size());
    int c = int(std::floor(half * s + 1e-9));
    return {Vec::Zero(n), box.Tinv / double(s), IVec::Constant(n, -c), IVec::Constant(n, c)};
}

double Field::norm2() const {
    double acc = 0.0;
    for (const auto& z : v) acc += std::norm(z);
    return acc * grid.cell_volume();
}

double Field::norm_p(double p) const {
    double acc = 0.0;
    for (const auto& z : v) acc += std::pow(std::abs(z), p);
    return std::pow(acc * grid.cell_volume(), 1.0 / p);
}

double Field::max_abs() const {
    double m = 0.0;
    for (const auto& z : v) m = std::max(m, std::abs(z));
    return m;
}

std::vector<cplx> apply_axis(const std::vector<cplx>& in, const std::vector<int>& dims, int axis,
                             const Eigen::MatrixXcd& M) {
    using RowMat = Eigen::Matrix<cplx, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
    std::size_t pre = 1, post = 1;
    for (int i = 0; i < axis; ++i) pre *= dims[i];
    for (std::size_t i = axis + 1; i < dims.size(); ++i) post *= dims[i];
    int nin = dims[axis], nout = int(M.rows());
    if (M.cols() != nin) throw DomainError("apply_axis: shape mismatch");
    std::vector<cplx> out(pre * nout * post);
    for (std::size_t p = 0; p < pre; ++p) {
        Eigen::Map<const RowMat> a(in.data() + p * nin * post, nin, post);
        Eigen::Map<RowMat> b(out.data() + p * nout * post, nout, post);
        b.noalias() = M * a;
    }
    return out;
}

namespace {

// y = T x on the grid is y0 + d .* k when the grid is theta-adapted
bool adapted_axes(const Grid& g, const AnisotropicBox& box, Vec& y0, Vec& d) {
    Mat D = box.T * g.basis;
    double scale = D.cwiseAbs().maxCoeff();
    for (int i = 0; i < D.rows(); ++i)
        for (int j = 0; j < D.cols(); ++j)
            if (i != j && std::abs(D(i, j)) > 1e-9 * scale) return false;
    y0 = box.T * g.origin;
    d = D.diagonal();
    return true;
}

}  // namespace

DecomposeResult decompose(const Field& f, const AnisotropicBox& box, const DecomposeOptions& opt) {
    const Grid& g = f.grid;
    int n = g.n();
    Vec y0, d;
    if (!adapted_axes(g, box, y0, d))
        throw DomainError("decompose needs a field sampled on a theta-adapted lattice");
    DecomposeResult res;
    double fmax = f.max_abs();
    if (fmax == 0.0) return res;
    auto dims = g.dims();

    Vec ymin = Vec::Constant(n, INFINITY), ymax = Vec::Constant(n, -INFINITY);
    std::vector<cplx> h(f.v.size());
    for (std::size_t i = 0; i < f.v.size(); ++i) {
        IVec k = g.index(i);
        Vec x = g.origin + g.basis * k.cast<double>();
        h[i] = f.v[i] * expi(-kTwoPi * x.dot(box.center));
        if (std::abs(f.v[i]) >= opt.energy_floor * fmax)
            for (int j = 0; j < n; ++j) {
                double y = y0[j] + d[j] * k[j];
                ymin[j] = std::min(ymin[j], y);
                ymax[j] = std::max(ymax[j], y);
            }
    }

    std::vector<int> mlo(n), mcount(n), G(n);
    for (int j = 0; j < n; ++j) {
        mlo[j] = int(std::floor(ymin[j])) - opt.m_radius;
        mcount[j] = int(std::ceil(ymax[j])) + opt.m_radius - mlo[j] + 1;
        G[j] = std::max(16, 2 * mcount[j]);
    }

    // f_hat(A eta) on the periodic eta grid
    std::vector<cplx> F = h;
    std::vector<int> cur = dims;
    for (int j = 0; j < n; ++j) {
        Eigen::MatrixXcd M(G[j], dims[j]);
        for (int a = 0; a < G[j]; ++a) {
            double eta = -0.5 + double(a) / G[j];
            for (int k = 0; k < dims[j]; ++k)
                M(a, k) = expi(-kTwoPi * (y0[j] + d[j] * (g.lo[j] + k)) * eta);
        }
        F = apply_axis(F, cur, j, M);
        cur[j] = G[j];
    }
    double cv = g.cell_volume();
    double inside = 0.0, total = 0.0;
    for (std::size_t i = 0; i < F.size(); ++i) {
        F[i] *= cv;
        std::size_t r = i;
        bool in = true;
        for (int j = n - 1; j >= 0; --j) {
            double eta = -0.5 + double(r % G[j]) / G[j];
            r /= G[j];
            if (std::abs(eta) > 0.25 + 1e-12) in = false;
        }
        double e = std::norm(F[i]);
        total += e;
        if (in) inside += e;
    }
    res.leakage = total > 0 ? (total - inside) / total : 0.0;
    if (opt.check_support && res.leakage > opt.leak_tol)
        throw SupportViolation(fmt::format("Fourier leakage {:.3e} outside theta/4", res.leakage));

    for (int j = 0; j < n; ++j) {
        Eigen::MatrixXcd M(mcount[j], G[j]);
        for (int a = 0; a < mcount[j]; ++a)
            for (int b = 0; b < G[j]; ++b)
                M(a, b) = expi(kTwoPi * (mlo[j] + a) * (-0.5 + double(b) / G[j])) / double(G[j]);
        F = apply_axis(F, cur, j, M);
        cur[j] = mcount[j];
    }

    res.energy = f.norm2() / box.detT;
    double amax = 0.0;
    for (const auto& z : F) amax = std::max(amax, std::abs(z));
    double kept = 0.0;
    for (std::size_t i = 0; i < F.size(); ++i) {
        if (std::abs(F[i]) <= opt.drop_tol * amax) continue;
        IVec m(n);
        std::size_t r = i;
        for (int j = n - 1; j >= 0; --j) {
            m[j] = mlo[j] + int(r % mcount[j]);
            r /= mcount[j];
        }
        kept += std::norm(F[i]);
        res.coeffs.push_back({box.index, m, F[i]});
    }
    res.tail = std::sqrt(std::max(0.0, res.energy - kept) / res.energy);
    return res;
}

Field reconstruct(const std::vector<WavePacketCoeff>& coeffs, const BoxSet& boxes, const Grid& grid) {
    Field out(grid);
    int n = grid.n();
    auto dims = grid.dims();
    std::vector<std::vector<const WavePacketCoeff*>> by(boxes.size());
    for (const auto& c : coeffs) {
        if (c.theta < 0 || std::size_t(c.theta) >= boxes.size()) throw DomainError("coefficient box index out of range");
        by[c.theta].push_back(&c);
    }
    for (std::size_t t = 0; t < boxes.size(); ++t) {
        if (by[t].empty()) continue;
        const auto& box = boxes[t];
        Vec y0, d;
        if (adapted_axes(grid, box, y0, d)) {
            IVec lo = by[t][0]->m, hi = lo;
            for (auto* c : by[t]) {
                lo = lo.cwiseMin(c->m);
                hi = hi.cwiseMax(c->m);
            }
            std::vector<int> cur(n);
            for (int j = 0; j < n; ++j) cur[j] = hi[j] - lo[j] + 1;
            std::size_t total = 1;
            for (int c : cur) total *= c;
            std::vector<cplx> A(total, cplx(0.0, 0.0));
            for (auto* c : by[t]) {
                std::size_t flat = 0;
                for (int j = 0; j < n; ++j) flat = flat * cur[j] + (c->m[j] - lo[j]);
                A[flat] += c->a;
            }
            for (int j = 0; j < n; ++j) {
                Eigen::MatrixXcd M(dims[j], cur[j]);
                for (int k = 0; k < dims[j]; ++k)
                    for (int m = 0; m < cur[j]; ++m)
                        M(k, m) = bump::phi(y0[j] + d[j] * (grid.lo[j] + k) - (lo[j] + m));
                A = apply_axis(A, cur, j, M);
                cur[j] = dims[j];
            }
            parallel_for(out.v.size(), [&](std::size_t i) {
                Vec x = grid.point(i);
                out.v[i] += box.detT * expi(kTwoPi * x.dot(box.center)) * A[i];
            });
        } else {
            parallel_for(out.v.size(), [&](std::size_t i) {
                Vec x = grid.point(i);
                Vec y = box.T * x;
                cplx acc(0.0, 0.0);
                for (auto* c : by[t]) acc += c->a * bump::Phi(y - c->m.cast<double>());
                out.v[i] += box.detT * expi(kTwoPi * x.dot(box.center)) * acc;
            });
        }
    }
    return out;
}

ParsevalReport parseval_check(const Field& f, const std::vector<WavePacketCoeff>& coeffs,
                              const AnisotropicBox& box) {
    ParsevalReport r;
    for (const auto& c : coeffs)
        if (c.theta == box.index) r.lhs += packet_l2sq(box, c.a);
    r.rhs = bump::Phi_l2sq(f.grid.n()) * f.norm2();
    if (r.lhs == 0.0 && r.rhs == 0.0)
        r.ratio = 1.0;
    else
        r.ratio = r.lhs / r.rhs;
    return r;
}

double packet_l2sq(const AnisotropicBox& box, cplx a) {
    return box.detT * bump::Phi_l2sq(int(box.center.size())) * std::norm(a);
}

double packet_lp(const AnisotropicBox& box, cplx a, double p) {
    int n = int(box.center.size());
    return std::pow(box.detT, 1.0 - 1.0 / p) * std::abs(a) * std::pow(bump::Phi_lp(n, p), 1.0 / p);
}

cplx packet_value(const AnisotropicBox& box, const IVec& m, cplx a, const Vec& x) {
    return box.detT * a * expi(kTwoPi * x.dot(box.center)) * bump::Phi(box.T * x - m.cast<double>());
}

double packet_weight(const AnisotropicBox& box, int N, const Vec& x) {
    if (N <= int(x.size())) throw ConfigError("packet weight order must exceed n");
    return box.detT * std::pow(1.0 + (box.T * x).norm(), -N);
}

}  // namespace mtlab
