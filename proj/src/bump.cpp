#include "mtlab/bump.hpp"

#include <map>
#include <mutex>
#include <vector>

#include "mtlab/quadrature.hpp"

namespace mtlab::bump {

namespace {

constexpr int kPerUnit = 128;
constexpr double kH = 1.0 / kPerUnit;

double psi(double s) {
    if (s <= 0.0) return 0.0;
    if (s >= 1.0) return 1.0;
    double a = std::exp(-1.0 / s), b = std::exp(-1.0 / (1.0 - s));
    return a / (a + b);
}

// quadrature of the transition zone [1/4, 1/2]
struct Transition {
    std::vector<double> t, w, h;
    Transition() {
        const int panels = 16;
        for (int p = 0; p < panels; ++p)
            gauss_on(0.25 + 0.25 * p / panels, 0.25 + 0.25 * (p + 1) / panels, 48, t, w);
        for (double x : t) h.push_back(hat(x));
    }
};

const Transition& transition() {
    static const Transition tr;
    return tr;
}

struct Table {
    std::vector<double> f, df;
    Table() {
        int N = int(kRange * kPerUnit) + 2;
        f.resize(N);
        df.resize(N);
        parallel_for(N, [&](std::size_t i) {
            f[i] = phi_exact(i * kH);
            df[i] = dphi_exact(i * kH);
        });
    }
};

const Table& table() {
    static const Table tb;
    return tb;
}

}  // namespace

double hat(double t) {
    double a = std::abs(t);
    if (a <= 0.25) return 1.0;
    if (a >= 0.5) return 0.0;
    return 1.0 - psi(4.0 * (a - 0.25));
}

double phi_exact(double x) {
    const auto& tr = transition();
    double flat;
    double a = 0.5 * kPi * x;
    if (std::abs(x) < 1e-4)
        flat = 0.25 * (1.0 - a * a / 6.0 + a * a * a * a / 120.0);
    else
        flat = std::sin(a) / (kTwoPi * x);
    double acc = 0.0;
    for (std::size_t i = 0; i < tr.t.size(); ++i) acc += tr.w[i] * tr.h[i] * std::cos(kTwoPi * x * tr.t[i]);
    return 2.0 * (flat + acc);
}

double dphi_exact(double x) {
    const auto& tr = transition();
    double a = 0.5 * kPi, flat;
    if (std::abs(x) < 1e-4)
        flat = (a / kTwoPi) * (-a * a * x / 3.0 + std::pow(a, 4) * x * x * x / 30.0);
    else
        flat = (a * std::cos(a * x) * x - std::sin(a * x)) / (kTwoPi * x * x);
    double acc = 0.0;
    for (std::size_t i = 0; i < tr.t.size(); ++i)
        acc -= tr.w[i] * tr.h[i] * kTwoPi * tr.t[i] * std::sin(kTwoPi * x * tr.t[i]);
    return 2.0 * (flat + acc);
}

double phi(double x) {
    double a = std::abs(x);
    if (a >= kRange) return 0.0;
    const auto& tb = table();
    double u = a * kPerUnit;
    auto i = std::size_t(u);
    double s = u - double(i);
    double s2 = s * s, s3 = s2 * s;
    double h00 = 2 * s3 - 3 * s2 + 1, h10 = s3 - 2 * s2 + s, h01 = -2 * s3 + 3 * s2, h11 = s3 - s2;
    return h00 * tb.f[i] + h10 * kH * tb.df[i] + h01 * tb.f[i + 1] + h11 * kH * tb.df[i + 1];
}

double dphi(double x) {
    double a = std::abs(x);
    if (a >= kRange) return 0.0;
    const auto& tb = table();
    double u = a * kPerUnit;
    auto i = std::size_t(u);
    double s = u - double(i);
    double s2 = s * s;
    double d00 = 6 * s2 - 6 * s, d10 = 3 * s2 - 4 * s + 1, d01 = -6 * s2 + 6 * s, d11 = 3 * s2 - 2 * s;
    double v = (d00 * tb.f[i] + d01 * tb.f[i + 1]) / kH + d10 * tb.df[i] + d11 * tb.df[i + 1];
    return x < 0 ? -v : v;
}

double gram(double d, bool narrow) {
    if (narrow) return 0.5 * gram(0.5 * d, false);
    const auto& tr = transition();
    double a = 0.5 * kPi * d;
    double flat = std::abs(d) < 1e-8 ? 0.25 : std::sin(a) / (kTwoPi * d);
    double acc = 0.0;
    for (std::size_t i = 0; i < tr.t.size(); ++i)
        acc += tr.w[i] * tr.h[i] * tr.h[i] * std::cos(kTwoPi * d * tr.t[i]);
    return 2.0 * (flat + acc);
}

double phi_lp(double p) {
    static std::mutex mu;
    static std::map<double, double> cache;
    std::lock_guard lock(mu);
    auto it = cache.find(p);
    if (it != cache.end()) return it->second;
    const auto& tb = table();
    double acc = 0.5 * std::pow(std::abs(tb.f[0]), p);
    for (std::size_t i = 1; i + 1 < tb.f.size(); ++i) acc += std::pow(std::abs(tb.f[i]), p);
    double v = 2.0 * kH * acc;
    cache[p] = v;
    return v;
}

double Phi(const Vec& y) {
    double v = 1.0;
    for (int i = 0; i < y.size(); ++i) v *= phi(y[i]);
    return v;
}

double Phi_hat(const Vec& eta) {
    double v = 1.0;
    for (int i = 0; i < eta.size(); ++i) v *= hat(eta[i]);
    return v;
}

}  // namespace mtlab::bump
