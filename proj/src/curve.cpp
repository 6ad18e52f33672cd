#include "mtlab/curve.hpp"

#include <boost/math/special_functions/factorials.hpp>
#include <cmath>

#include "mtlab/errors.hpp"
#include "mtlab/quadrature.hpp"

namespace mtlab {

CurveSpec::CurveSpec(std::string name, int n, Oracle d, double floor, double a, double b)
    : name_(std::move(name)), n_(n), d_(std::move(d)), floor_(floor), a_(a), b_(b) {
    if (n < 2) throw ConfigError("curve dimension must be >= 2");
    if (!(b > a)) throw ConfigError("empty parameter interval");
    for (int s = 0; s <= 256; ++s) {
        double xi = a + (b - a) * s / 256.0;
        max_speed_ = std::max(max_speed_, speed(xi));
        for (int j = 0; j <= n + 1; ++j) cn1_ = std::max(cn1_, deriv(xi, j).norm());
    }
}

CurveSpec CurveSpec::moment(int n) {
    auto d = [n](double xi, int j) {
        Vec v = Vec::Zero(n);
        for (int i = 1; i <= n; ++i) {
            if (i < j) continue;
            double c = boost::math::factorial<double>(i) / boost::math::factorial<double>(i - j);
            v[i - 1] = c * std::pow(xi, i - j);
        }
        return v;
    };
    double floor = 1.0;  // wedge is prod j! >= 1
    return CurveSpec("moment", n, d, floor);
}

CurveSpec CurveSpec::helix() {
    auto d = [](double xi, int j) {
        Vec v(3);
        // j-th derivative of sin is sin(xi + j pi/2)
        double sj = std::sin(xi + j * kPi / 2), cj = std::cos(xi + j * kPi / 2);
        v[0] = j == 0 ? xi : (j == 1 ? 1.0 : 0.0);
        v[1] = sj;
        v[2] = j == 0 ? cj - 1.0 : cj;
        return v;
    };
    return CurveSpec("helix", 3, d, 0.5);
}

CurveSpec CurveSpec::by_name(const std::string& name, int n) {
    if (name == "moment") return moment(n);
    if (name == "helix") {
        if (n != 3) throw ConfigError("helix curve requires n = 3");
        return helix();
    }
    throw ConfigError("unknown curve '" + name + "'");
}

Mat CurveSpec::jet(double xi) const {
    Mat m(n_, n_);
    for (int j = 1; j <= n_; ++j) m.col(j - 1) = deriv(xi, j);
    return m;
}

double CurveSpec::wedge(double xi) const { return jet(xi).determinant(); }

double CurveSpec::arclength(double s, double t) const {
    if (t < s) return -arclength(t, s);
    int panels = std::max(1, int(std::ceil((t - s) * 32)));
    double h = (t - s) / panels, acc = 0.0;
    const auto& g = gauss_legendre(12);
    for (int p = 0; p < panels; ++p) {
        double m = s + (p + 0.5) * h;
        for (std::size_t i = 0; i < g.x.size(); ++i) acc += g.w[i] * 0.5 * h * speed(m + 0.5 * h * g.x[i]);
    }
    return acc;
}

double CurveSpec::advance(double s, double len) const {
    double t = s + len / speed(s);
    for (int it = 0; it < 50; ++it) {
        double r = arclength(s, t) - len;
        t -= r / speed(t);
        if (std::abs(r) < 1e-15 * std::max(1.0, len)) break;
    }
    return t;
}

FrenetFrame frenet_frame(const CurveSpec& curve, double t) {
    if (t < curve.a() - 1e-12 || t > curve.b() + 1e-12)
        throw DomainError("frame parameter outside the curve interval");
    Mat j = curve.jet(t);
    if (std::abs(j.determinant()) < curve.floor())
        throw WellCurvedViolation("derivative wedge below the well-curved floor");
    int n = curve.n();
    Mat e(n, n);
    for (int c = 0; c < n; ++c) {
        Vec v = j.col(c);
        for (int pass = 0; pass < 2; ++pass)
            for (int k = 0; k < c; ++k) v -= e.col(k).dot(v) * e.col(k);
        e.col(c) = v.normalized();
    }
    return {t, e};
}

}  // namespace mtlab
