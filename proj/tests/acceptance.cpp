#include <fmt/format.h>

#include <chrono>
#include <cmath>
#include <functional>
#include <string>
#include <vector>

#include "mtlab/extremal.hpp"
#include "mtlab/rng.hpp"

using namespace mtlab;

namespace {

using Clock = std::chrono::steady_clock;

struct Outcome {
    bool pass = false;
    std::string detail;
};

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

int failures = 0;

void report(int id, const std::function<Outcome()>& body) {
    auto t0 = Clock::now();
    Outcome o;
    try {
        o = body();
    } catch (const std::exception& e) {
        o = {false, std::string("exception: ") + e.what()};
    }
    failures += !o.pass;
    fmt::print("{} criterion {}: {} [{:.1f} s]\n", o.pass ? "PASS" : "FAIL", id, o.detail, seconds_since(t0));
    std::fflush(stdout);
}

// criteria 1 and 2 share the corpus
struct RoundTrip {
    double worst_excess = -INFINITY, worst_err = 0.0, lo = INFINITY, hi = -INFINITY, secs = 0.0;
};

RoundTrip round_trip_corpus() {
    RoundTrip rt;
    auto t0 = Clock::now();
    auto boxes = curvature_boxes(CurveSpec::moment(2), 256);
    for (int i = 0; i < 20; ++i) {
        Rng rng(1000 + std::uint64_t(i));
        int th = int(rng.integer(0, long(boxes.size()) - 1));
        SleeveField f(boxes);
        for (int q = 0; q < 20; ++q) {
            IVec k(2);
            k << int(rng.integer(-4, 4)), int(rng.integer(-4, 4));
            f.add_generator(th, Profile::Narrow, k, rng.cnormal());
        }
        const auto& box = boxes[std::size_t(th)];
        auto G = Grid::adapted(box, 128, 2);
        auto F = f.sample_component(0, G);
        auto dec = decompose(F, box);
        auto back = reconstruct(dec.coeffs, boxes, G);
        double num = 0.0, den = 0.0;
        for (std::size_t j = 0; j < F.v.size(); ++j) {
            num += std::norm(F.v[j] - back.v[j]);
            den += std::norm(F.v[j]);
        }
        double err = std::sqrt(num / den);
        rt.worst_err = std::max(rt.worst_err, err);
        rt.worst_excess = std::max(rt.worst_excess, err - (1e-6 + dec.tail));
        auto pr = parseval_check(F, dec.coeffs, box);
        rt.lo = std::min(rt.lo, pr.ratio);
        rt.hi = std::max(rt.hi, pr.ratio);
    }
    rt.secs = seconds_since(t0);
    return rt;
}

SlopeFit ah_sweep(int n, const std::vector<double>& Rs) {
    std::vector<double> y;
    for (double R : Rs) {
        auto g = density_for_scale(CurveSpec::moment(n), [](double) { return cplx(1.0); }, R);
        y.push_back(ball_energy(g, R) / g.norm2());
    }
    return fit_loglog(Rs, y);
}

struct CorpusSpec {
    std::string id;
    int count;
    std::vector<double> Rs;
};

SleeveField unimodular_field(double R, int count, std::uint64_t seed) {
    auto boxes = curvature_boxes(CurveSpec::moment(2), R);
    Rng rng(seed);
    SleeveField f(boxes);
    for (int i = 0; i < count; ++i) {
        int th = int(rng.integer(0, long(boxes.size()) - 1));
        f.add_generator(th, Profile::Packet, plank_index(boxes[std::size_t(th)], rng.in_ball(2, 0.5 * R)), rng.unimodular());
    }
    return f;
}

}  // namespace

int main() {
    auto start = Clock::now();
    RoundTrip rt;
    report(1, [&] {
        rt = round_trip_corpus();
        bool ok = rt.worst_excess <= 0.0 && rt.secs <= 60.0;
        return Outcome{ok, fmt::format("20 fields n=2 R=256, max rel L2 error {:.2e} (bound 1e-6 + tail), {:.1f} s of 60",
                                       rt.worst_err, rt.secs)};
    });
    report(2, [&] {
        bool ok = rt.lo >= 1.0 - 1e-4 && rt.hi <= 1.0 + 1e-4;
        return Outcome{ok, fmt::format("Parseval ratio in [{:.10f}, {:.10f}], band 1 +- 1e-4", rt.lo, rt.hi)};
    });
    report(3, [] {
        auto t0 = Clock::now();
        auto f2 = ah_sweep(2, {32, 64, 128, 256, 512});
        auto f3 = ah_sweep(3, {64, 128, 256, 512});
        double secs = seconds_since(t0);
        bool ok = std::abs(f2.slope - 1.0) <= 0.15 && std::abs(f3.slope - 2.0) <= 0.2 && secs <= 600.0;
        return Outcome{ok, fmt::format("ball energy slope n=2 {:.4f} (1 +- 0.15), n=3 {:.4f} (2 +- 0.2)", f2.slope, f3.slope)};
    });
    report(4, [] {
        Rng rng(4);
        std::vector<cplx> a(8);
        for (auto& v : a) v = rng.cnormal();
        double s = 0.0;
        for (auto v : a) s += std::norm(v);
        std::vector<double> Rs{32, 64, 128, 256, 512}, y;
        for (double R : Rs) y.push_back(lhs_functional(arc_sum_instance(2, R, a)) / s);
        auto fit = fit_loglog(Rs, y);
        return Outcome{std::abs(fit.slope) <= 0.15, fmt::format("8 arcs n=2, slope {:.4f} (0 +- 0.15)", fit.slope)};
    });
    report(5, [] {
        bool ok = true;
        for (int n = 2; n <= 6; ++n) {
            ExponentTable t(n);
            ok = ok && Rational(n - 1) + t.e_L == t.a_MT && Rational(n - 1) + t.e_P == t.a_tube;
            ok = ok && t.r == Rational(n * (n + 1), n * (n + 1) - 2);
        }
        ExponentTable t2(2), t3(3);
        ok = ok && t2.a_MT == Rational(1, 3) && t2.a_tube == Rational(1, 3) && t2.r == Rational(3, 2);
        ok = ok && t3.thm54_i == Rational(-3, 2) && t3.thm54_ii == Rational(-5, 6) && t3.thm54_iii == Rational(-5, 3);
        return Outcome{ok, fmt::format("exact; n=3 bounds {}, {}, {}", to_string(t3.thm54_i), to_string(t3.thm54_ii),
                                       to_string(t3.thm54_iii))};
    });
    report(6, [] {
        // C_emp = 1 for every id
        const double C_emp = 1.0;
        std::vector<CorpusSpec> corpora{{"cor31a", 34, {64, 256, 1024}}, {"cor33", 34, {64, 256, 1024}},
                                        {"cor34", 34, {64, 256, 1024}},  {"cor35", 34, {64, 256, 1024}},
                                        {"thm22", 34, {64, 256, 1024}},  {"thm11", 25, {32, 64, 128, 256}},
                                        {"thm16", 25, {32, 64, 128, 256}}};
        bool ok = true;
        std::string detail = fmt::format("C_emp {}", C_emp);
        auto curve = CurveSpec::moment(2);
        for (const auto& c : corpora) {
            auto res = exponent_sweep(c.id, 2, [&](double R) { return random_instances(c.id, curve, R, c.count, 7); }, c.Rs);
            bool good = res.max_ratio <= C_emp && res.fit_max.slope <= 0.2 && res.fit.slope <= 0.2;
            ok = ok && good;
            detail += fmt::format("; {} {} rows max {:.3g} slope {:.3f}/{:.3f} recipe {:.3f}{}", c.id, res.rows.size(),
                                  res.max_ratio, res.fit_max.slope, res.fit.slope, res.max_recipe_slope, good ? "" : " RED");
        }
        return Outcome{ok, detail};
    });
    report(7, [] {
        auto t0 = Clock::now();
        auto cfg = carbery_points(2, 20, 6, 32, 1);
        double secs = seconds_since(t0);
        bool ok = cfg.certified_volume && *cfg.certified_volume > 0.0 && cfg.constant() > 0.0 && secs <= 300.0;
        return Outcome{ok, fmt::format("n=2 N=20 mu=6 R=32, certified min hull {:.3f}, c = {:.4f}",
                                       cfg.certified_volume.value_or(0.0), cfg.constant())};
    });
    report(8, [] {
        auto t0 = Clock::now();
        bool ok = true;
        std::string detail;
        for (auto v : {MultibushVariant::S, MultibushVariant::L, MultibushVariant::P}) {
            auto res = build_multibush(v, 3, 512, 1);
            auto ax = axiom_check(res.structure);
            bool good = ax.pass() && res.min_alignment >= 0.1 && res.c_ratio > 0.0 && res.c_balls > 0.0;
            ok = ok && good;
            detail += fmt::format("{}{}: m={} c_balls {:.3g} align {:.3f} c' {:.3g} C0 {:.2f} C1 {:.2f} C2 {:.2f}{}",
                                  detail.empty() ? "" : "; ", to_string(v), res.plan.balls.size(), res.c_balls,
                                  res.min_alignment, res.c_ratio, ax.C0, ax.C1, ax.C2, good ? "" : " RED");
        }
        ok = ok && seconds_since(t0) <= 1800.0;
        return Outcome{ok, "n=3 R=512, " + detail};
    });
    report(9, [] {
        bool ok = true;
        std::string detail;
        for (auto mode : {IncidenceMode::Contain, IncidenceMode::Intersect}) {
            double single = 0.0, other = 0.0;
            for (double R : {64.0, 256.0, 1024.0}) {
                RefinedOptions opt;
                opt.mode = mode;
                auto ball = Region::ball(Vec::Zero(2), R);
                single = std::max(single, refined_decoupling_check(*single_packet_instance(2, R).f, ball, opt).ratio);
                other = std::max(other, refined_decoupling_check(*bush_instance(2, R).f, ball, opt).ratio);
                other = std::max(other, refined_decoupling_check(unimodular_field(R, 100, 9), ball, opt).ratio);
            }
            bool good = single <= 1.0 && other <= 10.0;
            ok = ok && good;
            detail += fmt::format("{}{}: single {:.3f} (<= 1), bush/random {:.3f} (<= 10)", detail.empty() ? "" : "; ",
                                  mode == IncidenceMode::Contain ? "contain" : "intersect", single, other);
        }
        return Outcome{ok, detail};
    });
    fmt::print("{} of 9 criteria failed, total {:.1f} s\n", failures, seconds_since(start));
    return failures == 0 ? 0 : 1;
}
