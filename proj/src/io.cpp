#include "mtlab/io.hpp"

#include <fmt/format.h>
#include <openssl/evp.h>

#include <cmath>
#include <fstream>
#include <sstream>

#include "mtlab/errors.hpp"

namespace mtlab {

std::string library_version() { return MTLAB_VERSION; }

std::string sha256_hex(const std::string& data) {
    unsigned char md[EVP_MAX_MD_SIZE];
    unsigned len = 0;
    EVP_Digest(data.data(), data.size(), md, &len, EVP_sha256(), nullptr);
    std::string out;
    for (unsigned i = 0; i < len; ++i) out += fmt::format("{:02x}", md[i]);
    return out;
}

std::string config_hash(const json& config) { return sha256_hex(config.dump()); }

std::string format_double(double x) {
    if (std::isnan(x)) return "nan";
    if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
    return fmt::format("{:.17g}", x);
}

std::string sweep_csv(const SweepResult& res) {
    std::string out = "inequality_id,n,R,lhs,rhs,ratio\n";
    for (const auto& r : res.rows)
        out += fmt::format("{},{},{},{},{},{}\n", r.id, r.n, format_double(r.R), format_double(r.lhs),
                           format_double(r.rhs), format_double(r.ratio));
    return out;
}

namespace {

json number(double x) {
    if (std::isfinite(x)) return x;
    return format_double(x);
}

json fit_json(const SlopeFit& f) {
    return {{"slope", number(f.slope)},
            {"intercept", number(f.intercept)},
            {"residual", number(f.residual)},
            {"degenerate", f.degenerate}};
}

json ivec(const IVec& v) {
    json a = json::array();
    for (int j = 0; j < v.size(); ++j) a.push_back(v[j]);
    return a;
}

IVec ivec_from(const json& a) {
    IVec v(int(a.size()));
    for (int j = 0; j < v.size(); ++j) v[j] = a.at(std::size_t(j)).get<int>();
    return v;
}

}  // namespace

json sweep_sidecar(const SweepResult& res, const json& config, std::uint64_t seed) {
    return {{"inequality_id", res.id},
            {"n", res.n},
            {"slope", number(res.fit.slope)},
            {"residual", number(res.fit.residual)},
            {"fit", fit_json(res.fit)},
            {"fit_max", fit_json(res.fit_max)},
            {"max_ratio", number(res.max_ratio)},
            {"max_recipe_slope", number(res.max_recipe_slope)},
            {"rows", res.rows.size()},
            {"config", config},
            {"config_hash", config_hash(config)},
            {"seed", seed},
            {"version", library_version()}};
}

json to_json(const PointConfiguration& cfg) {
    json pts = json::array();
    for (const auto& p : cfg.points) pts.push_back(ivec(p));
    json j = {{"n", cfg.n}, {"N", cfg.N}, {"mu", cfg.mu}, {"R", cfg.R}, {"seed", cfg.seed},
              {"points", pts}, {"target", number(cfg.target())}, {"samples", cfg.samples}};
    if (cfg.certified_volume) j["certified_volume"] = number(*cfg.certified_volume);
    if (cfg.sampled_volume) j["sampled_volume"] = number(*cfg.sampled_volume);
    j["constant"] = number(cfg.constant());
    return j;
}

json to_json(const AxiomReport& rep) {
    return {{"C0", number(rep.C0)}, {"C1", number(rep.C1)}, {"C2", number(rep.C2)},
            {"overlap", number(rep.overlap)}, {"da2_bodies", rep.da2_bodies},
            {"da2_skipped", rep.da2_skipped}, {"da0", rep.da0}, {"da1", rep.da1},
            {"da2", rep.da2}, {"pass", rep.pass()}};
}

json to_json(const RefinedReport& rep) {
    json strata = json::array();
    for (const auto& s : rep.strata)
        strata.push_back({{"M", s.M}, {"cubes", s.cubes}, {"lhs", number(s.lhs)}, {"rhs", number(s.rhs)}});
    return {{"lhs", number(rep.lhs)}, {"rhs", number(rep.rhs)}, {"ratio", number(rep.ratio)},
            {"M", rep.M}, {"strata", strata}};
}

json to_json(const MultibushPlan& plan) {
    json balls = json::array(), tubes = json::array(), bt = json::array();
    for (const auto& b : plan.balls) balls.push_back(ivec(b));
    for (const auto& t : plan.tubes)
        tubes.push_back({{"dir", t.dir}, {"shift", t.shift}, {"m", ivec(t.m)},
                         {"phase", std::arg(t.c)}});
    for (const auto& ids : plan.ball_tubes) bt.push_back(ids);
    return {{"variant", to_string(plan.variant)}, {"n", plan.n}, {"R", plan.R},
            {"ell", plan.ell}, {"ell_exact", plan.ell_exact}, {"seed", plan.seed},
            {"target", plan.target}, {"balls", balls}, {"ball_tubes", bt},
            {"tubes", tubes}, {"aligned", plan.aligned}, {"achieved", plan.achieved}};
}

MultibushPlan plan_from_json(const json& j) {
    try {
        MultibushPlan p;
        p.variant = variant_from_string(j.at("variant").get<std::string>());
        p.n = j.at("n").get<int>();
        p.R = j.at("R").get<double>();
        p.ell = j.at("ell").get<double>();
        p.ell_exact = j.at("ell_exact").get<double>();
        p.seed = j.at("seed").get<std::uint64_t>();
        p.target = j.at("target").get<long>();
        for (const auto& b : j.at("balls")) p.balls.push_back(ivec_from(b));
        for (const auto& ids : j.at("ball_tubes")) p.ball_tubes.push_back(ids.get<std::vector<int>>());
        for (const auto& t : j.at("tubes"))
            p.tubes.push_back({t.at("dir").get<int>(), t.at("shift").get<int>(), ivec_from(t.at("m")),
                               expi(t.at("phase").get<double>())});
        p.aligned = j.at("aligned").get<std::vector<double>>();
        p.achieved = j.at("achieved").get<std::vector<double>>();
        return p;
    } catch (const json::exception& e) {
        throw ConfigError(std::string("malformed plan: ") + e.what());
    }
}

json to_json(const MultibushResult& res) {
    return {{"variant", to_string(res.plan.variant)}, {"n", res.plan.n}, {"R", res.plan.R},
            {"ell", res.plan.ell}, {"balls", res.plan.balls.size()}, {"tubes", res.plan.tubes.size()},
            {"weight_points", res.points.points.size()},
            {"energy_w", number(res.energy_w)}, {"norm2", number(res.norm2)},
            {"norm2_sigma", number(res.norm2_sigma)}, {"norm2_upper", number(res.norm2_upper)},
            {"sup", number(res.sup)}, {"ratio", number(res.ratio)},
            {"lower_exponent", number(res.lower_exponent)}, {"c_ratio", number(res.c_ratio)},
            {"c_balls", number(res.c_balls)}, {"min_alignment", number(res.min_alignment)},
            {"energy_bound", number(res.energy_bound)}};
}

void write_text(const std::string& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw ConfigError("cannot write " + path);
    out << text;
    if (!out) throw ConfigError("cannot write " + path);
}

std::string read_text(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError("cannot read " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

}  // namespace mtlab
