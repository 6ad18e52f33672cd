#include <CLI11.hpp>
#include <fmt/format.h>

#include <iostream>
#include <optional>

#include "mtlab/errors.hpp"
#include "mtlab/extremal.hpp"
#include "mtlab/io.hpp"
#include "mtlab/rng.hpp"

using namespace mtlab;

namespace {

struct Options {
    std::string config_path;
    int n = 2;
    std::vector<double> R;
    std::string ineq;
    std::uint64_t seed = 1;
    double eps = 0.05;
    double K = 10.0;
    double r = 0.0;
    int count = 1;
    std::string csv, sidecar, out;
    std::string name = "bump";
    std::string kind = "random";
    std::string mode = "contain";
    std::string variant = "S";
    double density = 1.0;
    long N = 20, mu = 6;
    std::string verify = "exhaustive";
    std::string plan_in, plan_out;
};

// values from --config fill every option that was not given on the command line
void apply_config(CLI::App& app, Options& o) {
    if (o.config_path.empty()) return;
    json cfg;
    try {
        cfg = json::parse(read_text(o.config_path));
    } catch (const json::exception& e) {
        throw ConfigError(std::string("config: ") + e.what());
    }
    if (!cfg.is_object()) throw ConfigError("config must be a JSON object");
    auto unset = [&](const std::string& flag) {
        for (auto* sub : app.get_subcommands()) {
            auto* opt = sub->get_option_no_throw(flag);
            if (opt && opt->count() > 0) return false;
        }
        return true;
    };
    try {
        for (auto& [key, val] : cfg.items()) {
            std::string flag = "--" + key;
            if (!unset(flag)) continue;
            if (key == "n") o.n = val.get<int>();
            else if (key == "R") o.R = val.get<std::vector<double>>();
            else if (key == "ineq") o.ineq = val.get<std::string>();
            else if (key == "seed") o.seed = val.get<std::uint64_t>();
            else if (key == "eps") o.eps = val.get<double>();
            else if (key == "K") o.K = val.get<double>();
            else if (key == "r") o.r = val.get<double>();
            else if (key == "count") o.count = val.get<int>();
            else if (key == "csv") o.csv = val.get<std::string>();
            else if (key == "sidecar") o.sidecar = val.get<std::string>();
            else if (key == "out") o.out = val.get<std::string>();
            else if (key == "name") o.name = val.get<std::string>();
            else if (key == "kind") o.kind = val.get<std::string>();
            else if (key == "mode") o.mode = val.get<std::string>();
            else if (key == "variant") o.variant = val.get<std::string>();
            else if (key == "density") o.density = val.get<double>();
            else if (key == "N") o.N = val.get<long>();
            else if (key == "mu") o.mu = val.get<long>();
            else if (key == "verify") o.verify = val.get<std::string>();
            else throw ConfigError("unknown config key '" + key + "'");
        }
    } catch (const json::exception& e) {
        throw ConfigError(std::string("config: ") + e.what());
    }
}

void check_scales(const Options& o, std::size_t min_count) {
    if (o.R.size() < min_count) throw ConfigError(fmt::format("need at least {} value(s) of R", min_count));
    for (double R : o.R)
        if (!(R >= 2.0)) throw ConfigError("R must be >= 2");
    if (o.n < 2 || o.n > 6) throw ConfigError("n must be in 2..6");
}

void emit(const std::string& path, const std::string& text) {
    if (path.empty())
        std::cout << text;
    else
        write_text(path, text);
}

json base_config(const std::string& kind, const Options& o) {
    return {{"experiment", kind}, {"n", o.n}, {"R", o.R}, {"seed", o.seed}, {"eps", o.eps}, {"K", o.K}, {"r", o.r}};
}

json stamp(json body, const json& config) {
    body["config"] = config;
    body["config_hash"] = config_hash(config);
    body["version"] = library_version();
    return body;
}

void write_sweep(const SweepResult& res, const json& config, const Options& o) {
    emit(o.csv, sweep_csv(res));
    std::string side = sweep_sidecar(res, config, o.seed).dump(2) + "\n";
    if (!o.sidecar.empty()) write_text(o.sidecar, side);
}

int run_sweep(const Options& o) {
    check_scales(o, 3);
    const auto& ids = inequality_ids();
    if (std::find(ids.begin(), ids.end(), o.ineq) == ids.end()) throw ConfigError("unknown inequality id '" + o.ineq + "'");
    if (o.count < 1) throw ConfigError("count must be positive");
    auto curve = CurveSpec::moment(o.n);
    auto gen = [&](double R) {
        auto v = random_instances(o.ineq, curve, R, o.count, o.seed);
        for (auto& inst : v) {
            inst.eps = o.eps;
            inst.K = o.K;
            inst.r = o.r;
        }
        return v;
    };
    auto res = exponent_sweep(o.ineq, o.n, gen, o.R);
    json cfg = base_config("sweep", o);
    cfg["ineq"] = o.ineq;
    cfg["count"] = o.count;
    write_sweep(res, cfg, o);
    return 0;
}

InequalityInstance example_instance(const Options& o, double R) {
    if (o.name == "bump") return bump_weight_instance(o.n, R, o.seed);
    if (o.name == "bush") return bush_instance(o.n, R);
    if (o.name == "single") return single_packet_instance(o.n, R, o.seed);
    if (o.name == "arcs") {
        Rng rng(o.seed);
        std::vector<cplx> a(8);
        for (auto& v : a) v = rng.cnormal();
        return arc_sum_instance(o.n, R, a);
    }
    throw ConfigError("unknown example '" + o.name + "'");
}

int run_example(const Options& o) {
    check_scales(o, 3);
    std::string id = example_instance(o, o.R.front()).id;
    auto gen = [&](double R) {
        auto inst = example_instance(o, R);
        inst.eps = o.eps;
        inst.K = o.K;
        inst.r = o.r;
        return std::vector<InequalityInstance>{std::move(inst)};
    };
    auto res = exponent_sweep(id, o.n, gen, o.R);
    json cfg = base_config("example", o);
    cfg["name"] = o.name;
    write_sweep(res, cfg, o);
    return 0;
}

SleeveField refined_field(const Options& o, double R) {
    if (o.kind == "random") return *bump_weight_instance(o.n, R, o.seed).f;
    if (o.kind == "bush") return *bush_instance(o.n, R).f;
    if (o.kind == "single") return *single_packet_instance(o.n, R, o.seed).f;
    throw ConfigError("unknown field kind '" + o.kind + "'");
}

int run_refined(const Options& o) {
    check_scales(o, 1);
    RefinedOptions ro;
    ro.eps = o.eps;
    if (o.mode == "intersect") ro.mode = IncidenceMode::Intersect;
    else if (o.mode != "contain") throw ConfigError("mode must be contain or intersect");
    json rows = json::array();
    for (double R : o.R) {
        auto f = refined_field(o, R);
        auto rep = refined_decoupling_check(f, Region::ball(Vec::Zero(o.n), f.R()), ro);
        json row = to_json(rep);
        row["R"] = f.R();
        rows.push_back(row);
    }
    json cfg = base_config("refined-check", o);
    cfg["kind"] = o.kind;
    cfg["mode"] = o.mode;
    emit(o.out, stamp({{"reports", rows}}, cfg).dump(2) + "\n");
    return 0;
}

int run_axioms(const Options& o) {
    check_scales(o, 1);
    if (o.R.size() != 1) throw ConfigError("axioms takes a single R");
    MultibushOptions mo;
    mo.density = o.density;
    auto v = variant_from_string(o.variant);
    auto res = build_multibush(v, o.n, o.R.front(), o.seed, mo);
    auto rep = axiom_check(res.structure);
    if (!o.plan_out.empty()) write_text(o.plan_out, to_json(res.plan).dump() + "\n");
    json cfg = base_config("axioms", o);
    cfg["variant"] = o.variant;
    cfg["density"] = o.density;
    json body = {{"witness", to_json(res)}, {"axioms", to_json(rep)}};
    bool ok = rep.pass() && res.min_alignment >= 0.1;
    body["pass"] = ok;
    emit(o.out, stamp(body, cfg).dump(2) + "\n");
    if (!ok) {
        std::cerr << "invariant failure: axioms or alignment did not hold\n";
        return 3;
    }
    return 0;
}

int run_points(const Options& o) {
    if (o.R.size() != 1) throw ConfigError("points takes a single R");
    if (o.N < 1 || o.mu <= o.n || o.mu > o.N) throw ConfigError("need n < mu <= N");
    CarberyOptions co;
    if (o.verify == "exhaustive") co.check = HullCheck::Exhaustive;
    else if (o.verify == "sampled") co.check = HullCheck::Sampled;
    else if (o.verify == "none") co.check = HullCheck::None;
    else throw ConfigError("verify must be exhaustive, sampled or none");
    auto cfg_pts = carbery_points(o.n, o.N, o.mu, o.R.front(), o.seed, co);
    json cfg = base_config("points", o);
    cfg["N"] = o.N;
    cfg["mu"] = o.mu;
    cfg["verify"] = o.verify;
    emit(o.out, stamp(to_json(cfg_pts), cfg).dump(2) + "\n");
    return 0;
}

int run_replay(const Options& o) {
    if (o.plan_in.empty()) throw ConfigError("replay needs --plan");
    json j;
    try {
        j = json::parse(read_text(o.plan_in));
    } catch (const json::exception& e) {
        throw ConfigError(std::string("plan: ") + e.what());
    }
    auto plan = plan_from_json(j);
    MultibushField field(CurveSpec::moment(plan.n), plan);
    double worst = 0.0, min_align = std::numeric_limits<double>::infinity();
    for (std::size_t b = 0; b < plan.balls.size(); ++b) {
        double v = std::abs(field.F(plan.balls[b].cast<double>()));
        worst = std::max(worst, std::abs(v - plan.achieved[b]) / std::max(plan.achieved[b], 1e-300));
        min_align = std::min(min_align, v / plan.aligned[b]);
    }
    json cfg = {{"experiment", "replay"}, {"plan_hash", sha256_hex(j.dump())}};
    json body = {{"balls", plan.balls.size()}, {"tubes", plan.tubes.size()},
                 {"max_relative_deviation", worst}, {"min_alignment", min_align}};
    emit(o.out, stamp(body, cfg).dump(2) + "\n");
    if (worst > 1e-9) {
        std::cerr << "replay differs from the recorded plan\n";
        return 3;
    }
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"mtlab: weighted restriction and decoupling experiments"};
    app.require_subcommand(1, 1);
    app.set_version_flag("--version", library_version());
    Options o;
    app.add_option("--config", o.config_path, "JSON config; flags override it");

    auto common = [&](CLI::App* s) {
        s->add_option("--n", o.n, "dimension");
        s->add_option("--R", o.R, "scales")->delimiter(',');
        s->add_option("--seed", o.seed);
        s->add_option("--eps", o.eps);
        s->add_option("--K", o.K, "RapDec order");
        s->add_option("--r", o.r, "weight exponent (0: table value)");
    };
    auto* sweep = app.add_subcommand("sweep", "random-corpus sweep of one inequality");
    common(sweep);
    sweep->add_option("--ineq", o.ineq);
    sweep->add_option("--count", o.count, "instances per scale");
    sweep->add_option("--csv", o.csv);
    sweep->add_option("--sidecar", o.sidecar);

    auto* example = app.add_subcommand("example", "sharpness example swept over R");
    common(example);
    example->add_option("--name", o.name, "bump | bush | single | arcs");
    example->add_option("--csv", o.csv);
    example->add_option("--sidecar", o.sidecar);

    auto* refined = app.add_subcommand("refined-check", "refined decoupling monitor");
    common(refined);
    refined->add_option("--kind", o.kind, "random | bush | single");
    refined->add_option("--mode", o.mode, "contain | intersect");
    refined->add_option("--out", o.out);

    auto* axioms = app.add_subcommand("axioms", "multibush witness and axiom check");
    common(axioms);
    axioms->add_option("--variant", o.variant, "L | P | S");
    axioms->add_option("--density", o.density);
    axioms->add_option("--plan", o.plan_out, "write the plan JSON here");
    axioms->add_option("--out", o.out);

    auto* points = app.add_subcommand("points", "Carbery point configuration");
    common(points);
    points->add_option("--N", o.N);
    points->add_option("--mu", o.mu);
    points->add_option("--verify", o.verify, "exhaustive | sampled | none");
    points->add_option("--out", o.out);

    auto* replay = app.add_subcommand("replay", "re-evaluate a stored multibush plan");
    replay->add_option("--plan", o.plan_in)->required();
    replay->add_option("--out", o.out);

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForVersion& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 2;
    }
    try {
        apply_config(app, o);
        if (*sweep) return run_sweep(o);
        if (*example) return run_example(o);
        if (*refined) return run_refined(o);
        if (*axioms) return run_axioms(o);
        if (*points) return run_points(o);
        return run_replay(o);
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "numeric failure: " << e.what() << "\n";
        return 3;
    }
}
