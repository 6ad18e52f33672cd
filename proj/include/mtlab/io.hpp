#pragma once
#include <json.hpp>
#include <string>

#include "mtlab/extremal.hpp"
#include "mtlab/lab.hpp"
#include "mtlab/weights.hpp"

namespace mtlab {

using json = nlohmann::json;

std::string library_version();
std::string sha256_hex(const std::string& data);
// SHA-256 of the canonical (sorted-key, compact) dump
std::string config_hash(const json& config);

std::string format_double(double x);  // shortest form that round-trips
std::string sweep_csv(const SweepResult& res);
json sweep_sidecar(const SweepResult& res, const json& config, std::uint64_t seed);

json to_json(const PointConfiguration& cfg);
json to_json(const AxiomReport& rep);
json to_json(const RefinedReport& rep);
json to_json(const MultibushPlan& plan);
MultibushPlan plan_from_json(const json& j);
json to_json(const MultibushResult& res);

void write_text(const std::string& path, const std::string& text);
std::string read_text(const std::string& path);

}  // namespace mtlab
