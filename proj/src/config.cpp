#include "config.hpp"

#include <fstream>
#include <set>
#include <sstream>

#include "json.hpp"

namespace opocmdp {

namespace {

using nlohmann::json;

const std::set<std::string> kKnownKeys = {
    "episodes",      "horizon",         "layer_widths", "num_actions",
    "num_contexts",  "loss_class_size", "dyn_class_size", "delta",
    "bonus_scale",   "loss_mode",       "context_weights", "seed"};

int require_int(const json& j, const std::string& key) {
  if (!j.contains(key)) throw ConfigError("config: missing required field '" + key + "'");
  const auto& v = j.at(key);
  if (!v.is_number_integer()) throw ConfigError("config: field '" + key + "' must be an integer");
  return v.get<int>();
}

int optional_int(const json& j, const std::string& key, int fallback) {
  if (!j.contains(key)) return fallback;
  const auto& v = j.at(key);
  if (!v.is_number_integer()) throw ConfigError("config: field '" + key + "' must be an integer");
  return v.get<int>();
}

double optional_double(const json& j, const std::string& key, double fallback) {
  if (!j.contains(key)) return fallback;
  const auto& v = j.at(key);
  if (!v.is_number()) throw ConfigError("config: field '" + key + "' must be a number");
  return v.get<double>();
}

}  // namespace

ExperimentConfig parse_config(const std::string& json_text) {
  json j;
  try {
    j = json::parse(json_text);
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("config: invalid JSON: ") + e.what());
  }
  if (!j.is_object()) throw ConfigError("config: top level must be a JSON object");
  for (const auto& item : j.items()) {
    if (!kKnownKeys.count(item.key()))
      throw ConfigError("config: unknown field '" + item.key() + "'");
  }

  ExperimentConfig cfg;
  cfg.episodes = require_int(j, "episodes");
  cfg.horizon = require_int(j, "horizon");

  if (!j.contains("layer_widths"))
    throw ConfigError("config: missing required field 'layer_widths'");
  if (!j.at("layer_widths").is_array())
    throw ConfigError("config: field 'layer_widths' must be an array of integers");
  for (const auto& v : j.at("layer_widths")) {
    if (!v.is_number_integer())
      throw ConfigError("config: field 'layer_widths' must be an array of integers");
    cfg.layer_widths.push_back(v.get<int>());
  }

  cfg.num_actions = require_int(j, "num_actions");
  cfg.num_contexts = optional_int(j, "num_contexts", 1);
  cfg.loss_class_size = require_int(j, "loss_class_size");
  cfg.dyn_class_size = require_int(j, "dyn_class_size");
  cfg.delta = optional_double(j, "delta", 0.1);
  cfg.bonus_scale = optional_double(j, "bonus_scale", 1.0);

  if (j.contains("loss_mode")) {
    const auto& v = j.at("loss_mode");
    if (!v.is_string()) throw ConfigError("config: field 'loss_mode' must be a string");
    const std::string mode = v.get<std::string>();
    if (mode == "bernoulli")
      cfg.loss_mode = LossMode::kBernoulli;
    else if (mode == "deterministic")
      cfg.loss_mode = LossMode::kDeterministic;
    else
      throw ConfigError("config: field 'loss_mode' must be 'bernoulli' or 'deterministic'");
  }

  if (j.contains("context_weights")) {
    const auto& v = j.at("context_weights");
    if (!v.is_array())
      throw ConfigError("config: field 'context_weights' must be an array of numbers");
    for (const auto& w : v) {
      if (!w.is_number())
        throw ConfigError("config: field 'context_weights' must be an array of numbers");
      cfg.context_weights.push_back(w.get<double>());
    }
  }

  if (!j.contains("seed")) throw ConfigError("config: missing required field 'seed'");
  const auto& seed = j.at("seed");
  if (!seed.is_number_integer())
    throw ConfigError("config: field 'seed' must be a nonnegative integer");
  if (!seed.is_number_unsigned() && seed.get<long long>() < 0)
    throw ConfigError("config: field 'seed' must be a nonnegative integer");
  cfg.seed = seed.get<std::uint64_t>();

  try {
    cfg.validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
  return cfg;
}

ExperimentConfig parse_config_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("config: cannot open file '" + path + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_config(buf.str());
}

std::string config_to_json(const ExperimentConfig& config) {
  json j;
  j["episodes"] = config.episodes;
  j["horizon"] = config.horizon;
  j["layer_widths"] = config.layer_widths;
  j["num_actions"] = config.num_actions;
  j["num_contexts"] = config.num_contexts;
  j["loss_class_size"] = config.loss_class_size;
  j["dyn_class_size"] = config.dyn_class_size;
  j["delta"] = config.delta;
  j["bonus_scale"] = config.bonus_scale;
  j["loss_mode"] = config.loss_mode == LossMode::kBernoulli ? "bernoulli" : "deterministic";
  if (!config.context_weights.empty()) j["context_weights"] = config.context_weights;
  j["seed"] = config.seed;
  return j.dump(2) + "\n";
}

}  // namespace opocmdp
