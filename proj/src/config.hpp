#pragma once

// JSON experiment configs: strict parsing (unknown fields rejected by name),
// defaults materialized, and a stable re-serialization used to snapshot the
// resolved config next to a run's outputs.

#include <stdexcept>
#include <string>

#include "harness.hpp"

namespace opocmdp {

struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

ExperimentConfig parse_config(const std::string& json_text);
ExperimentConfig parse_config_file(const std::string& path);

// All fields explicit except context_weights, which is omitted when the
// uniform default is in force. Keys are emitted in sorted order.
std::string config_to_json(const ExperimentConfig& config);

}  // namespace opocmdp
