#include "opocmdp/opocmdp.h"

#include <cstring>
#include <new>
#include <optional>
#include <string>

#include "config.hpp"
#include "harness.hpp"
#include "metrics_io.hpp"

struct opocmdp_config {
  opocmdp::ExperimentConfig cfg;
};

struct opocmdp_run {
  opocmdp::RunResult result;
  std::optional<opocmdp::SuiteReport> report;
};

namespace {

thread_local std::string g_last_error = "";

void set_error(const std::string& msg) { g_last_error = msg; }

opocmdp_status fail(opocmdp_status code, const std::string& msg) {
  set_error(msg);
  return code;
}

// Every entry point funnels through here so exceptions become status codes.
template <typename Fn>
opocmdp_status guarded(Fn&& fn) {
  try {
    return fn();
  } catch (const opocmdp::ConfigError& e) {
    return fail(OPOCMDP_ERROR_CONFIG, e.what());
  } catch (const opocmdp::IoError& e) {
    return fail(OPOCMDP_ERROR_IO, e.what());
  } catch (const std::invalid_argument& e) {
    return fail(OPOCMDP_ERROR_INVALID_ARGUMENT, e.what());
  } catch (const std::bad_alloc&) {
    return fail(OPOCMDP_ERROR_INTERNAL, "out of memory");
  } catch (const std::exception& e) {
    return fail(OPOCMDP_ERROR_INTERNAL, e.what());
  } catch (...) {
    return fail(OPOCMDP_ERROR_INTERNAL, "unknown error");
  }
}

char* dup_string(const std::string& s) {
  char* out = new char[s.size() + 1];
  std::memcpy(out, s.data(), s.size() + 1);
  return out;
}

}  // namespace

extern "C" {

const char* opocmdp_last_error(void) { return g_last_error.c_str(); }

const char* opocmdp_version(void) { return "0.1.0"; }

opocmdp_status opocmdp_config_from_json(const char* json_text, opocmdp_config** out) {
  if (!json_text || !out) return fail(OPOCMDP_ERROR_INVALID_ARGUMENT, "null argument");
  *out = nullptr;
  return guarded([&] {
    auto* handle = new opocmdp_config{opocmdp::parse_config(json_text)};
    *out = handle;
    return OPOCMDP_OK;
  });
}

opocmdp_status opocmdp_config_from_file(const char* path, opocmdp_config** out) {
  if (!path || !out) return fail(OPOCMDP_ERROR_INVALID_ARGUMENT, "null argument");
  *out = nullptr;
  return guarded([&] {
    auto* handle = new opocmdp_config{opocmdp::parse_config_file(path)};
    *out = handle;
    return OPOCMDP_OK;
  });
}

void opocmdp_config_free(opocmdp_config* config) { delete config; }

opocmdp_status opocmdp_config_set_seed(opocmdp_config* config, uint64_t seed) {
  if (!config) return fail(OPOCMDP_ERROR_INVALID_ARGUMENT, "null config");
  config->cfg.seed = seed;
  return OPOCMDP_OK;
}

opocmdp_status opocmdp_config_get_seed(const opocmdp_config* config, uint64_t* out) {
  if (!config || !out) return fail(OPOCMDP_ERROR_INVALID_ARGUMENT, "null argument");
  *out = config->cfg.seed;
  return OPOCMDP_OK;
}

opocmdp_status opocmdp_config_episodes(const opocmdp_config* config, int64_t* out) {
  if (!config || !out) return fail(OPOCMDP_ERROR_INVALID_ARGUMENT, "null argument");
  *out = config->cfg.episodes;
  return OPOCMDP_OK;
}

opocmdp_status opocmdp_config_to_json(const opocmdp_config* config, char** out) {
  if (!config || !out) return fail(OPOCMDP_ERROR_INVALID_ARGUMENT, "null argument");
  *out = nullptr;
  return guarded([&] {
    *out = dup_string(opocmdp::config_to_json(config->cfg));
    return OPOCMDP_OK;
  });
}

opocmdp_status opocmdp_regret_bound(const opocmdp_config* config, double* out) {
  if (!config || !out) return fail(OPOCMDP_ERROR_INVALID_ARGUMENT, "null argument");
  return guarded([&] {
    *out = opocmdp::regret_bound(config->cfg);
    return OPOCMDP_OK;
  });
}

void opocmdp_string_free(char* s) { delete[] s; }

opocmdp_status opocmdp_run_experiment(const opocmdp_config* config, opocmdp_algorithm algorithm,
                                      opocmdp_run** out) {
  if (!config || !out) return fail(OPOCMDP_ERROR_INVALID_ARGUMENT, "null argument");
  *out = nullptr;
  return guarded([&] {
    opocmdp::Algorithm algo;
    switch (algorithm) {
      case OPOCMDP_ALGO_OPO:
        algo = opocmdp::Algorithm::kOpo;
        break;
      case OPOCMDP_ALGO_UNIFORM:
        algo = opocmdp::Algorithm::kUniform;
        break;
      case OPOCMDP_ALGO_KNOWN_MODEL:
        algo = opocmdp::Algorithm::kKnownModel;
        break;
      default:
        return fail(OPOCMDP_ERROR_INVALID_ARGUMENT, "unknown algorithm id");
    }
    auto* handle = new opocmdp_run{opocmdp::run_baseline(config->cfg, algo), std::nullopt};
    *out = handle;
    return OPOCMDP_OK;
  });
}

void opocmdp_run_free(opocmdp_run* run) { delete run; }

opocmdp_status opocmdp_run_num_episodes(const opocmdp_run* run, int64_t* out) {
  if (!run || !out) return fail(OPOCMDP_ERROR_INVALID_ARGUMENT, "null argument");
  *out = static_cast<int64_t>(run->result.records.size());
  return OPOCMDP_OK;
}

opocmdp_status opocmdp_run_pseudo_regret(const opocmdp_run* run, double* out) {
  if (!run || !out) return fail(OPOCMDP_ERROR_INVALID_ARGUMENT, "null argument");
  return guarded([&] {
    *out = opocmdp::pseudo_regret(run->result.records);
    return OPOCMDP_OK;
  });
}

opocmdp_status opocmdp_run_expected_regret(const opocmdp_run* run, double* out) {
  if (!run || !out) return fail(OPOCMDP_ERROR_INVALID_ARGUMENT, "null argument");
  return guarded([&] {
    *out = opocmdp::expected_regret(run->result.records);
    return OPOCMDP_OK;
  });
}

opocmdp_status opocmdp_run_regret_slope(const opocmdp_run* run, double* out) {
  if (!run || !out) return fail(OPOCMDP_ERROR_INVALID_ARGUMENT, "null argument");
  return guarded([&] {
    *out = opocmdp::regret_loglog_slope(run->result.records);
    return OPOCMDP_OK;
  });
}

opocmdp_status opocmdp_run_metrics_csv(const opocmdp_run* run, char** out) {
  if (!run || !out) return fail(OPOCMDP_ERROR_INVALID_ARGUMENT, "null argument");
  *out = nullptr;
  return guarded([&] {
    *out = dup_string(opocmdp::metrics_csv(run->result.records));
    return OPOCMDP_OK;
  });
}

opocmdp_status opocmdp_run_write_metrics_csv(const opocmdp_run* run, const char* path) {
  if (!run || !path) return fail(OPOCMDP_ERROR_INVALID_ARGUMENT, "null argument");
  return guarded([&] {
    opocmdp::write_file(path, opocmdp::metrics_csv(run->result.records));
    return OPOCMDP_OK;
  });
}

opocmdp_status opocmdp_run_column(const opocmdp_run* run, const char* column, double* out,
                                  int64_t capacity) {
  if (!run || !column || !out) return fail(OPOCMDP_ERROR_INVALID_ARGUMENT, "null argument");
  return guarded([&] {
    const auto values = opocmdp::record_column(run->result.records, column);
    if (capacity < static_cast<int64_t>(values.size()))
      return fail(OPOCMDP_ERROR_INVALID_ARGUMENT, "buffer too small for metrics column");
    std::memcpy(out, values.data(), values.size() * sizeof(double));
    return OPOCMDP_OK;
  });
}

opocmdp_status opocmdp_run_verify(opocmdp_run* run) {
  if (!run) return fail(OPOCMDP_ERROR_INVALID_ARGUMENT, "null run");
  return guarded([&] {
    run->report = opocmdp::verification_suite(run->result);
    return OPOCMDP_OK;
  });
}

opocmdp_status opocmdp_run_suite_size(const opocmdp_run* run, int64_t* out) {
  if (!run || !out) return fail(OPOCMDP_ERROR_INVALID_ARGUMENT, "null argument");
  if (!run->report) return fail(OPOCMDP_ERROR_INVALID_ARGUMENT, "run has not been verified");
  *out = static_cast<int64_t>(run->report->checks.size());
  return OPOCMDP_OK;
}

opocmdp_status opocmdp_run_suite_check(const opocmdp_run* run, int64_t index, const char** name,
                                       int* passed, double* worst_slack) {
  if (!run || !name || !passed || !worst_slack)
    return fail(OPOCMDP_ERROR_INVALID_ARGUMENT, "null argument");
  if (!run->report) return fail(OPOCMDP_ERROR_INVALID_ARGUMENT, "run has not been verified");
  if (index < 0 || index >= static_cast<int64_t>(run->report->checks.size()))
    return fail(OPOCMDP_ERROR_INVALID_ARGUMENT, "suite check index out of range");
  const auto& check = run->report->checks[static_cast<std::size_t>(index)];
  *name = check.name.c_str();
  *passed = check.passed ? 1 : 0;
  *worst_slack = check.worst_slack;
  return OPOCMDP_OK;
}

opocmdp_status opocmdp_run_suites_passed(const opocmdp_run* run, int* out) {
  if (!run || !out) return fail(OPOCMDP_ERROR_INVALID_ARGUMENT, "null argument");
  if (!run->report) return fail(OPOCMDP_ERROR_INVALID_ARGUMENT, "run has not been verified");
  *out = run->report->all_passed() ? 1 : 0;
  return OPOCMDP_OK;
}

opocmdp_status opocmdp_run_summary(const opocmdp_run* run, char** out) {
  if (!run || !out) return fail(OPOCMDP_ERROR_INVALID_ARGUMENT, "null argument");
  if (!run->report) return fail(OPOCMDP_ERROR_INVALID_ARGUMENT, "run has not been verified");
  *out = nullptr;
  return guarded([&] {
    *out = dup_string(opocmdp::summary_text(run->result, *run->report));
    return OPOCMDP_OK;
  });
}

}  // extern "C"
