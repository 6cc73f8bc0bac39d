// Command-line front end. Talks to the library exclusively through the C API.
//
// Exit codes: 0 success, 1 configuration or usage error, 2 verification
// failure, 3 I/O error.

#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <mutex>
#include <string>
#include <thread>
#include <vector>

#include "CLI11.hpp"
#include "opocmdp/opocmdp.h"
#include "svg_plot.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitConfig = 1;
constexpr int kExitVerify = 2;
constexpr int kExitIo = 3;

int status_exit_code(opocmdp_status status) {
  switch (status) {
    case OPOCMDP_OK:
      return kExitOk;
    case OPOCMDP_ERROR_IO:
      return kExitIo;
    default:
      return kExitConfig;
  }
}

// Prints the library error and converts the status to an exit code.
int report_failure(opocmdp_status status, const std::string& what) {
  std::cerr << "error: " << what << ": " << opocmdp_last_error() << "\n";
  return status_exit_code(status);
}

struct ConfigHandle {
  opocmdp_config* ptr = nullptr;
  ~ConfigHandle() { opocmdp_config_free(ptr); }
};

struct RunHandle {
  opocmdp_run* ptr = nullptr;
  ~RunHandle() { opocmdp_run_free(ptr); }
};

int write_text_file(const std::filesystem::path& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) {
    std::cerr << "error: cannot open " << path << " for writing\n";
    return kExitIo;
  }
  out << content;
  if (!out) {
    std::cerr << "error: short write to " << path << "\n";
    return kExitIo;
  }
  return kExitOk;
}

int fetch_column(const RunHandle& run, const char* column, std::vector<double>& out) {
  int64_t n = 0;
  opocmdp_status st = opocmdp_run_num_episodes(run.ptr, &n);
  if (st != OPOCMDP_OK) return report_failure(st, "episode count");
  out.resize(static_cast<std::size_t>(n));
  st = opocmdp_run_column(run.ptr, column, out.data(), n);
  if (st != OPOCMDP_OK) return report_failure(st, std::string("column ") + column);
  return kExitOk;
}

// Runs one seed end to end: experiment, verification, output files. Returns
// the exit code; *suites_passed reports the verification verdict separately
// so sweeps can aggregate.
int run_to_directory(const opocmdp_config* cfg, const std::filesystem::path& dir, bool plot,
                     bool* suites_passed, bool quiet) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) {
    std::cerr << "error: cannot create output directory " << dir << ": " << ec.message() << "\n";
    return kExitIo;
  }

  char* resolved = nullptr;
  opocmdp_status st = opocmdp_config_to_json(cfg, &resolved);
  if (st != OPOCMDP_OK) return report_failure(st, "config snapshot");
  const std::string config_json(resolved);
  opocmdp_string_free(resolved);
  if (int rc = write_text_file(dir / "config.json", config_json); rc != kExitOk) return rc;

  RunHandle run;
  st = opocmdp_run_experiment(cfg, OPOCMDP_ALGO_OPO, &run.ptr);
  if (st != OPOCMDP_OK) return report_failure(st, "experiment");

  st = opocmdp_run_write_metrics_csv(run.ptr, (dir / "metrics.csv").string().c_str());
  if (st != OPOCMDP_OK) return report_failure(st, "metrics.csv");

  st = opocmdp_run_verify(run.ptr);
  if (st != OPOCMDP_OK) return report_failure(st, "verification");

  char* summary = nullptr;
  st = opocmdp_run_summary(run.ptr, &summary);
  if (st != OPOCMDP_OK) return report_failure(st, "summary");
  const std::string summary_str(summary);
  opocmdp_string_free(summary);
  if (int rc = write_text_file(dir / "summary.txt", summary_str); rc != kExitOk) return rc;
  if (!quiet) std::cout << summary_str;

  if (plot) {
    std::vector<std::pair<std::string, std::vector<double>>> series(3);
    series[0].first = "opo";
    if (int rc = fetch_column(run, "cum_regret", series[0].second); rc != kExitOk) return rc;
    const opocmdp_algorithm kinds[] = {OPOCMDP_ALGO_UNIFORM, OPOCMDP_ALGO_KNOWN_MODEL};
    const char* labels[] = {"uniform", "known model"};
    for (int i = 0; i < 2; ++i) {
      RunHandle base;
      st = opocmdp_run_experiment(cfg, kinds[i], &base.ptr);
      if (st != OPOCMDP_OK) return report_failure(st, "baseline");
      series[i + 1].first = labels[i];
      if (int rc = fetch_column(base, "cum_regret", series[i + 1].second); rc != kExitOk)
        return rc;
    }
    if (int rc = write_text_file(dir / "regret.svg", opocmdp_cli::regret_svg(series));
        rc != kExitOk)
      return rc;
  }

  int passed = 0;
  st = opocmdp_run_suites_passed(run.ptr, &passed);
  if (st != OPOCMDP_OK) return report_failure(st, "suite verdict");
  *suites_passed = passed != 0;
  return kExitOk;
}

int print_suite_report(opocmdp_run* run) {
  int64_t n = 0;
  opocmdp_status st = opocmdp_run_suite_size(run, &n);
  if (st != OPOCMDP_OK) return report_failure(st, "suite report");
  for (int64_t i = 0; i < n; ++i) {
    const char* name = nullptr;
    int passed = 0;
    double slack = 0.0;
    st = opocmdp_run_suite_check(run, i, &name, &passed, &slack);
    if (st != OPOCMDP_OK) return report_failure(st, "suite report");
    std::printf("%-32s %s  worst_slack=%.6g\n", name, passed ? "PASS" : "FAIL", slack);
  }
  return kExitOk;
}

int cmd_run(const std::string& config_path, const std::string& out_dir, bool plot,
            bool has_seed, std::uint64_t seed) {
  ConfigHandle cfg;
  opocmdp_status st = opocmdp_config_from_file(config_path.c_str(), &cfg.ptr);
  if (st != OPOCMDP_OK) return report_failure(st, config_path);
  if (has_seed) opocmdp_config_set_seed(cfg.ptr, seed);
  bool suites_passed = false;
  const int rc = run_to_directory(cfg.ptr, out_dir, plot, &suites_passed, false);
  if (rc != kExitOk) return rc;
  if (!suites_passed) {
    std::cerr << "verification suites failed; see summary.txt\n";
    return kExitVerify;
  }
  return kExitOk;
}

int cmd_sweep(const std::string& config_path, const std::string& out_dir, int num_seeds,
              bool has_base, std::uint64_t base_seed, unsigned threads) {
  ConfigHandle cfg;
  opocmdp_status st = opocmdp_config_from_file(config_path.c_str(), &cfg.ptr);
  if (st != OPOCMDP_OK) return report_failure(st, config_path);
  if (!has_base) {
    if (opocmdp_config_get_seed(cfg.ptr, &base_seed) != OPOCMDP_OK)
      return report_failure(OPOCMDP_ERROR_INTERNAL, "seed");
  }
  if (threads == 0) threads = std::max(1u, std::thread::hardware_concurrency());

  struct SeedOutcome {
    int exit_code = kExitOk;
    bool suites_passed = false;
  };
  std::vector<SeedOutcome> outcomes(static_cast<std::size_t>(num_seeds));
  std::mutex next_mutex;
  int next = 0;
  auto worker = [&] {
    for (;;) {
      int idx;
      {
        std::lock_guard<std::mutex> lock(next_mutex);
        if (next >= num_seeds) return;
        idx = next++;
      }
      const std::uint64_t seed = base_seed + static_cast<std::uint64_t>(idx);
      ConfigHandle local;
      char* json = nullptr;
      if (opocmdp_config_to_json(cfg.ptr, &json) != OPOCMDP_OK ||
          opocmdp_config_from_json(json, &local.ptr) != OPOCMDP_OK) {
        opocmdp_string_free(json);
        outcomes[idx].exit_code = kExitConfig;
        continue;
      }
      opocmdp_string_free(json);
      opocmdp_config_set_seed(local.ptr, seed);
      const auto dir = std::filesystem::path(out_dir) / ("seed_" + std::to_string(seed));
      outcomes[idx].exit_code =
          run_to_directory(local.ptr, dir, false, &outcomes[idx].suites_passed, true);
    }
  };
  std::vector<std::thread> pool;
  const unsigned n_workers = std::min<unsigned>(threads, static_cast<unsigned>(num_seeds));
  pool.reserve(n_workers);
  for (unsigned i = 0; i < n_workers; ++i) pool.emplace_back(worker);
  for (auto& th : pool) th.join();

  int worst = kExitOk;
  for (int i = 0; i < num_seeds; ++i) {
    const std::uint64_t seed = base_seed + static_cast<std::uint64_t>(i);
    const auto& oc = outcomes[static_cast<std::size_t>(i)];
    if (oc.exit_code != kExitOk) {
      std::cout << "seed " << seed << ": error (exit " << oc.exit_code << ")\n";
      worst = std::max(worst, oc.exit_code);
    } else if (!oc.suites_passed) {
      std::cout << "seed " << seed << ": suites FAIL\n";
      worst = std::max(worst, kExitVerify);
    } else {
      std::cout << "seed " << seed << ": ok\n";
    }
  }
  return worst;
}

int cmd_verify(const std::string& target) {
  namespace fs = std::filesystem;
  std::string config_path = target;
  std::string recorded_csv;
  if (fs::is_directory(target)) {
    config_path = (fs::path(target) / "config.json").string();
    const auto csv_path = fs::path(target) / "metrics.csv";
    if (fs::exists(csv_path)) {
      std::ifstream in(csv_path, std::ios::binary);
      std::ostringstream buf;
      buf << in.rdbuf();
      recorded_csv = buf.str();
    }
  }
  ConfigHandle cfg;
  opocmdp_status st = opocmdp_config_from_file(config_path.c_str(), &cfg.ptr);
  if (st != OPOCMDP_OK) return report_failure(st, config_path);

  RunHandle run;
  st = opocmdp_run_experiment(cfg.ptr, OPOCMDP_ALGO_OPO, &run.ptr);
  if (st != OPOCMDP_OK) return report_failure(st, "experiment");
  st = opocmdp_run_verify(run.ptr);
  if (st != OPOCMDP_OK) return report_failure(st, "verification");
  if (int rc = print_suite_report(run.ptr); rc != kExitOk) return rc;

  bool csv_matches = true;
  if (!recorded_csv.empty()) {
    char* csv = nullptr;
    st = opocmdp_run_metrics_csv(run.ptr, &csv);
    if (st != OPOCMDP_OK) return report_failure(st, "metrics");
    csv_matches = recorded_csv == csv;
    opocmdp_string_free(csv);
    std::printf("%-32s %s\n", "metrics_csv_reproduced", csv_matches ? "PASS" : "FAIL");
  }

  int passed = 0;
  st = opocmdp_run_suites_passed(run.ptr, &passed);
  if (st != OPOCMDP_OK) return report_failure(st, "suite verdict");
  if (!passed || !csv_matches) return kExitVerify;
  return kExitOk;
}

int cmd_bound(const std::string& config_path) {
  ConfigHandle cfg;
  opocmdp_status st = opocmdp_config_from_file(config_path.c_str(), &cfg.ptr);
  if (st != OPOCMDP_OK) return report_failure(st, config_path);
  double bound = 0.0;
  st = opocmdp_regret_bound(cfg.ptr, &bound);
  if (st != OPOCMDP_OK) return report_failure(st, "bound");
  std::printf("%.17g\n", bound);
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Optimistic policy optimization for contextual MDPs"};
  app.require_subcommand(1);

  std::string config_path, out_dir = "out", verify_target;
  bool plot = false;
  std::uint64_t seed = 0, base_seed = 0;
  int num_seeds = 5;
  unsigned threads = 0;

  auto* run_cmd = app.add_subcommand("run", "run one experiment and write its outputs");
  run_cmd->add_option("config", config_path, "experiment config (JSON)")->required();
  run_cmd->add_option("-o,--out", out_dir, "output directory (default: out)");
  run_cmd->add_flag("--plot", plot, "also write regret.svg with baseline curves");
  auto* seed_opt = run_cmd->add_option("--seed", seed, "override the config seed");

  auto* sweep_cmd = app.add_subcommand("sweep", "run consecutive seeds into per-seed directories");
  sweep_cmd->add_option("config", config_path, "experiment config (JSON)")->required();
  sweep_cmd->add_option("-o,--out", out_dir, "output directory (default: out)");
  sweep_cmd->add_option("-n,--num-seeds", num_seeds, "number of seeds (default: 5)")
      ->check(CLI::PositiveNumber);
  auto* base_opt = sweep_cmd->add_option("--seed", base_seed, "first seed (default: config seed)");
  sweep_cmd->add_option("--threads", threads, "worker threads (default: hardware)");

  auto* verify_cmd =
      app.add_subcommand("verify", "re-run and audit a config file or a finished run directory");
  verify_cmd->add_option("target", verify_target, "config file or run directory")->required();

  auto* bound_cmd = app.add_subcommand("bound", "print the closed-form regret bound");
  bound_cmd->add_option("config", config_path, "experiment config (JSON)")->required();

  CLI11_PARSE(app, argc, argv);

  if (run_cmd->parsed()) return cmd_run(config_path, out_dir, plot, seed_opt->count() > 0, seed);
  if (sweep_cmd->parsed())
    return cmd_sweep(config_path, out_dir, num_seeds, base_opt->count() > 0, base_seed, threads);
  if (verify_cmd->parsed()) return cmd_verify(verify_target);
  if (bound_cmd->parsed()) return cmd_bound(config_path);
  return kExitConfig;
}
