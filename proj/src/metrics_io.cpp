#include "metrics_io.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>

namespace opocmdp {

namespace {

const char* const kHeader =
    "episode,context,realized_value,optimal_value,regret_increment,cum_regret,"
    "expected_regret_increment,cum_expected_regret,loss_estimator_idx,dyn_estimator_idx,"
    "bonus_mass,sq_err_diag,hellinger_diag";

}  // namespace

std::string format_double(double value) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", value);
  return buf;
}

std::string metrics_csv(const std::vector<RunRecord>& records) {
  std::string out(kHeader);
  out.push_back('\n');
  for (const RunRecord& r : records) {
    out += std::to_string(r.episode);
    out.push_back(',');
    out += std::to_string(r.context);
    out.push_back(',');
    out += format_double(r.realized_value);
    out.push_back(',');
    out += format_double(r.optimal_value);
    out.push_back(',');
    out += format_double(r.regret_increment);
    out.push_back(',');
    out += format_double(r.cum_regret);
    out.push_back(',');
    out += format_double(r.expected_regret_increment);
    out.push_back(',');
    out += format_double(r.cum_expected_regret);
    out.push_back(',');
    out += std::to_string(r.loss_estimator_idx);
    out.push_back(',');
    out += std::to_string(r.dyn_estimator_idx);
    out.push_back(',');
    out += format_double(r.bonus_mass);
    out.push_back(',');
    out += format_double(r.sq_err_diag);
    out.push_back(',');
    out += format_double(r.hellinger_diag);
    out.push_back('\n');
  }
  return out;
}

std::string summary_text(const RunResult& run, const SuiteReport& report) {
  std::ostringstream os;
  const char* algo = "opo";
  if (run.algorithm == Algorithm::kUniform) algo = "uniform";
  if (run.algorithm == Algorithm::kKnownModel) algo = "known_model";
  os << "algorithm: " << algo << "\n";
  os << "episodes: " << run.config.episodes << "\n";
  os << "seed: " << run.config.seed << "\n";
  os << "final_pseudo_regret: " << format_double(pseudo_regret(run.records)) << "\n";
  os << "final_expected_regret: " << format_double(expected_regret(run.records)) << "\n";
  os << "regret_loglog_slope: " << format_double(regret_loglog_slope(run.records)) << "\n";
  os << "regret_bound: " << format_double(regret_bound(run.config)) << "\n";
  for (const SuiteCheck& c : report.checks) {
    os << "suite " << c.name << ": " << (c.passed ? "PASS" : "FAIL")
       << " worst_slack=" << format_double(c.worst_slack);
    if (!c.detail.empty()) os << " (" << c.detail << ")";
    os << "\n";
  }
  os << "suite_overall: " << (report.all_passed() ? "PASS" : "FAIL") << "\n";
  return os.str();
}

void write_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open '" + path + "' for writing");
  out.write(content.data(), static_cast<std::streamsize>(content.size()));
  if (!out) throw IoError("short write to '" + path + "'");
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path + "' for reading");
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

std::vector<double> record_column(const std::vector<RunRecord>& records,
                                  const std::string& column) {
  std::vector<double> out;
  out.reserve(records.size());
  auto push = [&](auto getter) {
    for (const RunRecord& r : records) out.push_back(static_cast<double>(getter(r)));
  };
  if (column == "episode")
    push([](const RunRecord& r) { return r.episode; });
  else if (column == "context")
    push([](const RunRecord& r) { return r.context; });
  else if (column == "realized_value")
    push([](const RunRecord& r) { return r.realized_value; });
  else if (column == "optimal_value")
    push([](const RunRecord& r) { return r.optimal_value; });
  else if (column == "regret_increment")
    push([](const RunRecord& r) { return r.regret_increment; });
  else if (column == "cum_regret")
    push([](const RunRecord& r) { return r.cum_regret; });
  else if (column == "expected_regret_increment")
    push([](const RunRecord& r) { return r.expected_regret_increment; });
  else if (column == "cum_expected_regret")
    push([](const RunRecord& r) { return r.cum_expected_regret; });
  else if (column == "loss_estimator_idx")
    push([](const RunRecord& r) { return r.loss_estimator_idx; });
  else if (column == "dyn_estimator_idx")
    push([](const RunRecord& r) { return r.dyn_estimator_idx; });
  else if (column == "bonus_mass")
    push([](const RunRecord& r) { return r.bonus_mass; });
  else if (column == "sq_err_diag")
    push([](const RunRecord& r) { return r.sq_err_diag; });
  else if (column == "hellinger_diag")
    push([](const RunRecord& r) { return r.hellinger_diag; });
  else
    throw std::invalid_argument("unknown metrics column '" + column + "'");
  return out;
}

}  // namespace opocmdp
