#pragma once

// Byte-stable serialization of run outputs: the per-episode metrics CSV
// (floats at 17 significant digits, so values survive a round trip exactly)
// and the human-readable summary.

#include <stdexcept>
#include <string>
#include <vector>

#include "harness.hpp"

namespace opocmdp {

struct IoError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Shortest-digits formatting via "%.17g"; locale-independent.
std::string format_double(double value);

std::string metrics_csv(const std::vector<RunRecord>& records);

std::string summary_text(const RunResult& run, const SuiteReport& report);

void write_file(const std::string& path, const std::string& content);
std::string read_file(const std::string& path);

// Pulls one named CSV column out of a record list; throws on unknown names.
std::vector<double> record_column(const std::vector<RunRecord>& records,
                                  const std::string& column);

}  // namespace opocmdp
