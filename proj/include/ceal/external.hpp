#pragma once

#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "ceal/measurement.hpp"

namespace ceal {

struct CommandResult {
  int exit_code = -1;  // valid when neither timed_out nor signaled
  bool timed_out = false;
  bool signaled = false;
  std::string out;
  std::string err;
};

/// Runs `command` through /bin/sh in its own process group. On timeout the
/// whole group is killed.
CommandResult run_command(const std::string& command, double timeout_seconds);

/// Replaces every `{name}` slot with the matching value. Integral values
/// print without a decimal point. Throws ConfigError on an unknown slot or
/// an unterminated brace.
std::string substitute(std::string_view tmpl, std::span<const std::string> names, const Configuration& values);

/// Parsed form of
///   RESULT exec_s=<float> nodes=<int> cores_per_node=<int> comp_times=<float>[,<float>...]
struct ResultLine {
  double exec_s = 0.0;
  std::size_t nodes = 0;
  std::size_t cores_per_node = 0;
  std::vector<double> comp_times;
};

/// Parses one line. Fields must appear in the order above, separated by
/// single spaces, with nothing after the last field. On failure returns
/// nullopt and sets `error`.
std::optional<ResultLine> parse_result_line(std::string_view line, std::string* error = nullptr);

/// Finds the single RESULT line in `out`. More than one is an error.
std::optional<ResultLine> find_result_line(std::string_view out, std::string* error = nullptr);

/// Spawns the substituted workflow command and turns its RESULT line into
/// a Measurement. Nonzero exit, timeout, a missing or malformed RESULT
/// line, and exec_s disagreeing with max(comp_times) all produce a failed
/// measurement carrying a diagnostic.
Measurement external_measure(std::string_view cmd_template, std::span<const std::string> names,
                             const Configuration& c, double timeout_seconds);

struct ExternalCommand {
  std::string command_template;
  std::vector<std::string> names;  // slot names, aligned with configuration values
};

class ExternalExecutor final : public Executor {
 public:
  /// `components[j]` may be empty when component j cannot be run alone.
  ExternalExecutor(ExternalCommand workflow, std::vector<std::optional<ExternalCommand>> components,
                   double timeout_seconds);

  Measurement measure(const Configuration& c) override;
  ComponentMeasurement measure_component(std::size_t j, const Configuration& cj) override;
  bool reentrant() const override { return true; }

 private:
  ExternalCommand workflow_;
  std::vector<std::optional<ExternalCommand>> components_;
  double timeout_;
};

}  // namespace ceal
