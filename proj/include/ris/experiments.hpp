#pragma once

#include <string>
#include <vector>

#include "ris/channel.hpp"

namespace ris {

// One experiment description, normally parsed from a JSON config file.
// Grids must be nonempty and trials at least 1; see config_from_json.
struct ExperimentConfig {
  Scenario scenario;
  std::vector<double> power_db = {-20, -15, -10, -5, 0, 5, 10, 15, 20};
  std::vector<int> n_s_list = {16};
  std::vector<int> group_sizes = {1, 16};
  int weight_count = 33;  // frontier sweep resolution when min(N_T, N_R) == 2
  std::vector<double> epsilons = {0.0, 0.01, 0.1, 0.5};
  int trials = 1;
  int theta_draws = 500;  // random surfaces per channel in bounds-check
  bool direct = true;     // false zeroes the direct link after sampling
  std::string output_path;         // empty writes to stdout
  std::string output_format = "csv";  // csv|json for the tabular commands
  int threads = 1;

  void validate() const;  // throws std::invalid_argument naming the bad key
};

// Schema-validated parse: unknown keys, wrong types, and violated constraints
// all throw std::invalid_argument naming the offending key.
ExperimentConfig config_from_json(const std::string& text);

struct CommandResult {
  std::string text;    // rendered CSV, JSON, or plain-text report
  int violations = 0;  // broken internal invariants; nonzero fails the process
};

// Locale-independent shortest-form rendering used by every table emitter, so
// identical doubles always print identically.
std::string format_number(double value);

// Frontier sweep: one row per (weight vector, trial, group size) with columns
// weight_1..N, sigma_1..N, group_size, trial_seed.
CommandResult cmd_pareto(const ExperimentConfig& config);

// Achievable rate versus transmit power for no-ris / two-stage / ao, averaged
// over trials; larger groups are warm-started from embedded divisor solutions.
CommandResult cmd_rate_sweep(const ExperimentConfig& config);

// Channel power gain versus surface size and group size for an identity
// surface and the ascent solver.
CommandResult cmd_power_sweep(const ExperimentConfig& config);

// Monte Carlo soundness report (JSON) for every analytical bound family;
// violations feed the process exit code.
CommandResult cmd_bounds_check(const ExperimentConfig& config);

// Fixed worked examples ("ex2", "ex3", "ex4") with hard-coded inputs and
// expected outputs; the report carries one PASS/FAIL line per item.
CommandResult cmd_example(const std::string& name);

// Estimation-error sweep: designs computed on perturbed channels, rates
// evaluated on the truth; epsilon = 0 reproduces cmd_rate_sweep exactly.
CommandResult cmd_robustness(const ExperimentConfig& config);

}  // namespace ris
