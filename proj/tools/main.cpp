#include <cstdint>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "ris/experiments.hpp"

namespace {

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read config file '" + path + "'");
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return buffer.str();
}

void deliver(const ris::CommandResult& result, const std::string& path) {
  if (path.empty()) {
    std::cout << result.text;
    return;
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open output file '" + path + "'");
  out << result.text;
  if (!out) throw std::runtime_error("write failed for output file '" + path + "'");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Channel shaping experiments for passive reconfigurable surfaces"};
  app.require_subcommand(1);

  std::string config_path;
  std::string out_path;
  std::string format;
  std::uint64_t seed = 0;
  int trials = 0;
  int threads = 0;
  std::string example_name;

  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--config", config_path, "JSON experiment config");
    sub->add_option("--seed", seed, "override the scenario seed");
    sub->add_option("--trials", trials, "override the trial count")->check(CLI::PositiveNumber);
    sub->add_option("--out", out_path, "output file (default stdout)");
    sub->add_option("--format", format, "table format")
        ->check(CLI::IsMember({"csv", "json"}));
    sub->add_option("--threads", threads, "trial worker count")->check(CLI::PositiveNumber);
    return sub;
  };

  CLI::App* pareto = add_common(app.add_subcommand("pareto", "singular value frontier sweep"));
  CLI::App* rate = add_common(app.add_subcommand("rate-sweep", "achievable rate versus power"));
  CLI::App* power =
      add_common(app.add_subcommand("power-sweep", "channel gain versus surface size"));
  CLI::App* bounds =
      add_common(app.add_subcommand("bounds-check", "Monte Carlo bound soundness report"));
  CLI::App* example = add_common(app.add_subcommand("example", "reproduce a worked example"));
  example->add_option("name", example_name, "ex2, ex3, or ex4")->required();
  CLI::App* robust =
      add_common(app.add_subcommand("robustness", "estimation error impact sweep"));

  CLI11_PARSE(app, argc, argv);

  try {
    ris::ExperimentConfig config;
    if (!config_path.empty()) config = ris::config_from_json(slurp(config_path));
    CLI::App* sub = app.get_subcommands().front();
    if (sub->count("--seed")) config.scenario.seed = seed;
    if (sub->count("--trials")) config.trials = trials;
    if (sub->count("--threads")) config.threads = threads;
    if (sub->count("--format")) config.output_format = format;
    if (sub->count("--out")) config.output_path = out_path;

    ris::CommandResult result;
    if (sub == pareto) result = ris::cmd_pareto(config);
    else if (sub == rate) result = ris::cmd_rate_sweep(config);
    else if (sub == power) result = ris::cmd_power_sweep(config);
    else if (sub == bounds) result = ris::cmd_bounds_check(config);
    else if (sub == example) result = ris::cmd_example(example_name);
    else if (sub == robust) result = ris::cmd_robustness(config);

    deliver(result, config.output_path);
    if (result.violations > 0) {
      std::cerr << "invariant violations: " << result.violations << "\n";
      return 1;
    }
    return 0;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
}
