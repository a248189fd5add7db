// End-to-end acceptance harness: one pass/fail line per criterion, exit code
// equal to the number of failures. --cli PATH points at the risshape binary
// for the determinism criterion.

#include <chrono>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "oracles.hpp"
#include "ris/bounds.hpp"
#include "ris/channel.hpp"
#include "ris/designs.hpp"
#include "ris/experiments.hpp"
#include "ris/manifold.hpp"
#include "ris/numerics.hpp"
#include "ris/rng.hpp"
#include "ris/solvers.hpp"

using namespace ris;

namespace {

int failures = 0;

// Runs one criterion, prints its line, and enforces an optional time budget.
void criterion(int index, const std::string& label, double budget_seconds,
               const std::function<std::string()>& body) {
  auto start = std::chrono::steady_clock::now();
  std::string detail;
  try {
    detail = body();
  } catch (const std::exception& e) {
    detail = std::string("exception: ") + e.what();
  }
  double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  if (detail.empty() && budget_seconds > 0 && seconds > budget_seconds) {
    std::ostringstream over;
    over << "exceeded time budget of " << budget_seconds << " s";
    detail = over.str();
  }
  bool pass = detail.empty();
  failures += !pass;
  std::printf("criterion %2d %s (%6.2f s) %s%s%s\n", index, pass ? "PASS" : "FAIL", seconds,
              label.c_str(), pass ? "" : ": ", detail.c_str());
  std::fflush(stdout);
}

std::string check(bool ok, const std::string& what) { return ok ? "" : what; }

ChannelSet gaussian_channels(int n_r, int n_s, int n_t, std::uint64_t seed, bool direct) {
  ChannelSet ch;
  ch.h_b = complex_gaussian(n_r, n_s, derive_seed(seed, 1));
  ch.h_f = complex_gaussian(n_s, n_t, derive_seed(seed, 2));
  ch.h_d = direct ? complex_gaussian(n_r, n_t, derive_seed(seed, 3)) : Mat::Zero(n_r, n_t);
  return ch;
}

double cosorted_power(const ChannelSet& ch) {
  RealVec sb = singular_values(ch.h_b);
  RealVec sf = singular_values(ch.h_f);
  int n = static_cast<int>(std::min(sb.size(), sf.size()));
  double sum = 0;
  for (int i = 0; i < n; ++i) sum += sb(i) * sb(i) * sf(i) * sf(i);
  return sum;
}

bool monotone_trace(const std::vector<double>& trace) {
  for (std::size_t i = 1; i < trace.size(); ++i)
    if (trace[i] < trace[i - 1] - 1e-9 * std::max(1.0, std::abs(trace[i - 1]))) return false;
  return true;
}

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return buffer.str();
}

std::string diagonal_cascade_case() {
  Mat hb = Mat::Zero(3, 3);
  hb(0, 0) = 3;
  hb(1, 1) = 2;
  hb(2, 2) = 1;
  Mat hf = Mat::Zero(3, 3);
  hf(0, 0) = 4;
  hf(2, 2) = 5;
  ChannelSet nd{Mat::Zero(3, 3), hb, hf};

  BlockUnitary phases = BlockUnitary::identity(3, 1);
  const double angles[3] = {0.3, -1.2, 2.5};
  for (int g = 0; g < 3; ++g) phases.blocks[g](0, 0) = std::exp(cxd(0, angles[g]));
  RealVec diag_sv = singular_values(assemble(nd, phases));
  const double expect_diag[3] = {12, 5, 0};
  for (int n = 0; n < 3; ++n)
    if (std::abs(diag_sv(n) - expect_diag[n]) > 1e-9)
      return "diagonal-surface singular values off";

  RealVec sb = singular_values(hb), sf = singular_values(hf);
  const double expect_lo[3] = {8, 4, 0};
  const double expect_hi[3] = {15, 10, 0};
  for (int n = 1; n <= 3; ++n) {
    auto [lo, hi] = sv_bounds_nd(sb, sf, n);
    if (std::abs(lo - expect_lo[n - 1]) > 1e-12 || std::abs(hi - expect_hi[n - 1]) > 1e-12)
      return "mode bounds off";
    double top = singular_values(assemble(nd, sv_extremal_nd(hb, hf, n, true)))(n - 1);
    double bottom = singular_values(assemble(nd, sv_extremal_nd(hb, hf, n, false)))(n - 1);
    if (std::abs(top - hi) > 1e-9 * std::max(hi, 1.0)) return "upper bound not attained";
    if (std::abs(bottom - lo) > 1e-9 * std::max(lo, 1.0)) return "lower bound not attained";
  }
  return "";
}

std::string rank_design_case() {
  Mat hb = Mat::Zero(4, 4);
  hb(0, 0) = 1;
  hb(0, 1) = 1;
  hb(2, 2) = 1;
  Mat hf = Mat::Zero(4, 4);
  hf(0, 0) = 1;
  hf(1, 1) = 1;
  int r = numerical_rank(Mat(hb * dof_extremal(hb, hf, true).full() * hf));
  if (r != 2) return "maximizer rank " + std::to_string(r) + " != 2";
  if ((hb * dof_extremal(hb, hf, false).full() * hf).norm() > 1e-12)
    return "minimizer not exactly zero";
  auto range = dof_range(hb, hf);
  if (range.first != 0 || range.second != 2) return "rank range wrong";
  return "";
}

}  // namespace

int main(int argc, char** argv) {
  std::string cli;
  for (int i = 1; i + 1 < argc; ++i)
    if (std::string(argv[i]) == "--cli") cli = argv[i + 1];

  criterion(1, "diagonal cascade closed forms and attainment", 1.0, diagonal_cascade_case);

  criterion(2, "rank extremal designs", 1.0, rank_design_case);

  criterion(3, "two by two shaping grid percentages", 60.0, [] {
    CommandResult r = cmd_example("ex2");
    return check(r.violations == 0, "example report:\n" + r.text);
  });

  criterion(4, "power gain: closed form vs gradient ascent vs alternating sweeps", 120.0, [] {
    for (int t = 0; t < 50; ++t) {
      ChannelSet ch = gaussian_channels(4, 8, 4, derive_seed(0xacce0004, t), false);
      double target = cosorted_power(ch);

      double closed = assemble(ch, power_extremal_nd(ch.h_b, ch.h_f, true)).squaredNorm();

      ObjectiveAdapter power;
      power.eval = [&](const BlockUnitary& th) { return assemble(ch, th).squaredNorm(); };
      power.euclid_grad = [&](const BlockUnitary& th, int g) {
        Mat h = assemble(ch, th);
        auto slice = group_slice(ch, g, 8);
        return Mat(slice.first.adjoint() * h * slice.second.adjoint());
      };
      OptimizerConfig cfg;
      cfg.rel_tolerance = 1e-12;
      cfg.max_outer_iters = 3000;
      double rcg = optimize(power, BlockUnitary::identity(8, 8), cfg).trace.back();

      OptimizerConfig saa_cfg;
      saa_cfg.rel_tolerance = 1e-12;
      saa_cfg.max_outer_iters = 2000;
      double saa = maximize_power_saa(ch, 8, saa_cfg).trace.back();

      double vals[3] = {closed, rcg, saa};
      for (int a = 0; a < 3; ++a)
        for (int b = a + 1; b < 3; ++b)
          if (std::abs(vals[a] - vals[b]) > 1e-4 * std::max(vals[a], vals[b]))
            return std::string("pairwise disagreement on trial ") + std::to_string(t);
      for (double v : vals)
        if (std::abs(v - target) > 1e-6 * target)
          return std::string("co-sorted product sum missed on trial ") + std::to_string(t);
    }
    return std::string();
  });

  criterion(5, "rate: alternating optimization vs two stage vs closed capacity", 120.0, [] {
    const double p = 100.0, eta = 1.0;  // 20 dB over unit noise
    for (int t = 0; t < 20; ++t) {
      ChannelSet ch = gaussian_channels(4, 8, 4, derive_seed(0xacce0005, t), false);
      double closed = capacity(assemble(ch, rate_optimal_nd(ch.h_b, ch.h_f)), p, eta);
      OptimizerConfig cfg;
      cfg.rel_tolerance = 1e-8;
      cfg.max_outer_iters = 100;
      RateResult two = maximize_rate_two_stage(ch, 8, p, eta, cfg);
      RateResult ao = maximize_rate_ao(ch, 8, p, eta, cfg, two.theta);
      double vals[3] = {closed, two.rate, ao.rate};
      for (int a = 0; a < 3; ++a)
        for (int b = a + 1; b < 3; ++b)
          if (std::abs(vals[a] - vals[b]) > 1e-4 * std::max(vals[a], vals[b]))
            return std::string("rate disagreement on trial ") + std::to_string(t);
    }
    return std::string();
  });

  criterion(6, "gradient finite difference suites", 0, [] {
    const int n_r = 3, n_s = 6, n_t = 3, group = 3;
    const double h = 1e-6;
    for (int c = 0; c < 10; ++c) {
      std::uint64_t seed = derive_seed(0xacce0006, c);
      ChannelSet ch = gaussian_channels(n_r, n_s, n_t, seed, true);
      Gaussian gen(derive_seed(seed, 9));
      BlockUnitary theta = BlockUnitary::identity(n_s, group);
      for (auto& block : theta.blocks) block = oracle::random_unitary(group, gen);

      RealVec w(3);
      w << 1.0, 0.6, 0.2;
      Mat wmat = 0.7 * oracle::random_gaussian(n_t, 2, gen);
      Mat q = wmat * wmat.adjoint();
      const double eta = 0.6;

      struct Objective {
        std::function<double(const BlockUnitary&)> eval;
        std::function<Mat(const BlockUnitary&, int)> grad;
      };
      std::vector<Objective> objectives;
      objectives.push_back({[&](const BlockUnitary& t) {
                              RealVec sv = singular_values(assemble(ch, t));
                              double s = 0;
                              for (int n = 0; n < 3; ++n) s += w(n) * sv(n);
                              return s;
                            },
                            [&](const BlockUnitary& t, int g) {
                              return Mat(0.5 * shaping_subgradient(ch, t, w, g));
                            }});
      objectives.push_back({[&](const BlockUnitary& t) { return assemble(ch, t).squaredNorm(); },
                            [&](const BlockUnitary& t, int g) {
                              auto slice = group_slice(ch, g, group);
                              return Mat(slice.first.adjoint() * assemble(ch, t) *
                                         slice.second.adjoint());
                            }});
      objectives.push_back({[&](const BlockUnitary& t) {
                              Mat hm = assemble(ch, t);
                              Mat k = Mat::Identity(n_r, n_r) + hm * q * hm.adjoint() / eta;
                              Eigen::LLT<Mat> llt(k);
                              double nats = 0;
                              for (int i = 0; i < n_r; ++i)
                                nats += 2 * std::log(llt.matrixL()(i, i).real());
                              return nats;
                            },
                            [&](const BlockUnitary& t, int g) {
                              return rate_gradient(ch, t, q, eta, g);
                            }});

      for (std::size_t o = 0; o < objectives.size(); ++o) {
        for (int d = 0; d < 20; ++d) {
          int g = d % theta.groups() + 1;
          Mat s = oracle::random_skew_hermitian(group, gen);
          double analytic =
              2 * (objectives[o].grad(theta, g).adjoint() * s * theta.blocks[g - 1])
                      .trace()
                      .real();
          auto shifted = [&](double step) {
            BlockUnitary t = theta;
            t.blocks[g - 1] = expm_skew(s, step) * t.blocks[g - 1];
            return objectives[o].eval(t);
          };
          double fd = (shifted(h) - shifted(-h)) / (2 * h);
          if (std::abs(analytic - fd) >
              1e-4 * std::max({std::abs(analytic), std::abs(fd), 1e-6}))
            return "objective " + std::to_string(o) + " channel " + std::to_string(c) +
                   " direction " + std::to_string(d) + " mismatch";
        }
      }
    }
    return std::string();
  });

  criterion(7, "solver trace monotonicity", 0, [] {
    const int sizes[3] = {1, 2, 8};
    for (int i = 0; i < 100; ++i) {
      ChannelSet ch = gaussian_channels(4, 8, 4, derive_seed(0xacce0007, i), true);
      int group = sizes[i % 3];
      OptimizerConfig saa_cfg;
      saa_cfg.rel_tolerance = 1e-10;
      saa_cfg.max_outer_iters = 200;
      if (!monotone_trace(maximize_power_saa(ch, group, saa_cfg).trace))
        return "power sweep trace dipped on instance " + std::to_string(i);
      OptimizerConfig ao_cfg;
      ao_cfg.rel_tolerance = 1e-7;
      ao_cfg.max_outer_iters = 50;
      if (!monotone_trace(maximize_rate_ao(ch, group, 10.0, 1.0, ao_cfg).trace))
        return "rate alternation trace dipped on instance " + std::to_string(i);
    }
    return std::string();
  });

  criterion(8, "bound soundness over random surfaces", 300.0, [] {
    ExperimentConfig full;
    full.scenario.n_t = 4;
    full.scenario.n_s = 16;
    full.scenario.n_r = 4;
    full.scenario.seed = 0xacce0008;
    full.trials = 50;
    full.theta_draws = 500;
    full.threads = 4;
    CommandResult a = cmd_bounds_check(full);
    if (a.violations != 0)
      return "full-rank run reported " + std::to_string(a.violations) + " violations";

    ExperimentConfig rank1 = full;
    rank1.scenario.n_s = 32;
    rank1.scenario.kappa_f = 1e30;
    rank1.scenario.seed = 0xacce0009;
    rank1.trials = 6;
    rank1.theta_draws = 50;
    CommandResult b = cmd_bounds_check(rank1);
    if (b.violations != 0)
      return "rank-1 forward run reported " + std::to_string(b.violations) + " violations";
    if (b.text.find("\"sv_interlacing\"") == std::string::npos)
      return std::string("interlacing family missing from report");
    return std::string();
  });

  criterion(9, "architecture dominance under nesting", 0, [] {
    double power_small = 0, power_large = 0, rate_small = 0, rate_large = 0;
    for (int i = 0; i < 100; ++i) {
      ChannelSet ch = gaussian_channels(3, 6, 3, derive_seed(0xacce000a, i), true);

      OptimizerConfig saa_cfg;
      saa_cfg.rel_tolerance = 1e-10;
      saa_cfg.max_outer_iters = 300;
      SaaResult saa1 = maximize_power_saa(ch, 1, saa_cfg);
      SaaResult saa6 = maximize_power_saa(ch, 6, saa_cfg,
                                          BlockUnitary::from_full(saa1.theta.full(), 6));
      double g1 = saa1.trace.back(), g6 = saa6.trace.back();
      if (g6 < g1 - 1e-9 * std::max(1.0, g1))
        return "power dominance broken on instance " + std::to_string(i);
      power_small += g1;
      power_large += g6;

      OptimizerConfig ao_cfg;
      ao_cfg.rel_tolerance = 1e-7;
      ao_cfg.max_outer_iters = 50;
      RateResult ao1 = maximize_rate_ao(ch, 1, 10.0, 1.0, ao_cfg);
      RateResult ao6 = maximize_rate_ao(ch, 6, 10.0, 1.0, ao_cfg,
                                        BlockUnitary::from_full(ao1.theta.full(), 6));
      if (ao6.rate < ao1.rate - 1e-9 * std::max(1.0, ao1.rate))
        return "rate dominance broken on instance " + std::to_string(i);
      rate_small += ao1.rate;
      rate_large += ao6.rate;
    }
    if (power_large <= power_small) return std::string("mean power gain did not improve");
    if (rate_large <= rate_small) return std::string("mean rate did not improve");
    return std::string();
  });

  criterion(10, "command determinism", 0, [&cli]() -> std::string {
    if (cli.empty()) return "missing --cli PATH";
    namespace fs = std::filesystem;
    fs::path dir = fs::temp_directory_path() / "risshape_acceptance";
    fs::create_directories(dir);

    auto write = [&](const std::string& name, const std::string& body) {
      std::ofstream out(dir / name, std::ios::binary);
      out << body;
    };
    write("pareto.json", R"({"scenario": {"n_t": 2, "n_s": 8, "n_r": 2, "seed": 11},
      "direct": false, "group_sizes": [1, 8], "weight_count": 5, "trials": 2, "threads": 2})");
    write("rate.json", R"({"scenario": {"n_t": 2, "n_s": 4, "n_r": 2, "seed": 12},
      "power_db": [0, 10], "group_sizes": [1, 4], "trials": 2, "threads": 2})");
    write("power.json", R"({"scenario": {"n_t": 2, "n_s": 4, "n_r": 2, "seed": 13},
      "n_s_list": [4], "group_sizes": [1, 2], "trials": 2})");
    write("bounds.json", R"({"scenario": {"n_t": 3, "n_s": 6, "n_r": 3, "seed": 14},
      "trials": 2, "theta_draws": 6, "threads": 2})");
    write("robust.json", R"({"scenario": {"n_t": 2, "n_s": 4, "n_r": 2, "seed": 15},
      "power_db": [10], "epsilons": [0, 0.2], "group_sizes": [1, 4], "trials": 2})");

    struct Run {
      std::string name;
      std::string args;
    };
    std::vector<Run> runs = {
        {"pareto", "pareto --config " + (dir / "pareto.json").string()},
        {"rate-sweep", "rate-sweep --config " + (dir / "rate.json").string()},
        {"power-sweep", "power-sweep --config " + (dir / "power.json").string()},
        {"bounds-check", "bounds-check --config " + (dir / "bounds.json").string()},
        {"example", "example ex4"},
        {"robustness", "robustness --config " + (dir / "robust.json").string()},
    };
    for (const Run& run : runs) {
      fs::path first = dir / (run.name + ".a");
      fs::path second = dir / (run.name + ".b");
      for (const fs::path& out : {first, second}) {
        std::string command =
            "\"" + cli + "\" " + run.args + " --out " + out.string() + " 2>/dev/null";
        if (std::system(command.c_str()) != 0)
          return run.name + " exited nonzero";
      }
      std::string a = slurp(first), b = slurp(second);
      if (a.empty()) return run.name + " produced no output";
      if (a != b) return run.name + " reruns differ";
    }
    return std::string();
  });

  std::printf("acceptance: %d/10 passed\n", 10 - failures);
  return failures;
}
