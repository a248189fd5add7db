#include "ris/experiments.hpp"

#include <algorithm>
#include <atomic>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <exception>
#include <functional>
#include <limits>
#include <map>
#include <mutex>
#include <numbers>
#include <optional>
#include <stdexcept>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include "json.hpp"
#include "ris/bounds.hpp"
#include "ris/designs.hpp"
#include "ris/manifold.hpp"
#include "ris/numerics.hpp"
#include "ris/rng.hpp"
#include "ris/solvers.hpp"

namespace ris {

namespace {

using nlohmann::json;
using nlohmann::ordered_json;

constexpr std::uint64_t kTrialStream = 1000;   // per-trial scenario seeds
constexpr std::uint64_t kErrorStream = 4000;   // estimation-error draws, offset by epsilon index
constexpr std::uint64_t kSurfaceStream = 5000; // random surface draws in bounds-check

double take_number(const json& v, const std::string& key) {
  if (!v.is_number()) throw std::invalid_argument("config: " + key + " must be a number");
  return v.get<double>();
}

int take_int(const json& v, const std::string& key) {
  if (!v.is_number_integer())
    throw std::invalid_argument("config: " + key + " must be an integer");
  return v.get<int>();
}

std::vector<double> number_list(const json& v, const std::string& key) {
  if (!v.is_array()) throw std::invalid_argument("config: " + key + " must be an array");
  std::vector<double> out;
  for (const auto& e : v) out.push_back(take_number(e, key));
  return out;
}

std::vector<int> int_list(const json& v, const std::string& key) {
  if (!v.is_array()) throw std::invalid_argument("config: " + key + " must be an array");
  std::vector<int> out;
  for (const auto& e : v) out.push_back(take_int(e, key));
  return out;
}

void parse_scenario(const json& v, Scenario& sc) {
  if (!v.is_object()) throw std::invalid_argument("config: scenario must be an object");
  for (const auto& [key, value] : v.items()) {
    if (key == "lambda0_db") sc.lambda0_db = take_number(value, key);
    else if (key == "gamma_d") sc.gamma_d = take_number(value, key);
    else if (key == "gamma_f") sc.gamma_f = take_number(value, key);
    else if (key == "gamma_b") sc.gamma_b = take_number(value, key);
    else if (key == "d_d") sc.d_d = take_number(value, key);
    else if (key == "d_f") sc.d_f = take_number(value, key);
    else if (key == "d_b") sc.d_b = take_number(value, key);
    else if (key == "kappa_d") sc.kappa_d = take_number(value, key);
    else if (key == "kappa_f") sc.kappa_f = take_number(value, key);
    else if (key == "kappa_b") sc.kappa_b = take_number(value, key);
    else if (key == "n_t") sc.n_t = take_int(value, key);
    else if (key == "n_s") sc.n_s = take_int(value, key);
    else if (key == "n_r") sc.n_r = take_int(value, key);
    else if (key == "group_size") sc.group_size = take_int(value, key);
    else if (key == "noise_db") sc.noise_db = take_number(value, key);
    else if (key == "seed") {
      if (!value.is_number_integer())
        throw std::invalid_argument("config: seed must be an integer");
      sc.seed = value.get<std::uint64_t>();
    } else {
      throw std::invalid_argument("config: unknown scenario key '" + key + "'");
    }
  }
}

std::uint64_t trial_seed(const ExperimentConfig& c, int trial) {
  return derive_seed(c.scenario.seed, kTrialStream + static_cast<std::uint64_t>(trial));
}

ChannelSet trial_channels(const ExperimentConfig& c, int trial, int n_s_override = 0) {
  Scenario sc = c.scenario;
  if (n_s_override > 0) sc.n_s = n_s_override;
  sc.seed = trial_seed(c, trial);
  ChannelSet ch = sample_channels(sc);
  if (!c.direct) ch.h_d = Mat::Zero(sc.n_r, sc.n_t);
  return ch;
}

// Work pool over trial indices; each body writes only its own result slot, so
// scheduling cannot affect the output.
void run_trials(int trials, int threads, const std::function<void(int)>& body) {
  int workers = std::min(threads, trials);
  if (workers <= 1) {
    for (int t = 0; t < trials; ++t) body(t);
    return;
  }
  std::atomic<int> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  std::vector<std::thread> pool;
  pool.reserve(workers);
  for (int w = 0; w < workers; ++w) {
    pool.emplace_back([&] {
      for (int t = next++; t < trials; t = next++) {
        try {
          body(t);
        } catch (...) {
          std::lock_guard<std::mutex> lock(failure_mutex);
          if (!failure) failure = std::current_exception();
        }
      }
    });
  }
  for (auto& th : pool) th.join();
  if (failure) std::rethrow_exception(failure);
}

std::string join_csv(const std::vector<std::string>& fields) {
  std::string line;
  for (std::size_t i = 0; i < fields.size(); ++i) {
    if (i) line += ',';
    line += fields[i];
  }
  return line;
}

// CSV by default; JSON re-emits the same cells as an array of row objects,
// with numeric-looking cells kept numeric.
std::string render_table(const std::vector<std::string>& header,
                         const std::vector<std::vector<std::string>>& rows,
                         const std::string& format) {
  if (format == "json") {
    ordered_json arr = ordered_json::array();
    for (const auto& row : rows) {
      ordered_json obj = ordered_json::object();
      for (std::size_t i = 0; i < header.size(); ++i) {
        const std::string& cell = row[i];
        const char* end = cell.data() + cell.size();
        std::int64_t whole = 0;
        double value = 0;
        if (auto [p, ec] = std::from_chars(cell.data(), end, whole);
            ec == std::errc() && p == end)
          obj[header[i]] = whole;
        else if (auto [p2, ec2] = std::from_chars(cell.data(), end, value);
                 ec2 == std::errc() && p2 == end)
          obj[header[i]] = value;
        else
          obj[header[i]] = cell;
      }
      arr.push_back(std::move(obj));
    }
    return arr.dump(2) + "\n";
  }
  std::string out = join_csv(header) + "\n";
  for (const auto& row : rows) out += join_csv(row) + "\n";
  return out;
}

void check_divides(const ExperimentConfig& c) {
  for (int l : c.group_sizes)
    if (c.scenario.n_s % l != 0)
      throw std::invalid_argument("config: group_sizes entry " + std::to_string(l) +
                                  " does not divide n_s");
}

double noise_linear(const ExperimentConfig& c) {
  return std::pow(10.0, c.scenario.noise_db / 10.0);
}

OptimizerConfig ascent_config() {
  OptimizerConfig cfg;
  cfg.rel_tolerance = 1e-10;
  cfg.max_outer_iters = 500;
  return cfg;
}

OptimizerConfig rate_config() {
  OptimizerConfig cfg;
  cfg.rel_tolerance = 1e-7;
  cfg.max_outer_iters = 120;
  return cfg;
}

OptimizerConfig frontier_config() {
  OptimizerConfig cfg;
  cfg.rel_tolerance = 1e-9;
  cfg.max_outer_iters = 300;
  return cfg;
}

double logdet_rate_bits(const Mat& h, const Mat& w, double eta) {
  if (w.cols() == 0 || h.size() == 0) return 0;
  Mat hw = h * w;
  Mat k = Mat::Identity(h.rows(), h.rows()) + hw * hw.adjoint() / eta;
  Eigen::LLT<Mat> llt(k);
  double nats = 0;
  for (int i = 0; i < k.rows(); ++i) nats += 2 * std::log(llt.matrixL()(i, i).real());
  return nats / std::log(2.0);
}

struct MethodRate {
  int group_size = 0;
  std::string method;
  double rate = 0;
};

// Solves both rate designs on `design` for every group size, evaluating the
// achieved rate on `truth`. Larger groups are warm-started from the largest
// already-solved divisor so the feasible-set nesting shows up per trial.
std::vector<MethodRate> rate_methods(const ChannelSet& design, const ChannelSet& truth,
                                     const std::vector<int>& group_sizes, double p, double eta,
                                     int& violations) {
  std::vector<MethodRate> out;
  std::map<int, BlockUnitary> solved;
  std::map<int, double> solved_rate;
  for (int l : group_sizes) {
    RateResult two = maximize_rate_two_stage(design, l, p, eta, ascent_config());
    if (two.precoder.squaredNorm() > p * (1 + 1e-9)) ++violations;
    out.push_back({l, "two-stage", logdet_rate_bits(assemble(truth, two.theta), two.precoder, eta)});

    std::optional<BlockUnitary> warm;
    int base = 0;
    for (const auto& [prev, theta] : solved)
      if (l % prev == 0 && prev > base) base = prev;
    if (base > 0) warm = BlockUnitary::from_full(solved.at(base).full(), l);
    RateResult ao = maximize_rate_ao(design, l, p, eta, rate_config(), warm);
    for (std::size_t i = 1; i < ao.trace.size(); ++i)
      if (ao.trace[i] < ao.trace[i - 1] - 1e-9 * std::max(1.0, std::abs(ao.trace[i - 1])))
        ++violations;
    if (ao.precoder.squaredNorm() > p * (1 + 1e-9)) ++violations;
    if (base > 0 && ao.rate < solved_rate.at(base) - 1e-9 * std::max(1.0, solved_rate.at(base)))
      ++violations;
    solved[l] = ao.theta;
    solved_rate[l] = ao.rate;
    out.push_back({l, "ao", logdet_rate_bits(assemble(truth, ao.theta), ao.precoder, eta)});
  }
  return out;
}

RealVec padded_spectrum(const Mat& m, int len) {
  RealVec sv = singular_values(m);
  RealVec out = RealVec::Zero(len);
  out.head(sv.size()) = sv;
  return out;
}

BlockUnitary random_surface(int n_s, int group_size, std::uint64_t seed) {
  BlockUnitary theta = BlockUnitary::identity(n_s, group_size);
  if (group_size == 1) {
    Mat z = complex_gaussian(n_s, 1, seed);
    for (int i = 0; i < n_s; ++i) {
      double a = std::abs(z(i));
      theta.blocks[i](0, 0) = a > 1e-300 ? z(i) / a : cxd(1, 0);
    }
  } else {
    for (int g = 0; g < theta.groups(); ++g)
      theta.blocks[g] = nearest_unitary(
          complex_gaussian(group_size, group_size, derive_seed(seed, g + 1)));
  }
  return theta;
}

struct FamilyStat {
  long long checks = 0;
  int violations = 0;
  double max_slack = -std::numeric_limits<double>::infinity();
  int vacuous_channels = 0;

  // slack > 0 means the bound is broken by that relative amount.
  void record(double slack, double tol = 1e-9) {
    ++checks;
    max_slack = std::max(max_slack, slack);
    if (slack > tol) ++violations;
  }

  void merge(const FamilyStat& other) {
    checks += other.checks;
    violations += other.violations;
    max_slack = std::max(max_slack, other.max_slack);
    vacuous_channels += other.vacuous_channels;
  }

  ordered_json to_json() const {
    ordered_json j = ordered_json::object();
    j["checks"] = checks;
    j["violations"] = violations;
    if (checks > 0)
      j["max_rel_slack"] = max_slack;
    else
      j["max_rel_slack"] = nullptr;
    j["vacuous_channels"] = vacuous_channels;
    return j;
  }
};

enum Family {
  f_interlacing,
  f_horn,
  f_product,
  f_power,
  f_sv_range,
  f_cap_low,
  f_cap_high,
  f_attainment,
  f_window,
  f_fixed,
  family_count,
};

const char* family_name(int f) {
  switch (f) {
    case f_interlacing: return "sv_interlacing";
    case f_horn: return "horn_r1";
    case f_product: return "sv_product";
    case f_power: return "power";
    case f_sv_range: return "sv_range";
    case f_cap_low: return "capacity_low";
    case f_cap_high: return "capacity_high_asymptote";
    case f_attainment: return "extremal_attainment";
    case f_window: return "pareto_rank1_window";
    case f_fixed: return "fixed_diagonal_case";
    default: return "?";
  }
}

// Example 4 style diagonal cascade where every bound end is known exactly.
void fixed_diagonal_case(FamilyStat& stat) {
  Mat hb = Mat::Zero(3, 3);
  hb(0, 0) = 3;
  hb(1, 1) = 2;
  hb(2, 2) = 1;
  Mat hf = Mat::Zero(3, 3);
  hf(0, 0) = 4;
  hf(2, 2) = 5;
  const double expect_lo[3] = {8, 4, 0};
  const double expect_hi[3] = {15, 10, 0};
  RealVec sv_b = singular_values(hb);
  RealVec sv_f = singular_values(hf);
  ChannelSet nd{Mat::Zero(3, 3), hb, hf};
  const double scale = 15;
  RealVec diag_sv = singular_values(hb * hf);
  const double expect_diag[3] = {12, 5, 0};
  for (int n = 1; n <= 3; ++n) {
    stat.record(std::abs(diag_sv(n - 1) - expect_diag[n - 1]) / scale);
    auto [lo, hi] = sv_bounds_nd(sv_b, sv_f, n);
    stat.record(std::abs(lo - expect_lo[n - 1]) / scale);
    stat.record(std::abs(hi - expect_hi[n - 1]) / scale);
    double top = singular_values(assemble(nd, sv_extremal_nd(hb, hf, n, true)))(n - 1);
    double bottom = singular_values(assemble(nd, sv_extremal_nd(hb, hf, n, false)))(n - 1);
    stat.record(std::abs(top - hi) / scale);
    stat.record(std::abs(bottom - lo) / scale);
  }
}

void bounds_check_channel(const ExperimentConfig& c, int trial, std::vector<FamilyStat>& fam) {
  const std::uint64_t tseed = trial_seed(c, trial);
  ChannelSet truth = trial_channels(c, trial);
  ChannelSet nd = truth;
  nd.h_d = Mat::Zero(truth.h_d.rows(), truth.h_d.cols());
  const int n_s = c.scenario.n_s;
  const int n_modes = static_cast<int>(std::min(truth.h_b.rows(), truth.h_f.cols()));
  const int n_bound = std::min(n_modes, n_s);  // cascade rank cannot exceed either

  RealVec sv_b = singular_values(truth.h_b);
  RealVec sv_f = singular_values(truth.h_f);
  RealVec pad_b = padded_spectrum(truth.h_b, n_s);
  RealVec pad_f = padded_spectrum(truth.h_f, n_s);
  const double cascade_scale = std::max(sv_b(0) * sv_f(0), 1e-300);
  const double full_scale = singular_values(truth.h_d)(0) + cascade_scale;

  const int rank_b = numerical_rank(truth.h_b);
  const int rank_f = numerical_rank(truth.h_f);
  const int k = std::min(rank_b, rank_f);

  // Direct-path residual bounds only bind when the cascade is rank deficient.
  SvBoundReport report;
  bool deficient = k < n_modes;
  if (deficient) {
    DeficientSide side = rank_b <= rank_f ? DeficientSide::backward : DeficientSide::forward;
    const Mat& weaker = side == DeficientSide::backward ? truth.h_b : truth.h_f;
    report = sv_bounds_rank_deficient(rank_deficient_T(truth.h_d, weaker, side), k, n_modes);
  } else {
    ++fam[f_interlacing].vacuous_channels;
    ++fam[f_window].vacuous_channels;
  }

  for (int draw = 0; draw < c.theta_draws; ++draw) {
    int l = draw % 2 == 0 ? 1 : n_s;
    BlockUnitary theta = random_surface(n_s, l, derive_seed(tseed, kSurfaceStream + draw));
    Mat h_nd = assemble(nd, theta);
    RealVec sv_h = singular_values(h_nd);

    for (int n = 1; n <= n_bound; ++n) {
      auto [lo, hi] = sv_bounds_nd(pad_b, pad_f, n);
      fam[f_sv_range].record((sv_h(n - 1) - hi) / cascade_scale);
      fam[f_sv_range].record((lo - sv_h(n - 1)) / cascade_scale);
    }

    for (int i = 1; i <= sv_b.size(); ++i)
      for (int j = 1; j <= sv_f.size(); ++j) {
        if (i + j - 1 > sv_h.size()) continue;
        double bound = sv_b(i - 1) * sv_f(j - 1);
        fam[f_horn].record((sv_h(i + j - 2) - bound) / cascade_scale);
      }
    fam[f_horn].violations += static_cast<int>(horn_r1_check(sv_b, sv_f, sv_h).size());

    for (int kk = 1; kk <= n_bound; ++kk) {
      auto [lo, hi] = product_bounds_nd(pad_b, pad_f, kk);
      double prod_large = 1, prod_small = 1;
      for (int n = 0; n < kk; ++n) {
        prod_large *= sv_h(n);
        prod_small *= sv_h(n_modes - 1 - n);
      }
      double scale_k = std::max(std::pow(cascade_scale, kk), 1e-300);
      fam[f_product].record((prod_large - hi) / scale_k);
      fam[f_product].record((lo - prod_small) / scale_k);
    }

    {
      auto [lo, hi] = power_bounds_nd(pad_b, pad_f);
      double gain = h_nd.squaredNorm();
      double scale2 = std::max(hi, 1e-300);
      fam[f_power].record((gain - hi) / scale2);
      fam[f_power].record((lo - gain) / scale2);
    }

    // The low-SNR cap holds for every surface and every power level.
    for (double rho : {1e-2, 1.0}) {
      double cap = capacity(h_nd, rho, 1.0);
      double low = capacity_extreme_bounds(pad_b, pad_f, rho, n_bound).low;
      fam[f_cap_low].record((cap - low) / std::max(low, 1e-300));
    }

    if (deficient) {
      RealVec sv_full = singular_values(assemble(truth, theta));
      for (int n = 1; n <= n_modes; ++n) {
        const ModeBound& mb = report.modes[n - 1];
        if (mb.upper_bounded)
          fam[f_interlacing].record((sv_full(n - 1) - mb.upper) / full_scale);
        if (mb.lower_informative)
          fam[f_interlacing].record((mb.lower - sv_full(n - 1)) / full_scale);
      }
    }
  }

  // Closed-form designs must land on the bound ends they were built for.
  for (int n = 1; n <= n_bound; ++n) {
    auto [lo, hi] = sv_bounds_nd(pad_b, pad_f, n);
    double top = singular_values(assemble(nd, sv_extremal_nd(truth.h_b, truth.h_f, n, true)))(n - 1);
    double bottom =
        singular_values(assemble(nd, sv_extremal_nd(truth.h_b, truth.h_f, n, false)))(n - 1);
    fam[f_attainment].record(std::abs(top - hi) / cascade_scale);
    fam[f_attainment].record(std::abs(bottom - lo) / cascade_scale);
  }
  {
    auto [lo, hi] = power_bounds_nd(pad_b, pad_f);
    double top =
        assemble(nd, power_extremal_nd(truth.h_b, truth.h_f, true)).squaredNorm();
    double bottom =
        assemble(nd, power_extremal_nd(truth.h_b, truth.h_f, false)).squaredNorm();
    double scale2 = std::max(hi, 1e-300);
    fam[f_attainment].record(std::abs(top - hi) / scale2);
    fam[f_attainment].record(std::abs(bottom - lo) / scale2);
  }

  // High-SNR asymptote, checked on the aligned design at a power chosen so the
  // remaining gap is far below the tolerance.
  {
    double prod_min = std::numeric_limits<double>::infinity();
    double prod_max = 0;
    for (int n = 0; n < n_modes; ++n) {
      double prod = n < n_s ? pad_b(n) * pad_f(n) : 0.0;
      prod_min = std::min(prod_min, prod);
      prod_max = std::max(prod_max, prod);
    }
    // Modes much weaker than the strongest are below singular value precision,
    // so the asymptote comparison only makes sense on well-conditioned cascades.
    if (prod_max > 0 && prod_min >= 1e-6 * prod_max) {
      double g_min = prod_min * prod_min;
      double rho_star = 1e8 * n_modes / g_min;
      CapacityBounds cb = capacity_extreme_bounds(pad_b, pad_f, rho_star, n_modes);
      if (cb.high_finite) {
        double cap = capacity(assemble(nd, rate_optimal_nd(truth.h_b, truth.h_f)), rho_star, 1.0);
        double slack = std::abs(cap - cb.high) / std::max(std::abs(cb.high), 1.0);
        fam[f_cap_high].record(slack, 1e-6);
      } else {
        ++fam[f_cap_high].vacuous_channels;
      }
    } else {
      ++fam[f_cap_high].vacuous_channels;
    }
  }

  // With a rank-1 cascade the second mode of the full channel lives inside the
  // direct-path window [sigma_2(T), sigma_1(T)] no matter what the frontier
  // solver achieves.
  if (deficient && k == 1 && n_modes >= 3 && truth.h_d.cwiseAbs().maxCoeff() > 0) {
    RealVec w = RealVec::Zero(n_modes);
    w(1) = 1;
    OptimizerConfig cfg;
    cfg.rel_tolerance = 1e-8;
    cfg.max_outer_iters = 200;
    auto points = pareto_frontier(truth, {w}, n_s, cfg);
    double achieved = points.front().achieved_sv(1);
    const ModeBound& mb = report.modes[1];
    if (mb.upper_bounded) fam[f_window].record((achieved - mb.upper) / full_scale, 1e-8);
    if (mb.lower_informative) fam[f_window].record((mb.lower - achieved) / full_scale, 1e-8);
  }
}

std::string pass_fail(bool ok) { return ok ? "PASS" : "FAIL"; }

CommandResult example_shaping_grid() {
  Mat hb(2, 2), hf(2, 2);
  hb << cxd(-0.2059, 0.5914), cxd(-0.0909, 0.5861), cxd(0.4131, 0.2651), cxd(-0.1960, 0.4650);
  hf << cxd(-0.6362, 0.1332), cxd(-0.1572, 1.5538), cxd(0.0196, 0.4011), cxd(-0.3170, -0.2303);

  struct ModeStats {
    double lo = std::numeric_limits<double>::infinity();
    double hi = -std::numeric_limits<double>::infinity();
    void add(double v) {
      lo = std::min(lo, v);
      hi = std::max(hi, v);
    }
  };

  const int grid = 64;
  const double step = 2 * std::numbers::pi / grid;
  ModeStats d_stats[2], bd_stats[2];
  for (int a = 0; a < grid; ++a) {
    for (int b = 0; b < grid; ++b) {
      Mat theta_d = Mat::Zero(2, 2);
      theta_d(0, 0) = std::polar(1.0, a * step);
      theta_d(1, 1) = std::polar(1.0, b * step);
      RealVec sv = singular_values(hb * theta_d * hf);
      d_stats[0].add(sv(0));
      d_stats[1].add(sv(1));

      // Symmetric fully-connected surface: beta = pi/2 turns the off-diagonal
      // entries into j sin(psi) on both sides.
      double alpha = a * step, psi = b * step;
      Mat theta_bd(2, 2);
      theta_bd(0, 0) = std::polar(1.0, alpha) * std::cos(psi);
      theta_bd(0, 1) = cxd(0, 1) * std::sin(psi);
      theta_bd(1, 0) = cxd(0, 1) * std::sin(psi);
      theta_bd(1, 1) = std::polar(1.0, -alpha) * std::cos(psi);
      RealVec sv2 = singular_values(hb * theta_bd * hf);
      bd_stats[0].add(sv2(0));
      bd_stats[1].add(sv2(1));
    }
  }

  CommandResult out;
  auto report = [&](const char* family, const ModeStats* stats, double expect) {
    for (int n = 0; n < 2; ++n) {
      // Midpoint of the achieved range; the deviations are then symmetric,
      // which is how the expected percentages are quoted.
      double avg = (stats[n].lo + stats[n].hi) / 2;
      double up = (stats[n].hi - avg) / avg * 100;
      double down = (stats[n].lo - avg) / avg * 100;
      bool ok_up = std::abs(up - expect) <= 3;
      bool ok_down = std::abs(down + expect) <= 3;
      out.violations += !ok_up + !ok_down;
      out.text += "ex2 " + std::string(family) + " eta_" + std::to_string(n + 1) + "^+ = " +
                  format_number(up) + "% (expect +" + format_number(expect) + " within 3) " +
                  pass_fail(ok_up) + "\n";
      out.text += "ex2 " + std::string(family) + " eta_" + std::to_string(n + 1) + "^- = " +
                  format_number(down) + "% (expect -" + format_number(expect) + " within 3) " +
                  pass_fail(ok_down) + "\n";
    }
  };
  report("d-ris", d_stats, 9);
  report("bd-ris", bd_stats, 42);
  return out;
}

CommandResult example_dof() {
  Mat hb = Mat::Zero(4, 4);
  hb(0, 0) = 1;
  hb(0, 1) = 1;
  hb(2, 2) = 1;
  Mat hf = Mat::Zero(4, 4);
  hf(0, 0) = 1;
  hf(1, 1) = 1;

  CommandResult out;
  Mat h_max = hb * dof_extremal(hb, hf, true).full() * hf;
  int r = numerical_rank(h_max);
  bool ok = r == 2;
  out.violations += !ok;
  out.text += "ex3 dof maximizer rank = " + std::to_string(r) + " (expect 2) " + pass_fail(ok) +
              "\n";

  double residual = (hb * dof_extremal(hb, hf, false).full() * hf).norm();
  ok = residual <= 1e-12;
  out.violations += !ok;
  out.text += "ex3 dof minimizer frobenius norm = " + format_number(residual) +
              " (expect <= 1e-12) " + pass_fail(ok) + "\n";

  auto range = dof_range(hb, hf);
  ok = range.first == 0 && range.second == 2;
  out.violations += !ok;
  out.text += "ex3 dof range = (" + std::to_string(range.first) + ", " +
              std::to_string(range.second) + ") (expect (0, 2)) " + pass_fail(ok) + "\n";
  return out;
}

CommandResult example_diagonal_bounds() {
  Mat hb = Mat::Zero(3, 3);
  hb(0, 0) = 3;
  hb(1, 1) = 2;
  hb(2, 2) = 1;
  Mat hf = Mat::Zero(3, 3);
  hf(0, 0) = 4;
  hf(2, 2) = 5;
  ChannelSet nd{Mat::Zero(3, 3), hb, hf};
  RealVec sv_b = singular_values(hb);
  RealVec sv_f = singular_values(hf);
  const double expect_lo[3] = {8, 4, 0};
  const double expect_hi[3] = {15, 10, 0};
  const double expect_diag[3] = {12, 5, 0};
  const double scale = 15;

  CommandResult out;
  RealVec diag_sv = singular_values(hb * hf);
  for (int n = 0; n < 3; ++n) {
    bool ok = std::abs(diag_sv(n) - expect_diag[n]) <= 1e-9;
    out.violations += !ok;
    out.text += "ex4 d-ris sigma_" + std::to_string(n + 1) + " = " + format_number(diag_sv(n)) +
                " (expect " + format_number(expect_diag[n]) + ") " + pass_fail(ok) + "\n";
  }
  for (int n = 1; n <= 3; ++n) {
    auto [lo, hi] = sv_bounds_nd(sv_b, sv_f, n);
    bool ok = std::abs(lo - expect_lo[n - 1]) <= 1e-12 && std::abs(hi - expect_hi[n - 1]) <= 1e-12;
    out.violations += !ok;
    out.text += "ex4 sigma_" + std::to_string(n) + " bounds = (" + format_number(lo) + ", " +
                format_number(hi) + ") (expect (" + format_number(expect_lo[n - 1]) + ", " +
                format_number(expect_hi[n - 1]) + ")) " + pass_fail(ok) + "\n";

    double top = singular_values(assemble(nd, sv_extremal_nd(hb, hf, n, true)))(n - 1);
    double bottom = singular_values(assemble(nd, sv_extremal_nd(hb, hf, n, false)))(n - 1);
    ok = std::abs(top - hi) <= 1e-9 * scale && std::abs(bottom - lo) <= 1e-9 * scale;
    out.violations += !ok;
    out.text += "ex4 sigma_" + std::to_string(n) + " attained = (" + format_number(bottom) +
                ", " + format_number(top) + ") " + pass_fail(ok) + "\n";
  }
  return out;
}

}  // namespace

std::string format_number(double value) {
  char buf[44];
  auto res = std::to_chars(buf, buf + sizeof(buf), value);
  return std::string(buf, res.ptr);
}

void ExperimentConfig::validate() const {
  scenario.validate();
  auto need = [](bool ok, const char* message) {
    if (!ok) throw std::invalid_argument(message);
  };
  need(!power_db.empty(), "config: power_db must be nonempty");
  need(!n_s_list.empty(), "config: n_s_list must be nonempty");
  need(!group_sizes.empty(), "config: group_sizes must be nonempty");
  need(!epsilons.empty(), "config: epsilons must be nonempty");
  need(weight_count >= 1, "config: weight_count must be at least 1");
  need(trials >= 1, "config: trials must be at least 1");
  need(theta_draws >= 1, "config: theta_draws must be at least 1");
  need(threads >= 1, "config: threads must be at least 1");
  need(output_format == "csv" || output_format == "json",
       "config: output_format must be csv or json");
  for (int l : group_sizes) need(l >= 1, "config: group_sizes entries must be at least 1");
  for (int n : n_s_list) need(n >= 1, "config: n_s_list entries must be at least 1");
  for (double e : epsilons) need(e >= 0, "config: epsilons entries must be nonnegative");
}

ExperimentConfig config_from_json(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw std::invalid_argument(std::string("config: ") + e.what());
  }
  if (!j.is_object()) throw std::invalid_argument("config: top level must be an object");
  ExperimentConfig cfg;
  for (const auto& [key, value] : j.items()) {
    if (key == "scenario") parse_scenario(value, cfg.scenario);
    else if (key == "power_db") cfg.power_db = number_list(value, key);
    else if (key == "n_s_list") cfg.n_s_list = int_list(value, key);
    else if (key == "group_sizes") cfg.group_sizes = int_list(value, key);
    else if (key == "weight_count") cfg.weight_count = take_int(value, key);
    else if (key == "epsilons") cfg.epsilons = number_list(value, key);
    else if (key == "trials") cfg.trials = take_int(value, key);
    else if (key == "theta_draws") cfg.theta_draws = take_int(value, key);
    else if (key == "direct") {
      if (!value.is_boolean()) throw std::invalid_argument("config: direct must be a boolean");
      cfg.direct = value.get<bool>();
    } else if (key == "output_path") {
      if (!value.is_string()) throw std::invalid_argument("config: output_path must be a string");
      cfg.output_path = value.get<std::string>();
    } else if (key == "output_format") {
      if (!value.is_string())
        throw std::invalid_argument("config: output_format must be a string");
      cfg.output_format = value.get<std::string>();
    } else if (key == "threads") {
      cfg.threads = take_int(value, key);
    } else {
      throw std::invalid_argument("config: unknown key '" + key + "'");
    }
  }
  cfg.validate();
  return cfg;
}

CommandResult cmd_pareto(const ExperimentConfig& config) {
  config.validate();
  check_divides(config);
  const int n_modes = std::min(config.scenario.n_t, config.scenario.n_r);
  const int n_s = config.scenario.n_s;

  std::vector<RealVec> weights;
  if (n_modes == 2 && config.weight_count > 1) {
    for (int i = 0; i < config.weight_count; ++i) {
      double t = i * (std::numbers::pi / 2) / (config.weight_count - 1);
      RealVec w(2);
      w << std::cos(t), std::sin(t);
      weights.push_back(w);
    }
  } else {
    int count = n_modes == 2 ? 1 : n_modes;
    for (int n = 0; n < count; ++n) {
      RealVec w = RealVec::Zero(n_modes);
      w(n) = 1;
      weights.push_back(w);
    }
  }

  struct TrialOut {
    std::vector<std::vector<std::string>> rows;
    int violations = 0;
  };
  std::vector<TrialOut> slots(config.trials);

  run_trials(config.trials, config.threads, [&](int trial) {
    TrialOut& slot = slots[trial];
    ChannelSet ch = trial_channels(config, trial);
    bool no_direct = ch.h_d.cwiseAbs().maxCoeff() == 0;
    RealVec pad_b = padded_spectrum(ch.h_b, n_s);
    RealVec pad_f = padded_spectrum(ch.h_f, n_s);
    double scale = std::max(pad_b(0) * pad_f(0), 1e-300);
    for (int l : config.group_sizes) {
      auto points = pareto_frontier(ch, weights, l, frontier_config());
      for (std::size_t i = 0; i < points.size(); ++i) {
        const FrontierPoint& pt = points[i];
        if (pt.theta.unitarity_defect() > 1e-6) ++slot.violations;
        if (no_direct) {
          for (int n = 1; n <= std::min(n_modes, n_s); ++n) {
            auto [lo, hi] = sv_bounds_nd(pad_b, pad_f, n);
            (void)lo;
            if (pt.achieved_sv(n - 1) > hi + 1e-8 * scale) ++slot.violations;
          }
        }
        std::vector<std::string> row;
        for (int n = 0; n < n_modes; ++n) row.push_back(format_number(pt.weights(n)));
        for (int n = 0; n < n_modes; ++n) row.push_back(format_number(pt.achieved_sv(n)));
        row.push_back(std::to_string(l));
        row.push_back(std::to_string(trial_seed(config, trial)));
        slot.rows.push_back(std::move(row));
      }
    }
  });

  std::vector<std::string> header;
  for (int n = 1; n <= n_modes; ++n) header.push_back("weight_" + std::to_string(n));
  for (int n = 1; n <= n_modes; ++n) header.push_back("sigma_" + std::to_string(n));
  header.push_back("group_size");
  header.push_back("trial_seed");

  CommandResult out;
  std::vector<std::vector<std::string>> rows;
  for (const TrialOut& slot : slots) {
    out.violations += slot.violations;
    rows.insert(rows.end(), slot.rows.begin(), slot.rows.end());
  }
  out.text = render_table(header, rows, config.output_format);
  return out;
}

CommandResult cmd_rate_sweep(const ExperimentConfig& config) {
  config.validate();
  check_divides(config);
  const double eta = noise_linear(config);
  const int per_power = 1 + 2 * static_cast<int>(config.group_sizes.size());

  struct TrialOut {
    std::vector<double> rates;  // indexed by (power, row-within-power)
    int violations = 0;
  };
  std::vector<TrialOut> slots(config.trials);

  run_trials(config.trials, config.threads, [&](int trial) {
    TrialOut& slot = slots[trial];
    ChannelSet ch = trial_channels(config, trial);
    for (double p_db : config.power_db) {
      double p = std::pow(10.0, p_db / 10.0);
      PrecoderResult direct = eigenmode_precoder(ch.h_d, p, eta);
      slot.rates.push_back(logdet_rate_bits(ch.h_d, direct.w, eta));
      for (const MethodRate& m :
           rate_methods(ch, ch, config.group_sizes, p, eta, slot.violations))
        slot.rates.push_back(m.rate);
    }
  });

  CommandResult out;
  std::vector<std::vector<std::string>> rows;
  for (std::size_t pi = 0; pi < config.power_db.size(); ++pi) {
    for (int r = 0; r < per_power; ++r) {
      double mean = 0;
      for (const TrialOut& slot : slots) mean += slot.rates[pi * per_power + r];
      mean /= config.trials;
      std::string group = "0";
      std::string method = "no-ris";
      if (r > 0) {
        group = std::to_string(config.group_sizes[(r - 1) / 2]);
        method = (r - 1) % 2 == 0 ? "two-stage" : "ao";
      }
      rows.push_back({format_number(config.power_db[pi]), group, method, format_number(mean),
                      std::to_string(config.trials)});
    }
  }
  for (const TrialOut& slot : slots) out.violations += slot.violations;
  out.text = render_table({"power_db", "group_size", "method", "mean_rate", "trials"}, rows,
                          config.output_format);
  return out;
}

CommandResult cmd_power_sweep(const ExperimentConfig& config) {
  config.validate();

  // Group sizes that do not divide a surface size are skipped for that size.
  std::vector<std::pair<int, int>> grid;
  for (int n_s : config.n_s_list)
    for (int l : config.group_sizes)
      if (n_s % l == 0) grid.emplace_back(n_s, l);
  if (grid.empty())
    throw std::invalid_argument("config: no group_sizes entry divides any n_s_list entry");

  struct TrialOut {
    std::vector<double> gains;  // two per grid cell: identity, saa
    int violations = 0;
  };
  std::vector<TrialOut> slots(config.trials);

  run_trials(config.trials, config.threads, [&](int trial) {
    TrialOut& slot = slots[trial];
    int current_n_s = 0;
    ChannelSet ch;
    std::map<int, BlockUnitary> solved;
    std::map<int, double> solved_gain;
    for (const auto& [n_s, l] : grid) {
      if (n_s != current_n_s) {
        ch = trial_channels(config, trial, n_s);
        current_n_s = n_s;
        solved.clear();
        solved_gain.clear();
      }
      slot.gains.push_back(assemble(ch, BlockUnitary::identity(n_s, l)).squaredNorm());

      std::optional<BlockUnitary> warm;
      int base = 0;
      for (const auto& [prev, theta] : solved)
        if (l % prev == 0 && prev > base) base = prev;
      if (base > 0) warm = BlockUnitary::from_full(solved.at(base).full(), l);
      SaaResult saa = maximize_power_saa(ch, l, ascent_config(), warm);
      for (std::size_t i = 1; i < saa.trace.size(); ++i)
        if (saa.trace[i] < saa.trace[i - 1] - 1e-9 * std::max(1.0, saa.trace[i - 1]))
          ++slot.violations;
      double gain = assemble(ch, saa.theta).squaredNorm();
      if (base > 0 && gain < solved_gain.at(base) - 1e-9 * std::max(1.0, solved_gain.at(base)))
        ++slot.violations;
      solved[l] = saa.theta;
      solved_gain[l] = gain;
      slot.gains.push_back(gain);
    }
  });

  CommandResult out;
  std::vector<std::vector<std::string>> rows;
  for (std::size_t ci = 0; ci < grid.size(); ++ci) {
    for (int m = 0; m < 2; ++m) {
      double mean = 0;
      for (const TrialOut& slot : slots) mean += slot.gains[ci * 2 + m];
      mean /= config.trials;
      rows.push_back({std::to_string(grid[ci].first), std::to_string(grid[ci].second),
                      m == 0 ? "identity" : "saa", format_number(mean),
                      std::to_string(config.trials)});
    }
  }
  for (const TrialOut& slot : slots) out.violations += slot.violations;
  out.text = render_table({"n_s", "group_size", "method", "mean_gain", "trials"}, rows,
                          config.output_format);
  return out;
}

CommandResult cmd_bounds_check(const ExperimentConfig& config) {
  config.validate();

  std::vector<std::vector<FamilyStat>> slots(config.trials,
                                             std::vector<FamilyStat>(family_count));
  run_trials(config.trials, config.threads,
             [&](int trial) { bounds_check_channel(config, trial, slots[trial]); });

  std::vector<FamilyStat> total(family_count);
  for (const auto& slot : slots)
    for (int f = 0; f < family_count; ++f) total[f].merge(slot[f]);
  fixed_diagonal_case(total[f_fixed]);

  CommandResult out;
  for (const FamilyStat& f : total) out.violations += f.violations;

  ordered_json report = ordered_json::object();
  report["channels"] = config.trials;
  report["theta_draws"] = config.theta_draws;
  report["violations"] = out.violations;
  ordered_json families = ordered_json::object();
  for (int f = 0; f < family_count; ++f) families[family_name(f)] = total[f].to_json();
  report["families"] = families;
  out.text = report.dump(2) + "\n";
  return out;
}

CommandResult cmd_example(const std::string& name) {
  if (name == "ex2") return example_shaping_grid();
  if (name == "ex3") return example_dof();
  if (name == "ex4") return example_diagonal_bounds();
  throw std::invalid_argument("unknown example '" + name + "' (expected ex2, ex3, or ex4)");
}

CommandResult cmd_robustness(const ExperimentConfig& config) {
  config.validate();
  check_divides(config);
  const double eta = noise_linear(config);
  const double p = std::pow(10.0, config.power_db.front() / 10.0);
  const double lambda_b =
      pathloss(config.scenario.d_b, config.scenario.gamma_b, config.scenario.lambda0_db);
  const double lambda_f =
      pathloss(config.scenario.d_f, config.scenario.gamma_f, config.scenario.lambda0_db);
  const int per_eps = 2 * static_cast<int>(config.group_sizes.size());

  struct TrialOut {
    std::vector<double> rates;
    int violations = 0;
  };
  std::vector<TrialOut> slots(config.trials);

  run_trials(config.trials, config.threads, [&](int trial) {
    TrialOut& slot = slots[trial];
    ChannelSet truth = trial_channels(config, trial);
    for (std::size_t ei = 0; ei < config.epsilons.size(); ++ei) {
      double eps = config.epsilons[ei];
      ChannelSet design =
          eps == 0 ? truth
                   : perturb(truth, eps, lambda_b, lambda_f,
                             derive_seed(trial_seed(config, trial), kErrorStream + ei));
      for (const MethodRate& m :
           rate_methods(design, truth, config.group_sizes, p, eta, slot.violations))
        slot.rates.push_back(m.rate);
    }
  });

  CommandResult out;
  std::vector<std::vector<std::string>> rows;
  for (std::size_t ei = 0; ei < config.epsilons.size(); ++ei) {
    for (int r = 0; r < per_eps; ++r) {
      double mean = 0;
      for (const TrialOut& slot : slots) mean += slot.rates[ei * per_eps + r];
      mean /= config.trials;
      int l = config.group_sizes[r / 2];
      std::string method =
          (r % 2 == 0 ? std::string("two-stage-L") : std::string("ao-L")) + std::to_string(l);
      rows.push_back({format_number(config.epsilons[ei]), method, format_number(mean)});
    }
  }
  for (const TrialOut& slot : slots) out.violations += slot.violations;
  out.text = render_table({"epsilon", "method", "mean_rate"}, rows, config.output_format);
  return out;
}

}  // namespace ris
