#include "ris/solvers.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <utility>

#include "ris/designs.hpp"
#include "ris/numerics.hpp"

namespace ris {

namespace {

int mode_count(const ChannelSet& ch) {
  return static_cast<int>(std::min(ch.h_b.rows(), ch.h_f.cols()));
}

double weighted_sv_sum(const RealVec& w, const RealVec& sv) {
  double s = 0;
  for (int n = 0; n < w.size(); ++n) s += w[n] * sv[n];
  return s;
}

// ln det(I + H Q H^H / eta) through the Cholesky factor.
double logdet_nats(const Mat& h, const Mat& q_cov, double eta) {
  Mat k = Mat::Identity(h.rows(), h.rows()) + h * q_cov * h.adjoint() / eta;
  Eigen::LLT<Mat> llt(k);
  Mat l = llt.matrixL();
  double nats = 0;
  for (int i = 0; i < l.rows(); ++i) nats += 2.0 * std::log(l(i, i).real());
  return nats;
}

void require_surface_start(const BlockUnitary& theta, int n_s, int group_size, const char* who) {
  if (theta.group_size != group_size || theta.dim() != n_s)
    throw std::invalid_argument(std::string(who) + ": start does not match the surface layout");
}

}  // namespace

Mat shaping_subgradient(const ChannelSet& ch, const BlockUnitary& theta, const RealVec& d_diag,
                        int g) {
  Mat h = assemble(ch, theta);
  if (d_diag.size() != std::min(h.rows(), h.cols()))
    throw std::invalid_argument("shaping_subgradient: one entry per channel mode required");
  Eigen::JacobiSVD<Mat> svd(h, Eigen::ComputeThinU | Eigen::ComputeThinV);
  Vec d = d_diag.cast<cxd>();
  Mat core = svd.matrixU() * d.asDiagonal() * svd.matrixV().adjoint();
  auto slice = group_slice(ch, g, theta.group_size);
  return slice.first.adjoint() * core * slice.second.adjoint();
}

std::vector<FrontierPoint> pareto_frontier(const ChannelSet& ch,
                                           const std::vector<RealVec>& weight_list,
                                           int group_size, const OptimizerConfig& config) {
  const int modes = mode_count(ch);
  for (const RealVec& w : weight_list) {
    if (w.size() != modes)
      throw std::invalid_argument("pareto_frontier: one weight per channel mode required");
    if ((w.array() < 0).any())
      throw std::invalid_argument("pareto_frontier: weights must be nonnegative");
    if (w.maxCoeff() == 0) throw std::invalid_argument("pareto_frontier: weights must not all vanish");
  }
  const BlockUnitary fresh = BlockUnitary::identity(static_cast<int>(ch.h_b.cols()), group_size);
  BlockUnitary start = fresh;
  std::vector<FrontierPoint> points;
  for (const RealVec& w : weight_list) {
    ObjectiveAdapter objective;
    objective.eval = [&ch, w](const BlockUnitary& t) {
      return weighted_sv_sum(w, singular_values(assemble(ch, t)));
    };
    objective.euclid_grad = [&ch, w](const BlockUnitary& t, int g) {
      return Mat(0.5 * shaping_subgradient(ch, t, w, g));
    };
    // The previous point is a critical point of every singular value, so a
    // warm start alone can stall; race it against an identity restart.
    OptimizeResult warm = optimize(objective, start, config);
    OptimizeResult run = optimize(objective, fresh, config);
    if (warm.trace.back() >= run.trace.back()) run = std::move(warm);
    start = run.theta;  // walk the frontier instead of restarting
    FrontierPoint point;
    point.weights = w;
    point.achieved_sv = singular_values(assemble(ch, run.theta));
    point.theta = std::move(run.theta);
    points.push_back(std::move(point));
  }
  return points;
}

Mat rate_gradient(const ChannelSet& ch, const BlockUnitary& theta, const Mat& q_cov, double eta,
                  int g) {
  if (eta <= 0) throw std::invalid_argument("rate_gradient: noise power must be positive");
  Mat h = assemble(ch, theta);
  Mat k = Mat::Identity(h.rows(), h.rows()) + h * q_cov * h.adjoint() / eta;
  Mat whitened = k.llt().solve(h * q_cov);
  auto slice = group_slice(ch, g, theta.group_size);
  return slice.first.adjoint() * whitened * slice.second.adjoint() / eta;
}

PrecoderResult eigenmode_precoder(const Mat& h, double p, double eta) {
  if (p <= 0) throw std::invalid_argument("eigenmode_precoder: power budget must be positive");
  if (eta <= 0) throw std::invalid_argument("eigenmode_precoder: noise power must be positive");
  PrecoderResult out;
  out.w = Mat::Zero(h.cols(), 0);
  out.allocation.water_level = 0;
  if (h.size() == 0 || h.cwiseAbs().maxCoeff() == 0) return out;

  Eigen::JacobiSVD<Mat> svd(h, Eigen::ComputeThinV);
  RealVec gains = svd.singularValues().cwiseProduct(svd.singularValues());
  out.allocation = waterfill(gains, p, eta);
  int streams = 0;
  while (streams < out.allocation.levels.size() && out.allocation.levels[streams] > 0) ++streams;
  out.w = Mat(h.cols(), streams);
  for (int i = 0; i < streams; ++i)
    out.w.col(i) = svd.matrixV().col(i) * std::sqrt(out.allocation.levels[i]);
  for (int i = 0; i < gains.size(); ++i)
    out.rate += std::log2(1.0 + out.allocation.levels[i] * gains[i] / eta);
  return out;
}

RateResult maximize_rate_ao(const ChannelSet& ch, int group_size, double p, double eta,
                            const OptimizerConfig& config,
                            const std::optional<BlockUnitary>& theta0) {
  config.validate();
  const int n_s = static_cast<int>(ch.h_b.cols());
  BlockUnitary theta = theta0 ? *theta0 : BlockUnitary::identity(n_s, group_size);
  require_surface_start(theta, n_s, group_size, "maximize_rate_ao");

  OptimizerConfig inner = config;
  inner.rel_tolerance = config.rel_tolerance / 10;  // keep the surface solves ahead of the outer test

  PrecoderResult pre = eigenmode_precoder(assemble(ch, theta), p, eta);
  RateResult out;
  out.trace.push_back(pre.rate);
  for (int iter = 0; iter < config.max_outer_iters; ++iter) {
    if (pre.w.cols() == 0) break;  // dead channel, nothing to point the surface at
    Mat q_cov = pre.w * pre.w.adjoint();
    ObjectiveAdapter objective;
    objective.eval = [&ch, &q_cov, eta](const BlockUnitary& t) {
      return logdet_nats(assemble(ch, t), q_cov, eta);
    };
    objective.euclid_grad = [&ch, &q_cov, eta](const BlockUnitary& t, int g) {
      return rate_gradient(ch, t, q_cov, eta, g);
    };
    theta = optimize(objective, theta, inner).theta;
    pre = eigenmode_precoder(assemble(ch, theta), p, eta);
    out.trace.push_back(pre.rate);
    double prev = out.trace[out.trace.size() - 2];
    if (std::abs(pre.rate - prev) <= config.rel_tolerance * std::max(prev, 1e-300)) break;
  }
  out.theta = std::move(theta);
  out.precoder = std::move(pre.w);
  out.allocation = std::move(pre.allocation);
  out.rate = pre.rate;
  return out;
}

SaaResult maximize_power_saa(const ChannelSet& ch, int group_size, const OptimizerConfig& config,
                             const std::optional<BlockUnitary>& theta0) {
  config.validate();
  const int n_s = static_cast<int>(ch.h_b.cols());
  BlockUnitary theta = theta0 ? *theta0 : BlockUnitary::identity(n_s, group_size);
  require_surface_start(theta, n_s, group_size, "maximize_power_saa");

  SaaResult out;
  Mat h = assemble(ch, theta);
  out.trace.push_back(h.squaredNorm());
  for (int sweep = 0; sweep < config.max_outer_iters; ++sweep) {
    for (int g = 1; g <= theta.groups(); ++g) {
      auto slice = group_slice(ch, g, group_size);
      Mat target = slice.first.adjoint() * h * slice.second.adjoint();
      int rank = numerical_rank(target);
      if (rank == 0) {
        out.degenerate = true;  // no pull on this group at all, keep the block
        continue;
      }
      // A completed polar factor maximizes Re tr(Theta^H target) even when the
      // target is rank deficient, and the objective is convex in Theta, so the
      // sweep stays monotone; the flat directions are merely non-unique.
      if (rank < group_size) out.degenerate = true;
      Eigen::JacobiSVD<Mat> svd(target, Eigen::ComputeFullU | Eigen::ComputeFullV);
      Mat next = svd.matrixU() * svd.matrixV().adjoint();
      h += slice.first * (next - theta.blocks[g - 1]) * slice.second;
      theta.blocks[g - 1] = next;
    }
    h = assemble(ch, theta);  // shed the incremental-update roundoff once per sweep
    out.trace.push_back(h.squaredNorm());
    double prev = out.trace[out.trace.size() - 2];
    if (std::abs(out.trace.back() - prev) <= config.rel_tolerance * std::max(prev, 1e-300)) break;
  }
  out.theta = std::move(theta);
  return out;
}

RateResult maximize_rate_two_stage(const ChannelSet& ch, int group_size, double p, double eta,
                                   const OptimizerConfig& config) {
  const int n_s = static_cast<int>(ch.h_b.cols());
  bool no_direct = ch.h_d.size() == 0 || ch.h_d.cwiseAbs().maxCoeff() == 0;
  BlockUnitary theta = (no_direct && group_size == n_s)
                           ? rate_optimal_nd(ch.h_b, ch.h_f)
                           : maximize_power_saa(ch, group_size, config).theta;
  PrecoderResult pre = eigenmode_precoder(assemble(ch, theta), p, eta);
  RateResult out;
  out.theta = std::move(theta);
  out.precoder = std::move(pre.w);
  out.allocation = std::move(pre.allocation);
  out.rate = pre.rate;
  out.trace = {pre.rate};
  return out;
}

double capacity(const Mat& h, double p, double eta) { return eigenmode_precoder(h, p, eta).rate; }

}  // namespace ris
