#pragma once

#include <optional>
#include <vector>

#include "ris/channel.hpp"
#include "ris/manifold.hpp"
#include "ris/types.hpp"

namespace ris {

struct FrontierPoint {
  RealVec weights;      // nonnegative, not all zero
  RealVec achieved_sv;  // descending singular values of the shaped channel
  BlockUnitary theta;
};

// Subgradient of a weighted singular-value sum at the current surface:
// H_{B,g}^H U diag(d) V^H H_{F,g}^H from one SVD of the equivalent channel.
// The convention is df = Re tr(subgrad^H dTheta_g); adapters feeding the
// manifold optimizer (which expects df = 2 Re tr(grad^H dTheta_g)) pass half.
Mat shaping_subgradient(const ChannelSet& ch, const BlockUnitary& theta, const RealVec& d_diag,
                        int g);

// One manifold ascent of sum_n w_n sigma_n(H) per weight vector, each solve
// warm-started from the previous point along the sweep.
std::vector<FrontierPoint> pareto_frontier(const ChannelSet& ch,
                                           const std::vector<RealVec>& weight_list,
                                           int group_size, const OptimizerConfig& config);

// Wirtinger derivative of ln det(I + H Q H^H / eta) with respect to
// conj(Theta_g): (1/eta) H_{B,g}^H (I + H Q H^H/eta)^{-1} H Q H_{F,g}^H.
Mat rate_gradient(const ChannelSet& ch, const BlockUnitary& theta, const Mat& q_cov, double eta,
                  int g);

struct PrecoderResult {
  Mat w;  // n_t x streams, empty for a zero channel
  PowerAllocation allocation;
  double rate = 0;  // bits
};

// Eigenmode transmission: right singular vectors weighted by the water-filled
// per-mode powers.
PrecoderResult eigenmode_precoder(const Mat& h, double p, double eta);

struct RateResult {
  BlockUnitary theta;
  Mat precoder;
  PowerAllocation allocation;
  double rate = 0;            // bits
  std::vector<double> trace;  // rate in bits after each outer iteration
};

// Alternating optimization: manifold ascent of the log-det at fixed transmit
// covariance, then eigenmode precoding at fixed surface, until the rate
// settles. The optional start overrides the identity surface.
RateResult maximize_rate_ao(const ChannelSet& ch, int group_size, double p, double eta,
                            const OptimizerConfig& config,
                            const std::optional<BlockUnitary>& theta0 = std::nullopt);

struct SaaResult {
  BlockUnitary theta;
  std::vector<double> trace;  // ||H||_F^2 per sweep, trace[0] at theta0
  bool degenerate = false;    // some sweep target was rank deficient (flat maximizer
                              // directions; a vanishing target keeps its block)
};

// Gauss-Seidel sweeps Theta_g <- polar(H_{B,g}^H H H_{F,g}^H) with H rebuilt
// from the already-updated blocks; monotone in the channel power.
SaaResult maximize_power_saa(const ChannelSet& ch, int group_size, const OptimizerConfig& config,
                             const std::optional<BlockUnitary>& theta0 = std::nullopt);

// Shape for maximum power gain, then precode once on the shaped channel.
RateResult maximize_rate_two_stage(const ChannelSet& ch, int group_size, double p, double eta,
                                   const OptimizerConfig& config);

// Water-filled log-det capacity in bits.
double capacity(const Mat& h, double p, double eta);

}  // namespace ris
