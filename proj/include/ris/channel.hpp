#pragma once

#include <cstdint>
#include <string>
#include <utility>

#include "ris/types.hpp"

namespace ris {

// Distance-dependent link budget and element counts for one experiment.
struct Scenario {
  double lambda0_db = -30.0;  // reference path loss at 1 m
  double gamma_d = 3.0;
  double gamma_f = 2.4;
  double gamma_b = 2.0;
  double d_d = 14.7;  // meters
  double d_f = 10.0;
  double d_b = 6.3;
  double kappa_d = 0.0;  // Rician K-factors, linear
  double kappa_f = 0.0;
  double kappa_b = 0.0;
  int n_t = 4;
  int n_s = 16;
  int n_r = 4;
  int group_size = 1;
  double noise_db = -75.0;
  std::uint64_t seed = 0;

  int groups() const { return n_s / group_size; }
  void validate() const;  // throws std::invalid_argument naming the bad field
};

struct ChannelSet {
  Mat h_d;  // n_r x n_t, zero matrix encodes a negligible direct link
  Mat h_b;  // n_r x n_s
  Mat h_f;  // n_s x n_t
};

// Linear power gain lambda0 * d^-gamma.
double pathloss(double d, double gamma, double lambda0_db);

// Draw all three channels: sqrt(pathloss) times a Rician mixture of the
// all-ones rank-1 line-of-sight matrix and unit-variance i.i.d. fading.
// Deterministic given scenario.seed; each channel uses its own stream.
ChannelSet sample_channels(const Scenario& sc);

// Equivalent channel H_D + sum_g H_B,g Theta_g H_F,g.
Mat assemble(const ChannelSet& ch, const BlockUnitary& theta);

// Estimated channels: adds i.i.d. circular Gaussian error of per-entry
// variance epsilon * lambda_b * lambda_f to both indirect channels. The
// direct channel is kept exact.
ChannelSet perturb(const ChannelSet& ch, double epsilon, double lambda_b, double lambda_f,
                   std::uint64_t seed);

// Group g (1-based) of the indirect channels: columns (g-1)L+1..gL of H_B and
// the same rows of H_F.
std::pair<Mat, Mat> group_slice(const ChannelSet& ch, int g, int L);

// JSON round trip, bit exact for IEEE doubles.
std::string channel_to_json(const ChannelSet& ch);
ChannelSet channel_from_json(const std::string& text);

}  // namespace ris
