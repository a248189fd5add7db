#pragma once

#include <utility>
#include <vector>

#include "ris/types.hpp"

namespace ris {

// Achievable rank interval (min, max) of the reflected cascade h_b * theta * h_f
// over all block-unitary surfaces: (max(r_b + r_f - n_s, 0), min(r_b, r_f)).
std::pair<int, int> dof_range(const Mat& h_b, const Mat& h_f);

enum class DeficientSide { backward, forward };

// Singular values of the auxiliary matrix T for a rank-deficient channel on
// the given side: T T^H = h_d (I - V_F V_F^H) h_d^H for the forward side,
// H_D^H (I - U_B U_B^H) H_D for the backward side, with V_F / U_B spanning the
// nonzero-singular-value subspace. This is the direct-path component no
// surface setting can touch.
RealVec rank_deficient_T(const Mat& h_d, const Mat& h_channel, DeficientSide side);

struct ModeBound {
  double lower = 0;            // amplitude, always finite and nonnegative
  double upper = 0;            // meaningful only when upper_bounded
  bool upper_bounded = false;
  bool lower_informative = false;  // false means the trivial lower bound 0
  int source_upper = 0;        // 1-based index into sv_T behind the upper bound
  int source_lower = 0;        // 1-based index into sv_T behind the lower bound
};

struct SvBoundReport {
  std::vector<ModeBound> modes;  // modes[n-1] bounds the n-th singular value
};

// Per-mode bounds on sv of the equivalent channel when the weaker of the two
// surface channels has rank k and the equivalent channel has n_modes singular
// values: sigma_n <= sigma_{n-k}(T) for n > k (first k modes unbounded) and
// sigma_n >= sigma_n(T) for n < n_modes - k + 1.
SvBoundReport sv_bounds_rank_deficient(const RealVec& sv_t, int k, int n_modes);

// Range of the n-th cascade singular value over all unitary surfaces:
// upper = min over i+j = n+1 of sigma_i(B) sigma_j(F), lower = max over
// i+j = n+N_S. Inputs must be descending and padded to equal length N_S.
std::pair<double, double> sv_bounds_nd(const RealVec& sv_b, const RealVec& sv_f, int n);

// (lower bound on the product of the k smallest, upper bound on the product of
// the k largest) cascade singular values. Inputs padded to a common length.
std::pair<double, double> product_bounds_nd(const RealVec& sv_b, const RealVec& sv_f, int k);

struct HornViolation {
  int i = 0;        // 1-based indices into sv_b / sv_f
  int j = 0;
  double bound = 0;  // sigma_i(B) sigma_j(F)
  double value = 0;  // offending sigma_{i+j-1}(H)
};

// Singleton Horn inequalities sigma_{i+j-1}(H) <= sigma_i(B) sigma_j(F) over
// all index pairs, with 1e-9 relative slack; empty result means all hold.
std::vector<HornViolation> horn_r1_check(const RealVec& sv_b, const RealVec& sv_f,
                                         const RealVec& sv_h);

// Range of the cascade power gain ||h_b theta h_f||_F^2: co-sorted and
// anti-sorted inner products of the squared spectra.
std::pair<double, double> power_bounds_nd(const RealVec& sv_b, const RealVec& sv_f);

struct CapacityBounds {
  double low = 0;           // bits, low-SNR capacity cap
  double high = 0;          // bits, meaningful only when high_finite
  bool high_finite = true;  // false when rank deficiency drives the log to -inf
};

// Capacity caps at the SNR extremes for the cascade through an n_modes-stream
// link: low = rho sigma_1^2(B) sigma_1^2(F) nats; high = n log(rho/n) +
// 2 log prod_n sigma_n(B) sigma_n(F) nats; both returned in bits.
CapacityBounds capacity_extreme_bounds(const RealVec& sv_b, const RealVec& sv_f, double rho,
                                       int n_modes);

}  // namespace ris
