#pragma once

#include <utility>

#include "ris/types.hpp"

namespace ris {

// Selector for the closed-form scattering designs below.
enum class DesignKind {
  siso_phase_match,
  dof_max,
  dof_min,
  sv_n_max,
  sv_n_min,
  power_max_nd,
  power_min_nd,
  rate_max_nd,
  procrustes_left,
  procrustes_right,
};

struct DesignGoal {
  DesignKind kind = DesignKind::power_max_nd;
  int n = 1;  // mode index for the sv_n_* kinds
};

// Phase matching for a scalar end-to-end channel. h_b is the 1 x N_S backward
// row, h_f the N_S x 1 forward column. A group with a vanishing branch vector
// degenerates to a phase-scaled identity block; h_d == 0 means phase 0.
BlockUnitary siso_phase_match(cxd h_d, const Mat& h_b, const Mat& h_f, int group_size);

// Rank extremizers of h_b * theta * h_f over fully-connected unitaries.
BlockUnitary dof_extremal(const Mat& h_b, const Mat& h_f, bool maximize);

// Pivot (i, j) over the sigma_i(h_b) * sigma_j(h_f) anti-diagonal used by
// sv_extremal_nd; 1-based, ties broken towards the smallest i.
std::pair<int, int> sv_pivot_nd(const RealVec& sigma_b, const RealVec& sigma_f, int n,
                                bool maximize);

// Extremizes the n-th singular value of h_b * theta * h_f.
BlockUnitary sv_extremal_nd(const Mat& h_b, const Mat& h_f, int n, bool maximize);

// Extremizes ||h_b * theta * h_f||_F^2.
BlockUnitary power_extremal_nd(const Mat& h_b, const Mat& h_f, bool maximize);

// Capacity-achieving fully-connected design for h_d = 0; coincides with
// power_extremal_nd(maximize).
BlockUnitary rate_optimal_nd(const Mat& h_b, const Mat& h_f);

enum class ProcrustesSide { left, right };

struct ProcrustesResult {
  BlockUnitary theta;
  bool ill_conditioned = false;
};

// Unitary Procrustes fit of the indirect channel to the direct one, with theta
// moved out of the product by a pseudo-inverse on the chosen side. h_d == 0
// falls back to power_extremal_nd(maximize).
ProcrustesResult procrustes_approx(const Mat& h_d, const Mat& h_b, const Mat& h_f,
                                   ProcrustesSide side);

// Symmetric-unitary replacement for a U V^H style design target.
Mat symmetrize_takagi(const Mat& m);

}  // namespace ris
