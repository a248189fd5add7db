#pragma once

#include <functional>
#include <string>
#include <vector>

#include "ris/types.hpp"

namespace ris {

enum class Schedule { sequential_groups, parallel_groups };
enum class Symmetry { none, project_symmetric };

struct OptimizerConfig {
  double rel_tolerance = 1e-8;     // stop when |f_r - f_{r-1}| / |f_{r-1}| drops below
  int max_outer_iters = 1000;
  double armijo_initial_step = 0.1;
  int max_linesearch_steps = 30;   // doubling cap; halvings get ten more
  Schedule schedule = Schedule::sequential_groups;
  Symmetry symmetry = Symmetry::none;

  void validate() const;
};

// Objective hooks. euclid_grad(theta, g) is the Wirtinger derivative of eval
// with respect to conj(Theta_g), so df = 2 Re tr(euclid_grad^H dTheta_g).
// Group index g is 1-based. For non-smooth objectives any subgradient
// selection is acceptable.
struct ObjectiveAdapter {
  std::function<double(const BlockUnitary&)> eval;
  std::function<Mat(const BlockUnitary&, int)> euclid_grad;
};

struct IterationStat {
  int iter = 0;
  double objective = 0;
  double step_size = 0;
  double grad_norm = 0;
};

struct OptimizeResult {
  BlockUnitary theta;
  std::vector<double> trace;  // objective per outer iteration, trace[0] = f(theta0)
  std::vector<IterationStat> stats;
};

// Gradient translated to the Lie algebra at the identity:
// grad_full * theta^H - theta * grad_full^H with grad_full = 2 * euclid_grad.
// Always skew-Hermitian.
Mat riemannian_grad_at_identity(const Mat& euclid_grad, const Mat& theta_g);

// Polak-Ribiere conjugation weight, real part of
// tr((G_r - G_{r-1}) G_r^H) / tr(G_{r-1} G_{r-1}^H); 0 when the previous
// gradient vanishes (restart).
double polak_ribiere(const Mat& grad_now, const Mat& grad_prev);

// Geodesic conjugate-gradient ascent over the block-unitary manifold.
// Per group: conjugate direction with ascent safeguard, doubling-then-halving
// step search against the mu * tr(D D^H)/2 threshold, multiplicative update
// Theta_g <- exp(mu D) Theta_g. Maximizes the objective.
OptimizeResult optimize(const ObjectiveAdapter& objective, const BlockUnitary& theta0,
                        const OptimizerConfig& config);

// CSV rendering of the per-iteration diagnostics.
std::string trace_csv(const std::vector<IterationStat>& stats);

}  // namespace ris
