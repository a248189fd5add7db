#include "ris/manifold.hpp"

#include <Eigen/Eigenvalues>
#include <cmath>
#include <limits>
#include <sstream>

#include "ris/numerics.hpp"

namespace ris {

void OptimizerConfig::validate() const {
  if (!(rel_tolerance > 0))
    throw std::invalid_argument("optimizer config: rel_tolerance must be positive");
  if (max_outer_iters < 1)
    throw std::invalid_argument("optimizer config: max_outer_iters must be at least 1");
  if (!(armijo_initial_step > 0))
    throw std::invalid_argument("optimizer config: armijo_initial_step must be positive");
  if (max_linesearch_steps < 1)
    throw std::invalid_argument("optimizer config: max_linesearch_steps must be at least 1");
}

Mat riemannian_grad_at_identity(const Mat& euclid_grad, const Mat& theta_g) {
  Mat full = 2.0 * euclid_grad;
  return full * theta_g.adjoint() - theta_g * full.adjoint();
}

double polak_ribiere(const Mat& grad_now, const Mat& grad_prev) {
  double denom = grad_prev.squaredNorm();
  if (denom <= 0) return 0.0;
  return ((grad_now - grad_prev) * grad_now.adjoint()).trace().real() / denom;
}

namespace {

// Eigendecomposition of a skew-Hermitian direction, reused across step sizes.
struct SkewExp {
  Mat v;
  RealVec d;
  explicit SkewExp(const Mat& skew) {
    Eigen::SelfAdjointEigenSolver<Mat> es(cxd(0, 1) * skew);
    v = es.eigenvectors();
    d = es.eigenvalues();
  }
  Mat at(double mu) const {
    Vec ph(d.size());
    for (int i = 0; i < d.size(); ++i) ph[i] = std::exp(cxd(0.0, -mu * d[i]));
    return v * ph.asDiagonal() * v.adjoint();
  }
};

double checked_eval(const ObjectiveAdapter& obj, const BlockUnitary& theta, int iter) {
  double f = obj.eval(theta);
  if (!std::isfinite(f))
    throw std::runtime_error("optimize: objective not finite at iteration " +
                             std::to_string(iter));
  return f;
}

struct StepResult {
  double mu = 0;
  double f_new = 0;
  bool accepted = false;
};

// Doubling-then-halving search. Doubling keeps going while the value at twice
// the step still clears mu * quad / 2; halving backtracks until the value at
// the step clears (mu/2) * quad / 2. quad = tr(D D^H). Once the acceptance
// threshold falls below the rounding noise of f the test can only be passed
// by accident, so the search gives up there instead of halving further.
template <typename EvalFn>
StepResult armijo_search(EvalFn&& f_at, double f_cur, double quad, double mu0, int dbl_cap,
                         int half_cap) {
  const double noise_floor =
      32 * std::numeric_limits<double>::epsilon() * std::max(std::abs(f_cur), 1e-300);
  double mu = mu0;
  double f_mu = std::numeric_limits<double>::quiet_NaN();
  for (int i = 0; i < dbl_cap; ++i) {
    double f2 = f_at(2 * mu);
    if (f2 - f_cur >= mu * quad / 2) {
      mu *= 2;
      f_mu = f2;
    } else {
      break;
    }
  }
  for (int i = 0; i < half_cap; ++i) {
    if ((mu / 2) * quad / 2 < noise_floor) break;
    if (std::isnan(f_mu)) f_mu = f_at(mu);
    if (f_mu - f_cur >= (mu / 2) * quad / 2) return {mu, f_mu, true};
    mu /= 2;
    f_mu = std::numeric_limits<double>::quiet_NaN();
  }
  return {};
}

}  // namespace

OptimizeResult optimize(const ObjectiveAdapter& obj, const BlockUnitary& theta0,
                        const OptimizerConfig& cfg) {
  cfg.validate();
  if (!obj.eval || !obj.euclid_grad)
    throw std::invalid_argument("optimize: objective adapter incomplete");

  BlockUnitary theta = theta0;
  const int groups = theta.groups();
  const int L = theta.group_size;
  const int dbl_cap = cfg.max_linesearch_steps;
  const int half_cap = cfg.max_linesearch_steps + 10;
  const int reset_period = std::max(1, 2 * L * L);

  OptimizeResult out;
  double f = checked_eval(obj, theta, 0);
  out.trace.push_back(f);

  std::vector<Mat> prev_grad(groups), prev_dir(groups);
  auto drop_memory = [&](int g) {
    prev_grad[g] = Mat();
    prev_dir[g] = Mat();
  };
  auto conjugate_direction = [&](const Mat& grad, int g) {
    Mat dir = grad;
    if (prev_grad[g].size() > 0) {
      double gamma = polak_ribiere(grad, prev_grad[g]);
      if (gamma > 0) dir = grad + gamma * prev_dir[g];
      // Keep the conjugate direction only while its first-order gain rate is
      // competitive with the gradient's own. The Armijo thresholds scale with
      // ||D||^2, so a direction below this bar is either not an ascent
      // direction at all or only accepts vanishing steps. Subsumes the plain
      // ascent test Re tr(D^H G) >= 0.
      if ((dir.adjoint() * grad).trace().real() < dir.squaredNorm() * (1.0 - 1e-9))
        dir = grad;
    }
    prev_grad[g] = grad;
    prev_dir[g] = dir;
    return dir;
  };

  int since_reset = 0;
  for (int r = 0; r < cfg.max_outer_iters; ++r) {
    double f_prev = f;
    double grad_norm_sq = 0;
    double last_step = 0;
    bool exhausted = false;

    if (cfg.schedule == Schedule::sequential_groups) {
      for (int g = 0; g < groups; ++g) {
        Mat grad = riemannian_grad_at_identity(obj.euclid_grad(theta, g + 1), theta.blocks[g]);
        grad_norm_sq += grad.squaredNorm();
        Mat dir = conjugate_direction(grad, g);
        double quad = dir.squaredNorm();
        if (quad <= 1e-30) continue;

        SkewExp rot(dir);
        auto f_at = [&](double mu) {
          Mat saved = theta.blocks[g];
          theta.blocks[g] = rot.at(mu) * saved;
          double v = checked_eval(obj, theta, r + 1);
          theta.blocks[g] = std::move(saved);
          return v;
        };
        StepResult st =
            armijo_search(f_at, f, quad, cfg.armijo_initial_step, dbl_cap, half_cap);
        if (st.accepted) {
          theta.blocks[g] = rot.at(st.mu) * theta.blocks[g];
          f = st.f_new;
          last_step = st.mu;
        } else {
          drop_memory(g);
          exhausted = true;
        }
      }
    } else {
      std::vector<Mat> dirs(groups);
      double quad = 0;
      for (int g = 0; g < groups; ++g) {
        Mat grad = riemannian_grad_at_identity(obj.euclid_grad(theta, g + 1), theta.blocks[g]);
        grad_norm_sq += grad.squaredNorm();
        dirs[g] = conjugate_direction(grad, g);
        quad += dirs[g].squaredNorm();
      }
      if (quad > 1e-30) {
        std::vector<SkewExp> rots;
        rots.reserve(groups);
        for (const Mat& d : dirs) rots.emplace_back(d);
        auto apply = [&](double mu) {
          BlockUnitary trial = theta;
          for (int g = 0; g < groups; ++g) trial.blocks[g] = rots[g].at(mu) * theta.blocks[g];
          return trial;
        };
        StepResult st = armijo_search(
            [&](double mu) { return checked_eval(obj, apply(mu), r + 1); }, f, quad,
            cfg.armijo_initial_step, dbl_cap, half_cap);
        if (st.accepted) {
          theta = apply(st.mu);
          f = st.f_new;
          last_step = st.mu;
        } else {
          for (int g = 0; g < groups; ++g) drop_memory(g);
          exhausted = true;
        }
      }
    }

    if (cfg.symmetry == Symmetry::project_symmetric) {
      for (Mat& b : theta.blocks) b = nearest_symmetric_unitary(b);
      f = checked_eval(obj, theta, r + 1);
      for (int g = 0; g < groups; ++g) drop_memory(g);
    }

    out.trace.push_back(f);
    out.stats.push_back({r + 1, f, last_step, std::sqrt(grad_norm_sq)});

    if (++since_reset >= reset_period) {
      for (int g = 0; g < groups; ++g) drop_memory(g);
      since_reset = 0;
    }
    // A rejected line search leaves f unchanged by construction; the reset
    // memory has to get one steepest step before convergence is judged.
    if (!exhausted &&
        std::abs(f - f_prev) <= cfg.rel_tolerance * std::max(std::abs(f_prev), 1e-15))
      break;
  }

  out.theta = std::move(theta);
  return out;
}

std::string trace_csv(const std::vector<IterationStat>& stats) {
  std::ostringstream os;
  os.precision(17);
  os << "iter,objective,step_size,grad_norm\n";
  for (const IterationStat& s : stats)
    os << s.iter << ',' << s.objective << ',' << s.step_size << ',' << s.grad_norm << '\n';
  return os.str();
}

}  // namespace ris
