#include "ris/bounds.hpp"

#include <Eigen/Eigenvalues>
#include <Eigen/SVD>
#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "ris/numerics.hpp"

namespace ris {

namespace {

RealVec pad_to(const RealVec& sv, int len) {
  RealVec out = RealVec::Zero(len);
  int n = std::min<int>(static_cast<int>(sv.size()), len);
  out.head(n) = sv.head(n);
  return out;
}

void require_descending(const RealVec& sv, const char* who) {
  for (int i = 0; i < sv.size(); ++i) {
    if (sv[i] < 0) throw std::invalid_argument(std::string(who) + ": negative singular value");
    if (i > 0 && sv[i] > sv[i - 1] * (1 + 1e-12) + 1e-300)
      throw std::invalid_argument(std::string(who) + ": spectrum not descending");
  }
}

}  // namespace

std::pair<int, int> dof_range(const Mat& h_b, const Mat& h_f) {
  if (h_b.cols() != h_f.rows())
    throw std::invalid_argument("dof_range: backward columns must match forward rows");
  int n_s = static_cast<int>(h_b.cols());
  int r_b = numerical_rank(h_b);
  int r_f = numerical_rank(h_f);
  return {std::max(r_b + r_f - n_s, 0), std::min(r_b, r_f)};
}

RealVec rank_deficient_T(const Mat& h_d, const Mat& h_channel, DeficientSide side) {
  // The projector is idempotent, so h_d * proj (resp. proj * h_d) is a valid
  // square root of the defining Gram matrix. Working on the matrix itself
  // instead of the Gram keeps a mathematically zero T at roundoff scale.
  Mat t;
  if (side == DeficientSide::forward) {
    if (h_channel.cols() != h_d.cols())
      throw std::invalid_argument("rank_deficient_T: forward columns must match direct columns");
    Eigen::JacobiSVD<Mat> svd(h_channel, Eigen::ComputeThinV);
    int r = numerical_rank(svd.singularValues());
    Mat v = svd.matrixV().leftCols(r);
    t = h_d - (h_d * v) * v.adjoint();
  } else {
    if (h_channel.rows() != h_d.rows())
      throw std::invalid_argument("rank_deficient_T: backward rows must match direct rows");
    Eigen::JacobiSVD<Mat> svd(h_channel, Eigen::ComputeThinU);
    int r = numerical_rank(svd.singularValues());
    Mat u = svd.matrixU().leftCols(r);
    t = h_d - u * (u.adjoint() * h_d);
  }
  return singular_values(t);
}

SvBoundReport sv_bounds_rank_deficient(const RealVec& sv_t, int k, int n_modes) {
  if (k < 1) throw std::invalid_argument("sv_bounds_rank_deficient: rank must be positive");
  if (n_modes < 1) throw std::invalid_argument("sv_bounds_rank_deficient: no modes");
  RealVec t = pad_to(sv_t, n_modes);
  SvBoundReport rep;
  rep.modes.resize(n_modes);
  for (int n = 1; n <= n_modes; ++n) {
    ModeBound& m = rep.modes[n - 1];
    if (n > k) {
      m.upper_bounded = true;
      m.upper = t[n - k - 1];
      m.source_upper = n - k;
    }
    if (n < n_modes - k + 1) {
      m.lower_informative = true;
      m.lower = t[n - 1];
      m.source_lower = n;
    }
  }
  return rep;
}

std::pair<double, double> sv_bounds_nd(const RealVec& sv_b, const RealVec& sv_f, int n) {
  int n_s = static_cast<int>(sv_b.size());
  if (sv_f.size() != n_s)
    throw std::invalid_argument("sv_bounds_nd: spectra must have equal length");
  if (n < 1 || n > n_s) throw std::invalid_argument("sv_bounds_nd: mode out of range");
  require_descending(sv_b, "sv_bounds_nd");
  require_descending(sv_f, "sv_bounds_nd");
  double upper = sv_b[0] * sv_f[n - 1];
  for (int i = 2; i <= n; ++i) upper = std::min(upper, sv_b[i - 1] * sv_f[n - i]);
  double lower = 0;
  for (int i = n; i <= n_s; ++i) lower = std::max(lower, sv_b[i - 1] * sv_f[n + n_s - i - 1]);
  return {lower, upper};
}

std::pair<double, double> product_bounds_nd(const RealVec& sv_b, const RealVec& sv_f, int k) {
  int len = std::max<int>(static_cast<int>(sv_b.size()), static_cast<int>(sv_f.size()));
  if (k < 1 || k > len) throw std::invalid_argument("product_bounds_nd: count out of range");
  RealVec b = pad_to(sv_b, len), f = pad_to(sv_f, len);
  require_descending(b, "product_bounds_nd");
  require_descending(f, "product_bounds_nd");
  double upper = 1, lower = 1;
  for (int n = 1; n <= k; ++n) upper *= b[n - 1] * f[n - 1];
  for (int n = len - k + 1; n <= len; ++n) lower *= b[n - 1] * f[n - 1];
  return {lower, upper};
}

std::vector<HornViolation> horn_r1_check(const RealVec& sv_b, const RealVec& sv_f,
                                         const RealVec& sv_h) {
  int len = std::max({static_cast<int>(sv_b.size()), static_cast<int>(sv_f.size()),
                      static_cast<int>(sv_h.size())});
  RealVec b = pad_to(sv_b, len), f = pad_to(sv_f, len), h = pad_to(sv_h, len);
  double scale = b[0] * f[0];
  std::vector<HornViolation> out;
  for (int i = 1; i <= len; ++i) {
    for (int j = 1; j <= len - i + 1; ++j) {
      double bound = b[i - 1] * f[j - 1];
      double value = h[i + j - 2];
      if (value > bound * (1 + 1e-9) + 1e-12 * scale)
        out.push_back({i, j, bound, value});
    }
  }
  return out;
}

std::pair<double, double> power_bounds_nd(const RealVec& sv_b, const RealVec& sv_f) {
  int len = std::max<int>(static_cast<int>(sv_b.size()), static_cast<int>(sv_f.size()));
  RealVec b = pad_to(sv_b, len), f = pad_to(sv_f, len);
  require_descending(b, "power_bounds_nd");
  require_descending(f, "power_bounds_nd");
  double upper = 0, lower = 0;
  for (int n = 0; n < len; ++n) {
    upper += b[n] * b[n] * f[n] * f[n];
    lower += b[n] * b[n] * f[len - 1 - n] * f[len - 1 - n];
  }
  return {lower, upper};
}

CapacityBounds capacity_extreme_bounds(const RealVec& sv_b, const RealVec& sv_f, double rho,
                                       int n_modes) {
  if (!(rho > 0)) throw std::invalid_argument("capacity_extreme_bounds: rho must be positive");
  if (n_modes < 1) throw std::invalid_argument("capacity_extreme_bounds: no modes");
  RealVec b = pad_to(sv_b, n_modes), f = pad_to(sv_f, n_modes);
  constexpr double ln2 = 0.6931471805599453;
  CapacityBounds out;
  double top = b[0] * f[0];
  out.low = rho * top * top / ln2;
  double log_prod = 0;
  for (int n = 0; n < n_modes; ++n) {
    double p = b[n] * f[n];
    if (p <= 0) {
      out.high_finite = false;
      out.high = 0;
      return out;
    }
    log_prod += std::log(p);
  }
  out.high = (n_modes * std::log(rho / n_modes) + 2 * log_prod) / ln2;
  return out;
}

}  // namespace ris
