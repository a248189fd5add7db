#include "ris/designs.hpp"

#include <Eigen/QR>
#include <Eigen/SVD>
#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

#include "ris/numerics.hpp"

namespace ris {

namespace {

void require_surface_pair(const Mat& h_b, const Mat& h_f, const char* who) {
  if (h_b.cols() < 1)
    throw std::invalid_argument(std::string(who) + ": surface must have at least one element");
  if (h_b.cols() != h_f.rows())
    throw std::invalid_argument(std::string(who) +
                                ": backward columns must match forward rows");
}

// Orthonormal basis whose leading columns span the given ones. Zero columns
// are allowed and mean "no constraint".
Mat basis_completion(const Mat& cols, int n) {
  if (cols.cols() == 0) return Mat::Identity(n, n);
  return unitary_completion(cols, n);
}

RealVec padded_sv(const Mat& m, int n_s) {
  RealVec sv = singular_values(m);
  RealVec out = RealVec::Zero(n_s);
  out.head(sv.size()) = sv;
  return out;
}

// Permutation completion for the extremal singular-value designs. Rows keep
// their natural order; the returned vector lists the column paired with each
// non-pivot row. The pairing is admissible when the completed product spectrum
// leaves the pivot exactly at position n.
struct CompletionSearch {
  const RealVec& sb;
  const RealVec& sf;
  std::vector<int> rows;
  double pivot;
  double tol;
  int n;
  int n_s;

  bool valid(const std::vector<int>& assign) const {
    std::vector<double> p(rows.size());
    for (size_t k = 0; k < rows.size(); ++k) p[k] = sb[rows[k]] * sf[assign[k]];
    std::sort(p.rbegin(), p.rend());
    if (n >= 2 && p[n - 2] < pivot - tol) return false;
    if (n <= n_s - 1 && p[n - 1] > pivot + tol) return false;
    return true;
  }
};

std::vector<int> find_completion(const RealVec& sb, const RealVec& sf, int i0, int j0, int n,
                                 bool maximize) {
  int n_s = static_cast<int>(sb.size());
  std::vector<int> rows, cols;
  for (int k = 0; k < n_s; ++k) {
    if (k != i0) rows.push_back(k);
    if (k != j0) cols.push_back(k);
  }
  double scale = std::max(sb[0] * sf[0], std::numeric_limits<double>::min());
  CompletionSearch search{sb, sf, rows, sb[i0] * sf[j0], 1e-12 * scale, n, n_s};
  if (rows.empty()) return {};

  if (n_s <= 8) {
    std::vector<int> assign = cols;
    do {
      if (search.valid(assign)) return assign;
    } while (std::next_permutation(assign.begin(), assign.end()));
    throw std::runtime_error("sv_extremal_nd: infeasible completion");
  }

  // Strongest-with-strongest first; for the minimizing design pair the
  // strongest rows against the weakest columns instead.
  std::vector<int> assign = cols;
  if (!maximize) std::reverse(assign.begin(), assign.end());
  if (search.valid(assign)) return assign;

  // Deterministic pairing that keeps every completed product on the correct
  // side of the pivot by index counting.
  std::vector<int> proof(rows.size());
  if (maximize) {
    int tail = n;
    for (size_t k = 0; k < rows.size(); ++k) {
      int r = rows[k];
      proof[k] = r < n ? n - 1 - r : tail++;
    }
  } else {
    std::vector<int> tail_cols;
    for (int c : cols)
      if (c >= n - 1) tail_cols.push_back(c);
    std::reverse(tail_cols.begin(), tail_cols.end());
    size_t next_tail = 0;
    for (size_t k = 0; k < rows.size(); ++k) {
      int r = rows[k];
      proof[k] = r < n - 1 ? r : tail_cols[next_tail++];
    }
  }
  if (search.valid(proof)) return proof;

  std::mt19937_64 rng(0x736a99d1c4e2fb03ull);
  for (int attempt = 0; attempt < 10000; ++attempt) {
    for (size_t k = assign.size(); k > 1; --k)
      std::swap(assign[k - 1], assign[rng() % k]);
    if (search.valid(assign)) return assign;
  }
  throw std::runtime_error("sv_extremal_nd: infeasible completion");
}

}  // namespace

BlockUnitary siso_phase_match(cxd h_d, const Mat& h_b, const Mat& h_f, int group_size) {
  if (h_b.rows() != 1)
    throw std::invalid_argument("siso_phase_match: backward channel must be a single row");
  if (h_f.cols() != 1)
    throw std::invalid_argument("siso_phase_match: forward channel must be a single column");
  require_surface_pair(h_b, h_f, "siso_phase_match");
  int n_s = static_cast<int>(h_b.cols());
  BlockUnitary theta = BlockUnitary::identity(n_s, group_size);
  cxd phase = std::abs(h_d) > 0 ? h_d / std::abs(h_d) : cxd(1, 0);
  int L = group_size;
  for (int g = 0; g < n_s / L; ++g) {
    Mat b = h_b.row(0).segment(g * L, L).adjoint();
    Mat f = h_f.col(0).segment(g * L, L);
    double nb = b.norm(), nf = f.norm();
    if (nb == 0 || nf == 0) {
      theta.blocks[g] = phase * Mat::Identity(L, L);
      continue;
    }
    Mat x = basis_completion(b / nb, L);
    x.col(0) = b / nb;
    Mat y = basis_completion(f / nf, L);
    y.col(0) = f / nf;
    theta.blocks[g] = phase * x * y.adjoint();
  }
  return theta;
}

BlockUnitary dof_extremal(const Mat& h_b, const Mat& h_f, bool maximize) {
  require_surface_pair(h_b, h_f, "dof_extremal");
  int n_s = static_cast<int>(h_b.cols());
  Eigen::JacobiSVD<Mat> svd_b(h_b, Eigen::ComputeFullV);
  Eigen::JacobiSVD<Mat> svd_f(h_f, Eigen::ComputeFullU);
  int r_b = numerical_rank(svd_b.singularValues());
  int r_f = numerical_rank(svd_f.singularValues());
  Mat v_b = svd_b.matrixV();
  // The trailing columns of q_f span the forward column space. Completing the
  // backward kernel first parks the row space there (rank min(r_b, r_f));
  // completing the row space first parks the kernel there instead, leaving
  // only the overlap forced by dimension counting.
  Mat q_b = maximize ? basis_completion(v_b.rightCols(n_s - r_b), n_s)
                     : basis_completion(v_b.leftCols(r_b), n_s);
  Mat q_f = basis_completion(svd_f.matrixU().rightCols(n_s - r_f), n_s);
  return BlockUnitary::from_full(q_b * q_f.adjoint(), n_s);
}

std::pair<int, int> sv_pivot_nd(const RealVec& sigma_b, const RealVec& sigma_f, int n,
                                bool maximize) {
  int n_s = static_cast<int>(sigma_b.size());
  if (sigma_f.size() != n_s)
    throw std::invalid_argument("sv_pivot_nd: spectra must have equal length");
  if (n < 1 || n > n_s) throw std::invalid_argument("sv_pivot_nd: index out of range");
  int best_i = -1;
  double best = 0;
  if (maximize) {
    for (int i = 1; i <= n; ++i) {
      double v = sigma_b[i - 1] * sigma_f[n - i];
      if (best_i < 0 || v < best) {
        best_i = i;
        best = v;
      }
    }
  } else {
    for (int i = n; i <= n_s; ++i) {
      double v = sigma_b[i - 1] * sigma_f[n + n_s - i - 1];
      if (best_i < 0 || v > best) {
        best_i = i;
        best = v;
      }
    }
  }
  int best_j = maximize ? n + 1 - best_i : n + n_s - best_i;
  return {best_i, best_j};
}

BlockUnitary sv_extremal_nd(const Mat& h_b, const Mat& h_f, int n, bool maximize) {
  require_surface_pair(h_b, h_f, "sv_extremal_nd");
  int n_s = static_cast<int>(h_b.cols());
  if (n < 1 || n > n_s) throw std::invalid_argument("sv_extremal_nd: index out of range");
  Eigen::JacobiSVD<Mat> svd_b(h_b, Eigen::ComputeFullV);
  Eigen::JacobiSVD<Mat> svd_f(h_f, Eigen::ComputeFullU);
  RealVec sb = padded_sv(h_b, n_s), sf = padded_sv(h_f, n_s);
  auto [pi, pj] = sv_pivot_nd(sb, sf, n, maximize);
  int i0 = pi - 1, j0 = pj - 1;
  std::vector<int> assign = find_completion(sb, sf, i0, j0, n, maximize);
  Mat perm = Mat::Zero(n_s, n_s);
  perm(i0, j0) = 1;
  int k = 0;
  for (int r = 0; r < n_s; ++r) {
    if (r == i0) continue;
    perm(r, assign[k++]) = 1;
  }
  return BlockUnitary::from_full(svd_b.matrixV() * perm * svd_f.matrixU().adjoint(), n_s);
}

BlockUnitary power_extremal_nd(const Mat& h_b, const Mat& h_f, bool maximize) {
  require_surface_pair(h_b, h_f, "power_extremal_nd");
  int n_s = static_cast<int>(h_b.cols());
  Eigen::JacobiSVD<Mat> svd_b(h_b, Eigen::ComputeFullV);
  Eigen::JacobiSVD<Mat> svd_f(h_f, Eigen::ComputeFullU);
  Mat theta;
  if (maximize) {
    theta = svd_b.matrixV() * svd_f.matrixU().adjoint();
  } else {
    Mat flip = Mat::Zero(n_s, n_s);
    for (int i = 0; i < n_s; ++i) flip(i, n_s - 1 - i) = 1;
    theta = svd_b.matrixV() * flip * svd_f.matrixU().adjoint();
  }
  return BlockUnitary::from_full(theta, n_s);
}

BlockUnitary rate_optimal_nd(const Mat& h_b, const Mat& h_f) {
  return power_extremal_nd(h_b, h_f, true);
}

ProcrustesResult procrustes_approx(const Mat& h_d, const Mat& h_b, const Mat& h_f,
                                   ProcrustesSide side) {
  require_surface_pair(h_b, h_f, "procrustes_approx");
  if (h_b.rows() != h_d.rows() || h_f.cols() != h_d.cols())
    throw std::invalid_argument("procrustes_approx: direct path dimensions do not match");
  int n_s = static_cast<int>(h_b.cols());
  if (h_d.cwiseAbs().maxCoeff() == 0) return {power_extremal_nd(h_b, h_f, true), false};

  const Mat& inverted = side == ProcrustesSide::left ? h_b : h_f;
  RealVec s = singular_values(inverted);
  double smin = s[s.size() - 1];
  bool flagged = !(smin > 0) || s[0] / smin > 1e12;

  Mat m = side == ProcrustesSide::left ? Mat(pseudo_inverse(h_b) * h_d * h_f.adjoint())
                                       : Mat(h_b.adjoint() * h_d * pseudo_inverse(h_f));
  Eigen::JacobiSVD<Mat> svd(m, Eigen::ComputeFullU | Eigen::ComputeFullV);
  Mat theta = svd.matrixU() * svd.matrixV().adjoint();
  return {BlockUnitary::from_full(theta, n_s), flagged};
}

Mat symmetrize_takagi(const Mat& m) { return nearest_symmetric_unitary(m); }

}  // namespace ris
