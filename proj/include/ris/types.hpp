#pragma once

#include <Eigen/Dense>
#include <complex>
#include <stdexcept>
#include <vector>

namespace ris {

using cxd = std::complex<double>;
using Mat = Eigen::MatrixXcd;
using Vec = Eigen::VectorXcd;
using RealVec = Eigen::VectorXd;
using RealMat = Eigen::MatrixXd;

// Singular values below rank_tol * sigma_max count as zero wherever a rank
// decision is made.
inline constexpr double rank_tol = 1e-12;

struct PowerAllocation {
  RealVec levels;      // per-mode powers, inactive modes exactly zero
  double water_level;  // common level mu shared by all active modes
};

// Block-diagonal unitary surface response: G unitary blocks of size L.
// L = 1 is a phase-only (diagonal) surface, L = dim() a fully connected one.
struct BlockUnitary {
  int group_size = 1;
  std::vector<Mat> blocks;

  int groups() const { return static_cast<int>(blocks.size()); }
  int dim() const { return group_size * groups(); }

  Mat full() const {
    Mat t = Mat::Zero(dim(), dim());
    for (int g = 0; g < groups(); ++g)
      t.block(g * group_size, g * group_size, group_size, group_size) = blocks[g];
    return t;
  }

  double unitarity_defect() const {
    double d = 0;
    for (const Mat& b : blocks) {
      Mat e = b.adjoint() * b - Mat::Identity(group_size, group_size);
      d = std::max(d, e.cwiseAbs().maxCoeff());
    }
    return d;
  }

  static BlockUnitary identity(int n, int group_size) {
    if (group_size < 1 || n % group_size != 0)
      throw std::invalid_argument("group size must divide surface dimension");
    BlockUnitary t;
    t.group_size = group_size;
    t.blocks.assign(n / group_size, Mat::Identity(group_size, group_size));
    return t;
  }

  // Extract the diagonal blocks of a full matrix. Off-block content is
  // discarded, so this is exact only when the input is block diagonal.
  static BlockUnitary from_full(const Mat& t, int group_size) {
    if (t.rows() != t.cols()) throw std::invalid_argument("square matrix required");
    if (group_size < 1 || t.rows() % group_size != 0)
      throw std::invalid_argument("group size must divide surface dimension");
    BlockUnitary b;
    b.group_size = group_size;
    for (int g = 0; g < t.rows() / group_size; ++g)
      b.blocks.push_back(t.block(g * group_size, g * group_size, group_size, group_size));
    return b;
  }
};

}  // namespace ris
