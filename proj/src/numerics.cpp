#include "ris/numerics.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>
#include <vector>

namespace ris {

namespace {

const cxd J(0, 1);

void require_square(const Mat& m, const char* who) {
  if (m.rows() != m.cols())
    throw std::invalid_argument(std::string(who) + ": square matrix required");
}

}  // namespace

RealVec singular_values(const Mat& m) {
  if (m.rows() == 0 || m.cols() == 0) return RealVec::Zero(std::min(m.rows(), m.cols()));
  return Eigen::JacobiSVD<Mat>(m).singularValues();
}

int numerical_rank(const RealVec& sv) {
  if (sv.size() == 0) return 0;
  double cut = rank_tol * sv[0];
  int r = 0;
  for (int i = 0; i < sv.size(); ++i)
    if (sv[i] > cut) ++r;
  return r;
}

int numerical_rank(const Mat& m) { return numerical_rank(singular_values(m)); }

Mat expm_skew(const Mat& a, double mu) {
  require_square(a, "expm_skew");
  double scale = std::max(1.0, a.cwiseAbs().maxCoeff());
  if ((a + a.adjoint()).cwiseAbs().maxCoeff() > 1e-12 * scale)
    throw std::invalid_argument("expm_skew: skew-Hermitian matrix required");
  // jA is Hermitian, so A = V diag(-j d) V^H with real d
  Eigen::SelfAdjointEigenSolver<Mat> es(J * a);
  const Mat& v = es.eigenvectors();
  const RealVec& d = es.eigenvalues();
  Vec ph(d.size());
  for (int i = 0; i < d.size(); ++i) ph[i] = std::exp(cxd(0.0, -mu * d[i]));
  return v * ph.asDiagonal() * v.adjoint();
}

Mat nearest_unitary(const Mat& m) {
  require_square(m, "nearest_unitary");
  if (m.rows() == 0) return m;
  Eigen::JacobiSVD<Mat> svd(m, Eigen::ComputeFullU | Eigen::ComputeFullV);
  const RealVec& s = svd.singularValues();
  if (s[0] <= 0.0 || s[s.size() - 1] <= rank_tol * s[0])
    throw std::invalid_argument("nearest_unitary: input is numerically rank deficient");
  return svd.matrixU() * svd.matrixV().adjoint();
}

Mat pseudo_inverse(const Mat& m) {
  if (m.rows() == 0 || m.cols() == 0) return Mat::Zero(m.cols(), m.rows());
  Eigen::JacobiSVD<Mat> svd(m, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const RealVec& s = svd.singularValues();
  double cut = rank_tol * s[0];
  Vec inv = Vec::Zero(s.size());
  for (int i = 0; i < s.size(); ++i)
    if (s[i] > cut) inv[i] = cxd(1.0 / s[i], 0.0);
  return svd.matrixV() * inv.asDiagonal() * svd.matrixU().adjoint();
}

namespace {

// Structure map of the antilinear operator z -> S conj(z) on stacked (x; y):
// multiplication by j becomes (x; y) -> (-y; x).
RealVec apply_j(const RealVec& w) {
  const int n = static_cast<int>(w.size()) / 2;
  RealVec out(2 * n);
  out.head(n) = -w.tail(n);
  out.tail(n) = w.head(n);
  return out;
}

struct TakagiAttempt {
  Mat q;
  RealVec sigma;
  double defect = std::numeric_limits<double>::infinity();
};

// One factorization attempt at zero-threshold tau. Eigenvalues of the real
// structure matrix come in +/- sigma pairs; vectors with eigenvalue above tau
// map straight to columns of Q, and the near-zero class is filled by pairing
// each picked vector v with its mate Jv so the complex columns stay
// orthonormal even when +sigma and -sigma spaces mix numerically.
TakagiAttempt takagi_attempt(const Mat& s, const Eigen::SelfAdjointEigenSolver<RealMat>& es,
                             double tau) {
  const int n = static_cast<int>(s.rows());
  const RealVec& lam = es.eigenvalues();
  const RealMat& w = es.eigenvectors();

  TakagiAttempt out;
  std::vector<int> pos, zero;
  for (int i = 0; i < 2 * n; ++i) {
    if (std::abs(lam[i]) <= tau)
      zero.push_back(i);
    else if (lam[i] > 0)
      pos.push_back(i);
  }
  if (zero.size() % 2 != 0) return out;
  if (static_cast<int>(pos.size() + zero.size() / 2) != n) return out;

  Mat q(n, n);
  RealVec sigma(n);
  int col = 0;
  for (auto it = pos.rbegin(); it != pos.rend(); ++it, ++col) {
    sigma[col] = lam[*it];
    q.col(col).real() = w.col(*it).head(n);
    q.col(col).imag() = w.col(*it).tail(n);
  }

  std::vector<RealVec> picked;
  const int want = static_cast<int>(zero.size()) / 2;
  for (int i = 0; i < static_cast<int>(zero.size()) && static_cast<int>(picked.size()) < 2 * want;
       ++i) {
    RealVec v = w.col(zero[i]);
    for (const RealVec& p : picked) v -= p * p.dot(v);
    double nrm = v.norm();
    if (nrm < 0.3) continue;
    v /= nrm;
    picked.push_back(v);
    picked.push_back(apply_j(v));
    sigma[col] = 0.0;
    q.col(col).real() = v.head(n);
    q.col(col).imag() = v.tail(n);
    ++col;
  }
  if (col != n) return out;

  out.q = std::move(q);
  out.sigma = std::move(sigma);
  double scale = std::max(1.0, s.cwiseAbs().maxCoeff());
  double ortho = (out.q.adjoint() * out.q - Mat::Identity(n, n)).cwiseAbs().maxCoeff();
  Mat rec = out.q * out.sigma.cast<cxd>().asDiagonal() * out.q.transpose();
  out.defect = std::max(ortho, (rec - s).cwiseAbs().maxCoeff() / scale);
  return out;
}

}  // namespace

TakagiResult takagi(const Mat& s) {
  require_square(s, "takagi");
  const int n = static_cast<int>(s.rows());
  double scale = std::max(1.0, s.cwiseAbs().maxCoeff());
  if ((s - s.transpose()).cwiseAbs().maxCoeff() > 1e-12 * scale)
    throw std::invalid_argument("takagi: symmetric matrix required");
  if (n == 0) return {Mat(0, 0), RealVec(0)};

  Mat sym = 0.5 * (s + s.transpose());
  RealMat re = sym.real();
  RealMat im = sym.imag();
  RealMat t(2 * n, 2 * n);
  t.topLeftCorner(n, n) = re;
  t.topRightCorner(n, n) = im;
  t.bottomLeftCorner(n, n) = im;
  t.bottomRightCorner(n, n) = -re;

  Eigen::SelfAdjointEigenSolver<RealMat> es(t);
  double lmax = es.eigenvalues().cwiseAbs().maxCoeff();

  TakagiAttempt best;
  for (double rel : {1e-12, 1e-10, 1e-8, 1e-6}) {
    TakagiAttempt a = takagi_attempt(sym, es, rel * lmax);
    if (a.defect < best.defect) best = std::move(a);
    if (best.defect < 1e-10) break;
  }
  if (!std::isfinite(best.defect)) throw std::runtime_error("takagi: factorization failed");
  return {best.q, best.sigma};
}

Mat nearest_symmetric_unitary(const Mat& m) {
  require_square(m, "nearest_symmetric_unitary");
  TakagiResult tk = takagi(0.5 * (m + m.transpose()));
  return tk.q * tk.q.transpose();
}

PowerAllocation waterfill(const RealVec& gains, double budget, double noise) {
  if (budget <= 0) throw std::invalid_argument("waterfill: budget must be positive");
  if (noise <= 0) throw std::invalid_argument("waterfill: noise must be positive");
  const int n = static_cast<int>(gains.size());
  for (int i = 0; i < n; ++i)
    if (gains[i] < 0) throw std::invalid_argument("waterfill: gains must be nonnegative");

  std::vector<int> idx(n);
  std::iota(idx.begin(), idx.end(), 0);
  std::stable_sort(idx.begin(), idx.end(), [&](int a, int b) { return gains[a] > gains[b]; });
  int pos = 0;
  while (pos < n && gains[idx[pos]] > 0) ++pos;
  if (pos == 0) throw std::invalid_argument("waterfill: at least one positive gain required");

  // largest active set whose common water level clears every active inverse gain
  double acc = 0, mu = 0;
  int k = 0;
  for (int m = 1; m <= pos; ++m) {
    double inv = noise / gains[idx[m - 1]];
    acc += inv;
    double cand = (budget + acc) / m;
    if (cand > inv) {
      k = m;
      mu = cand;
    } else {
      break;
    }
  }

  PowerAllocation out;
  out.levels = RealVec::Zero(n);
  out.water_level = mu;
  for (int m = 0; m < k; ++m) out.levels[idx[m]] = mu - noise / gains[idx[m]];
  return out;
}

Mat unitary_completion(const Mat& x, int n) {
  if (x.rows() != n)
    throw std::invalid_argument("unitary_completion: row count must match target dimension");
  if (x.cols() > n) throw std::invalid_argument("unitary_completion: too many columns");
  if (x.cols() == 0) return Mat::Identity(n, n);
  Eigen::HouseholderQR<Mat> qr(x);
  RealVec rdiag = qr.matrixQR().diagonal().head(x.cols()).cwiseAbs();
  if (rdiag.maxCoeff() <= 0 || rdiag.minCoeff() <= rank_tol * rdiag.maxCoeff())
    throw std::invalid_argument("unitary_completion: columns are numerically dependent");
  return qr.householderQ() * Mat::Identity(n, n);
}

}  // namespace ris
