#pragma once

#include "ris/types.hpp"

namespace ris {

// Sorted singular values (descending, all nonnegative).
RealVec singular_values(const Mat& m);

// Numerical rank at the global tolerance rank_tol * sigma_max.
int numerical_rank(const RealVec& sv);
int numerical_rank(const Mat& m);

// exp(mu * A) for skew-Hermitian A via the eigendecomposition of the
// Hermitian matrix jA; the result is unitary by construction.
// Throws std::invalid_argument if A is not square or not skew-Hermitian.
Mat expm_skew(const Mat& a, double mu);

// Polar factor U V^H, the unique nearest unitary in Frobenius norm.
// Throws std::invalid_argument for non-square or numerically rank-deficient
// input (the projection is not unique there).
Mat nearest_unitary(const Mat& m);

struct TakagiResult {
  Mat q;          // unitary
  RealVec sigma;  // descending, nonnegative
};

// Symmetric factorization S = Q diag(sigma) Q^T of a complex symmetric S.
// Throws std::invalid_argument if S is not square-symmetric.
TakagiResult takagi(const Mat& s);

// Maximizer of Re tr(T^H M) over symmetric unitary T: built from the symmetric
// factorization of the symmetric part of M. Falls back gracefully for any M.
Mat nearest_symmetric_unitary(const Mat& m);

// Water-filling over per-mode power gains: maximize sum_n log(1 + s_n g_n / noise)
// subject to sum s_n <= budget, s_n >= 0. Closed form via the sorted active-set
// scan. Zero-gain modes get exactly zero power.
// Throws std::invalid_argument if budget <= 0, noise <= 0, any gain < 0, or
// all gains are zero.
PowerAllocation waterfill(const RealVec& gains, double budget, double noise);

// Moore-Penrose pseudo-inverse via SVD truncation at the global tolerance.
Mat pseudo_inverse(const Mat& m);

// Unitary n x n matrix whose leading x.cols() columns span ran(x) (columns of
// x must be independent); remaining columns complete the basis. x with zero
// columns yields the identity.
Mat unitary_completion(const Mat& x, int n);

}  // namespace ris
