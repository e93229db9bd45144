#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <string>

#include "repsim/error.hpp"

namespace repsim {

struct SvdResult {
  Eigen::MatrixXd U;   // n x k
  Eigen::VectorXd s;   // k, descending
  Eigen::MatrixXd Vt;  // k x m
};

/// Flips singular-vector pairs so the largest-magnitude entry of each left
/// vector is positive. Makes the output independent of solver sign choices.
inline void canonicalize_signs(Eigen::MatrixXd& U, Eigen::MatrixXd& V) {
  for (Eigen::Index j = 0; j < U.cols(); ++j) {
    Eigen::Index arg = 0;
    U.col(j).cwiseAbs().maxCoeff(&arg);
    if (U(arg, j) < 0) {
      U.col(j) = -U.col(j);
      V.col(j) = -V.col(j);
    }
  }
}

/// Best rank-k factorization A ~ U diag(s) Vt (dense divide-and-conquer SVD).
inline SvdResult truncated_svd(const Eigen::MatrixXd& A, Eigen::Index k) {
  const Eigen::Index lim = std::min(A.rows(), A.cols());
  if (k < 1 || k > lim)
    throw Error(Errc::out_of_range, "truncated_svd: k=" + std::to_string(k) + " outside [1, " + std::to_string(lim) + "]");
  if (!A.allFinite()) throw Error(Errc::non_finite, "truncated_svd input");
  Eigen::BDCSVD<Eigen::MatrixXd> svd(A, Eigen::ComputeThinU | Eigen::ComputeThinV);
  if (svd.info() != Eigen::Success) throw Error(Errc::convergence_failure, "SVD did not converge");
  Eigen::MatrixXd U = svd.matrixU().leftCols(k);
  Eigen::MatrixXd V = svd.matrixV().leftCols(k);
  canonicalize_signs(U, V);
  return {std::move(U), svd.singularValues().head(k), V.transpose()};
}

/// Numerical rank: singular values above max(n, m) * eps * s_max.
inline Eigen::Index numerical_rank(const Eigen::MatrixXd& A) {
  if (A.size() == 0) return 0;
  Eigen::BDCSVD<Eigen::MatrixXd> svd(A);
  const auto& s = svd.singularValues();
  if (s.size() == 0 || s(0) == 0.0) return 0;
  const double tol = static_cast<double>(std::max(A.rows(), A.cols())) * Eigen::NumTraits<double>::epsilon() * s(0);
  return (s.array() > tol).count();
}

/// Torgerson scaling: B = -1/2 J D^2 J, coordinates are the leading
/// eigenvectors scaled by sqrt(eigenvalue); negative eigenvalues clamp to 0.
inline Eigen::MatrixXd classical_mds(const Eigen::MatrixXd& D, Eigen::Index dims) {
  const Eigen::Index n = D.rows();
  if (D.cols() != n) throw Error(Errc::dimension_mismatch, "classical_mds needs a square matrix");
  if (dims < 1 || dims > n) throw Error(Errc::out_of_range, "classical_mds: dims must be in [1, n]");
  if (!D.allFinite()) throw Error(Errc::non_finite, "classical_mds input");
  const double scale = std::max(1.0, D.cwiseAbs().maxCoeff());
  for (Eigen::Index i = 0; i < n; ++i) {
    if (std::abs(D(i, i)) > 1e-12 * scale) throw Error(Errc::invalid_argument, "dissimilarity diagonal must be zero");
    for (Eigen::Index j = 0; j < n; ++j) {
      if (D(i, j) < 0) throw Error(Errc::invalid_argument, "dissimilarities must be nonnegative");
      if (std::abs(D(i, j) - D(j, i)) > 1e-12 * scale) throw Error(Errc::invalid_argument, "dissimilarities must be symmetric");
    }
  }
  const Eigen::MatrixXd sq = D.array().square().matrix();
  const Eigen::VectorXd row_mean = sq.rowwise().mean();
  const Eigen::VectorXd col_mean = sq.colwise().mean().transpose();
  const double grand = sq.mean();
  Eigen::MatrixXd B(n, n);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < n; ++j) B(i, j) = -0.5 * (sq(i, j) - row_mean(i) - col_mean(j) + grand);
  B = 0.5 * (B + B.transpose());

  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(B);
  if (eig.info() != Eigen::Success) throw Error(Errc::convergence_failure, "MDS eigendecomposition failed");
  // Eigen returns ascending eigenvalues.
  Eigen::MatrixXd coords(n, dims);
  Eigen::MatrixXd vecs(n, dims);
  for (Eigen::Index c = 0; c < dims; ++c) vecs.col(c) = eig.eigenvectors().col(n - 1 - c);
  Eigen::MatrixXd dummy = vecs;
  canonicalize_signs(vecs, dummy);
  for (Eigen::Index c = 0; c < dims; ++c) {
    const double lambda = std::max(0.0, eig.eigenvalues()(n - 1 - c));
    coords.col(c) = vecs.col(c) * std::sqrt(lambda);
  }
  coords.rowwise() -= coords.colwise().mean();
  return coords;
}

}  // namespace repsim
