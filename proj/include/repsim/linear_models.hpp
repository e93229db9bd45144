#pragma once

// L2-regularized linear probes: ridge regression and binary / multinomial
// logistic regression. Intercepts are never penalized.

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include "repsim/error.hpp"

namespace repsim {

enum class ModelKind { ridge, logistic_binary, logistic_multinomial };

struct LinearModel {
  ModelKind kind = ModelKind::ridge;
  Eigen::MatrixXd weights;    // d x 1 (ridge, binary) or d x K (multinomial)
  Eigen::VectorXd intercept;  // 1 or K entries
  double penalty = 0;         // alpha for ridge, C for logistic
  std::vector<int> classes;   // logistic: label of each probability column
  bool converged = true;
  int iterations = 0;
  double gradient_max_norm = 0;

  Eigen::VectorXd predict(const Eigen::MatrixXd& X) const {
    if (kind != ModelKind::ridge) throw Error(Errc::invalid_argument, "predict() on a classifier");
    return (X * weights.col(0)).array() + intercept(0);
  }

  /// n x classes.size() probabilities.
  Eigen::MatrixXd predict_proba(const Eigen::MatrixXd& X) const;
};

namespace detail {

inline void require_finite(const Eigen::MatrixXd& X, const char* what) {
  if (!X.allFinite()) throw Error(Errc::non_finite, what);
}

inline Eigen::MatrixXd softmax_rows(const Eigen::MatrixXd& Z) {
  Eigen::MatrixXd P(Z.rows(), Z.cols());
  for (Eigen::Index i = 0; i < Z.rows(); ++i) {
    const double m = Z.row(i).maxCoeff();
    P.row(i) = (Z.row(i).array() - m).exp();
    P.row(i) /= P.row(i).sum();
  }
  return P;
}

inline double sigmoid(double z) {
  if (z >= 0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

/// log(1 + exp(z)) without overflow.
inline double softplus(double z) { return z > 0 ? z + std::log1p(std::exp(-z)) : std::log1p(std::exp(z)); }

}  // namespace detail

inline Eigen::MatrixXd LinearModel::predict_proba(const Eigen::MatrixXd& X) const {
  if (kind == ModelKind::ridge) throw Error(Errc::invalid_argument, "predict_proba() on a regressor");
  if (kind == ModelKind::logistic_binary) {
    Eigen::MatrixXd P(X.rows(), 2);
    const Eigen::VectorXd z = (X * weights.col(0)).array() + intercept(0);
    for (Eigen::Index i = 0; i < X.rows(); ++i) {
      const double p = detail::sigmoid(z(i));
      P(i, 0) = 1.0 - p;
      P(i, 1) = p;
    }
    return P;
  }
  Eigen::MatrixXd Z = X * weights;
  Z.rowwise() += intercept.transpose();
  return detail::softmax_rows(Z);
}

/// Ridge solutions for many penalties from one SVD of the centered design.
/// Weights are V diag(s / (s^2 + alpha)) U^T y_c; singular values below
/// max(n, d) * eps * s_max are treated as zero, which yields the minimum-norm
/// least-squares solution at alpha = 0.
class RidgePath {
 public:
  RidgePath(const Eigen::MatrixXd& X, const Eigen::VectorXd& y) {
    if (X.rows() != y.size()) throw Error(Errc::dimension_mismatch, "ridge: X rows differ from y length");
    if (X.rows() < 2) throw Error(Errc::degenerate_input, "ridge needs n >= 2");
    detail::require_finite(X, "ridge X");
    detail::require_finite(y, "ridge y");
    x_mean_ = X.colwise().mean().transpose();
    y_mean_ = y.mean();
    const Eigen::MatrixXd Xc = X.rowwise() - x_mean_.transpose();
    const Eigen::VectorXd yc = y.array() - y_mean_;
    Eigen::BDCSVD<Eigen::MatrixXd> svd(Xc, Eigen::ComputeThinU | Eigen::ComputeThinV);
    if (svd.info() != Eigen::Success) throw Error(Errc::convergence_failure, "ridge SVD");
    s_ = svd.singularValues();
    V_ = svd.matrixV();
    uty_ = svd.matrixU().transpose() * yc;
    const double smax = s_.size() ? s_(0) : 0.0;
    tol_ = static_cast<double>(std::max(X.rows(), X.cols())) * std::numeric_limits<double>::epsilon() * smax;
  }

  LinearModel fit(double alpha) const {
    if (!(alpha >= 0) || !std::isfinite(alpha)) throw Error(Errc::invalid_argument, "ridge alpha must be >= 0");
    Eigen::VectorXd coef(s_.size());
    for (Eigen::Index i = 0; i < s_.size(); ++i)
      coef(i) = s_(i) > tol_ ? s_(i) / (s_(i) * s_(i) + alpha) * uty_(i) : 0.0;
    LinearModel m;
    m.kind = ModelKind::ridge;
    m.weights = V_ * coef;
    m.intercept = Eigen::VectorXd::Constant(1, y_mean_ - x_mean_.dot(m.weights.col(0)));
    m.penalty = alpha;
    return m;
  }

 private:
  Eigen::VectorXd x_mean_;
  double y_mean_ = 0;
  Eigen::VectorXd s_;
  Eigen::MatrixXd V_;
  Eigen::VectorXd uty_;
  double tol_ = 0;
};

/// Ridge on centered data. Cholesky of Xc^T Xc + alpha I when alpha > 0 and
/// d <= n; otherwise the SVD path (min-norm at alpha = 0).
inline LinearModel ridge_fit(const Eigen::MatrixXd& X, const Eigen::VectorXd& y, double alpha) {
  if (!(alpha >= 0) || !std::isfinite(alpha)) throw Error(Errc::invalid_argument, "ridge alpha must be >= 0");
  if (X.rows() != y.size()) throw Error(Errc::dimension_mismatch, "ridge: X rows differ from y length");
  if (X.rows() < 2) throw Error(Errc::degenerate_input, "ridge needs n >= 2");
  detail::require_finite(X, "ridge X");
  detail::require_finite(y, "ridge y");
  if (alpha > 0 && X.cols() <= X.rows()) {
    const Eigen::VectorXd x_mean = X.colwise().mean().transpose();
    const double y_mean = y.mean();
    const Eigen::MatrixXd Xc = X.rowwise() - x_mean.transpose();
    Eigen::MatrixXd gram = Xc.transpose() * Xc;
    gram.diagonal().array() += alpha;
    Eigen::LLT<Eigen::MatrixXd> llt(gram);
    if (llt.info() == Eigen::Success) {
      LinearModel m;
      m.kind = ModelKind::ridge;
      m.weights = llt.solve(Xc.transpose() * (y.array() - y_mean).matrix());
      m.intercept = Eigen::VectorXd::Constant(1, y_mean - x_mean.dot(m.weights.col(0)));
      m.penalty = alpha;
      return m;
    }
  }
  return RidgePath(X, y).fit(alpha);
}

struct LogisticOptions {
  double gradient_tol = 1e-6;
  int max_iterations = 1000;
};

namespace detail {

/// Objective, gradient and Hessian of the penalized negative log-likelihood.
/// Parameters are laid out per class as [w_k (d entries), b_k].
struct LogisticProblem {
  const Eigen::MatrixXd& X;
  std::vector<int> y;  // compact labels 0..K-1
  int K;               // number of classes (2 means the single-logit binary form)
  double inv_C;

  Eigen::Index d() const { return X.cols(); }
  int blocks() const { return K == 2 ? 1 : K; }
  Eigen::Index size() const { return blocks() * (d() + 1); }

  Eigen::MatrixXd logits(const Eigen::VectorXd& theta) const {
    const Eigen::Index p = d() + 1;
    Eigen::MatrixXd Z(X.rows(), blocks());
    for (int k = 0; k < blocks(); ++k) Z.col(k) = (X * theta.segment(k * p, d())).array() + theta(k * p + d());
    return Z;
  }

  double value(const Eigen::VectorXd& theta) const {
    const Eigen::MatrixXd Z = logits(theta);
    double f = 0;
    if (K == 2) {
      for (Eigen::Index i = 0; i < X.rows(); ++i) f += softplus(Z(i, 0)) - (y[i] == 1 ? Z(i, 0) : 0.0);
    } else {
      for (Eigen::Index i = 0; i < X.rows(); ++i) {
        const double m = Z.row(i).maxCoeff();
        f += m + std::log((Z.row(i).array() - m).exp().sum()) - Z(i, y[i]);
      }
    }
    const Eigen::Index p = d() + 1;
    for (int k = 0; k < blocks(); ++k) f += 0.5 * inv_C * theta.segment(k * p, d()).squaredNorm();
    return f;
  }

  /// Residual matrix (probabilities minus indicators), n x blocks().
  Eigen::MatrixXd residual(const Eigen::VectorXd& theta, Eigen::MatrixXd& P) const {
    const Eigen::MatrixXd Z = logits(theta);
    if (K == 2) {
      P.resize(X.rows(), 1);
      for (Eigen::Index i = 0; i < X.rows(); ++i) P(i, 0) = sigmoid(Z(i, 0));
      Eigen::MatrixXd R = P;
      for (Eigen::Index i = 0; i < X.rows(); ++i) R(i, 0) -= (y[i] == 1 ? 1.0 : 0.0);
      return R;
    }
    P = softmax_rows(Z);
    Eigen::MatrixXd R = P;
    for (Eigen::Index i = 0; i < X.rows(); ++i) R(i, y[i]) -= 1.0;
    return R;
  }

  Eigen::VectorXd gradient(const Eigen::VectorXd& theta, const Eigen::MatrixXd& R) const {
    const Eigen::Index p = d() + 1;
    Eigen::VectorXd g(size());
    for (int k = 0; k < blocks(); ++k) {
      g.segment(k * p, d()) = X.transpose() * R.col(k) + inv_C * theta.segment(k * p, d());
      g(k * p + d()) = R.col(k).sum();
    }
    return g;
  }

  Eigen::MatrixXd hessian(const Eigen::MatrixXd& P) const {
    const Eigen::Index n = X.rows(), p = d() + 1;
    Eigen::MatrixXd Xa(n, p);
    Xa.leftCols(d()) = X;
    Xa.col(d()).setOnes();
    Eigen::MatrixXd H = Eigen::MatrixXd::Zero(size(), size());
    for (int k = 0; k < blocks(); ++k) {
      for (int l = k; l < blocks(); ++l) {
        Eigen::VectorXd w(n);
        if (K == 2) {
          w = P.col(0).array() * (1.0 - P.col(0).array());
        } else {
          w = P.col(k).array() * ((k == l ? 1.0 : 0.0) - P.col(l).array());
        }
        const Eigen::MatrixXd block = Xa.transpose() * (Xa.array().colwise() * w.array()).matrix();
        H.block(k * p, l * p, p, p) = block;
        if (l != k) H.block(l * p, k * p, p, p) = block.transpose();
      }
      H.block(k * p, k * p, d(), d()).diagonal().array() += inv_C;
    }
    return H;
  }
};

}  // namespace detail

/// Maximizes sum log-likelihood - ||W||^2 / (2C) by damped Newton iterations
/// with Armijo backtracking. Two classes use the single-logit sigmoid form;
/// more classes use the full softmax. Stops when the gradient max-norm drops
/// to `gradient_tol`; hitting the iteration cap sets converged = false.
inline LinearModel logistic_fit(const Eigen::MatrixXd& X, std::span<const int> labels, double C,
                                const LogisticOptions& opt = {}, const LinearModel* warm_start = nullptr) {
  if (!(C > 0) || !std::isfinite(C)) throw Error(Errc::invalid_argument, "logistic C must be positive");
  if (static_cast<Eigen::Index>(labels.size()) != X.rows())
    throw Error(Errc::dimension_mismatch, "logistic: X rows differ from label count");
  detail::require_finite(X, "logistic X");
  std::vector<int> classes(labels.begin(), labels.end());
  std::sort(classes.begin(), classes.end());
  classes.erase(std::unique(classes.begin(), classes.end()), classes.end());
  if (classes.size() < 2) throw Error(Errc::degenerate_target, "logistic fit needs at least two classes");
  if (X.rows() < static_cast<Eigen::Index>(classes.size()))
    throw Error(Errc::degenerate_input, "logistic fit needs at least one sample per class");

  std::vector<int> y(labels.size());
  for (std::size_t i = 0; i < labels.size(); ++i)
    y[i] = static_cast<int>(std::lower_bound(classes.begin(), classes.end(), labels[i]) - classes.begin());
  const int K = static_cast<int>(classes.size());
  detail::LogisticProblem prob{X, y, K, 1.0 / C};
  const Eigen::Index d = X.cols(), p = d + 1;

  Eigen::VectorXd theta = Eigen::VectorXd::Zero(prob.size());
  if (warm_start && warm_start->classes == classes && warm_start->weights.rows() == d) {
    for (int k = 0; k < prob.blocks(); ++k) {
      theta.segment(k * p, d) = warm_start->weights.col(k);
      theta(k * p + d) = warm_start->intercept(k);
    }
  } else {
    // Start from the intercept-only optimum (log class frequencies).
    std::vector<double> freq(K, 0.0);
    for (int c : y) freq[c] += 1.0;
    if (K == 2) {
      theta(d) = std::log(freq[1] / freq[0]);
    } else {
      double mean_log = 0;
      for (int k = 0; k < K; ++k) mean_log += std::log(freq[k]) / K;
      for (int k = 0; k < K; ++k) theta(k * p + d) = std::log(freq[k]) - mean_log;
    }
  }

  Eigen::MatrixXd P;
  Eigen::MatrixXd R = prob.residual(theta, P);
  Eigen::VectorXd g = prob.gradient(theta, R);
  double f = prob.value(theta);
  int it = 0;
  bool converged = g.cwiseAbs().maxCoeff() <= opt.gradient_tol;
  while (!converged && it < opt.max_iterations) {
    ++it;
    Eigen::MatrixXd H = prob.hessian(P);
    const double damp = 1e-10 * (1.0 + H.diagonal().cwiseAbs().maxCoeff());
    H.diagonal().array() += damp;
    Eigen::VectorXd step = H.ldlt().solve(-g);
    double slope = g.dot(step);
    if (!step.allFinite() || slope >= 0) {
      step = -g;
      slope = -g.squaredNorm();
    }
    double t = 1.0;
    Eigen::VectorXd next;
    double f_next = 0;
    bool accepted = false;
    for (int ls = 0; ls < 60; ++ls) {
      next = theta + t * step;
      f_next = prob.value(next);
      if (std::isfinite(f_next) && f_next <= f + 1e-4 * t * slope) {
        accepted = true;
        break;
      }
      t *= 0.5;
    }
    if (!accepted) {
      // Near the optimum f is flat to rounding; take the full step if it
      // still shrinks the gradient.
      next = theta + step;
      Eigen::MatrixXd P_try;
      const Eigen::VectorXd g_try = prob.gradient(next, prob.residual(next, P_try));
      if (!g_try.allFinite() || g_try.cwiseAbs().maxCoeff() >= g.cwiseAbs().maxCoeff()) break;
      f_next = prob.value(next);
    }
    if (K > 2) {
      // Intercepts are only identified up to a shared offset.
      double mean_b = 0;
      for (int k = 0; k < K; ++k) mean_b += next(k * p + d) / K;
      for (int k = 0; k < K; ++k) next(k * p + d) -= mean_b;
    }
    theta = std::move(next);
    f = f_next;
    R = prob.residual(theta, P);
    g = prob.gradient(theta, R);
    converged = g.cwiseAbs().maxCoeff() <= opt.gradient_tol;
  }

  LinearModel m;
  m.kind = K == 2 ? ModelKind::logistic_binary : ModelKind::logistic_multinomial;
  m.weights.resize(d, prob.blocks());
  m.intercept.resize(prob.blocks());
  for (int k = 0; k < prob.blocks(); ++k) {
    m.weights.col(k) = theta.segment(k * p, d);
    m.intercept(k) = theta(k * p + d);
  }
  m.penalty = C;
  m.classes = std::move(classes);
  m.converged = converged;
  m.iterations = it;
  m.gradient_max_norm = g.cwiseAbs().maxCoeff();
  return m;
}

}  // namespace repsim
