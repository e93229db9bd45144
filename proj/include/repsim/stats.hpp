#pragma once

// Rank statistics and scoring functions.

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <optional>
#include <span>
#include <vector>

#include "repsim/error.hpp"

namespace repsim {

/// Ranks 1..n, ties share the average of their rank range.
inline std::vector<double> rank_transform(std::span<const double> x) {
  const std::size_t n = x.size();
  if (n == 0) throw Error(Errc::degenerate_input, "rank_transform of an empty vector");
  for (double v : x)
    if (!std::isfinite(v)) throw Error(Errc::non_finite, "rank_transform input");
  std::vector<std::size_t> idx(n);
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  std::sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return x[a] < x[b]; });
  std::vector<double> ranks(n);
  std::size_t i = 0;
  while (i < n) {
    std::size_t j = i + 1;
    while (j < n && x[idx[j]] == x[idx[i]]) ++j;
    const double r = 0.5 * static_cast<double>(i + 1 + j);  // mean of i+1..j
    for (std::size_t k = i; k < j; ++k) ranks[idx[k]] = r;
    i = j;
  }
  return ranks;
}

/// Pearson correlation; throws on constant input. Symmetric in its arguments bit-for-bit.
inline double pearson(std::span<const double> x, std::span<const double> y) {
  const std::size_t n = x.size();
  if (n != y.size()) throw Error(Errc::dimension_mismatch, "pearson length mismatch");
  if (n < 2) throw Error(Errc::degenerate_input, "pearson needs at least 2 values");
  double mx = 0, my = 0;
  for (std::size_t i = 0; i < n; ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= static_cast<double>(n);
  my /= static_cast<double>(n);
  double sxy = 0, sxx = 0, syy = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const double dx = x[i] - mx, dy = y[i] - my;
    sxy += dx * dy;
    sxx += dx * dx;
    syy += dy * dy;
  }
  if (sxx == 0.0 || syy == 0.0) throw Error(Errc::degenerate_input, "constant vector in correlation");
  return std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);
}

inline double spearman(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size()) throw Error(Errc::dimension_mismatch, "spearman length mismatch");
  if (x.size() < 3) throw Error(Errc::degenerate_input, "spearman needs at least 3 values");
  const auto rx = rank_transform(x);
  const auto ry = rank_transform(y);
  return pearson(rx, ry);
}

/// Coefficient of determination about mean(y); negative when worse than the mean.
inline double r2_score(std::span<const double> y, std::span<const double> y_hat) {
  const std::size_t n = y.size();
  if (n != y_hat.size()) throw Error(Errc::dimension_mismatch, "r2_score length mismatch");
  if (n < 2) throw Error(Errc::degenerate_input, "r2_score needs at least 2 values");
  double mean = 0;
  for (double v : y) mean += v;
  mean /= static_cast<double>(n);
  double ss_res = 0, ss_tot = 0;
  for (std::size_t i = 0; i < n; ++i) {
    ss_res += (y[i] - y_hat[i]) * (y[i] - y_hat[i]);
    ss_tot += (y[i] - mean) * (y[i] - mean);
  }
  if (ss_tot == 0.0) throw Error(Errc::degenerate_target, "r2_score of a constant target");
  return 1.0 - ss_res / ss_tot;
}

inline double r2_score(const Eigen::VectorXd& y, const Eigen::VectorXd& y_hat) {
  return r2_score(std::span<const double>(y.data(), static_cast<std::size_t>(y.size())),
                  std::span<const double>(y_hat.data(), static_cast<std::size_t>(y_hat.size())));
}

inline constexpr double kProbClip = 1e-12;

/// Log-likelihood of integer labels under row-wise class probabilities.
inline double log_likelihood(std::span<const int> y, const Eigen::MatrixXd& probs) {
  if (static_cast<Eigen::Index>(y.size()) != probs.rows())
    throw Error(Errc::dimension_mismatch, "label count differs from probability rows");
  double ll = 0;
  for (std::size_t i = 0; i < y.size(); ++i) {
    if (y[i] < 0 || y[i] >= probs.cols()) throw Error(Errc::out_of_range, "label outside probability columns");
    const double p = std::clamp(probs(static_cast<Eigen::Index>(i), y[i]), kProbClip, 1.0 - kProbClip);
    ll += std::log(p);
  }
  return ll;
}

/// 1 - LL_model / LL_null. `p_null` holds either one row of class
/// probabilities shared by all samples, or one row per sample.
inline double mcfadden_pseudo_r2(std::span<const int> y, const Eigen::MatrixXd& p_hat, const Eigen::MatrixXd& p_null) {
  for (Eigen::Index r = 0; r < p_hat.rows(); ++r)
    if (std::abs(p_hat.row(r).sum() - 1.0) > 1e-9)
      throw Error(Errc::invalid_argument, "predicted probabilities must sum to 1");
  Eigen::MatrixXd null_rows = p_null;
  if (p_null.rows() == 1 && p_hat.rows() != 1) null_rows = p_null.replicate(p_hat.rows(), 1);
  const double ll_model = log_likelihood(y, p_hat);
  const double ll_null = log_likelihood(y, null_rows);
  if (ll_null == 0.0) throw Error(Errc::degenerate_target, "null model has zero log-likelihood");
  return 1.0 - ll_model / ll_null;
}

inline double median(std::vector<double> v) {
  if (v.empty()) throw Error(Errc::degenerate_input, "median of an empty set");
  std::sort(v.begin(), v.end());
  const std::size_t m = v.size() / 2;
  return v.size() % 2 == 1 ? v[m] : 0.5 * (v[m - 1] + v[m]);
}

struct TestResult {
  double statistic = 0;
  double p_value = 1;
  std::size_t n = 0;
  bool exact = false;
};

inline constexpr std::size_t kWilcoxonExactMax = 25;

/// Two-sided Wilcoxon signed-rank test. Exact zeros are dropped; ties in
/// |d| get average ranks. The statistic is min(W+, W-). For n <= 25 the p-value
/// is exact over all 2^n sign assignments of the observed ranks; beyond that a
/// normal approximation with tie and continuity corrections is used.
inline TestResult wilcoxon_signed_rank(std::span<const double> diffs) {
  std::vector<double> d;
  for (double v : diffs) {
    if (!std::isfinite(v)) throw Error(Errc::non_finite, "wilcoxon input");
    if (v != 0.0) d.push_back(v);
  }
  if (d.empty()) throw Error(Errc::degenerate_input, "all differences are zero");
  const std::size_t n = d.size();
  std::vector<double> mag(n);
  for (std::size_t i = 0; i < n; ++i) mag[i] = std::abs(d[i]);
  const auto ranks = rank_transform(mag);

  // Average ranks are multiples of 1/2, so doubled ranks are exact integers.
  std::vector<std::int64_t> r2(n);
  std::int64_t w_plus2 = 0, total2 = 0;
  for (std::size_t i = 0; i < n; ++i) {
    r2[i] = static_cast<std::int64_t>(std::llround(2.0 * ranks[i]));
    total2 += r2[i];
    if (d[i] > 0) w_plus2 += r2[i];
  }
  const std::int64_t stat2 = std::min(w_plus2, total2 - w_plus2);

  TestResult res;
  res.n = n;
  res.statistic = 0.5 * static_cast<double>(stat2);
  if (n <= kWilcoxonExactMax) {
    // counts[s] = number of sign patterns with doubled W+ equal to s
    std::vector<std::uint64_t> counts(static_cast<std::size_t>(total2) + 1, 0);
    counts[0] = 1;
    std::int64_t reach = 0;
    for (std::size_t i = 0; i < n; ++i) {
      for (std::int64_t s = reach; s >= 0; --s)
        if (counts[static_cast<std::size_t>(s)]) counts[static_cast<std::size_t>(s + r2[i])] += counts[static_cast<std::size_t>(s)];
      reach += r2[i];
    }
    std::uint64_t tail = 0;
    for (std::int64_t s = 0; s <= stat2; ++s) tail += counts[static_cast<std::size_t>(s)];
    const double patterns = std::ldexp(1.0, static_cast<int>(n));
    res.p_value = std::min(1.0, 2.0 * static_cast<double>(tail) / patterns);
    res.exact = true;
  } else {
    const double nn = static_cast<double>(n);
    const double mean = nn * (nn + 1) / 4.0;
    double var = nn * (nn + 1) * (2 * nn + 1) / 24.0;
    std::vector<double> sorted = ranks;
    std::sort(sorted.begin(), sorted.end());
    for (std::size_t i = 0; i < n;) {
      std::size_t j = i + 1;
      while (j < n && sorted[j] == sorted[i]) ++j;
      const double t = static_cast<double>(j - i);
      var -= (t * t * t - t) / 48.0;
      i = j;
    }
    if (var <= 0) {
      res.p_value = 1.0;
    } else {
      const double z = (res.statistic - mean + 0.5) / std::sqrt(var);
      res.p_value = std::clamp(std::erfc(-z / std::sqrt(2.0)), 0.0, 1.0);  // 2 * Phi(z), z <= 0
    }
  }
  return res;
}

}  // namespace repsim
