#pragma once

// Representational content analysis: nested cross-validated linear probes of
// a representation against word norms.
//
// Fold assignment (reproducible from the seed alone):
//   * outer stream Rng(mix_seed(seed, 0)); inner stream for outer fold f is
//     Rng(mix_seed(seed, 1 + f)).
//   * plain folds: p = rng.permutation(n); item p[pos] goes to fold pos % k.
//   * stratified folds: for each class in ascending order, its members (in
//     ascending index order) are shuffled with rng and appended to one list;
//     item list[pos] goes to fold pos % k.
// Inner folds are assigned over the outer-training items in ascending order.

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "repsim/error.hpp"
#include "repsim/linear_models.hpp"
#include "repsim/parallel.hpp"
#include "repsim/representation.hpp"
#include "repsim/rng.hpp"
#include "repsim/stats.hpp"
#include "repsim/store.hpp"
#include "repsim/text.hpp"

namespace repsim {

/// `count` points evenly spaced in log10 between lo and hi, ascending.
inline std::vector<double> log_grid(double lo, double hi, std::size_t count) {
  if (!(lo > 0) || !(hi >= lo) || count < 1) throw Error(Errc::invalid_argument, "bad log grid");
  if (count == 1) return {lo};
  const double a = std::log10(lo), b = std::log10(hi);
  std::vector<double> g(count);
  for (std::size_t i = 0; i < count; ++i) {
    const double e = a + (b - a) * static_cast<double>(i) / static_cast<double>(count - 1);
    const double r = std::round(e);
    g[i] = std::abs(e - r) < 1e-12 ? std::pow(10.0, r) : std::pow(10.0, e);
  }
  return g;
}

struct ProbeConfig {
  std::size_t outer_folds = 5;
  std::size_t inner_folds = 5;
  std::vector<double> alpha_grid = log_grid(1e-5, 1e5, 11);
  std::size_t min_test_samples = 20;
  std::uint64_t seed = 0;
  bool standardize = false;  // z-score columns with training-fold statistics
  LogisticOptions logistic;

  void validate() const {
    if (outer_folds < 2 || inner_folds < 2) throw Error(Errc::invalid_argument, "folds must be >= 2");
    if (min_test_samples < 1) throw Error(Errc::invalid_argument, "min_test_samples must be >= 1");
    if (alpha_grid.empty()) throw Error(Errc::invalid_argument, "empty alpha grid");
    for (std::size_t i = 0; i < alpha_grid.size(); ++i) {
      if (!(alpha_grid[i] > 0) || !std::isfinite(alpha_grid[i]))
        throw Error(Errc::invalid_argument, "alpha grid values must be positive");
      if (i > 0 && !(alpha_grid[i] > alpha_grid[i - 1]))
        throw Error(Errc::invalid_argument, "alpha grid must be strictly ascending");
    }
  }
};

namespace skip {
inline constexpr const char* insufficient_samples = "insufficient-samples";
inline constexpr const char* rare_class = "rare-class";
inline constexpr const char* single_class = "single-class";
inline constexpr const char* degenerate_target = "degenerate-target";
}  // namespace skip

struct ProbeResult {
  std::string representation;
  std::string norm;
  std::string category;
  std::size_t n_samples = 0;
  std::vector<double> fold_scores;
  double mean_score = std::numeric_limits<double>::quiet_NaN();
  std::vector<double> chosen_penalties;  // in alpha terms (C = 1/alpha for logistic)
  bool skipped = false;
  std::string skip_reason;
  std::uint64_t fold_hash = 0;  // of the outer fold assignment
  bool converged = true;        // every logistic fit reached tolerance
};

// ---------------------------------------------------------------------------
// Folds

inline std::vector<std::size_t> kfold_assign(std::size_t n, std::size_t k, Rng& rng) {
  const auto perm = rng.permutation(n);
  std::vector<std::size_t> fold(n);
  for (std::size_t pos = 0; pos < n; ++pos) fold[perm[pos]] = pos % k;
  return fold;
}

/// `labels` are compact class ids 0..K-1.
inline std::vector<std::size_t> stratified_kfold_assign(std::span<const int> labels, std::size_t k, Rng& rng) {
  const int K = labels.empty() ? 0 : *std::max_element(labels.begin(), labels.end()) + 1;
  std::vector<std::size_t> order;
  order.reserve(labels.size());
  for (int c = 0; c < K; ++c) {
    std::vector<std::size_t> members;
    for (std::size_t i = 0; i < labels.size(); ++i)
      if (labels[i] == c) members.push_back(i);
    rng.shuffle(members);
    order.insert(order.end(), members.begin(), members.end());
  }
  std::vector<std::size_t> fold(labels.size());
  for (std::size_t pos = 0; pos < order.size(); ++pos) fold[order[pos]] = pos % k;
  return fold;
}

inline std::uint64_t hash_folds(std::span<const std::size_t> folds) {
  std::uint64_t h = fnv1a(std::to_string(folds.size()));
  for (std::size_t f : folds) h = fnv1a(std::string_view(reinterpret_cast<const char*>(&f), sizeof f), h);
  return h;
}

namespace detail {

inline Eigen::MatrixXd take_rows(const Eigen::MatrixXd& X, std::span<const std::size_t> idx) {
  Eigen::MatrixXd out(static_cast<Eigen::Index>(idx.size()), X.cols());
  for (std::size_t i = 0; i < idx.size(); ++i) out.row(static_cast<Eigen::Index>(i)) = X.row(static_cast<Eigen::Index>(idx[i]));
  return out;
}

template <class T>
std::vector<T> take(std::span<const T> v, std::span<const std::size_t> idx) {
  std::vector<T> out(idx.size());
  for (std::size_t i = 0; i < idx.size(); ++i) out[i] = v[idx[i]];
  return out;
}

inline Eigen::VectorXd to_vector(const std::vector<double>& v) {
  return Eigen::Map<const Eigen::VectorXd>(v.data(), static_cast<Eigen::Index>(v.size()));
}

inline void split(std::span<const std::size_t> folds, std::size_t f, std::vector<std::size_t>& train,
                  std::vector<std::size_t>& test) {
  train.clear();
  test.clear();
  for (std::size_t i = 0; i < folds.size(); ++i) (folds[i] == f ? test : train).push_back(i);
}

/// Column z-scoring fitted on a training block; constant columns are only centered.
struct Standardizer {
  Eigen::RowVectorXd mean, scale;
  explicit Standardizer(const Eigen::MatrixXd& train) {
    mean = train.colwise().mean();
    scale = ((train.rowwise() - mean).array().square().colwise().mean()).sqrt();
    for (Eigen::Index c = 0; c < scale.size(); ++c)
      if (!(scale(c) > 0)) scale(c) = 1.0;
  }
  Eigen::MatrixXd apply(const Eigen::MatrixXd& X) const {
    return ((X.rowwise() - mean).array().rowwise() / scale.array()).matrix();
  }
};

/// Scores a fitted regressor; nullopt when the target block is constant.
inline std::optional<double> score_regression(const LinearModel& m, const Eigen::MatrixXd& X, const Eigen::VectorXd& y) {
  if ((y.array() == y(0)).all()) return std::nullopt;
  return r2_score(y, m.predict(X));
}

/// McFadden pseudo-R2 on (X, y) with class frequencies of `train_y` as the null model.
inline double score_classifier(const LinearModel& m, const Eigen::MatrixXd& X, std::span<const int> y,
                               std::span<const int> train_y, int K) {
  Eigen::MatrixXd P = Eigen::MatrixXd::Zero(X.rows(), K);
  const Eigen::MatrixXd p = m.predict_proba(X);
  for (std::size_t c = 0; c < m.classes.size(); ++c) P.col(m.classes[c]) = p.col(static_cast<Eigen::Index>(c));
  Eigen::MatrixXd null = Eigen::MatrixXd::Zero(1, K);
  for (int c : train_y) null(0, c) += 1.0;
  null /= static_cast<double>(train_y.size());
  return mcfadden_pseudo_r2(y, P, null);
}

/// Nested CV driver shared by ridge and logistic probes.
struct NestedCv {
  const Eigen::MatrixXd& X;
  const ProbeConfig& cfg;
  std::span<const double> y_num;  // numeric target (empty for categorical)
  std::span<const int> y_cls;     // compact classes (empty for numeric)
  int K = 0;

  bool categorical() const { return !y_cls.empty(); }

  std::vector<std::size_t> assign(std::span<const std::size_t> items, Rng& rng) const {
    if (!categorical()) return kfold_assign(items.size(), cfg.inner_folds, rng);
    const auto sub = take(y_cls, items);
    return stratified_kfold_assign(sub, cfg.inner_folds, rng);
  }

  struct FoldOutcome {
    double score;
    double alpha;
    bool converged;
  };

  /// Inner selection on `train` then refit and score on `test`; nullopt on a
  /// degenerate target block.
  std::optional<FoldOutcome> run_fold(std::span<const std::size_t> train, std::span<const std::size_t> test,
                                      Rng& inner_rng) const {
    const auto inner = assign(train, inner_rng);
    const std::size_t G = cfg.alpha_grid.size();
    std::vector<double> sum(G, 0.0);
    std::vector<std::size_t> cnt(G, 0);
    bool converged = true;
    std::vector<std::size_t> itr, iva;
    for (std::size_t g = 0; g < cfg.inner_folds; ++g) {
      split(inner, g, itr, iva);
      if (iva.empty() || itr.size() < 2) continue;
      std::vector<std::size_t> tr(itr.size()), va(iva.size());
      for (std::size_t i = 0; i < itr.size(); ++i) tr[i] = train[itr[i]];
      for (std::size_t i = 0; i < iva.size(); ++i) va[i] = train[iva[i]];
      Eigen::MatrixXd Xtr = take_rows(X, tr), Xva = take_rows(X, va);
      if (cfg.standardize) {
        const Standardizer z(Xtr);
        Xtr = z.apply(Xtr);
        Xva = z.apply(Xva);
      }
      if (!categorical()) {
        const Eigen::VectorXd ytr = to_vector(take(y_num, tr)), yva = to_vector(take(y_num, va));
        if ((yva.array() == yva(0)).all()) continue;
        const RidgePath path(Xtr, ytr);
        for (std::size_t a = 0; a < G; ++a) {
          sum[a] += *score_regression(path.fit(cfg.alpha_grid[a]), Xva, yva);
          ++cnt[a];
        }
      } else {
        const auto ytr = take(y_cls, tr), yva = take(y_cls, va);
        std::optional<LinearModel> prev;
        // Largest alpha (smallest C) first so each fit warm-starts from a more regularized one.
        for (std::size_t a = G; a-- > 0;) {
          LinearModel m = logistic_fit(Xtr, ytr, 1.0 / cfg.alpha_grid[a], cfg.logistic, prev ? &*prev : nullptr);
          converged = converged && m.converged;
          sum[a] += score_classifier(m, Xva, yva, ytr, K);
          ++cnt[a];
          prev = std::move(m);
        }
      }
    }
    // Best mean validation score; ties go to the larger penalty.
    std::size_t best = G - 1;
    double best_score = -std::numeric_limits<double>::infinity();
    for (std::size_t a = G; a-- > 0;) {
      if (cnt[a] == 0) continue;
      const double s = sum[a] / static_cast<double>(cnt[a]);
      if (s > best_score) {
        best_score = s;
        best = a;
      }
    }
    const double alpha = cfg.alpha_grid[best];

    Eigen::MatrixXd Xtr = take_rows(X, train), Xte = take_rows(X, test);
    if (cfg.standardize) {
      const Standardizer z(Xtr);
      Xtr = z.apply(Xtr);
      Xte = z.apply(Xte);
    }
    if (!categorical()) {
      const Eigen::VectorXd ytr = to_vector(take(y_num, train)), yte = to_vector(take(y_num, test));
      const auto s = score_regression(RidgePath(Xtr, ytr).fit(alpha), Xte, yte);
      if (!s) return std::nullopt;
      return FoldOutcome{*s, alpha, converged};
    }
    const auto ytr = take(y_cls, train), yte = take(y_cls, test);
    const LinearModel m = logistic_fit(Xtr, ytr, 1.0 / alpha, cfg.logistic);
    return FoldOutcome{score_classifier(m, Xte, yte, ytr, K), alpha, converged && m.converged};
  }
};

}  // namespace detail

/// Outer fold assignment used by probe_norm for n items (and compact class
/// labels when categorical). Depends only on the seed, n, and the labels, so
/// every representation probed on the same words gets the same splits.
inline std::vector<std::size_t> outer_folds_for(std::size_t n, std::span<const int> labels, const ProbeConfig& cfg) {
  Rng rng(mix_seed(cfg.seed, 0));
  if (labels.empty()) return kfold_assign(n, cfg.outer_folds, rng);
  return stratified_kfold_assign(labels, cfg.outer_folds, rng);
}

/// Nested cross-validated probe of `rep` on `norm` over their shared words.
inline ProbeResult probe_norm(const Representation& rep, const NormTable& norm, const ProbeConfig& cfg) {
  cfg.validate();
  ProbeResult res;
  res.representation = rep.name;
  res.norm = norm.name;
  res.category = norm.category;

  // Shared words, in lexicographic order, with their targets.
  std::vector<std::size_t> rows;
  std::vector<double> targets;
  {
    std::size_t j = 0;
    for (std::size_t i = 0; i < norm.vocab.size(); ++i) {
      while (j < rep.vocab.size() && rep.vocab[j] < norm.vocab[i]) ++j;
      if (j < rep.vocab.size() && rep.vocab[j] == norm.vocab[i]) {
        rows.push_back(j);
        targets.push_back(norm.values[i]);
      }
    }
  }
  const std::size_t n = rows.size();
  res.n_samples = n;
  auto skipped = [&](const char* why) {
    res.skipped = true;
    res.skip_reason = why;
    return res;
  };
  if (n / cfg.outer_folds < cfg.min_test_samples) return skipped(skip::insufficient_samples);

  std::vector<int> classes;
  int K = 0;
  if (norm.categorical()) {
    std::vector<std::size_t> counts(norm.labels.size(), 0);
    for (double v : targets) {
      if (v != std::floor(v) || v < 0 || v >= static_cast<double>(norm.labels.size()))
        throw Error(Errc::invalid_argument, norm.name + ": categorical value is not a label index");
      ++counts[static_cast<std::size_t>(v)];
    }
    std::vector<int> remap(norm.labels.size(), -1);
    for (std::size_t c = 0; c < counts.size(); ++c)
      if (counts[c] > 0) remap[c] = K++;
    if (K < 2) return skipped(skip::single_class);
    for (std::size_t c : counts)
      if (c > 0 && c < cfg.outer_folds) return skipped(skip::rare_class);
    classes.reserve(n);
    for (double v : targets) classes.push_back(remap[static_cast<std::size_t>(v)]);
  } else {
    for (double v : targets)
      if (!std::isfinite(v)) throw Error(Errc::non_finite, norm.name + ": numeric target");
    if (std::all_of(targets.begin(), targets.end(), [&](double v) { return v == targets[0]; }))
      return skipped(skip::degenerate_target);
  }

  Eigen::MatrixXd X(static_cast<Eigen::Index>(n), rep.matrix.cols());
  for (std::size_t i = 0; i < n; ++i) X.row(static_cast<Eigen::Index>(i)) = rep.matrix.row(static_cast<Eigen::Index>(rows[i]));

  const auto outer = outer_folds_for(n, classes, cfg);
  res.fold_hash = hash_folds(outer);
  const detail::NestedCv cv{X, cfg, norm.categorical() ? std::span<const double>{} : std::span<const double>(targets),
                            classes, K};
  std::vector<std::size_t> train, test;
  for (std::size_t f = 0; f < cfg.outer_folds; ++f) {
    detail::split(outer, f, train, test);
    Rng inner_rng(mix_seed(cfg.seed, 1 + f));
    const auto out = cv.run_fold(train, test, inner_rng);
    if (!out) {
      res.fold_scores.clear();
      res.chosen_penalties.clear();
      return skipped(skip::degenerate_target);
    }
    res.fold_scores.push_back(out->score);
    res.chosen_penalties.push_back(out->alpha);
    res.converged = res.converged && out->converged;
  }
  double sum = 0;
  for (double s : res.fold_scores) sum += s;
  res.mean_score = sum / static_cast<double>(res.fold_scores.size());
  return res;
}

struct ContentProfile {
  std::string representation;
  std::vector<ProbeResult> results;  // one per attempted norm, in input order

  const ProbeResult* find(const std::string& norm) const {
    for (const auto& r : results)
      if (r.norm == norm) return &r;
    return nullptr;
  }
};

inline ContentProfile content_profile(const Representation& rep, std::span<const NormTable> norms,
                                      const ProbeConfig& cfg, unsigned jobs = 1) {
  if (norms.empty()) throw Error(Errc::invalid_argument, "content_profile needs at least one norm");
  ContentProfile p;
  p.representation = rep.name;
  p.results.resize(norms.size());
  parallel_for(norms.size(), jobs, [&](std::size_t i) { p.results[i] = probe_norm(rep, norms[i], cfg); });
  return p;
}

// ---------------------------------------------------------------------------
// Aggregation

/// Representation x category table; NaN marks a missing cell.
struct CategoryTable {
  std::vector<std::string> rows;
  std::vector<std::string> categories;
  Eigen::MatrixXd cells;

  std::optional<double> cell(const std::string& row, const std::string& category) const {
    const auto r = std::find(rows.begin(), rows.end(), row);
    const auto c = std::find(categories.begin(), categories.end(), category);
    if (r == rows.end() || c == categories.end()) return std::nullopt;
    const double v = cells(r - rows.begin(), c - categories.begin());
    if (std::isnan(v)) return std::nullopt;
    return v;
  }
};

/// Median over the norms of each category of the per-norm mean scores.
/// Skipped norms are left out; a category with no scored norm is missing.
/// Categories are sorted lexicographically.
inline CategoryTable aggregate_by_category(std::span<const ContentProfile> profiles,
                                           const std::map<std::string, std::string>& category_of) {
  CategoryTable t;
  std::vector<std::string> cats;
  for (const auto& p : profiles)
    for (const auto& r : p.results) {
      const auto it = category_of.find(r.norm);
      if (it == category_of.end()) throw Error(Errc::unmapped_norm, r.norm);
      cats.push_back(it->second);
    }
  std::sort(cats.begin(), cats.end());
  cats.erase(std::unique(cats.begin(), cats.end()), cats.end());
  t.categories = cats;
  t.cells = Eigen::MatrixXd::Constant(static_cast<Eigen::Index>(profiles.size()), static_cast<Eigen::Index>(cats.size()),
                                      std::numeric_limits<double>::quiet_NaN());
  for (std::size_t i = 0; i < profiles.size(); ++i) {
    t.rows.push_back(profiles[i].representation);
    std::map<std::string, std::vector<double>> by_cat;
    for (const auto& r : profiles[i].results)
      if (!r.skipped) by_cat[category_of.at(r.norm)].push_back(r.mean_score);
    for (std::size_t c = 0; c < cats.size(); ++c) {
      const auto it = by_cat.find(cats[c]);
      if (it != by_cat.end()) t.cells(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(c)) = median(it->second);
    }
  }
  return t;
}

/// |max over type_a rows - max over type_b rows| for one category.
inline double max_gap(const CategoryTable& table, const std::map<std::string, DataType>& type_of,
                      const std::string& category, DataType type_a, DataType type_b) {
  const auto c = std::find(table.categories.begin(), table.categories.end(), category);
  if (c == table.categories.end()) throw Error(Errc::out_of_range, "unknown category " + category);
  const auto col = c - table.categories.begin();
  auto best = [&](DataType t) {
    std::optional<double> m;
    for (std::size_t r = 0; r < table.rows.size(); ++r) {
      const auto it = type_of.find(table.rows[r]);
      if (it == type_of.end() || it->second != t) continue;
      const double v = table.cells(static_cast<Eigen::Index>(r), col);
      if (!std::isnan(v)) m = m ? std::max(*m, v) : v;
    }
    if (!m) throw Error(Errc::missing_cells, "no " + std::string(to_string(t)) + " cell for category " + category);
    return *m;
  };
  return std::abs(best(type_a) - best(type_b));
}

// ---------------------------------------------------------------------------
// Export

inline std::string profiles_csv_header(std::size_t folds) {
  std::string s = "representation,norm,category,n_samples";
  for (std::size_t f = 0; f < folds; ++f) s += ",fold_" + std::to_string(f);
  return s + ",mean,skip_reason\n";
}

inline std::string profile_csv_rows(const ContentProfile& p, std::size_t folds) {
  std::string s;
  for (const auto& r : p.results) {
    s += text::csv_field(p.representation) + "," + text::csv_field(r.norm) + "," + text::csv_field(r.category) + "," +
         std::to_string(r.n_samples);
    for (std::size_t f = 0; f < folds; ++f) {
      s += ",";
      if (!r.skipped && f < r.fold_scores.size()) s += text::format_double(r.fold_scores[f]);
    }
    s += ",";
    if (!r.skipped) s += text::format_double(r.mean_score);
    s += "," + r.skip_reason + "\n";
  }
  return s;
}

inline std::string profile_to_csv(const ContentProfile& p, std::size_t folds) {
  return profiles_csv_header(folds) + profile_csv_rows(p, folds);
}

inline std::string category_table_csv(const CategoryTable& t) {
  std::string s = "representation";
  for (const auto& c : t.categories) s += "," + text::csv_field(c);
  s += "\n";
  for (std::size_t r = 0; r < t.rows.size(); ++r) {
    s += text::csv_field(t.rows[r]);
    for (std::size_t c = 0; c < t.categories.size(); ++c) {
      s += ",";
      const double v = t.cells(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c));
      if (!std::isnan(v)) s += text::format_double(v);
    }
    s += "\n";
  }
  return s;
}

}  // namespace repsim
