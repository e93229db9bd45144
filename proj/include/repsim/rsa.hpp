#pragma once

// Representational similarity analysis.
//
// A representation's RSM is the cosine similarity matrix of its L2-normalized
// rows; only the strict upper triangle is stored (row-major). Two
// representations are compared by the Spearman correlation of their packed
// triangles over their common vocabulary. Both sides are ordered
// lexicographically, so the triangles align element for element.

#include <nlohmann/json.hpp>

#include <Eigen/Dense>
#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <limits>
#include <map>
#include <numeric>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "repsim/error.hpp"
#include "repsim/linalg.hpp"
#include "repsim/parallel.hpp"
#include "repsim/representation.hpp"
#include "repsim/stats.hpp"
#include "repsim/text.hpp"
#include "repsim/vocab.hpp"

namespace repsim {

struct RSM {
  VocabSet vocab;
  std::vector<double> upper;  // n(n-1)/2 entries

  static std::size_t packed_size(std::size_t n) { return n < 2 ? 0 : n * (n - 1) / 2; }
  /// Offset of (i, i+1) in the packed triangle.
  static std::size_t row_offset(std::size_t n, std::size_t i) { return i * (2 * n - i - 1) / 2; }
};

/// Row-normalized copy; a zero row is an error naming the word.
inline Eigen::MatrixXd normalized_rows(const Representation& rep) {
  Eigen::MatrixXd M = rep.matrix;
  for (Eigen::Index r = 0; r < M.rows(); ++r) {
    const double norm = M.row(r).norm();
    if (!(norm > 0)) throw Error(Errc::zero_norm_row, rep.name + ": " + rep.vocab[static_cast<std::size_t>(r)]);
    M.row(r) /= norm;
  }
  return M;
}

inline RSM representational_similarity_matrix(const Representation& rep, unsigned jobs = 1) {
  const std::size_t n = rep.vocab.size();
  if (n < 3) throw Error(Errc::vocab_too_small, rep.name + ": RSM needs at least 3 words");
  const Eigen::MatrixXd M = normalized_rows(rep);
  RSM out;
  out.vocab = rep.vocab;
  out.upper.resize(RSM::packed_size(n));
  parallel_for(n - 1, jobs, [&](std::size_t i) {
    const auto rest = static_cast<Eigen::Index>(n - i - 1);
    const Eigen::VectorXd sims = M.bottomRows(rest) * M.row(static_cast<Eigen::Index>(i)).transpose();
    double* dst = out.upper.data() + RSM::row_offset(n, i);
    for (Eigen::Index k = 0; k < rest; ++k) dst[k] = std::clamp(sims(k), -1.0, 1.0);
  });
  return out;
}

namespace detail {

/// Exact centered sums of doubled average ranks. With N values, doubled
/// ranks are integers in [2, 2N] and their mean is N+1, so every product is
/// an exact integer and accumulation order does not matter.
using wide = __int128;

/// Writes doubled average ranks of `values` into `ranks2` (uint32). Needs an
/// index buffer of N uint32 during the sort.
inline void doubled_ranks(std::span<const double> values, std::vector<std::uint32_t>& ranks2) {
  const std::size_t N = values.size();
  if (N >= (std::size_t{1} << 31)) throw Error(Errc::out_of_range, "too many pairs for 32-bit ranks");
  std::vector<std::uint32_t> idx(N);
  std::iota(idx.begin(), idx.end(), 0u);
  std::sort(idx.begin(), idx.end(), [&](std::uint32_t a, std::uint32_t b) { return values[a] < values[b]; });
  ranks2.resize(N);
  std::size_t i = 0;
  while (i < N) {
    std::size_t j = i + 1;
    while (j < N && values[idx[j]] == values[idx[i]]) ++j;
    const auto r2 = static_cast<std::uint32_t>(i + 1 + j);  // 2 * mean(i+1..j)
    for (std::size_t k = i; k < j; ++k) ranks2[idx[k]] = r2;
    i = j;
  }
}

/// Pearson correlation of two doubled-rank vectors.
inline double doubled_rank_correlation(std::span<const std::uint32_t> rx, std::span<const std::uint32_t> ry) {
  const std::size_t N = rx.size();
  const auto center = static_cast<std::int64_t>(N + 1);
  wide sxy = 0, sxx = 0, syy = 0;
  for (std::size_t i = 0; i < N; ++i) {
    const std::int64_t a = static_cast<std::int64_t>(rx[i]) - center;
    const std::int64_t b = static_cast<std::int64_t>(ry[i]) - center;
    sxy += static_cast<wide>(a * b);
    sxx += static_cast<wide>(a * a);
    syy += static_cast<wide>(b * b);
  }
  if (sxx == 0 || syy == 0) throw Error(Errc::degenerate_input, "constant vector in correlation");
  const double vx = static_cast<double>(sxx), vy = static_cast<double>(syy);
  return std::clamp(static_cast<double>(sxy) / std::sqrt(vx * vy), -1.0, 1.0);
}

}  // namespace detail

/// Spearman correlation of two equally long vectors computed from exact
/// integer rank sums. Bit-identical under argument swap; equals exactly 1 for
/// identical inputs. Memory: 4 bytes per element per side plus one index buffer.
inline double spearman_exact(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size()) throw Error(Errc::dimension_mismatch, "spearman length mismatch");
  const std::size_t N = x.size();
  if (N < 3) throw Error(Errc::degenerate_input, "spearman needs at least 3 values");
  for (double v : x)
    if (!std::isfinite(v)) throw Error(Errc::non_finite, "spearman input");
  for (double v : y)
    if (!std::isfinite(v)) throw Error(Errc::non_finite, "spearman input");
  std::vector<std::uint32_t> rx, ry;
  detail::doubled_ranks(x, rx);
  detail::doubled_ranks(y, ry);
  return detail::doubled_rank_correlation(rx, ry);
}

struct RsaPair {
  double rho = 0;
  std::size_t n_common = 0;
};

/// Spearman correlation of the two RSMs over the common vocabulary.
inline RsaPair rsa_correlation(const Representation& a, const Representation& b, unsigned jobs = 1) {
  const VocabSet common = set_intersection(a.vocab, b.vocab);
  if (common.size() < 3)
    throw Error(Errc::vocab_too_small, a.name + " / " + b.name + ": common vocabulary has " +
                                           std::to_string(common.size()) + " words, need >= 3");
  const Representation sa = subset_representation(a, common);
  const Representation sb = subset_representation(b, common);
  // Rank each side as soon as its RSM exists so only one triangle of doubles
  // is alive at a time.
  std::vector<std::uint32_t> ra, rb;
  {
    const RSM m = representational_similarity_matrix(sa, jobs);
    detail::doubled_ranks(m.upper, ra);
  }
  {
    const RSM m = representational_similarity_matrix(sb, jobs);
    detail::doubled_ranks(m.upper, rb);
  }
  try {
    return {detail::doubled_rank_correlation(ra, rb), common.size()};
  } catch (const Error&) {
    throw Error(Errc::degenerate_input, a.name + " / " + b.name + ": constant RSM");
  }
}

/// Pairwise Spearman matrix between representations. Cells whose pair fails
/// (too few common words, degenerate RSM) are marked missing and hold NaN.
struct RsaMatrix {
  std::vector<std::string> names;
  std::vector<DataType> labels;
  Eigen::MatrixXd rho;
  Eigen::Matrix<bool, Eigen::Dynamic, Eigen::Dynamic> missing;
  Eigen::Matrix<std::size_t, Eigen::Dynamic, Eigen::Dynamic> pair_vocab_sizes;
  std::map<std::pair<std::size_t, std::size_t>, std::string> failures;
  std::size_t computations = 0;

  std::size_t size() const { return names.size(); }
  bool any_missing() const { return missing.any(); }
};

inline RsaMatrix pairwise_rsa(std::span<const Representation> reps, unsigned jobs = 1) {
  const std::size_t n = reps.size();
  if (n < 2) throw Error(Errc::invalid_argument, "pairwise_rsa needs at least 2 representations");
  RsaMatrix out;
  for (const auto& r : reps) {
    out.names.push_back(r.name);
    out.labels.push_back(r.data_type);
  }
  const auto N = static_cast<Eigen::Index>(n);
  out.rho = Eigen::MatrixXd::Identity(N, N);
  out.missing = Eigen::Matrix<bool, Eigen::Dynamic, Eigen::Dynamic>::Constant(N, N, false);
  out.pair_vocab_sizes.resize(N, N);
  for (std::size_t i = 0; i < n; ++i) out.pair_vocab_sizes(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(i)) = reps[i].vocab.size();

  std::vector<std::pair<std::size_t, std::size_t>> jobs_list;
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j) jobs_list.emplace_back(i, j);
  std::vector<std::optional<RsaPair>> results(jobs_list.size());
  std::vector<std::string> errors(jobs_list.size());
  std::atomic<std::size_t> computed{0};
  parallel_for(jobs_list.size(), jobs, [&](std::size_t t) {
    const auto [i, j] = jobs_list[t];
    ++computed;
    try {
      results[t] = rsa_correlation(reps[i], reps[j]);
    } catch (const Error& e) {
      errors[t] = e.what();
    }
  });
  out.computations = computed;
  for (std::size_t t = 0; t < jobs_list.size(); ++t) {
    const auto i = static_cast<Eigen::Index>(jobs_list[t].first);
    const auto j = static_cast<Eigen::Index>(jobs_list[t].second);
    if (results[t]) {
      out.rho(i, j) = out.rho(j, i) = results[t]->rho;
      out.pair_vocab_sizes(i, j) = out.pair_vocab_sizes(j, i) = results[t]->n_common;
    } else {
      out.rho(i, j) = out.rho(j, i) = std::numeric_limits<double>::quiet_NaN();
      out.missing(i, j) = out.missing(j, i) = true;
      out.pair_vocab_sizes(i, j) = out.pair_vocab_sizes(j, i) =
          set_intersection(reps[jobs_list[t].first].vocab, reps[jobs_list[t].second].vocab).size();
      out.failures[jobs_list[t]] = errors[t];
    }
  }
  return out;
}

/// Classical MDS of the dissimilarities 1 - rho.
inline Eigen::MatrixXd mds_projection(const RsaMatrix& rsa, Eigen::Index dims = 2) {
  if (rsa.any_missing()) throw Error(Errc::missing_cells, "RSA matrix has missing cells; impute or drop first");
  Eigen::MatrixXd D = (1.0 - rsa.rho.array()).matrix();
  D.diagonal().setZero();
  D = D.cwiseMax(0.0);
  return classical_mds(D, dims);
}

using TypePair = std::pair<DataType, DataType>;

inline TypePair canonical_pair(DataType a, DataType b) { return a <= b ? TypePair{a, b} : TypePair{b, a}; }

inline std::string type_pair_name(const TypePair& p) {
  return std::string(to_string(p.first)) + "-" + std::string(to_string(p.second));
}

/// Mean rho over unordered off-diagonal pairs for each label combination.
/// Missing cells are ignored; combinations without any cell are omitted.
inline std::map<TypePair, double> within_between_summary(const RsaMatrix& rsa) {
  if (rsa.size() < 2) throw Error(Errc::invalid_argument, "need at least 2 representations");
  std::map<TypePair, std::pair<double, std::size_t>> acc;
  for (std::size_t i = 0; i < rsa.size(); ++i)
    for (std::size_t j = i + 1; j < rsa.size(); ++j) {
      if (rsa.missing(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j))) continue;
      auto& [sum, cnt] = acc[canonical_pair(rsa.labels[i], rsa.labels[j])];
      sum += rsa.rho(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));
      ++cnt;
    }
  std::map<TypePair, double> out;
  for (const auto& [key, v] : acc) out[key] = v.first / static_cast<double>(v.second);
  return out;
}

/// For each representation, the share of its k most similar others (largest
/// rho, ties to the earlier input) that have its data type; averaged per type.
inline std::map<DataType, double> same_type_neighbor_affinity(const RsaMatrix& rsa, std::size_t k = 3) {
  const std::size_t n = rsa.size();
  if (k < 1 || k >= n) throw Error(Errc::out_of_range, "k must be in [1, number of representations)");
  std::map<DataType, std::pair<double, std::size_t>> acc;
  for (std::size_t i = 0; i < n; ++i) {
    std::vector<std::size_t> others;
    for (std::size_t j = 0; j < n; ++j)
      if (j != i && !rsa.missing(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j))) others.push_back(j);
    if (others.size() < k) throw Error(Errc::missing_cells, rsa.names[i] + " has fewer than k comparable neighbors");
    std::stable_sort(others.begin(), others.end(), [&](std::size_t a, std::size_t b) {
      return rsa.rho(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(a)) >
             rsa.rho(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(b));
    });
    std::size_t same = 0;
    for (std::size_t t = 0; t < k; ++t) same += rsa.labels[others[t]] == rsa.labels[i];
    auto& [sum, cnt] = acc[rsa.labels[i]];
    sum += static_cast<double>(same) / static_cast<double>(k);
    ++cnt;
  }
  std::map<DataType, double> out;
  for (const auto& [t, v] : acc) out[t] = v.first / static_cast<double>(v.second);
  return out;
}

// ---------------------------------------------------------------------------
// Export

inline std::string rsa_to_csv(const RsaMatrix& rsa) {
  std::string s = "name";
  for (const auto& n : rsa.names) s += "," + text::csv_field(n);
  s += "\n";
  for (std::size_t i = 0; i < rsa.size(); ++i) {
    s += text::csv_field(rsa.names[i]);
    for (std::size_t j = 0; j < rsa.size(); ++j) {
      s += ",";
      if (!rsa.missing(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)))
        s += text::format_double(rsa.rho(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)));
    }
    s += "\n";
  }
  return s;
}

inline nlohmann::ordered_json rsa_to_json(const RsaMatrix& rsa) {
  nlohmann::ordered_json j;
  j["names"] = rsa.names;
  auto& labels = j["labels"] = nlohmann::ordered_json::array();
  for (auto t : rsa.labels) labels.push_back(std::string(to_string(t)));
  auto& rho = j["rho"] = nlohmann::ordered_json::array();
  auto& sizes = j["pair_vocab_sizes"] = nlohmann::ordered_json::array();
  for (std::size_t r = 0; r < rsa.size(); ++r) {
    auto row = nlohmann::ordered_json::array();
    auto srow = nlohmann::ordered_json::array();
    for (std::size_t c = 0; c < rsa.size(); ++c) {
      const auto R = static_cast<Eigen::Index>(r), C = static_cast<Eigen::Index>(c);
      if (rsa.missing(R, C))
        row.push_back(nullptr);
      else
        row.push_back(rsa.rho(R, C));
      srow.push_back(rsa.pair_vocab_sizes(R, C));
    }
    rho.push_back(std::move(row));
    sizes.push_back(std::move(srow));
  }
  return j;
}

inline RsaMatrix rsa_from_json(const nlohmann::json& j) {
  RsaMatrix out;
  out.names = j.at("names").get<std::vector<std::string>>();
  for (const auto& l : j.at("labels")) {
    const auto t = parse_data_type(l.get<std::string>());
    if (!t) throw Error(Errc::invalid_argument, "unknown data type label");
    out.labels.push_back(*t);
  }
  const auto n = static_cast<Eigen::Index>(out.names.size());
  if (static_cast<Eigen::Index>(out.labels.size()) != n) throw Error(Errc::dimension_mismatch, "labels vs names");
  out.rho.resize(n, n);
  out.missing = Eigen::Matrix<bool, Eigen::Dynamic, Eigen::Dynamic>::Constant(n, n, false);
  out.pair_vocab_sizes = Eigen::Matrix<std::size_t, Eigen::Dynamic, Eigen::Dynamic>::Zero(n, n);
  const auto& rho = j.at("rho");
  for (Eigen::Index r = 0; r < n; ++r)
    for (Eigen::Index c = 0; c < n; ++c) {
      const auto& v = rho.at(static_cast<std::size_t>(r)).at(static_cast<std::size_t>(c));
      if (v.is_null()) {
        out.rho(r, c) = std::numeric_limits<double>::quiet_NaN();
        out.missing(r, c) = true;
      } else {
        out.rho(r, c) = v.get<double>();
      }
      if (j.contains("pair_vocab_sizes"))
        out.pair_vocab_sizes(r, c) = j["pair_vocab_sizes"].at(static_cast<std::size_t>(r)).at(static_cast<std::size_t>(c)).get<std::size_t>();
    }
  return out;
}

}  // namespace repsim
