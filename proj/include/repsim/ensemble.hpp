#pragma once

// Ensemble content analysis: probe concatenations of representations on one
// shared vocabulary, and test paired per-norm differences between two
// ensembles (or an ensemble and a solo representation).

#include <nlohmann/json.hpp>

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <vector>

#include "repsim/error.hpp"
#include "repsim/rca.hpp"
#include "repsim/representation.hpp"
#include "repsim/stats.hpp"
#include "repsim/vocab.hpp"

namespace repsim {

enum class BlockScaling { none, per_block_column_zscore };

inline std::optional<BlockScaling> parse_block_scaling(std::string_view s) {
  if (s == "none") return BlockScaling::none;
  if (s == "per-block-column-zscore") return BlockScaling::per_block_column_zscore;
  return std::nullopt;
}

struct EnsembleSpec {
  std::string label;
  std::vector<std::string> members;
  BlockScaling block_scaling = BlockScaling::per_block_column_zscore;

  void validate() const {
    if (members.size() < 2) throw Error(Errc::invalid_argument, label + ": an ensemble needs at least 2 members");
    const std::set<std::string> unique(members.begin(), members.end());
    if (unique.size() != members.size()) throw Error(Errc::invalid_argument, label + ": members must be distinct");
  }
};

/// Side-by-side concatenation on `vocab`. With z-scoring, each column is
/// centered and scaled to unit population sd; constant columns become 0.
inline Representation concatenate(std::span<const Representation> reps, const VocabSet& vocab, BlockScaling scaling,
                                  std::string name = {}) {
  if (reps.empty()) throw Error(Errc::invalid_argument, "concatenate needs at least one representation");
  Eigen::Index dim = 0;
  for (const auto& r : reps) {
    if (!vocab.is_subset_of(r.vocab))
      throw Error(Errc::out_of_range, "vocabulary not contained in " + r.name);
    dim += r.matrix.cols();
  }
  Representation out;
  if (name.empty()) {
    for (const auto& r : reps) name += (name.empty() ? "" : "+") + r.name;
  }
  out.name = std::move(name);
  out.data_type = reps.front().data_type;
  out.vocab = vocab;
  out.matrix.resize(static_cast<Eigen::Index>(vocab.size()), dim);
  Eigen::Index col = 0;
  for (const auto& r : reps) {
    Eigen::MatrixXd block = gather_rows(r, vocab);
    if (scaling == BlockScaling::per_block_column_zscore && block.rows() > 0) {
      for (Eigen::Index c = 0; c < block.cols(); ++c) {
        const double mean = block.col(c).mean();
        block.col(c).array() -= mean;
        const double sd = std::sqrt(block.col(c).squaredNorm() / static_cast<double>(block.rows()));
        if (sd > 0 && std::isfinite(sd))
          block.col(c) /= sd;
        else
          block.col(c).setZero();
      }
    }
    out.matrix.middleCols(col, block.cols()) = block;
    col += block.cols();
  }
  return out;
}

struct EnsembleRcaResult {
  VocabSet vocab;                          // collective common vocabulary
  std::vector<ContentProfile> profiles;    // solo members first (input order), then specs
  std::map<std::string, std::uint64_t> fold_hash;  // per norm, shared by every profile
};

/// Probes every spec and every solo member on the collective common
/// vocabulary, so all profiles share per-norm fold assignments.
inline EnsembleRcaResult ensemble_rca(std::span<const EnsembleSpec> specs, std::span<const Representation> members,
                                      std::span<const NormTable> norms, const ProbeConfig& cfg, unsigned jobs = 1) {
  cfg.validate();
  std::map<std::string, const Representation*> by_name;
  for (const auto& r : members) by_name[r.name] = &r;
  std::vector<std::string> used;
  for (const auto& s : specs) {
    s.validate();
    for (const auto& m : s.members) {
      if (!by_name.count(m)) throw Error(Errc::invalid_argument, s.label + ": unknown member " + m);
      if (std::find(used.begin(), used.end(), m) == used.end()) used.push_back(m);
    }
  }
  std::vector<VocabSet> vocabs;
  for (const auto& m : used) vocabs.push_back(by_name[m]->vocab);
  if (vocabs.empty()) throw Error(Errc::invalid_argument, "no ensemble members");

  EnsembleRcaResult res;
  res.vocab = common_vocabulary(vocabs);
  if (res.vocab.size() < cfg.outer_folds * cfg.min_test_samples)
    throw Error(Errc::vocab_too_small, "collective common vocabulary has " + std::to_string(res.vocab.size()) +
                                           " words, need " + std::to_string(cfg.outer_folds * cfg.min_test_samples));

  std::vector<Representation> probed;
  for (const auto& m : used) probed.push_back(subset_representation(*by_name[m], res.vocab));
  for (const auto& s : specs) {
    std::vector<Representation> parts;
    for (const auto& m : s.members) parts.push_back(subset_representation(*by_name[m], res.vocab));
    probed.push_back(concatenate(parts, res.vocab, s.block_scaling, s.label));
  }

  // One job per (profile, norm).
  res.profiles.resize(probed.size());
  for (std::size_t p = 0; p < probed.size(); ++p) {
    res.profiles[p].representation = probed[p].name;
    res.profiles[p].results.resize(norms.size());
  }
  parallel_for(probed.size() * norms.size(), jobs, [&](std::size_t t) {
    const std::size_t p = t / norms.size(), k = t % norms.size();
    res.profiles[p].results[k] = probe_norm(probed[p], norms[k], cfg);
  });

  for (std::size_t k = 0; k < norms.size(); ++k) {
    std::optional<std::uint64_t> h;
    for (const auto& prof : res.profiles) {
      const auto& r = prof.results[k];
      if (r.skipped && r.fold_hash == 0) continue;
      if (!h) h = r.fold_hash;
      if (*h != r.fold_hash) throw Error(Errc::invalid_argument, "fold assignments differ for norm " + norms[k].name);
    }
    res.fold_hash[norms[k].name] = h.value_or(0);
  }
  return res;
}

struct CategoryDiff {
  std::string category;
  std::size_t n_norms = 0;  // norms scored in both profiles
  double median_diff = 0;
  std::optional<TestResult> test;  // absent with fewer than 3 nonzero differences
};

struct DiffReport {
  std::string label_a, label_b;
  std::vector<CategoryDiff> categories;  // sorted by category

  const CategoryDiff* find(const std::string& category) const {
    for (const auto& c : categories)
      if (c.category == category) return &c;
    return nullptr;
  }
};

/// Per category: median of norm-wise (a - b) mean-score differences and a
/// Wilcoxon signed-rank test over those differences.
inline DiffReport paired_difference_report(const ContentProfile& a, const ContentProfile& b,
                                           const std::map<std::string, std::string>& category_of) {
  std::set<std::string> na, nb;
  for (const auto& r : a.results) na.insert(r.norm);
  for (const auto& r : b.results) nb.insert(r.norm);
  if (na != nb) throw Error(Errc::mismatched_norms, a.representation + " vs " + b.representation);
  std::map<std::string, std::vector<double>> diffs;
  std::set<std::string> cats;
  for (const auto& ra : a.results) {
    const auto it = category_of.find(ra.norm);
    if (it == category_of.end()) throw Error(Errc::unmapped_norm, ra.norm);
    cats.insert(it->second);
    const ProbeResult* rb = b.find(ra.norm);
    if (ra.skipped || rb->skipped) continue;
    if (ra.fold_hash != rb->fold_hash || ra.n_samples != rb->n_samples)
      throw Error(Errc::mismatched_norms, ra.norm + ": profiles were not computed on identical folds");
    diffs[it->second].push_back(ra.mean_score - rb->mean_score);
  }
  DiffReport rep;
  rep.label_a = a.representation;
  rep.label_b = b.representation;
  for (const auto& c : cats) {
    CategoryDiff cd;
    cd.category = c;
    const auto it = diffs.find(c);
    if (it == diffs.end()) {
      rep.categories.push_back(cd);
      continue;
    }
    cd.n_norms = it->second.size();
    cd.median_diff = median(it->second);
    const auto nonzero = std::count_if(it->second.begin(), it->second.end(), [](double d) { return d != 0.0; });
    if (cd.n_norms >= 3 && nonzero >= 3) cd.test = wilcoxon_signed_rank(it->second);
    rep.categories.push_back(cd);
  }
  return rep;
}

inline std::string diff_report_csv(const DiffReport& r) {
  std::string s = "category,n_norms,median_diff,wilcoxon_stat,p_value\n";
  for (const auto& c : r.categories) {
    s += text::csv_field(c.category) + "," + std::to_string(c.n_norms) + ",";
    if (c.n_norms > 0) s += text::format_double(c.median_diff);
    s += ",";
    if (c.test) s += text::format_double(c.test->statistic);
    s += ",";
    if (c.test) s += text::format_double(c.test->p_value);
    s += "\n";
  }
  return s;
}

inline nlohmann::ordered_json diff_report_json(const DiffReport& r) {
  nlohmann::ordered_json j;
  j["a"] = r.label_a;
  j["b"] = r.label_b;
  auto& cats = j["categories"] = nlohmann::ordered_json::array();
  for (const auto& c : r.categories) {
    nlohmann::ordered_json e;
    e["category"] = c.category;
    e["n_norms"] = c.n_norms;
    e["median_diff"] = c.n_norms > 0 ? nlohmann::ordered_json(c.median_diff) : nlohmann::ordered_json(nullptr);
    e["wilcoxon_stat"] = c.test ? nlohmann::ordered_json(c.test->statistic) : nlohmann::ordered_json(nullptr);
    e["p_value"] = c.test ? nlohmann::ordered_json(c.test->p_value) : nlohmann::ordered_json(nullptr);
    e["exact"] = c.test ? nlohmann::ordered_json(c.test->exact) : nlohmann::ordered_json(nullptr);
    cats.push_back(std::move(e));
  }
  return j;
}

}  // namespace repsim
