#pragma once

// Vocabulary algebra: the base vocabulary that every representation is
// restricted to, per-representation subsetting, and token-mass coverage.

#include <filesystem>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "repsim/error.hpp"
#include "repsim/representation.hpp"
#include "repsim/text.hpp"
#include "repsim/vocab_set.hpp"

namespace repsim {

/// Word occurrence counts, e.g. from a subtitle corpus.
class FrequencyTable {
 public:
  FrequencyTable() = default;
  explicit FrequencyTable(std::map<std::string, double> counts) : counts_(std::move(counts)) {
    for (const auto& [w, c] : counts_) {
      if (!(c >= 0.0) || !std::isfinite(c)) throw Error(Errc::invalid_argument, "bad count for " + w);
      total_ += c;
    }
    if (!(total_ > 0.0)) throw Error(Errc::invalid_argument, "frequency table total must be positive");
  }

  double total() const noexcept { return total_; }
  const std::map<std::string, double>& counts() const noexcept { return counts_; }

  double count(const std::string& w) const {
    auto it = counts_.find(w);
    return it == counts_.end() ? 0.0 : it->second;
  }

  VocabSet vocab() const {
    std::vector<std::string> words;
    words.reserve(counts_.size());
    for (const auto& [w, c] : counts_) words.push_back(w);
    return VocabSet::from_sorted_unique(std::move(words));
  }

 private:
  std::map<std::string, double> counts_;
  double total_ = 0.0;
};

/// Reads "word,count" csv with a header row. Duplicate words are an error.
inline FrequencyTable load_frequency_table(const std::filesystem::path& path) {
  auto in = text::open_input(path);
  std::string line;
  if (!text::read_line(in, line)) throw Error(Errc::empty_table, path.string());
  std::map<std::string, double> counts;
  std::size_t lineno = 1;
  while (text::read_line(in, line)) {
    ++lineno;
    if (text::trim(line).empty()) continue;
    auto f = text::split_csv(line);
    double c = 0;
    if (f.size() != 2 || !text::parse_double(f[1], c))
      throw Error(Errc::malformed_line, path.string() + ":" + std::to_string(lineno));
    if (!counts.emplace(f[0], c).second) throw Error(Errc::duplicate_word, f[0]);
  }
  return FrequencyTable(std::move(counts));
}

/// (union of norm vocabularies) ∩ (union of behavior and brain vocabularies).
/// An empty result is returned as-is.
inline VocabSet build_base_vocabulary(std::span<const VocabSet> norm_vocabs,
                                      std::span<const VocabSet> behavior_vocabs,
                                      std::span<const VocabSet> brain_vocabs) {
  if (norm_vocabs.empty()) throw Error(Errc::invalid_argument, "no norm vocabularies");
  if (behavior_vocabs.empty() && brain_vocabs.empty())
    throw Error(Errc::invalid_argument, "no behavior or brain vocabularies");
  const VocabSet norms = union_all(norm_vocabs);
  const VocabSet targets = set_union(union_all(behavior_vocabs), union_all(brain_vocabs));
  return set_intersection(norms, targets);
}

inline Representation subset_representation(const Representation& rep, const VocabSet& base) {
  VocabSet kept = set_intersection(rep.vocab, base);
  if (kept.empty()) throw Error(Errc::empty_subset, rep.name + " shares no words with the base vocabulary");
  if (kept.size() == rep.vocab.size()) return rep;
  Representation out;
  out.name = rep.name;
  out.data_type = rep.data_type;
  out.matrix = gather_rows(rep, kept);
  out.vocab = std::move(kept);
  return out;
}

/// Fraction of total token mass covered by `vocab`.
inline double coverage(const VocabSet& vocab, const FrequencyTable& freq) {
  if (!(freq.total() > 0.0)) throw Error(Errc::invalid_argument, "frequency total must be positive");
  double covered = 0.0;
  for (const auto& w : vocab) covered += freq.count(w);
  return covered / freq.total();
}

inline VocabSet common_vocabulary(std::span<const VocabSet> vocabs) {
  if (vocabs.empty()) throw Error(Errc::invalid_argument, "common_vocabulary of an empty list");
  VocabSet acc = vocabs.front();
  for (std::size_t i = 1; i < vocabs.size(); ++i) acc = set_intersection(acc, vocabs[i]);
  return acc;
}

}  // namespace repsim
