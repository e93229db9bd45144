#pragma once

#include <algorithm>
#include <initializer_list>
#include <iterator>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace repsim {

/// Sorted, deduplicated set of words. Words are opaque byte strings: no case
/// folding or Unicode normalization is applied.
class VocabSet {
 public:
  VocabSet() = default;
  VocabSet(std::initializer_list<std::string> words) : VocabSet(std::vector<std::string>(words)) {}
  explicit VocabSet(std::vector<std::string> words) : words_(std::move(words)) {
    std::sort(words_.begin(), words_.end());
    words_.erase(std::unique(words_.begin(), words_.end()), words_.end());
  }

  /// Caller guarantees `words` is already strictly increasing.
  static VocabSet from_sorted_unique(std::vector<std::string> words) {
    VocabSet v;
    v.words_ = std::move(words);
    return v;
  }

  std::size_t size() const noexcept { return words_.size(); }
  bool empty() const noexcept { return words_.empty(); }
  const std::string& operator[](std::size_t i) const { return words_[i]; }
  const std::vector<std::string>& words() const noexcept { return words_; }
  auto begin() const noexcept { return words_.begin(); }
  auto end() const noexcept { return words_.end(); }

  bool contains(const std::string& w) const { return std::binary_search(words_.begin(), words_.end(), w); }

  std::optional<std::size_t> index_of(const std::string& w) const {
    auto it = std::lower_bound(words_.begin(), words_.end(), w);
    if (it == words_.end() || *it != w) return std::nullopt;
    return static_cast<std::size_t>(it - words_.begin());
  }

  bool is_subset_of(const VocabSet& other) const {
    return std::includes(other.words_.begin(), other.words_.end(), words_.begin(), words_.end());
  }

  friend bool operator==(const VocabSet&, const VocabSet&) = default;

  friend VocabSet set_union(const VocabSet& a, const VocabSet& b) {
    std::vector<std::string> out;
    out.reserve(a.size() + b.size());
    std::set_union(a.begin(), a.end(), b.begin(), b.end(), std::back_inserter(out));
    return from_sorted_unique(std::move(out));
  }

  friend VocabSet set_intersection(const VocabSet& a, const VocabSet& b) {
    std::vector<std::string> out;
    std::set_intersection(a.begin(), a.end(), b.begin(), b.end(), std::back_inserter(out));
    return from_sorted_unique(std::move(out));
  }

 private:
  std::vector<std::string> words_;
};

inline VocabSet union_all(std::span<const VocabSet> sets) {
  VocabSet acc;
  for (const auto& s : sets) acc = set_union(acc, s);
  return acc;
}

}  // namespace repsim
