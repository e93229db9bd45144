#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <optional>
#include <string>
#include <string_view>

#include "repsim/error.hpp"
#include "repsim/vocab_set.hpp"

namespace repsim {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

enum class DataType { text, behavior, brain };

constexpr std::string_view to_string(DataType t) {
  switch (t) {
    case DataType::text: return "text";
    case DataType::behavior: return "behavior";
    case DataType::brain: return "brain";
  }
  return "text";
}

inline std::optional<DataType> parse_data_type(std::string_view s) {
  if (s == "text") return DataType::text;
  if (s == "behavior") return DataType::behavior;
  if (s == "brain") return DataType::brain;
  return std::nullopt;
}

/// A word-indexed dense matrix. Row i holds the vector for vocab[i]; the
/// vocabulary is kept sorted so row order is canonical.
struct Representation {
  std::string name;
  DataType data_type = DataType::text;
  VocabSet vocab;
  Matrix matrix;

  Eigen::Index dim() const { return matrix.cols(); }
  std::size_t size() const { return vocab.size(); }

  auto row(const std::string& word) const {
    const auto i = vocab.index_of(word);
    if (!i) throw Error(Errc::out_of_range, "word not in " + name + ": " + word);
    return matrix.row(static_cast<Eigen::Index>(*i));
  }

  /// Throws unless the invariants hold.
  void validate() const {
    if (static_cast<std::size_t>(matrix.rows()) != vocab.size())
      throw Error(Errc::dimension_mismatch, name + ": row count differs from vocabulary size");
    if (matrix.cols() < 1 && !vocab.empty())
      throw Error(Errc::dimension_mismatch, name + ": dimension must be positive");
    for (std::size_t i = 1; i < vocab.size(); ++i)
      if (!(vocab[i - 1] < vocab[i])) throw Error(Errc::duplicate_word, name + ": " + vocab[i]);
    for (Eigen::Index r = 0; r < matrix.rows(); ++r)
      if (!matrix.row(r).allFinite())
        throw Error(Errc::non_finite, name + ": row " + vocab[static_cast<std::size_t>(r)]);
  }
};

/// Rows of `rep` for the words of `vocab`, in vocab order. Every word must be present.
inline Matrix gather_rows(const Representation& rep, const VocabSet& vocab) {
  Matrix out(static_cast<Eigen::Index>(vocab.size()), rep.matrix.cols());
  std::size_t j = 0;
  for (std::size_t i = 0; i < vocab.size(); ++i) {
    while (j < rep.vocab.size() && rep.vocab[j] < vocab[i]) ++j;
    if (j == rep.vocab.size() || rep.vocab[j] != vocab[i])
      throw Error(Errc::out_of_range, "word not in " + rep.name + ": " + vocab[i]);
    out.row(static_cast<Eigen::Index>(i)) = rep.matrix.row(static_cast<Eigen::Index>(j));
  }
  return out;
}

}  // namespace repsim
