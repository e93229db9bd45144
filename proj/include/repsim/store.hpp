#pragma once

// On-disk formats for representations and norm tables.
//
//   header-text embeddings   "V D" on the first line, then V lines "word v1 ... vD"
//   csv embeddings           header "word,d0,...,d{D-1}", one row per word
//   norm table               csv "word,value"
//   norm manifest            YAML, a top-level `norms:` list (see load_norm_manifest)

#include <yaml-cpp/yaml.h>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <numeric>
#include <optional>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "repsim/error.hpp"
#include "repsim/representation.hpp"
#include "repsim/text.hpp"
#include "repsim/vocab_set.hpp"

namespace repsim {

enum class EmbeddingFormat { header_text, csv };

inline std::optional<EmbeddingFormat> parse_embedding_format(std::string_view s) {
  if (s == "header-text") return EmbeddingFormat::header_text;
  if (s == "csv") return EmbeddingFormat::csv;
  return std::nullopt;
}

namespace detail {

/// Sorts rows by word and rejects duplicates.
inline Representation assemble(std::string name, DataType type, std::vector<std::string> words,
                               std::vector<std::vector<double>> rows, std::size_t dim) {
  std::vector<std::size_t> order(words.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return words[a] < words[b]; });
  Representation rep;
  rep.name = std::move(name);
  rep.data_type = type;
  rep.matrix.resize(static_cast<Eigen::Index>(words.size()), static_cast<Eigen::Index>(dim));
  std::vector<std::string> sorted;
  sorted.reserve(words.size());
  for (std::size_t r = 0; r < order.size(); ++r) {
    const auto src = order[r];
    if (r > 0 && words[src] == sorted.back()) throw Error(Errc::duplicate_word, words[src]);
    sorted.push_back(words[src]);
    for (std::size_t c = 0; c < dim; ++c)
      rep.matrix(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = rows[src][c];
  }
  rep.vocab = VocabSet::from_sorted_unique(std::move(sorted));
  return rep;
}

inline double parse_value(std::string_view tok, const std::string& where, const std::string& word) {
  double v = 0;
  if (!text::parse_double(tok, v)) throw Error(Errc::malformed_line, where + ": bad number in row " + word);
  if (!std::isfinite(v)) throw Error(Errc::non_finite, where + ": row " + word);
  return v;
}

}  // namespace detail

/// Loads and validates an embedding file. Rows come back sorted by word.
inline Representation load_embeddings(const std::filesystem::path& path, EmbeddingFormat format,
                                      std::string name = {}, DataType type = DataType::text) {
  if (name.empty()) name = path.stem().string();
  auto in = text::open_input(path);
  const std::string file = path.string();
  std::string line;
  std::vector<std::string> words;
  std::vector<std::vector<double>> rows;
  std::size_t dim = 0;
  std::size_t lineno = 1;

  if (!text::read_line(in, line)) throw Error(Errc::malformed_line, file + ": empty file");

  if (format == EmbeddingFormat::header_text) {
    const auto head = text::split_ws(line);
    std::size_t count = 0;
    if (head.size() != 2 || !text::parse_size(head[0], count) || !text::parse_size(head[1], dim) || dim == 0)
      throw Error(Errc::malformed_line, file + ":1: expected header \"V D\"");
    while (text::read_line(in, line)) {
      ++lineno;
      const auto toks = text::split_ws(line);
      if (toks.empty()) continue;
      const std::string word(toks[0]);
      const std::string where = file + ":" + std::to_string(lineno);
      if (toks.size() != dim + 1)
        throw Error(Errc::dimension_mismatch, where + ": row \"" + word + "\" has " + std::to_string(toks.size() - 1) +
                                                  " values, expected " + std::to_string(dim));
      std::vector<double> row(dim);
      for (std::size_t c = 0; c < dim; ++c) row[c] = detail::parse_value(toks[c + 1], where, word);
      words.push_back(word);
      rows.push_back(std::move(row));
    }
    if (words.size() != count)
      throw Error(Errc::dimension_mismatch,
                  file + ": header declares " + std::to_string(count) + " rows, found " + std::to_string(words.size()));
  } else {
    const auto header = text::split_csv(line);
    if (header.size() < 2 || header[0] != "word") throw Error(Errc::malformed_line, file + ":1: expected word,d0,...");
    dim = header.size() - 1;
    while (text::read_line(in, line)) {
      ++lineno;
      if (line.empty()) continue;
      const auto f = text::split_csv(line);
      const std::string where = file + ":" + std::to_string(lineno);
      if (f.size() != dim + 1)
        throw Error(Errc::dimension_mismatch, where + ": row \"" + f[0] + "\" has " + std::to_string(f.size() - 1) +
                                                  " values, expected " + std::to_string(dim));
      std::vector<double> row(dim);
      for (std::size_t c = 0; c < dim; ++c) row[c] = detail::parse_value(f[c + 1], where, f[0]);
      words.push_back(f[0]);
      rows.push_back(std::move(row));
    }
  }
  auto rep = detail::assemble(std::move(name), type, std::move(words), std::move(rows), dim);
  rep.validate();
  return rep;
}

/// Writes values in shortest round-trip form, so csv output reloads bit-exactly.
inline void write_embeddings(const Representation& rep, const std::filesystem::path& path, EmbeddingFormat format) {
  auto out = text::open_output(path);
  const auto n = rep.matrix.rows();
  const auto d = rep.matrix.cols();
  if (format == EmbeddingFormat::header_text) {
    out << n << ' ' << d << '\n';
    for (Eigen::Index r = 0; r < n; ++r) {
      out << rep.vocab[static_cast<std::size_t>(r)];
      for (Eigen::Index c = 0; c < d; ++c) out << ' ' << text::format_double(rep.matrix(r, c));
      out << '\n';
    }
  } else {
    out << "word";
    for (Eigen::Index c = 0; c < d; ++c) out << ",d" << c;
    out << '\n';
    for (Eigen::Index r = 0; r < n; ++r) {
      out << text::csv_field(rep.vocab[static_cast<std::size_t>(r)]);
      for (Eigen::Index c = 0; c < d; ++c) out << ',' << text::format_double(rep.matrix(r, c));
      out << '\n';
    }
  }
  if (!out) throw Error(Errc::invalid_argument, "write failed: " + path.string());
}

// ---------------------------------------------------------------------------
// Norms

enum class NormKind { numeric, binary, multiclass };

constexpr std::string_view to_string(NormKind k) {
  switch (k) {
    case NormKind::numeric: return "numeric";
    case NormKind::binary: return "binary";
    case NormKind::multiclass: return "multiclass";
  }
  return "numeric";
}

inline std::optional<NormKind> parse_norm_kind(std::string_view s) {
  if (s == "numeric") return NormKind::numeric;
  if (s == "binary") return NormKind::binary;
  if (s == "multiclass") return NormKind::multiclass;
  return std::nullopt;
}

struct ManifestEntry {
  std::filesystem::path file;  // resolved against the manifest's directory
  std::string name;
  std::string category;
  NormKind kind = NormKind::numeric;
  std::vector<std::string> labels;  // categorical only
  int line = 0;                     // 1-based line in the manifest
};

/// A word -> value table. Categorical values are stored as indices into `labels`.
struct NormTable {
  std::string name;
  std::string category;
  NormKind kind = NormKind::numeric;
  std::vector<std::string> labels;
  VocabSet vocab;
  std::vector<double> values;  // aligned with vocab
  std::size_t dropped_rows = 0;

  bool categorical() const noexcept { return kind != NormKind::numeric; }

  std::optional<double> value(const std::string& word) const {
    const auto i = vocab.index_of(word);
    if (!i) return std::nullopt;
    return values[*i];
  }
};

inline bool is_missing_token(std::string_view s) {
  s = text::trim(s);
  return s.empty() || s == "NA" || s == "NaN" || s == "nan" || s == "NAN" || s == "null" || s == "N/A";
}

inline NormTable load_norm_table(const std::filesystem::path& path, const ManifestEntry& entry) {
  auto in = text::open_input(path);
  const std::string file = path.string();
  std::string line;
  if (!text::read_line(in, line)) throw Error(Errc::empty_table, file);
  const auto header = text::split_csv(line);
  if (header.size() != 2 || header[0] != "word" || header[1] != "value")
    throw Error(Errc::malformed_line, file + ":1: expected header word,value");

  NormTable t;
  t.name = entry.name;
  t.category = entry.category;
  t.kind = entry.kind;
  t.labels = entry.labels;
  if (t.categorical()) {
    if (t.labels.size() < 2) throw Error(Errc::invalid_argument, entry.name + ": categorical norm needs >= 2 labels");
    if (t.kind == NormKind::binary && t.labels.size() != 2)
      throw Error(Errc::invalid_argument, entry.name + ": binary norm needs exactly 2 labels");
  }

  std::vector<std::pair<std::string, double>> rows;
  std::size_t lineno = 1;
  while (text::read_line(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    auto f = text::split_csv(line);
    const std::string where = file + ":" + std::to_string(lineno);
    if (f.size() != 2) throw Error(Errc::malformed_line, where);
    if (is_missing_token(f[1])) {
      ++t.dropped_rows;
      continue;
    }
    double v = 0;
    if (t.categorical()) {
      const std::string label(text::trim(f[1]));
      auto it = std::find(t.labels.begin(), t.labels.end(), label);
      if (it == t.labels.end()) throw Error(Errc::unknown_label, where + ": " + label);
      v = static_cast<double>(it - t.labels.begin());
    } else {
      if (!text::parse_double(f[1], v)) throw Error(Errc::malformed_line, where + ": bad value");
      if (!std::isfinite(v)) {
        ++t.dropped_rows;
        continue;
      }
    }
    rows.emplace_back(std::move(f[0]), v);
  }
  if (rows.empty()) throw Error(Errc::empty_table, file + ": no usable rows");
  std::sort(rows.begin(), rows.end(), [](const auto& a, const auto& b) { return a.first < b.first; });
  std::vector<std::string> words;
  words.reserve(rows.size());
  t.values.reserve(rows.size());
  for (auto& [w, v] : rows) {
    if (!words.empty() && words.back() == w) throw Error(Errc::duplicate_word, file + ": " + w);
    words.push_back(std::move(w));
    t.values.push_back(v);
  }
  t.vocab = VocabSet::from_sorted_unique(std::move(words));
  return t;
}

inline NormTable load_norm_table(const ManifestEntry& entry) { return load_norm_table(entry.file, entry); }

/// Manifest schema:
///
///   norms:
///     - file: valence.csv        # relative to the manifest
///       name: valence
///       category: Valence
///       kind: numeric            # numeric | binary | multiclass
///     - file: animacy.csv
///       name: animacy
///       category: Animacy
///       kind: binary
///       labels: [animate, inanimate]
inline std::vector<ManifestEntry> load_norm_manifest(const std::filesystem::path& path) {
  if (!std::filesystem::exists(path)) throw Error(Errc::file_not_found, path.string());
  YAML::Node root;
  try {
    root = YAML::LoadFile(path.string());
  } catch (const YAML::Exception& e) {
    throw Error(Errc::malformed_line, path.string() + ":" + std::to_string(e.mark.line + 1) + ": " + e.msg);
  }
  const auto norms = root["norms"];
  if (!norms || !norms.IsSequence()) throw Error(Errc::missing_key, path.string() + ": top-level `norms` list");
  const auto base = path.parent_path();
  std::vector<ManifestEntry> out;
  std::set<std::string> names;
  for (const auto& node : norms) {
    const int line = node.Mark().line + 1;
    const std::string where = path.string() + ":" + std::to_string(line);
    auto require = [&](const char* key) {
      const auto v = node[key];
      if (!v || !v.IsScalar()) throw Error(Errc::missing_key, where + ": norm entry missing \"" + key + "\"");
      return v.as<std::string>();
    };
    ManifestEntry e;
    e.line = line;
    e.file = base / require("file");
    e.name = require("name");
    if (!names.insert(e.name).second) throw Error(Errc::config_error, where + ": duplicate norm name \"" + e.name + "\"");
    e.category = require("category");
    const auto kind = parse_norm_kind(require("kind"));
    if (!kind) throw Error(Errc::config_error, where + ": kind must be numeric, binary or multiclass");
    e.kind = *kind;
    if (const auto labels = node["labels"]) {
      if (!labels.IsSequence()) throw Error(Errc::config_error, where + ": labels must be a list");
      for (const auto& l : labels) e.labels.push_back(l.as<std::string>());
    }
    if (e.kind != NormKind::numeric && e.labels.size() < 2)
      throw Error(Errc::missing_key, where + ": categorical norm \"" + e.name + "\" needs labels");
    if (!std::filesystem::exists(e.file)) throw Error(Errc::file_not_found, where + ": " + e.file.string());
    out.push_back(std::move(e));
  }
  return out;
}

}  // namespace repsim
