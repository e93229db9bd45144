#pragma once

// Behavior-style representations built from raw behavioral data:
//  * PPMI reweighting of a cue-response count matrix followed by truncated SVD
//  * truncated SVD of an aggregated similarity-judgment matrix
//  * skip-gram with a full softmax over responses, trained on (cue, response) pairs

#include <Eigen/Dense>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <map>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "repsim/error.hpp"
#include "repsim/linalg.hpp"
#include "repsim/representation.hpp"
#include "repsim/rng.hpp"
#include "repsim/text.hpp"
#include "repsim/vocab_set.hpp"

namespace repsim {

struct CueResponseCounts {
  VocabSet cues;
  VocabSet responses;
  Eigen::MatrixXd counts;  // |cues| x |responses|

  double total() const { return counts.sum(); }

  void validate() const {
    if (static_cast<std::size_t>(counts.rows()) != cues.size() ||
        static_cast<std::size_t>(counts.cols()) != responses.size())
      throw Error(Errc::dimension_mismatch, "count matrix shape differs from cue/response vocabularies");
    if (!counts.allFinite() || (counts.array() < 0).any())
      throw Error(Errc::invalid_argument, "counts must be finite and nonnegative");
    if (!(total() > 0)) throw Error(Errc::degenerate_input, "all-zero count matrix");
  }
};

/// Reads "cue,response,count" csv (header row required); repeated pairs add up.
inline CueResponseCounts load_cue_response_counts(const std::filesystem::path& path) {
  auto in = text::open_input(path);
  std::string line;
  if (!text::read_line(in, line)) throw Error(Errc::empty_table, path.string());
  std::map<std::pair<std::string, std::string>, double> acc;
  std::vector<std::string> cue_words, resp_words;
  std::size_t lineno = 1;
  while (text::read_line(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    auto f = text::split_csv(line);
    double c = 0;
    if (f.size() != 3 || !text::parse_double(f[2], c) || !std::isfinite(c) || c < 0)
      throw Error(Errc::malformed_line, path.string() + ":" + std::to_string(lineno));
    cue_words.push_back(f[0]);
    resp_words.push_back(f[1]);
    acc[{f[0], f[1]}] += c;
  }
  CueResponseCounts out;
  out.cues = VocabSet(std::move(cue_words));
  out.responses = VocabSet(std::move(resp_words));
  out.counts = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(out.cues.size()),
                                     static_cast<Eigen::Index>(out.responses.size()));
  for (const auto& [key, c] : acc)
    out.counts(static_cast<Eigen::Index>(*out.cues.index_of(key.first)),
               static_cast<Eigen::Index>(*out.responses.index_of(key.second))) += c;
  out.validate();
  return out;
}

/// max(0, ln[p(w,c) / (p(w) p(c))]) with probabilities from the joint counts.
/// Zero-count cells map to 0.
inline Eigen::MatrixXd ppmi(const CueResponseCounts& counts) {
  counts.validate();
  const Eigen::MatrixXd& C = counts.counts;
  const double total = C.sum();
  const Eigen::VectorXd rows = C.rowwise().sum();
  const Eigen::RowVectorXd cols = C.colwise().sum();
  Eigen::MatrixXd out = Eigen::MatrixXd::Zero(C.rows(), C.cols());
  for (Eigen::Index j = 0; j < C.cols(); ++j)
    for (Eigen::Index i = 0; i < C.rows(); ++i) {
      const double c = C(i, j);
      if (c <= 0) continue;
      const double pmi = std::log(c * total / (rows(i) * cols(j)));
      out(i, j) = pmi > 0 ? pmi : 0.0;
    }
  return out;
}

inline constexpr Eigen::Index kDefaultSvdDims = 300;

/// Rows of U_k diag(s_k); U Sigma keeps the Gram geometry of the input rows.
/// k is capped at the numerical rank of A (at least 1).
inline Eigen::MatrixXd svd_embedding(const Eigen::MatrixXd& A, Eigen::Index k) {
  if (k < 1) throw Error(Errc::out_of_range, "k must be >= 1");
  const auto svd = truncated_svd(A, std::min(k, std::max<Eigen::Index>(1, numerical_rank(A))));
  return svd.U * svd.s.asDiagonal();
}

inline Representation ppmi_svd_embed(const CueResponseCounts& counts, Eigen::Index k = kDefaultSvdDims,
                                     std::string name = "ppmi_svd") {
  Representation rep;
  rep.name = std::move(name);
  rep.data_type = DataType::behavior;
  rep.vocab = counts.cues;
  rep.matrix = svd_embedding(ppmi(counts), k);
  return rep;
}

// ---------------------------------------------------------------------------
// Similarity judgments

struct SimilarityJudgment {
  std::string word1, word2;
  double value = 0;
};

struct SimilarityJudgments {
  std::string name;
  std::vector<SimilarityJudgment> pairs;
  double scale_min = 0;
  double scale_max = 1;
};

/// Reads "word1,word2,value,scale_min,scale_max"; one file is one dataset, and
/// the scale bounds must agree on every row.
inline SimilarityJudgments load_similarity_judgments(const std::filesystem::path& path) {
  auto in = text::open_input(path);
  std::string line;
  if (!text::read_line(in, line)) throw Error(Errc::empty_table, path.string());
  SimilarityJudgments ds;
  ds.name = path.stem().string();
  bool have_scale = false;
  std::size_t lineno = 1;
  while (text::read_line(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    const auto f = text::split_csv(line);
    const std::string where = path.string() + ":" + std::to_string(lineno);
    double v = 0, lo = 0, hi = 0;
    if (f.size() != 5 || !text::parse_double(f[2], v) || !text::parse_double(f[3], lo) || !text::parse_double(f[4], hi))
      throw Error(Errc::malformed_line, where);
    if (!have_scale) {
      ds.scale_min = lo;
      ds.scale_max = hi;
      have_scale = true;
    } else if (lo != ds.scale_min || hi != ds.scale_max) {
      throw Error(Errc::malformed_line, where + ": scale bounds differ from earlier rows");
    }
    ds.pairs.push_back({f[0], f[1], v});
  }
  if (ds.pairs.empty()) throw Error(Errc::empty_table, path.string());
  return ds;
}

/// Symmetric similarity matrix with an observation mask.
struct SimilarityMatrix {
  VocabSet vocab;
  Eigen::MatrixXd values;
  Eigen::Matrix<bool, Eigen::Dynamic, Eigen::Dynamic> observed;

  std::size_t missing_pairs() const {
    std::size_t m = 0;
    for (Eigen::Index i = 0; i < values.rows(); ++i)
      for (Eigen::Index j = i + 1; j < values.cols(); ++j)
        if (!observed(i, j)) ++m;
    return m;
  }
};

/// Each dataset is min-max normalized to [0,1] with its declared scale bounds;
/// a pair seen several times within one dataset is averaged there first, and
/// overlapping pairs are then averaged across datasets. The diagonal is 1.
inline SimilarityMatrix aggregate_similarity(std::span<const SimilarityJudgments> datasets, const VocabSet& vocab) {
  if (datasets.empty()) throw Error(Errc::invalid_argument, "aggregate_similarity needs at least one dataset");
  const auto n = static_cast<Eigen::Index>(vocab.size());
  Eigen::MatrixXd sum = Eigen::MatrixXd::Zero(n, n);
  Eigen::MatrixXd count = Eigen::MatrixXd::Zero(n, n);
  for (const auto& ds : datasets) {
    if (!(ds.scale_max > ds.scale_min)) throw Error(Errc::invalid_argument, ds.name + ": scale_max must exceed scale_min");
    Eigen::MatrixXd ds_sum = Eigen::MatrixXd::Zero(n, n);
    Eigen::MatrixXd ds_count = Eigen::MatrixXd::Zero(n, n);
    for (const auto& p : ds.pairs) {
      if (!std::isfinite(p.value) || p.value < ds.scale_min || p.value > ds.scale_max)
        throw Error(Errc::out_of_range, ds.name + ": value outside scale for " + p.word1 + "," + p.word2);
      const auto a = vocab.index_of(p.word1);
      const auto b = vocab.index_of(p.word2);
      if (!a || !b || *a == *b) continue;
      const auto i = static_cast<Eigen::Index>(std::min(*a, *b));
      const auto j = static_cast<Eigen::Index>(std::max(*a, *b));
      ds_sum(i, j) += (p.value - ds.scale_min) / (ds.scale_max - ds.scale_min);
      ds_count(i, j) += 1;
    }
    for (Eigen::Index i = 0; i < n; ++i)
      for (Eigen::Index j = i + 1; j < n; ++j)
        if (ds_count(i, j) > 0) {
          sum(i, j) += ds_sum(i, j) / ds_count(i, j);
          count(i, j) += 1;
        }
  }
  SimilarityMatrix out;
  out.vocab = vocab;
  out.values = Eigen::MatrixXd::Zero(n, n);
  out.observed = Eigen::Matrix<bool, Eigen::Dynamic, Eigen::Dynamic>::Constant(n, n, false);
  for (Eigen::Index i = 0; i < n; ++i) {
    out.values(i, i) = 1.0;
    out.observed(i, i) = true;
    for (Eigen::Index j = i + 1; j < n; ++j)
      if (count(i, j) > 0) {
        out.values(i, j) = out.values(j, i) = sum(i, j) / count(i, j);
        out.observed(i, j) = out.observed(j, i) = true;
      }
  }
  for (Eigen::Index i = 0; i < n; ++i) {
    bool any = false;
    for (Eigen::Index j = 0; j < n && !any; ++j) any = j != i && out.observed(i, j);
    if (!any) throw Error(Errc::degenerate_input, "no similarity pairs for " + vocab[static_cast<std::size_t>(i)]);
  }
  return out;
}

struct SimilarityEmbedding {
  Representation rep;
  std::size_t imputed_pairs = 0;
};

/// Missing off-diagonal entries take the mean of the observed off-diagonal
/// entries; the completed matrix is embedded as rows of U_k diag(s_k).
inline SimilarityEmbedding similarity_svd_embed(const SimilarityMatrix& S, Eigen::Index k,
                                                std::string name = "similarity_svd") {
  const Eigen::Index n = S.values.rows();
  double obs_sum = 0;
  std::size_t obs_n = 0;
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = i + 1; j < n; ++j)
      if (S.observed(i, j)) {
        obs_sum += S.values(i, j);
        ++obs_n;
      }
  const double fill = obs_n ? obs_sum / static_cast<double>(obs_n) : 0.0;
  Eigen::MatrixXd full = S.values;
  std::size_t imputed = 0;
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = i + 1; j < n; ++j)
      if (!S.observed(i, j)) {
        full(i, j) = full(j, i) = fill;
        ++imputed;
      }
  SimilarityEmbedding out;
  out.rep.name = std::move(name);
  out.rep.data_type = DataType::behavior;
  out.rep.vocab = S.vocab;
  out.rep.matrix = svd_embedding(full, k);
  out.imputed_pairs = imputed;
  return out;
}

// ---------------------------------------------------------------------------
// Skip-gram with full softmax

struct SgConfig {
  Eigen::Index dim = 100;
  int epochs = 5;
  double learning_rate = 0.025;
  std::uint64_t seed = 1;
};

/// Cue (input) and response (output) embedding tables.
struct SgModel {
  VocabSet cues;
  VocabSet responses;
  Eigen::MatrixXd input;   // |cues| x dim
  Eigen::MatrixXd output;  // |responses| x dim
};

struct SgPairs {
  std::vector<std::uint32_t> cue;
  std::vector<std::uint32_t> response;
  std::size_t size() const { return cue.size(); }
};

inline SgPairs index_pairs(const SgModel& m, std::span<const std::pair<std::string, std::string>> pairs) {
  SgPairs out;
  out.cue.reserve(pairs.size());
  out.response.reserve(pairs.size());
  for (const auto& [c, r] : pairs) {
    const auto ci = m.cues.index_of(c);
    const auto ri = m.responses.index_of(r);
    if (!ci || !ri) throw Error(Errc::out_of_range, "pair (" + c + ", " + r + ") outside model vocabulary");
    out.cue.push_back(static_cast<std::uint32_t>(*ci));
    out.response.push_back(static_cast<std::uint32_t>(*ri));
  }
  return out;
}

/// softmax(output * input[cue]) over all responses.
inline Eigen::VectorXd sg_response_distribution(const SgModel& m, Eigen::Index cue) {
  Eigen::VectorXd z = m.output * m.input.row(cue).transpose();
  z.array() -= z.maxCoeff();
  z = z.array().exp();
  return z / z.sum();
}

/// Summed negative log-likelihood over the pairs.
inline double sg_total_loss(const SgModel& m, const SgPairs& pairs) {
  double loss = 0;
  for (std::size_t t = 0; t < pairs.size(); ++t) {
    const Eigen::VectorXd z = m.output * m.input.row(pairs.cue[t]).transpose();
    const double mx = z.maxCoeff();
    loss += mx + std::log((z.array() - mx).exp().sum()) - z(pairs.response[t]);
  }
  return loss;
}

inline double sg_mean_loss(const SgModel& m, const SgPairs& pairs) {
  if (pairs.size() == 0) throw Error(Errc::degenerate_input, "empty pair list");
  return sg_total_loss(m, pairs) / static_cast<double>(pairs.size());
}

/// Analytic gradient of sg_total_loss.
inline void sg_gradient(const SgModel& m, const SgPairs& pairs, Eigen::MatrixXd& g_input, Eigen::MatrixXd& g_output) {
  g_input = Eigen::MatrixXd::Zero(m.input.rows(), m.input.cols());
  g_output = Eigen::MatrixXd::Zero(m.output.rows(), m.output.cols());
  for (std::size_t t = 0; t < pairs.size(); ++t) {
    const auto c = static_cast<Eigen::Index>(pairs.cue[t]);
    Eigen::VectorXd err = sg_response_distribution(m, c);
    err(pairs.response[t]) -= 1.0;
    g_input.row(c) += (m.output.transpose() * err).transpose();
    g_output += err * m.input.row(c);
  }
}

struct SgResult {
  Representation input_rep;
  Representation output_rep;
  double initial_loss = 0;
  std::vector<double> epoch_loss;  // mean loss over all pairs after each epoch
};

/// Plain SGD over shuffled pairs with a learning rate decaying linearly from
/// `learning_rate` to 1e-4 of it. Both tables start uniform in
/// (-0.5/dim, 0.5/dim). Deterministic given the seed.
inline SgResult sg_softmax_train(std::span<const std::pair<std::string, std::string>> pairs, const SgConfig& cfg,
                                 std::string name = "sg_softmax") {
  if (pairs.empty()) throw Error(Errc::degenerate_input, "empty pair list");
  if (cfg.dim < 1) throw Error(Errc::invalid_argument, "dim must be >= 1");
  if (cfg.epochs < 0 || !(cfg.learning_rate > 0)) throw Error(Errc::invalid_argument, "bad epochs or learning rate");
  std::vector<std::string> cw, rw;
  for (const auto& [c, r] : pairs) {
    cw.push_back(c);
    rw.push_back(r);
  }
  SgModel m;
  m.cues = VocabSet(std::move(cw));
  m.responses = VocabSet(std::move(rw));
  const auto idx = index_pairs(m, pairs);

  Rng init(mix_seed(cfg.seed, 0));
  const double half = 0.5 / static_cast<double>(cfg.dim);
  m.input.resize(static_cast<Eigen::Index>(m.cues.size()), cfg.dim);
  m.output.resize(static_cast<Eigen::Index>(m.responses.size()), cfg.dim);
  for (Eigen::Index i = 0; i < m.input.rows(); ++i)
    for (Eigen::Index j = 0; j < cfg.dim; ++j) m.input(i, j) = init.uniform(-half, half);
  for (Eigen::Index i = 0; i < m.output.rows(); ++i)
    for (Eigen::Index j = 0; j < cfg.dim; ++j) m.output(i, j) = init.uniform(-half, half);

  SgResult res;
  res.initial_loss = sg_mean_loss(m, idx);
  Rng order_rng(mix_seed(cfg.seed, 1));
  const double total_steps = static_cast<double>(idx.size()) * cfg.epochs;
  double step = 0;
  Eigen::VectorXd grad_in(cfg.dim);
  for (int e = 0; e < cfg.epochs; ++e) {
    const auto order = order_rng.permutation(idx.size());
    for (std::size_t t : order) {
      const double lr = cfg.learning_rate * std::max(1e-4, 1.0 - step / total_steps);
      step += 1;
      const auto c = static_cast<Eigen::Index>(idx.cue[t]);
      Eigen::VectorXd err = sg_response_distribution(m, c);
      err(idx.response[t]) -= 1.0;
      grad_in.noalias() = m.output.transpose() * err;
      m.output.noalias() -= lr * err * m.input.row(c);
      m.input.row(c) -= lr * grad_in.transpose();
    }
    res.epoch_loss.push_back(sg_mean_loss(m, idx));
  }

  res.input_rep = {name + "_input", DataType::behavior, m.cues, std::move(m.input)};
  res.output_rep = {name + "_output", DataType::behavior, m.responses, std::move(m.output)};
  return res;
}

}  // namespace repsim
