#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>

#include "repsim/text.hpp"
#include "repsim/train.hpp"

using namespace repsim;

namespace {

CueResponseCounts counts_of(const Eigen::MatrixXd& c) {
  CueResponseCounts out;
  std::vector<std::string> cues, resp;
  for (Eigen::Index i = 0; i < c.rows(); ++i) cues.push_back("c" + std::to_string(i));
  for (Eigen::Index j = 0; j < c.cols(); ++j) resp.push_back("r" + std::to_string(j));
  out.cues = VocabSet(cues);
  out.responses = VocabSet(resp);
  out.counts = c;
  return out;
}

Eigen::MatrixXd cosines(const Eigen::MatrixXd& m) {
  Eigen::MatrixXd n = m;
  for (Eigen::Index i = 0; i < n.rows(); ++i) n.row(i).normalize();
  return n * n.transpose();
}

/// Best rank-k approximation of A A^T from a symmetric eigensolve.
Eigen::MatrixXd best_gram(const Eigen::MatrixXd& A, Eigen::Index k) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(A * A.transpose());
  const Eigen::Index n = A.rows();
  Eigen::MatrixXd g = Eigen::MatrixXd::Zero(n, n);
  for (Eigen::Index c = n - k; c < n; ++c)
    g += eig.eigenvalues()(c) * eig.eigenvectors().col(c) * eig.eigenvectors().col(c).transpose();
  return g;
}

}  // namespace

TEST(Ppmi, Examples) {
  EXPECT_TRUE(ppmi(counts_of(Eigen::MatrixXd::Ones(2, 2))).isZero(1e-15));
  const auto diag = ppmi(counts_of(Eigen::MatrixXd::Identity(2, 2)));
  EXPECT_NEAR(diag(0, 0), std::log(2.0), 1e-15);
  EXPECT_NEAR(diag(1, 1), std::log(2.0), 1e-15);
  EXPECT_EQ(diag(0, 1), 0.0);
  Eigen::MatrixXd c(2, 2);
  c << 3, 1, 1, 3;
  const auto p = ppmi(counts_of(c));
  EXPECT_NEAR(p(0, 0), std::log(1.5), 1e-15);
  EXPECT_EQ(p(0, 1), 0.0);
  EXPECT_THROW(ppmi(counts_of(Eigen::MatrixXd::Zero(2, 2))), Error);
}

TEST(PpmiSvd, FullRankPreservesCosines) {
  Eigen::MatrixXd c = 5 * Eigen::MatrixXd::Identity(4, 4);
  c(0, 1) = c(1, 2) = c(2, 3) = 1;
  const auto counts = counts_of(c);
  const auto rep = ppmi_svd_embed(counts, 4);
  EXPECT_EQ(rep.dim(), 4);
  EXPECT_TRUE(cosines(rep.matrix).isApprox(cosines(ppmi(counts)), 1e-8));
}

TEST(PpmiSvd, IdenticalRowsGiveIdenticalEmbeddings) {
  Eigen::MatrixXd c(3, 3);
  c << 4, 1, 0, 4, 1, 0, 0, 1, 5;
  const auto rep = ppmi_svd_embed(counts_of(c), 2);
  EXPECT_LE((rep.matrix.row(0) - rep.matrix.row(1)).norm(), 1e-12);
}

TEST(PpmiSvd, GramMatchesBestRankK) {
  Rng rng(21);
  Eigen::MatrixXd c(20, 30);
  for (Eigen::Index i = 0; i < c.size(); ++i) c(i) = static_cast<double>(rng.below(6));
  const auto counts = counts_of(c);
  const auto rep = ppmi_svd_embed(counts, 5);
  const Eigen::MatrixXd g = rep.matrix * rep.matrix.transpose();
  const Eigen::MatrixXd ref = best_gram(ppmi(counts), 5);
  EXPECT_LE((g - ref).norm(), 1e-8 * ref.norm());
}

TEST(PpmiSvd, DimensionCappedAtRank) {
  const auto rep = ppmi_svd_embed(counts_of(Eigen::MatrixXd::Identity(3, 3)), 300);
  EXPECT_EQ(rep.dim(), 3);
  EXPECT_EQ(rep.vocab.size(), 3u);
}

TEST(CueResponse, LoadsAndSumsRepeats) {
  const auto dir = std::filesystem::temp_directory_path() / "repsim_train_counts";
  std::filesystem::create_directories(dir);
  text::open_output(dir / "c.csv") << "cue,response,count\na,x,1\na,x,2\nb,y,4\n";
  const auto c = load_cue_response_counts(dir / "c.csv");
  EXPECT_EQ(c.cues.size(), 2u);
  EXPECT_EQ(c.counts(0, 0), 3.0);
  EXPECT_EQ(c.counts(1, 1), 4.0);
  text::open_output(dir / "bad.csv") << "cue,response,count\na,x,-1\n";
  EXPECT_THROW(load_cue_response_counts(dir / "bad.csv"), Error);
  std::filesystem::remove_all(dir);
}

TEST(Similarity, NormalizeAndAverage) {
  const VocabSet v{"a", "b", "c"};
  SimilarityJudgments d1{"d1", {{"a", "b", 5}, {"b", "c", 4}}, 0, 10};
  SimilarityJudgments d2{"d2", {{"a", "b", 0.6}, {"a", "c", 0.3}}, 0, 1};
  const std::vector<SimilarityJudgments> one{d1};
  EXPECT_DOUBLE_EQ(aggregate_similarity(one, v).values(0, 1), 0.5);
  d1.pairs[0].value = 4;  // 0.4 after normalization
  const std::vector<SimilarityJudgments> both{d1, d2};
  const auto s = aggregate_similarity(both, v);
  EXPECT_DOUBLE_EQ(s.values(0, 1), 0.5);
  EXPECT_DOUBLE_EQ(s.values(1, 0), 0.5);
  EXPECT_DOUBLE_EQ(s.values(1, 2), 0.4);
  EXPECT_DOUBLE_EQ(s.values(0, 2), 0.3);
  EXPECT_EQ(s.values(2, 2), 1.0);
  EXPECT_EQ(s.missing_pairs(), 0u);
}

TEST(Similarity, OutOfScaleRejected) {
  const std::vector<SimilarityJudgments> d{{"d", {{"a", "b", 11}}, 0, 10}};
  EXPECT_THROW(aggregate_similarity(d, VocabSet{"a", "b"}), Error);
}

TEST(SimilaritySvd, IdentityGivesOrthogonalUnitRows) {
  SimilarityMatrix s;
  s.vocab = VocabSet{"a", "b", "c"};
  s.values = Eigen::MatrixXd::Identity(3, 3);
  s.observed = Eigen::Matrix<bool, Eigen::Dynamic, Eigen::Dynamic>::Constant(3, 3, true);
  const auto e = similarity_svd_embed(s, 3);
  EXPECT_TRUE((e.rep.matrix * e.rep.matrix.transpose()).isApprox(Eigen::MatrixXd::Identity(3, 3), 1e-12));
  EXPECT_EQ(e.imputed_pairs, 0u);
}

TEST(SimilaritySvd, RankTwoReconstruction) {
  Rng rng(22);
  Eigen::MatrixXd B(6, 2);
  for (Eigen::Index i = 0; i < B.size(); ++i) B(i) = rng.normal();
  SimilarityMatrix s;
  s.vocab = VocabSet{"a", "b", "c", "d", "e", "f"};
  s.values = B * B.transpose();
  s.observed = Eigen::Matrix<bool, Eigen::Dynamic, Eigen::Dynamic>::Constant(6, 6, true);
  const auto e = similarity_svd_embed(s, 2);
  const Eigen::MatrixXd gram = s.values * s.values.transpose();
  EXPECT_LE((e.rep.matrix * e.rep.matrix.transpose() - gram).norm(), 1e-8 * gram.norm());
}

TEST(SimilaritySvd, ImputesMissingWithObservedMean) {
  const VocabSet v{"a", "b", "c", "d"};
  const std::vector<SimilarityJudgments> d{{"d", {{"a", "b", .2}, {"b", "c", .4}, {"c", "d", .6}}, 0, 1}};
  const auto s = aggregate_similarity(d, v);
  EXPECT_EQ(s.missing_pairs(), 3u);
  const auto e = similarity_svd_embed(s, 4);
  EXPECT_EQ(e.imputed_pairs, 3u);
  Eigen::MatrixXd full(4, 4);
  full << 1, .2, .4, .4, .2, 1, .4, .4, .4, .4, 1, .6, .4, .4, .6, 1;
  EXPECT_TRUE((e.rep.matrix * e.rep.matrix.transpose()).isApprox(full * full, 1e-10));
}

TEST(SimilaritySvd, DuplicateRowsGiveDuplicateEmbeddings) {
  SimilarityMatrix s;
  s.vocab = VocabSet{"a", "b", "c"};
  s.values.resize(3, 3);
  s.values << 1, 1, .2, 1, 1, .2, .2, .2, 1;
  s.observed = Eigen::Matrix<bool, Eigen::Dynamic, Eigen::Dynamic>::Constant(3, 3, true);
  const auto e = similarity_svd_embed(s, 2);
  EXPECT_LE((e.rep.matrix.row(0) - e.rep.matrix.row(1)).norm(), 1e-10);
}

TEST(SkipGram, DistributionSumsToOne) {
  const std::vector<std::pair<std::string, std::string>> pairs{{"a", "x"}, {"a", "y"}, {"b", "z"}};
  SgConfig cfg;
  cfg.dim = 4;
  cfg.epochs = 3;
  const auto r = sg_softmax_train(pairs, cfg);
  SgModel m{r.input_rep.vocab, r.output_rep.vocab, r.input_rep.matrix, r.output_rep.matrix};
  for (Eigen::Index c = 0; c < 2; ++c) EXPECT_NEAR(sg_response_distribution(m, c).sum(), 1.0, 1e-12);
  EXPECT_EQ(r.input_rep.dim(), 4);
  EXPECT_EQ(r.output_rep.size(), 3u);
  EXPECT_EQ(r.epoch_loss.size(), 3u);
}

TEST(SkipGram, DeterministicAndLearning) {
  std::vector<std::pair<std::string, std::string>> pairs;
  for (int i = 0; i < 5; ++i) {
    pairs.emplace_back("a", "x");
    pairs.emplace_back("b", "y");
  }
  SgConfig cfg;
  cfg.dim = 8;
  cfg.epochs = 50;
  cfg.learning_rate = 0.5;
  cfg.seed = 9;
  const auto r1 = sg_softmax_train(pairs, cfg), r2 = sg_softmax_train(pairs, cfg);
  EXPECT_EQ(r1.input_rep.matrix, r2.input_rep.matrix);
  EXPECT_EQ(r1.epoch_loss, r2.epoch_loss);
  for (std::size_t e = 3; e < r1.epoch_loss.size(); ++e) EXPECT_LT(r1.epoch_loss[e], r1.epoch_loss[e - 1]);
  EXPECT_LT(r1.epoch_loss.back(), r1.initial_loss);
}

TEST(SkipGram, GradientMatchesFiniteDifferences) {
  const std::vector<std::pair<std::string, std::string>> pairs{{"a", "x"}, {"a", "y"}, {"b", "y"}, {"c", "z"}};
  SgConfig cfg;
  cfg.dim = 3;
  cfg.epochs = 1;
  auto r = sg_softmax_train(pairs, cfg);
  SgModel m{r.input_rep.vocab, r.output_rep.vocab, r.input_rep.matrix, r.output_rep.matrix};
  const auto idx = index_pairs(m, pairs);
  Eigen::MatrixXd gi, go;
  sg_gradient(m, idx, gi, go);
  const double h = 1e-6;
  for (Eigen::Index i = 0; i < m.input.size(); ++i) {
    SgModel p = m, q = m;
    p.input(i) += h;
    q.input(i) -= h;
    EXPECT_NEAR((sg_total_loss(p, idx) - sg_total_loss(q, idx)) / (2 * h), gi(i), 1e-7);
  }
  for (Eigen::Index i = 0; i < m.output.size(); ++i) {
    SgModel p = m, q = m;
    p.output(i) += h;
    q.output(i) -= h;
    EXPECT_NEAR((sg_total_loss(p, idx) - sg_total_loss(q, idx)) / (2 * h), go(i), 1e-7);
  }
}
