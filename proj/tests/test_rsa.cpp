#include <gtest/gtest.h>

#include <cmath>

#include "oracles.hpp"
#include "repsim/rsa.hpp"
#include "synthetic.hpp"

using namespace repsim;

namespace {

Representation make_rep(std::string name, DataType type, std::vector<std::string> words, Eigen::MatrixXd m) {
  Representation r;
  r.name = std::move(name);
  r.data_type = type;
  r.vocab = VocabSet::from_sorted_unique(std::move(words));
  r.matrix = std::move(m);
  r.validate();
  return r;
}

std::vector<std::string> words(std::size_t n) {
  std::vector<std::string> w;
  for (std::size_t i = 0; i < n; ++i) w.push_back(synth::word(i));
  return w;
}

Representation random_rep(const std::string& name, std::size_t n, Eigen::Index d, std::uint64_t seed,
                          DataType t = DataType::text) {
  Rng rng(seed);
  return make_rep(name, t, words(n), synth::gaussian(static_cast<Eigen::Index>(n), d, rng));
}

Eigen::MatrixXd random_orthogonal(Eigen::Index d, std::uint64_t seed) {
  Rng rng(seed);
  Eigen::HouseholderQR<Eigen::MatrixXd> qr(synth::gaussian(d, d, rng));
  return qr.householderQ();
}

RsaMatrix fixed_matrix(std::vector<DataType> labels, const Eigen::MatrixXd& rho) {
  RsaMatrix m;
  for (std::size_t i = 0; i < labels.size(); ++i) m.names.push_back("r" + std::to_string(i));
  m.labels = std::move(labels);
  m.rho = rho;
  m.missing = Eigen::Matrix<bool, Eigen::Dynamic, Eigen::Dynamic>::Constant(rho.rows(), rho.cols(), false);
  m.pair_vocab_sizes = Eigen::Matrix<std::size_t, Eigen::Dynamic, Eigen::Dynamic>::Zero(rho.rows(), rho.cols());
  return m;
}

}  // namespace

TEST(Rsm, HandCosines) {
  Eigen::MatrixXd m(3, 2);
  m << 1, 0, 0, 1, 1, 1;
  const auto rsm = representational_similarity_matrix(make_rep("x", DataType::text, {"a", "b", "c"}, m));
  ASSERT_EQ(rsm.upper.size(), 3u);
  EXPECT_NEAR(rsm.upper[0], 0.0, 1e-15);
  EXPECT_NEAR(rsm.upper[1], std::sqrt(0.5), 1e-15);
  EXPECT_NEAR(rsm.upper[2], std::sqrt(0.5), 1e-15);
}

TEST(Rsm, OrthogonalRowsGiveZeros) {
  const auto rsm = representational_similarity_matrix(
      make_rep("x", DataType::text, {"a", "b", "c", "d"}, Eigen::MatrixXd::Identity(4, 4)));
  for (double v : rsm.upper) EXPECT_EQ(v, 0.0);
}

TEST(Rsm, ScaleInvariant) {
  const auto rep = random_rep("x", 20, 5, 1);
  auto scaled = rep;
  scaled.matrix *= 3;
  const auto a = representational_similarity_matrix(rep), b = representational_similarity_matrix(scaled);
  for (std::size_t i = 0; i < a.upper.size(); ++i) EXPECT_NEAR(a.upper[i], b.upper[i], 1e-14);
}

TEST(Rsm, ZeroRowNamesWord) {
  Eigen::MatrixXd m(3, 2);
  m << 1, 0, 0, 0, 1, 1;
  try {
    representational_similarity_matrix(make_rep("x", DataType::text, {"a", "b", "c"}, m));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::zero_norm_row);
    EXPECT_NE(std::string(e.what()).find("b"), std::string::npos);
  }
}

TEST(Rsm, ParallelMatchesSerial) {
  const auto rep = random_rep("x", 60, 4, 2);
  EXPECT_EQ(representational_similarity_matrix(rep, 1).upper, representational_similarity_matrix(rep, 4).upper);
}

TEST(RsaCorrelation, SelfAndRotation) {
  const auto rep = random_rep("x", 40, 6, 3);
  EXPECT_EQ(rsa_correlation(rep, rep).rho, 1.0);
  auto rot = rep;
  rot.matrix = rep.matrix * random_orthogonal(6, 4);
  EXPECT_NEAR(rsa_correlation(rep, rot).rho, 1.0, 1e-12);
}

TEST(RsaCorrelation, TieRankExample) {
  Eigen::MatrixXd a(3, 2), b(3, 2);
  a << 1, 0, 0, 1, 1, 1;  // upper [0, .707, .707]
  b << 1, 0, 1, 0, 0, 1;  // upper [1, 0, 0]
  const auto r = rsa_correlation(make_rep("a", DataType::text, {"x", "y", "z"}, a),
                                 make_rep("b", DataType::text, {"x", "y", "z"}, b));
  EXPECT_NEAR(r.rho, -1.0, 1e-15);
  EXPECT_EQ(r.n_common, 3u);
}

TEST(RsaCorrelation, MatchesOracleSpearmanOfUpperTriangles) {
  const auto a = random_rep("a", 30, 3, 5), b = random_rep("b", 30, 3, 6);
  const auto ua = representational_similarity_matrix(a).upper, ub = representational_similarity_matrix(b).upper;
  EXPECT_NEAR(rsa_correlation(a, b).rho, oracle::spearman(ua, ub), 1e-12);
}

TEST(RsaCorrelation, UsesCommonVocabulary) {
  const auto a = random_rep("a", 30, 3, 7);
  auto sub = subset_representation(a, VocabSet(std::vector<std::string>(a.vocab.begin(), a.vocab.begin() + 20)));
  const auto r = rsa_correlation(a, sub);
  EXPECT_EQ(r.n_common, 20u);
  EXPECT_EQ(r.rho, 1.0);
}

TEST(PairwiseRsa, IdenticalRepsGiveAllOnes) {
  const auto rep = random_rep("a", 25, 4, 8);
  auto b = rep, c = rep;
  b.name = "b";
  c.name = "c";
  const std::vector<Representation> reps{rep, b, c};
  const auto m = pairwise_rsa(reps);
  EXPECT_TRUE(m.rho.isApprox(Eigen::MatrixXd::Ones(3, 3)));
  EXPECT_FALSE(m.any_missing());
  EXPECT_EQ(m.computations, 3u);
}

TEST(PairwiseRsa, RotatedAndUnrelated) {
  const auto a = random_rep("a", 40, 5, 9);
  auto b = a;
  b.name = "b";
  b.matrix = a.matrix * random_orthogonal(5, 10);
  const auto c = random_rep("c", 40, 5, 11);
  const std::vector<Representation> reps{a, b, c};
  const auto m = pairwise_rsa(reps, 2);
  EXPECT_NEAR(m.rho(0, 1), 1.0, 1e-12);
  EXPECT_NEAR(m.rho(0, 2), m.rho(1, 2), 1e-12);
  EXPECT_TRUE(m.rho.isApprox(m.rho.transpose()));
}

TEST(PairwiseRsa, SmallOverlapIsMissingNotFatal) {
  const auto a = random_rep("a", 10, 3, 12);
  Rng rng(13);
  const auto b = make_rep("b", DataType::behavior, {synth::word(0), synth::word(1), "zz1", "zz2"},
                          synth::gaussian(4, 3, rng));
  const std::vector<Representation> reps{a, b};
  const auto m = pairwise_rsa(reps);
  EXPECT_TRUE(m.missing(0, 1));
  EXPECT_TRUE(std::isnan(m.rho(0, 1)));
  EXPECT_EQ(m.pair_vocab_sizes(0, 1), 2u);
  EXPECT_EQ(m.failures.size(), 1u);
  EXPECT_THROW(mds_projection(m), Error);
}

TEST(PairwiseRsa, JsonRoundTrip) {
  const std::vector<Representation> reps{random_rep("a", 12, 3, 14), random_rep("b", 12, 3, 15, DataType::brain)};
  const auto m = pairwise_rsa(reps);
  const auto back = rsa_from_json(nlohmann::json::parse(rsa_to_json(m).dump()));
  EXPECT_EQ(back.names, m.names);
  EXPECT_EQ(back.labels, m.labels);
  EXPECT_TRUE(back.rho.isApprox(m.rho));
  EXPECT_EQ(rsa_to_csv(back), rsa_to_csv(m));
}

TEST(Mds, AllOnesAtOrigin) {
  const auto m = fixed_matrix({DataType::text, DataType::text, DataType::brain}, Eigen::MatrixXd::Ones(3, 3));
  EXPECT_LE(mds_projection(m).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(Mds, TwoRepsSymmetricLine) {
  Eigen::MatrixXd rho(2, 2);
  rho << 1, 0.2, 0.2, 1;
  const auto c = mds_projection(fixed_matrix({DataType::text, DataType::brain}, rho), 1);
  EXPECT_NEAR(c(0, 0), -c(1, 0), 1e-12);
  EXPECT_NEAR(std::abs(c(0, 0) - c(1, 0)), 0.8, 1e-12);
}

TEST(Mds, TwoClustersSeparate) {
  const int n = 6;
  Eigen::MatrixXd rho(n, n);
  std::vector<int> cluster{0, 0, 0, 1, 1, 1};
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) rho(i, j) = i == j ? 1.0 : cluster[i] == cluster[j] ? 0.9 : 0.1;
  const auto c = mds_projection(
      fixed_matrix({DataType::text, DataType::text, DataType::text, DataType::brain, DataType::brain, DataType::brain}, rho));
  const Eigen::RowVectorXd c0 = c.topRows(3).colwise().mean(), c1 = c.bottomRows(3).colwise().mean();
  double spread = 0;
  for (int i = 0; i < n; ++i) spread = std::max(spread, (c.row(i) - (cluster[i] ? c1 : c0)).norm());
  EXPECT_GT((c0 - c1).norm(), spread);
}

TEST(WithinBetween, Examples) {
  Eigen::MatrixXd two(2, 2);
  two << 1, .4, .4, 1;
  const auto s = within_between_summary(fixed_matrix({DataType::text, DataType::text}, two));
  ASSERT_EQ(s.size(), 1u);
  EXPECT_DOUBLE_EQ(s.at({DataType::text, DataType::text}), .4);

  // T1 T2 T3 B1 B2: text pairs .5 .5 .5, behavior pair .3, cross .1 except one .2
  Eigen::MatrixXd r(5, 5);
  r << 1, .5, .5, .1, .1,  //
      .5, 1, .5, .1, .1,   //
      .5, .5, 1, .1, .2,   //
      .1, .1, .1, 1, .3,   //
      .1, .1, .2, .3, 1;
  const auto b = within_between_summary(
      fixed_matrix({DataType::text, DataType::text, DataType::text, DataType::behavior, DataType::behavior}, r));
  EXPECT_DOUBLE_EQ(b.at({DataType::text, DataType::text}), .5);
  EXPECT_DOUBLE_EQ(b.at({DataType::behavior, DataType::behavior}), .3);
  EXPECT_NEAR(b.at(canonical_pair(DataType::text, DataType::behavior)), 0.7 / 6, 1e-15);
  EXPECT_EQ(type_pair_name(canonical_pair(DataType::behavior, DataType::text)), "text-behavior");
}

TEST(NeighborAffinity, Examples) {
  Eigen::MatrixXd r(3, 3);
  r << 1, .9, .1, .9, 1, .2, .1, .2, 1;
  const auto a = same_type_neighbor_affinity(fixed_matrix({DataType::text, DataType::text, DataType::behavior}, r), 1);
  EXPECT_EQ(a.at(DataType::text), 1.0);
  EXPECT_EQ(a.at(DataType::behavior), 0.0);
  const auto same = same_type_neighbor_affinity(fixed_matrix({DataType::brain, DataType::brain, DataType::brain}, r), 2);
  EXPECT_EQ(same.at(DataType::brain), 1.0);
  EXPECT_THROW(same_type_neighbor_affinity(fixed_matrix({DataType::brain, DataType::brain, DataType::brain}, r), 3), Error);
}
