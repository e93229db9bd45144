// Acceptance suite: one PASS/FAIL line per criterion.
//
//   repsim_acceptance            run every criterion
//   repsim_acceptance 4 7        run criteria 4 and 7
//
// Exit status is nonzero when any selected criterion fails.

#include <Eigen/Dense>
#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <unistd.h>
#include <vector>

#include "oracles.hpp"
#include "repsim/repsim.hpp"
#include "synthetic.hpp"

namespace fs = std::filesystem;
using namespace repsim;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.3g", v);
  return buf;
}

Eigen::MatrixXd gaussian(Eigen::Index r, Eigen::Index c, Rng& rng) {
  Eigen::MatrixXd m(r, c);
  for (Eigen::Index j = 0; j < c; ++j)
    for (Eigen::Index i = 0; i < r; ++i) m(i, j) = rng.normal();
  return m;
}

Representation random_rep(std::size_t n, Eigen::Index d, Rng& rng, std::string name = "rep") {
  std::vector<std::string> words;
  for (std::size_t i = 0; i < n; ++i) words.push_back(synth::word(i));
  return {std::move(name), DataType::text, VocabSet(words), gaussian(static_cast<Eigen::Index>(n), d, rng)};
}

NormTable numeric_norm(const VocabSet& vocab, const Eigen::VectorXd& y, std::string name = "norm") {
  NormTable t;
  t.name = std::move(name);
  t.category = "cat";
  t.vocab = vocab;
  t.values.assign(y.data(), y.data() + y.size());
  return t;
}

fs::path scratch_dir(const std::string& tag) {
  const auto dir = fs::temp_directory_path() / ("repsim_acceptance_" + std::to_string(::getpid())) / tag;
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

// 1 -------------------------------------------------------------------------
Outcome rsa_identity_invariance() {
  Rng rng(101);
  bool identity = true;
  double rot_err = 0, mono_err = 0;
  for (int t = 0; t < 20; ++t) {
    const auto rep = random_rep(200, 50, rng);
    identity = identity && rsa_correlation(rep, rep).rho == 1.0;

    const Eigen::HouseholderQR<Eigen::MatrixXd> qr(gaussian(50, 50, rng));
    const Eigen::MatrixXd Q = qr.householderQ();
    Representation rot = rep;
    rot.matrix = rep.matrix * Q;
    rot_err = std::max(rot_err, std::abs(rsa_correlation(rep, rot).rho - 1.0));

    const auto other = random_rep(200, 50, rng, "other");
    const auto a = representational_similarity_matrix(rep);
    const auto b = representational_similarity_matrix(other);
    std::vector<double> fa(a.upper.size());
    for (std::size_t i = 0; i < fa.size(); ++i) fa[i] = std::exp(3.0 * a.upper[i]) + a.upper[i];
    mono_err = std::max(mono_err, std::abs(spearman_exact(a.upper, b.upper) - spearman_exact(fa, b.upper)));
  }
  const bool pass = identity && rot_err <= 1e-10 && mono_err <= 1e-12;
  return {pass, std::string("self rho == 1: ") + (identity ? "yes" : "no") + ", max |rho(rep, rep Q) - 1| = " +
                    fmt(rot_err) + ", max monotone-transform change = " + fmt(mono_err)};
}

// 2 -------------------------------------------------------------------------
Outcome spearman_oracle() {
  Rng rng(202);
  double worst = 0, worst_exact = 0;
  for (int t = 0; t < 1000; ++t) {
    const std::size_t n = 3 + rng.below(60);
    std::vector<double> x(n), y(n);
    for (std::size_t i = 0; i < n; ++i) {
      // Coarse grids inject ties.
      x[i] = t % 2 ? std::round(rng.normal() * 3) : rng.normal();
      y[i] = t % 3 ? std::round(rng.normal() * 2) + 0.1 * x[i] : rng.normal();
    }
    if (std::all_of(x.begin(), x.end(), [&](double v) { return v == x[0]; }) ||
        std::all_of(y.begin(), y.end(), [&](double v) { return v == y[0]; }))
      continue;
    const double want = oracle::spearman(x, y);
    worst = std::max(worst, std::abs(spearman(x, y) - want));
    worst_exact = std::max(worst_exact, std::abs(spearman_exact(x, y) - want));
  }
  return {worst <= 1e-12 && worst_exact <= 1e-12,
          "max |spearman - oracle| = " + fmt(worst) + ", integer-rank path " + fmt(worst_exact)};
}

// 3 -------------------------------------------------------------------------
Outcome wilcoxon_oracle() {
  Rng rng(303);
  int mismatches = 0, cases = 0;
  for (int t = 0; t < 500; ++t) {
    const std::size_t n = 1 + rng.below(12);
    std::vector<double> d(n);
    for (auto& v : d) {
      v = std::round(rng.normal() * 4) / 2;  // ties and some zeros
      if (t % 5 == 0) v = rng.normal();
    }
    if (std::all_of(d.begin(), d.end(), [](double v) { return v == 0; })) d[0] = 1.5;
    ++cases;
    const auto r = wilcoxon_signed_rank(d);
    if (!r.exact || r.p_value != oracle::wilcoxon_p(d)) ++mismatches;
  }
  return {mismatches == 0, std::to_string(cases) + " vectors (n <= 12), " + std::to_string(mismatches) + " mismatches"};
}

// 4 -------------------------------------------------------------------------
Outcome probe_signal_recovery() {
  const auto t0 = std::chrono::steady_clock::now();
  Rng rng(404);
  auto rep = random_rep(500, 10, rng);
  const Eigen::VectorXd w = gaussian(10, 1, rng).col(0);
  const Eigen::VectorXd signal = rep.matrix * w;
  ProbeConfig cfg;
  cfg.seed = 1;
  const double clean = probe_norm(rep, numeric_norm(rep.vocab, signal), cfg).mean_score;

  // SNR 3 as a variance ratio.
  const double var = (signal.array() - signal.mean()).square().mean();
  Eigen::VectorXd noisy = signal;
  for (Eigen::Index i = 0; i < noisy.size(); ++i) noisy(i) += std::sqrt(var / 3.0) * rng.normal();
  const double snr3 = probe_norm(rep, numeric_norm(rep.vocab, noisy), cfg).mean_score;

  double shuffled = 0;
  for (int s = 0; s < 20; ++s) {
    Rng srng(mix_seed(4040, static_cast<std::uint64_t>(s)));
    std::vector<double> y(signal.data(), signal.data() + signal.size());
    srng.shuffle(y);
    ProbeConfig c = cfg;
    c.seed = static_cast<std::uint64_t>(s);
    shuffled += probe_norm(rep, numeric_norm(rep.vocab, Eigen::Map<Eigen::VectorXd>(y.data(), 500)), c).mean_score / 20;
  }
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  const bool pass = clean >= 0.99 && snr3 >= 0.55 && snr3 <= 0.95 && shuffled <= 0.05 && secs < 60;
  return {pass, "noiseless R2 = " + fmt(clean) + ", SNR-3 R2 = " + fmt(snr3) + ", shuffled mean R2 = " + fmt(shuffled) +
                    ", " + fmt(secs) + " s"};
}

// 5 -------------------------------------------------------------------------
Outcome nested_cv_oracle() {
  Rng rng(505);
  const std::size_t n = 60;
  const Eigen::Index d = 6;
  auto rep = random_rep(n, d, rng);
  Eigen::VectorXd y = rep.matrix * gaussian(d, 1, rng).col(0);
  for (Eigen::Index i = 0; i < y.size(); ++i) y(i) += 1.5 * rng.normal();
  ProbeConfig cfg;
  cfg.alpha_grid = {0.1, 10.0, 1000.0};
  cfg.min_test_samples = 5;
  cfg.seed = 17;
  int alpha_mismatch = 0;
  double score_err = 0;
  std::size_t distinct = 0;
  for (std::uint64_t seed : {17, 18, 19, 20}) {
    cfg.seed = seed;
    const auto got = probe_norm(rep, numeric_norm(rep.vocab, y), cfg);
    oracle::Rows X(n, std::vector<double>(d));
    std::vector<double> yy(n);
    for (std::size_t i = 0; i < n; ++i) {
      for (Eigen::Index j = 0; j < d; ++j) X[i][j] = rep.matrix(static_cast<Eigen::Index>(i), j);
      yy[i] = y(static_cast<Eigen::Index>(i));
    }
    const auto want = oracle::nested_ridge(X, yy, cfg.alpha_grid, 5, 5, seed);
    std::set<double> used;
    for (std::size_t f = 0; f < 5; ++f) {
      alpha_mismatch += got.chosen_penalties[f] != want.chosen_alpha[f];
      score_err = std::max(score_err, std::abs(got.fold_scores[f] - want.fold_scores[f]));
      used.insert(want.chosen_alpha[f]);
    }
    distinct = std::max(distinct, used.size());
  }
  return {alpha_mismatch == 0 && score_err <= 1e-12,
          std::to_string(alpha_mismatch) + " chosen-alpha mismatches over 4 seeds x 5 folds, max fold-score difference " +
              fmt(score_err) + " (solver round-off), up to " + std::to_string(distinct) + " distinct alphas per run"};
}

// 6 -------------------------------------------------------------------------
Outcome ppmi_svd() {
  auto counts = [](Eigen::MatrixXd m) {
    CueResponseCounts c;
    std::vector<std::string> cues, resp;
    for (Eigen::Index i = 0; i < m.rows(); ++i) cues.push_back("c" + std::to_string(i));
    for (Eigen::Index j = 0; j < m.cols(); ++j) resp.push_back("r" + std::to_string(j));
    c.cues = VocabSet(cues);
    c.responses = VocabSet(resp);
    c.counts = std::move(m);
    return c;
  };
  const double uniform_max = ppmi(counts(Eigen::MatrixXd::Constant(5, 7, 3.0))).cwiseAbs().maxCoeff();

  Rng rng(606);
  Eigen::MatrixXd raw(12, 9);
  for (Eigen::Index i = 0; i < raw.size(); ++i) raw(i) = static_cast<double>(rng.below(6));
  const Eigen::MatrixXd P = ppmi(counts(raw));
  const auto rank = numerical_rank(P);
  const auto svd = truncated_svd(P, rank);
  const double recon = (svd.U * svd.s.asDiagonal() * svd.Vt - P).norm();

  Eigen::MatrixXd a(2, 2), b(2, 2);
  a << 1, 0, 0, 1;
  b << 3, 1, 1, 3;
  const auto pa = ppmi(counts(a)), pb = ppmi(counts(b));
  const double hand = std::max({std::abs(pa(0, 0) - std::log(2.0)), std::abs(pa(1, 1) - std::log(2.0)), std::abs(pa(0, 1)),
                                std::abs(pa(1, 0)), std::abs(pb(0, 0) - std::log(1.5)), std::abs(pb(1, 1) - std::log(1.5)),
                                std::abs(pb(0, 1)), std::abs(pb(1, 0))});
  return {uniform_max == 0.0 && recon <= 1e-8 && hand <= 1e-12,
          "uniform max |PPMI| = " + fmt(uniform_max) + ", rank-" + std::to_string(rank) + " reconstruction error " +
              fmt(recon) + ", hand 2x2 max error " + fmt(hand)};
}

// 7 -------------------------------------------------------------------------
Outcome skipgram_gradient() {
  Rng rng(707);
  SgModel m;
  m.cues = VocabSet({"a", "b", "c"});
  m.responses = VocabSet({"x", "y", "z"});
  m.input = 0.5 * gaussian(3, 4, rng);
  m.output = 0.5 * gaussian(3, 4, rng);
  const std::vector<std::pair<std::string, std::string>> raw{{"a", "x"}, {"a", "y"}, {"b", "y"}, {"c", "z"}, {"c", "x"}};
  const auto pairs = index_pairs(m, raw);
  Eigen::MatrixXd gi, go;
  sg_gradient(m, pairs, gi, go);
  const double h = 1e-5;
  double worst = 0;
  auto check = [&](Eigen::MatrixXd& param, const Eigen::MatrixXd& analytic) {
    for (Eigen::Index i = 0; i < param.size(); ++i) {
      const double keep = param(i);
      param(i) = keep + h;
      const double up = sg_total_loss(m, pairs);
      param(i) = keep - h;
      const double down = sg_total_loss(m, pairs);
      param(i) = keep;
      const double fd = (up - down) / (2 * h);
      const double denom = std::max({std::abs(fd), std::abs(analytic(i)), 1e-6});
      worst = std::max(worst, std::abs(fd - analytic(i)) / denom);
    }
  };
  check(m.input, gi);
  check(m.output, go);

  std::vector<std::pair<std::string, std::string>> fixture;
  for (int r = 0; r < 5; ++r) {
    fixture.emplace_back("cue1", "resp1");
    fixture.emplace_back("cue2", "resp2");
  }
  SgConfig cfg;
  cfg.dim = 8;
  cfg.epochs = 50;
  cfg.seed = 3;
  const auto res = sg_softmax_train(fixture, cfg);
  int violations = 0;
  for (std::size_t e = 3; e < res.epoch_loss.size(); ++e) violations += !(res.epoch_loss[e] < res.epoch_loss[e - 1]);
  return {worst <= 1e-5 && violations == 0,
          "max relative gradient error " + fmt(worst) + ", loss " + fmt(res.initial_loss) + " -> " +
              fmt(res.epoch_loss.back()) + " with " + std::to_string(violations) + " non-decreasing epochs after epoch 3"};
}

// 8 -------------------------------------------------------------------------
Outcome mds_recovery() {
  Rng rng(808);
  const Eigen::MatrixXd pts = gaussian(10, 2, rng);
  Eigen::MatrixXd D(10, 10);
  for (int i = 0; i < 10; ++i)
    for (int j = 0; j < 10; ++j) D(i, j) = (pts.row(i) - pts.row(j)).norm();
  const auto coords = classical_mds(D, 2);
  double worst = 0;
  for (int i = 0; i < 10; ++i)
    for (int j = 0; j < 10; ++j) worst = std::max(worst, std::abs((coords.row(i) - coords.row(j)).norm() - D(i, j)));
  Eigen::MatrixXd two(2, 2);
  two << 0, 3, 3, 0;
  const auto c2 = classical_mds(two, 1);
  const bool pair_ok = std::abs(std::abs(c2(0, 0)) - 1.5) <= 1e-12 && std::abs(c2(0, 0) + c2(1, 0)) <= 1e-12;
  return {worst <= 1e-8 && pair_ok, "max distance error " + fmt(worst) + ", two-point coordinates (" + fmt(c2(0, 0)) +
                                        ", " + fmt(c2(1, 0)) + ") for d = 3"};
}

// 9 -------------------------------------------------------------------------
Outcome ensemble_span() {
  Rng rng(909);
  int violations = 0;
  for (int t = 0; t < 100; ++t) {
    const std::size_t n = 40 + rng.below(40);
    const auto a = random_rep(n, 3 + static_cast<Eigen::Index>(rng.below(5)), rng, "A");
    const auto b = random_rep(n, 3 + static_cast<Eigen::Index>(rng.below(5)), rng, "B");
    const Eigen::VectorXd y = gaussian(static_cast<Eigen::Index>(n), 1, rng).col(0);
    const std::vector<Representation> members{a, b};
    auto residual = [&](const Eigen::MatrixXd& X) { return (y - ridge_fit(X, y, 0.0).predict(X)).squaredNorm(); };
    const double solo = std::min(residual(a.matrix), residual(b.matrix));
    for (auto scaling : {BlockScaling::none, BlockScaling::per_block_column_zscore}) {
      const auto ens = concatenate(members, a.vocab, scaling);
      if (residual(ens.matrix) > solo * (1 + 1e-10) + 1e-12) ++violations;
    }
  }

  const std::size_t n = 400;
  auto A = random_rep(n, 6, rng, "A");
  auto B = random_rep(n, 6, rng, "B");
  Eigen::VectorXd y = A.matrix * gaussian(6, 1, rng).col(0) + B.matrix * gaussian(6, 1, rng).col(0);
  for (Eigen::Index i = 0; i < y.size(); ++i) y(i) += 0.5 * rng.normal();
  const std::vector<Representation> members{A, B};
  const std::vector<EnsembleSpec> specs{{"A & B", {"A", "B"}}};
  const std::vector<NormTable> norms{numeric_norm(A.vocab, y, "planted")};
  ProbeConfig cfg;
  cfg.seed = 9;
  const auto res = ensemble_rca(specs, members, norms, cfg);
  const double sa = res.profiles[0].results[0].mean_score, sb = res.profiles[1].results[0].mean_score;
  const double se = res.profiles[2].results[0].mean_score;
  const double margin = se - std::max(sa, sb);
  return {violations == 0 && margin >= 0.05,
          std::to_string(violations) + " span violations in 100 fixtures x 2 scalings; planted two-block R2: ensemble " +
              fmt(se) + ", solos " + fmt(sa) + " / " + fmt(sb) + " (margin " + fmt(margin) + ")"};
}

// 10 ------------------------------------------------------------------------
Outcome end_to_end() {
  const auto t0 = std::chrono::steady_clock::now();
  const auto dir = scratch_dir("e2e");
  const auto study = synth::make_study({});
  const auto files = synth::write_study(study, dir);
  std::ostringstream log, err;
  CommandOptions opt;
  opt.config = files.config;
  opt.log = &log;
  opt.err = &err;
  if (run_command(opt, [&] { return cmd_rsa(opt); }) != 0) return {false, "cmd_rsa failed: " + err.str()};
  if (run_command(opt, [&] { return cmd_ensemble(opt); }) != 0) return {false, "cmd_ensemble failed: " + err.str()};

  std::ifstream rin(files.output_dir / "rsa_matrix.json");
  const auto rsa = rsa_from_json(nlohmann::json::parse(rin));
  double within = 0, between = 0;
  int nw = 0, nb = 0;
  for (std::size_t i = 0; i < rsa.size(); ++i)
    for (std::size_t j = i + 1; j < rsa.size(); ++j) {
      const double r = rsa.rho(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));
      if (rsa.labels[i] == rsa.labels[j]) within += r, ++nw;
      else between += r, ++nb;
    }
  within /= nw;
  between /= nb;

  std::ifstream min(files.output_dir / "figures" / "mds_scatter.json");
  const auto mj = nlohmann::json::parse(min);
  Eigen::MatrixXd coords(static_cast<Eigen::Index>(mj.size()), 2);
  std::vector<int> fam;
  for (std::size_t i = 0; i < mj.size(); ++i) {
    coords(static_cast<Eigen::Index>(i), 0) = mj[i]["coords"][0].get<double>();
    coords(static_cast<Eigen::Index>(i), 1) = mj[i]["coords"][1].get<double>();
    fam.push_back(static_cast<int>(*parse_data_type(mj[i]["data_type"].get<std::string>())));
  }
  const double sil = synth::silhouette(coords, fam);

  std::ifstream din(files.output_dir / "ensemble" / "diff_text_behavior__text_text.json");
  const auto diff = diff_report_from_json(nlohmann::json::parse(din));
  const auto* beh = diff.find("BehaviorOnly");
  const double p = beh && beh->test ? beh->test->p_value : 1.0;
  const double dmed = beh ? beh->median_diff : 0.0;
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  fs::remove_all(dir);
  const bool pass = within - between >= 0.2 && sil > 0.3 && p < 0.05 && dmed > 0;
  return {pass, "within rho " + fmt(within) + " vs between " + fmt(between) + ", MDS silhouette " + fmt(sil) +
                    ", BehaviorOnly median diff " + fmt(dmed) + " p = " + fmt(p) + ", " + fmt(secs) + " s"};
}

// 11 ------------------------------------------------------------------------
std::map<std::string, std::string> csv_files(const fs::path& root) {
  std::map<std::string, std::string> out;
  for (const auto& e : fs::recursive_directory_iterator(root))
    if (e.path().extension() == ".csv") {
      std::ifstream in(e.path(), std::ios::binary);
      std::ostringstream ss;
      ss << in.rdbuf();
      out[fs::relative(e.path(), root).string()] = ss.str();
    }
  return out;
}

Outcome determinism() {
  const auto dir = scratch_dir("determinism");
  synth::StudySpec spec;
  spec.words = 200;
  spec.reps_per_family = 2;
  spec.norms_per_category = 3;
  const auto files = synth::write_study(synth::make_study(spec), dir);
  std::ostringstream log, err;
  std::vector<std::map<std::string, std::string>> runs;
  for (unsigned jobs : {1u, 3u}) {
    CommandOptions opt;
    opt.config = files.config;
    opt.jobs = jobs;
    opt.out = dir / ("run_jobs" + std::to_string(jobs));
    opt.log = &log;
    opt.err = &err;
    if (run_command(opt, [&] { return cmd_probe(opt); }) != 0) return {false, "cmd_probe failed: " + err.str()};
    runs.push_back(csv_files(*opt.out));
  }
  fs::remove_all(dir);
  const bool same = !runs[0].empty() && runs[0] == runs[1];
  return {same, std::to_string(runs[0].size()) + " csv files, byte-identical across two runs (jobs 1 and 3): " +
                    (same ? "yes" : "no")};
}

}  // namespace

int main(int argc, char** argv) {
  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria{
      {"RSA identity and invariance", rsa_identity_invariance},
      {"Spearman oracle", spearman_oracle},
      {"Wilcoxon exact oracle", wilcoxon_oracle},
      {"probe signal recovery", probe_signal_recovery},
      {"nested-CV oracle", nested_cv_oracle},
      {"PPMI-SVD", ppmi_svd},
      {"skip-gram gradient and training", skipgram_gradient},
      {"MDS recovery", mds_recovery},
      {"ensemble span", ensemble_span},
      {"end-to-end synthetic reproduction", end_to_end},
      {"determinism", determinism},
  };
  std::vector<std::size_t> selected;
  for (int i = 1; i < argc; ++i) selected.push_back(std::stoul(argv[i]));
  if (selected.empty())
    for (std::size_t i = 1; i <= criteria.size(); ++i) selected.push_back(i);

  int failures = 0;
  for (std::size_t id : selected) {
    if (id < 1 || id > criteria.size()) {
      std::cout << "FAIL criterion " << id << ": no such criterion\n";
      ++failures;
      continue;
    }
    const auto& [name, fn] = criteria[id - 1];
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = fn();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    std::cout << (o.pass ? "PASS" : "FAIL") << " criterion " << id << " (" << name << "): " << o.detail << " ["
              << fmt(secs) << " s]" << std::endl;
    failures += !o.pass;
  }
  return failures ? 1 : 0;
}
