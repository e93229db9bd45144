#pragma once

// Pipeline commands behind the command-line tool. Each returns a process exit
// code: 0 success, 1 runtime failure, 2 configuration failure. Runtime errors
// propagate as exceptions; run_command maps them to codes.

#include <nlohmann/json.hpp>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <iostream>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "repsim/config.hpp"
#include "repsim/ensemble.hpp"
#include "repsim/error.hpp"
#include "repsim/parallel.hpp"
#include "repsim/rca.hpp"
#include "repsim/report.hpp"
#include "repsim/representation.hpp"
#include "repsim/rsa.hpp"
#include "repsim/store.hpp"
#include "repsim/text.hpp"
#include "repsim/train.hpp"
#include "repsim/vocab.hpp"

#ifndef REPSIM_VERSION
#define REPSIM_VERSION "0.0.0"
#endif

namespace repsim {

inline constexpr const char* kVersion = REPSIM_VERSION;

enum ExitCode : int { exit_ok = 0, exit_runtime = 1, exit_config = 2 };

/// Command-line overrides shared by every command.
struct CommandOptions {
  std::filesystem::path config;
  unsigned jobs = 0;  // 0 = all logical cores
  std::optional<std::uint64_t> seed;
  std::optional<std::filesystem::path> out;
  std::ostream* log = &std::cout;
  std::ostream* err = &std::cerr;

  unsigned effective_jobs() const { return jobs ? jobs : default_jobs(); }
};

/// Lowercase ASCII letters and digits kept; every other run becomes '_'.
inline std::string slug(const std::string& s) {
  std::string out;
  for (unsigned char c : s) {
    if (std::isalnum(c)) out += static_cast<char>(std::tolower(c));
    else if (out.empty() || out.back() != '_') out += '_';
  }
  while (!out.empty() && out.back() == '_') out.pop_back();
  return out.empty() ? "x" : out;
}

/// Loaded inputs of a run: representations (subset to the base vocabulary
/// when configured), norms and their categories.
struct Workspace {
  RunConfig config;
  std::vector<Representation> representations;
  std::vector<NormTable> norms;
  std::map<std::string, std::string> category_of;
  std::map<std::string, DataType> type_of;
  std::optional<VocabSet> base_vocabulary;
  nlohmann::ordered_json vocab_summary;
};

inline RunConfig load_run_config(const CommandOptions& opt) {
  RunConfig cfg = require_config(opt.config);
  if (opt.seed) cfg.seed = *opt.seed;
  cfg.probe.seed = cfg.seed;
  if (opt.out) cfg.output_dir = *opt.out;
  return cfg;
}

inline Workspace load_workspace(const CommandOptions& opt, bool need_norms) {
  Workspace ws;
  ws.config = load_run_config(opt);
  const auto& cfg = ws.config;
  if (need_norms && !cfg.norm_manifest) throw Error(Errc::config_error, opt.config.string() + ": norms.manifest is required");

  std::vector<Representation> raw;
  for (const auto& e : cfg.representations) raw.push_back(load_embeddings(e.path, e.format, e.name, e.data_type));
  for (const auto& r : raw) ws.type_of[r.name] = r.data_type;

  if (cfg.norm_manifest) {
    for (const auto& entry : load_norm_manifest(*cfg.norm_manifest)) {
      ws.norms.push_back(load_norm_table(entry));
      ws.category_of[entry.name] = entry.category;
    }
  }

  auto& vs = ws.vocab_summary;
  vs["subset_to_base"] = cfg.subset_to_base;
  std::vector<VocabSet> norm_v, beh_v, brain_v;
  for (const auto& n : ws.norms) norm_v.push_back(n.vocab);
  for (const auto& r : raw) {
    if (r.data_type == DataType::behavior) beh_v.push_back(r.vocab);
    if (r.data_type == DataType::brain) brain_v.push_back(r.vocab);
  }
  if (cfg.subset_to_base && !norm_v.empty() && (!beh_v.empty() || !brain_v.empty())) {
    ws.base_vocabulary = build_base_vocabulary(norm_v, beh_v, brain_v);
    vs["base_vocabulary_size"] = ws.base_vocabulary->size();
  } else {
    vs["base_vocabulary_size"] = nullptr;
  }
  std::optional<FrequencyTable> freq;
  if (cfg.frequency) freq = load_frequency_table(*cfg.frequency);
  if (freq && ws.base_vocabulary) vs["base_vocabulary_coverage"] = coverage(*ws.base_vocabulary, *freq);

  auto& reps_json = vs["representations"] = nlohmann::ordered_json::array();
  for (auto& r : raw) {
    nlohmann::ordered_json e;
    e["name"] = r.name;
    e["data_type"] = std::string(to_string(r.data_type));
    e["original_size"] = r.vocab.size();
    e["dim"] = r.matrix.cols();
    Representation kept = ws.base_vocabulary ? subset_representation(r, *ws.base_vocabulary) : std::move(r);
    e["subset_size"] = kept.vocab.size();
    if (freq) e["coverage"] = coverage(kept.vocab, *freq);
    reps_json.push_back(std::move(e));
    ws.representations.push_back(std::move(kept));
  }
  return ws;
}

inline void write_text(const std::filesystem::path& path, const std::string& content) {
  auto out = text::open_output(path);
  out << content;
}

inline void write_json(const std::filesystem::path& path, const nlohmann::ordered_json& j) {
  write_text(path, j.dump(2) + "\n");
}

// ---------------------------------------------------------------------------
// validate

inline int cmd_validate(const CommandOptions& opt) {
  const auto res = load_config(opt.config);
  for (const auto& i : res.issues) *opt.err << format_issue(opt.config, i) << '\n';
  if (!res.ok()) {
    *opt.err << res.issues.size() << " problem(s) found\n";
    return exit_config;
  }
  *opt.log << opt.config.string() << ": ok (" << res.config.representations.size() << " representations)\n";
  return exit_ok;
}

// ---------------------------------------------------------------------------
// train

struct TrainArgs {
  std::vector<std::filesystem::path> inputs;
  std::string name;
  Eigen::Index k = kDefaultSvdDims;
  SgConfig sg;
};

inline std::filesystem::path train_output_dir(const CommandOptions& opt) {
  if (opt.out) return *opt.out;
  if (!opt.config.empty()) return load_run_config(opt).output_dir;
  throw Error(Errc::config_error, "train needs --out or --config");
}

/// (cue, response) pairs expanded from integer counts, in cue then response order.
inline std::vector<std::pair<std::string, std::string>> expand_pairs(const CueResponseCounts& c) {
  std::vector<std::pair<std::string, std::string>> pairs;
  for (Eigen::Index i = 0; i < c.counts.rows(); ++i)
    for (Eigen::Index j = 0; j < c.counts.cols(); ++j) {
      const double v = c.counts(i, j);
      if (v != std::floor(v)) throw Error(Errc::invalid_argument, "pair counts must be whole numbers");
      for (double t = 0; t < v; ++t)
        pairs.emplace_back(c.cues[static_cast<std::size_t>(i)], c.responses[static_cast<std::size_t>(j)]);
    }
  return pairs;
}

inline int cmd_train(const CommandOptions& opt, const std::string& method, TrainArgs args) {
  if (args.inputs.empty()) throw Error(Errc::config_error, "train " + method + ": --input is required");
  const auto dir = train_output_dir(opt);
  auto& log = *opt.log;
  if (method == "ppmi-svd") {
    if (args.inputs.size() != 1) throw Error(Errc::config_error, "ppmi-svd takes exactly one --input");
    const auto counts = load_cue_response_counts(args.inputs.front());
    const auto rep = ppmi_svd_embed(counts, args.k, args.name.empty() ? "ppmi_svd" : args.name);
    const auto path = dir / (rep.name + ".txt");
    write_embeddings(rep, path, EmbeddingFormat::header_text);
    log << "k=" << rep.dim() << " vocab=" << rep.size() << " file=" << path.string() << '\n';
  } else if (method == "sim-svd") {
    std::vector<SimilarityJudgments> data;
    std::vector<std::string> words;
    for (const auto& p : args.inputs) {
      data.push_back(load_similarity_judgments(p));
      for (const auto& j : data.back().pairs) {
        words.push_back(j.word1);
        words.push_back(j.word2);
      }
    }
    const auto S = aggregate_similarity(data, VocabSet(std::move(words)));
    const auto emb = similarity_svd_embed(S, args.k, args.name.empty() ? "similarity_svd" : args.name);
    const auto path = dir / (emb.rep.name + ".txt");
    write_embeddings(emb.rep, path, EmbeddingFormat::header_text);
    log << "k=" << emb.rep.dim() << " vocab=" << emb.rep.size() << " imputed_pairs=" << emb.imputed_pairs
        << " file=" << path.string() << '\n';
  } else if (method == "sg-softmax") {
    if (args.inputs.size() != 1) throw Error(Errc::config_error, "sg-softmax takes exactly one --input");
    const auto pairs = expand_pairs(load_cue_response_counts(args.inputs.front()));
    if (opt.seed) args.sg.seed = *opt.seed;
    const auto res = sg_softmax_train(pairs, args.sg, args.name.empty() ? "sg_softmax" : args.name);
    const auto in_path = dir / (res.input_rep.name + ".txt");
    const auto out_path = dir / (res.output_rep.name + ".txt");
    write_embeddings(res.input_rep, in_path, EmbeddingFormat::header_text);
    write_embeddings(res.output_rep, out_path, EmbeddingFormat::header_text);
    log << "k=" << res.input_rep.dim() << " vocab=" << res.input_rep.size() << " pairs=" << pairs.size()
        << " initial_loss=" << text::format_double(res.initial_loss)
        << " final_loss=" << text::format_double(res.epoch_loss.empty() ? res.initial_loss : res.epoch_loss.back())
        << " file=" << in_path.string() << '\n';
  } else {
    throw Error(Errc::config_error, "unknown train method " + method);
  }
  return exit_ok;
}

// ---------------------------------------------------------------------------
// rsa

inline std::string mds_csv(const std::vector<std::string>& names, const std::vector<DataType>& labels,
                           const Eigen::MatrixXd& coords) {
  std::string s = "name,data_type";
  for (Eigen::Index d = 0; d < coords.cols(); ++d) s += ",dim_" + std::to_string(d);
  s += "\n";
  for (Eigen::Index i = 0; i < coords.rows(); ++i) {
    s += text::csv_field(names[static_cast<std::size_t>(i)]) + "," + std::string(to_string(labels[static_cast<std::size_t>(i)]));
    for (Eigen::Index d = 0; d < coords.cols(); ++d) s += "," + text::format_double(coords(i, d));
    s += "\n";
  }
  return s;
}

inline nlohmann::ordered_json mds_json(const std::vector<std::string>& names, const std::vector<DataType>& labels,
                                       const Eigen::MatrixXd& coords) {
  auto j = nlohmann::ordered_json::array();
  for (Eigen::Index i = 0; i < coords.rows(); ++i) {
    nlohmann::ordered_json e;
    e["name"] = names[static_cast<std::size_t>(i)];
    e["data_type"] = std::string(to_string(labels[static_cast<std::size_t>(i)]));
    auto& c = e["coords"] = nlohmann::ordered_json::array();
    for (Eigen::Index d = 0; d < coords.cols(); ++d) c.push_back(coords(i, d));
    j.push_back(std::move(e));
  }
  return j;
}

inline RenderSpec rsa_spec(const RunConfig& cfg) {
  auto spec = RenderSpec::rsa_default();
  spec.lo = cfg.rsa_lo;
  spec.hi = cfg.rsa_hi;
  return spec;
}

/// Heatmap and, when the matrix is complete, MDS scatter.
inline std::optional<Eigen::MatrixXd> render_rsa_figures(const RsaMatrix& rsa, const RunConfig& cfg,
                                                         const std::filesystem::path& dir, std::ostream& err) {
  write_figure(dir / "figures" / "rsa_heatmap.svg", render_rsa(rsa, rsa_spec(cfg)), rsa_to_csv(rsa), rsa_to_json(rsa));
  if (rsa.any_missing()) {
    err << "warning: RSA matrix has missing cells; MDS skipped\n";
    return std::nullopt;
  }
  const auto dims = std::min<Eigen::Index>(cfg.mds_dims, static_cast<Eigen::Index>(rsa.size()));
  Eigen::MatrixXd coords = mds_projection(rsa, dims);
  RenderSpec spec{PlotKind::mds_scatter, "MDS of representational similarity", 0.0, 1.0};
  write_figure(dir / "figures" / "mds_scatter.svg", render_mds(rsa.names, rsa.labels, coords, spec),
               mds_csv(rsa.names, rsa.labels, coords), mds_json(rsa.names, rsa.labels, coords));
  return coords;
}

inline int cmd_rsa(const CommandOptions& opt) {
  const auto ws = load_workspace(opt, false);
  const auto& cfg = ws.config;
  if (ws.representations.size() < 2) throw Error(Errc::config_error, "rsa needs at least 2 representations");
  const auto dir = cfg.output_dir;
  const auto rsa = pairwise_rsa(ws.representations, opt.effective_jobs());
  for (const auto& [ij, msg] : rsa.failures)
    *opt.err << "warning: " << rsa.names[ij.first] << " / " << rsa.names[ij.second] << ": " << msg << '\n';

  write_text(dir / "rsa_matrix.csv", rsa_to_csv(rsa));
  write_json(dir / "rsa_matrix.json", rsa_to_json(rsa));
  if (const auto coords = render_rsa_figures(rsa, cfg, dir, *opt.err))
    write_text(dir / "mds_coordinates.csv", mds_csv(rsa.names, rsa.labels, *coords));

  nlohmann::ordered_json wb = nlohmann::ordered_json::object();
  for (const auto& [pair, v] : within_between_summary(rsa)) wb[type_pair_name(pair)] = v;
  write_json(dir / "within_between.json", wb);

  nlohmann::ordered_json aff;
  const std::size_t k = std::min(cfg.neighbors, rsa.size() - 1);
  aff["k"] = k;
  try {
    auto& by = aff["same_type_proportion"] = nlohmann::ordered_json::object();
    for (const auto& [t, v] : same_type_neighbor_affinity(rsa, k)) by[std::string(to_string(t))] = v;
  } catch (const Error& e) {
    aff["same_type_proportion"] = nullptr;
    aff["error"] = e.what();
  }
  write_json(dir / "neighbor_affinity.json", aff);
  write_json(dir / "vocab_summary.json", ws.vocab_summary);
  *opt.log << "rsa: " << rsa.size() << " representations, " << rsa.computations << " pairs -> " << dir.string() << '\n';
  return exit_ok;
}

// ---------------------------------------------------------------------------
// probe

inline std::vector<ContentProfile> probe_all(std::span<const Representation> reps, std::span<const NormTable> norms,
                                             const ProbeConfig& cfg, unsigned jobs) {
  std::vector<ContentProfile> profiles(reps.size());
  for (std::size_t r = 0; r < reps.size(); ++r) {
    profiles[r].representation = reps[r].name;
    profiles[r].results.resize(norms.size());
  }
  if (norms.empty()) return profiles;
  parallel_for(reps.size() * norms.size(), jobs, [&](std::size_t t) {
    const std::size_t r = t / norms.size(), k = t % norms.size();
    profiles[r].results[k] = probe_norm(reps[r], norms[k], cfg);
  });
  return profiles;
}

inline nlohmann::ordered_json probe_config_json(const ProbeConfig& p) {
  nlohmann::ordered_json j;
  j["outer_folds"] = p.outer_folds;
  j["inner_folds"] = p.inner_folds;
  j["alpha_grid"] = p.alpha_grid;
  j["min_test_samples"] = p.min_test_samples;
  j["standardize"] = p.standardize;
  j["logistic_gradient_tol"] = p.logistic.gradient_tol;
  j["logistic_max_iterations"] = p.logistic.max_iterations;
  return j;
}

inline nlohmann::ordered_json profiles_json(std::span<const ContentProfile> profiles) {
  auto arr = nlohmann::ordered_json::array();
  for (const auto& p : profiles)
    for (const auto& r : p.results) {
      nlohmann::ordered_json e;
      e["representation"] = p.representation;
      e["norm"] = r.norm;
      e["category"] = r.category;
      e["n_samples"] = r.n_samples;
      if (r.skipped) {
        e["score"] = nullptr;
        e["skip_reason"] = r.skip_reason;
      } else {
        e["score"] = r.mean_score;
        e["chosen_penalties"] = r.chosen_penalties;
        e["converged"] = r.converged;
      }
      arr.push_back(std::move(e));
    }
  return arr;
}

inline RenderSpec rca_spec(const RunConfig& cfg) {
  auto spec = RenderSpec::rca_default();
  spec.lo = cfg.rca_lo;
  spec.hi = cfg.rca_hi;
  spec.order_reference = cfg.rca_order_reference;
  return spec;
}

inline int cmd_probe(const CommandOptions& opt) {
  const auto ws = load_workspace(opt, true);
  const auto& cfg = ws.config;
  const auto dir = cfg.output_dir;
  const auto profiles = probe_all(ws.representations, ws.norms, cfg.probe, opt.effective_jobs());
  const auto folds = cfg.probe.outer_folds;

  std::string all = profiles_csv_header(folds);
  for (const auto& p : profiles) {
    write_text(dir / "profiles" / (slug(p.representation) + ".csv"), profile_to_csv(p, folds));
    all += profile_csv_rows(p, folds);
  }
  write_text(dir / "content_profiles.csv", all);
  const auto table = aggregate_by_category(profiles, ws.category_of);
  write_text(dir / "category_table.csv", category_table_csv(table));

  nlohmann::ordered_json tj;
  tj["rows"] = table.rows;
  tj["categories"] = table.categories;
  write_figure(dir / "figures" / "rca_heatmap.svg", render_rca(table, ws.type_of, rca_spec(cfg)),
               category_table_csv(table), tj);

  std::size_t skipped = 0;
  for (const auto& p : profiles)
    for (const auto& r : p.results) skipped += r.skipped;
  nlohmann::ordered_json summary;
  summary["tool"] = "repsim";
  summary["version"] = kVersion;
  summary["seed"] = cfg.seed;
  summary["probe"] = probe_config_json(cfg.probe);
  summary["vocabulary"] = ws.vocab_summary;
  summary["skipped"] = skipped;
  summary["results"] = profiles_json(profiles);
  write_json(dir / "run_summary.json", summary);
  *opt.log << "probe: " << profiles.size() << " representations x " << ws.norms.size() << " norms, " << skipped
           << " skipped -> " << dir.string() << '\n';
  return exit_ok;
}

// ---------------------------------------------------------------------------
// ensemble

inline std::vector<Comparison> default_comparisons(const RunConfig& cfg) {
  if (!cfg.comparisons.empty()) return cfg.comparisons;
  std::vector<Comparison> out;
  for (std::size_t i = 0; i < cfg.ensembles.size(); ++i)
    for (std::size_t j = i + 1; j < cfg.ensembles.size(); ++j) out.push_back({cfg.ensembles[i].label, cfg.ensembles[j].label});
  return out;
}

inline int cmd_ensemble(const CommandOptions& opt) {
  const auto ws = load_workspace(opt, true);
  const auto& cfg = ws.config;
  if (cfg.ensembles.empty()) throw Error(Errc::config_error, opt.config.string() + ": no ensembles configured");
  const auto dir = cfg.output_dir / "ensemble";
  const auto res = ensemble_rca(cfg.ensembles, ws.representations, ws.norms, cfg.probe, opt.effective_jobs());
  const auto folds = cfg.probe.outer_folds;

  std::string all = profiles_csv_header(folds);
  for (const auto& p : res.profiles) {
    write_text(dir / "profiles" / (slug(p.representation) + ".csv"), profile_to_csv(p, folds));
    all += profile_csv_rows(p, folds);
  }
  write_text(dir / "content_profiles.csv", all);
  const auto table = aggregate_by_category(res.profiles, ws.category_of);
  write_text(dir / "category_table.csv", category_table_csv(table));

  auto find_profile = [&](const std::string& label) -> const ContentProfile& {
    for (const auto& p : res.profiles)
      if (p.representation == label) return p;
    throw Error(Errc::config_error, "comparison side \"" + label + "\" is neither an ensemble nor an ensemble member");
  };
  nlohmann::ordered_json summary;
  summary["tool"] = "repsim";
  summary["version"] = kVersion;
  summary["seed"] = cfg.seed;
  summary["probe"] = probe_config_json(cfg.probe);
  summary["common_vocabulary_size"] = res.vocab.size();
  auto& specs = summary["ensembles"] = nlohmann::ordered_json::array();
  for (const auto& s : cfg.ensembles) {
    nlohmann::ordered_json e;
    e["label"] = s.label;
    e["members"] = s.members;
    e["block_scaling"] = s.block_scaling == BlockScaling::none ? "none" : "per-block-column-zscore";
    specs.push_back(std::move(e));
  }
  auto& comps = summary["comparisons"] = nlohmann::ordered_json::array();
  for (const auto& c : default_comparisons(cfg)) {
    const auto rep = paired_difference_report(find_profile(c.a), find_profile(c.b), ws.category_of);
    const auto stem = "diff_" + slug(c.a) + "__" + slug(c.b);
    write_text(dir / (stem + ".csv"), diff_report_csv(rep));
    write_json(dir / (stem + ".json"), diff_report_json(rep));
    RenderSpec spec{PlotKind::diff_table, c.a + " - " + c.b, -1.0, 1.0};
    write_figure(dir / "figures" / (stem + ".svg"), render_diff_table(rep, spec), diff_report_csv(rep),
                 diff_report_json(rep));
    nlohmann::ordered_json e = diff_report_json(rep);
    e["file"] = stem + ".csv";
    comps.push_back(std::move(e));
  }
  summary["results"] = profiles_json(res.profiles);
  write_json(dir / "run_summary.json", summary);
  *opt.log << "ensemble: " << cfg.ensembles.size() << " ensembles on " << res.vocab.size() << " words, "
           << comps.size() << " comparisons -> " << dir.string() << '\n';
  return exit_ok;
}

// ---------------------------------------------------------------------------
// report

/// Reads a table written by category_table_csv.
inline CategoryTable category_table_from_csv(const std::filesystem::path& path) {
  auto in = text::open_input(path);
  std::string line;
  if (!text::read_line(in, line)) throw Error(Errc::empty_table, path.string());
  CategoryTable t;
  auto head = text::split_csv(line);
  t.categories.assign(head.begin() + 1, head.end());
  std::vector<std::vector<double>> rows;
  while (text::read_line(in, line)) {
    if (line.empty()) continue;
    auto f = text::split_csv(line);
    if (f.size() != head.size()) throw Error(Errc::malformed_line, path.string());
    t.rows.push_back(f[0]);
    std::vector<double> vals;
    for (std::size_t c = 1; c < f.size(); ++c) {
      double v = std::numeric_limits<double>::quiet_NaN();
      if (!f[c].empty() && !text::parse_double(f[c], v)) throw Error(Errc::malformed_line, path.string());
      vals.push_back(v);
    }
    rows.push_back(std::move(vals));
  }
  t.cells.resize(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(t.categories.size()));
  for (std::size_t r = 0; r < rows.size(); ++r)
    for (std::size_t c = 0; c < t.categories.size(); ++c)
      t.cells(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = rows[r][c];
  return t;
}

inline DiffReport diff_report_from_json(const nlohmann::json& j) {
  DiffReport r;
  r.label_a = j.at("a").get<std::string>();
  r.label_b = j.at("b").get<std::string>();
  for (const auto& e : j.at("categories")) {
    CategoryDiff c;
    c.category = e.at("category").get<std::string>();
    c.n_norms = e.at("n_norms").get<std::size_t>();
    if (!e.at("median_diff").is_null()) c.median_diff = e["median_diff"].get<double>();
    if (!e.at("p_value").is_null()) {
      TestResult t;
      t.statistic = e.at("wilcoxon_stat").get<double>();
      t.p_value = e["p_value"].get<double>();
      t.exact = e.at("exact").get<bool>();
      c.test = t;
    }
    r.categories.push_back(std::move(c));
  }
  return r;
}

/// Re-renders every figure from the tabular outputs already in the output directory.
inline int cmd_report(const CommandOptions& opt) {
  const auto cfg = load_run_config(opt);
  const auto dir = cfg.output_dir;
  std::map<std::string, DataType> type_of;
  for (const auto& e : cfg.representations) type_of[e.name] = e.data_type;
  std::size_t rendered = 0;

  if (std::filesystem::exists(dir / "rsa_matrix.json")) {
    auto in = text::open_input(dir / "rsa_matrix.json");
    const auto rsa = rsa_from_json(nlohmann::json::parse(in));
    rendered += render_rsa_figures(rsa, cfg, dir, *opt.err) ? 2 : 1;
  }
  if (std::filesystem::exists(dir / "category_table.csv")) {
    const auto table = category_table_from_csv(dir / "category_table.csv");
    nlohmann::ordered_json tj;
    tj["rows"] = table.rows;
    tj["categories"] = table.categories;
    write_figure(dir / "figures" / "rca_heatmap.svg", render_rca(table, type_of, rca_spec(cfg)),
                 category_table_csv(table), tj);
    ++rendered;
  }
  const auto ens = dir / "ensemble";
  if (std::filesystem::is_directory(ens)) {
    std::vector<std::filesystem::path> files;
    for (const auto& f : std::filesystem::directory_iterator(ens))
      if (f.path().extension() == ".json" && f.path().stem().string().rfind("diff_", 0) == 0) files.push_back(f.path());
    std::sort(files.begin(), files.end());
    for (const auto& f : files) {
      auto in = text::open_input(f);
      const auto rep = diff_report_from_json(nlohmann::json::parse(in));
      RenderSpec spec{PlotKind::diff_table, rep.label_a + " - " + rep.label_b, -1.0, 1.0};
      write_figure(ens / "figures" / (f.stem().string() + ".svg"), render_diff_table(rep, spec), diff_report_csv(rep),
                   diff_report_json(rep));
      ++rendered;
    }
  }
  if (rendered == 0) throw Error(Errc::file_not_found, "no analysis outputs found in " + dir.string());
  *opt.log << "report: " << rendered << " figures -> " << dir.string() << '\n';
  return exit_ok;
}

/// Runs `fn`, mapping exceptions to exit codes and printing them to opt.err.
template <class Fn>
int run_command(const CommandOptions& opt, Fn&& fn) {
  try {
    return fn();
  } catch (const Error& e) {
    *opt.err << "error: " << e.what() << '\n';
    return e.code() == Errc::config_error ? exit_config : exit_runtime;
  } catch (const std::exception& e) {
    *opt.err << "error: " << e.what() << '\n';
    return exit_runtime;
  }
}

}  // namespace repsim
