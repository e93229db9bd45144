#pragma once

// Run configuration (YAML). Relative paths resolve against the config file's
// directory.
//
//   seed: 13
//   output_dir: out
//   representations:
//     - {name: cbow, path: reps/cbow.txt, format: header-text, data_type: text}
//   norms:
//     manifest: norms/manifest.yaml
//   frequency: freq.csv              # optional, "word,count"
//   subset_to_base: true             # restrict representations to the base vocabulary
//   probe:
//     outer_folds: 5
//     inner_folds: 5
//     alpha_min: 1.0e-5
//     alpha_max: 1.0e5
//     alpha_count: 11
//     min_test_samples: 20
//     standardize: false
//   rsa:
//     mds_dims: 2
//     neighbors: 3
//   report:
//     rca_order_reference: ppmi_svd   # optional
//     rca_scale: [-0.1, 0.6]
//     rsa_scale: [0.0, 1.0]
//   ensembles:
//     - {label: "Text & Behavior", members: [cbow, ppmi_svd], block_scaling: per-block-column-zscore}
//   comparisons:
//     - {a: "Text & Behavior", b: "Text & Text"}

#include <yaml-cpp/yaml.h>

#include <cstdint>
#include <filesystem>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "repsim/ensemble.hpp"
#include "repsim/error.hpp"
#include "repsim/rca.hpp"
#include "repsim/representation.hpp"
#include "repsim/store.hpp"

namespace repsim {

struct RepresentationEntry {
  std::string name;
  std::filesystem::path path;
  EmbeddingFormat format = EmbeddingFormat::header_text;
  DataType data_type = DataType::text;
  int line = 0;
};

struct Comparison {
  std::string a, b;
};

struct RunConfig {
  std::filesystem::path source;
  std::vector<RepresentationEntry> representations;
  std::optional<std::filesystem::path> norm_manifest;
  std::optional<std::filesystem::path> frequency;
  bool subset_to_base = true;
  ProbeConfig probe;
  Eigen::Index mds_dims = 2;
  std::size_t neighbors = 3;
  std::optional<std::string> rca_order_reference;
  double rca_lo = -0.1, rca_hi = 0.6;
  double rsa_lo = 0.0, rsa_hi = 1.0;
  std::vector<EnsembleSpec> ensembles;
  std::vector<Comparison> comparisons;
  std::filesystem::path output_dir = "out";
  std::uint64_t seed = 0;
};

struct ConfigIssue {
  int line = 0;  // 1-based, 0 when unknown
  std::string message;
};

/// Result of reading a config: the parsed config plus every problem found.
struct ConfigLoad {
  RunConfig config;
  std::vector<ConfigIssue> issues;
  bool ok() const { return issues.empty(); }
};

namespace detail {

inline int line_of(const YAML::Node& n) { return n.Mark().line + 1; }

}  // namespace detail

/// Parses and checks the schema, name uniqueness and referenced paths.
/// Problems are collected rather than thrown so a validation run reports all of them.
inline ConfigLoad load_config(const std::filesystem::path& path) {
  ConfigLoad res;
  auto& cfg = res.config;
  cfg.source = path;
  auto issue = [&](int line, std::string msg) { res.issues.push_back({line, std::move(msg)}); };
  if (!std::filesystem::exists(path)) {
    issue(0, "config file not found: " + path.string());
    return res;
  }
  YAML::Node root;
  try {
    root = YAML::LoadFile(path.string());
  } catch (const YAML::Exception& e) {
    issue(e.mark.line + 1, "YAML parse error: " + e.msg);
    return res;
  }
  if (!root.IsMap()) {
    issue(1, "config must be a mapping");
    return res;
  }
  const auto base = path.parent_path();
  auto resolve = [&](const std::string& p) { return std::filesystem::path(p).is_absolute() ? std::filesystem::path(p) : base / p; };

  auto scalar = [&](const YAML::Node& parent, const char* key, bool required) -> std::optional<std::string> {
    const auto n = parent[key];
    if (!n) {
      if (required) issue(detail::line_of(parent), std::string("missing required key \"") + key + "\"");
      return std::nullopt;
    }
    if (!n.IsScalar()) {
      issue(detail::line_of(n), std::string("\"") + key + "\" must be a scalar");
      return std::nullopt;
    }
    return n.as<std::string>();
  };
  auto number = [&](const YAML::Node& parent, const char* key, auto& out) {
    const auto n = parent[key];
    if (!n) return;
    try {
      out = n.as<std::decay_t<decltype(out)>>();
    } catch (const YAML::Exception&) {
      issue(detail::line_of(n), std::string("\"") + key + "\" has the wrong type");
    }
  };

  static const std::set<std::string> known{"seed", "output_dir", "representations", "norms", "frequency",
                                           "subset_to_base", "probe", "rsa", "report", "ensembles", "comparisons"};
  for (const auto& kv : root) {
    const auto key = kv.first.as<std::string>();
    if (!known.count(key)) issue(detail::line_of(kv.first), "unknown key \"" + key + "\"");
  }

  number(root, "seed", cfg.seed);
  if (auto out = scalar(root, "output_dir", false)) cfg.output_dir = resolve(*out);
  else cfg.output_dir = base / "out";
  number(root, "subset_to_base", cfg.subset_to_base);

  std::set<std::string> names;
  const auto reps = root["representations"];
  if (!reps || !reps.IsSequence() || reps.size() == 0) {
    issue(reps ? detail::line_of(reps) : 1, "\"representations\" must be a non-empty list");
  } else {
    for (const auto& r : reps) {
      RepresentationEntry e;
      e.line = detail::line_of(r);
      if (!r.IsMap()) {
        issue(e.line, "representation entry must be a mapping");
        continue;
      }
      const auto name = scalar(r, "name", true);
      const auto p = scalar(r, "path", true);
      const auto fmt = scalar(r, "format", false);
      const auto dt = scalar(r, "data_type", true);
      if (name) {
        e.name = *name;
        if (!names.insert(e.name).second) issue(e.line, "duplicate representation name \"" + e.name + "\"");
      }
      if (p) {
        e.path = resolve(*p);
        if (!std::filesystem::exists(e.path)) issue(detail::line_of(r["path"]), "file not found: " + e.path.string());
      }
      if (fmt) {
        const auto f = parse_embedding_format(*fmt);
        if (!f) issue(detail::line_of(r["format"]), "format must be header-text or csv");
        else e.format = *f;
      }
      if (dt) {
        const auto t = parse_data_type(*dt);
        if (!t) issue(detail::line_of(r["data_type"]), "data_type must be text, behavior or brain");
        else e.data_type = *t;
      }
      cfg.representations.push_back(std::move(e));
    }
  }

  if (const auto norms = root["norms"]) {
    if (auto m = scalar(norms, "manifest", true)) {
      cfg.norm_manifest = resolve(*m);
      if (!std::filesystem::exists(*cfg.norm_manifest)) {
        issue(detail::line_of(norms["manifest"]), "file not found: " + cfg.norm_manifest->string());
      } else {
        try {
          for (const auto& entry : load_norm_manifest(*cfg.norm_manifest)) (void)entry;
        } catch (const Error& e) {
          issue(detail::line_of(norms["manifest"]), std::string("norm manifest: ") + e.what());
        }
      }
    }
  }
  if (auto f = scalar(root, "frequency", false)) {
    cfg.frequency = resolve(*f);
    if (!std::filesystem::exists(*cfg.frequency)) issue(detail::line_of(root["frequency"]), "file not found: " + cfg.frequency->string());
  }

  if (const auto probe = root["probe"]) {
    number(probe, "outer_folds", cfg.probe.outer_folds);
    number(probe, "inner_folds", cfg.probe.inner_folds);
    number(probe, "min_test_samples", cfg.probe.min_test_samples);
    number(probe, "standardize", cfg.probe.standardize);
    double lo = 1e-5, hi = 1e5;
    std::size_t count = 11;
    number(probe, "alpha_min", lo);
    number(probe, "alpha_max", hi);
    number(probe, "alpha_count", count);
    try {
      cfg.probe.alpha_grid = log_grid(lo, hi, count);
      cfg.probe.validate();
    } catch (const Error& e) {
      issue(detail::line_of(probe), e.what());
    }
  }
  cfg.probe.seed = cfg.seed;

  if (const auto rsa = root["rsa"]) {
    number(rsa, "mds_dims", cfg.mds_dims);
    number(rsa, "neighbors", cfg.neighbors);
  }
  if (const auto rep = root["report"]) {
    if (auto ref = scalar(rep, "rca_order_reference", false)) cfg.rca_order_reference = *ref;
    auto bounds = [&](const char* key, double& lo, double& hi) {
      const auto n = rep[key];
      if (!n) return;
      if (!n.IsSequence() || n.size() != 2) {
        issue(detail::line_of(n), std::string("\"") + key + "\" must be [lo, hi]");
        return;
      }
      lo = n[0].as<double>();
      hi = n[1].as<double>();
      if (!(hi > lo)) issue(detail::line_of(n), std::string("\"") + key + "\" needs hi > lo");
    };
    bounds("rca_scale", cfg.rca_lo, cfg.rca_hi);
    bounds("rsa_scale", cfg.rsa_lo, cfg.rsa_hi);
  }

  std::set<std::string> labels;
  if (const auto ens = root["ensembles"]) {
    if (!ens.IsSequence()) issue(detail::line_of(ens), "\"ensembles\" must be a list");
    else
      for (const auto& e : ens) {
        EnsembleSpec spec;
        const int line = detail::line_of(e);
        if (auto l = scalar(e, "label", true)) spec.label = *l;
        const auto members = e["members"];
        if (!members || !members.IsSequence()) {
          issue(line, "ensemble needs a \"members\" list");
        } else {
          for (const auto& m : members) spec.members.push_back(m.as<std::string>());
        }
        if (auto bs = scalar(e, "block_scaling", false)) {
          const auto s = parse_block_scaling(*bs);
          if (!s) issue(detail::line_of(e["block_scaling"]), "block_scaling must be none or per-block-column-zscore");
          else spec.block_scaling = *s;
        }
        for (const auto& m : spec.members)
          if (!names.count(m)) issue(line, "ensemble \"" + spec.label + "\" references unknown representation \"" + m + "\"");
        try {
          spec.validate();
        } catch (const Error& err) {
          issue(line, err.what());
        }
        if (names.count(spec.label) || !labels.insert(spec.label).second)
          issue(line, "ensemble label \"" + spec.label + "\" is not unique");
        cfg.ensembles.push_back(std::move(spec));
      }
  }
  if (const auto cmp = root["comparisons"]) {
    if (!cmp.IsSequence()) issue(detail::line_of(cmp), "\"comparisons\" must be a list");
    else
      for (const auto& c : cmp) {
        Comparison cp;
        if (auto a = scalar(c, "a", true)) cp.a = *a;
        if (auto b = scalar(c, "b", true)) cp.b = *b;
        for (const auto* side : {&cp.a, &cp.b})
          if (!side->empty() && !labels.count(*side) && !names.count(*side))
            issue(detail::line_of(c), "comparison references unknown profile \"" + *side + "\"");
        cfg.comparisons.push_back(std::move(cp));
      }
  }
  if (cfg.rca_order_reference && !names.count(*cfg.rca_order_reference))
    issue(detail::line_of(root["report"]), "rca_order_reference \"" + *cfg.rca_order_reference + "\" is not a representation");
  return res;
}

inline std::string format_issue(const std::filesystem::path& path, const ConfigIssue& i) {
  return path.string() + ":" + std::to_string(i.line) + ": " + i.message;
}

/// load_config that throws on the first issue.
inline RunConfig require_config(const std::filesystem::path& path) {
  auto res = load_config(path);
  if (!res.ok()) throw Error(Errc::config_error, format_issue(path, res.issues.front()));
  return std::move(res.config);
}

}  // namespace repsim
