// repsim command-line tool.

#include <CLI11.hpp>

#include <iostream>

#include "repsim/commands.hpp"

int main(int argc, char** argv) {
  using namespace repsim;
  CLI::App app{"Representational similarity and content analysis"};
  app.set_version_flag("--version", std::string(kVersion));
  app.require_subcommand(1);

  CommandOptions opt;
  std::string config, out;
  std::uint64_t seed = 0;
  auto add_common = [&](CLI::App* sub, bool config_required) {
    auto* c = sub->add_option("--config", config, "run configuration (YAML)");
    if (config_required) c->required();
    sub->add_option("--jobs", opt.jobs, "worker threads (default: logical cores)")->check(CLI::PositiveNumber);
    sub->add_option("--seed", seed, "override the configured seed");
    sub->add_option("--out", out, "override the output directory");
  };

  auto* validate = app.add_subcommand("validate", "check a run configuration");
  add_common(validate, true);
  auto* rsa = app.add_subcommand("rsa", "pairwise representational similarity, MDS and summaries");
  add_common(rsa, true);
  auto* probe = app.add_subcommand("probe", "content profiles by nested cross-validated probing");
  add_common(probe, true);
  auto* ensemble = app.add_subcommand("ensemble", "ensemble content analysis and paired difference tests");
  add_common(ensemble, true);
  auto* report = app.add_subcommand("report", "re-render figures from existing outputs");
  add_common(report, true);

  auto* train = app.add_subcommand("train", "train behavior embeddings from raw data");
  train->require_subcommand(1);
  TrainArgs targs;
  std::vector<std::string> inputs;
  std::string method;
  for (const char* m : {"ppmi-svd", "sim-svd", "sg-softmax"}) {
    auto* sub = train->add_subcommand(m);
    add_common(sub, false);
    sub->add_option("--input", inputs, "input csv file(s)")->required();
    sub->add_option("--name", targs.name, "representation name (output file stem)");
    if (std::string(m) == "sg-softmax") {
      sub->add_option("--dim", targs.sg.dim, "embedding dimension")->check(CLI::PositiveNumber);
      sub->add_option("--epochs", targs.sg.epochs, "training epochs")->check(CLI::NonNegativeNumber);
      sub->add_option("--lr", targs.sg.learning_rate, "initial learning rate")->check(CLI::PositiveNumber);
    } else {
      sub->add_option("--k", targs.k, "number of SVD dimensions")->check(CLI::PositiveNumber);
    }
    sub->callback([&method, m] { method = m; });
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? exit_ok : exit_config;
  }

  opt.config = config;
  if (!out.empty()) opt.out = out;
  for (auto* sub : {validate, rsa, probe, ensemble, report})
    if (sub->parsed() && sub->count("--seed")) opt.seed = seed;
  for (auto* sub : train->get_subcommands())
    if (sub->count("--seed")) opt.seed = seed;

  return run_command(opt, [&]() -> int {
    if (validate->parsed()) return cmd_validate(opt);
    if (rsa->parsed()) return cmd_rsa(opt);
    if (probe->parsed()) return cmd_probe(opt);
    if (ensemble->parsed()) return cmd_ensemble(opt);
    if (report->parsed()) return cmd_report(opt);
    for (const auto& i : inputs) targs.inputs.emplace_back(i);
    return cmd_train(opt, method, targs);
  });
}
