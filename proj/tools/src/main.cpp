#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "sgopt/dataset.hpp"
#include "sgopt/engine.hpp"
#include "sgopt_cli/commands.hpp"
#include "sgopt_cli/config.hpp"

namespace {

struct Overrides {
  std::vector<std::uint64_t> seeds;
  std::vector<std::string> methods;
  int ensemble = 0;
  std::int64_t horizon = -1;
};

void apply(const Overrides& o, sgopt::cli::ExperimentSpec& spec) {
  if (o.ensemble > 0) {
    if (!spec.seeds.empty()) spec.seed = spec.seeds.front();
    spec.seeds.clear();
    spec.ensemble = o.ensemble;
  }
  if (!o.seeds.empty()) spec.seeds = o.seeds;
  if (!o.methods.empty()) {
    spec.methods.clear();
    for (const auto& m : o.methods) {
      try {
        spec.methods.push_back(sgopt::parse_method(m));
      } catch (const std::invalid_argument& e) {
        throw sgopt::cli::SpecError(std::string("--method: ") + e.what());
      }
    }
  }
  if (o.horizon >= 0) spec.horizon = o.horizon;
}

}  // namespace

int main(int argc, char** argv) {
  using namespace sgopt::cli;

  CLI::App app{"Sparsified gossip ZO/FO optimization simulator"};
  app.require_subcommand(1);

  std::string config_path;
  std::string out_dir;
  Overrides overrides;

  auto add_common = [&](CLI::App* cmd) {
    cmd->add_option("--config", config_path, "Experiment config (INI)")->required()->check(CLI::ExistingFile);
    cmd->add_option("--out", out_dir, "Output directory");
  };

  CLI::App* run = app.add_subcommand("run", "Run experiments and write traces, fits and plots");
  add_common(run);
  run->add_option("--seed", overrides.seeds, "Master seed (repeatable)");
  run->add_option("--method", overrides.methods, "zeroth, first, zeroth-baseline or first-baseline (repeatable)");
  run->add_option("--ensemble", overrides.ensemble, "Number of consecutive seeds")->check(CLI::PositiveNumber);
  run->add_option("--horizon", overrides.horizon, "Iterations K")->check(CLI::NonNegativeNumber);

  CLI::App* validate = app.add_subcommand("validate", "Check a config without running it");
  validate->add_option("--config", config_path, "Experiment config (INI)")->required()->check(CLI::ExistingFile);
  validate->add_option("--method", overrides.methods, "Override the method list (repeatable)");

  CLI::App* bias = app.add_subcommand("bias", "Measure zeroth-order estimator bias");
  add_common(bias);

  IngestOptions ingest;
  CLI::App* ing = app.add_subcommand("ingest", "Standardize, split and partition a dataset");
  ing->add_option("--data", ingest.data, "Dataset path, or synthetic-abalone")->required();
  ing->add_option("--format", ingest.format, "libsvm or csv")->check(CLI::IsMember({"libsvm", "csv"}));
  ing->add_flag("--header", ingest.header, "CSV has a header row");
  ing->add_option("--split", ingest.split, "Test rows (count >= 1) or fraction in [0, 1)")
      ->check(CLI::NonNegativeNumber);
  ing->add_option("--nodes", ingest.nodes, "Number of nodes")->check(CLI::PositiveNumber);
  ing->add_option("--onehot", ingest.onehot, "0-based feature column to one-hot encode");
  ing->add_option("--lambda", ingest.lambda, "Ridge parameter for the L estimate");
  ing->add_option("--seed", ingest.seed, "Seed for synthetic-abalone");
  ing->add_option("--out", ingest.out, "Output directory")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitConfigError;
  }

  try {
    if (ing->parsed()) return cmd_ingest(ingest, std::cout);

    ExperimentSpec spec = parse_config_file(config_path);
    apply(overrides, spec);
    const std::filesystem::path out = out_dir.empty() ? default_output_dir(config_path) : std::filesystem::path(out_dir);
    if (validate->parsed()) return cmd_validate(spec, std::cout);
    if (bias->parsed()) return cmd_bias(spec, out, std::cout);
    return cmd_run(spec, out, std::cout);
  } catch (const SpecError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kExitConfigError;
  } catch (const sgopt::ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kExitConfigError;
  } catch (const sgopt::DatasetError& e) {
    std::cerr << "data error: " << e.what() << '\n';
    return kExitConfigError;
  } catch (const sgopt::DivergenceError& e) {
    std::cerr << "diverged: " << e.what() << '\n';
    return kExitDivergence;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitConfigError;
  }
}
