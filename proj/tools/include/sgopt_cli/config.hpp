#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "sgopt/engine.hpp"

namespace sgopt::cli {

/// Bad config file: syntax error, unknown key, bad value or a violated constraint.
class SpecError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

struct TopologySpec {
  std::string graph = "complete:10";  // complete:N ring:N path:N star:N erdos_renyi:N:P
  std::uint64_t seed = 1;             // erdos_renyi draw
};

struct ProblemSpec {
  std::string kind = "quadratic";  // quadratic | erm | cubic
  // quadratic and cubic
  Eigen::Index dim = 5;
  double mu = 1.0;
  double lipschitz_gradient = 10.0;
  double lipschitz_hessian = 1.0;
  double heterogeneity = 1.0;
  std::uint64_t seed = 1;
  // erm
  std::string data;  // file path or "synthetic-abalone"
  std::string format = "csv";
  bool header = false;
  double split = 0.0;  // row count or fraction
  double lambda = 1.0;
  int onehot = -1;  // 0-based feature column to one-hot encode, -1 for none
};

struct ChecksSpec {
  std::optional<double> mse_slope;
  double mse_tolerance = 0.1;
  std::optional<double> comm_slope;
  double comm_tolerance = 0.15;
  Abscissa comm_abscissa = Abscissa::comm_expected;
  std::optional<double> disagreement_slope_max;
  std::optional<FitWindow> window;  // tail window [K/100, K] when absent
  std::vector<Method> methods;      // empty applies checks to every method
};

struct BiasSpec {
  Eigen::Index dim = 3;
  double mu = 1.0;
  double lipschitz_hessian = 1.0;
  int points = 7;
  std::int64_t samples = 1000000;
  std::uint64_t seed = 1;
};

/// Fully parsed experiment. Method-dependent defaults (alpha0, offset) stay
/// unresolved until run configs are built.
struct ExperimentSpec {
  TopologySpec topology;

  std::optional<double> rho0;  // 1/sqrt(lambda_max) when absent
  double zeta0 = 1.0;
  double tau = 0.5;
  std::optional<double> epsilon;  // tau/2 when absent

  std::optional<double> alpha0;         // 1.05/mu (zeroth) or 2.1/mu (first) when absent
  std::optional<std::int64_t> offset;   // stable_step_offset when absent ("auto")
  bool constant_step = false;

  std::optional<double> c0;  // 1/s1 when absent
  double delta = 1.0 / 6.0;
  DirectionKind direction = DirectionKind::gaussian;

  NoiseModel noise;
  ProblemSpec problem;

  std::vector<Method> methods{Method::zeroth};
  std::vector<std::uint64_t> seeds;  // explicit list; otherwise seed .. seed+ensemble-1
  std::uint64_t seed = 1;
  int ensemble = 1;
  std::int64_t horizon = 100000;
  Cadence cadence;
  unsigned threads = 0;
  bool allow_large_sweep = false;

  ChecksSpec checks;
  BiasSpec bias;

  std::filesystem::path base_dir;  // resolves relative data paths
};

inline constexpr std::size_t kMaxSweepRuns = 10000;

ExperimentSpec parse_config(std::istream& in, const std::filesystem::path& base_dir = {});
ExperimentSpec parse_config_file(const std::filesystem::path& path);

/// Seeds the sweep will run, in order.
std::vector<std::uint64_t> resolve_seeds(const ExperimentSpec& spec);

/// Built once per spec and shared by every run of the sweep.
struct Instance {
  std::shared_ptr<const Topology> topology;
  std::shared_ptr<const Problem> problem;
};

Instance build_instance(const ExperimentSpec& spec);
std::shared_ptr<const Topology> build_topology(const TopologySpec& spec);

/// RunConfig for one method with every default resolved. Seed is left at spec.seed.
RunConfig make_run_config(const ExperimentSpec& spec, const Instance& instance, Method method);

/// Every key with its effective value; method-dependent defaults are written
/// as `auto` followed by a comment listing the resolved values.
void write_resolved_config(std::ostream& out, const ExperimentSpec& spec, const Instance& instance);

}  // namespace sgopt::cli
