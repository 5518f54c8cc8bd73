#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "sgopt/metrics.hpp"
#include "sgopt/network.hpp"
#include "sgopt/problem.hpp"
#include "sgopt/random.hpp"
#include "sgopt/state.hpp"
#include "sgopt/zo_estimator.hpp"

namespace sgopt {

enum class Method { zeroth, first, zeroth_baseline, first_baseline };

/// "zeroth", "first", "zeroth-baseline", "first-baseline".
std::string to_string(Method method);
Method parse_method(const std::string& name);
bool uses_zeroth_order(Method method);
bool is_baseline(Method method);

/// alpha_k = alpha0 / (k + 1 + offset), or alpha0 for every k when `constant`.
struct StepSchedule {
  double alpha0 = 1.0;
  std::int64_t offset = 0;
  bool constant = false;

  double alpha(std::int64_t k) const;
};

/// Smallest offset for which the first step is a mean-square contraction on
/// the quadratic model: alpha_0 <= 2 mu / (L^2 s1/d) for zeroth-order methods
/// and alpha_0 <= 2 / L for first-order ones.
std::int64_t stable_step_offset(Method method, const Problem& problem, double alpha0, DirectionKind direction);

/// Rows are recorded at k = 0, k = K and either every `every` iterations or,
/// when every == 0, at k = ceil(growth^j).
struct Cadence {
  std::int64_t every = 0;
  double growth = 1.05;
};

std::vector<std::int64_t> cadence_points(const Cadence& cadence, std::int64_t horizon);

struct RunConfig {
  Method method = Method::zeroth;
  std::shared_ptr<const Topology> topology;
  std::shared_ptr<const Problem> problem;
  ProtocolSchedule protocol;
  StepSchedule steps;
  SmoothingSchedule smoothing;
  DirectionKind direction = DirectionKind::gaussian;
  NoiseModel noise;
  std::int64_t horizon = 100000;
  std::uint64_t seed = 1;
  Cadence cadence;
  std::optional<Eigen::MatrixXd> initial;  // d x N; zeros when absent
};

class ConfigError : public std::invalid_argument {
 public:
  explicit ConfigError(ProtocolReport report);
  const ProtocolReport& report() const { return report_; }

 private:
  ProtocolReport report_;
};

/// Protocol checks plus step-size, smoothing, noise and shape checks.
ProtocolReport validate_run_config(const RunConfig& config);

class DivergenceError : public std::runtime_error {
 public:
  DivergenceError(std::int64_t iteration, int node, double norm);
  std::int64_t iteration() const { return iteration_; }
  int node() const { return node_; }

 private:
  std::int64_t iteration_;
  int node_;
};

inline constexpr double kDivergenceThreshold = 1e12;

/// One run's mutable state and random streams. Construction validates the
/// config and throws ConfigError on violations.
class Simulator {
 public:
  explicit Simulator(RunConfig config);

  const RunConfig& config() const { return config_; }
  const NetworkState& state() const { return state_; }

  /// Advances one synchronous round of the configured method.
  void step();

  void step_zeroth();
  void step_first();
  /// Static-Laplacian round; the innovation follows the configured method.
  void step_baseline();

 private:
  ActivationRound draw_round();
  void finish_round(const ActivationRound& round, double expected_cost);
  void check_finite() const;

  RunConfig config_;
  DirectionSampler sampler_;
  NetworkState state_;
  std::vector<RandomStream> activation_;
  std::vector<RandomStream> direction_;
  std::vector<RandomStream> szo_noise_;
  std::vector<RandomStream> sfo_noise_;
  Eigen::MatrixXd mixed_;
  Eigen::VectorXd z_;
};

struct RunResult {
  Trace trace;
  NetworkState final_state;
};

/// Runs K rounds, recording rows at the configured cadence.
RunResult run(const RunConfig& config);

/// Runs `config` once per seed on up to `threads` worker threads (0 picks the
/// hardware concurrency). Results are in seed order.
std::vector<RunResult> run_ensemble(const RunConfig& config, std::span<const std::uint64_t> seeds,
                                    unsigned threads = 0);

}  // namespace sgopt
