#include "sgopt/engine.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <sstream>
#include <thread>

namespace sgopt {

namespace {

std::string summarize(const ProtocolReport& report) {
  std::ostringstream out;
  out << "invalid run configuration";
  for (const std::string& v : report.violations) out << "; " << v;
  return out.str();
}

std::string divergence_message(std::int64_t iteration, int node, double norm) {
  std::ostringstream out;
  out << "iterate diverged at k=" << iteration << " (node " << node << ", |x_i| = " << norm << ")";
  return out.str();
}

}  // namespace

std::string to_string(Method method) {
  switch (method) {
    case Method::zeroth:
      return "zeroth";
    case Method::first:
      return "first";
    case Method::zeroth_baseline:
      return "zeroth-baseline";
    case Method::first_baseline:
      return "first-baseline";
  }
  return "unknown";
}

Method parse_method(const std::string& name) {
  for (auto m : {Method::zeroth, Method::first, Method::zeroth_baseline, Method::first_baseline})
    if (to_string(m) == name) return m;
  throw std::invalid_argument("unknown method '" + name +
                              "' (expected zeroth, first, zeroth-baseline or first-baseline)");
}

bool uses_zeroth_order(Method method) { return method == Method::zeroth || method == Method::zeroth_baseline; }

bool is_baseline(Method method) { return method == Method::zeroth_baseline || method == Method::first_baseline; }

double StepSchedule::alpha(std::int64_t k) const {
  if (constant) return alpha0;
  return alpha0 / static_cast<double>(k + 1 + offset);
}

std::int64_t stable_step_offset(Method method, const Problem& problem, double alpha0, DirectionKind direction) {
  const double mu = problem.mu();
  const double l = problem.lipschitz_gradient();
  double bound = 0.0;
  if (uses_zeroth_order(method)) {
    const DirectionSampler sampler(direction, problem.dim());
    const double amplification = sampler.s1() / static_cast<double>(problem.dim());
    bound = alpha0 * amplification * l * l / (2.0 * mu);
  } else {
    bound = alpha0 * l / 2.0;
  }
  return std::max<std::int64_t>(0, static_cast<std::int64_t>(std::ceil(bound)) - 1);
}

std::vector<std::int64_t> cadence_points(const Cadence& cadence, std::int64_t horizon) {
  std::vector<std::int64_t> points{0};
  if (cadence.every > 0) {
    for (std::int64_t k = cadence.every; k < horizon; k += cadence.every) points.push_back(k);
  } else {
    for (int j = 0;; ++j) {
      const double p = std::ceil(std::pow(cadence.growth, j));
      if (!(p < static_cast<double>(horizon))) break;
      const auto k = static_cast<std::int64_t>(p);
      if (k > points.back()) points.push_back(k);
    }
  }
  if (horizon > points.back()) points.push_back(horizon);
  return points;
}

ConfigError::ConfigError(ProtocolReport report) : std::invalid_argument(summarize(report)), report_(std::move(report)) {}

DivergenceError::DivergenceError(std::int64_t iteration, int node, double norm)
    : std::runtime_error(divergence_message(iteration, node, norm)), iteration_(iteration), node_(node) {}

ProtocolReport validate_run_config(const RunConfig& config) {
  ProtocolReport report;
  auto violate = [&](std::string msg) { report.violations.push_back(std::move(msg)); };
  auto warn = [&](std::string msg) { report.warnings.push_back(std::move(msg)); };

  if (!config.topology) violate("no topology");
  if (!config.problem) violate("no problem");
  if (!report.ok()) return report;

  const Topology& topo = *config.topology;
  const Problem& problem = *config.problem;
  if (topo.node_count() != problem.node_count()) {
    violate("topology has " + std::to_string(topo.node_count()) + " nodes but the problem has " +
            std::to_string(problem.node_count()) + " local costs");
  }

  ProtocolReport protocol = validate_protocol(topo, config.protocol);
  report.violations.insert(report.violations.end(), protocol.violations.begin(), protocol.violations.end());
  report.warnings.insert(report.warnings.end(), protocol.warnings.begin(), protocol.warnings.end());

  const bool zeroth = uses_zeroth_order(config.method);
  const double alpha0 = config.steps.alpha0;
  const double mu = problem.mu();
  if (!std::isfinite(alpha0) || alpha0 < 0.0) {
    violate("step size alpha0 must be finite and >= 0");
  } else if (alpha0 == 0.0) {
    warn("alpha0 = 0: pure consensus, no innovation");
  } else if (config.steps.constant) {
    warn("constant step size: the decaying-step rate guarantees do not apply");
  } else if (zeroth && !(alpha0 > 1.0 / mu)) {
    violate("zeroth-order method requires alpha0 > 1/mu (alpha0 = " + std::to_string(alpha0) +
            ", 1/mu = " + std::to_string(1.0 / mu) + ")");
  } else if (!zeroth && !(alpha0 > 2.0 / mu)) {
    warn("first-order method with alpha0 <= 2/mu: the rate degrades to O(ln(k)/k)");
  }
  if (config.steps.offset < 0) violate("step offset must be >= 0");

  if (!zeroth && config.protocol.tau != 0.5) {
    warn("first-order analysis assumes tau = 1/2 (got " + std::to_string(config.protocol.tau) + ")");
  }

  if (zeroth) {
    const SmoothingSchedule& s = config.smoothing;
    if (!(s.c0 > 0.0) || !std::isfinite(s.c0)) violate("smoothing c0 must be positive");
    if (!(s.delta > 0.0) || !std::isfinite(s.delta)) violate("smoothing delta must be positive");
    const DirectionSampler sampler(config.direction, problem.dim());
    const double standard = 1.0 / sampler.s1();
    if (s.c0 > 0.0 && std::abs(s.c0 - standard) > 1e-12 * standard) {
      warn("smoothing c0 = " + std::to_string(s.c0) + " differs from 1/s1 = " + std::to_string(standard));
    }
  }

  const NoiseModel& n = config.noise;
  for (double v : {n.szo_c, n.szo_sigma, n.sfo_c, n.sfo_sigma}) {
    if (!(v >= 0.0) || !std::isfinite(v)) {
      violate("noise parameters must be finite and >= 0");
      break;
    }
  }

  if (config.horizon < 0) violate("horizon must be >= 0");
  if (config.cadence.every < 0) violate("cadence interval must be >= 0");
  if (config.cadence.every == 0 && !(config.cadence.growth > 1.0)) violate("geometric cadence needs growth > 1");

  if (config.initial) {
    const Eigen::MatrixXd& x0 = *config.initial;
    if (x0.rows() != problem.dim() || x0.cols() != topo.node_count()) {
      violate("initial iterate must be d x N");
    } else if (!x0.allFinite()) {
      violate("initial iterate must be finite");
    }
  }
  return report;
}

Simulator::Simulator(RunConfig config)
    : config_(std::move(config)),
      sampler_(config_.direction, config_.problem ? config_.problem->dim() : 1) {
  ProtocolReport report = validate_run_config(config_);
  if (!report.ok()) throw ConfigError(std::move(report));
  const int n = config_.topology->node_count();
  const Eigen::Index d = config_.problem->dim();
  state_.x = config_.initial ? *config_.initial : Eigen::MatrixXd::Zero(d, n);
  activation_ = make_streams(config_.seed, n, StreamPurpose::activation);
  direction_ = make_streams(config_.seed, n, StreamPurpose::direction);
  szo_noise_ = make_streams(config_.seed, n, StreamPurpose::szo_noise);
  sfo_noise_ = make_streams(config_.seed, n, StreamPurpose::sfo_noise);
}

void Simulator::step() {
  if (is_baseline(config_.method)) {
    step_baseline();
  } else if (uses_zeroth_order(config_.method)) {
    step_zeroth();
  } else {
    step_first();
  }
}

ActivationRound Simulator::draw_round() {
  return sample_activation(*config_.topology, config_.protocol, state_.k, activation_);
}

void Simulator::step_zeroth() {
  const ActivationRound round = draw_round();
  mixing_step_into(round.active_edges, round.link_weight(), state_.x, mixed_);
  const Problem& problem = *config_.problem;
  const double a = config_.steps.alpha(state_.k);
  const double c = config_.smoothing.radius(state_.k);
  for (int i = 0; i < state_.node_count(); ++i) {
    const auto s = static_cast<std::size_t>(i);
    sampler_.sample_into(direction_[s], z_);
    const Eigen::VectorXd g = estimate_gradient_zo_along(problem, i, state_.x.col(i), c, z_, config_.noise,
                                                         szo_noise_[s], state_.counters);
    mixed_.col(i) -= a * g;
  }
  finish_round(round, config_.protocol.zeta(state_.k + 1));
}

void Simulator::step_first() {
  const ActivationRound round = draw_round();
  mixing_step_into(round.active_edges, round.link_weight(), state_.x, mixed_);
  const Problem& problem = *config_.problem;
  const double a = config_.steps.alpha(state_.k);
  for (int i = 0; i < state_.node_count(); ++i) {
    const auto s = static_cast<std::size_t>(i);
    const Eigen::VectorXd g = query_sfo(problem, i, state_.x.col(i), config_.noise, sfo_noise_[s], state_.counters);
    mixed_.col(i) -= a * g;
  }
  finish_round(round, config_.protocol.zeta(state_.k + 1));
}

void Simulator::step_baseline() {
  const ActivationRound round = full_activation(*config_.topology, state_.k, config_.protocol.beta(state_.k));
  mixing_step_into(round.active_edges, round.link_weight(), state_.x, mixed_);
  const Problem& problem = *config_.problem;
  const double a = config_.steps.alpha(state_.k);
  const double c = config_.smoothing.radius(state_.k);
  const bool zeroth = uses_zeroth_order(config_.method);
  for (int i = 0; i < state_.node_count(); ++i) {
    const auto s = static_cast<std::size_t>(i);
    Eigen::VectorXd g;
    if (zeroth) {
      sampler_.sample_into(direction_[s], z_);
      g = estimate_gradient_zo_along(problem, i, state_.x.col(i), c, z_, config_.noise, szo_noise_[s],
                                     state_.counters);
    } else {
      g = query_sfo(problem, i, state_.x.col(i), config_.noise, sfo_noise_[s], state_.counters);
    }
    mixed_.col(i) -= a * g;
  }
  finish_round(round, 1.0);
}

void Simulator::finish_round(const ActivationRound& round, double expected_cost) {
  state_.x.swap(mixed_);
  ++state_.k;
  state_.comm_realized += static_cast<double>(round.transmit_count) / static_cast<double>(state_.node_count());
  state_.comm_expected += expected_cost;
  check_finite();
}

void Simulator::check_finite() const {
  int worst = 0;
  double worst_norm = -1.0;
  for (int i = 0; i < state_.node_count(); ++i) {
    const double norm = state_.x.col(i).norm();
    if (!std::isfinite(norm)) throw DivergenceError(state_.k, i, norm);
    if (norm > worst_norm) {
      worst_norm = norm;
      worst = i;
    }
  }
  if (state_.x.norm() > kDivergenceThreshold) throw DivergenceError(state_.k, worst, worst_norm);
}

RunResult run(const RunConfig& config) {
  Simulator sim(config);
  const std::vector<std::int64_t> points = cadence_points(config.cadence, config.horizon);
  RunResult result;
  result.trace.rows.reserve(points.size());
  std::size_t next = 0;
  while (true) {
    if (next < points.size() && sim.state().k == points[next]) {
      result.trace.rows.push_back(compute_row(sim.state(), *config.problem));
      ++next;
    }
    if (sim.state().k >= config.horizon) break;
    sim.step();
  }
  result.final_state = sim.state();
  return result;
}

std::vector<RunResult> run_ensemble(const RunConfig& config, std::span<const std::uint64_t> seeds,
                                    unsigned threads) {
  std::vector<RunResult> results(seeds.size());
  std::vector<std::exception_ptr> errors(seeds.size());
  if (threads == 0) threads = std::max(1u, std::thread::hardware_concurrency());
  threads = std::min<unsigned>(threads, static_cast<unsigned>(std::max<std::size_t>(1, seeds.size())));

  std::atomic<std::size_t> cursor{0};
  auto worker = [&] {
    for (std::size_t i = cursor++; i < seeds.size(); i = cursor++) {
      try {
        RunConfig local = config;
        local.seed = seeds[i];
        results[i] = run(local);
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  };
  if (threads <= 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    for (unsigned t = 0; t < threads; ++t) pool.emplace_back(worker);
  }
  for (const auto& e : errors)
    if (e) std::rethrow_exception(e);
  return results;
}

}  // namespace sgopt
