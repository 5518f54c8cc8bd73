#pragma once

#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "sgopt/random.hpp"

namespace sgopt {

class TopologyError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

struct Edge {
  int u = 0;
  int v = 0;

  friend bool operator==(const Edge&, const Edge&) = default;
};

// Eigenvalues below this are treated as zero when testing connectivity.
inline constexpr double kSpectralTolerance = 1e-9;

/// Fixed graph of allowable links. Immutable once built.
class Topology {
 public:
  /// Throws TopologyError on self-loops, duplicate edges, out-of-range
  /// endpoints, or a disconnected graph. A single node without edges is
  /// accepted and reports lambda_2 = lambda_N = 0.
  static Topology build(int node_count, std::vector<Edge> edges);

  int node_count() const { return node_count_; }
  std::span<const Edge> edges() const { return edges_; }
  std::span<const int> neighbors(int node) const { return neighbors_.at(static_cast<std::size_t>(node)); }
  int degree(int node) const { return static_cast<int>(neighbors(node).size()); }

  /// Base Laplacian D - A.
  const Eigen::MatrixXd& laplacian() const { return laplacian_; }
  double algebraic_connectivity() const { return lambda2_; }
  double spectral_radius() const { return lambda_max_; }

 private:
  Topology() = default;

  int node_count_ = 0;
  std::vector<Edge> edges_;  // normalized u < v, sorted
  std::vector<std::vector<int>> neighbors_;
  Eigen::MatrixXd laplacian_;
  double lambda2_ = 0.0;
  double lambda_max_ = 0.0;
};

Topology make_complete_graph(int n);
Topology make_ring_graph(int n);
Topology make_path_graph(int n);
Topology make_star_graph(int n);
/// G(n, p); throws TopologyError if the draw is disconnected.
Topology make_erdos_renyi_graph(int n, double p, std::uint64_t seed);

/// Decaying link weight and activation probability of the sparsifying
/// protocol: rho_k = rho0 / (k+1)^(eps/2), zeta_k = zeta0 / (k+1)^((tau-eps)/2).
struct ProtocolSchedule {
  double rho0 = 1.0;
  double zeta0 = 1.0;
  double tau = 0.5;
  double epsilon = 0.25;

  double rho(std::int64_t k) const;
  double zeta(std::int64_t k) const;
  double beta(std::int64_t k) const;  // (rho_k zeta_k)^2
  double beta0() const { return rho0 * rho0 * zeta0 * zeta0; }
};

struct ProtocolReport {
  std::vector<std::string> violations;
  std::vector<std::string> warnings;

  bool ok() const { return violations.empty(); }
};

/// Checks the schedule constants against the graph. Violations are conditions
/// the convergence guarantees need; warnings flag configurations that are
/// admissible but outside what the mixing analysis covers.
ProtocolReport validate_protocol(const Topology& topology, const ProtocolSchedule& schedule);

/// Realized activation of one round. An allowable edge is active iff both
/// endpoints drew a nonzero psi; its weight is psi_i psi_j = rho_k^2.
struct ActivationRound {
  std::int64_t k = 0;
  double rho = 0.0;
  std::vector<char> transmitting;  // psi_i != 0
  std::vector<Edge> active_edges;
  int transmit_count = 0;

  double psi(int node) const { return transmitting[static_cast<std::size_t>(node)] ? rho : 0.0; }
  double link_weight() const { return rho * rho; }
};

/// Draws psi_i for every node from its own activation stream.
ActivationRound sample_activation(const Topology& topology, const ProtocolSchedule& schedule, std::int64_t k,
                                  std::span<RandomStream> activation_streams);

/// Every node transmits and every allowable link carries `weight`.
ActivationRound full_activation(const Topology& topology, std::int64_t k, double weight);

/// x' = ((I - R(k)) kron I_d) x, with x stored as d x N (one column per node).
/// Touches only active edges.
Eigen::MatrixXd mixing_step(const ActivationRound& round, const Eigen::MatrixXd& x);

/// In-place variant of mixing_step writing into `out` (must not alias `x`).
void mixing_step_into(std::span<const Edge> edges, double weight, const Eigen::MatrixXd& x, Eigen::MatrixXd& out);

/// beta_k * R̄.
Eigen::MatrixXd expected_laplacian(const Topology& topology, const ProtocolSchedule& schedule, std::int64_t k);

/// Dense R(k) for property tests; the simulator never builds it.
Eigen::MatrixXd realized_laplacian(const Topology& topology, const ActivationRound& round);

/// Per-node transmission ledger: each round adds transmit_count / N.
class CommLedger {
 public:
  explicit CommLedger(int node_count) : node_count_(node_count) {}

  void record(const ActivationRound& round);
  double realized() const { return realized_; }
  std::int64_t rounds() const { return rounds_; }

 private:
  int node_count_;
  double realized_ = 0.0;
  std::int64_t rounds_ = 0;
};

/// Sum_{t=1}^{k} zeta_t.
double expected_comm_cost(const ProtocolSchedule& schedule, std::int64_t k);

}  // namespace sgopt
