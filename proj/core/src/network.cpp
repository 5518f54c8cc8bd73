#include "sgopt/network.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace sgopt {

Topology Topology::build(int node_count, std::vector<Edge> edges) {
  if (node_count < 1) {
    throw TopologyError("topology needs at least 1 node, got " + std::to_string(node_count));
  }
  for (Edge& e : edges) {
    if (e.u < 0 || e.u >= node_count || e.v < 0 || e.v >= node_count) {
      throw TopologyError("edge (" + std::to_string(e.u) + "," + std::to_string(e.v) + ") references a node outside [0," +
                          std::to_string(node_count) + ")");
    }
    if (e.u == e.v) {
      throw TopologyError("self-loop at node " + std::to_string(e.u));
    }
    if (e.u > e.v) std::swap(e.u, e.v);
  }
  std::sort(edges.begin(), edges.end(), [](const Edge& a, const Edge& b) { return a.u != b.u ? a.u < b.u : a.v < b.v; });
  if (auto dup = std::adjacent_find(edges.begin(), edges.end()); dup != edges.end()) {
    throw TopologyError("duplicate edge {" + std::to_string(dup->u) + "," + std::to_string(dup->v) + "}");
  }

  Topology t;
  t.node_count_ = node_count;
  t.edges_ = std::move(edges);
  t.neighbors_.assign(static_cast<std::size_t>(node_count), {});
  t.laplacian_ = Eigen::MatrixXd::Zero(node_count, node_count);
  for (const Edge& e : t.edges_) {
    t.neighbors_[static_cast<std::size_t>(e.u)].push_back(e.v);
    t.neighbors_[static_cast<std::size_t>(e.v)].push_back(e.u);
    t.laplacian_(e.u, e.v) = -1.0;
    t.laplacian_(e.v, e.u) = -1.0;
    t.laplacian_(e.u, e.u) += 1.0;
    t.laplacian_(e.v, e.v) += 1.0;
  }
  for (auto& nb : t.neighbors_) std::sort(nb.begin(), nb.end());

  if (node_count == 1) return t;  // single agent: no links, trivially connected

  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(t.laplacian_, Eigen::EigenvaluesOnly);
  const Eigen::VectorXd& lambda = eig.eigenvalues();  // ascending
  t.lambda2_ = lambda(1);
  t.lambda_max_ = lambda(node_count - 1);
  if (t.lambda2_ <= kSpectralTolerance) {
    std::ostringstream msg;
    msg << "graph is disconnected (lambda_2 = " << t.lambda2_ << ")";
    throw TopologyError(msg.str());
  }
  return t;
}

Topology make_complete_graph(int n) {
  std::vector<Edge> edges;
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j) edges.push_back({i, j});
  return Topology::build(n, std::move(edges));
}

Topology make_ring_graph(int n) {
  if (n < 3) return make_path_graph(n);
  std::vector<Edge> edges;
  for (int i = 0; i < n; ++i) edges.push_back({i, (i + 1) % n});
  return Topology::build(n, std::move(edges));
}

Topology make_path_graph(int n) {
  std::vector<Edge> edges;
  for (int i = 0; i + 1 < n; ++i) edges.push_back({i, i + 1});
  return Topology::build(n, std::move(edges));
}

Topology make_star_graph(int n) {
  std::vector<Edge> edges;
  for (int i = 1; i < n; ++i) edges.push_back({0, i});
  return Topology::build(n, std::move(edges));
}

Topology make_erdos_renyi_graph(int n, double p, std::uint64_t seed) {
  RandomStream stream(seed, 0, StreamPurpose::generator);
  std::vector<Edge> edges;
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j)
      if (stream.bernoulli(p)) edges.push_back({i, j});
  return Topology::build(n, std::move(edges));
}

double ProtocolSchedule::rho(std::int64_t k) const {
  return rho0 / std::pow(static_cast<double>(k + 1), epsilon / 2.0);
}

double ProtocolSchedule::zeta(std::int64_t k) const {
  return zeta0 / std::pow(static_cast<double>(k + 1), (tau - epsilon) / 2.0);
}

double ProtocolSchedule::beta(std::int64_t k) const {
  const double r = rho(k) * zeta(k);
  return r * r;
}

ProtocolReport validate_protocol(const Topology& topology, const ProtocolSchedule& s) {
  ProtocolReport report;
  const double n = topology.node_count();
  const double lambda2 = topology.algebraic_connectivity();
  const double lambda_max = topology.spectral_radius();
  auto num = [](double v) {
    std::ostringstream os;
    os << v;
    return os.str();
  };

  if (!(s.rho0 > 0.0)) report.violations.push_back("rho0 must be positive (got " + num(s.rho0) + ")");
  if (!(s.zeta0 > 0.0 && s.zeta0 <= 1.0))
    report.violations.push_back("zeta0 must lie in (0, 1] so that zeta_k is a probability (got " + num(s.zeta0) + ")");
  if (!(s.tau > 0.0 && s.tau <= 0.5 && s.epsilon > 0.0 && s.epsilon < s.tau))
    report.violations.push_back("schedule exponents must satisfy 0<tau<=1/2 and 0<epsilon<tau (got tau=" + num(s.tau) +
                                ", epsilon=" + num(s.epsilon) + ")");
  if (topology.node_count() == 1) return report;  // no links to mix over
  // Relative slack so boundary choices such as rho0 = 1/sqrt(lambda_N) survive rounding.
  constexpr double slack = 1.0 + 1e-12;
  if (s.rho0 * s.rho0 > slack * 4.0 * n * n / lambda2)
    report.violations.push_back("rho0^2 <= 4N^2/lambda_2(R) fails: " + num(s.rho0 * s.rho0) + " > " +
                                num(4.0 * n * n / lambda2));
  if (s.beta0() * lambda_max > slack)
    report.violations.push_back("mixing stability beta0*lambda_N(R) <= 1 fails: " + num(s.beta0()) + "*" +
                                num(lambda_max) + " = " + num(s.beta0() * lambda_max));

  if (4.0 * n * n * s.rho0 * s.rho0 > lambda2)
    report.warnings.push_back("4N^2 rho0^2 <= lambda_2(R) does not hold at k=0 (" + num(4.0 * n * n * s.rho0 * s.rho0) +
                              " > " + num(lambda2) + "); the disagreement contraction bound is not certified early on");
  if (s.rho0 * s.rho0 * lambda_max > 2.0)
    report.warnings.push_back("rho0^2*lambda_N(R) = " + num(s.rho0 * s.rho0 * lambda_max) +
                              " > 2: a realized round can expand disagreement");
  return report;
}

ActivationRound sample_activation(const Topology& topology, const ProtocolSchedule& schedule, std::int64_t k,
                                  std::span<RandomStream> activation_streams) {
  const int n = topology.node_count();
  if (static_cast<int>(activation_streams.size()) != n) {
    throw std::invalid_argument("sample_activation: need one activation stream per node");
  }
  ActivationRound round;
  round.k = k;
  round.rho = schedule.rho(k);
  round.transmitting.assign(static_cast<std::size_t>(n), 0);
  const double p = schedule.zeta(k);
  for (int i = 0; i < n; ++i) {
    const bool on = activation_streams[static_cast<std::size_t>(i)].bernoulli(p);
    round.transmitting[static_cast<std::size_t>(i)] = on ? 1 : 0;
    round.transmit_count += on ? 1 : 0;
  }
  for (const Edge& e : topology.edges()) {
    if (round.transmitting[static_cast<std::size_t>(e.u)] && round.transmitting[static_cast<std::size_t>(e.v)]) {
      round.active_edges.push_back(e);
    }
  }
  return round;
}

ActivationRound full_activation(const Topology& topology, std::int64_t k, double weight) {
  ActivationRound round;
  round.k = k;
  round.rho = std::sqrt(weight);
  round.transmitting.assign(static_cast<std::size_t>(topology.node_count()), 1);
  round.transmit_count = topology.node_count();
  round.active_edges.assign(topology.edges().begin(), topology.edges().end());
  return round;
}

void mixing_step_into(std::span<const Edge> edges, double weight, const Eigen::MatrixXd& x, Eigen::MatrixXd& out) {
  out = x;
  for (const Edge& e : edges) {
    // Same expression on both sides so the pair update conserves the sum.
    const auto diff = (weight * (x.col(e.u) - x.col(e.v))).eval();
    out.col(e.u) -= diff;
    out.col(e.v) += diff;
  }
}

Eigen::MatrixXd mixing_step(const ActivationRound& round, const Eigen::MatrixXd& x) {
  Eigen::MatrixXd out;
  mixing_step_into(round.active_edges, round.link_weight(), x, out);
  return out;
}

Eigen::MatrixXd expected_laplacian(const Topology& topology, const ProtocolSchedule& schedule, std::int64_t k) {
  return schedule.beta(k) * topology.laplacian();
}

Eigen::MatrixXd realized_laplacian(const Topology& topology, const ActivationRound& round) {
  const int n = topology.node_count();
  Eigen::MatrixXd r = Eigen::MatrixXd::Zero(n, n);
  const double w = round.link_weight();
  for (const Edge& e : round.active_edges) {
    r(e.u, e.v) -= w;
    r(e.v, e.u) -= w;
    r(e.u, e.u) += w;
    r(e.v, e.v) += w;
  }
  return r;
}

void CommLedger::record(const ActivationRound& round) {
  realized_ += static_cast<double>(round.transmit_count) / static_cast<double>(node_count_);
  ++rounds_;
}

double expected_comm_cost(const ProtocolSchedule& schedule, std::int64_t k) {
  double total = 0.0;
  for (std::int64_t t = 1; t <= k; ++t) total += schedule.zeta(t);
  return total;
}

}  // namespace sgopt
