#include <cmath>
#include <numeric>

#include <gtest/gtest.h>

#include "sgopt/network.hpp"

namespace sgopt {
namespace {

TEST(Topology, CompleteTwoNodes) {
  const Topology t = Topology::build(2, {{0, 1}});
  EXPECT_NEAR(t.algebraic_connectivity(), 2.0, 1e-12);
  EXPECT_NEAR(t.spectral_radius(), 2.0, 1e-12);
}

TEST(Topology, CompleteTenMatchesDenseEigensolver) {
  const Topology t = make_complete_graph(10);
  const Eigen::MatrixXd oracle =
      10.0 * Eigen::MatrixXd::Identity(10, 10) - Eigen::MatrixXd::Ones(10, 10);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(oracle);
  EXPECT_NEAR(t.algebraic_connectivity(), eig.eigenvalues()(1), 1e-9);
  EXPECT_NEAR(t.spectral_radius(), eig.eigenvalues()(9), 1e-9);
  EXPECT_NEAR(t.algebraic_connectivity(), 10.0, 1e-9);
  EXPECT_NEAR(t.spectral_radius(), 10.0, 1e-9);
}

TEST(Topology, RingSpectrumMatchesClosedForm) {
  const int n = 8;
  const Topology t = make_ring_graph(n);
  const double pi = std::acos(-1.0);
  EXPECT_NEAR(t.algebraic_connectivity(), 2.0 - 2.0 * std::cos(2.0 * pi / n), 1e-10);
  EXPECT_NEAR(t.spectral_radius(), 4.0, 1e-10);
}

TEST(Topology, LaplacianIsSymmetricWithZeroRowSums) {
  const Topology t = make_erdos_renyi_graph(12, 0.4, 3);
  const Eigen::MatrixXd& r = t.laplacian();
  EXPECT_TRUE(r.isApprox(r.transpose()));
  EXPECT_LT(r.rowwise().sum().cwiseAbs().maxCoeff(), 1e-15);
  for (int i = 0; i < t.node_count(); ++i) EXPECT_EQ(r(i, i), t.degree(i));
}

TEST(Topology, NeighborListsAreSymmetric) {
  const Topology t = make_star_graph(5);
  EXPECT_EQ(t.degree(0), 4);
  for (int i = 1; i < 5; ++i) {
    ASSERT_EQ(t.degree(i), 1);
    EXPECT_EQ(t.neighbors(i)[0], 0);
  }
}

TEST(Topology, RejectsDisconnectedPath) {
  // Path 0-1-2 with edge (0,1) removed leaves node 0 isolated.
  EXPECT_THROW(Topology::build(3, {{1, 2}}), TopologyError);
}

TEST(Topology, RejectsSelfLoopsDuplicatesAndBadIndices) {
  EXPECT_THROW(Topology::build(3, {{0, 1}, {1, 1}, {1, 2}}), TopologyError);
  EXPECT_THROW(Topology::build(3, {{0, 1}, {1, 0}, {1, 2}}), TopologyError);
  EXPECT_THROW(Topology::build(3, {{0, 1}, {1, 3}}), TopologyError);
  EXPECT_THROW(Topology::build(0, {}), TopologyError);
}

TEST(Topology, SingleNodeHasNoLinks) {
  const Topology t = Topology::build(1, {});
  EXPECT_EQ(t.node_count(), 1);
  EXPECT_TRUE(t.edges().empty());
}

TEST(ProtocolSchedule, DerivedSequences) {
  const ProtocolSchedule s{0.8, 0.9, 0.5, 0.25};
  EXPECT_DOUBLE_EQ(s.beta0(), 0.64 * 0.81);
  for (std::int64_t k : {0, 1, 7, 1000}) {
    const double kp1 = static_cast<double>(k + 1);
    EXPECT_DOUBLE_EQ(s.rho(k), 0.8 / std::pow(kp1, 0.125));
    EXPECT_DOUBLE_EQ(s.zeta(k), 0.9 / std::pow(kp1, 0.125));
    EXPECT_NEAR(s.beta(k), s.beta0() / std::pow(kp1, 0.5), 1e-15);
  }
  for (std::int64_t k = 0; k < 100; ++k) EXPECT_LE(s.beta(k + 1), s.beta(k));
}

TEST(ValidateProtocol, BetaLambdaViolation) {
  // beta0 = 0.25, lambda_N = 10: product 2.5 > 1.
  const ProtocolReport r = validate_protocol(make_complete_graph(10), {1.0, 0.5, 0.5, 0.25});
  ASSERT_EQ(r.violations.size(), 1u);
  EXPECT_NE(r.violations[0].find("beta0*lambda_N"), std::string::npos);
}

TEST(ValidateProtocol, SmallerZetaPasses) {
  const ProtocolReport r = validate_protocol(make_complete_graph(10), {1.0, 0.3, 0.5, 0.25});
  EXPECT_TRUE(r.ok()) << r.violations.front();
}

TEST(ValidateProtocol, ExponentViolations) {
  const Topology t = make_complete_graph(10);
  for (auto [tau, eps] : {std::pair{0.6, 0.25}, std::pair{0.7, 0.25}, std::pair{0.5, 0.5}, std::pair{0.5, 0.0}}) {
    const ProtocolReport r = validate_protocol(t, {0.3, 0.3, tau, eps});
    ASSERT_FALSE(r.ok());
    EXPECT_NE(r.violations[0].find("0<tau<=1/2 and 0<epsilon<tau"), std::string::npos);
  }
}

TEST(ValidateProtocol, ZetaAndRhoBounds) {
  const Topology t = make_complete_graph(4);
  EXPECT_FALSE(validate_protocol(t, {0.3, 1.5, 0.5, 0.25}).ok());
  EXPECT_FALSE(validate_protocol(t, {0.3, 0.0, 0.5, 0.25}).ok());
  EXPECT_FALSE(validate_protocol(t, {0.0, 0.5, 0.5, 0.25}).ok());
  // rho0^2 <= 4N^2/lambda_2: 4*16/4 = 16.
  const ProtocolReport r = validate_protocol(t, {4.5, 0.01, 0.5, 0.25});
  bool found = false;
  for (const auto& v : r.violations) found = found || v.find("4N^2/lambda_2") != std::string::npos;
  EXPECT_TRUE(found);
}

TEST(ValidateProtocol, ProofSideConditionIsOnlyAWarning) {
  const ProtocolReport r = validate_protocol(make_complete_graph(10), {std::sqrt(0.1), 1.0, 0.5, 0.25});
  EXPECT_TRUE(r.ok());
  ASSERT_FALSE(r.warnings.empty());
  EXPECT_NE(r.warnings[0].find("4N^2 rho0^2"), std::string::npos);
}

TEST(SampleActivation, ZetaOneActivatesEverything) {
  const Topology t = make_ring_graph(6);
  auto streams = make_streams(1, 6, StreamPurpose::activation);
  const ActivationRound round = sample_activation(t, {0.5, 1.0, 0.5, 0.25}, 0, streams);
  EXPECT_EQ(round.transmit_count, 6);
  EXPECT_EQ(round.active_edges.size(), t.edges().size());
  for (int i = 0; i < 6; ++i) EXPECT_DOUBLE_EQ(round.psi(i), 0.5);
}

TEST(SampleActivation, PsiValuesAndEdgeRule) {
  const Topology t = make_complete_graph(7);
  const ProtocolSchedule s{0.7, 0.6, 0.5, 0.25};
  auto streams = make_streams(9, 7, StreamPurpose::activation);
  for (std::int64_t k = 0; k < 50; ++k) {
    const ActivationRound round = sample_activation(t, s, k, streams);
    int count = 0;
    for (int i = 0; i < 7; ++i) {
      const double psi = round.psi(i);
      EXPECT_TRUE(psi == 0.0 || psi == s.rho(k));
      count += psi != 0.0;
    }
    EXPECT_EQ(count, round.transmit_count);
    std::size_t expected_edges = 0;
    for (const Edge& e : t.edges()) expected_edges += round.psi(e.u) != 0.0 && round.psi(e.v) != 0.0;
    EXPECT_EQ(round.active_edges.size(), expected_edges);
    for (const Edge& e : round.active_edges) {
      EXPECT_NE(round.psi(e.u), 0.0);
      EXPECT_NE(round.psi(e.v), 0.0);
    }
    EXPECT_DOUBLE_EQ(round.link_weight(), s.rho(k) * s.rho(k));
  }
}

TEST(SampleActivation, EmpiricalFrequencyWithinBinomialBound) {
  const Topology t = Topology::build(2, {{0, 1}});
  const ProtocolSchedule s{0.5, 0.8, 0.5, 0.25};
  const std::int64_t k = 30;
  const double zeta = s.zeta(k);
  auto streams = make_streams(4, 2, StreamPurpose::activation);
  const int draws = 100000;
  int on = 0;
  for (int r = 0; r < draws; ++r) on += sample_activation(t, s, k, streams).psi(0) != 0.0;
  const double freq = static_cast<double>(on) / draws;
  EXPECT_NEAR(freq, zeta, 3.0 * std::sqrt(zeta * (1.0 - zeta) / draws));
}

TEST(SampleActivation, DeterministicGivenSeed) {
  const Topology t = make_complete_graph(5);
  const ProtocolSchedule s{0.4, 0.5, 0.5, 0.25};
  auto a = make_streams(11, 5, StreamPurpose::activation);
  auto b = make_streams(11, 5, StreamPurpose::activation);
  for (std::int64_t k = 0; k < 20; ++k) {
    const ActivationRound ra = sample_activation(t, s, k, a);
    const ActivationRound rb = sample_activation(t, s, k, b);
    EXPECT_EQ(ra.transmitting, rb.transmitting);
    EXPECT_EQ(ra.active_edges, rb.active_edges);
  }
}

TEST(MixingStep, HandEvaluatedPair) {
  const Topology t = Topology::build(2, {{0, 1}});
  const ActivationRound round = full_activation(t, 0, 0.25);
  Eigen::MatrixXd x(1, 2);
  x << 0.0, 1.0;
  const Eigen::MatrixXd y = mixing_step(round, x);
  EXPECT_DOUBLE_EQ(y(0, 0), 0.25);
  EXPECT_DOUBLE_EQ(y(0, 1), 0.75);
}

TEST(MixingStep, ConsensusAndEmptyRoundsAreFixedPoints) {
  const Topology t = make_complete_graph(4);
  Eigen::MatrixXd same(3, 4);
  for (int i = 0; i < 4; ++i) same.col(i) << 1.5, -2.0, 0.25;
  EXPECT_EQ(mixing_step(full_activation(t, 0, 0.2), same), same);

  ActivationRound quiet;
  quiet.rho = 0.3;
  quiet.transmitting.assign(4, 0);
  const Eigen::MatrixXd x = Eigen::MatrixXd::Random(3, 4);
  EXPECT_EQ(mixing_step(quiet, x), x);
}

TEST(MixingStep, MatchesDenseRealizedLaplacianAndConservesAverage) {
  const Topology t = make_erdos_renyi_graph(9, 0.5, 5);
  const ProtocolSchedule s{0.3, 0.7, 0.5, 0.25};
  auto streams = make_streams(2, 9, StreamPurpose::activation);
  Eigen::MatrixXd x = Eigen::MatrixXd::Random(4, 9);
  for (std::int64_t k = 0; k < 30; ++k) {
    const ActivationRound round = sample_activation(t, s, k, streams);
    const Eigen::MatrixXd r = realized_laplacian(t, round);
    EXPECT_TRUE(r.isApprox(r.transpose()));
    EXPECT_LT(r.rowwise().sum().cwiseAbs().maxCoeff(), 1e-15);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(r);
    EXPECT_GE(eig.eigenvalues().minCoeff(), -1e-12);
    for (const Edge& e : t.edges()) EXPECT_DOUBLE_EQ(r(e.u, e.v), -round.psi(e.u) * round.psi(e.v));

    const Eigen::MatrixXd dense = x * (Eigen::MatrixXd::Identity(9, 9) - r);  // x is d x N
    const Eigen::MatrixXd y = mixing_step(round, x);
    EXPECT_LT((y - dense).cwiseAbs().maxCoeff(), 1e-14);
    EXPECT_LT((y.rowwise().sum() - x.rowwise().sum()).cwiseAbs().maxCoeff(), 1e-13);
    x = y;
  }
}

TEST(ExpectedLaplacian, ScalesBaseLaplacian) {
  const Topology t = make_ring_graph(5);
  const ProtocolSchedule s{1.0, 0.3, 0.5, 0.25};
  EXPECT_TRUE(expected_laplacian(t, s, 0).isApprox(0.09 * t.laplacian()));
  EXPECT_TRUE(expected_laplacian(t, s, 15).isApprox(s.beta(15) * t.laplacian()));
}

TEST(CommCost, StaticBenchmarkCostsOnePerRound) {
  ProtocolSchedule s{0.3, 1.0, 0.5, 0.25};
  s.tau = s.epsilon = 1e-300;  // zeta_t == 1 up to rounding
  EXPECT_NEAR(expected_comm_cost(s, 37), 37.0, 1e-9);

  const Topology t = make_complete_graph(4);
  CommLedger ledger(4);
  for (int k = 0; k < 12; ++k) ledger.record(full_activation(t, k, 0.1));
  EXPECT_DOUBLE_EQ(ledger.realized(), 12.0);
  EXPECT_EQ(ledger.rounds(), 12);
}

TEST(CommCost, ExpectedCostIsPartialSum) {
  const ProtocolSchedule s{0.3, 0.6, 0.5, 0.25};
  double sum = 0.0;
  for (int t = 1; t <= 50; ++t) sum += s.zeta(t);
  EXPECT_DOUBLE_EQ(expected_comm_cost(s, 50), sum);
  EXPECT_EQ(expected_comm_cost(s, 0), 0.0);
}

TEST(CommCost, ExpectedCostSlopeIsSevenEighths) {
  const ProtocolSchedule s{0.3, 1.0, 0.5, 0.25};
  std::vector<double> lk, lc;
  double sum = 0.0;
  std::int64_t next = 1000;
  for (std::int64_t t = 1; t <= 100000; ++t) {
    sum += s.zeta(t);
    if (t == next) {
      lk.push_back(std::log(static_cast<double>(t)));
      lc.push_back(std::log(sum));
      next = static_cast<std::int64_t>(std::ceil(static_cast<double>(next) * 1.2));
    }
  }
  const double mx = std::accumulate(lk.begin(), lk.end(), 0.0) / lk.size();
  const double my = std::accumulate(lc.begin(), lc.end(), 0.0) / lc.size();
  double sxy = 0.0, sxx = 0.0;
  for (std::size_t i = 0; i < lk.size(); ++i) {
    sxy += (lk[i] - mx) * (lc[i] - my);
    sxx += (lk[i] - mx) * (lk[i] - mx);
  }
  EXPECT_NEAR(sxy / sxx, 0.875, 0.03);
}

TEST(CommCost, RealizedTracksExpected) {
  const Topology t = make_complete_graph(10);
  const ProtocolSchedule s{0.3, 1.0, 0.5, 0.25};
  double realized = 0.0;
  const int seeds = 20;
  const std::int64_t rounds = 100000;
  for (int seed = 1; seed <= seeds; ++seed) {
    auto streams = make_streams(static_cast<std::uint64_t>(seed), 10, StreamPurpose::activation);
    CommLedger ledger(10);
    for (std::int64_t k = 0; k < rounds; ++k) ledger.record(sample_activation(t, s, k, streams));
    realized += ledger.realized();
  }
  EXPECT_NEAR(realized / seeds / expected_comm_cost(s, rounds), 1.0, 0.02);
}

}  // namespace
}  // namespace sgopt
