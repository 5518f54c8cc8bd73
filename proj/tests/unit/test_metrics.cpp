#include <cmath>
#include <sstream>

#include <gtest/gtest.h>

#include "sgopt/metrics.hpp"
#include "sgopt/trace_io.hpp"

namespace sgopt {
namespace {

Trace power_law(double coeff, double exponent, std::int64_t horizon = 100000, double noise = 0.0,
                std::uint64_t seed = 1) {
  RandomStream rng(seed, 0, StreamPurpose::monte_carlo);
  Trace t;
  for (std::int64_t k = 1; k <= horizon; k = std::max(k + 1, static_cast<std::int64_t>(std::ceil(k * 1.05)))) {
    TraceRow row;
    row.k = k;
    row.mse = coeff * std::pow(static_cast<double>(k), exponent) * (1.0 + noise * (2.0 * rng.uniform() - 1.0));
    row.disagreement = row.mse;
    row.comm_expected = static_cast<double>(k);
    row.comm_realized = static_cast<double>(k);
    t.rows.push_back(row);
  }
  return t;
}

Problem origin_problem(Eigen::Index d, int n) {
  std::vector<QuadraticSpec> terms(static_cast<std::size_t>(n),
                                   {Eigen::MatrixXd::Identity(d, d), Eigen::VectorXd::Zero(d)});
  return make_quadratic_problem(terms);
}

TEST(ComputeRow, ConsensusAtOptimum) {
  const Problem p = make_quadratic_problem(3, 2, 1.0, 2.0, 5);
  NetworkState s;
  s.x = p.x_star().replicate(1, 3);
  const TraceRow row = compute_row(s, p);
  EXPECT_NEAR(row.mse, 0.0, 1e-30);
  EXPECT_NEAR(row.disagreement, 0.0, 1e-30);
  EXPECT_FALSE(row.test_error.has_value());
}

TEST(ComputeRow, HandExample) {
  const Problem p = origin_problem(1, 2);
  NetworkState s;
  s.x = Eigen::RowVector2d(0.0, 2.0);
  s.k = 4;
  s.comm_realized = 1.5;
  s.counters.szo = 24;
  const TraceRow row = compute_row(s, p);
  EXPECT_DOUBLE_EQ(row.mse, 2.0);
  EXPECT_DOUBLE_EQ(row.disagreement, 2.0);
  EXPECT_EQ(row.k, 4);
  EXPECT_EQ(row.comm_realized, 1.5);
  EXPECT_EQ(row.szo_count, 24u);
}

TEST(ComputeRow, DisagreementIdentityAndBound) {
  const Problem p = origin_problem(4, 7);
  RandomStream rng(2, 0, StreamPurpose::monte_carlo);
  for (int trial = 0; trial < 20; ++trial) {
    NetworkState s;
    s.x.resize(4, 7);
    for (Eigen::Index i = 0; i < s.x.size(); ++i) s.x(i) = rng.normal();
    const TraceRow row = compute_row(s, p);
    const Eigen::VectorXd xbar = s.x.rowwise().mean();
    // x* = 0: sum |x_i - xbar|^2 = sum |x_i|^2 - N |xbar|^2.
    EXPECT_NEAR(row.disagreement, s.x.squaredNorm() - 7.0 * xbar.squaredNorm(), 1e-12);
    EXPECT_LE(row.disagreement / 7.0, row.mse + 1e-12);
  }
}

TEST(ComputeRow, TestErrorAtNetworkAverage) {
  Dataset train;
  train.features = Eigen::MatrixXd::Identity(2, 2);
  train.targets = Eigen::Vector2d(1.0, 1.0);
  Problem p = make_erm_problem(train, 2, 1.0);
  Dataset test;
  test.features = Eigen::RowVector2d(1.0, 1.0);
  test.targets = Eigen::VectorXd::Constant(1, 3.0);
  p.set_test_set(test);
  NetworkState s;
  s.x = Eigen::Matrix2d::Zero();
  s.x.col(1) << 2.0, 2.0;  // xbar = (1, 1): residual -1
  EXPECT_DOUBLE_EQ(*compute_row(s, p).test_error, 1.0);
}

TEST(FitRate, ExactPowerLaws) {
  const RateFit fit = fit_rate(power_law(7.0, -2.0 / 3.0), TraceField::mse, Abscissa::iterations, {1e3, 1e5});
  EXPECT_NEAR(fit.slope, -2.0 / 3.0, 1e-9);
  EXPECT_NEAR(fit.intercept, std::log(7.0), 1e-8);
  EXPECT_NEAR(fit.residual_rms, 0.0, 1e-10);

  Trace comm = power_law(1.0, -8.0 / 9.0);
  for (TraceRow& row : comm.rows) row.comm_expected = std::pow(static_cast<double>(row.k), 0.875);
  for (TraceRow& row : comm.rows) row.mse = std::pow(row.comm_expected, -8.0 / 9.0);
  EXPECT_NEAR(fit_rate(comm, TraceField::mse, Abscissa::comm_expected, {1e3, 1e5}).slope, -8.0 / 9.0, 1e-9);
}

TEST(FitRate, RobustToMultiplicativeNoise) {
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    const Trace t = power_law(3.0, -1.0, 100000, 0.1, seed);
    EXPECT_NEAR(fit_rate(t, TraceField::mse, Abscissa::iterations, {1e3, 1e5}).slope, -1.0, 0.02);
  }
}

TEST(FitRate, WindowAndErrors) {
  const Trace t = power_law(1.0, -1.0, 1000);
  const RateFit fit = fit_rate(t, TraceField::mse, Abscissa::iterations, tail_window(1000));
  EXPECT_EQ(fit.window.k_lo, 10.0);
  std::size_t inside = 0;
  for (const TraceRow& row : t.rows) inside += row.k >= 10 && row.k <= 1000;
  EXPECT_EQ(fit.points, inside);
  EXPECT_THROW(fit_rate(t, TraceField::mse, Abscissa::iterations, {900, 1000}), RateFitError);

  Trace bad = t;
  bad.rows[60].mse = 0.0;
  EXPECT_THROW(fit_rate(bad, TraceField::mse, Abscissa::iterations, {1, 1000}), RateFitError);
  EXPECT_THROW(fit_rate(t, TraceField::test_error, Abscissa::iterations, {1, 1000}), RateFitError);
}

TEST(Ensemble, MeanAndStandardError) {
  Trace a, b, c;
  for (auto [t, v] : {std::pair{&a, 1.0}, std::pair{&b, 2.0}, std::pair{&c, 6.0}}) {
    TraceRow row;
    row.mse = v;
    row.disagreement = 2.0 * v;
    row.szo_count = 3;
    t->rows.push_back(row);
  }
  const std::vector<Trace> traces{a, b, c};
  const EnsembleTrace e = summarize_ensemble(traces);
  EXPECT_DOUBLE_EQ(e.mean.rows[0].mse, 3.0);
  // sample variance 7, se = sqrt(7/3)
  EXPECT_DOUBLE_EQ(e.mse_se[0], std::sqrt(7.0 / 3.0));
  EXPECT_DOUBLE_EQ(e.disagreement_se[0], 2.0 * std::sqrt(7.0 / 3.0));
  EXPECT_EQ(e.mean.rows[0].szo_count, 3u);

  std::vector<Trace> ragged{a, power_law(1.0, -1.0, 10)};
  EXPECT_THROW(summarize_ensemble(ragged), std::invalid_argument);
}

TEST(CompareBaseline, IdenticalTracesGiveUnitRatio) {
  const Trace t = power_law(10.0, -0.5, 10000);
  const BaselineComparison cmp = compare_baseline(t, t, 0.5, TraceField::mse, Abscissa::comm_realized);
  ASSERT_TRUE(cmp.ratio.has_value());
  EXPECT_DOUBLE_EQ(*cmp.ratio, 1.0);
}

TEST(CompareBaseline, PlantedCostCurves) {
  // error(k) = 1/k in both; baseline pays k, sparse pays k^(7/8).
  Trace sparse, baseline;
  for (std::int64_t k = 1; k <= 100000; ++k) {
    TraceRow row;
    row.k = k;
    row.mse = 1.0 / static_cast<double>(k);
    row.comm_realized = static_cast<double>(k);
    baseline.rows.push_back(row);
    row.comm_realized = std::pow(static_cast<double>(k), 0.875);
    sparse.rows.push_back(row);
  }
  for (double k_star : {10.0, 5000.0, 80000.0}) {
    const BaselineComparison cmp = compare_baseline(sparse, baseline, 1.0 / k_star, TraceField::mse, Abscissa::comm_realized);
    ASSERT_TRUE(cmp.ratio.has_value());
    EXPECT_NEAR(*cmp.ratio, std::pow(k_star, 0.125), 1e-9);
    EXPECT_EQ(cmp.sparse.k, static_cast<std::int64_t>(k_star));
  }
}

TEST(CompareBaseline, InvariantToTimeReindexing) {
  // Thinning the logged rows of a power-law curve does not move the log-log interpolated crossing.
  Trace dense_s, dense_b, sparse_s, sparse_b;
  for (std::int64_t k = 1; k <= 4096; ++k) {
    TraceRow row;
    row.k = k;
    row.mse = std::pow(static_cast<double>(k), -0.7);
    row.comm_realized = static_cast<double>(k);
    dense_b.rows.push_back(row);
    if ((k & (k - 1)) == 0) sparse_b.rows.push_back(row);
    row.comm_realized = std::pow(static_cast<double>(k), 0.8);
    dense_s.rows.push_back(row);
    if ((k & (k - 1)) == 0) sparse_s.rows.push_back(row);
  }
  const double target = std::pow(777.0, -0.7);
  const auto a = compare_baseline(dense_s, dense_b, target, TraceField::mse, Abscissa::comm_realized);
  const auto b = compare_baseline(sparse_s, sparse_b, target, TraceField::mse, Abscissa::comm_realized);
  EXPECT_NEAR(*a.ratio, *b.ratio, 1e-9);
  EXPECT_NEAR(*a.ratio, std::pow(777.0, 0.2), 1e-9);
}

TEST(CompareBaseline, UnreachedTargetsAreReportedPerTrace) {
  const Trace fast = power_law(1.0, -1.0, 1000);
  const Trace slow = power_law(1.0, -0.1, 1000);
  const auto cmp = compare_baseline(fast, slow, 0.01, TraceField::mse, Abscissa::comm_realized);
  EXPECT_TRUE(cmp.sparse.reached);
  EXPECT_FALSE(cmp.baseline.reached);
  EXPECT_FALSE(cmp.ratio.has_value());
}

TEST(Names, FieldsAndAbscissae) {
  for (auto f : {TraceField::mse, TraceField::disagreement, TraceField::test_error, TraceField::comm_expected,
                 TraceField::comm_realized})
    EXPECT_EQ(parse_trace_field(to_string(f)), f);
  for (auto a : {Abscissa::iterations, Abscissa::comm_expected, Abscissa::comm_realized})
    EXPECT_EQ(parse_abscissa(to_string(a)), a);
  EXPECT_THROW(parse_abscissa("seconds"), std::invalid_argument);
}

TEST(TraceCsv, RoundTripIsExact) {
  Trace t = power_law(3.3, -0.77, 5000, 0.1);
  for (TraceRow& row : t.rows) {
    row.comm_realized = 0.1 * static_cast<double>(row.k) + 1.0 / 3.0;
    row.szo_count = 30u * static_cast<std::uint64_t>(row.k);
    row.test_error = 1.0 / static_cast<double>(row.k + 7);
  }
  std::stringstream buf;
  write_trace_csv(buf, t);
  EXPECT_EQ(buf.str().substr(0, buf.str().find('\n')),
            "k,mse,disagreement,comm_expected,comm_realized,szo_count,sfo_count,test_error");
  EXPECT_EQ(read_trace_csv(buf), t);

  Trace plain = power_law(1.0, -1.0, 100);
  std::stringstream buf2;
  write_trace_csv(buf2, plain);
  EXPECT_EQ(buf2.str().find("test_error"), std::string::npos);
  EXPECT_EQ(read_trace_csv(buf2), plain);
}

TEST(TraceCsv, MalformedInputIsLocated) {
  std::istringstream in("k,mse,disagreement,comm_expected,comm_realized,szo_count,sfo_count\n0,1,1,0,0,0,0\n1,1,oops,0,0,0,0\n");
  try {
    read_trace_csv(in);
    FAIL();
  } catch (const TraceFormatError& e) {
    EXPECT_NE(std::string(e.what()).find("line 3"), std::string::npos) << e.what();
  }
}

TEST(TraceCsv, FormatDoubleIsShortestRoundTrip) {
  EXPECT_EQ(format_double(0.1), "0.1");
  EXPECT_EQ(format_double(1e-20), "1e-20");
  EXPECT_EQ(std::stod(format_double(1.0 / 3.0)), 1.0 / 3.0);
}

TEST(EnsembleCsv, AppendsStandardErrors) {
  const Trace a = power_law(1.0, -1.0, 50, 0.2, 1);
  const Trace b = power_law(1.0, -1.0, 50, 0.2, 2);
  const std::vector<Trace> traces{a, b};
  std::ostringstream out;
  write_ensemble_csv(out, summarize_ensemble(traces));
  EXPECT_EQ(out.str().substr(0, out.str().find('\n')),
            "k,mse,disagreement,comm_expected,comm_realized,szo_count,sfo_count,mse_se,disagreement_se");
}

}  // namespace
}  // namespace sgopt
