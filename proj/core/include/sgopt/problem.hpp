#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "sgopt/dataset.hpp"
#include "sgopt/random.hpp"

namespace sgopt {

class ProblemError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Smooth local cost f_i with analytic derivatives.
class LocalCost {
 public:
  virtual ~LocalCost() = default;

  virtual Eigen::Index dim() const = 0;
  virtual double value(const Eigen::VectorXd& x) const = 0;
  virtual Eigen::VectorXd gradient(const Eigen::VectorXd& x) const = 0;
  virtual Eigen::MatrixXd hessian(const Eigen::VectorXd& x) const = 0;
};

/// f(x) = 1/2 x'Ax + b'x + c, A symmetric.
class QuadraticCost final : public LocalCost {
 public:
  QuadraticCost(Eigen::MatrixXd a, Eigen::VectorXd b, double c = 0.0);

  Eigen::Index dim() const override { return b_.size(); }
  double value(const Eigen::VectorXd& x) const override;
  Eigen::VectorXd gradient(const Eigen::VectorXd& x) const override;
  Eigen::MatrixXd hessian(const Eigen::VectorXd&) const override { return a_; }

  const Eigen::MatrixXd& a() const { return a_; }
  const Eigen::VectorXd& b() const { return b_; }
  double c() const { return c_; }

 private:
  Eigen::MatrixXd a_;
  Eigen::VectorXd b_;
  double c_;
};

/// f(x) = mu/2 |x|^2 + (M/6) sum_j s(x_j) where s(t) = t^3 on [-B, B] and is
/// continued with constant s'' = ±6B outside, so the Hessian is globally
/// M-Lipschitz. Hessian eigenvalues lie in [mu - M B, mu + M B].
class CubicProbeCost final : public LocalCost {
 public:
  CubicProbeCost(Eigen::Index dim, double mu, double lipschitz_hessian, double saturation);

  Eigen::Index dim() const override { return dim_; }
  double value(const Eigen::VectorXd& x) const override;
  Eigen::VectorXd gradient(const Eigen::VectorXd& x) const override;
  Eigen::MatrixXd hessian(const Eigen::VectorXd& x) const override;

  double saturation() const { return saturation_; }

 private:
  Eigen::Index dim_;
  double mu_;
  double m_;
  double saturation_;
};

enum class ProblemKind { quadratic, cubic_probe, erm_least_squares };

std::string to_string(ProblemKind kind);

/// Sum of N strongly convex local costs with known constants and minimizer.
/// Immutable; safe to share between concurrent runs.
class Problem {
 public:
  /// Throws ProblemError if the constants are inconsistent or x* is not
  /// stationary for the sum.
  Problem(ProblemKind kind, std::vector<std::shared_ptr<const LocalCost>> costs, double mu, double lipschitz_gradient,
          double lipschitz_hessian, Eigen::VectorXd x_star);

  ProblemKind kind() const { return kind_; }
  Eigen::Index dim() const { return x_star_.size(); }
  int node_count() const { return static_cast<int>(costs_.size()); }
  double mu() const { return mu_; }
  double lipschitz_gradient() const { return lipschitz_gradient_; }
  double lipschitz_hessian() const { return lipschitz_hessian_; }
  const Eigen::VectorXd& x_star() const { return x_star_; }
  const LocalCost& cost(int node) const { return *costs_.at(static_cast<std::size_t>(node)); }

  double value(int node, const Eigen::VectorXd& x) const { return cost(node).value(x); }
  Eigen::VectorXd gradient(int node, const Eigen::VectorXd& x) const { return cost(node).gradient(x); }
  Eigen::VectorXd total_gradient(const Eigen::VectorXd& x) const;

  /// Held-out set used for prediction error; rows x dim features.
  void set_test_set(Dataset test);
  bool has_test_set() const { return test_.has_value(); }
  /// Mean squared prediction error (a'x - y)^2 over the test set.
  double test_error(const Eigen::VectorXd& x) const;

  /// Training rows per node for ERM instances, empty otherwise.
  const std::vector<Eigen::Index>& node_rows() const { return node_rows_; }
  void set_node_rows(std::vector<Eigen::Index> rows) { node_rows_ = std::move(rows); }

 private:
  ProblemKind kind_;
  std::vector<std::shared_ptr<const LocalCost>> costs_;
  double mu_;
  double lipschitz_gradient_;
  double lipschitz_hessian_;
  Eigen::VectorXd x_star_;
  std::optional<Dataset> test_;
  std::vector<Eigen::Index> node_rows_;
};

struct QuadraticSpec {
  Eigen::MatrixXd a;
  Eigen::VectorXd b;
};

/// Random instance: A_i = Q_i diag(lambda) Q_i' with lambda containing both
/// mu and L (d >= 2) and the rest uniform in [mu, L]; b_i ~ N(0, heterogeneity^2 I).
Problem make_quadratic_problem(int node_count, Eigen::Index dim, double mu, double lipschitz_gradient,
                               std::uint64_t seed, double heterogeneity = 1.0);

/// Explicit terms; mu and L are read off the spectra.
Problem make_quadratic_problem(const std::vector<QuadraticSpec>& terms);

/// Single-node cubic probe. Saturation B defaults to mu / (2M), which keeps the
/// strong-convexity modulus at mu/2.
Problem make_cubic_probe(Eigen::Index dim, double mu, double lipschitz_hessian, std::optional<double> saturation = {});

/// Squared-loss ERM: f_i(x) = (1/|D_i|) sum 1/2 (a'x - y)^2 + lambda/2 |x|^2 on
/// contiguous row blocks. mu is reported as lambda; L = lambda + max_i
/// lambda_max(Gram_i).
Problem make_erm_problem(const Dataset& train, int node_count, double lambda);

struct NoiseModel {
  double szo_c = 0.0;      // c_v
  double szo_sigma = 0.0;  // sigma_v
  double sfo_c = 0.0;      // c_u
  double sfo_sigma = 0.0;  // sigma_u

  double szo_variance(const Eigen::VectorXd& x) const { return szo_c * x.squaredNorm() + szo_sigma * szo_sigma; }
  double sfo_variance(const Eigen::VectorXd& x) const { return sfo_c * x.squaredNorm() + sfo_sigma * sfo_sigma; }
};

/// Computational-cost ledger.
struct OracleCounters {
  std::uint64_t szo = 0;
  std::uint64_t sfo = 0;
};

/// f_i(x) + eta, eta ~ N(0, c_v |x|^2 + sigma_v^2).
double query_szo(const Problem& problem, int node, const Eigen::VectorXd& x, const NoiseModel& noise,
                 RandomStream& stream, OracleCounters& counters);

/// grad f_i(x) + u with i.i.d. coordinates, E|u|^2 = c_u |x|^2 + sigma_u^2.
Eigen::VectorXd query_sfo(const Problem& problem, int node, const Eigen::VectorXd& x, const NoiseModel& noise,
                          RandomStream& stream, OracleCounters& counters);

}  // namespace sgopt
