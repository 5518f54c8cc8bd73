#include "sgopt/problem.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

namespace sgopt {

QuadraticCost::QuadraticCost(Eigen::MatrixXd a, Eigen::VectorXd b, double c) : a_(std::move(a)), b_(std::move(b)), c_(c) {
  if (a_.rows() != a_.cols() || a_.rows() != b_.size()) throw ProblemError("quadratic term: A must be d x d and b length d");
  a_ = 0.5 * (a_ + a_.transpose()).eval();
}

double QuadraticCost::value(const Eigen::VectorXd& x) const { return 0.5 * x.dot(a_ * x) + b_.dot(x) + c_; }

Eigen::VectorXd QuadraticCost::gradient(const Eigen::VectorXd& x) const { return a_ * x + b_; }

CubicProbeCost::CubicProbeCost(Eigen::Index dim, double mu, double lipschitz_hessian, double saturation)
    : dim_(dim), mu_(mu), m_(lipschitz_hessian), saturation_(saturation) {
  if (dim < 1) throw ProblemError("cubic probe needs dim >= 1");
  if (!(saturation > 0.0)) throw ProblemError("cubic probe saturation must be positive");
}

namespace {

// s(t) = t^3 inside [-B, B]; quadratic continuation with s'' = 6B sign(t) outside.
double smoothed_cube(double t, double b) {
  const double a = std::abs(t);
  if (a <= b) return t * t * t;
  const double u = a - b;
  return std::copysign(b * b * b + 3.0 * b * b * u + 3.0 * b * u * u, t);
}

double smoothed_cube_d1(double t, double b) {
  const double a = std::abs(t);
  if (a <= b) return 3.0 * t * t;
  return 3.0 * b * b + 6.0 * b * (a - b);
}

double smoothed_cube_d2(double t, double b) { return 6.0 * std::clamp(t, -b, b); }

}  // namespace

double CubicProbeCost::value(const Eigen::VectorXd& x) const {
  double s = 0.0;
  for (Eigen::Index j = 0; j < dim_; ++j) s += smoothed_cube(x(j), saturation_);
  return 0.5 * mu_ * x.squaredNorm() + (m_ / 6.0) * s;
}

Eigen::VectorXd CubicProbeCost::gradient(const Eigen::VectorXd& x) const {
  Eigen::VectorXd g = mu_ * x;
  for (Eigen::Index j = 0; j < dim_; ++j) g(j) += (m_ / 6.0) * smoothed_cube_d1(x(j), saturation_);
  return g;
}

Eigen::MatrixXd CubicProbeCost::hessian(const Eigen::VectorXd& x) const {
  Eigen::MatrixXd h = mu_ * Eigen::MatrixXd::Identity(dim_, dim_);
  for (Eigen::Index j = 0; j < dim_; ++j) h(j, j) += (m_ / 6.0) * smoothed_cube_d2(x(j), saturation_);
  return h;
}

std::string to_string(ProblemKind kind) {
  switch (kind) {
    case ProblemKind::quadratic:
      return "quadratic";
    case ProblemKind::cubic_probe:
      return "cubic";
    case ProblemKind::erm_least_squares:
      return "erm";
  }
  return "unknown";
}

Problem::Problem(ProblemKind kind, std::vector<std::shared_ptr<const LocalCost>> costs, double mu,
                 double lipschitz_gradient, double lipschitz_hessian, Eigen::VectorXd x_star)
    : kind_(kind),
      costs_(std::move(costs)),
      mu_(mu),
      lipschitz_gradient_(lipschitz_gradient),
      lipschitz_hessian_(lipschitz_hessian),
      x_star_(std::move(x_star)) {
  if (costs_.empty()) throw ProblemError("problem needs at least one local cost");
  if (!(mu_ > 0.0) || !(lipschitz_gradient_ >= mu_) || !(lipschitz_hessian_ >= 0.0)) {
    std::ostringstream msg;
    msg << "need 0 < mu <= L and M >= 0 (got mu=" << mu_ << ", L=" << lipschitz_gradient_ << ", M=" << lipschitz_hessian_
        << ")";
    throw ProblemError(msg.str());
  }
  for (const auto& c : costs_) {
    if (!c || c->dim() != x_star_.size()) throw ProblemError("local cost dimension does not match x*");
  }
  const double residual = total_gradient(x_star_).norm();
  if (!(residual <= 1e-8 * (1.0 + x_star_.norm()))) {
    std::ostringstream msg;
    msg << "x* is not stationary: |grad f(x*)| = " << residual;
    throw ProblemError(msg.str());
  }
}

Eigen::VectorXd Problem::total_gradient(const Eigen::VectorXd& x) const {
  Eigen::VectorXd g = Eigen::VectorXd::Zero(dim());
  for (const auto& c : costs_) g += c->gradient(x);
  return g;
}

void Problem::set_test_set(Dataset test) {
  if (test.rows() > 0 && test.dim() != dim()) throw ProblemError("test set dimension does not match the problem");
  if (test.rows() == 0) {
    test_.reset();
    return;
  }
  test_ = std::move(test);
}

double Problem::test_error(const Eigen::VectorXd& x) const {
  if (!test_) return std::numeric_limits<double>::quiet_NaN();
  return (test_->features * x - test_->targets).squaredNorm() / static_cast<double>(test_->rows());
}

namespace {

Eigen::MatrixXd random_orthogonal(Eigen::Index d, RandomStream& rng) {
  Eigen::MatrixXd g(d, d);
  for (Eigen::Index i = 0; i < d; ++i)
    for (Eigen::Index j = 0; j < d; ++j) g(i, j) = rng.normal();
  Eigen::HouseholderQR<Eigen::MatrixXd> qr(g);
  Eigen::MatrixXd q = qr.householderQ();
  // Sign fix so Q is Haar distributed.
  const Eigen::MatrixXd r = qr.matrixQR().triangularView<Eigen::Upper>();
  for (Eigen::Index j = 0; j < d; ++j)
    if (r(j, j) < 0.0) q.col(j) = -q.col(j);
  return q;
}

Problem assemble_quadratic(ProblemKind kind, std::vector<std::shared_ptr<const QuadraticCost>> terms, double mu,
                           double lipschitz) {
  const Eigen::Index d = terms.front()->dim();
  Eigen::MatrixXd a_sum = Eigen::MatrixXd::Zero(d, d);
  Eigen::VectorXd b_sum = Eigen::VectorXd::Zero(d);
  for (const auto& t : terms) {
    a_sum += t->a();
    b_sum += t->b();
  }
  Eigen::VectorXd x_star = a_sum.ldlt().solve(-b_sum);
  std::vector<std::shared_ptr<const LocalCost>> costs(terms.begin(), terms.end());
  return Problem(kind, std::move(costs), mu, lipschitz, 0.0, std::move(x_star));
}

}  // namespace

Problem make_quadratic_problem(int node_count, Eigen::Index dim, double mu, double lipschitz_gradient,
                               std::uint64_t seed, double heterogeneity) {
  if (node_count < 1 || dim < 1) throw ProblemError("quadratic problem needs N >= 1 and d >= 1");
  if (!(mu > 0.0) || mu > lipschitz_gradient) throw ProblemError("quadratic problem needs 0 < mu <= L");
  RandomStream rng(seed, 0, StreamPurpose::generator);
  std::vector<std::shared_ptr<const QuadraticCost>> terms;
  for (int i = 0; i < node_count; ++i) {
    Eigen::VectorXd spectrum(dim);
    for (Eigen::Index j = 0; j < dim; ++j) spectrum(j) = mu + (lipschitz_gradient - mu) * rng.uniform();
    if (dim >= 2) {
      spectrum(0) = mu;
      spectrum(1) = lipschitz_gradient;
    }
    const Eigen::MatrixXd q = random_orthogonal(dim, rng);
    Eigen::MatrixXd a = q * spectrum.asDiagonal() * q.transpose();
    Eigen::VectorXd b(dim);
    for (Eigen::Index j = 0; j < dim; ++j) b(j) = heterogeneity * rng.normal();
    terms.push_back(std::make_shared<QuadraticCost>(std::move(a), std::move(b)));
  }
  return assemble_quadratic(ProblemKind::quadratic, std::move(terms), mu, lipschitz_gradient);
}

Problem make_quadratic_problem(const std::vector<QuadraticSpec>& specs) {
  if (specs.empty()) throw ProblemError("need at least one quadratic term");
  std::vector<std::shared_ptr<const QuadraticCost>> terms;
  double mu = std::numeric_limits<double>::infinity();
  double lipschitz = 0.0;
  for (const auto& s : specs) {
    auto term = std::make_shared<QuadraticCost>(s.a, s.b);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(term->a(), Eigen::EigenvaluesOnly);
    mu = std::min(mu, eig.eigenvalues().minCoeff());
    lipschitz = std::max(lipschitz, eig.eigenvalues().maxCoeff());
    if (!terms.empty() && term->dim() != terms.front()->dim())
      throw ProblemError("quadratic terms differ in dimension");
    terms.push_back(std::move(term));
  }
  return assemble_quadratic(ProblemKind::quadratic, std::move(terms), mu, lipschitz);
}

Problem make_cubic_probe(Eigen::Index dim, double mu, double lipschitz_hessian, std::optional<double> saturation) {
  if (!(mu > 0.0) || lipschitz_hessian < 0.0) throw ProblemError("cubic probe needs mu > 0 and M >= 0");
  const double b = saturation.value_or(lipschitz_hessian > 0.0 ? mu / (2.0 * lipschitz_hessian) : 1.0);
  auto cost = std::make_shared<CubicProbeCost>(dim, mu, lipschitz_hessian, b);
  const double spread = lipschitz_hessian * b;
  if (spread >= mu) throw ProblemError("cubic probe saturation too large: Hessian loses positive definiteness");
  return Problem(ProblemKind::cubic_probe, {cost}, mu - spread, mu + spread, lipschitz_hessian,
                 Eigen::VectorXd::Zero(dim));
}

Problem make_erm_problem(const Dataset& train, int node_count, double lambda) {
  if (!(lambda > 0.0)) throw ProblemError("ERM regularization must be positive");
  if (!train.features.allFinite() || !train.targets.allFinite()) throw ProblemError("dataset has non-finite entries");
  const auto ranges = partition_contiguous(train.rows(), node_count);
  const Eigen::Index d = train.dim();
  std::vector<std::shared_ptr<const QuadraticCost>> terms;
  std::vector<Eigen::Index> rows;
  double gram_max = 0.0;
  for (const auto& [begin, end] : ranges) {
    const Eigen::Index n = end - begin;
    if (n == 0) throw ProblemError("empty partition");
    const auto a_block = train.features.middleRows(begin, n);
    const auto y_block = train.targets.segment(begin, n);
    const double inv_n = 1.0 / static_cast<double>(n);
    Eigen::MatrixXd gram = inv_n * (a_block.transpose() * a_block);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(gram, Eigen::EigenvaluesOnly);
    gram_max = std::max(gram_max, eig.eigenvalues().maxCoeff());
    Eigen::MatrixXd a = gram + lambda * Eigen::MatrixXd::Identity(d, d);
    Eigen::VectorXd b = -inv_n * (a_block.transpose() * y_block);
    const double c = 0.5 * inv_n * y_block.squaredNorm();
    terms.push_back(std::make_shared<QuadraticCost>(std::move(a), std::move(b), c));
    rows.push_back(n);
  }
  Problem p = assemble_quadratic(ProblemKind::erm_least_squares, std::move(terms), lambda, lambda + gram_max);
  p.set_node_rows(std::move(rows));
  return p;
}

double query_szo(const Problem& problem, int node, const Eigen::VectorXd& x, const NoiseModel& noise,
                 RandomStream& stream, OracleCounters& counters) {
  ++counters.szo;
  const double value = problem.value(node, x);
  const double var = noise.szo_variance(x);
  return var > 0.0 ? value + std::sqrt(var) * stream.normal() : value;
}

Eigen::VectorXd query_sfo(const Problem& problem, int node, const Eigen::VectorXd& x, const NoiseModel& noise,
                          RandomStream& stream, OracleCounters& counters) {
  ++counters.sfo;
  Eigen::VectorXd g = problem.gradient(node, x);
  const double var = noise.sfo_variance(x);
  if (var > 0.0) {
    const double sd = std::sqrt(var / static_cast<double>(g.size()));
    for (Eigen::Index j = 0; j < g.size(); ++j) g(j) += sd * stream.normal();
  }
  return g;
}

}  // namespace sgopt
