#include "sgopt/zo_estimator.hpp"

#include <cmath>
#include <stdexcept>

namespace sgopt {

std::string to_string(DirectionKind kind) { return kind == DirectionKind::gaussian ? "gaussian" : "sphere"; }

DirectionKind parse_direction_kind(const std::string& name) {
  if (name == "gaussian") return DirectionKind::gaussian;
  if (name == "sphere") return DirectionKind::sphere;
  throw std::invalid_argument("unknown direction sampler '" + name + "' (expected gaussian or sphere)");
}

DirectionSampler::DirectionSampler(DirectionKind kind, Eigen::Index dim) : kind_(kind), dim_(dim) {
  if (dim < 1) throw std::invalid_argument("direction sampler needs dim >= 1");
}

double DirectionSampler::s1() const {
  const double d = static_cast<double>(dim_);
  return kind_ == DirectionKind::gaussian ? d * (d + 2.0) : d * d;
}

double DirectionSampler::s2() const {
  const double d = static_cast<double>(dim_);
  return kind_ == DirectionKind::gaussian ? d * (d + 2.0) * (d + 4.0) : d * d * d;
}

void DirectionSampler::sample_into(RandomStream& stream, Eigen::VectorXd& z) const {
  z.resize(dim_);
  for (Eigen::Index j = 0; j < dim_; ++j) z(j) = stream.normal();
  if (kind_ == DirectionKind::sphere) {
    double norm = z.norm();
    while (norm == 0.0) {
      for (Eigen::Index j = 0; j < dim_; ++j) z(j) = stream.normal();
      norm = z.norm();
    }
    z *= std::sqrt(static_cast<double>(dim_)) / norm;
  }
}

Eigen::VectorXd DirectionSampler::sample(RandomStream& stream) const {
  Eigen::VectorXd z;
  sample_into(stream, z);
  return z;
}

SmoothingSchedule SmoothingSchedule::standard(const DirectionSampler& sampler, double delta) {
  return SmoothingSchedule{1.0 / sampler.s1(), delta};
}

double SmoothingSchedule::radius(std::int64_t k) const { return c0 / std::pow(static_cast<double>(k + 1), delta); }

Eigen::VectorXd estimate_gradient_zo_along(const Problem& problem, int node, const Eigen::VectorXd& x, double c,
                                           const Eigen::VectorXd& z, const NoiseModel& noise, RandomStream& noise_stream,
                                           OracleCounters& counters) {
  if (!(c > 0.0)) throw std::invalid_argument("smoothing radius must be positive");
  // Query order is fixed (half step, full step, base point) so noise draws line up across runs.
  const double f_half = query_szo(problem, node, x + (0.5 * c) * z, noise, noise_stream, counters);
  const double f_full = query_szo(problem, node, x + c * z, noise, noise_stream, counters);
  const double f_base = query_szo(problem, node, x, noise, noise_stream, counters);
  const double directional = (4.0 * (f_half - f_base) - (f_full - f_base)) / c;
  return directional * z;
}

Eigen::VectorXd estimate_gradient_zo(const Problem& problem, int node, const Eigen::VectorXd& x, double c,
                                     const DirectionSampler& sampler, const NoiseModel& noise, EstimatorStreams streams,
                                     OracleCounters& counters) {
  const Eigen::VectorXd z = sampler.sample(streams.direction);
  return estimate_gradient_zo_along(problem, node, x, c, z, noise, streams.noise, counters);
}

std::vector<BiasPoint> measure_bias(const Problem& problem, int node, const Eigen::VectorXd& x,
                                    std::span<const double> radii, const DirectionSampler& sampler,
                                    std::int64_t samples_per_point, std::uint64_t seed) {
  if (samples_per_point < 2) throw std::invalid_argument("measure_bias needs at least 2 samples per point");
  const Eigen::VectorXd truth = problem.gradient(node, x);
  const NoiseModel noiseless{};
  std::vector<BiasPoint> table;
  for (std::size_t p = 0; p < radii.size(); ++p) {
    RandomStream directions(seed, p, StreamPurpose::monte_carlo);
    RandomStream unused(seed, p, StreamPurpose::szo_noise);
    OracleCounters counters;
    // Welford accumulation of the mean and per-coordinate variance.
    Eigen::VectorXd mean = Eigen::VectorXd::Zero(x.size());
    Eigen::VectorXd m2 = Eigen::VectorXd::Zero(x.size());
    Eigen::VectorXd z;
    for (std::int64_t s = 1; s <= samples_per_point; ++s) {
      sampler.sample_into(directions, z);
      const Eigen::VectorXd g = estimate_gradient_zo_along(problem, node, x, radii[p], z, noiseless, unused, counters);
      const Eigen::VectorXd delta = g - mean;
      mean += delta / static_cast<double>(s);
      m2 += delta.cwiseProduct(g - mean);
    }
    const double n = static_cast<double>(samples_per_point);
    BiasPoint point;
    point.c = radii[p];
    point.bias_norm = (mean - truth).norm();
    point.std_error = std::sqrt(m2.sum() / (n - 1.0) / n);
    point.envelope = 0.25 * radii[p] * radii[p] * problem.lipschitz_hessian() * sampler.s1();
    table.push_back(point);
  }
  return table;
}

std::vector<double> dyadic_radii(double c0, int points) {
  std::vector<double> radii;
  for (int i = 0; i < points; ++i) radii.push_back(std::ldexp(c0, -i));
  return radii;
}

}  // namespace sgopt
