#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "sgopt/problem.hpp"
#include "sgopt/random.hpp"

namespace sgopt {

enum class DirectionKind { gaussian, sphere };

std::string to_string(DirectionKind kind);
DirectionKind parse_direction_kind(const std::string& name);

/// Random perturbation directions with E[zz'] = I.
///   gaussian: z ~ N(0, I_d), s1 = d(d+2), s2 = d(d+2)(d+4)
///   sphere:   z uniform on the sphere of radius sqrt(d), s1 = d^2, s2 = d^3
class DirectionSampler {
 public:
  DirectionSampler(DirectionKind kind, Eigen::Index dim);

  DirectionKind kind() const { return kind_; }
  Eigen::Index dim() const { return dim_; }
  double s1() const;  // E|z|^4
  double s2() const;  // E|z|^6

  Eigen::VectorXd sample(RandomStream& stream) const;
  void sample_into(RandomStream& stream, Eigen::VectorXd& z) const;

 private:
  DirectionKind kind_;
  Eigen::Index dim_;
};

/// c_k = c0 / (k+1)^delta. The standard radius uses c0 = 1/s1(P).
struct SmoothingSchedule {
  double c0 = 1.0;
  double delta = 1.0 / 6.0;

  static SmoothingSchedule standard(const DirectionSampler& sampler, double delta = 1.0 / 6.0);
  double radius(std::int64_t k) const;
};

/// Streams consumed by one gradient estimate: one for z, one for oracle noise.
struct EstimatorStreams {
  RandomStream& direction;
  RandomStream& noise;
};

/// Three-query twicing estimate
///   g = [4(f(x + c/2 z) - f(x)) - (f(x + c z) - f(x))] / c * z
/// sharing one z across both finite differences. Each query draws independent
/// oracle noise. Adds exactly 3 to counters.szo.
Eigen::VectorXd estimate_gradient_zo(const Problem& problem, int node, const Eigen::VectorXd& x, double c,
                                     const DirectionSampler& sampler, const NoiseModel& noise, EstimatorStreams streams,
                                     OracleCounters& counters);

/// Same estimate for a caller-supplied direction.
Eigen::VectorXd estimate_gradient_zo_along(const Problem& problem, int node, const Eigen::VectorXd& x, double c,
                                           const Eigen::VectorXd& z, const NoiseModel& noise, RandomStream& noise_stream,
                                           OracleCounters& counters);

struct BiasPoint {
  double c = 0.0;
  double bias_norm = 0.0;   // |mean(g) - grad f(x)|
  double std_error = 0.0;   // sqrt(sum_j Var(g_j) / n)
  double envelope = 0.0;    // (c^2 / 4) * M * s1(P)
};

/// Monte Carlo bias of the noiseless estimator at `x` for each radius in `radii`.
std::vector<BiasPoint> measure_bias(const Problem& problem, int node, const Eigen::VectorXd& x,
                                    std::span<const double> radii, const DirectionSampler& sampler,
                                    std::int64_t samples_per_point, std::uint64_t seed);

/// c0 * 2^0, c0 * 2^-1, ..., c0 * 2^-(points-1).
std::vector<double> dyadic_radii(double c0, int points);

}  // namespace sgopt
