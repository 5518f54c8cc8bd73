#pragma once

#include <cstdint>
#include <random>
#include <vector>

namespace sgopt {

/// Tag distinguishing the independent random processes a node draws from.
enum class StreamPurpose : std::uint32_t {
  activation = 1,
  direction = 2,
  szo_noise = 3,
  sfo_noise = 4,
  generator = 5,
  monte_carlo = 6,
};

/// Independent random stream keyed by (master seed, node id, purpose).
///
/// Two streams with different keys never share engine state, so the values a
/// node consumes do not depend on the order in which other nodes are updated.
class RandomStream {
 public:
  RandomStream(std::uint64_t seed, std::uint64_t node, StreamPurpose purpose);

  double uniform();  // [0, 1)
  double normal();   // N(0, 1)
  bool bernoulli(double p) { return uniform() < p; }

  std::mt19937_64& engine() { return engine_; }

 private:
  std::mt19937_64 engine_;
  std::uniform_real_distribution<double> uniform_{0.0, 1.0};
  std::normal_distribution<double> normal_{0.0, 1.0};
};

/// One stream per node for a given purpose.
std::vector<RandomStream> make_streams(std::uint64_t seed, int node_count, StreamPurpose purpose);

}  // namespace sgopt
