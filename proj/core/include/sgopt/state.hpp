#pragma once

#include <cstdint>

#include <Eigen/Dense>

#include "sgopt/problem.hpp"

namespace sgopt {

/// Stacked iterate x(k) stored d x N (column i is node i) plus cost ledgers.
struct NetworkState {
  std::int64_t k = 0;
  Eigen::MatrixXd x;
  double comm_realized = 0.0;  // per-node transmissions so far
  double comm_expected = 0.0;  // sum_{t=1}^{k} zeta_t
  OracleCounters counters;

  int node_count() const { return static_cast<int>(x.cols()); }
  Eigen::Index dim() const { return x.rows(); }
};

}  // namespace sgopt
