#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "sgopt/problem.hpp"
#include "sgopt/state.hpp"

namespace sgopt {

struct TraceRow {
  std::int64_t k = 0;
  double mse = 0.0;           // (1/N) sum_i |x_i - x*|^2
  double disagreement = 0.0;  // sum_i |x_i - xbar|^2
  double comm_expected = 0.0;
  double comm_realized = 0.0;
  std::uint64_t szo_count = 0;
  std::uint64_t sfo_count = 0;
  std::optional<double> test_error;  // at xbar(k)

  friend bool operator==(const TraceRow&, const TraceRow&) = default;
};

struct Trace {
  std::vector<TraceRow> rows;

  bool has_test_error() const { return !rows.empty() && rows.front().test_error.has_value(); }
  friend bool operator==(const Trace&, const Trace&) = default;
};

TraceRow compute_row(const NetworkState& state, const Problem& problem);

enum class TraceField { mse, disagreement, test_error, comm_expected, comm_realized };
enum class Abscissa { iterations, comm_expected, comm_realized };

std::string to_string(TraceField field);
std::string to_string(Abscissa abscissa);
TraceField parse_trace_field(const std::string& name);
Abscissa parse_abscissa(const std::string& name);

double field_value(const TraceRow& row, TraceField field);
double abscissa_value(const TraceRow& row, Abscissa abscissa);

/// Iteration range [k_lo, k_hi] selecting the rows a fit uses.
struct FitWindow {
  double k_lo = 0.0;
  double k_hi = 0.0;
};

/// Default tail window [K/100, K].
FitWindow tail_window(std::int64_t horizon);

struct RateFit {
  double slope = 0.0;
  double intercept = 0.0;
  double residual_rms = 0.0;
  std::size_t points = 0;
  FitWindow window;
  TraceField field = TraceField::mse;
  Abscissa abscissa = Abscissa::iterations;
};

class RateFitError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline constexpr std::size_t kMinFitPoints = 10;

struct LogLogFit {
  double slope = 0.0;
  double intercept = 0.0;
  double residual_rms = 0.0;
};

/// Ordinary least squares of log(y) on log(x). Needs >= 2 points, all positive.
LogLogFit fit_log_log(std::span<const double> x, std::span<const double> y);

/// Least squares of log(field) on log(abscissa) over rows with k in the window.
/// Throws RateFitError if fewer than kMinFitPoints usable rows remain or a
/// value in the window is not strictly positive.
RateFit fit_rate(const Trace& trace, TraceField field, Abscissa abscissa, FitWindow window);

/// Per-row ensemble mean and standard error. All traces must share their k column.
struct EnsembleTrace {
  Trace mean;
  std::vector<double> mse_se;
  std::vector<double> disagreement_se;
  std::vector<double> test_error_se;
  std::size_t runs = 0;
};

EnsembleTrace summarize_ensemble(std::span<const Trace> traces);

struct CostAtTarget {
  bool reached = false;
  double cost = 0.0;
  std::int64_t k = 0;  // first row at or below target
};

/// Cost at which `error` first drops to `target`, interpolated linearly in
/// log-cost against log-error between the bracketing rows.
CostAtTarget cost_to_reach(const Trace& trace, TraceField error, Abscissa cost, double target);

struct BaselineComparison {
  CostAtTarget sparse;
  CostAtTarget baseline;
  std::optional<double> ratio;  // baseline cost / sparse cost, when both reach the target
};

BaselineComparison compare_baseline(const Trace& sparse, const Trace& baseline, double target_error,
                                    TraceField error = TraceField::test_error,
                                    Abscissa cost = Abscissa::comm_realized);

}  // namespace sgopt
