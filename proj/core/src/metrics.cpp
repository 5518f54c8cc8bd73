#include "sgopt/metrics.hpp"

#include <cmath>
#include <sstream>

namespace sgopt {

TraceRow compute_row(const NetworkState& state, const Problem& problem) {
  TraceRow row;
  row.k = state.k;
  const int n = state.node_count();
  const Eigen::VectorXd xbar = state.x.rowwise().mean();
  double err = 0.0;
  double dis = 0.0;
  for (int i = 0; i < n; ++i) {
    err += (state.x.col(i) - problem.x_star()).squaredNorm();
    dis += (state.x.col(i) - xbar).squaredNorm();
  }
  row.mse = err / static_cast<double>(n);
  row.disagreement = dis;
  row.comm_expected = state.comm_expected;
  row.comm_realized = state.comm_realized;
  row.szo_count = state.counters.szo;
  row.sfo_count = state.counters.sfo;
  if (problem.has_test_set()) row.test_error = problem.test_error(xbar);
  return row;
}

std::string to_string(TraceField field) {
  switch (field) {
    case TraceField::mse:
      return "mse";
    case TraceField::disagreement:
      return "disagreement";
    case TraceField::test_error:
      return "test_error";
    case TraceField::comm_expected:
      return "comm_expected";
    case TraceField::comm_realized:
      return "comm_realized";
  }
  return "unknown";
}

std::string to_string(Abscissa abscissa) {
  switch (abscissa) {
    case Abscissa::iterations:
      return "iterations";
    case Abscissa::comm_expected:
      return "comm_expected";
    case Abscissa::comm_realized:
      return "comm_realized";
  }
  return "unknown";
}

TraceField parse_trace_field(const std::string& name) {
  for (auto f : {TraceField::mse, TraceField::disagreement, TraceField::test_error, TraceField::comm_expected,
                 TraceField::comm_realized})
    if (to_string(f) == name) return f;
  throw std::invalid_argument("unknown trace field '" + name + "'");
}

Abscissa parse_abscissa(const std::string& name) {
  for (auto a : {Abscissa::iterations, Abscissa::comm_expected, Abscissa::comm_realized})
    if (to_string(a) == name) return a;
  throw std::invalid_argument("unknown abscissa '" + name + "'");
}

double field_value(const TraceRow& row, TraceField field) {
  switch (field) {
    case TraceField::mse:
      return row.mse;
    case TraceField::disagreement:
      return row.disagreement;
    case TraceField::test_error:
      return row.test_error.value_or(std::nan(""));
    case TraceField::comm_expected:
      return row.comm_expected;
    case TraceField::comm_realized:
      return row.comm_realized;
  }
  return std::nan("");
}

double abscissa_value(const TraceRow& row, Abscissa abscissa) {
  switch (abscissa) {
    case Abscissa::iterations:
      return static_cast<double>(row.k);
    case Abscissa::comm_expected:
      return row.comm_expected;
    case Abscissa::comm_realized:
      return row.comm_realized;
  }
  return std::nan("");
}

FitWindow tail_window(std::int64_t horizon) {
  return FitWindow{static_cast<double>(horizon) / 100.0, static_cast<double>(horizon)};
}

LogLogFit fit_log_log(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size() || x.size() < 2) throw RateFitError("log-log fit needs at least 2 paired points");
  std::vector<double> lx, ly;
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (!(x[i] > 0.0) || !(y[i] > 0.0)) throw RateFitError("log-log fit needs positive values");
    lx.push_back(std::log(x[i]));
    ly.push_back(std::log(y[i]));
  }
  const auto n = static_cast<double>(lx.size());
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < lx.size(); ++i) {
    mx += lx[i];
    my += ly[i];
  }
  mx /= n;
  my /= n;
  double sxx = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < lx.size(); ++i) {
    sxx += (lx[i] - mx) * (lx[i] - mx);
    sxy += (lx[i] - mx) * (ly[i] - my);
  }
  if (!(sxx > 0.0)) throw RateFitError("abscissa is constant over the fit window");
  LogLogFit fit;
  fit.slope = sxy / sxx;
  fit.intercept = my - fit.slope * mx;
  double ss = 0.0;
  for (std::size_t i = 0; i < lx.size(); ++i) {
    const double r = ly[i] - (fit.intercept + fit.slope * lx[i]);
    ss += r * r;
  }
  fit.residual_rms = std::sqrt(ss / n);
  return fit;
}

RateFit fit_rate(const Trace& trace, TraceField field, Abscissa abscissa, FitWindow window) {
  std::vector<double> xs;
  std::vector<double> ys;
  for (const TraceRow& row : trace.rows) {
    const double k = static_cast<double>(row.k);
    if (k < window.k_lo || k > window.k_hi) continue;
    const double x = abscissa_value(row, abscissa);
    const double y = field_value(row, field);
    if (!(x > 0.0) || !(y > 0.0) || !std::isfinite(x) || !std::isfinite(y)) {
      std::ostringstream msg;
      msg << "cannot fit " << to_string(field) << " vs " << to_string(abscissa) << ": non-positive value at k=" << row.k
          << " (" << to_string(field) << "=" << y << ", abscissa=" << x << ")";
      throw RateFitError(msg.str());
    }
    xs.push_back(x);
    ys.push_back(y);
  }
  if (xs.size() < kMinFitPoints) {
    std::ostringstream msg;
    msg << "only " << xs.size() << " rows in window [" << window.k_lo << ", " << window.k_hi << "], need "
        << kMinFitPoints;
    throw RateFitError(msg.str());
  }
  const LogLogFit line = fit_log_log(xs, ys);
  RateFit fit;
  fit.slope = line.slope;
  fit.intercept = line.intercept;
  fit.residual_rms = line.residual_rms;
  fit.points = xs.size();
  fit.window = window;
  fit.field = field;
  fit.abscissa = abscissa;
  return fit;
}

EnsembleTrace summarize_ensemble(std::span<const Trace> traces) {
  if (traces.empty()) throw std::invalid_argument("summarize_ensemble: no traces");
  const std::size_t rows = traces.front().rows.size();
  for (const Trace& t : traces) {
    if (t.rows.size() != rows) throw std::invalid_argument("summarize_ensemble: traces differ in length");
  }
  const double m = static_cast<double>(traces.size());
  EnsembleTrace out;
  out.runs = traces.size();
  out.mean.rows.resize(rows);
  out.mse_se.resize(rows);
  out.disagreement_se.resize(rows);
  out.test_error_se.resize(rows);
  const bool with_test = traces.front().has_test_error();

  auto mean_se = [&](std::size_t r, auto get) {
    double sum = 0.0;
    for (const Trace& t : traces) sum += get(t.rows[r]);
    const double mean = sum / m;
    double ss = 0.0;
    for (const Trace& t : traces) ss += (get(t.rows[r]) - mean) * (get(t.rows[r]) - mean);
    const double se = traces.size() > 1 ? std::sqrt(ss / (m - 1.0) / m) : 0.0;
    return std::pair{mean, se};
  };

  for (std::size_t r = 0; r < rows; ++r) {
    const std::int64_t k = traces.front().rows[r].k;
    for (const Trace& t : traces) {
      if (t.rows[r].k != k) throw std::invalid_argument("summarize_ensemble: traces use different cadences");
    }
    TraceRow& row = out.mean.rows[r];
    row.k = k;
    std::tie(row.mse, out.mse_se[r]) = mean_se(r, [](const TraceRow& x) { return x.mse; });
    std::tie(row.disagreement, out.disagreement_se[r]) = mean_se(r, [](const TraceRow& x) { return x.disagreement; });
    row.comm_expected = mean_se(r, [](const TraceRow& x) { return x.comm_expected; }).first;
    row.comm_realized = mean_se(r, [](const TraceRow& x) { return x.comm_realized; }).first;
    row.szo_count = static_cast<std::uint64_t>(std::llround(mean_se(r, [](const TraceRow& x) { return double(x.szo_count); }).first));
    row.sfo_count = static_cast<std::uint64_t>(std::llround(mean_se(r, [](const TraceRow& x) { return double(x.sfo_count); }).first));
    if (with_test) {
      double te = 0.0;
      std::tie(te, out.test_error_se[r]) = mean_se(r, [](const TraceRow& x) { return x.test_error.value_or(0.0); });
      row.test_error = te;
    }
  }
  return out;
}

CostAtTarget cost_to_reach(const Trace& trace, TraceField error, Abscissa cost, double target) {
  CostAtTarget out;
  for (std::size_t r = 0; r < trace.rows.size(); ++r) {
    const double e1 = field_value(trace.rows[r], error);
    if (!(e1 <= target)) continue;
    out.reached = true;
    out.k = trace.rows[r].k;
    const double c1 = abscissa_value(trace.rows[r], cost);
    if (r == 0) {
      out.cost = c1;
      return out;
    }
    const double e0 = field_value(trace.rows[r - 1], error);
    const double c0 = abscissa_value(trace.rows[r - 1], cost);
    if (!(e1 > 0.0) || !(e0 > e1)) {
      out.cost = c1;
      return out;
    }
    const double t = (std::log(e0) - std::log(target)) / (std::log(e0) - std::log(e1));
    if (c0 > 0.0 && c1 > 0.0) {
      out.cost = std::exp(std::log(c0) + t * (std::log(c1) - std::log(c0)));
    } else {
      out.cost = c0 + t * (c1 - c0);
    }
    return out;
  }
  return out;
}

BaselineComparison compare_baseline(const Trace& sparse, const Trace& baseline, double target_error, TraceField error,
                                    Abscissa cost) {
  BaselineComparison out;
  out.sparse = cost_to_reach(sparse, error, cost, target_error);
  out.baseline = cost_to_reach(baseline, error, cost, target_error);
  if (out.sparse.reached && out.baseline.reached && out.sparse.cost > 0.0) {
    out.ratio = out.baseline.cost / out.sparse.cost;
  }
  return out;
}

}  // namespace sgopt
