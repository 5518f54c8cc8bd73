#include "sgopt_cli/commands.hpp"

#include <cmath>
#include <cstdlib>
#include <fstream>
#include <map>
#include <ostream>
#include <sstream>

#include <json.hpp>

#include "sgopt/trace_io.hpp"

namespace sgopt::cli {

namespace fs = std::filesystem;

namespace {

std::ofstream open_out(const fs::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw SpecError("cannot write '" + path.string() + "'");
  return out;
}

void print_report(std::ostream& log, const std::string& label, const ProtocolReport& report) {
  for (const auto& v : report.violations) log << "error: " << label << ": " << v << '\n';
  for (const auto& w : report.warnings) log << "warning: " << label << ": " << w << '\n';
}

bool check_applies(const ChecksSpec& checks, Method method) {
  if (checks.methods.empty()) return true;
  for (Method m : checks.methods)
    if (m == method) return true;
  return false;
}

struct FitLine {
  std::string label;
  std::optional<RateFit> fit;
  std::string error;
};

FitLine try_fit(const Trace& trace, TraceField field, Abscissa abscissa, FitWindow window) {
  FitLine line;
  line.label = to_string(field) + " vs " + to_string(abscissa);
  try {
    line.fit = fit_rate(trace, field, abscissa, window);
  } catch (const RateFitError& e) {
    line.error = e.what();
  }
  return line;
}

void write_plot_script(const fs::path& path, const std::vector<std::pair<std::string, std::string>>& series,
                       bool with_test) {
  std::ofstream out = open_out(path);
  out << "# gnuplot script; run from this directory: gnuplot plot.gp\n";
  out << "set datafile separator ','\n";
  out << "set logscale xy\n";
  out << "set grid\n";
  out << "set key top right\n";
  out << "set terminal pngcairo size 900,600\n";
  // Columns: 1 k, 2 mse, 3 disagreement, 4 comm_expected, 5 comm_realized, 8 test_error.
  auto plot = [&](const std::string& file, const std::string& xlabel, const std::string& ylabel, int xcol,
                  int ycol) {
    out << "\nset output '" << file << "'\n";
    out << "set xlabel '" << xlabel << "'\n";
    out << "set ylabel '" << ylabel << "'\n";
    out << "plot ";
    for (std::size_t i = 0; i < series.size(); ++i) {
      out << (i ? ", \\\n     " : "") << "'" << series[i].second << "' using " << xcol << ":" << ycol
          << " every ::1 with lines title '" << series[i].first << "'";
    }
    out << '\n';
  };
  plot("mse_vs_iterations.png", "iteration k", "MSE", 1, 2);
  plot("mse_vs_comm.png", "communication cost per node", "MSE", 5, 2);
  plot("disagreement_vs_iterations.png", "iteration k", "disagreement", 1, 3);
  if (with_test) {
    plot("test_error_vs_iterations.png", "iteration k", "test error", 1, 8);
    plot("test_error_vs_comm.png", "communication cost per node", "test error", 5, 8);
  }
}

}  // namespace

fs::path default_output_dir(const fs::path& config_path) {
  const char* root = std::getenv(kOutputRootEnv);
  const fs::path base = (root && *root) ? fs::path(root) : fs::path("sgopt-out");
  return base / config_path.stem();
}

std::string to_json_line(const CheckOutcome& outcome) {
  nlohmann::json j;
  j["check"] = outcome.check;
  j["method"] = outcome.method;
  j["expected"] = outcome.expected;
  j["got"] = outcome.got;
  j["tolerance"] = outcome.tolerance;
  j["passed"] = outcome.passed;
  if (!outcome.note.empty()) j["note"] = outcome.note;
  return j.dump();
}

int cmd_validate(const ExperimentSpec& spec, std::ostream& log) {
  const Instance instance = build_instance(spec);
  bool ok = true;
  for (Method m : spec.methods) {
    const RunConfig cfg = make_run_config(spec, instance, m);
    const ProtocolReport report = validate_run_config(cfg);
    print_report(log, to_string(m), report);
    ok = ok && report.ok();
  }
  log << (ok ? "config ok" : "config invalid") << '\n';
  return ok ? kExitOk : kExitConfigError;
}

int cmd_run(const ExperimentSpec& spec, const fs::path& out_dir, std::ostream& log) {
  const std::vector<std::uint64_t> seeds = resolve_seeds(spec);
  const std::size_t total = seeds.size() * spec.methods.size();
  if (total > kMaxSweepRuns && !spec.allow_large_sweep) {
    throw SpecError("sweep of " + std::to_string(total) + " runs exceeds " + std::to_string(kMaxSweepRuns) +
                    "; set [run] allow_large_sweep = true to override");
  }
  const Instance instance = build_instance(spec);

  std::vector<RunConfig> configs;
  bool valid = true;
  for (Method m : spec.methods) {
    configs.push_back(make_run_config(spec, instance, m));
    const ProtocolReport report = validate_run_config(configs.back());
    print_report(log, to_string(m), report);
    valid = valid && report.ok();
  }
  if (!valid) return kExitConfigError;

  fs::create_directories(out_dir);
  {
    std::ofstream out = open_out(out_dir / "resolved.cfg");
    write_resolved_config(out, spec, instance);
  }

  const bool flat = spec.methods.size() == 1;
  const FitWindow window = spec.checks.window.value_or(tail_window(spec.horizon));
  std::vector<CheckOutcome> outcomes;
  std::vector<std::pair<std::string, std::string>> series;
  std::ofstream fits = open_out(out_dir / "ratefit.txt");
  std::ofstream failures = open_out(out_dir / "failures.jsonl");
  bool with_test = false;

  for (const RunConfig& cfg : configs) {
    const std::string name = to_string(cfg.method);
    const fs::path dir = flat ? out_dir : out_dir / name;
    fs::create_directories(dir);

    std::vector<RunResult> results;
    try {
      results = run_ensemble(cfg, seeds, spec.threads);
    } catch (const DivergenceError& e) {
      CheckOutcome o{"divergence", name, kDivergenceThreshold, static_cast<double>(e.iteration()), 0.0, false,
                     e.what()};
      failures << to_json_line(o) << '\n';
      log << "error: " << name << ": " << e.what() << '\n';
      return kExitDivergence;
    }

    std::map<std::uint64_t, int> seen;
    std::vector<Trace> traces;
    for (std::size_t i = 0; i < seeds.size(); ++i) {
      const int repeat = seen[seeds[i]]++;
      std::string file = "trace_seed" + std::to_string(seeds[i]);
      if (repeat > 0) file += "-r" + std::to_string(repeat + 1);
      std::ofstream out = open_out(dir / (file + ".csv"));
      write_trace_csv(out, results[i].trace);
      traces.push_back(std::move(results[i].trace));
    }
    const EnsembleTrace ensemble = summarize_ensemble(traces);
    {
      std::ofstream out = open_out(dir / "ensemble.csv");
      write_ensemble_csv(out, ensemble);
    }
    with_test = with_test || ensemble.mean.has_test_error();
    series.emplace_back(name, flat ? "ensemble.csv" : name + "/ensemble.csv");

    const Trace& mean = ensemble.mean;
    std::vector<FitLine> lines{
        try_fit(mean, TraceField::mse, Abscissa::iterations, window),
        try_fit(mean, TraceField::mse, Abscissa::comm_expected, window),
        try_fit(mean, TraceField::mse, Abscissa::comm_realized, window),
        try_fit(mean, TraceField::disagreement, Abscissa::iterations, window),
        try_fit(mean, TraceField::comm_expected, Abscissa::iterations, window),
    };
    if (mean.has_test_error()) {
      lines.push_back(try_fit(mean, TraceField::test_error, Abscissa::iterations, window));
      lines.push_back(try_fit(mean, TraceField::test_error, Abscissa::comm_realized, window));
    }
    fits << "[" << name << "] runs=" << ensemble.runs << " window=[" << window.k_lo << ", " << window.k_hi
         << "]\n";
    for (const FitLine& l : lines) {
      if (l.fit) {
        fits << "  " << l.label << ": slope=" << format_double(l.fit->slope)
             << " intercept=" << format_double(l.fit->intercept)
             << " residual_rms=" << format_double(l.fit->residual_rms) << " points=" << l.fit->points << '\n';
      } else {
        fits << "  " << l.label << ": unavailable (" << l.error << ")\n";
      }
    }

    if (!check_applies(spec.checks, cfg.method)) continue;
    auto slope_of = [&](TraceField f, Abscissa a) -> std::pair<double, std::string> {
      for (const FitLine& l : lines) {
        if (l.label == to_string(f) + " vs " + to_string(a)) {
          return l.fit ? std::pair{l.fit->slope, std::string{}} : std::pair{std::nan(""), l.error};
        }
      }
      const FitLine l = try_fit(mean, f, a, window);
      return l.fit ? std::pair{l.fit->slope, std::string{}} : std::pair{std::nan(""), l.error};
    };
    if (spec.checks.mse_slope) {
      auto [got, why] = slope_of(TraceField::mse, Abscissa::iterations);
      const bool pass = std::abs(got - *spec.checks.mse_slope) <= spec.checks.mse_tolerance;
      outcomes.push_back({"mse_slope", name, *spec.checks.mse_slope, got, spec.checks.mse_tolerance, pass, why});
    }
    if (spec.checks.comm_slope) {
      auto [got, why] = slope_of(TraceField::mse, spec.checks.comm_abscissa);
      const bool pass = std::abs(got - *spec.checks.comm_slope) <= spec.checks.comm_tolerance;
      outcomes.push_back({"comm_slope", name, *spec.checks.comm_slope, got, spec.checks.comm_tolerance, pass, why});
    }
    if (spec.checks.disagreement_slope_max) {
      auto [got, why] = slope_of(TraceField::disagreement, Abscissa::iterations);
      const bool pass = got <= *spec.checks.disagreement_slope_max;
      outcomes.push_back({"disagreement_slope_max", name, *spec.checks.disagreement_slope_max, got, 0.0, pass, why});
    }
  }

  write_plot_script(out_dir / "plot.gp", series, with_test);

  bool all_pass = true;
  fits << "[checks]\n";
  if (outcomes.empty()) fits << "  none enabled\n";
  for (const CheckOutcome& o : outcomes) {
    fits << "  " << (o.passed ? "PASS " : "FAIL ") << o.check << " [" << o.method << "] expected "
         << format_double(o.expected) << (o.check == "disagreement_slope_max" ? " (max)" : "")
         << " got " << format_double(o.got) << " tolerance " << format_double(o.tolerance) << '\n';
    log << (o.passed ? "PASS " : "FAIL ") << o.check << " [" << o.method << "] expected " << o.expected << " got "
        << o.got << '\n';
    if (!o.passed) {
      all_pass = false;
      failures << to_json_line(o) << '\n';
    }
  }
  log << "wrote " << out_dir.string() << '\n';
  return all_pass ? kExitOk : kExitCheckFailed;
}

int cmd_bias(const ExperimentSpec& spec, const fs::path& out_dir, std::ostream& log) {
  const BiasSpec& b = spec.bias;
  const DirectionSampler sampler(spec.direction, b.dim);
  const double c0 = spec.c0.value_or(1.0 / sampler.s1());
  const std::vector<double> radii = dyadic_radii(c0, b.points);

  const Problem cubic = make_cubic_probe(b.dim, b.mu, b.lipschitz_hessian);
  const Eigen::VectorXd origin = Eigen::VectorXd::Zero(b.dim);
  const std::vector<BiasPoint> cubic_table = measure_bias(cubic, 0, origin, radii, sampler, b.samples, b.seed);

  const Problem control = make_quadratic_problem(1, b.dim, b.mu, 10.0 * b.mu, b.seed);
  const Eigen::VectorXd probe = Eigen::VectorXd::Ones(b.dim);
  const std::vector<BiasPoint> control_table =
      measure_bias(control, 0, probe, radii, sampler, b.samples, b.seed + 1);

  fs::create_directories(out_dir);
  std::ofstream table = open_out(out_dir / "bias.csv");
  table << "problem,c,bias_norm,std_error,envelope\n";
  for (const BiasPoint& p : control_table) {
    table << "quadratic," << format_double(p.c) << ',' << format_double(p.bias_norm) << ','
          << format_double(p.std_error) << ',' << format_double(p.envelope) << '\n';
  }
  for (const BiasPoint& p : cubic_table) {
    table << "cubic," << format_double(p.c) << ',' << format_double(p.bias_norm) << ','
          << format_double(p.std_error) << ',' << format_double(p.envelope) << '\n';
  }

  std::vector<double> cs, biases;
  bool under_envelope = true;
  for (const BiasPoint& p : cubic_table) {
    cs.push_back(p.c);
    biases.push_back(p.bias_norm);
    under_envelope = under_envelope && p.bias_norm <= 1.1 * p.envelope;
  }
  bool control_ok = true;
  double worst_ratio = 0.0;
  for (const BiasPoint& p : control_table) {
    const double ratio = p.std_error > 0.0 ? p.bias_norm / p.std_error : 0.0;
    worst_ratio = std::max(worst_ratio, ratio);
    control_ok = control_ok && p.bias_norm <= 3.0 * p.std_error;
  }
  const LogLogFit fit = fit_log_log(cs, biases);
  const bool slope_ok = fit.slope >= 1.8 && fit.slope <= 2.2;

  std::ofstream report = open_out(out_dir / "bias.txt");
  std::ofstream failures = open_out(out_dir / "failures.jsonl");
  const std::vector<CheckOutcome> outcomes{
      {"cubic_bias_slope", "bias", 2.0, fit.slope, 0.2, slope_ok, ""},
      {"cubic_bias_envelope", "bias", 1.1, under_envelope ? 1.0 : 0.0, 0.0, under_envelope,
       "every point must satisfy bias <= 1.1 * (c^2/4) M s1"},
      {"quadratic_bias_control", "bias", 3.0, worst_ratio, 0.0, control_ok, "max bias / standard error"},
  };
  report << "cubic probe: d=" << b.dim << " M=" << format_double(b.lipschitz_hessian)
         << " samples=" << b.samples << '\n';
  report << "slope=" << format_double(fit.slope) << " residual_rms=" << format_double(fit.residual_rms) << '\n';
  for (const CheckOutcome& o : outcomes) {
    report << (o.passed ? "PASS " : "FAIL ") << o.check << " got " << format_double(o.got) << '\n';
    log << (o.passed ? "PASS " : "FAIL ") << o.check << " got " << o.got << '\n';
    if (!o.passed) failures << to_json_line(o) << '\n';
  }
  const bool ok = slope_ok && under_envelope && control_ok;
  return ok ? kExitOk : kExitCheckFailed;
}

int cmd_ingest(const IngestOptions& options, std::ostream& log) {
  Dataset data;
  try {
    if (options.data == "synthetic-abalone") {
      data = synthetic_abalone(options.seed);
    } else {
      CsvOptions csv;
      csv.header = options.header;
      data = load_dataset(options.data, parse_data_format(options.format), csv);
    }
  } catch (const DatasetError& e) {
    log << "error: " << options.data << ": " << e.what() << '\n';
    return kExitConfigError;
  }
  if (options.onehot >= 0) data = one_hot_encode(data, options.onehot);
  const Eigen::Index test_rows = resolve_test_rows(data, options.split);
  if (test_rows > data.rows()) {
    log << "error: split of " << test_rows << " rows exceeds dataset of " << data.rows() << " rows\n";
    return kExitConfigError;
  }
  TrainTestSplit parts = split_train_test(data, test_rows);
  const Standardizer scaler = Standardizer::fit(parts.train);
  scaler.apply(parts.train);
  if (parts.test.rows() > 0) scaler.apply(parts.test);
  const auto blocks = partition_contiguous(parts.train.rows(), options.nodes);
  const Problem erm = make_erm_problem(parts.train, options.nodes, options.lambda);

  fs::create_directories(options.out);
  {
    std::ofstream out = open_out(options.out / "train.csv");
    write_csv(out, parts.train);
  }
  if (parts.test.rows() > 0) {
    std::ofstream out = open_out(options.out / "test.csv");
    write_csv(out, parts.test);
  }
  std::ostringstream summary;
  summary << "rows " << data.rows() << '\n';
  summary << "dim " << data.dim() << '\n';
  summary << "train " << parts.train.rows() << '\n';
  summary << "test " << parts.test.rows() << '\n';
  summary << "nodes " << options.nodes << '\n';
  summary << "per_node";
  for (const auto& [begin, end] : blocks) summary << ' ' << (end - begin);
  summary << '\n';
  summary << "lambda " << format_double(options.lambda) << '\n';
  summary << "L " << format_double(erm.lipschitz_gradient()) << '\n';
  std::ofstream out = open_out(options.out / "summary.txt");
  out << summary.str();
  log << summary.str();
  return kExitOk;
}

}  // namespace sgopt::cli
