#include "sgopt_cli/config.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include "sgopt/trace_io.hpp"

namespace sgopt::cli {

namespace pt = boost::property_tree;

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> parts;
  std::string part;
  std::istringstream in(s);
  while (std::getline(in, part, sep)) parts.push_back(trim(part));
  return parts;
}

bool strict_double(const std::string& text, double& out) {
  const char* b = text.data();
  const char* e = b + text.size();
  auto [p, ec] = std::from_chars(b, e, out);
  return ec == std::errc{} && p == e;
}

template <typename Int>
bool strict_int(const std::string& text, Int& out) {
  const char* b = text.data();
  const char* e = b + text.size();
  auto [p, ec] = std::from_chars(b, e, out);
  return ec == std::errc{} && p == e;
}

/// One config section; remembers which keys were read so leftovers can be rejected.
class Section {
 public:
  Section(std::string name, const pt::ptree* tree) : name_(std::move(name)), tree_(tree) {}

  std::optional<std::string> raw(const std::string& key) {
    known_.insert(key);
    if (!tree_) return std::nullopt;
    auto it = tree_->find(key);
    if (it == tree_->not_found()) return std::nullopt;
    return trim(it->second.data());
  }

  // Accepts decimals and simple fractions such as 1/6.
  std::optional<double> number(const std::string& key) {
    auto text = raw(key);
    if (!text) return std::nullopt;
    double v = 0.0;
    if (strict_double(*text, v)) return v;
    const auto slash = text->find('/');
    double num = 0.0, den = 0.0;
    if (slash != std::string::npos && strict_double(trim(text->substr(0, slash)), num) &&
        strict_double(trim(text->substr(slash + 1)), den) && den != 0.0) {
      return num / den;
    }
    fail(key, "expected a number, got '" + *text + "'");
  }

  double number(const std::string& key, double fallback) { return number(key).value_or(fallback); }

  // Number or the given keyword (returned as nullopt).
  std::optional<double> number_or(const std::string& key, const std::string& keyword) {
    auto text = raw(key);
    if (!text || *text == keyword) return std::nullopt;
    return number(key);
  }

  template <typename Int>
  std::optional<Int> integer(const std::string& key) {
    auto text = raw(key);
    if (!text) return std::nullopt;
    Int v{};
    if (!strict_int(*text, v)) fail(key, "expected an integer, got '" + *text + "'");
    return v;
  }

  std::optional<bool> boolean(const std::string& key) {
    auto text = raw(key);
    if (!text) return std::nullopt;
    if (*text == "true" || *text == "yes" || *text == "1") return true;
    if (*text == "false" || *text == "no" || *text == "0") return false;
    fail(key, "expected true or false, got '" + *text + "'");
  }

  std::string text(const std::string& key, const std::string& fallback) { return raw(key).value_or(fallback); }

  [[noreturn]] void fail(const std::string& key, const std::string& why) const {
    throw SpecError("[" + name_ + "] " + key + ": " + why);
  }

  void reject_unknown() const {
    if (!tree_) return;
    for (const auto& [key, value] : *tree_) {
      if (!known_.count(key)) throw SpecError("[" + name_ + "] unknown key '" + key + "'");
    }
  }

 private:
  std::string name_;
  const pt::ptree* tree_;
  std::set<std::string> known_;
};

std::vector<std::uint64_t> parse_seed_list(Section& sec, const std::string& key, const std::string& text) {
  std::vector<std::uint64_t> seeds;
  for (const std::string& item : split(text, ',')) {
    const auto dash = item.find('-');
    std::uint64_t lo = 0, hi = 0;
    if (dash != std::string::npos && strict_int(trim(item.substr(0, dash)), lo) &&
        strict_int(trim(item.substr(dash + 1)), hi) && lo <= hi) {
      for (std::uint64_t s = lo; s <= hi; ++s) seeds.push_back(s);
    } else if (strict_int(item, lo)) {
      seeds.push_back(lo);
    } else {
      sec.fail(key, "bad seed '" + item + "' (expected N or A-B)");
    }
  }
  return seeds;
}

std::vector<Method> parse_methods(Section& sec, const std::string& key, const std::string& text) {
  std::vector<Method> methods;
  for (const std::string& item : split(text, ',')) {
    try {
      methods.push_back(parse_method(item));
    } catch (const std::invalid_argument& e) {
      sec.fail(key, e.what());
    }
  }
  if (methods.empty()) sec.fail(key, "no methods listed");
  return methods;
}

std::string join_methods(const std::vector<Method>& methods) {
  std::string out;
  for (std::size_t i = 0; i < methods.size(); ++i) out += (i ? "," : "") + to_string(methods[i]);
  return out;
}

const std::set<std::string> kSections{"topology", "protocol", "steps", "smoothing", "noise",
                                      "problem",  "run",      "checks", "bias"};

}  // namespace

ExperimentSpec parse_config(std::istream& in, const std::filesystem::path& base_dir) {
  pt::ptree tree;
  try {
    pt::read_ini(in, tree);
  } catch (const pt::ini_parser_error& e) {
    throw SpecError("config syntax error at line " + std::to_string(e.line()) + ": " + e.message());
  }
  for (const auto& [name, node] : tree) {
    if (node.empty()) throw SpecError("key '" + name + "' appears outside any section");
    if (!kSections.count(name)) throw SpecError("unknown section [" + name + "]");
  }
  auto section = [&](const std::string& name) {
    auto it = tree.find(name);
    return Section(name, it == tree.not_found() ? nullptr : &it->second);
  };

  ExperimentSpec spec;
  spec.base_dir = base_dir;

  Section topo = section("topology");
  spec.topology.graph = topo.text("graph", spec.topology.graph);
  spec.topology.seed = topo.integer<std::uint64_t>("seed").value_or(spec.topology.seed);
  topo.reject_unknown();

  Section proto = section("protocol");
  spec.rho0 = proto.number_or("rho0", "auto");
  spec.zeta0 = proto.number("zeta0", spec.zeta0);
  spec.tau = proto.number("tau", spec.tau);
  spec.epsilon = proto.number_or("epsilon", "auto");
  proto.reject_unknown();
  if (const double eps = spec.epsilon.value_or(spec.tau / 2.0);
      !(spec.tau > 0.0 && spec.tau <= 0.5 && eps > 0.0 && eps < spec.tau)) {
    std::ostringstream got;
    got << "tau=" << spec.tau << ", epsilon=" << eps;
    proto.fail(spec.epsilon ? "epsilon" : "tau",
               "schedule exponents must satisfy 0<tau<=1/2 and 0<epsilon<tau (got " + got.str() + ")");
  }

  Section steps = section("steps");
  spec.alpha0 = steps.number_or("alpha0", "auto");
  if (auto off = steps.raw("offset")) {
    if (*off == "auto") {
      spec.offset.reset();
    } else {
      spec.offset = steps.integer<std::int64_t>("offset");
      if (*spec.offset < 0) steps.fail("offset", "must be >= 0");
    }
  } else {
    spec.offset = 0;
  }
  spec.constant_step = steps.boolean("constant").value_or(false);
  steps.reject_unknown();

  Section smooth = section("smoothing");
  spec.c0 = smooth.number_or("c0", "auto");
  spec.delta = smooth.number("delta", spec.delta);
  try {
    spec.direction = parse_direction_kind(smooth.text("direction", "gaussian"));
  } catch (const std::invalid_argument& e) {
    smooth.fail("direction", e.what());
  }
  smooth.reject_unknown();

  Section noise = section("noise");
  spec.noise.szo_c = noise.number("szo_c", 0.0);
  spec.noise.szo_sigma = noise.number("szo_sigma", 0.0);
  spec.noise.sfo_c = noise.number("sfo_c", 0.0);
  spec.noise.sfo_sigma = noise.number("sfo_sigma", 0.0);
  noise.reject_unknown();

  Section prob = section("problem");
  ProblemSpec& p = spec.problem;
  p.kind = prob.text("kind", p.kind);
  if (p.kind != "quadratic" && p.kind != "erm" && p.kind != "cubic") {
    prob.fail("kind", "expected quadratic, erm or cubic, got '" + p.kind + "'");
  }
  p.dim = prob.integer<Eigen::Index>("dim").value_or(p.dim);
  p.mu = prob.number("mu", p.mu);
  p.lipschitz_gradient = prob.number("L", p.lipschitz_gradient);
  p.lipschitz_hessian = prob.number("M", p.lipschitz_hessian);
  p.heterogeneity = prob.number("heterogeneity", p.heterogeneity);
  p.seed = prob.integer<std::uint64_t>("seed").value_or(p.seed);
  p.data = prob.text("data", p.data);
  p.format = prob.text("format", p.format);
  p.header = prob.boolean("header").value_or(p.header);
  p.split = prob.number("split", p.split);
  p.lambda = prob.number("lambda", p.lambda);
  p.onehot = prob.integer<int>("onehot").value_or(p.onehot);
  if (p.kind == "erm" && p.data.empty()) prob.fail("data", "erm problems need a data file or synthetic-abalone");
  prob.reject_unknown();

  Section run = section("run");
  if (auto m = run.raw("method")) spec.methods = parse_methods(run, "method", *m);
  if (auto s = run.raw("seeds")) spec.seeds = parse_seed_list(run, "seeds", *s);
  spec.seed = run.integer<std::uint64_t>("seed").value_or(spec.seed);
  spec.ensemble = run.integer<int>("ensemble").value_or(spec.ensemble);
  if (spec.ensemble < 1) run.fail("ensemble", "must be >= 1");
  spec.horizon = run.integer<std::int64_t>("horizon").value_or(spec.horizon);
  if (spec.horizon < 0) run.fail("horizon", "must be >= 0");
  const std::string cadence = run.text("cadence", "geometric:1.05");
  {
    const auto parts = split(cadence, ':');
    double growth = 0.0;
    std::int64_t every = 0;
    if (parts.size() == 2 && parts[0] == "geometric" && strict_double(parts[1], growth) && growth > 1.0) {
      spec.cadence = Cadence{0, growth};
    } else if (parts.size() == 2 && parts[0] == "every" && strict_int(parts[1], every) && every >= 1) {
      spec.cadence = Cadence{every, 1.05};
    } else {
      run.fail("cadence", "expected geometric:G (G > 1) or every:M (M >= 1), got '" + cadence + "'");
    }
  }
  spec.threads = run.integer<unsigned>("threads").value_or(0);
  spec.allow_large_sweep = run.boolean("allow_large_sweep").value_or(false);
  run.reject_unknown();

  Section checks = section("checks");
  ChecksSpec& c = spec.checks;
  c.mse_slope = checks.number_or("mse_slope", "none");
  c.mse_tolerance = checks.number("mse_tolerance", c.mse_tolerance);
  c.comm_slope = checks.number_or("comm_slope", "none");
  c.comm_tolerance = checks.number("comm_tolerance", c.comm_tolerance);
  try {
    c.comm_abscissa = parse_abscissa(checks.text("comm_abscissa", "comm_expected"));
  } catch (const std::invalid_argument& e) {
    checks.fail("comm_abscissa", e.what());
  }
  c.disagreement_slope_max = checks.number_or("disagreement_slope_max", "none");
  if (auto w = checks.raw("window"); w && *w != "auto") {
    const auto parts = split(*w, ',');
    double lo = 0.0, hi = 0.0;
    if (parts.size() != 2 || !strict_double(parts[0], lo) || !strict_double(parts[1], hi) || !(lo < hi)) {
      checks.fail("window", "expected auto or LO,HI with LO < HI");
    }
    c.window = FitWindow{lo, hi};
  }
  if (auto m = checks.raw("methods"); m && *m != "all") c.methods = parse_methods(checks, "methods", *m);
  checks.reject_unknown();

  Section bias = section("bias");
  BiasSpec& b = spec.bias;
  b.dim = bias.integer<Eigen::Index>("dim").value_or(b.dim);
  b.mu = bias.number("mu", b.mu);
  b.lipschitz_hessian = bias.number("M", b.lipschitz_hessian);
  b.points = bias.integer<int>("points").value_or(b.points);
  b.samples = bias.integer<std::int64_t>("samples").value_or(b.samples);
  b.seed = bias.integer<std::uint64_t>("seed").value_or(b.seed);
  if (b.points < 2) bias.fail("points", "need at least 2 radii");
  bias.reject_unknown();

  for (double v : {spec.noise.szo_c, spec.noise.szo_sigma, spec.noise.sfo_c, spec.noise.sfo_sigma}) {
    if (!(v >= 0.0)) throw SpecError("[noise] parameters must be >= 0");
  }
  return spec;
}

ExperimentSpec parse_config_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw SpecError("cannot open config file '" + path.string() + "'");
  return parse_config(in, std::filesystem::absolute(path).parent_path());
}

std::vector<std::uint64_t> resolve_seeds(const ExperimentSpec& spec) {
  if (!spec.seeds.empty()) return spec.seeds;
  std::vector<std::uint64_t> seeds;
  for (int i = 0; i < spec.ensemble; ++i) seeds.push_back(spec.seed + static_cast<std::uint64_t>(i));
  return seeds;
}

std::shared_ptr<const Topology> build_topology(const TopologySpec& spec) {
  const auto parts = split(spec.graph, ':');
  int n = 0;
  if (parts.size() < 2 || !strict_int(parts[1], n) || n < 1) {
    throw SpecError("[topology] graph: expected KIND:N, got '" + spec.graph + "'");
  }
  try {
    if (parts[0] == "complete" && parts.size() == 2) return std::make_shared<const Topology>(make_complete_graph(n));
    if (parts[0] == "ring" && parts.size() == 2) return std::make_shared<const Topology>(make_ring_graph(n));
    if (parts[0] == "path" && parts.size() == 2) return std::make_shared<const Topology>(make_path_graph(n));
    if (parts[0] == "star" && parts.size() == 2) return std::make_shared<const Topology>(make_star_graph(n));
    double prob = 0.0;
    if (parts[0] == "erdos_renyi" && parts.size() == 3 && strict_double(parts[2], prob) && prob > 0.0 &&
        prob <= 1.0) {
      return std::make_shared<const Topology>(make_erdos_renyi_graph(n, prob, spec.seed));
    }
  } catch (const TopologyError& e) {
    throw SpecError(std::string("[topology] graph: ") + e.what());
  }
  throw SpecError("[topology] graph: unknown graph '" + spec.graph +
                  "' (complete:N, ring:N, path:N, star:N, erdos_renyi:N:P)");
}

namespace {

std::shared_ptr<const Problem> build_erm(const ProblemSpec& p, int nodes, const std::filesystem::path& base) {
  Dataset data;
  if (p.data == "synthetic-abalone") {
    data = synthetic_abalone(p.seed);
  } else {
    std::filesystem::path path = p.data;
    if (path.is_relative() && !base.empty()) path = base / path;
    CsvOptions csv;
    csv.header = p.header;
    data = load_dataset(path, parse_data_format(p.format), csv);
  }
  if (p.onehot >= 0) data = one_hot_encode(data, p.onehot);
  TrainTestSplit parts = split_train_test(data, resolve_test_rows(data, p.split));
  const Standardizer scaler = Standardizer::fit(parts.train);
  scaler.apply(parts.train);
  if (parts.test.rows() > 0) scaler.apply(parts.test);
  Problem problem = make_erm_problem(parts.train, nodes, p.lambda);
  if (parts.test.rows() > 0) problem.set_test_set(std::move(parts.test));
  return std::make_shared<const Problem>(std::move(problem));
}

}  // namespace

Instance build_instance(const ExperimentSpec& spec) {
  Instance inst;
  inst.topology = build_topology(spec.topology);
  const int n = inst.topology->node_count();
  const ProblemSpec& p = spec.problem;
  try {
    if (p.kind == "quadratic") {
      inst.problem = std::make_shared<const Problem>(
          make_quadratic_problem(n, p.dim, p.mu, p.lipschitz_gradient, p.seed, p.heterogeneity));
    } else if (p.kind == "cubic") {
      if (n != 1) throw SpecError("[problem] cubic probe is single-node; use graph = complete:1");
      inst.problem = std::make_shared<const Problem>(make_cubic_probe(p.dim, p.mu, p.lipschitz_hessian));
    } else {
      inst.problem = build_erm(p, n, spec.base_dir);
    }
  } catch (const ProblemError& e) {
    throw SpecError(std::string("[problem] ") + e.what());
  } catch (const DatasetError& e) {
    throw SpecError(std::string("[problem] data: ") + e.what());
  }
  return inst;
}

RunConfig make_run_config(const ExperimentSpec& spec, const Instance& instance, Method method) {
  RunConfig cfg;
  cfg.method = method;
  cfg.topology = instance.topology;
  cfg.problem = instance.problem;
  const Topology& topo = *instance.topology;
  const Problem& problem = *instance.problem;

  const double lambda_max = topo.spectral_radius();
  cfg.protocol.rho0 = spec.rho0.value_or(lambda_max > 0.0 ? 1.0 / std::sqrt(lambda_max) : 1.0);
  cfg.protocol.zeta0 = spec.zeta0;
  cfg.protocol.tau = spec.tau;
  cfg.protocol.epsilon = spec.epsilon.value_or(spec.tau / 2.0);

  const bool zeroth = uses_zeroth_order(method);
  cfg.steps.alpha0 = spec.alpha0.value_or((zeroth ? 1.05 : 2.1) / problem.mu());
  cfg.steps.constant = spec.constant_step;
  cfg.direction = spec.direction;
  cfg.steps.offset = spec.offset.value_or(stable_step_offset(method, problem, cfg.steps.alpha0, spec.direction));

  const DirectionSampler sampler(spec.direction, problem.dim());
  cfg.smoothing = SmoothingSchedule{spec.c0.value_or(1.0 / sampler.s1()), spec.delta};
  cfg.noise = spec.noise;
  cfg.horizon = spec.horizon;
  cfg.seed = spec.seed;
  cfg.cadence = spec.cadence;
  return cfg;
}

void write_resolved_config(std::ostream& out, const ExperimentSpec& spec, const Instance& instance) {
  const Method first_method = spec.methods.front();
  const RunConfig base = make_run_config(spec, instance, first_method);
  auto num = [](double v) { return format_double(v); };

  out << "[topology]\n";
  out << "graph = " << spec.topology.graph << '\n';
  out << "seed = " << spec.topology.seed << '\n';

  out << "\n[protocol]\n";
  out << "rho0 = " << num(base.protocol.rho0) << '\n';
  out << "zeta0 = " << num(base.protocol.zeta0) << '\n';
  out << "tau = " << num(base.protocol.tau) << '\n';
  out << "epsilon = " << num(base.protocol.epsilon) << '\n';

  out << "\n[steps]\n";
  std::string alpha_note, offset_note;
  for (Method m : spec.methods) {
    const RunConfig cfg = make_run_config(spec, instance, m);
    alpha_note += " " + to_string(m) + "=" + num(cfg.steps.alpha0);
    offset_note += " " + to_string(m) + "=" + std::to_string(cfg.steps.offset);
  }
  if (spec.alpha0) {
    out << "alpha0 = " << num(*spec.alpha0) << '\n';
  } else {
    out << "# resolved:" << alpha_note << '\n' << "alpha0 = auto\n";
  }
  if (spec.offset) {
    out << "offset = " << *spec.offset << '\n';
  } else {
    out << "# resolved:" << offset_note << '\n' << "offset = auto\n";
  }
  out << "constant = " << (spec.constant_step ? "true" : "false") << '\n';

  out << "\n[smoothing]\n";
  out << "c0 = " << num(base.smoothing.c0) << '\n';
  out << "delta = " << num(spec.delta) << '\n';
  out << "direction = " << to_string(spec.direction) << '\n';

  out << "\n[noise]\n";
  out << "szo_c = " << num(spec.noise.szo_c) << '\n';
  out << "szo_sigma = " << num(spec.noise.szo_sigma) << '\n';
  out << "sfo_c = " << num(spec.noise.sfo_c) << '\n';
  out << "sfo_sigma = " << num(spec.noise.sfo_sigma) << '\n';

  const ProblemSpec& p = spec.problem;
  out << "\n[problem]\n";
  out << "kind = " << p.kind << '\n';
  out << "seed = " << p.seed << '\n';
  if (p.kind == "erm") {
    std::string data = p.data;
    if (data != "synthetic-abalone") {
      std::filesystem::path path = data;
      if (path.is_relative() && !spec.base_dir.empty()) path = spec.base_dir / path;
      data = std::filesystem::absolute(path).lexically_normal().string();
    }
    out << "data = " << data << '\n';
    out << "format = " << p.format << '\n';
    out << "header = " << (p.header ? "true" : "false") << '\n';
    out << "split = " << num(p.split) << '\n';
    out << "lambda = " << num(p.lambda) << '\n';
    out << "onehot = " << p.onehot << '\n';
  } else {
    out << "dim = " << p.dim << '\n';
    out << "mu = " << num(p.mu) << '\n';
    if (p.kind == "quadratic") {
      out << "L = " << num(p.lipschitz_gradient) << '\n';
      out << "heterogeneity = " << num(p.heterogeneity) << '\n';
    } else {
      out << "M = " << num(p.lipschitz_hessian) << '\n';
    }
  }

  out << "\n[run]\n";
  out << "method = " << join_methods(spec.methods) << '\n';
  const auto seeds = resolve_seeds(spec);
  out << "seeds = ";
  for (std::size_t i = 0; i < seeds.size(); ++i) out << (i ? "," : "") << seeds[i];
  out << '\n';
  out << "horizon = " << spec.horizon << '\n';
  if (spec.cadence.every > 0) {
    out << "cadence = every:" << spec.cadence.every << '\n';
  } else {
    out << "cadence = geometric:" << num(spec.cadence.growth) << '\n';
  }
  out << "threads = " << spec.threads << '\n';
  out << "allow_large_sweep = " << (spec.allow_large_sweep ? "true" : "false") << '\n';

  const ChecksSpec& c = spec.checks;
  auto opt = [&](const std::optional<double>& v) { return v ? num(*v) : std::string("none"); };
  out << "\n[checks]\n";
  out << "mse_slope = " << opt(c.mse_slope) << '\n';
  out << "mse_tolerance = " << num(c.mse_tolerance) << '\n';
  out << "comm_slope = " << opt(c.comm_slope) << '\n';
  out << "comm_tolerance = " << num(c.comm_tolerance) << '\n';
  out << "comm_abscissa = " << to_string(c.comm_abscissa) << '\n';
  out << "disagreement_slope_max = " << opt(c.disagreement_slope_max) << '\n';
  if (c.window) {
    out << "window = " << num(c.window->k_lo) << "," << num(c.window->k_hi) << '\n';
  } else {
    out << "window = auto\n";
  }
  out << "methods = " << (c.methods.empty() ? std::string("all") : join_methods(c.methods)) << '\n';

  const BiasSpec& b = spec.bias;
  out << "\n[bias]\n";
  out << "dim = " << b.dim << '\n';
  out << "mu = " << num(b.mu) << '\n';
  out << "M = " << num(b.lipschitz_hessian) << '\n';
  out << "points = " << b.points << '\n';
  out << "samples = " << b.samples << '\n';
  out << "seed = " << b.seed << '\n';
}

}  // namespace sgopt::cli
