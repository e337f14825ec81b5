// Command-line front end: simulation, discovery, sweeps, stability tables,
// and truncation probes with reproducible JSON-echoed configs.
//
// Option precedence: command-line flags override --config file values, which
// override built-in per-system defaults. Every command materializes the fully
// resolved configuration into its JSON output, so feeding that object back
// through --config reproduces the run byte for byte (runtimes excepted when
// --record-runtimes is on).
//
// Randomness: one --seed per invocation. simulate derives its noise stream as
// derive_seed(seed, 0, 0); sweep derives per-sigma noise streams (stream 0)
// and per-cell discovery seeds (stream 1); discover passes --seed through to
// the solver unchanged.
//
// Exit codes: 0 success, 2 configuration or validation failure, 3 simulation
// divergence, 4 discovery divergence.

#include <CLI11.hpp>

#include <usindy/analyze.hpp>

#include <fstream>
#include <iostream>
#include <set>

namespace {

using namespace usindy;

int exit_code_for(const Error& e) {
  switch (e.kind) {
    case ErrorKind::SimulationDiverged:
      return 3;
    case ErrorKind::DivergedDuringUnroll:
      return 4;
    default:
      return 2;
  }
}

System parse_system(std::string s) {
  for (char& c : s) {
    if (c == '-') c = '_';
  }
  return system_from_string(s);
}

json load_config(const std::string& path, const std::set<std::string>& allowed) {
  if (path.empty()) return json::object();
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorKind::IoError, "cannot open config file: " + path);
  json j = json::parse(in, nullptr, false);
  if (j.is_discarded() || !j.is_object())
    fail(ErrorKind::InvalidArgument, "config file must hold a JSON object: " + path);
  for (const auto& item : j.items())
    if (!allowed.count(item.key()))
      fail(ErrorKind::InvalidArgument, "unknown config key: " + item.key());
  return j;
}

// flag > config file > default.
template <typename T>
T pick(const CLI::App* cmd, const std::string& flag, const json& cfg,
       const std::string& key, const T& flag_value, const T& fallback) {
  if (cmd->count(flag) > 0) return flag_value;
  if (cfg.contains(key)) return cfg.at(key).get<T>();
  return fallback;
}

void write_text(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) fail(ErrorKind::IoError, "cannot open for writing: " + path);
  out << text;
  if (!out) fail(ErrorKind::IoError, "failed writing: " + path);
}

std::string require_system(const CLI::App* cmd, const json& cfg,
                           const std::string& flag_value) {
  if (cmd->count("--system") > 0) return flag_value;
  if (cfg.contains("system")) return cfg.at("system").get<std::string>();
  fail(ErrorKind::InvalidArgument, "a --system is required");
}

std::vector<Method> parse_methods(const std::vector<std::string>& names) {
  std::vector<Method> out;
  for (const std::string& n : names) {
    if (n == "euler")
      out.push_back(Method::Euler);
    else if (n == "rk4")
      out.push_back(Method::RK4);
    else
      fail(ErrorKind::InvalidArgument, "unknown method: " + n);
  }
  return out;
}

std::vector<std::string> method_names(const std::vector<Method>& ms) {
  std::vector<std::string> out;
  for (Method m : ms) out.emplace_back(to_string(m));
  return out;
}

// ---------------------------------------------------------------------------
// simulate

struct SimulateArgs {
  std::string config_path, system_str, out = "dataset.bin", meta;
  double t_end = 0, dt = 0, solver_dt = 0, sigma = 0, x0 = 0, y0 = 0;
  std::uint64_t seed = 0;
};

int run_simulate(const CLI::App* cmd, const SimulateArgs& a) {
  static const std::set<std::string> keys = {"system", "t_end",  "dt",
                                             "solver_dt", "sigma", "seed",
                                             "x0",     "y0",     "out", "meta"};
  const json cfg = load_config(a.config_path, keys);
  const System system = parse_system(require_system(cmd, cfg, a.system_str));

  SystemSpec spec = default_system_spec(system);
  spec.t_end = pick(cmd, "--t-end", cfg, "t_end", a.t_end, spec.t_end);
  spec.fine_dt = pick(cmd, "--dt", cfg, "dt", a.dt, spec.fine_dt);
  const double default_solver_dt =
      is_ode_system(system) ? spec.fine_dt / 10.0 : spec.solver_dt;
  spec.solver_dt =
      pick(cmd, "--solver-dt", cfg, "solver_dt", a.solver_dt, default_solver_dt);
  const double sigma = pick(cmd, "--sigma", cfg, "sigma", a.sigma, 0.0);
  const std::uint64_t seed =
      pick(cmd, "--seed", cfg, "seed", a.seed, std::uint64_t{0});
  const std::string out = pick(cmd, "--out", cfg, "out", a.out, std::string("dataset.bin"));
  const std::string meta =
      pick(cmd, "--meta", cfg, "meta", a.meta, out + ".meta.json");

  if (!(spec.t_end > 0) || !(spec.fine_dt > 0) || !(spec.solver_dt > 0))
    fail(ErrorKind::InvalidArgument, "t_end, dt, and solver_dt must be > 0");
  if (sigma < 0) fail(ErrorKind::InvalidArgument, "sigma must be >= 0");

  json eff;
  eff["system"] = to_string(system);
  eff["t_end"] = spec.t_end;
  eff["dt"] = spec.fine_dt;
  eff["solver_dt"] = spec.solver_dt;
  if (is_ode_system(system)) {
    if (cmd->count("--x0") || cfg.contains("x0"))
      spec.initial_ode(0) = pick(cmd, "--x0", cfg, "x0", a.x0, spec.initial_ode(0));
    if (cmd->count("--y0") || cfg.contains("y0"))
      spec.initial_ode(1) = pick(cmd, "--y0", cfg, "y0", a.y0, spec.initial_ode(1));
    eff["x0"] = spec.initial_ode(0);
    eff["y0"] = spec.initial_ode(1);
  } else if (cmd->count("--x0") || cmd->count("--y0") || cfg.contains("x0") ||
             cfg.contains("y0")) {
    fail(ErrorKind::InvalidArgument,
         "--x0/--y0 apply to the oscillator systems only");
  }
  eff["sigma"] = sigma;
  eff["seed"] = seed;
  eff["out"] = out;
  eff["meta"] = meta;

  Dataset ds = simulate(spec);
  if (sigma > 0) ds = add_noise(ds, sigma, detail::derive_seed(seed, 0, 0));
  save_dataset(out, ds);

  json meta_doc;
  meta_doc["config"] = eff;
  meta_doc["fingerprint"] = fingerprint(ds);
  meta_doc["snapshots"] = ds.snapshots();
  meta_doc["points"] = ds.grid.points();
  meta_doc["variables"] = ds.d2;
  write_text(meta, meta_doc.dump(2) + "\n");

  std::cout << "fingerprint " << fingerprint(ds) << "\n"
            << "wrote " << ds.snapshots() << " snapshots to " << out << "\n";
  return 0;
}

// ---------------------------------------------------------------------------
// discover

struct DiscoverArgs {
  std::string config_path, system_str, dataset, out = "model.json";
  std::string method = "euler", solver = "closed_form";
  int K = 1, max_iters = 0, convergence_window = 0, h_stride = 1;
  long pair_stride = 1;
  double lambda = 0, alpha_th = 0, convergence_tol = 0;
  std::uint64_t seed = 0;
  bool fallback_sgd = false;
  double sgd_lr = 0, sgd_lr_decay = 0;
  int sgd_epochs = 0, sgd_rounds = 0, sgd_batch = 0;
};

int run_discover(const CLI::App* cmd, const DiscoverArgs& a) {
  static const std::set<std::string> keys = {
      "system",  "dataset",    "out", "method",
      "solver",  "K",          "lambda", "alpha_th",
      "max_iters", "convergence_window", "convergence_tol", "pair_stride",
      "h_stride", "seed",      "fallback_sgd", "sgd"};
  const json cfg = load_config(a.config_path, keys);
  const System system = parse_system(require_system(cmd, cfg, a.system_str));
  const std::string dataset_path =
      pick(cmd, "--dataset", cfg, "dataset", a.dataset, std::string());
  if (dataset_path.empty())
    fail(ErrorKind::InvalidArgument, "a --dataset file is required");
  const std::string out = pick(cmd, "--out", cfg, "out", a.out, std::string("model.json"));
  const int h_stride = pick(cmd, "--h-stride", cfg, "h_stride", a.h_stride, 1);
  if (h_stride < 1) fail(ErrorKind::InvalidArgument, "h-stride must be >= 1");

  DiscoveryConfig config = default_discovery_config(system);
  const std::string method_name =
      pick(cmd, "--method", cfg, "method", a.method, std::string("euler"));
  config.method = parse_methods({method_name}).front();
  const std::string solver_name =
      pick(cmd, "--solver", cfg, "solver", a.solver, std::string("closed_form"));
  if (solver_name == "closed_form")
    config.solver = Solver::ClosedForm;
  else if (solver_name == "sgd")
    config.solver = Solver::SGD;
  else
    fail(ErrorKind::InvalidArgument, "unknown solver: " + solver_name);
  config.K = pick(cmd, "--K", cfg, "K", a.K, config.K);
  config.lambda = pick(cmd, "--lambda", cfg, "lambda", a.lambda, config.lambda);
  config.alpha_th = pick(cmd, "--alpha-th", cfg, "alpha_th", a.alpha_th, config.alpha_th);
  config.max_iters = pick(cmd, "--max-iters", cfg, "max_iters", a.max_iters, config.max_iters);
  config.convergence_window = pick(cmd, "--convergence-window", cfg, "convergence_window",
                                   a.convergence_window, config.convergence_window);
  config.convergence_tol = pick(cmd, "--convergence-tol", cfg, "convergence_tol",
                                a.convergence_tol, config.convergence_tol);
  config.pair_stride =
      pick(cmd, "--pair-stride", cfg, "pair_stride", a.pair_stride, config.pair_stride);
  config.seed = pick(cmd, "--seed", cfg, "seed", a.seed, std::uint64_t{0});
  const bool fallback =
      cmd->count("--fallback-sgd") > 0 ||
      (cfg.contains("fallback_sgd") && cfg.at("fallback_sgd").get<bool>());

  SGDConfig sgd =
      cfg.contains("sgd") ? sgd_config_from_json(cfg.at("sgd")) : SGDConfig{};
  if (cmd->count("--sgd-learning-rate")) sgd.learning_rate = a.sgd_lr;
  if (cmd->count("--sgd-lr-decay")) sgd.lr_decay = a.sgd_lr_decay;
  if (cmd->count("--sgd-epochs")) sgd.epochs_per_threshold = a.sgd_epochs;
  if (cmd->count("--sgd-rounds")) sgd.threshold_rounds = a.sgd_rounds;
  if (cmd->count("--sgd-batch")) sgd.batch_size = a.sgd_batch;
  const bool sgd_touched = cfg.contains("sgd") || cmd->count("--sgd-learning-rate") ||
                           cmd->count("--sgd-lr-decay") || cmd->count("--sgd-epochs") ||
                           cmd->count("--sgd-rounds") || cmd->count("--sgd-batch");
  if (config.solver == Solver::SGD || fallback || sgd_touched) config.sgd = sgd;
  config.validate();

  Dataset ds = load_dataset(dataset_path);
  if (h_stride > 1) ds = subsample(ds, h_stride);
  const Library lib = standard_library(system, ds.grid);

  json eff;
  eff["system"] = to_string(system);
  eff["dataset"] = dataset_path;
  eff["out"] = out;
  eff["h_stride"] = h_stride;
  eff["fallback_sgd"] = fallback;
  json jconfig = to_json(config);

  DiscoveredModel model;
  bool fell_back = false;
  try {
    model = discover(ds, lib, config);
  } catch (const UnrollDivergence& e) {
    if (!fallback) throw;
    std::cerr << "closed-form solve diverged (" << e.what()
              << "); retrying with the stochastic solver\n";
    DiscoveryConfig retry = config;
    retry.solver = Solver::SGD;
    retry.sgd = sgd;
    model = discover(ds, lib, retry);
    jconfig = to_json(retry);
    fell_back = true;
  }

  json jm = to_json(model);
  jm["cli_config"] = eff;
  jm["cli_config"]["discovery"] = jconfig;
  jm["cli_config"]["fell_back_to_sgd"] = fell_back;
  write_text(out, jm.dump(2) + "\n");

  for (const std::string& line : pretty_print(model)) std::cout << line << "\n";
  const CoefficientMatrix gt = ground_truth_alpha(system, lib);
  std::cout << "l1_error " << l1_error(model.coefficients, gt) << "\n"
            << "wrote model to " << out << "\n";
  return 0;
}

// ---------------------------------------------------------------------------
// sweep

struct SweepArgs {
  std::string config_path, system_str, csv = "sweep.csv", json_out = "sweep.json";
  std::vector<double> h_list, sigma_list;
  std::vector<int> K_list;
  std::vector<std::string> methods;
  std::string solver = "closed_form";
  double lambda = 0, alpha_th = 0;
  int max_iters = 0, jobs = 1;
  std::uint64_t seed = 0;
  bool record_runtimes = false;
};

int run_sweep_cmd(const CLI::App* cmd, const SweepArgs& a) {
  static const std::set<std::string> keys = {
      "system", "h_list", "K_list", "sigma_list", "methods", "solver",
      "lambda", "alpha_th", "max_iters", "seed", "jobs", "record_runtimes",
      "csv", "json"};
  const json cfg = load_config(a.config_path, keys);

  SweepOptions opt;
  opt.system = parse_system(require_system(cmd, cfg, a.system_str));
  opt.h_list = pick(cmd, "--h", cfg, "h_list", a.h_list, std::vector<double>{});
  opt.K_list = pick(cmd, "--K", cfg, "K_list", a.K_list, std::vector<int>{});
  opt.sigma_list =
      pick(cmd, "--sigma", cfg, "sigma_list", a.sigma_list, std::vector<double>{0.0});
  opt.methods = parse_methods(pick(cmd, "--method", cfg, "methods", a.methods,
                                   std::vector<std::string>{"euler"}));
  opt.base = default_discovery_config(opt.system);
  const std::string solver_name =
      pick(cmd, "--solver", cfg, "solver", a.solver, std::string("closed_form"));
  if (solver_name == "closed_form")
    opt.base.solver = Solver::ClosedForm;
  else if (solver_name == "sgd")
    opt.base.solver = Solver::SGD;
  else
    fail(ErrorKind::InvalidArgument, "unknown solver: " + solver_name);
  if (opt.base.solver == Solver::SGD) opt.base.sgd = SGDConfig{};
  opt.base.lambda = pick(cmd, "--lambda", cfg, "lambda", a.lambda, opt.base.lambda);
  opt.base.alpha_th = pick(cmd, "--alpha-th", cfg, "alpha_th", a.alpha_th, opt.base.alpha_th);
  opt.base.max_iters =
      pick(cmd, "--max-iters", cfg, "max_iters", a.max_iters, opt.base.max_iters);
  opt.seed = pick(cmd, "--seed", cfg, "seed", a.seed, std::uint64_t{0});
  opt.jobs = pick(cmd, "--jobs", cfg, "jobs", a.jobs, 1);
  opt.record_runtimes = cmd->count("--record-runtimes") > 0 ||
                        (cfg.contains("record_runtimes") &&
                         cfg.at("record_runtimes").get<bool>());
  const std::string csv_path = pick(cmd, "--csv", cfg, "csv", a.csv, std::string("sweep.csv"));
  const std::string json_path =
      pick(cmd, "--json", cfg, "json", a.json_out, std::string("sweep.json"));

  json eff;
  eff["system"] = to_string(opt.system);
  eff["h_list"] = opt.h_list;
  eff["K_list"] = opt.K_list;
  eff["sigma_list"] = opt.sigma_list;
  eff["methods"] = method_names(opt.methods);
  eff["solver"] = to_string(opt.base.solver);
  eff["lambda"] = opt.base.lambda;
  eff["alpha_th"] = opt.base.alpha_th;
  eff["max_iters"] = opt.base.max_iters;
  eff["seed"] = opt.seed;
  eff["jobs"] = opt.jobs;
  eff["record_runtimes"] = opt.record_runtimes;
  eff["csv"] = csv_path;
  eff["json"] = json_path;

  const std::vector<SweepCell> cells = run_sweep(opt);
  write_text(csv_path, sweep_to_csv(cells));
  json bundle;
  bundle["config"] = eff;
  bundle["cells"] = cells;
  write_text(json_path, bundle.dump(2) + "\n");

  long diverged = 0;
  for (const SweepCell& c : cells)
    if (c.status == CellStatus::Diverged) ++diverged;
  std::cout << cells.size() << " cells, " << diverged << " diverged\n"
            << "wrote " << csv_path << " and " << json_path << "\n";
  return 0;
}

// ---------------------------------------------------------------------------
// stability

struct StabilityArgs {
  std::string config_path, system_str, csv = "stability.csv",
                                       json_out = "stability.json";
  std::vector<double> h_list;
  std::vector<int> K_list;
  std::vector<std::string> methods;
  double x0 = 0, y0 = 0;
};

int run_stability(const CLI::App* cmd, const StabilityArgs& a) {
  static const std::set<std::string> keys = {"system", "h_list", "K_list",
                                             "methods", "x0", "y0", "csv", "json"};
  const json cfg = load_config(a.config_path, keys);
  const System system = parse_system(require_system(cmd, cfg, a.system_str));
  if (!is_ode_system(system))
    fail(ErrorKind::UnsupportedDimension,
         "stability analysis covers the two-variable systems only");

  const std::vector<double> h_list =
      pick(cmd, "--h", cfg, "h_list", a.h_list, std::vector<double>{});
  const std::vector<int> K_list =
      pick(cmd, "--K", cfg, "K_list", a.K_list, std::vector<int>{});
  const std::vector<Method> methods = parse_methods(
      pick(cmd, "--method", cfg, "methods", a.methods,
           std::vector<std::string>{"euler", "rk4"}));
  Vector state = default_system_spec(system).initial_ode;
  state(0) = pick(cmd, "--x0", cfg, "x0", a.x0, state(0));
  state(1) = pick(cmd, "--y0", cfg, "y0", a.y0, state(1));
  const std::string csv_path =
      pick(cmd, "--csv", cfg, "csv", a.csv, std::string("stability.csv"));
  const std::string json_path =
      pick(cmd, "--json", cfg, "json", a.json_out, std::string("stability.json"));

  const StabilityReport report =
      stability_report(system, state, methods, h_list, K_list);
  write_text(csv_path, stability_to_csv(report));

  json eff;
  eff["system"] = to_string(system);
  eff["h_list"] = h_list;
  eff["K_list"] = K_list;
  eff["methods"] = method_names(methods);
  eff["x0"] = state(0);
  eff["y0"] = state(1);
  eff["csv"] = csv_path;
  eff["json"] = json_path;
  json doc;
  doc["config"] = eff;
  json eig = json::array();
  for (const auto& lambda : report.eigenvalues)
    eig.push_back({{"re", lambda.real()}, {"im", lambda.imag()}});
  doc["eigenvalues"] = eig;
  write_text(json_path, doc.dump(2) + "\n");

  std::cout << "eigenvalues:";
  for (const auto& lambda : report.eigenvalues)
    std::cout << " " << lambda.real() << (lambda.imag() < 0 ? "-" : "+")
              << std::abs(lambda.imag()) << "i";
  std::cout << "\nwrote " << csv_path << "\n";
  return 0;
}

// ---------------------------------------------------------------------------
// probe-truncation

struct ProbeArgs {
  std::string config_path, csv = "probe.csv", json_out = "probe.json";
  std::vector<std::string> methods;
  std::vector<int> K_list;
  double h = 0.5;
};

int run_probe(const CLI::App* cmd, const ProbeArgs& a) {
  static const std::set<std::string> keys = {"methods", "K_list", "h", "csv", "json"};
  const json cfg = load_config(a.config_path, keys);
  const std::vector<Method> methods = parse_methods(
      pick(cmd, "--method", cfg, "methods", a.methods,
           std::vector<std::string>{"euler", "rk4"}));
  const std::vector<int> K_list =
      pick(cmd, "--K", cfg, "K_list", a.K_list, std::vector<int>{});
  const double h = pick(cmd, "--h", cfg, "h", a.h, 0.5);
  if (K_list.size() < 2)
    fail(ErrorKind::InvalidArgument, "need at least 2 K values to fit a slope");
  const std::string csv_path = pick(cmd, "--csv", cfg, "csv", a.csv, std::string("probe.csv"));
  const std::string json_path =
      pick(cmd, "--json", cfg, "json", a.json_out, std::string("probe.json"));

  std::string csv = "method,h,K,one_step_error,slope,slope_wrt\n";
  json rows = json::array();
  for (Method m : methods) {
    const std::vector<ProbePoint> points = truncation_probe(m, h, K_list);
    std::vector<double> xs, ys;
    for (const ProbePoint& p : points) {
      xs.push_back(m == Method::Euler ? static_cast<double>(p.K)
                                      : h / static_cast<double>(p.K));
      ys.push_back(p.one_step_error);
    }
    const double slope = fit_loglog_slope(xs, ys);
    const char* wrt = m == Method::Euler ? "K" : "h_over_K";
    for (const ProbePoint& p : points) {
      csv += std::string(to_string(m)) + ',' + detail::format_double(h) + ',' +
             std::to_string(p.K) + ',' + detail::format_double(p.one_step_error) +
             ',' + detail::format_double(slope) + ',' + wrt + '\n';
      rows.push_back({{"method", to_string(m)},
                      {"h", h},
                      {"K", p.K},
                      {"one_step_error", p.one_step_error},
                      {"slope", slope},
                      {"slope_wrt", wrt}});
    }
    std::cout << to_string(m) << " slope " << slope << " (vs " << wrt << ")\n";
  }
  write_text(csv_path, csv);
  json eff;
  eff["methods"] = method_names(methods);
  eff["K_list"] = K_list;
  eff["h"] = h;
  eff["csv"] = csv_path;
  eff["json"] = json_path;
  json doc;
  doc["config"] = eff;
  doc["rows"] = rows;
  write_text(json_path, doc.dump(2) + "\n");
  std::cout << "wrote " << csv_path << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Governing-equation discovery from time-sampled data"};
  app.require_subcommand(1);
  app.set_help_flag("--help", "Print help");

  SimulateArgs sim;
  CLI::App* sim_cmd = app.add_subcommand("simulate", "Generate a reference dataset");
  sim_cmd->set_help_flag("--help", "Print help");
  sim_cmd->add_option("--system", sim.system_str, "System name");
  sim_cmd->add_option("--config", sim.config_path, "JSON config file");
  sim_cmd->add_option("--t-end", sim.t_end, "Simulated time span");
  sim_cmd->add_option("--dt", sim.dt, "Sampling interval of the dataset");
  sim_cmd->add_option("--solver-dt", sim.solver_dt, "Internal integrator step");
  sim_cmd->add_option("--sigma", sim.sigma, "Relative noise level");
  sim_cmd->add_option("--seed", sim.seed, "Master random seed");
  sim_cmd->add_option("--x0", sim.x0, "Initial x (oscillators)");
  sim_cmd->add_option("--y0", sim.y0, "Initial y (oscillators)");
  sim_cmd->add_option("--out", sim.out, "Dataset output path");
  sim_cmd->add_option("--meta", sim.meta, "Metadata JSON path");

  DiscoverArgs dis;
  CLI::App* dis_cmd = app.add_subcommand("discover", "Fit a sparse model to a dataset");
  dis_cmd->set_help_flag("--help", "Print help");
  dis_cmd->add_option("--system", dis.system_str, "System (selects the term library)");
  dis_cmd->add_option("--config", dis.config_path, "JSON config file");
  dis_cmd->add_option("--dataset", dis.dataset, "Dataset file");
  dis_cmd->add_option("--out", dis.out, "Model JSON output path");
  dis_cmd->add_option("--method", dis.method, "euler or rk4");
  dis_cmd->add_option("--solver", dis.solver, "closed_form or sgd");
  dis_cmd->add_option("--K", dis.K, "Unrolling depth");
  dis_cmd->add_option("--h-stride", dis.h_stride, "Subsample stride before fitting");
  dis_cmd->add_option("--pair-stride", dis.pair_stride, "Snapshot gap per training pair");
  dis_cmd->add_option("--lambda", dis.lambda, "Ridge regularization");
  dis_cmd->add_option("--alpha-th", dis.alpha_th, "Hard threshold");
  dis_cmd->add_option("--max-iters", dis.max_iters, "Iteration cap");
  dis_cmd->add_option("--convergence-window", dis.convergence_window, "Averaging window");
  dis_cmd->add_option("--convergence-tol", dis.convergence_tol, "Convergence tolerance");
  dis_cmd->add_option("--seed", dis.seed, "Random seed (stochastic solver)");
  dis_cmd->add_flag("--fallback-sgd", dis.fallback_sgd,
                    "Retry with the stochastic solver on divergence");
  dis_cmd->add_option("--sgd-learning-rate", dis.sgd_lr, "SGD learning rate");
  dis_cmd->add_option("--sgd-lr-decay", dis.sgd_lr_decay, "SGD learning-rate decay");
  dis_cmd->add_option("--sgd-epochs", dis.sgd_epochs, "SGD epochs per threshold round");
  dis_cmd->add_option("--sgd-rounds", dis.sgd_rounds, "SGD threshold rounds");
  dis_cmd->add_option("--sgd-batch", dis.sgd_batch, "SGD batch size");

  SweepArgs swp;
  CLI::App* swp_cmd = app.add_subcommand("sweep", "Run an (h, K, sigma) discovery grid");
  swp_cmd->set_help_flag("--help", "Print help");
  swp_cmd->add_option("--system", swp.system_str, "System name");
  swp_cmd->add_option("--config", swp.config_path, "JSON config file");
  swp_cmd->add_option("--h,--h-list", swp.h_list, "Observation steps")->delimiter(',');
  swp_cmd->add_option("--K,--K-list", swp.K_list, "Unrolling depths")->delimiter(',');
  swp_cmd->add_option("--sigma,--sigma-list", swp.sigma_list, "Noise levels")->delimiter(',');
  swp_cmd->add_option("--method", swp.methods, "Integrators")->delimiter(',');
  swp_cmd->add_option("--solver", swp.solver, "closed_form or sgd");
  swp_cmd->add_option("--lambda", swp.lambda, "Ridge regularization");
  swp_cmd->add_option("--alpha-th", swp.alpha_th, "Hard threshold");
  swp_cmd->add_option("--max-iters", swp.max_iters, "Iteration cap");
  swp_cmd->add_option("--seed", swp.seed, "Master random seed");
  swp_cmd->add_option("--jobs", swp.jobs, "Parallel cell workers");
  swp_cmd->add_flag("--record-runtimes", swp.record_runtimes,
                    "Fill runtime_seconds (breaks byte-identical re-runs)");
  swp_cmd->add_option("--csv", swp.csv, "CSV output path");
  swp_cmd->add_option("--json", swp.json_out, "JSON bundle output path");

  StabilityArgs stb;
  CLI::App* stb_cmd = app.add_subcommand("stability", "Classify (method, h, K) stability");
  stb_cmd->set_help_flag("--help", "Print help");
  stb_cmd->add_option("--system", stb.system_str, "System name");
  stb_cmd->add_option("--config", stb.config_path, "JSON config file");
  stb_cmd->add_option("--h,--h-list", stb.h_list, "Observation steps")->delimiter(',');
  stb_cmd->add_option("--K,--K-list", stb.K_list, "Unrolling depths")->delimiter(',');
  stb_cmd->add_option("--method", stb.methods, "Integrators")->delimiter(',');
  stb_cmd->add_option("--x0", stb.x0, "Linearization state x");
  stb_cmd->add_option("--y0", stb.y0, "Linearization state y");
  stb_cmd->add_option("--csv", stb.csv, "CSV output path");
  stb_cmd->add_option("--json", stb.json_out, "JSON output path");

  ProbeArgs prb;
  CLI::App* prb_cmd =
      app.add_subcommand("probe-truncation", "One-step error scaling in K");
  prb_cmd->set_help_flag("--help", "Print help");
  prb_cmd->add_option("--config", prb.config_path, "JSON config file");
  prb_cmd->add_option("--method", prb.methods, "Integrators")->delimiter(',');
  prb_cmd->add_option("--K,--K-list", prb.K_list, "Unrolling depths")->delimiter(',');
  prb_cmd->add_option("--h", prb.h, "Step size");
  prb_cmd->add_option("--csv", prb.csv, "CSV output path");
  prb_cmd->add_option("--json", prb.json_out, "JSON output path");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (sim_cmd->parsed()) return run_simulate(sim_cmd, sim);
    if (dis_cmd->parsed()) return run_discover(dis_cmd, dis);
    if (swp_cmd->parsed()) return run_sweep_cmd(swp_cmd, swp);
    if (stb_cmd->parsed()) return run_stability(stb_cmd, stb);
    if (prb_cmd->parsed()) return run_probe(prb_cmd, prb);
  } catch (const usindy::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return exit_code_for(e);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 2;
}
