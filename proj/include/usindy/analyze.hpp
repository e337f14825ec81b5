#pragma once

// Experiment harness: coefficient-error metric, (h, K, sigma) sweep grids,
// absolute-stability classification, and CSV/JSON result tables.

#include <usindy/discover.hpp>
#include <usindy/simulate.hpp>

#include <atomic>
#include <charconv>
#include <chrono>
#include <complex>
#include <thread>

namespace usindy {

// ---------------------------------------------------------------------------
// Coefficient-error metric

// Sum of |predicted - truth| over the full terms x variables grid; inactive
// entries count as zero regardless of their stored value.
inline double l1_error(const CoefficientMatrix& predicted,
                       const CoefficientMatrix& ground_truth) {
  if (predicted.values.rows() != ground_truth.values.rows() ||
      predicted.values.cols() != ground_truth.values.cols())
    fail(ErrorKind::LibraryMismatch,
         "coefficient matrices come from different libraries");
  double sum = 0.0;
  for (long i = 0; i < predicted.values.rows(); ++i)
    for (long q = 0; q < predicted.values.cols(); ++q) {
      const double a = predicted.active(i, q) ? predicted.values(i, q) : 0.0;
      const double b = ground_truth.active(i, q) ? ground_truth.values(i, q) : 0.0;
      sum += std::abs(a - b);
    }
  return sum;
}

// ---------------------------------------------------------------------------
// Stability region analysis

// Amplification factor of one explicit step applied to u' = z u.
inline std::complex<double> stability_polynomial(Method method,
                                                 std::complex<double> z) {
  if (method == Method::Euler) return 1.0 + z;
  const std::complex<double> z2 = z * z;
  return 1.0 + z + z2 / 2.0 + z2 * z / 6.0 + z2 * z2 / 24.0;
}

// Eigenvalues of the analytic Jacobian of the generating equations at a
// state, via the closed-form 2x2 formula. Only the two-variable oscillator
// systems have a pointwise Jacobian in this sense.
inline std::vector<std::complex<double>> jacobian_eigenvalues(System system,
                                                              const Vector& at_state) {
  double j00, j01, j10, j11;
  switch (system) {
    case System::CubicOscillator: {
      if (at_state.size() != 2)
        fail(ErrorKind::InvalidArgument, "state must have 2 entries");
      const double x = at_state(0), y = at_state(1);
      j00 = -0.3 * x * x;
      j01 = 6.0 * y * y;
      j10 = -6.0 * x * x;
      j11 = -0.3 * y * y;
      break;
    }
    case System::LinearOscillator:
      if (at_state.size() != 2)
        fail(ErrorKind::InvalidArgument, "state must have 2 entries");
      j00 = -0.1;
      j01 = 2.0;
      j10 = -2.0;
      j11 = -0.1;
      break;
    case System::FitzHughNagumo: {
      if (at_state.size() != 2)
        fail(ErrorKind::InvalidArgument, "state must have 2 entries");
      const double x = at_state(0);
      j00 = 1.0 - x * x;
      j01 = -1.0;
      j10 = 0.1;
      j11 = -0.1;
      break;
    }
    default:
      fail(ErrorKind::UnsupportedDimension,
           "Jacobian eigenvalue analysis covers the two-variable systems only");
  }
  const double tr = j00 + j11;
  const double det = j00 * j11 - j01 * j10;
  const double disc = tr * tr / 4.0 - det;
  if (disc >= 0.0) {
    const double root = std::sqrt(disc);
    return {{tr / 2.0 - root, 0.0}, {tr / 2.0 + root, 0.0}};
  }
  const double imag = std::sqrt(-disc);
  return {{tr / 2.0, -imag}, {tr / 2.0, imag}};
}

struct StabilityEntry {
  Method method = Method::Euler;
  double h = 0.0;
  int K = 1;
  std::vector<std::complex<double>> z;  // (h/K) * lambda_j
  std::vector<double> amplification;    // |R(z_j)|
  bool stable = false;                  // all |R(z_j)| <= 1
};

struct StabilityReport {
  std::vector<std::complex<double>> eigenvalues;
  std::vector<StabilityEntry> entries;
};

// Classifies each (method, h, K): unrolling scales every eigenvalue by 1/K,
// so deep unrolling pulls z back inside the stability region.
inline StabilityReport stability_report(System system, const Vector& at_state,
                                        const std::vector<Method>& methods,
                                        const std::vector<double>& h_list,
                                        const std::vector<int>& K_list) {
  if (methods.empty() || h_list.empty() || K_list.empty())
    fail(ErrorKind::InvalidArgument, "stability report needs non-empty lists");
  StabilityReport report;
  report.eigenvalues = jacobian_eigenvalues(system, at_state);
  for (Method m : methods)
    for (double h : h_list)
      for (int K : K_list) {
        if (!(h > 0) || K < 1)
          fail(ErrorKind::InvalidArgument, "h must be > 0 and K >= 1");
        StabilityEntry e;
        e.method = m;
        e.h = h;
        e.K = K;
        e.stable = true;
        for (const auto& lambda : report.eigenvalues) {
          const std::complex<double> z = (h / static_cast<double>(K)) * lambda;
          const double r = std::abs(stability_polynomial(m, z));
          e.z.push_back(z);
          e.amplification.push_back(r);
          if (r > 1.0) e.stable = false;
        }
        report.entries.push_back(std::move(e));
      }
  return report;
}

// ---------------------------------------------------------------------------
// Parameter sweeps

enum class CellStatus { Ok, Diverged };

inline const char* to_string(CellStatus s) {
  return s == CellStatus::Ok ? "ok" : "diverged";
}

struct SweepCell {
  double h = 0.0;
  int K = 1;
  double sigma = 0.0;
  Method method = Method::Euler;
  Solver solver = Solver::ClosedForm;
  double l1_error = std::numeric_limits<double>::quiet_NaN();
  bool recovered_support_correct = false;
  int extra_terms = 0;
  double runtime_seconds = 0.0;
  CellStatus status = CellStatus::Diverged;
};

struct SweepOptions {
  System system = System::CubicOscillator;
  std::vector<double> h_list;
  std::vector<int> K_list;
  std::vector<double> sigma_list{0.0};
  std::vector<Method> methods{Method::Euler};
  DiscoveryConfig base;  // per-cell method, K, and seed are filled by the sweep
  std::uint64_t seed = 0;
  bool record_runtimes = false;  // leave zeros for byte-identical re-runs
  int jobs = 1;
};

namespace detail {

// Counter-based sub-seed scheme: every consumer draws from a disjoint
// (stream, counter) pair mixed through the splitmix64 finalizer, so adding
// cells never shifts the seeds of existing ones.
inline std::uint64_t derive_seed(std::uint64_t master, std::uint64_t stream,
                                 std::uint64_t counter) {
  std::uint64_t x =
      master + 0x9E3779B97F4A7C15ull * ((stream << 32) + counter + 1);
  x ^= x >> 30;
  x *= 0xBF58476D1CE4E5B9ull;
  x ^= x >> 27;
  x *= 0x94D049BB133111EBull;
  x ^= x >> 31;
  return x;
}

inline long stride_for_step(double h, double fine_dt) {
  const long stride = std::llround(h / fine_dt);
  if (stride < 1 || std::abs(stride * fine_dt - h) > 1e-6 * h)
    fail(ErrorKind::InvalidArgument,
         "observation step is not a multiple of the simulation step");
  return stride;
}

}  // namespace detail

// One fine simulation per sigma, subsampled per h; each cell is an
// independent discovery. Cell failures are recorded, never propagated.
// Row order: sigma, then method, then h, then K (all innermost-fastest).
inline std::vector<SweepCell> run_sweep(const SweepOptions& opt) {
  if (opt.h_list.empty() || opt.K_list.empty() || opt.sigma_list.empty() ||
      opt.methods.empty())
    fail(ErrorKind::InvalidArgument, "sweep lists must be non-empty");
  if (opt.jobs < 1) fail(ErrorKind::InvalidArgument, "jobs must be >= 1");

  const SystemSpec spec = default_system_spec(opt.system);
  const Dataset fine = simulate(spec);
  const Library lib = standard_library(opt.system, spec.grid);
  const CoefficientMatrix gt = ground_truth_alpha(opt.system, lib);

  // Shared, read-only datasets: one noisy copy per sigma, one view per h.
  std::vector<Dataset> per_sigma_h;
  per_sigma_h.reserve(opt.sigma_list.size() * opt.h_list.size());
  for (std::size_t si = 0; si < opt.sigma_list.size(); ++si) {
    const Dataset noisy = add_noise(fine, opt.sigma_list[si],
                                    detail::derive_seed(opt.seed, 0, si));
    for (double h : opt.h_list)
      per_sigma_h.push_back(
          subsample(noisy, detail::stride_for_step(h, spec.fine_dt)));
  }

  std::vector<SweepCell> cells;
  std::vector<std::size_t> cell_dataset;  // index into per_sigma_h
  for (std::size_t si = 0; si < opt.sigma_list.size(); ++si)
    for (Method m : opt.methods)
      for (std::size_t hi = 0; hi < opt.h_list.size(); ++hi)
        for (int K : opt.K_list) {
          SweepCell c;
          c.h = opt.h_list[hi];
          c.K = K;
          c.sigma = opt.sigma_list[si];
          c.method = m;
          c.solver = opt.base.solver;
          cells.push_back(c);
          cell_dataset.push_back(si * opt.h_list.size() + hi);
        }

  auto run_cell = [&](std::size_t i) {
    SweepCell& c = cells[i];
    DiscoveryConfig config = opt.base;
    config.method = c.method;
    config.K = c.K;
    config.seed = detail::derive_seed(opt.seed, 1, i);
    const auto start = std::chrono::steady_clock::now();
    try {
      const DiscoveredModel model = discover(per_sigma_h[cell_dataset[i]], lib, config);
      c.l1_error = l1_error(model.coefficients, gt);
      c.recovered_support_correct =
          (model.coefficients.active == gt.active).all();
      c.extra_terms = static_cast<int>(
          (model.coefficients.active && !gt.active).count());
      c.status = CellStatus::Ok;
    } catch (const Error&) {
      c.l1_error = std::numeric_limits<double>::quiet_NaN();
      c.recovered_support_correct = false;
      c.extra_terms = 0;
      c.status = CellStatus::Diverged;
    }
    if (opt.record_runtimes)
      c.runtime_seconds =
          std::chrono::duration<double>(std::chrono::steady_clock::now() - start)
              .count();
  };

  if (opt.jobs == 1 || cells.size() < 2) {
    for (std::size_t i = 0; i < cells.size(); ++i) run_cell(i);
  } else {
    std::atomic<std::size_t> next{0};
    auto worker = [&] {
      for (std::size_t i = next.fetch_add(1); i < cells.size();
           i = next.fetch_add(1))
        run_cell(i);
    };
    std::vector<std::thread> pool;
    const int n = std::min<int>(opt.jobs, static_cast<int>(cells.size()));
    pool.reserve(static_cast<std::size_t>(n));
    for (int t = 0; t < n; ++t) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
  }
  return cells;
}

// ---------------------------------------------------------------------------
// Table output

namespace detail {

// Shortest round-trip decimal form, locale-independent ('.' separator).
inline std::string format_double(double v) {
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

}  // namespace detail

inline std::string sweep_to_csv(const std::vector<SweepCell>& cells) {
  std::string out =
      "h,K,sigma,method,solver,l1_error,recovered_support_correct,extra_terms,"
      "runtime_seconds,status\n";
  for (const SweepCell& c : cells) {
    out += detail::format_double(c.h);
    out += ',';
    out += std::to_string(c.K);
    out += ',';
    out += detail::format_double(c.sigma);
    out += ',';
    out += to_string(c.method);
    out += ',';
    out += to_string(c.solver);
    out += ',';
    out += detail::format_double(c.l1_error);
    out += ',';
    out += c.recovered_support_correct ? "true" : "false";
    out += ',';
    out += std::to_string(c.extra_terms);
    out += ',';
    out += detail::format_double(c.runtime_seconds);
    out += ',';
    out += to_string(c.status);
    out += '\n';
  }
  return out;
}

inline void to_json(json& j, const SweepCell& c) {
  j = json{{"h", c.h},
           {"K", c.K},
           {"sigma", c.sigma},
           {"method", c.method},
           {"solver", c.solver},
           {"l1_error", c.l1_error},
           {"recovered_support_correct", c.recovered_support_correct},
           {"extra_terms", c.extra_terms},
           {"runtime_seconds", c.runtime_seconds},
           {"status", to_string(c.status)}};
  if (std::isnan(c.l1_error)) j["l1_error"] = nullptr;
}

inline void from_json(const json& j, SweepCell& c) {
  j.at("h").get_to(c.h);
  j.at("K").get_to(c.K);
  j.at("sigma").get_to(c.sigma);
  c.method = j.at("method").get<Method>();
  c.solver = j.at("solver").get<Solver>();
  c.l1_error = j.at("l1_error").is_null()
                   ? std::numeric_limits<double>::quiet_NaN()
                   : j.at("l1_error").get<double>();
  j.at("recovered_support_correct").get_to(c.recovered_support_correct);
  j.at("extra_terms").get_to(c.extra_terms);
  j.at("runtime_seconds").get_to(c.runtime_seconds);
  c.status = j.at("status").get<std::string>() == "ok" ? CellStatus::Ok
                                                       : CellStatus::Diverged;
}

inline json sweep_to_json(const std::vector<SweepCell>& cells) {
  json j;
  j["cells"] = cells;
  return j;
}

inline std::string stability_to_csv(const StabilityReport& report) {
  std::string out = "method,h,K,j,z_re,z_im,amplification,stable\n";
  for (const StabilityEntry& e : report.entries)
    for (std::size_t j = 0; j < e.z.size(); ++j) {
      out += to_string(e.method);
      out += ',';
      out += detail::format_double(e.h);
      out += ',';
      out += std::to_string(e.K);
      out += ',';
      out += std::to_string(j);
      out += ',';
      out += detail::format_double(e.z[j].real());
      out += ',';
      out += detail::format_double(e.z[j].imag());
      out += ',';
      out += detail::format_double(e.amplification[j]);
      out += ',';
      out += e.stable ? "true" : "false";
      out += '\n';
    }
  return out;
}

// ---------------------------------------------------------------------------
// Slope fitting for the truncation probes

// Least-squares slope of log(y) against log(x).
inline double fit_loglog_slope(const std::vector<double>& x,
                               const std::vector<double>& y) {
  if (x.size() != y.size() || x.size() < 2)
    fail(ErrorKind::InvalidArgument, "slope fit needs >= 2 matching points");
  const double n = static_cast<double>(x.size());
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (!(x[i] > 0) || !(y[i] > 0))
      fail(ErrorKind::InvalidArgument, "slope fit needs positive values");
    const double lx = std::log(x[i]), ly = std::log(y[i]);
    sx += lx;
    sy += ly;
    sxx += lx * lx;
    sxy += lx * ly;
  }
  return (n * sxy - sx * sy) / (n * sxx - sx * sx);
}

}  // namespace usindy
