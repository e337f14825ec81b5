#pragma once

// Core domain types shared by every module: space-time datasets, term
// libraries, coefficient matrices, discovery configuration, discovered
// models, training-pair extraction, content fingerprinting, and the on-disk
// formats (binary dataset files, pure-JSON model files).

#include <Eigen/Dense>
#include <json.hpp>

#include <bit>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

static_assert(std::endian::native == std::endian::little,
              "on-disk payloads are little-endian doubles");

namespace usindy {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using BoolMatrix = Eigen::Array<bool, Eigen::Dynamic, Eigen::Dynamic>;
using json = nlohmann::ordered_json;

// ---------------------------------------------------------------------------
// Errors

enum class ErrorKind {
  EmptyDataset,
  GridMismatch,
  NonFiniteState,
  NonFiniteFeatures,
  UnsupportedOrder,
  SingularSystem,
  DivergedDuringUnroll,
  UnsupportedLibraryForSGD,
  LibraryMismatch,
  UnsupportedDimension,
  SimulationDiverged,
  InvalidArgument,
  IoError,
};

inline const char* error_kind_name(ErrorKind k) {
  switch (k) {
    case ErrorKind::EmptyDataset: return "EmptyDataset";
    case ErrorKind::GridMismatch: return "GridMismatch";
    case ErrorKind::NonFiniteState: return "NonFiniteState";
    case ErrorKind::NonFiniteFeatures: return "NonFiniteFeatures";
    case ErrorKind::UnsupportedOrder: return "UnsupportedOrder";
    case ErrorKind::SingularSystem: return "SingularSystem";
    case ErrorKind::DivergedDuringUnroll: return "DivergedDuringUnroll";
    case ErrorKind::UnsupportedLibraryForSGD: return "UnsupportedLibraryForSGD";
    case ErrorKind::LibraryMismatch: return "LibraryMismatch";
    case ErrorKind::UnsupportedDimension: return "UnsupportedDimension";
    case ErrorKind::SimulationDiverged: return "SimulationDiverged";
    case ErrorKind::InvalidArgument: return "InvalidArgument";
    case ErrorKind::IoError: return "IoError";
  }
  return "Unknown";
}

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& msg)
      : std::runtime_error(std::string(error_kind_name(kind)) + ": " + msg),
        kind(kind) {}
  ErrorKind kind;
};

[[noreturn]] inline void fail(ErrorKind kind, const std::string& msg) {
  throw Error(kind, msg);
}

// ---------------------------------------------------------------------------
// Grids

enum class Boundary { Periodic };

struct TimeGrid {
  std::vector<double> times;

  long snapshots() const { return static_cast<long>(times.size()); }

  std::vector<double> steps() const {
    std::vector<double> h(times.size() > 0 ? times.size() - 1 : 0);
    for (std::size_t j = 0; j + 1 < times.size(); ++j) h[j] = times[j + 1] - times[j];
    return h;
  }

  void validate() const {
    for (std::size_t j = 0; j < times.size(); ++j) {
      if (!std::isfinite(times[j]))
        fail(ErrorKind::InvalidArgument, "non-finite time stamp");
      if (j > 0 && !(times[j] > times[j - 1]))
        fail(ErrorKind::InvalidArgument, "time stamps must be strictly increasing");
    }
  }
};

struct SpatialGrid {
  std::vector<long> dims{1};
  std::vector<double> spacings{1.0};
  Boundary boundary = Boundary::Periodic;

  int ndim() const { return static_cast<int>(dims.size()); }

  long points() const {
    long m = 1;
    for (long d : dims) m *= d;
    return m;
  }

  void validate() const {
    if (dims.empty() || dims.size() != spacings.size())
      fail(ErrorKind::InvalidArgument, "grid dims/spacings mismatch");
    for (long d : dims)
      if (d < 1) fail(ErrorKind::InvalidArgument, "grid axis length must be >= 1");
    for (double s : spacings)
      if (!(s > 0) || !std::isfinite(s))
        fail(ErrorKind::InvalidArgument, "grid spacing must be positive");
  }

  bool same_shape(const SpatialGrid& o) const {
    return dims == o.dims && spacings == o.spacings && boundary == o.boundary;
  }
};

// ---------------------------------------------------------------------------
// Dataset
//
// states holds (J+1)*M rows (time-major, then space) and d2 columns; this is
// the row-major [time, space, variable] layout of the on-disk payload.

struct Dataset {
  SpatialGrid grid;
  TimeGrid time;
  int d2 = 1;
  Matrix states;
  std::optional<double> noise_sigma;
  std::optional<std::uint64_t> seed;

  long snapshots() const { return time.snapshots(); }

  void validate() const {
    grid.validate();
    time.validate();
    if (d2 < 1) fail(ErrorKind::InvalidArgument, "d2 must be >= 1");
    if (states.rows() != snapshots() * grid.points() || states.cols() != d2)
      fail(ErrorKind::InvalidArgument, "states shape inconsistent with grids");
    if (!states.allFinite())
      fail(ErrorKind::NonFiniteState, "dataset contains non-finite entries");
  }
};

// Training pairs (U_prev, U_next, per-row step). pair_stride=1 is the

// consecutive-snapshot construction; pair_stride=s>1 pairs every snapshot
// with its s-later neighbour (all overlapping offsets retained).
struct TrainingPairs {
  Matrix u_prev, u_next;      // [P*M, d2]
  Vector h_rows;              // [P*M]
  std::vector<double> steps;  // per pair, length P
  std::vector<double> times;  // pair start times, length P
  long pairs_t = 0;           // P
  long M = 1;
};

inline TrainingPairs make_training_pairs(const Dataset& ds, long pair_stride = 1) {
  if (pair_stride < 1) fail(ErrorKind::InvalidArgument, "pair_stride must be >= 1");
  const long J1 = ds.snapshots();
  const long P = J1 - pair_stride;
  if (P < 1) fail(ErrorKind::EmptyDataset, "not enough snapshots for one training pair");
  const long M = ds.grid.points();
  TrainingPairs tp;
  tp.pairs_t = P;
  tp.M = M;
  tp.u_prev = ds.states.topRows(P * M);
  tp.u_next = ds.states.bottomRows(P * M);
  tp.h_rows.resize(P * M);
  tp.steps.resize(P);
  tp.times.resize(P);
  for (long p = 0; p < P; ++p) {
    tp.steps[p] = ds.time.times[p + pair_stride] - ds.time.times[p];
    tp.times[p] = ds.time.times[p];
    tp.h_rows.segment(p * M, M).setConstant(tp.steps[p]);
  }
  return tp;
}

// ---------------------------------------------------------------------------
// Reference systems

enum class System {
  CubicOscillator,
  LinearOscillator,
  FitzHughNagumo,
  Advection,
  ReactionDiffusion2D,
  KuramotoSivashinsky,
};

inline const char* to_string(System s) {
  switch (s) {
    case System::CubicOscillator: return "cubic_oscillator";
    case System::LinearOscillator: return "linear_oscillator";
    case System::FitzHughNagumo: return "fitzhugh_nagumo";
    case System::Advection: return "advection";
    case System::ReactionDiffusion2D: return "reaction_diffusion_2d";
    case System::KuramotoSivashinsky: return "kuramoto_sivashinsky";
  }
  return "cubic_oscillator";
}

inline System system_from_string(const std::string& s) {
  if (s == "cubic_oscillator") return System::CubicOscillator;
  if (s == "linear_oscillator") return System::LinearOscillator;
  if (s == "fitzhugh_nagumo") return System::FitzHughNagumo;
  if (s == "advection") return System::Advection;
  if (s == "reaction_diffusion_2d") return System::ReactionDiffusion2D;
  if (s == "kuramoto_sivashinsky") return System::KuramotoSivashinsky;
  fail(ErrorKind::InvalidArgument, "unknown system: " + s);
}

inline const std::vector<System>& all_systems() {
  static const std::vector<System> v{
      System::CubicOscillator,    System::LinearOscillator,
      System::FitzHughNagumo,     System::Advection,
      System::ReactionDiffusion2D, System::KuramotoSivashinsky};
  return v;
}

// ---------------------------------------------------------------------------
// Term descriptors and libraries

enum class TermKind { Constant, Monomial, SpatialDerivative, Product };

struct TermDescriptor {
  TermKind kind = TermKind::Constant;
  std::vector<int> exponents;     // Monomial / Product: per state variable
  int var_index = 0;              // SpatialDerivative / Product
  std::vector<int> deriv_orders;  // SpatialDerivative / Product: per axis
  std::string label = "1";

  bool operator==(const TermDescriptor& o) const {
    return kind == o.kind && exponents == o.exponents && var_index == o.var_index &&
           deriv_orders == o.deriv_orders && label == o.label;
  }
};

struct Library {
  std::vector<TermDescriptor> terms;
  int d2 = 1;
  SpatialGrid grid;
  std::vector<std::string> var_names;  // display names; labels stay canonical

  long size() const { return static_cast<long>(terms.size()); }

  void validate() const {
    grid.validate();
    if (terms.empty()) fail(ErrorKind::InvalidArgument, "library must have >= 1 term");
    std::set<std::string> labels;
    for (const auto& t : terms)
      if (!labels.insert(t.label).second)
        fail(ErrorKind::InvalidArgument, "duplicate term label: " + t.label);
  }

  bool same_terms(const Library& o) const {
    if (d2 != o.d2 || terms.size() != o.terms.size()) return false;
    for (std::size_t i = 0; i < terms.size(); ++i)
      if (!(terms[i] == o.terms[i])) return false;
    return true;
  }
};

// ---------------------------------------------------------------------------
// Coefficients

struct CoefficientMatrix {
  Matrix values;
  BoolMatrix active;

  static CoefficientMatrix zeros(long n_terms, int d2) {
    CoefficientMatrix c;
    c.values = Matrix::Zero(n_terms, d2);
    c.active = BoolMatrix::Constant(n_terms, d2, true);
    return c;
  }

  long rows() const { return values.rows(); }
  int cols() const { return static_cast<int>(values.cols()); }

  // Re-establish the invariant values(i,j)==0 wherever active(i,j)==false.
  void apply_mask() {
    for (long i = 0; i < values.rows(); ++i)
      for (long j = 0; j < values.cols(); ++j)
        if (!active(i, j)) values(i, j) = 0.0;
  }

  long active_count() const {
    long n = 0;
    for (long i = 0; i < active.rows(); ++i)
      for (long j = 0; j < active.cols(); ++j)
        if (active(i, j)) ++n;
    return n;
  }

  bool mask_consistent() const {
    for (long i = 0; i < values.rows(); ++i)
      for (long j = 0; j < values.cols(); ++j)
        if (!active(i, j) && values(i, j) != 0.0) return false;
    return true;
  }
};

// ---------------------------------------------------------------------------
// Configuration

enum class Method { Euler, RK4 };
enum class Solver { ClosedForm, SGD };

struct SGDConfig {
  double learning_rate = 5e-3;
  double lr_decay = 10.0;
  int epochs_per_threshold = 200;
  int threshold_rounds = 3;
  int batch_size = 100;

  void validate() const {
    if (!(learning_rate > 0)) fail(ErrorKind::InvalidArgument, "learning_rate must be > 0");
    if (!(lr_decay > 1)) fail(ErrorKind::InvalidArgument, "lr_decay must be > 1");
    if (epochs_per_threshold < 1 || threshold_rounds < 1 || batch_size < 1)
      fail(ErrorKind::InvalidArgument, "SGD counts must be >= 1");
  }
};

struct DiscoveryConfig {
  Method method = Method::Euler;
  Solver solver = Solver::ClosedForm;
  int K = 1;
  double lambda = 1e-2;
  double alpha_th = 0.05;
  int max_iters = 50;
  int convergence_window = 5;
  double convergence_tol = 1e-6;
  std::optional<SGDConfig> sgd;
  std::uint64_t seed = 0;
  long pair_stride = 1;

  void validate() const {
    if (K < 1) fail(ErrorKind::InvalidArgument, "K must be >= 1");
    if (lambda < 0) fail(ErrorKind::InvalidArgument, "lambda must be >= 0");
    if (alpha_th < 0) fail(ErrorKind::InvalidArgument, "alpha_th must be >= 0");
    if (max_iters < 1) fail(ErrorKind::InvalidArgument, "max_iters must be >= 1");
    if (convergence_window < 1)
      fail(ErrorKind::InvalidArgument, "convergence_window must be >= 1");
    if (pair_stride < 1) fail(ErrorKind::InvalidArgument, "pair_stride must be >= 1");
    if (sgd) sgd->validate();
  }
};

struct IterationRecord {
  int iter = 0;
  double loss = 0.0;
  double alpha_change = 0.0;
  long active_count = 0;
  bool diverged = false;
};

struct DiscoveredModel {
  Library library;
  CoefficientMatrix coefficients;
  DiscoveryConfig config;
  std::vector<IterationRecord> trace;
  std::string dataset_fingerprint;
};

// ---------------------------------------------------------------------------
// Fingerprinting (FNV-1a 64 over a canonical byte serialization)

namespace detail {

class Fnv1a {
 public:
  void feed_bytes(const void* p, std::size_t n) {
    const auto* b = static_cast<const unsigned char*>(p);
    for (std::size_t i = 0; i < n; ++i) {
      h_ ^= b[i];
      h_ *= 0x100000001b3ull;
    }
  }
  void feed_double(double x) { feed_bytes(&x, sizeof x); }
  void feed_i64(std::int64_t x) { feed_bytes(&x, sizeof x); }
  std::uint64_t value() const { return h_; }

 private:
  std::uint64_t h_ = 0xcbf29ce484222325ull;
};

inline std::string hex64(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return std::string(buf);
}

}  // namespace detail

inline std::string fingerprint(const Dataset& ds) {
  detail::Fnv1a h;
  h.feed_i64(static_cast<std::int64_t>(ds.grid.dims.size()));
  for (long d : ds.grid.dims) h.feed_i64(d);
  for (double s : ds.grid.spacings) h.feed_double(s);
  h.feed_i64(static_cast<std::int64_t>(ds.grid.boundary));
  h.feed_i64(ds.d2);
  h.feed_i64(ds.snapshots());
  for (double t : ds.time.times) h.feed_double(t);
  for (long i = 0; i < ds.states.rows(); ++i)
    for (int j = 0; j < ds.d2; ++j) h.feed_double(ds.states(i, j));
  return "fnv1a:" + detail::hex64(h.value());
}

// ---------------------------------------------------------------------------
// JSON conversions

inline const char* to_string(Boundary b) {
  switch (b) {
    case Boundary::Periodic: return "periodic";
  }
  return "periodic";
}

inline Boundary boundary_from_string(const std::string& s) {
  if (s == "periodic") return Boundary::Periodic;
  fail(ErrorKind::InvalidArgument, "unknown boundary: " + s);
}

inline const char* to_string(Method m) { return m == Method::Euler ? "euler" : "rk4"; }

inline Method method_from_string(const std::string& s) {
  if (s == "euler") return Method::Euler;
  if (s == "rk4") return Method::RK4;
  fail(ErrorKind::InvalidArgument, "unknown method: " + s);
}

inline const char* to_string(Solver s) {
  return s == Solver::ClosedForm ? "closed_form" : "sgd";
}

inline Solver solver_from_string(const std::string& s) {
  if (s == "closed_form") return Solver::ClosedForm;
  if (s == "sgd") return Solver::SGD;
  fail(ErrorKind::InvalidArgument, "unknown solver: " + s);
}

inline const char* to_string(TermKind k) {
  switch (k) {
    case TermKind::Constant: return "constant";
    case TermKind::Monomial: return "monomial";
    case TermKind::SpatialDerivative: return "spatial_derivative";
    case TermKind::Product: return "product";
  }
  return "constant";
}

inline TermKind term_kind_from_string(const std::string& s) {
  if (s == "constant") return TermKind::Constant;
  if (s == "monomial") return TermKind::Monomial;
  if (s == "spatial_derivative") return TermKind::SpatialDerivative;
  if (s == "product") return TermKind::Product;
  fail(ErrorKind::InvalidArgument, "unknown term kind: " + s);
}

inline json to_json(const SpatialGrid& g) {
  return json{{"dims", g.dims}, {"spacings", g.spacings}, {"boundary", to_string(g.boundary)}};
}

inline SpatialGrid spatial_grid_from_json(const json& j) {
  SpatialGrid g;
  g.dims = j.at("dims").get<std::vector<long>>();
  g.spacings = j.at("spacings").get<std::vector<double>>();
  g.boundary = boundary_from_string(j.at("boundary").get<std::string>());
  g.validate();
  return g;
}

inline json to_json(const TermDescriptor& t) {
  json j;
  j["kind"] = to_string(t.kind);
  if (t.kind == TermKind::Monomial || t.kind == TermKind::Product)
    j["exponents"] = t.exponents;
  if (t.kind == TermKind::SpatialDerivative || t.kind == TermKind::Product) {
    j["var_index"] = t.var_index;
    j["deriv_orders"] = t.deriv_orders;
  }
  j["label"] = t.label;
  return j;
}

inline TermDescriptor term_from_json(const json& j) {
  TermDescriptor t;
  t.kind = term_kind_from_string(j.at("kind").get<std::string>());
  if (j.contains("exponents")) t.exponents = j.at("exponents").get<std::vector<int>>();
  if (j.contains("var_index")) t.var_index = j.at("var_index").get<int>();
  if (j.contains("deriv_orders"))
    t.deriv_orders = j.at("deriv_orders").get<std::vector<int>>();
  t.label = j.at("label").get<std::string>();
  return t;
}

inline json to_json(const Library& lib) {
  json terms = json::array();
  for (const auto& t : lib.terms) terms.push_back(to_json(t));
  return json{{"d2", lib.d2},
              {"grid", to_json(lib.grid)},
              {"var_names", lib.var_names},
              {"terms", terms}};
}

inline Library library_from_json(const json& j) {
  Library lib;
  lib.d2 = j.at("d2").get<int>();
  lib.grid = spatial_grid_from_json(j.at("grid"));
  lib.var_names = j.at("var_names").get<std::vector<std::string>>();
  for (const auto& tj : j.at("terms")) lib.terms.push_back(term_from_json(tj));
  lib.validate();
  return lib;
}

inline json to_json(const SGDConfig& c) {
  return json{{"learning_rate", c.learning_rate},
              {"lr_decay", c.lr_decay},
              {"epochs_per_threshold", c.epochs_per_threshold},
              {"threshold_rounds", c.threshold_rounds},
              {"batch_size", c.batch_size}};
}

inline SGDConfig sgd_config_from_json(const json& j) {
  SGDConfig c;
  c.learning_rate = j.at("learning_rate").get<double>();
  c.lr_decay = j.at("lr_decay").get<double>();
  c.epochs_per_threshold = j.at("epochs_per_threshold").get<int>();
  c.threshold_rounds = j.at("threshold_rounds").get<int>();
  c.batch_size = j.at("batch_size").get<int>();
  return c;
}

inline json to_json(const DiscoveryConfig& c) {
  json j{{"method", to_string(c.method)},
         {"solver", to_string(c.solver)},
         {"K", c.K},
         {"lambda", c.lambda},
         {"alpha_th", c.alpha_th},
         {"max_iters", c.max_iters},
         {"convergence_window", c.convergence_window},
         {"convergence_tol", c.convergence_tol},
         {"seed", c.seed},
         {"pair_stride", c.pair_stride}};
  j["sgd"] = c.sgd ? to_json(*c.sgd) : json(nullptr);
  return j;
}

inline DiscoveryConfig discovery_config_from_json(const json& j) {
  DiscoveryConfig c;
  c.method = method_from_string(j.at("method").get<std::string>());
  c.solver = solver_from_string(j.at("solver").get<std::string>());
  c.K = j.at("K").get<int>();
  c.lambda = j.at("lambda").get<double>();
  c.alpha_th = j.at("alpha_th").get<double>();
  c.max_iters = j.at("max_iters").get<int>();
  c.convergence_window = j.at("convergence_window").get<int>();
  c.convergence_tol = j.at("convergence_tol").get<double>();
  c.seed = j.at("seed").get<std::uint64_t>();
  c.pair_stride = j.at("pair_stride").get<long>();
  if (!j.at("sgd").is_null()) c.sgd = sgd_config_from_json(j.at("sgd"));
  c.validate();
  return c;
}

inline json to_json(const DiscoveredModel& m) {
  json alpha = json::array(), active = json::array();
  for (long i = 0; i < m.coefficients.rows(); ++i) {
    json arow = json::array(), brow = json::array();
    for (int q = 0; q < m.coefficients.cols(); ++q) {
      arow.push_back(m.coefficients.values(i, q));
      brow.push_back(static_cast<bool>(m.coefficients.active(i, q)));
    }
    alpha.push_back(arow);
    active.push_back(brow);
  }
  json trace = json::array();
  for (const auto& r : m.trace)
    trace.push_back(json{{"iter", r.iter},
                         {"loss", r.loss},
                         {"alpha_change", r.alpha_change},
                         {"active_count", r.active_count},
                         {"diverged", r.diverged}});
  return json{{"library", to_json(m.library)},
              {"alpha", alpha},
              {"active", active},
              {"config", to_json(m.config)},
              {"trace", trace},
              {"dataset_fingerprint", m.dataset_fingerprint}};
}

inline DiscoveredModel model_from_json(const json& j) {
  DiscoveredModel m;
  m.library = library_from_json(j.at("library"));
  const auto& alpha = j.at("alpha");
  const auto& active = j.at("active");
  const long P = static_cast<long>(alpha.size());
  const int d2 = P > 0 ? static_cast<int>(alpha.at(0).size()) : m.library.d2;
  m.coefficients.values = Matrix::Zero(P, d2);
  m.coefficients.active = BoolMatrix::Constant(P, d2, false);
  for (long i = 0; i < P; ++i)
    for (int q = 0; q < d2; ++q) {
      m.coefficients.values(i, q) = alpha.at(i).at(q).get<double>();
      m.coefficients.active(i, q) = active.at(i).at(q).get<bool>();
    }
  m.config = discovery_config_from_json(j.at("config"));
  for (const auto& rj : j.at("trace")) {
    IterationRecord r;
    r.iter = rj.at("iter").get<int>();
    r.loss = rj.at("loss").get<double>();
    r.alpha_change = rj.at("alpha_change").get<double>();
    r.active_count = rj.at("active_count").get<long>();
    r.diverged = rj.at("diverged").get<bool>();
    m.trace.push_back(r);
  }
  m.dataset_fingerprint = j.at("dataset_fingerprint").get<std::string>();
  return m;
}

// ---------------------------------------------------------------------------
// Dataset / model files
//
// Dataset file = one-line JSON header + '\n' + little-endian float64 payload
// in row-major [time, space, variable] order. Model files are pure JSON.

inline void save_dataset(const std::string& path, const Dataset& ds) {
  ds.validate();
  json header{{"dims", ds.grid.dims},
              {"spacings", ds.grid.spacings},
              {"boundary", to_string(ds.grid.boundary)},
              {"times", ds.time.times},
              {"d2", ds.d2}};
  header["sigma"] = ds.noise_sigma ? json(*ds.noise_sigma) : json(nullptr);
  header["seed"] = ds.seed ? json(*ds.seed) : json(nullptr);
  std::ofstream out(path, std::ios::binary);
  if (!out) fail(ErrorKind::IoError, "cannot open for write: " + path);
  out << header.dump() << '\n';
  std::vector<double> row(ds.d2);
  for (long i = 0; i < ds.states.rows(); ++i) {
    for (int q = 0; q < ds.d2; ++q) row[q] = ds.states(i, q);
    out.write(reinterpret_cast<const char*>(row.data()),
              static_cast<std::streamsize>(sizeof(double) * row.size()));
  }
  if (!out) fail(ErrorKind::IoError, "write failed: " + path);
}

inline Dataset load_dataset(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorKind::IoError, "cannot open for read: " + path);
  std::string header_line;
  if (!std::getline(in, header_line))
    fail(ErrorKind::IoError, "missing dataset header: " + path);
  json header;
  try {
    header = json::parse(header_line);
  } catch (const std::exception& e) {
    fail(ErrorKind::IoError, std::string("bad dataset header: ") + e.what());
  }
  Dataset ds;
  try {
    ds.grid.dims = header.at("dims").get<std::vector<long>>();
    ds.grid.spacings = header.at("spacings").get<std::vector<double>>();
    ds.grid.boundary = boundary_from_string(header.at("boundary").get<std::string>());
    ds.time.times = header.at("times").get<std::vector<double>>();
    ds.d2 = header.at("d2").get<int>();
    if (!header.at("sigma").is_null()) ds.noise_sigma = header.at("sigma").get<double>();
    if (!header.at("seed").is_null()) ds.seed = header.at("seed").get<std::uint64_t>();
  } catch (const Error&) {
    throw;
  } catch (const std::exception& e) {
    fail(ErrorKind::IoError, std::string("bad dataset header: ") + e.what());
  }
  const long rows = ds.snapshots() * ds.grid.points();
  ds.states.resize(rows, ds.d2);
  std::vector<double> row(ds.d2);
  for (long i = 0; i < rows; ++i) {
    in.read(reinterpret_cast<char*>(row.data()),
            static_cast<std::streamsize>(sizeof(double) * row.size()));
    if (!in) fail(ErrorKind::IoError, "truncated dataset payload: " + path);
    for (int q = 0; q < ds.d2; ++q) ds.states(i, q) = row[q];
  }
  char extra;
  if (in.read(&extra, 1))
    fail(ErrorKind::IoError, "trailing bytes after dataset payload: " + path);
  ds.validate();
  return ds;
}

inline void save_model(const std::string& path, const DiscoveredModel& m) {
  std::ofstream out(path, std::ios::binary);
  if (!out) fail(ErrorKind::IoError, "cannot open for write: " + path);
  out << to_json(m).dump(2) << '\n';
  if (!out) fail(ErrorKind::IoError, "write failed: " + path);
}

inline DiscoveredModel load_model(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorKind::IoError, "cannot open for read: " + path);
  json j;
  try {
    j = json::parse(in);
  } catch (const std::exception& e) {
    fail(ErrorKind::IoError, std::string("bad model file: ") + e.what());
  }
  return model_from_json(j);
}

}  // namespace usindy
