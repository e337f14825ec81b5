#pragma once

// Reference data generators for the six benchmark systems, plus dataset
// subsampling, relative Gaussian noise injection, and RK4 rollout of
// discovered models. All generators are deterministic under (spec, seed).

#include <usindy/dictionary.hpp>

#include <unsupported/Eigen/FFT>

#include <complex>
#include <random>

namespace usindy {

struct SystemSpec {
  System system = System::CubicOscillator;
  SpatialGrid grid;
  double t_end = 10.0;
  double fine_dt = 2e-4;    // sampling interval of the produced dataset
  double solver_dt = 2e-5;  // internal integrator step
  Vector initial_ode;       // ODE systems: the initial (x, y)
};

inline SystemSpec default_system_spec(System system) {
  SystemSpec s;
  s.system = system;
  switch (system) {
    case System::CubicOscillator:
      s.grid.dims = {1};
      s.grid.spacings = {1.0};
      s.t_end = 10.0;
      s.fine_dt = 2e-4;
      s.solver_dt = s.fine_dt / 10.0;
      s.initial_ode = Vector(2);
      s.initial_ode << -0.488, 1.096;
      break;
    case System::LinearOscillator:
      s.grid.dims = {1};
      s.grid.spacings = {1.0};
      s.t_end = 10.0;
      s.fine_dt = 1e-3;
      s.solver_dt = s.fine_dt / 10.0;
      s.initial_ode = Vector(2);
      s.initial_ode << 2.0, 0.0;
      break;
    case System::FitzHughNagumo:
      s.grid.dims = {1};
      s.grid.spacings = {1.0};
      s.t_end = 40.0;
      s.fine_dt = 2e-3;
      s.solver_dt = s.fine_dt / 10.0;
      s.initial_ode = Vector(2);
      s.initial_ode << 0.0, 0.0;
      break;
    case System::Advection:
      s.grid.dims = {128};
      s.grid.spacings = {1.0 / 128.0};
      s.t_end = 2.0;
      s.fine_dt = 2e-4;
      s.solver_dt = 2e-4;
      break;
    case System::KuramotoSivashinsky:
      s.grid.dims = {100};
      s.grid.spacings = {64.0 / 100.0};
      s.t_end = 10.0;
      s.fine_dt = 1e-3;
      s.solver_dt = 1e-3;
      break;
    case System::ReactionDiffusion2D:
      s.grid.dims = {64, 64};
      s.grid.spacings = {20.0 / 64.0, 20.0 / 64.0};
      s.t_end = 10.0;
      s.fine_dt = 1.25e-2;  // 25 internal steps per stored snapshot
      s.solver_dt = 5e-4;
      break;
  }
  return s;
}

// Per-experiment regression defaults (regularization and threshold).
inline DiscoveryConfig default_discovery_config(System system) {
  DiscoveryConfig c;
  switch (system) {
    case System::CubicOscillator:
    case System::LinearOscillator:
    case System::FitzHughNagumo:
      c.lambda = 1e-2;
      c.alpha_th = 0.05;
      break;
    case System::Advection:
      c.lambda = 1e-2;
      c.alpha_th = 0.01;
      break;
    case System::ReactionDiffusion2D:
      c.lambda = 1e-1;
      c.alpha_th = 0.05;
      break;
    case System::KuramotoSivashinsky:
      c.lambda = 1e-6;
      c.alpha_th = 0.1;
      break;
  }
  return c;
}

inline CoefficientMatrix ground_truth_alpha(System system, const Library& lib) {
  CoefficientMatrix a;
  a.values = Matrix::Zero(lib.size(), lib.d2);
  a.active = BoolMatrix::Constant(lib.size(), lib.d2, false);
  auto set = [&](const std::string& label, int var, double value) {
    long i = term_index(lib, label);
    a.values(i, var) = value;
    a.active(i, var) = true;
  };
  switch (system) {
    case System::CubicOscillator:
      set("u^3", 0, -0.1);
      set("v^3", 0, 2.0);
      set("u^3", 1, -2.0);
      set("v^3", 1, -0.1);
      break;
    case System::LinearOscillator:
      set("u", 0, -0.1);
      set("v", 0, 2.0);
      set("u", 1, -2.0);
      set("v", 1, -0.1);
      break;
    case System::FitzHughNagumo:
      set("1", 0, 0.1);
      set("u", 0, 1.0);
      set("v", 0, -1.0);
      set("u^3", 0, -1.0 / 3.0);
      set("u", 1, 0.1);
      set("v", 1, -0.1);
      break;
    case System::Advection:
      set("u_x", 0, -0.4);
      break;
    case System::KuramotoSivashinsky:
      set("u_xx", 0, -1.0);
      set("u_xxxx", 0, -1.0);
      set("u u_x", 0, -5.0);
      break;
    case System::ReactionDiffusion2D:
      set("u", 0, 1.0);
      set("u^3", 0, -1.0);
      set("v^3", 0, 1.0);
      set("u_xx", 0, 0.1);
      set("u_yy", 0, 0.1);
      set("u^2 v", 0, 1.0);
      set("u v^2", 0, -1.0);
      set("v", 1, 1.0);
      set("u^3", 1, -1.0);
      set("v^3", 1, -1.0);
      set("v_xx", 1, 0.1);
      set("v_yy", 1, 0.1);
      set("u^2 v", 1, -1.0);
      set("u v^2", 1, -1.0);
      break;
  }
  return a;
}

namespace detail {

// Classical RK4 on a 2-variable autonomous right-hand side.
template <typename Rhs>
inline void rk4_step_2d(double& x, double& y, double dt, Rhs rhs) {
  auto [k1x, k1y] = rhs(x, y);
  auto [k2x, k2y] = rhs(x + 0.5 * dt * k1x, y + 0.5 * dt * k1y);
  auto [k3x, k3y] = rhs(x + 0.5 * dt * k2x, y + 0.5 * dt * k2y);
  auto [k4x, k4y] = rhs(x + dt * k3x, y + dt * k3y);
  x += dt / 6.0 * (k1x + 2.0 * k2x + 2.0 * k3x + k4x);
  y += dt / 6.0 * (k1y + 2.0 * k2y + 2.0 * k3y + k4y);
}

inline std::pair<double, double> ode_rhs(System system, double x, double y) {
  switch (system) {
    case System::CubicOscillator:
      return {-0.1 * x * x * x + 2.0 * y * y * y, -2.0 * x * x * x - 0.1 * y * y * y};
    case System::LinearOscillator:
      return {-0.1 * x + 2.0 * y, -2.0 * x - 0.1 * y};
    case System::FitzHughNagumo:
      return {x - y - x * x * x / 3.0 + 0.1, 0.1 * x - 0.1 * y};
    default:
      fail(ErrorKind::InvalidArgument, "not an ODE system");
  }
}

inline Dataset simulate_ode(const SystemSpec& spec) {
  const long J = static_cast<long>(std::llround(spec.t_end / spec.fine_dt));
  const int sub = std::max(1, static_cast<int>(std::llround(spec.fine_dt / spec.solver_dt)));
  const double dt = spec.fine_dt / sub;
  Dataset ds;
  ds.grid = spec.grid;
  ds.d2 = 2;
  ds.time.times.resize(static_cast<std::size_t>(J + 1));
  ds.states.resize(J + 1, 2);
  double x = spec.initial_ode(0), y = spec.initial_ode(1);
  for (long j = 0; j <= J; ++j) {
    ds.time.times[static_cast<std::size_t>(j)] = spec.fine_dt * static_cast<double>(j);
    ds.states(j, 0) = x;
    ds.states(j, 1) = y;
    if (!std::isfinite(x) || !std::isfinite(y))
      fail(ErrorKind::SimulationDiverged,
           "ODE state non-finite at t=" + std::to_string(spec.fine_dt * j));
    for (int s = 0; s < sub && j < J; ++s)
      rk4_step_2d(x, y, dt, [&](double a, double b) { return ode_rhs(spec.system, a, b); });
  }
  return ds;
}

inline Dataset simulate_advection(const SystemSpec& spec) {
  const long J = static_cast<long>(std::llround(spec.t_end / spec.fine_dt));
  const long M = spec.grid.dims[0];
  Dataset ds;
  ds.grid = spec.grid;
  ds.d2 = 1;
  ds.time.times.resize(static_cast<std::size_t>(J + 1));
  ds.states.resize((J + 1) * M, 1);
  constexpr double two_pi = 6.283185307179586476925286766559;
  for (long j = 0; j <= J; ++j) {
    const double t = spec.fine_dt * static_cast<double>(j);
    ds.time.times[static_cast<std::size_t>(j)] = t;
    for (long m = 0; m < M; ++m) {
      const double xm = static_cast<double>(m) / static_cast<double>(M);
      ds.states(j * M + m, 0) = std::sin(two_pi * (xm - 0.4 * t));
    }
  }
  return ds;
}

// Spectral helpers for the Kuramoto-Sivashinsky integrator. The spectral
// state is the 51-bin half spectrum of a 100-point real field; transforms
// go through the full complex FFT with the Hermitian extension so the
// round-trip matches the real-transform conventions exactly.
struct KsWorkspace {
  long n = 0;
  long nh = 0;  // n/2 + 1
  Eigen::FFT<double> fft;
  std::vector<std::complex<double>> full, time_domain;

  explicit KsWorkspace(long n_points) : n(n_points), nh(n_points / 2 + 1) {
    full.resize(static_cast<std::size_t>(n));
    time_domain.resize(static_cast<std::size_t>(n));
  }

  // Half-spectrum -> real field (length n).
  Vector irfft(const Eigen::VectorXcd& vh) {
    for (long m = 0; m < nh; ++m) full[static_cast<std::size_t>(m)] = vh(m);
    for (long m = nh; m < n; ++m)
      full[static_cast<std::size_t>(m)] = std::conj(vh(n - m));
    fft.inv(time_domain, full);
    Vector out(n);
    for (long i = 0; i < n; ++i) out(i) = time_domain[static_cast<std::size_t>(i)].real();
    return out;
  }

  // Real field -> half spectrum.
  Eigen::VectorXcd rfft(const Vector& u) {
    for (long i = 0; i < n; ++i)
      time_domain[static_cast<std::size_t>(i)] = std::complex<double>(u(i), 0.0);
    fft.fwd(full, time_domain);
    Eigen::VectorXcd out(nh);
    for (long m = 0; m < nh; ++m) out(m) = full[static_cast<std::size_t>(m)];
    return out;
  }
};

inline Dataset simulate_ks(const SystemSpec& spec) {
  const long n = spec.grid.dims[0];
  const double L = spec.grid.spacings[0] * static_cast<double>(n);
  const double dt = spec.solver_dt;
  const long J = static_cast<long>(std::llround(spec.t_end / spec.fine_dt));
  const int store_every =
      std::max(1, static_cast<int>(std::llround(spec.fine_dt / spec.solver_dt)));
  const long nh = n / 2 + 1;
  constexpr double pi = 3.141592653589793238462643383279;

  Vector k(nh);
  for (long m = 0; m < nh; ++m) k(m) = 2.0 * pi * static_cast<double>(m) / L;
  Vector lop = (k.array().square() - k.array().square().square()).matrix();

  Eigen::VectorXcd E(nh), E2(nh);
  for (long m = 0; m < nh; ++m) {
    E(m) = std::exp(std::complex<double>(dt * lop(m), 0.0));
    E2(m) = std::exp(std::complex<double>(dt * lop(m) / 2.0, 0.0));
  }

  // phi-functions via the mean over 32 contour points around each eigenvalue.
  const int npts = 32;
  Eigen::VectorXcd Q(nh), F1(nh), F2(nh), F3(nh);
  for (long m = 0; m < nh; ++m) {
    std::complex<double> q{}, f1{}, f2{}, f3{};
    for (int j = 1; j <= npts; ++j) {
      const std::complex<double> r =
          std::exp(std::complex<double>(0.0, pi * (j - 0.5) / npts));
      const std::complex<double> lr = dt * lop(m) + r;
      const std::complex<double> elr = std::exp(lr);
      const std::complex<double> elr2 = std::exp(lr / 2.0);
      q += (elr2 - 1.0) / lr;
      f1 += (-4.0 - lr + elr * (4.0 - 3.0 * lr + lr * lr)) / (lr * lr * lr);
      f2 += (2.0 + lr + elr * (-2.0 + lr)) / (lr * lr * lr);
      f3 += (-4.0 - 3.0 * lr - lr * lr + elr * (4.0 - lr)) / (lr * lr * lr);
    }
    Q(m) = dt * q.real() / npts;
    F1(m) = dt * f1.real() / npts;
    F2(m) = dt * f2.real() / npts;
    F3(m) = dt * f3.real() / npts;
  }

  Eigen::VectorXcd g(nh);
  for (long m = 0; m < nh; ++m) g(m) = std::complex<double>(0.0, -2.5 * k(m));

  KsWorkspace ws(n);
  Vector u0(n);
  for (long i = 0; i < n; ++i) {
    const double x = L * static_cast<double>(i) / static_cast<double>(n);
    u0(i) = 0.5 * std::exp(-100.0 * (x - L / 2.0) * (x - L / 2.0));
  }
  Eigen::VectorXcd vh = ws.rfft(u0);

  auto nonlinear = [&](const Eigen::VectorXcd& state) {
    Vector u = ws.irfft(state);
    Vector u2 = u.array().square().matrix();
    Eigen::VectorXcd out = ws.rfft(u2);
    return (g.array() * out.array()).matrix().eval();
  };

  Dataset ds;
  ds.grid = spec.grid;
  ds.d2 = 1;
  ds.time.times.resize(static_cast<std::size_t>(J + 1));
  ds.states.resize((J + 1) * n, 1);
  for (long j = 0; j <= J; ++j) {
    ds.time.times[static_cast<std::size_t>(j)] = spec.fine_dt * static_cast<double>(j);
    Vector u = ws.irfft(vh);
    if (!u.allFinite())
      fail(ErrorKind::SimulationDiverged,
           "KS state non-finite at t=" + std::to_string(spec.fine_dt * j));
    ds.states.block(j * n, 0, n, 1) = u;
    if (j == J) break;
    for (int s = 0; s < store_every; ++s) {
      Eigen::VectorXcd nv = nonlinear(vh);
      Eigen::VectorXcd a = (E2.array() * vh.array() + Q.array() * nv.array()).matrix();
      Eigen::VectorXcd na = nonlinear(a);
      Eigen::VectorXcd b = (E2.array() * vh.array() + Q.array() * na.array()).matrix();
      Eigen::VectorXcd nb = nonlinear(b);
      Eigen::VectorXcd c =
          (E2.array() * a.array() + Q.array() * (2.0 * nb.array() - nv.array())).matrix();
      Eigen::VectorXcd nc = nonlinear(c);
      vh = (E.array() * vh.array() + nv.array() * F1.array() +
            2.0 * (na.array() + nb.array()) * F2.array() + nc.array() * F3.array())
               .matrix();
    }
  }
  return ds;
}

inline Dataset simulate_reaction_diffusion(const SystemSpec& spec) {
  const long nx = spec.grid.dims[0], ny = spec.grid.dims[1];
  const long M = nx * ny;
  const double dx = spec.grid.spacings[0], dy = spec.grid.spacings[1];
  const double dt = spec.solver_dt;
  const long J = static_cast<long>(std::llround(spec.t_end / spec.fine_dt));
  const int store_every =
      std::max(1, static_cast<int>(std::llround(spec.fine_dt / spec.solver_dt)));

  Vector u(M), v(M);
  for (long ix = 0; ix < nx; ++ix)
    for (long iy = 0; iy < ny; ++iy) {
      const double x = -10.0 + dx * static_cast<double>(ix);
      const double y = -10.0 + dy * static_cast<double>(iy);
      u(ix * ny + iy) = std::exp(-(x * x + y * y) / 2.0);
      v(ix * ny + iy) = 0.0;
    }

  auto laplacian = [&](const Vector& f, Vector& out) {
    const double ax = 1.0 / (dx * dx), ay = 1.0 / (dy * dy);
    for (long ix = 0; ix < nx; ++ix) {
      const long xm = (ix + nx - 1) % nx, xp = (ix + 1) % nx;
      for (long iy = 0; iy < ny; ++iy) {
        const long ym = (iy + ny - 1) % ny, yp = (iy + 1) % ny;
        const long m = ix * ny + iy;
        out(m) = ax * (f(xm * ny + iy) + f(xp * ny + iy) - 2.0 * f(m)) +
                 ay * (f(ix * ny + ym) + f(ix * ny + yp) - 2.0 * f(m));
      }
    }
  };

  Vector lu(M), lv(M);
  auto rhs = [&](const Vector& uu, const Vector& vv, Vector& fu, Vector& fv) {
    laplacian(uu, lu);
    laplacian(vv, lv);
    for (long m = 0; m < M; ++m) {
      const double a = uu(m), b = vv(m);
      const double a3 = a * a * a, b3 = b * b * b;
      const double a2b = a * a * b, ab2 = a * b * b;
      fu(m) = a - a3 + b3 + 0.1 * lu(m) + a2b - ab2;
      fv(m) = b - a3 - b3 + 0.1 * lv(m) - a2b - ab2;
    }
  };

  Dataset ds;
  ds.grid = spec.grid;
  ds.d2 = 2;
  ds.time.times.resize(static_cast<std::size_t>(J + 1));
  ds.states.resize((J + 1) * M, 2);
  Vector k1u(M), k1v(M), k2u(M), k2v(M), k3u(M), k3v(M), k4u(M), k4v(M), tu(M), tv(M);
  for (long j = 0; j <= J; ++j) {
    ds.time.times[static_cast<std::size_t>(j)] = spec.fine_dt * static_cast<double>(j);
    if (!u.allFinite() || !v.allFinite())
      fail(ErrorKind::SimulationDiverged,
           "reaction-diffusion state non-finite at t=" + std::to_string(spec.fine_dt * j));
    ds.states.block(j * M, 0, M, 1) = u;
    ds.states.block(j * M, 1, M, 1) = v;
    if (j == J) break;
    for (int s = 0; s < store_every; ++s) {
      rhs(u, v, k1u, k1v);
      tu = u + 0.5 * dt * k1u;
      tv = v + 0.5 * dt * k1v;
      rhs(tu, tv, k2u, k2v);
      tu = u + 0.5 * dt * k2u;
      tv = v + 0.5 * dt * k2v;
      rhs(tu, tv, k3u, k3v);
      tu = u + dt * k3u;
      tv = v + dt * k3v;
      rhs(tu, tv, k4u, k4v);
      u += dt / 6.0 * (k1u + 2.0 * k2u + 2.0 * k3u + k4u);
      v += dt / 6.0 * (k1v + 2.0 * k2v + 2.0 * k3v + k4v);
    }
  }
  return ds;
}

}  // namespace detail

inline Dataset simulate(const SystemSpec& spec) {
  spec.grid.validate();
  switch (spec.system) {
    case System::CubicOscillator:
    case System::LinearOscillator:
    case System::FitzHughNagumo:
      return detail::simulate_ode(spec);
    case System::Advection:
      return detail::simulate_advection(spec);
    case System::KuramotoSivashinsky:
      return detail::simulate_ks(spec);
    case System::ReactionDiffusion2D:
      return detail::simulate_reaction_diffusion(spec);
  }
  fail(ErrorKind::InvalidArgument, "unknown system");
}

// ---------------------------------------------------------------------------
// Dataset transforms

inline Dataset subsample(const Dataset& ds, long stride) {
  if (stride < 1) fail(ErrorKind::InvalidArgument, "stride must be >= 1");
  const long J1 = ds.snapshots();
  const long kept = (J1 - 1) / stride + 1;
  if (kept < 2) fail(ErrorKind::EmptyDataset, "subsampling leaves fewer than 2 snapshots");
  const long M = ds.grid.points();
  Dataset out;
  out.grid = ds.grid;
  out.d2 = ds.d2;
  out.noise_sigma = ds.noise_sigma;
  out.seed = ds.seed;
  out.time.times.resize(static_cast<std::size_t>(kept));
  out.states.resize(kept * M, ds.d2);
  for (long j = 0; j < kept; ++j) {
    out.time.times[static_cast<std::size_t>(j)] =
        ds.time.times[static_cast<std::size_t>(j * stride)];
    out.states.middleRows(j * M, M) = ds.states.middleRows(j * stride * M, M);
  }
  return out;
}

inline Dataset add_noise(const Dataset& ds, double sigma, std::uint64_t seed) {
  if (sigma < 0) fail(ErrorKind::InvalidArgument, "sigma must be >= 0");
  Dataset out = ds;
  out.noise_sigma = sigma;
  out.seed = seed;
  if (sigma == 0.0) return out;
  // Per-variable scale: sigma times the population std of the clean signal.
  Vector scale(ds.d2);
  for (int q = 0; q < ds.d2; ++q) {
    const double mean = ds.states.col(q).mean();
    const double var = (ds.states.col(q).array() - mean).square().mean();
    scale(q) = sigma * std::sqrt(var);
  }
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  for (long i = 0; i < out.states.rows(); ++i)
    for (int q = 0; q < ds.d2; ++q) out.states(i, q) += scale(q) * normal(rng);
  return out;
}

// ---------------------------------------------------------------------------
// Model rollout (RK4 on du/dt = dictionary(u) * alpha)

inline Dataset rollout(const DiscoveredModel& model, const Matrix& initial, double t_end,
                       double dt) {
  const Library& lib = model.library;
  lib.validate();
  const long M = lib.grid.points();
  if (initial.rows() != M || initial.cols() != lib.d2)
    fail(ErrorKind::GridMismatch, "initial state does not match the model grid");
  if (!(dt > 0)) fail(ErrorKind::InvalidArgument, "dt must be > 0");
  const long J = static_cast<long>(std::llround(t_end / dt));
  Dataset ds;
  ds.grid = lib.grid;
  ds.d2 = lib.d2;
  ds.time.times.resize(static_cast<std::size_t>(J + 1));
  ds.states.resize((J + 1) * M, lib.d2);
  Matrix u = initial;
  auto f = [&](const Matrix& state, double t) {
    return Matrix(evaluate(lib, state, {t}).values * model.coefficients.values);
  };
  for (long j = 0; j <= J; ++j) {
    const double t = dt * static_cast<double>(j);
    ds.time.times[static_cast<std::size_t>(j)] = t;
    if (!u.allFinite())
      fail(ErrorKind::SimulationDiverged, "rollout diverged at t=" + std::to_string(t));
    ds.states.middleRows(j * M, M) = u;
    if (j == J) break;
    Matrix k1 = f(u, t);
    Matrix k2 = f(u + 0.5 * dt * k1, t + 0.5 * dt);
    Matrix k3 = f(u + 0.5 * dt * k2, t + 0.5 * dt);
    Matrix k4 = f(u + dt * k3, t + dt);
    u += dt / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
  }
  return ds;
}

}  // namespace usindy
