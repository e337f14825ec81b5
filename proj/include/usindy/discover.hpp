#pragma once

// Discovery solvers. The closed-form path iterates: unroll under the current
// coefficients to get the effective dictionary, ridge-solve the active
// columns against forward-difference targets, then hard-threshold and keep
// deactivated terms out of every later solve. The SGD path optimizes the
// unrolled prediction loss by plain mini-batch gradient descent with exact
// forward-mode sensitivities (monomial libraries only).

#include <usindy/unroll.hpp>

#include <random>

namespace usindy {

// Thrown when the unrolled integrator hits a non-finite intermediate during
// discovery; carries the diagnostic and the last finite coefficients so the
// caller can fall back (e.g. to the SGD solver).
struct UnrollDivergence : Error {
  UnrollDivergence(const DivergenceDiag& d, CoefficientMatrix alpha, int iter)
      : Error(ErrorKind::DivergedDuringUnroll,
              "unrolled integrator produced a non-finite value at iteration " +
                  std::to_string(iter) + ", sub-step " + std::to_string(d.k) +
                  ", stage " + std::to_string(d.stage)),
        diag(d),
        last_alpha(std::move(alpha)),
        iteration(iter) {}
  DivergenceDiag diag;
  CoefficientMatrix last_alpha;
  int iteration;
};

// ---------------------------------------------------------------------------
// Ridge regression primitive: (F^T F + lambda I)^-1 F^T Y via LDLT.

inline Matrix ridge_solve(const Matrix& features, const Matrix& targets, double lambda) {
  if (features.rows() < 1 || features.cols() < 1)
    fail(ErrorKind::EmptyDataset, "ridge solve needs at least one row and column");
  if (features.rows() != targets.rows())
    fail(ErrorKind::InvalidArgument, "feature/target row mismatch");
  if (lambda < 0) fail(ErrorKind::InvalidArgument, "lambda must be >= 0");
  if (!features.allFinite() || !targets.allFinite())
    fail(ErrorKind::NonFiniteFeatures, "ridge solve given non-finite input");
  Matrix gram = features.transpose() * features;
  gram.diagonal().array() += lambda;
  Eigen::LDLT<Matrix> ldlt(gram);
  const Vector d = ldlt.vectorD().cwiseAbs();
  const double dmax = d.maxCoeff();
  if (ldlt.info() != Eigen::Success || !(dmax > 0.0) || d.minCoeff() < 1e-12 * dmax)
    fail(ErrorKind::SingularSystem, "rank-deficient normal equations (lambda too small)");
  return ldlt.solve(features.transpose() * targets);
}

// ---------------------------------------------------------------------------
// Closed-form iterative discovery

namespace detail {

inline void check_discovery_inputs(const Dataset& ds, const Library& lib,
                                   const DiscoveryConfig& config) {
  config.validate();
  ds.validate();
  lib.validate();
  if (!lib.grid.same_shape(ds.grid))
    fail(ErrorKind::GridMismatch, "library grid does not match dataset grid");
  if (lib.d2 != ds.d2)
    fail(ErrorKind::LibraryMismatch, "library variable count does not match dataset");
}

inline void check_init_shape(const CoefficientMatrix& alpha, const Library& lib) {
  if (alpha.values.rows() != lib.size() || alpha.values.cols() != lib.d2 ||
      alpha.active.rows() != lib.size() || alpha.active.cols() != lib.d2)
    fail(ErrorKind::LibraryMismatch, "initial coefficients do not match library shape");
}

inline void hard_threshold(CoefficientMatrix& alpha, double alpha_th) {
  for (long i = 0; i < alpha.values.rows(); ++i)
    for (long q = 0; q < alpha.values.cols(); ++q)
      if (alpha.active(i, q) && std::abs(alpha.values(i, q)) < alpha_th) {
        alpha.values(i, q) = 0.0;
        alpha.active(i, q) = false;
      }
}

}  // namespace detail

inline DiscoveredModel discover_closed_form(
    const Dataset& ds, const Library& lib, const DiscoveryConfig& config,
    const std::optional<CoefficientMatrix>& init = std::nullopt) {
  detail::check_discovery_inputs(ds, lib, config);
  if (config.solver != Solver::ClosedForm)
    fail(ErrorKind::InvalidArgument, "config.solver must be closed_form");
  const TrainingPairs tp = make_training_pairs(ds, config.pair_stride);
  const long N = tp.u_prev.rows();
  const long T = lib.size();
  const int d2 = lib.d2;
  const double sqrt_n = std::sqrt(static_cast<double>(N));

  // Forward-difference targets (U_next - U_prev) / h, elementwise per row.
  const Matrix udot =
      ((tp.u_next - tp.u_prev).array().colwise() / tp.h_rows.array()).matrix();

  CoefficientMatrix alpha = init ? *init : CoefficientMatrix::zeros(T, d2);
  if (init) {
    detail::check_init_shape(alpha, lib);
    alpha.apply_mask();
  }

  DiscoveredModel model;
  model.library = lib;
  model.config = config;
  model.dataset_fingerprint = fingerprint(ds);

  for (int iter = 0; iter < config.max_iters; ++iter) {
    UnrollResult unr =
        unroll(config.method, tp.u_prev, tp.times, tp.steps, lib, alpha, config.K);
    if (unr.diverged) throw UnrollDivergence(*unr.diverged, alpha, iter);
    const Matrix& theta = unr.effective_dictionary.values;

    CoefficientMatrix next = alpha;
    for (int q = 0; q < d2; ++q) {
      std::vector<long> act;
      for (long i = 0; i < T; ++i)
        if (alpha.active(i, q)) act.push_back(i);
      if (act.empty()) continue;
      // Reduced system over active columns, scaled to unit RMS per column so
      // the shared ridge weight penalizes every term comparably.
      Matrix f(N, static_cast<long>(act.size()));
      Vector rms(static_cast<long>(act.size()));
      for (std::size_t c = 0; c < act.size(); ++c) {
        f.col(static_cast<long>(c)) = theta.col(act[c]);
        double r = f.col(static_cast<long>(c)).norm() / sqrt_n;
        rms(static_cast<long>(c)) = r == 0.0 ? 1.0 : r;
        f.col(static_cast<long>(c)) /= rms(static_cast<long>(c));
      }
      Matrix w = ridge_solve(f, udot.col(q), config.lambda);
      for (std::size_t c = 0; c < act.size(); ++c)
        next.values(act[c], q) = w(static_cast<long>(c), 0) / rms(static_cast<long>(c));
    }
    detail::hard_threshold(next, config.alpha_th);

    const double change = (next.values - alpha.values).norm();
    const Matrix pred =
        tp.u_prev + detail::row_scaled(tp.h_rows, theta * next.values);
    const double loss =
        (tp.u_next - pred).squaredNorm() / static_cast<double>(N * d2);
    model.trace.push_back(
        {iter, loss, change, next.active_count(), false});
    alpha = next;

    if (static_cast<int>(model.trace.size()) >= config.convergence_window) {
      double mean = 0.0;
      for (int w = 0; w < config.convergence_window; ++w)
        mean += model.trace[model.trace.size() - 1 - static_cast<std::size_t>(w)]
                    .alpha_change;
      mean /= static_cast<double>(config.convergence_window);
      if (mean < config.convergence_tol) break;
    }
  }
  model.coefficients = alpha;
  return model;
}

// ---------------------------------------------------------------------------
// SGD discovery (forward-mode sensitivities, monomial libraries only)

namespace detail {

inline void require_monomial_library(const Library& lib) {
  for (const auto& t : lib.terms)
    if (t.kind != TermKind::Constant && t.kind != TermKind::Monomial)
      fail(ErrorKind::UnsupportedLibraryForSGD,
           "SGD solver supports constant/monomial terms only (term '" + t.label + "')");
}

// Monomial values V [B,T] and per-variable partials G[v] [B,T].
inline void monomial_features(const Library& lib, const Matrix& state, Matrix& v,
                              std::vector<Matrix>& g) {
  const long B = state.rows();
  const long T = lib.size();
  const int d2 = lib.d2;
  v.resize(B, T);
  g.assign(static_cast<std::size_t>(d2), Matrix::Zero(B, T));
  for (long i = 0; i < T; ++i) {
    const TermDescriptor& t = lib.terms[static_cast<std::size_t>(i)];
    if (t.kind == TermKind::Constant) {
      v.col(i).setOnes();
      continue;
    }
    for (long b = 0; b < B; ++b) {
      double val = 1.0;
      for (int q = 0; q < d2; ++q)
        for (int e = 0; e < t.exponents[static_cast<std::size_t>(q)]; ++e)
          val *= state(b, q);
      v(b, i) = val;
      for (int q = 0; q < d2; ++q) {
        const int eq = t.exponents[static_cast<std::size_t>(q)];
        if (eq == 0) continue;
        double dval = static_cast<double>(eq);
        for (int q2 = 0; q2 < d2; ++q2) {
          const int reps = q2 == q ? t.exponents[static_cast<std::size_t>(q2)] - 1
                                   : t.exponents[static_cast<std::size_t>(q2)];
          for (int e = 0; e < reps; ++e) dval *= state(b, q2);
        }
        g[static_cast<std::size_t>(q)](b, i) = dval;
      }
    }
  }
}

struct SgdEval {
  double loss = 0.0;
  Matrix grad;  // [T, d2]
  std::optional<DivergenceDiag> diverged;
};

// Unrolled prediction loss and its exact gradient in alpha on a row batch.
inline SgdEval sgd_loss_grad(const Matrix& u_prev, const Matrix& u_next,
                             const Vector& h_rows, const Library& lib,
                             const CoefficientMatrix& alpha, Method method, int K,
                             double lambda) {
  const long B = u_prev.rows();
  const long T = lib.size();
  const int d2 = lib.d2;
  SgdEval out;
  out.grad = Matrix::Zero(T, d2);

  std::vector<std::pair<long, int>> dirs;
  for (long p = 0; p < T; ++p)
    for (int q = 0; q < d2; ++q)
      if (alpha.active(p, q)) dirs.emplace_back(p, q);

  Matrix u = u_prev;
  std::vector<Matrix> sens(dirs.size(), Matrix::Zero(B, d2));
  const Vector hk = h_rows / static_cast<double>(K);
  Matrix v;
  std::vector<Matrix> g;

  auto stage_sens = [&](const Matrix& vv, const std::vector<Matrix>& gg,
                        const Matrix& s, long p, int q) {
    Matrix js = Matrix::Zero(B, T);
    for (int vvar = 0; vvar < d2; ++vvar)
      js += (gg[static_cast<std::size_t>(vvar)].array().colwise() *
             s.col(vvar).array())
                .matrix();
    Matrix sf = js * alpha.values;
    sf.col(q) += vv.col(p);
    return sf;
  };

  for (int k = 0; k < K; ++k) {
    if (auto bad = first_nonfinite(u)) {
      out.diverged = DivergenceDiag{k, 1, bad->first, bad->second};
      return out;
    }
    if (method == Method::Euler) {
      monomial_features(lib, u, v, g);
      for (std::size_t di = 0; di < dirs.size(); ++di)
        sens[di] += row_scaled(hk, stage_sens(v, g, sens[di], dirs[di].first,
                                              dirs[di].second));
      u += row_scaled(hk, v * alpha.values);
    } else {
      const Vector hk_half = 0.5 * hk;
      Matrix v1, v2, v3, v4;
      std::vector<Matrix> g1, g2, g3, g4;
      monomial_features(lib, u, v1, g1);
      Matrix f1 = v1 * alpha.values;
      Matrix y2 = u + row_scaled(hk_half, f1);
      if (auto bad = first_nonfinite(y2)) {
        out.diverged = DivergenceDiag{k, 2, bad->first, bad->second};
        return out;
      }
      monomial_features(lib, y2, v2, g2);
      Matrix f2 = v2 * alpha.values;
      Matrix y3 = u + row_scaled(hk_half, f2);
      if (auto bad = first_nonfinite(y3)) {
        out.diverged = DivergenceDiag{k, 3, bad->first, bad->second};
        return out;
      }
      monomial_features(lib, y3, v3, g3);
      Matrix f3 = v3 * alpha.values;
      Matrix y4 = u + row_scaled(hk, f3);
      if (auto bad = first_nonfinite(y4)) {
        out.diverged = DivergenceDiag{k, 4, bad->first, bad->second};
        return out;
      }
      monomial_features(lib, y4, v4, g4);
      Matrix f4 = v4 * alpha.values;
      for (std::size_t di = 0; di < dirs.size(); ++di) {
        const long p = dirs[di].first;
        const int q = dirs[di].second;
        Matrix sf1 = stage_sens(v1, g1, sens[di], p, q);
        Matrix sy = sens[di] + row_scaled(hk_half, sf1);
        Matrix sf2 = stage_sens(v2, g2, sy, p, q);
        sy = sens[di] + row_scaled(hk_half, sf2);
        Matrix sf3 = stage_sens(v3, g3, sy, p, q);
        sy = sens[di] + row_scaled(hk, sf3);
        Matrix sf4 = stage_sens(v4, g4, sy, p, q);
        sens[di] += row_scaled(hk, (sf1 + 2.0 * sf2 + 2.0 * sf3 + sf4) / 6.0);
      }
      u += row_scaled(hk, (f1 + 2.0 * f2 + 2.0 * f3 + f4) / 6.0);
    }
  }
  if (auto bad = first_nonfinite(u)) {
    out.diverged = DivergenceDiag{K, 1, bad->first, bad->second};
    return out;
  }

  const Matrix r = u - u_next;
  out.loss = r.squaredNorm() / static_cast<double>(B) +
             lambda * alpha.values.squaredNorm();
  for (std::size_t di = 0; di < dirs.size(); ++di) {
    const long p = dirs[di].first;
    const int q = dirs[di].second;
    out.grad(p, q) = 2.0 * (r.array() * sens[di].array()).sum() /
                         static_cast<double>(B) +
                     2.0 * lambda * alpha.values(p, q);
  }
  return out;
}

}  // namespace detail

inline DiscoveredModel discover_sgd(
    const Dataset& ds, const Library& lib, const DiscoveryConfig& config,
    const std::optional<CoefficientMatrix>& init = std::nullopt) {
  detail::check_discovery_inputs(ds, lib, config);
  if (config.solver != Solver::SGD)
    fail(ErrorKind::InvalidArgument, "config.solver must be sgd");
  detail::require_monomial_library(lib);
  const SGDConfig sgdc = config.sgd.value_or(SGDConfig{});
  sgdc.validate();
  const TrainingPairs tp = make_training_pairs(ds, config.pair_stride);
  const long N = tp.u_prev.rows();
  const long T = lib.size();
  const int d2 = lib.d2;
  const long B = std::min<long>(sgdc.batch_size, N);

  CoefficientMatrix alpha = init ? *init : CoefficientMatrix::zeros(T, d2);
  if (init) {
    detail::check_init_shape(alpha, lib);
    alpha.apply_mask();
  }

  DiscoveredModel model;
  model.library = lib;
  model.config = config;
  model.dataset_fingerprint = fingerprint(ds);

  std::mt19937_64 rng(config.seed);
  double eta = sgdc.learning_rate;
  Matrix bu(B, d2), bn(B, d2);
  Vector bh(B);
  for (int round = 0; round < sgdc.threshold_rounds; ++round) {
    const Matrix round_start = alpha.values;
    double last_loss = 0.0;
    for (int epoch = 0; epoch < sgdc.epochs_per_threshold; ++epoch) {
      for (long b = 0; b < B; ++b) {
        const long idx = static_cast<long>(rng() % static_cast<std::uint64_t>(N));
        bu.row(b) = tp.u_prev.row(idx);
        bn.row(b) = tp.u_next.row(idx);
        bh(b) = tp.h_rows(idx);
      }
      detail::SgdEval ev = detail::sgd_loss_grad(bu, bn, bh, lib, alpha,
                                                 config.method, config.K,
                                                 config.lambda);
      if (ev.diverged) throw UnrollDivergence(*ev.diverged, alpha, round);
      alpha.values -= eta * ev.grad;
      alpha.apply_mask();
      last_loss = ev.loss;
    }
    detail::hard_threshold(alpha, config.alpha_th);
    eta /= sgdc.lr_decay;
    model.trace.push_back({round, last_loss, (alpha.values - round_start).norm(),
                           alpha.active_count(), false});
  }
  model.coefficients = alpha;
  return model;
}

inline DiscoveredModel discover(const Dataset& ds, const Library& lib,
                                const DiscoveryConfig& config) {
  return config.solver == Solver::ClosedForm ? discover_closed_form(ds, lib, config)
                                             : discover_sgd(ds, lib, config);
}

// ---------------------------------------------------------------------------
// Equation formatting

inline std::vector<std::string> pretty_print(const DiscoveredModel& model) {
  const Library& lib = model.library;
  std::vector<std::string> vars = lib.var_names;
  if (static_cast<int>(vars.size()) != lib.d2) {
    vars = {"u", "v"};
    vars.resize(static_cast<std::size_t>(lib.d2), "w");
  }
  std::vector<std::string> out;
  char buf[64];
  for (int q = 0; q < lib.d2; ++q) {
    std::string line = "d" + vars[static_cast<std::size_t>(q)] + "/dt = ";
    bool first = true;
    for (long i = 0; i < lib.size(); ++i) {
      if (!model.coefficients.active(i, q)) continue;
      const double c = model.coefficients.values(i, q);
      if (c == 0.0) continue;
      const TermDescriptor& t = lib.terms[static_cast<std::size_t>(i)];
      std::string label;
      switch (t.kind) {
        case TermKind::Constant:
          break;  // bare coefficient
        case TermKind::Monomial:
          label = detail::monomial_label(t.exponents, vars);
          break;
        case TermKind::SpatialDerivative:
          label = detail::derivative_label(t.var_index, t.deriv_orders, vars);
          break;
        case TermKind::Product:
          label = detail::monomial_label(t.exponents, vars) + " " +
                  detail::derivative_label(t.var_index, t.deriv_orders, vars);
          break;
      }
      if (first) {
        std::snprintf(buf, sizeof buf, "%.3f", c);
        first = false;
      } else {
        std::snprintf(buf, sizeof buf, " %c %.3f", c < 0 ? '-' : '+', std::abs(c));
      }
      line += buf;
      if (!label.empty()) line += " " + label;
    }
    if (first) line += "0";
    out.push_back(line);
  }
  return out;
}

}  // namespace usindy
