#pragma once

// K-unrolled explicit integrators. Both integrators advance every training
// pair through K sub-steps of size h_j/K under the current coefficients and
// accumulate the mean dictionary seen along the way, so that
//   prediction = U_prev + h_j * effective_dictionary * alpha
// holds to machine precision. Divergence (non-finite intermediates) is
// reported as a value on the result, never as an exception.

#include <usindy/dictionary.hpp>

namespace usindy {

struct DivergenceDiag {
  int k = 0;      // sub-step index (K means the post-loop finiteness check)
  int stage = 0;  // 1 = sub-step state, 2..4 = RK4 stage states, 0 = dictionary
  long row = 0;   // flattened (pair, space) row of the first bad entry
  int var = 0;    // state variable (or term column when stage = 0)
};

struct UnrollResult {
  Matrix prediction;                  // [P*M, d2]
  FeatureBlock effective_dictionary;  // [P*M, |terms|]
  std::optional<DivergenceDiag> diverged;
};

namespace detail {

inline std::optional<std::pair<long, int>> first_nonfinite(const Matrix& m) {
  for (long i = 0; i < m.rows(); ++i)
    for (long j = 0; j < m.cols(); ++j)
      if (!std::isfinite(m(i, j))) return std::make_pair(i, static_cast<int>(j));
  return std::nullopt;
}

struct UnrollShape {
  long P = 0;
  long M = 0;
  Vector hk;  // per-row h_j / K
};

inline UnrollShape unroll_shape(const Matrix& u_prev, const std::vector<double>& times,
                                const std::vector<double>& steps, const Library& lib,
                                const CoefficientMatrix& alpha, int K) {
  lib.validate();
  if (K < 1) fail(ErrorKind::InvalidArgument, "K must be >= 1");
  if (u_prev.cols() != lib.d2)
    fail(ErrorKind::GridMismatch, "state variable count does not match library d2");
  const long M = lib.grid.points();
  if (u_prev.rows() % M != 0)
    fail(ErrorKind::GridMismatch, "state rows are not a multiple of grid size");
  const long P = u_prev.rows() / M;
  if (P < 1) fail(ErrorKind::EmptyDataset, "no training rows");
  if (static_cast<long>(times.size()) != P || static_cast<long>(steps.size()) != P)
    fail(ErrorKind::InvalidArgument, "times/steps length must equal pair count");
  if (alpha.values.rows() != lib.size() || alpha.values.cols() != lib.d2)
    fail(ErrorKind::LibraryMismatch, "coefficient shape does not match library");
  UnrollShape s;
  s.P = P;
  s.M = M;
  s.hk.resize(P * M);
  for (long p = 0; p < P; ++p)
    s.hk.segment(p * M, M).setConstant(steps[p] / static_cast<double>(K));
  return s;
}

inline Matrix row_scaled(const Vector& scale, const Matrix& m) {
  return (m.array().colwise() * scale.array()).matrix();
}

}  // namespace detail

inline UnrollResult unrolled_euler(const Matrix& u_prev, const std::vector<double>& times,
                                   const std::vector<double>& steps, const Library& lib,
                                   const CoefficientMatrix& alpha, int K) {
  const auto shape = detail::unroll_shape(u_prev, times, steps, lib, alpha, K);
  UnrollResult res;
  Matrix u = u_prev;
  Matrix theta_acc = Matrix::Zero(u_prev.rows(), lib.size());
  std::vector<double> tk(static_cast<std::size_t>(shape.P));
  for (int k = 0; k < K; ++k) {
    if (auto bad = detail::first_nonfinite(u)) {
      res.diverged = DivergenceDiag{k, 1, bad->first, bad->second};
      res.prediction = std::move(u);
      res.effective_dictionary.values = std::move(theta_acc);
      return res;
    }
    for (long p = 0; p < shape.P; ++p)
      tk[static_cast<std::size_t>(p)] =
          times[static_cast<std::size_t>(p)] +
          static_cast<double>(k) * steps[static_cast<std::size_t>(p)] / K;
    FeatureBlock th = evaluate(lib, u, tk);
    theta_acc += th.values;
    u += detail::row_scaled(shape.hk, th.values * alpha.values);
  }
  if (auto bad = detail::first_nonfinite(u))
    res.diverged = DivergenceDiag{K, 1, bad->first, bad->second};
  else if (auto badt = detail::first_nonfinite(theta_acc))
    res.diverged = DivergenceDiag{K, 0, badt->first, badt->second};
  theta_acc /= static_cast<double>(K);
  res.prediction = std::move(u);
  res.effective_dictionary.values = std::move(theta_acc);
  return res;
}

inline UnrollResult unrolled_rk4(const Matrix& u_prev, const std::vector<double>& times,
                                 const std::vector<double>& steps, const Library& lib,
                                 const CoefficientMatrix& alpha, int K) {
  const auto shape = detail::unroll_shape(u_prev, times, steps, lib, alpha, K);
  UnrollResult res;
  Matrix u = u_prev;
  Matrix theta_acc = Matrix::Zero(u_prev.rows(), lib.size());
  const Vector hk_half = 0.5 * shape.hk;
  std::vector<double> t0(static_cast<std::size_t>(shape.P));
  std::vector<double> t_mid(t0), t1(t0);

  auto bail = [&](int k, int stage, long row, int var) {
    res.diverged = DivergenceDiag{k, stage, row, var};
    res.prediction = u;
    res.effective_dictionary.values = theta_acc;
    return res;
  };

  for (int k = 0; k < K; ++k) {
    if (auto bad = detail::first_nonfinite(u)) return bail(k, 1, bad->first, bad->second);
    for (long p = 0; p < shape.P; ++p) {
      const double sub = steps[static_cast<std::size_t>(p)] / K;
      t0[static_cast<std::size_t>(p)] = times[static_cast<std::size_t>(p)] + k * sub;
      t_mid[static_cast<std::size_t>(p)] = times[static_cast<std::size_t>(p)] + (k + 0.5) * sub;
      t1[static_cast<std::size_t>(p)] = times[static_cast<std::size_t>(p)] + (k + 1.0) * sub;
    }
    FeatureBlock th1 = evaluate(lib, u, t0);
    Matrix y = u + detail::row_scaled(hk_half, th1.values * alpha.values);
    if (auto bad = detail::first_nonfinite(y)) return bail(k, 2, bad->first, bad->second);
    FeatureBlock th2 = evaluate(lib, y, t_mid);
    y = u + detail::row_scaled(hk_half, th2.values * alpha.values);
    if (auto bad = detail::first_nonfinite(y)) return bail(k, 3, bad->first, bad->second);
    FeatureBlock th3 = evaluate(lib, y, t_mid);
    y = u + detail::row_scaled(shape.hk, th3.values * alpha.values);
    if (auto bad = detail::first_nonfinite(y)) return bail(k, 4, bad->first, bad->second);
    FeatureBlock th4 = evaluate(lib, y, t1);
    Matrix combined =
        (th1.values + 2.0 * th2.values + 2.0 * th3.values + th4.values) / 6.0;
    theta_acc += combined;
    u += detail::row_scaled(shape.hk, combined * alpha.values);
  }
  if (auto bad = detail::first_nonfinite(u))
    res.diverged = DivergenceDiag{K, 1, bad->first, bad->second};
  else if (auto badt = detail::first_nonfinite(theta_acc))
    res.diverged = DivergenceDiag{K, 0, badt->first, badt->second};
  theta_acc /= static_cast<double>(K);
  res.prediction = std::move(u);
  res.effective_dictionary.values = std::move(theta_acc);
  return res;
}

inline UnrollResult unroll(Method method, const Matrix& u_prev,
                           const std::vector<double>& times,
                           const std::vector<double>& steps, const Library& lib,
                           const CoefficientMatrix& alpha, int K) {
  return method == Method::Euler ? unrolled_euler(u_prev, times, steps, lib, alpha, K)
                                 : unrolled_rk4(u_prev, times, steps, lib, alpha, K);
}

// ---------------------------------------------------------------------------
// Truncation probe on the scalar test problem u' = u, u(0) = 1.

struct ProbePoint {
  int K = 1;
  double one_step_error = 0.0;
};

inline std::vector<ProbePoint> truncation_probe(Method method, double h,
                                                const std::vector<int>& K_list) {
  Library lib;
  lib.d2 = 1;
  lib.grid.dims = {1};
  lib.grid.spacings = {1.0};
  lib.var_names = {"u"};
  TermDescriptor t;
  t.kind = TermKind::Monomial;
  t.exponents = {1};
  t.label = "u";
  lib.terms = {t};
  CoefficientMatrix alpha = CoefficientMatrix::zeros(1, 1);
  alpha.values(0, 0) = 1.0;
  Matrix u0(1, 1);
  u0(0, 0) = 1.0;
  const double exact = std::exp(h);
  std::vector<ProbePoint> out;
  for (int K : K_list) {
    UnrollResult r = unroll(method, u0, {0.0}, {h}, lib, alpha, K);
    out.push_back({K, std::abs(r.prediction(0, 0) - exact)});
  }
  return out;
}

}  // namespace usindy
