#pragma once

// Term library construction and evaluation: polynomial features computed
// pointwise and spatial-derivative features computed with central
// finite-difference stencils on periodic grids. Evaluation is a pure
// function of (state, time) so unrolled integrators can re-evaluate it on
// predicted intermediate states.

#include <usindy/core.hpp>

#include <utility>

namespace usindy {

struct FeatureBlock {
  Matrix values;  // [rows, |terms|], column i <-> library.terms[i]
};

// ---------------------------------------------------------------------------
// Finite-difference stencils (central, periodic wrap)

inline std::vector<std::pair<int, double>> stencil_weights(int order, double spacing) {
  if (!(spacing > 0)) fail(ErrorKind::InvalidArgument, "spacing must be > 0");
  const double dx = spacing;
  switch (order) {
    case 1:
      return {{-1, -0.5 / dx}, {0, 0.0}, {1, 0.5 / dx}};
    case 2: {
      const double s = dx * dx;
      return {{-1, 1.0 / s}, {0, -2.0 / s}, {1, 1.0 / s}};
    }
    case 3: {
      const double s = dx * dx * dx;
      return {{-2, -0.5 / s}, {-1, 1.0 / s}, {0, 0.0}, {1, -1.0 / s}, {2, 0.5 / s}};
    }
    case 4: {
      const double s = dx * dx * dx * dx;
      return {{-2, 1.0 / s}, {-1, -4.0 / s}, {0, 6.0 / s}, {1, -4.0 / s}, {2, 1.0 / s}};
    }
    default:
      fail(ErrorKind::UnsupportedOrder,
           "stencil order must be in 1..4, got " + std::to_string(order));
  }
}

namespace detail {

inline std::vector<long> axis_strides(const std::vector<long>& dims) {
  std::vector<long> stride(dims.size(), 1);
  for (int a = static_cast<int>(dims.size()) - 2; a >= 0; --a)
    stride[a] = stride[a + 1] * dims[a + 1];
  return stride;
}

// One derivative pass along a single axis of a flattened row-major field.
inline Vector apply_stencil_axis(const SpatialGrid& grid, int axis,
                                 const std::vector<std::pair<int, double>>& weights,
                                 const Vector& field) {
  const auto stride = axis_strides(grid.dims);
  const long n = grid.dims[axis];
  const long s = stride[axis];
  const long M = grid.points();
  Vector out = Vector::Zero(M);
  for (long m = 0; m < M; ++m) {
    const long coord = (m / s) % n;
    double acc = 0.0;
    for (const auto& [off, w] : weights) {
      if (w == 0.0) continue;
      const long nb = (coord + off % n + n) % n;
      acc += w * field(m + (nb - coord) * s);
    }
    out(m) = acc;
  }
  return out;
}

inline Vector apply_derivative(const SpatialGrid& grid, const std::vector<int>& orders,
                               const Vector& field) {
  if (orders.size() != grid.dims.size())
    fail(ErrorKind::GridMismatch, "derivative orders do not match grid dimensionality");
  Vector cur = field;
  for (int a = 0; a < grid.ndim(); ++a) {
    int remaining = orders[a];
    if (remaining > 4 || remaining < 0)
      fail(ErrorKind::UnsupportedOrder, "derivative order per axis must be in 0..4");
    // Mixed derivatives compose first-order passes; pure ones use the direct
    // stencil for the full order.
    bool mixed = false;
    for (int b = 0; b < grid.ndim(); ++b)
      if (b != a && orders[b] > 0) mixed = true;
    if (remaining == 0) continue;
    if (mixed) {
      const auto w1 = stencil_weights(1, grid.spacings[a]);
      for (int r = 0; r < remaining; ++r) cur = apply_stencil_axis(grid, a, w1, cur);
    } else {
      cur = apply_stencil_axis(grid, a, stencil_weights(remaining, grid.spacings[a]), cur);
    }
  }
  return cur;
}

inline void check_finite_state(const Matrix& state) {
  for (long i = 0; i < state.rows(); ++i)
    for (long q = 0; q < state.cols(); ++q)
      if (!std::isfinite(state(i, q)))
        fail(ErrorKind::NonFiniteState,
             "non-finite state at row " + std::to_string(i) + ", variable " +
                 std::to_string(q));
}

inline Vector monomial_column(const Matrix& state, const std::vector<int>& exponents) {
  Vector col = Vector::Ones(state.rows());
  for (std::size_t q = 0; q < exponents.size(); ++q)
    for (int e = 0; e < exponents[q]; ++e)
      col.array() *= state.col(static_cast<long>(q)).array();
  return col;
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Evaluation
//
// state is [rows_t * M, d2] (time-major, then space); times has one entry per
// time row. The result is [rows_t * M, |terms|].

inline FeatureBlock evaluate(const Library& lib, const Matrix& state,
                             const std::vector<double>& times) {
  lib.validate();
  const long M = lib.grid.points();
  if (state.cols() != lib.d2)
    fail(ErrorKind::GridMismatch, "state variable count does not match library d2");
  if (state.rows() % M != 0)
    fail(ErrorKind::GridMismatch, "state rows are not a multiple of grid size");
  const long rows_t = state.rows() / M;
  if (static_cast<long>(times.size()) != rows_t)
    fail(ErrorKind::InvalidArgument, "times length must equal time rows");
  detail::check_finite_state(state);

  FeatureBlock fb;
  fb.values.resize(state.rows(), lib.size());

  // Derivative columns are computed slice by slice so the spatial structure
  // is available; everything else is pointwise.
  for (long i = 0; i < lib.size(); ++i) {
    const TermDescriptor& t = lib.terms[static_cast<std::size_t>(i)];
    switch (t.kind) {
      case TermKind::Constant:
        fb.values.col(i).setOnes();
        break;
      case TermKind::Monomial:
        fb.values.col(i) = detail::monomial_column(state, t.exponents);
        break;
      case TermKind::SpatialDerivative:
      case TermKind::Product: {
        Vector col(state.rows());
        for (long r = 0; r < rows_t; ++r) {
          Vector field = state.block(r * M, t.var_index, M, 1);
          col.segment(r * M, M) = detail::apply_derivative(lib.grid, t.deriv_orders, field);
        }
        if (t.kind == TermKind::Product)
          col.array() *= detail::monomial_column(state, t.exponents).array();
        fb.values.col(i) = col;
        break;
      }
    }
  }
  return fb;
}

// ---------------------------------------------------------------------------
// Standard libraries for the reference systems

namespace detail {

inline std::string monomial_label(const std::vector<int>& exponents,
                                  const std::vector<std::string>& vars) {
  std::string out;
  for (std::size_t q = 0; q < exponents.size(); ++q) {
    if (exponents[q] == 0) continue;
    if (!out.empty()) out += ' ';
    out += vars[q];
    if (exponents[q] > 1) out += '^' + std::to_string(exponents[q]);
  }
  return out.empty() ? "1" : out;
}

inline std::string derivative_label(int var_index, const std::vector<int>& orders,
                                    const std::vector<std::string>& vars) {
  static const char axis_letter[2] = {'x', 'y'};
  std::string out = vars[static_cast<std::size_t>(var_index)] + "_";
  for (std::size_t a = 0; a < orders.size(); ++a)
    for (int r = 0; r < orders[a]; ++r) out += axis_letter[a < 2 ? a : 1];
  return out;
}

inline TermDescriptor constant_term() {
  TermDescriptor t;
  t.kind = TermKind::Constant;
  t.label = "1";
  return t;
}

inline TermDescriptor monomial_term(std::vector<int> exponents,
                                    const std::vector<std::string>& vars) {
  TermDescriptor t;
  t.kind = TermKind::Monomial;
  t.exponents = std::move(exponents);
  t.label = monomial_label(t.exponents, vars);
  return t;
}

inline TermDescriptor derivative_term(int var_index, std::vector<int> orders,
                                      const std::vector<std::string>& vars) {
  TermDescriptor t;
  t.kind = TermKind::SpatialDerivative;
  t.var_index = var_index;
  t.deriv_orders = std::move(orders);
  t.label = derivative_label(t.var_index, t.deriv_orders, vars);
  return t;
}

inline TermDescriptor product_term(std::vector<int> exponents, int var_index,
                                   std::vector<int> orders,
                                   const std::vector<std::string>& vars) {
  TermDescriptor t;
  t.kind = TermKind::Product;
  t.exponents = std::move(exponents);
  t.var_index = var_index;
  t.deriv_orders = std::move(orders);
  t.label = monomial_label(t.exponents, vars) + " " +
            derivative_label(t.var_index, t.deriv_orders, vars);
  return t;
}

}  // namespace detail

inline bool is_ode_system(System s) {
  return s == System::CubicOscillator || s == System::LinearOscillator ||
         s == System::FitzHughNagumo;
}

inline Library standard_library(System system, const SpatialGrid& grid) {
  grid.validate();
  Library lib;
  lib.grid = grid;
  const std::vector<std::string> uv{"u", "v"};
  const std::vector<std::string> u1{"u"};

  if (is_ode_system(system)) {
    if (grid.points() != 1)
      fail(ErrorKind::GridMismatch, "ODE systems use a single dummy spatial point");
    lib.d2 = 2;
    lib.var_names = {"x", "y"};
    lib.terms.push_back(detail::constant_term());
    // All monomials in (u, v) up to total degree 4, degree-major.
    for (int deg = 1; deg <= 4; ++deg)
      for (int j = 0; j <= deg; ++j)
        lib.terms.push_back(detail::monomial_term({deg - j, j}, uv));
  } else if (system == System::Advection || system == System::KuramotoSivashinsky) {
    if (grid.ndim() != 1)
      fail(ErrorKind::GridMismatch, "1D PDE library needs a 1D grid");
    lib.d2 = 1;
    lib.var_names = {"u"};
    if (system == System::Advection) {
      lib.terms.push_back(detail::constant_term());
      lib.terms.push_back(detail::monomial_term({1}, u1));
      lib.terms.push_back(detail::monomial_term({2}, u1));
      lib.terms.push_back(detail::monomial_term({3}, u1));
      lib.terms.push_back(detail::derivative_term(0, {1}, u1));
      lib.terms.push_back(detail::derivative_term(0, {2}, u1));
      lib.terms.push_back(detail::derivative_term(0, {3}, u1));
    } else {
      lib.terms.push_back(detail::constant_term());
      lib.terms.push_back(detail::derivative_term(0, {1}, u1));
      lib.terms.push_back(detail::derivative_term(0, {2}, u1));
      lib.terms.push_back(detail::derivative_term(0, {3}, u1));
      lib.terms.push_back(detail::derivative_term(0, {4}, u1));
      lib.terms.push_back(detail::product_term({1}, 0, {1}, u1));
    }
  } else {  // ReactionDiffusion2D
    if (grid.ndim() != 2)
      fail(ErrorKind::GridMismatch, "2D reaction-diffusion library needs a 2D grid");
    lib.d2 = 2;
    lib.var_names = {"u", "v"};
    lib.terms.push_back(detail::constant_term());
    lib.terms.push_back(detail::monomial_term({1, 0}, uv));
    lib.terms.push_back(detail::monomial_term({0, 1}, uv));
    lib.terms.push_back(detail::monomial_term({2, 0}, uv));
    lib.terms.push_back(detail::monomial_term({0, 2}, uv));
    lib.terms.push_back(detail::monomial_term({3, 0}, uv));
    lib.terms.push_back(detail::monomial_term({0, 3}, uv));
    lib.terms.push_back(detail::derivative_term(0, {1, 0}, uv));
    lib.terms.push_back(detail::derivative_term(1, {1, 0}, uv));
    lib.terms.push_back(detail::derivative_term(0, {0, 1}, uv));
    lib.terms.push_back(detail::derivative_term(1, {0, 1}, uv));
    lib.terms.push_back(detail::derivative_term(0, {2, 0}, uv));
    lib.terms.push_back(detail::derivative_term(1, {2, 0}, uv));
    lib.terms.push_back(detail::derivative_term(0, {0, 2}, uv));
    lib.terms.push_back(detail::derivative_term(1, {0, 2}, uv));
    lib.terms.push_back(detail::derivative_term(0, {1, 1}, uv));
    lib.terms.push_back(detail::derivative_term(1, {1, 1}, uv));
    lib.terms.push_back(detail::monomial_term({1, 1}, uv));
    lib.terms.push_back(detail::monomial_term({2, 1}, uv));
    lib.terms.push_back(detail::monomial_term({1, 2}, uv));
  }
  lib.validate();
  return lib;
}

// Index of the library term carrying a given label.
inline long term_index(const Library& lib, const std::string& label) {
  for (long i = 0; i < lib.size(); ++i)
    if (lib.terms[static_cast<std::size_t>(i)].label == label) return i;
  fail(ErrorKind::InvalidArgument, "no term labelled '" + label + "' in library");
}

}  // namespace usindy
