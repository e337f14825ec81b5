#include <catch2/catch_amalgamated.hpp>

#include <usindy/dictionary.hpp>

#include <numbers>
#include <random>

using namespace usindy;

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

SpatialGrid grid_1d(long m, double length = 1.0) {
  SpatialGrid g;
  g.dims = {m};
  g.spacings = {length / static_cast<double>(m)};
  return g;
}

SpatialGrid grid_ode() {
  SpatialGrid g;
  g.dims = {1};
  g.spacings = {1.0};
  return g;
}

SpatialGrid grid_2d(long nx, long ny, double lx, double ly) {
  SpatialGrid g;
  g.dims = {nx, ny};
  g.spacings = {lx / static_cast<double>(nx), ly / static_cast<double>(ny)};
  return g;
}

std::vector<std::string> labels_of(const Library& lib) {
  std::vector<std::string> out;
  for (const auto& t : lib.terms) out.push_back(t.label);
  return out;
}

Matrix random_state(long rows, int d2, unsigned seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> dist(-1.5, 1.5);
  Matrix m(rows, d2);
  for (long i = 0; i < rows; ++i)
    for (int q = 0; q < d2; ++q) m(i, q) = dist(rng);
  return m;
}

}  // namespace

TEST_CASE("oscillator library is the 15 monomials up to degree 4", "[dictionary]") {
  Library lib = standard_library(System::CubicOscillator, grid_ode());
  const std::vector<std::string> expected{
      "1",   "u",     "v",     "u^2",   "u v",   "v^2",   "u^3", "u^2 v",
      "u v^2", "v^3", "u^4",   "u^3 v", "u^2 v^2", "u v^3", "v^4"};
  CHECK(labels_of(lib) == expected);
  CHECK(lib.d2 == 2);
  CHECK(lib.var_names == std::vector<std::string>{"x", "y"});
  CHECK(lib.terms[6].exponents == std::vector<int>{3, 0});
  CHECK(lib.terms[7].exponents == std::vector<int>{2, 1});
  CHECK(standard_library(System::LinearOscillator, grid_ode()).same_terms(lib));
  CHECK(standard_library(System::FitzHughNagumo, grid_ode()).same_terms(lib));
}

TEST_CASE("advection and KS libraries match their candidate sets", "[dictionary]") {
  Library adv = standard_library(System::Advection, grid_1d(128));
  CHECK(labels_of(adv) ==
        std::vector<std::string>{"1", "u", "u^2", "u^3", "u_x", "u_xx", "u_xxx"});
  CHECK(adv.d2 == 1);

  Library ks = standard_library(System::KuramotoSivashinsky, grid_1d(100, 64.0));
  CHECK(labels_of(ks) ==
        std::vector<std::string>{"1", "u_x", "u_xx", "u_xxx", "u_xxxx", "u u_x"});
  const auto& prod = ks.terms[5];
  CHECK(prod.kind == TermKind::Product);
  CHECK(prod.exponents == std::vector<int>{1});
  CHECK(prod.deriv_orders == std::vector<int>{1});
}

TEST_CASE("reaction-diffusion library lists all 20 terms in order", "[dictionary]") {
  Library rd = standard_library(System::ReactionDiffusion2D, grid_2d(64, 64, 20, 20));
  const std::vector<std::string> expected{
      "1",    "u",    "v",    "u^2",  "v^2",  "u^3",  "v^3",  "u_x",  "v_x",  "u_y",
      "v_y",  "u_xx", "v_xx", "u_yy", "v_yy", "u_xy", "v_xy", "u v",  "u^2 v", "u v^2"};
  CHECK(labels_of(rd) == expected);
  CHECK(rd.d2 == 2);
  CHECK(rd.terms[15].deriv_orders == std::vector<int>{1, 1});
  CHECK(rd.terms[13].deriv_orders == std::vector<int>{0, 2});
  CHECK(rd.terms[13].var_index == 0);
  CHECK(rd.terms[14].var_index == 1);
}

TEST_CASE("library construction rejects mismatched grids", "[dictionary]") {
  try {
    standard_library(System::Advection, grid_2d(8, 8, 1, 1));
    FAIL("expected GridMismatch");
  } catch (const Error& e) {
    CHECK(e.kind == ErrorKind::GridMismatch);
  }
  CHECK_THROWS_AS(standard_library(System::ReactionDiffusion2D, grid_1d(64)), Error);
  CHECK_THROWS_AS(standard_library(System::CubicOscillator, grid_1d(4)), Error);
}

TEST_CASE("stencil weights reproduce the textbook central differences", "[dictionary]") {
  auto w2 = stencil_weights(2, 1.0);
  REQUIRE(w2.size() == 3);
  CHECK(w2[0] == std::pair<int, double>{-1, 1.0});
  CHECK(w2[1] == std::pair<int, double>{0, -2.0});
  CHECK(w2[2] == std::pair<int, double>{1, 1.0});

  auto w1 = stencil_weights(1, 0.5);
  CHECK(w1[0].second == Catch::Approx(-1.0));
  CHECK(w1[2].second == Catch::Approx(1.0));

  auto w3 = stencil_weights(3, 1.0);
  REQUIRE(w3.size() == 5);
  CHECK(w3[0].second == -0.5);
  CHECK(w3[1].second == 1.0);
  CHECK(w3[3].second == -1.0);
  CHECK(w3[4].second == 0.5);

  auto w4 = stencil_weights(4, 1.0);
  CHECK(w4[2].second == 6.0);

  try {
    stencil_weights(5, 1.0);
    FAIL("expected UnsupportedOrder");
  } catch (const Error& e) {
    CHECK(e.kind == ErrorKind::UnsupportedOrder);
  }
  CHECK_THROWS_AS(stencil_weights(0, 1.0), Error);
}

TEST_CASE("first derivative of a periodic ramp is exact away from the seam",
          "[dictionary]") {
  const long m = 32;
  SpatialGrid g = grid_1d(m, 1.0);
  Vector ramp(m);
  for (long i = 0; i < m; ++i) ramp(i) = 3.0 * static_cast<double>(i) * g.spacings[0];
  Vector d = usindy::detail::apply_derivative(g, {1}, ramp);
  for (long i = 1; i + 1 < m; ++i) CHECK(d(i) == Catch::Approx(3.0).margin(1e-12));
}

TEST_CASE("fourth-order stencil is exact on a quartic interior patch", "[dictionary]") {
  // x^4/24 has fourth derivative exactly 1; a periodic domain only corrupts
  // points near the wrap seam, so probe the centre of a wide grid.
  const long m = 64;
  const double dx = 0.1;
  SpatialGrid g;
  g.dims = {m};
  g.spacings = {dx};
  Vector f(m);
  for (long i = 0; i < m; ++i) {
    double x = (static_cast<double>(i) - 32.0) * dx;
    f(i) = x * x * x * x / 24.0;
  }
  Vector d4 = usindy::detail::apply_derivative(g, {4}, f);
  for (long i = 8; i < 56; ++i) CHECK(d4(i) == Catch::Approx(1.0).margin(1e-9));
}

TEST_CASE("derivative columns track analytic derivatives of a sine wave",
          "[dictionary]") {
  const long m = 128;
  SpatialGrid g = grid_1d(m, 1.0);
  Library lib = standard_library(System::Advection, grid_1d(m));
  Matrix state(m, 1);
  for (long i = 0; i < m; ++i)
    state(i, 0) = std::sin(kTwoPi * static_cast<double>(i) / static_cast<double>(m));
  FeatureBlock fb = evaluate(lib, state, {0.0});

  const long ux = term_index(lib, "u_x");
  const long uxx = term_index(lib, "u_xx");
  const double dx = g.spacings[0];
  double max_err1 = 0.0, max_err2 = 0.0;
  for (long i = 0; i < m; ++i) {
    double x = static_cast<double>(i) / static_cast<double>(m);
    max_err1 = std::max(max_err1, std::abs(fb.values(i, ux) - kTwoPi * std::cos(kTwoPi * x)));
    max_err2 = std::max(max_err2,
                        std::abs(fb.values(i, uxx) + kTwoPi * kTwoPi * std::sin(kTwoPi * x)));
  }
  // Central differences on sin carry a (2pi)^3 dx^2 / 6 leading error term.
  const double bound1 = std::pow(kTwoPi, 3) * dx * dx / 6.0 * 1.05;
  const double bound2 = std::pow(kTwoPi, 4) * dx * dx / 12.0 * 1.05;
  CHECK(max_err1 < bound1);
  CHECK(max_err2 < bound2);

  // Halving dx quarters the error.
  Matrix state2(2 * m, 1);
  for (long i = 0; i < 2 * m; ++i)
    state2(i, 0) = std::sin(kTwoPi * static_cast<double>(i) / static_cast<double>(2 * m));
  Library lib2 = standard_library(System::Advection, grid_1d(2 * m));
  FeatureBlock fb2 = evaluate(lib2, state2, {0.0});
  double max_err1b = 0.0;
  for (long i = 0; i < 2 * m; ++i) {
    double x = static_cast<double>(i) / static_cast<double>(2 * m);
    max_err1b =
        std::max(max_err1b, std::abs(fb2.values(i, ux) - kTwoPi * std::cos(kTwoPi * x)));
  }
  CHECK(max_err1b == Catch::Approx(max_err1 / 4.0).epsilon(0.05));
}

TEST_CASE("third and fourth derivative columns match analytic sine derivatives",
          "[dictionary]") {
  const long m = 100;
  const double L = 64.0;
  Library lib = standard_library(System::KuramotoSivashinsky, grid_1d(m, L));
  Matrix state(m, 1);
  const double k = kTwoPi / L;
  for (long i = 0; i < m; ++i)
    state(i, 0) = std::sin(k * L * static_cast<double>(i) / static_cast<double>(m));
  FeatureBlock fb = evaluate(lib, state, {0.0});
  const long u3 = term_index(lib, "u_xxx");
  const long u4 = term_index(lib, "u_xxxx");
  // On plane waves the stencils act as -k^3 (1 - theta^2/4) and
  // k^4 (1 - theta^2/6) with theta = k dx, so bound by those terms.
  const double theta = k * L / static_cast<double>(m);
  const double m3 = 1.2 * theta * theta / 4.0 * k * k * k;
  const double m4 = 1.2 * theta * theta / 6.0 * k * k * k * k;
  for (long i = 0; i < m; ++i) {
    double x = L * static_cast<double>(i) / static_cast<double>(m);
    CHECK(fb.values(i, u3) == Catch::Approx(-k * k * k * std::cos(k * x)).margin(m3));
    CHECK(fb.values(i, u4) == Catch::Approx(k * k * k * k * std::sin(k * x)).margin(m4));
  }
}

TEST_CASE("product term multiplies the field into its derivative", "[dictionary]") {
  const long m = 200;
  const double L = 2.0;
  Library lib = standard_library(System::KuramotoSivashinsky, grid_1d(m, L));
  Matrix state(m, 1);
  const double k = kTwoPi / L;
  for (long i = 0; i < m; ++i)
    state(i, 0) = std::sin(k * L * static_cast<double>(i) / static_cast<double>(m));
  FeatureBlock fb = evaluate(lib, state, {0.0});
  const long uux = term_index(lib, "u u_x");
  const long ux = term_index(lib, "u_x");
  for (long i = 0; i < m; ++i)
    CHECK(fb.values(i, uux) == fb.values(i, ux) * state(i, 0));
}

TEST_CASE("2D derivative columns match a separable analytic field", "[dictionary]") {
  const long nx = 48, ny = 40;
  const double lx = 20.0, ly = 20.0;
  Library lib = standard_library(System::ReactionDiffusion2D, grid_2d(nx, ny, lx, ly));
  const double kx = kTwoPi / lx, ky = kTwoPi / ly;
  Matrix state(nx * ny, 2);
  for (long ix = 0; ix < nx; ++ix)
    for (long iy = 0; iy < ny; ++iy) {
      double x = lx * static_cast<double>(ix) / static_cast<double>(nx);
      double y = ly * static_cast<double>(iy) / static_cast<double>(ny);
      state(ix * ny + iy, 0) = std::sin(kx * x) * std::cos(ky * y);
      state(ix * ny + iy, 1) = std::cos(kx * x) * std::sin(ky * y);
    }
  FeatureBlock fb = evaluate(lib, state, {0.0});
  const long uxy = term_index(lib, "u_xy");
  const long uyy = term_index(lib, "u_yy");
  const long vxx = term_index(lib, "v_xx");
  double worst = 0.0;
  for (long ix = 0; ix < nx; ++ix)
    for (long iy = 0; iy < ny; ++iy) {
      double x = lx * static_cast<double>(ix) / static_cast<double>(nx);
      double y = ly * static_cast<double>(iy) / static_cast<double>(ny);
      long mi = ix * ny + iy;
      worst = std::max(worst, std::abs(fb.values(mi, uxy) -
                                       (-kx * ky * std::cos(kx * x) * std::sin(ky * y))));
      CHECK(fb.values(mi, uyy) ==
            Catch::Approx(-ky * ky * std::sin(kx * x) * std::cos(ky * y)).margin(5e-2 * ky * ky));
      CHECK(fb.values(mi, vxx) ==
            Catch::Approx(-kx * kx * std::cos(kx * x) * std::sin(ky * y)).margin(5e-2 * kx * kx));
    }
  CHECK(worst < 0.05 * kx * ky);
}

TEST_CASE("constant column is ones and zero state kills the rest", "[dictionary]") {
  Library lib = standard_library(System::CubicOscillator, grid_ode());
  Matrix state = Matrix::Zero(9, 2);
  FeatureBlock fb = evaluate(lib, state, std::vector<double>(9, 0.0));
  for (long r = 0; r < 9; ++r) {
    CHECK(fb.values(r, 0) == 1.0);
    for (long i = 1; i < lib.size(); ++i) CHECK(fb.values(r, i) == 0.0);
  }
}

TEST_CASE("derivative columns are exactly linear under power-of-two scaling",
          "[dictionary]") {
  const long m = 64;
  Library lib = standard_library(System::KuramotoSivashinsky, grid_1d(m, 8.0));
  Matrix state = random_state(m, 1, 11);
  Matrix scaled = 2.0 * state;
  FeatureBlock a = evaluate(lib, state, {0.0});
  FeatureBlock b = evaluate(lib, scaled, {0.0});
  for (const char* lbl : {"u_x", "u_xx", "u_xxx", "u_xxxx"}) {
    long i = term_index(lib, lbl);
    for (long r = 0; r < m; ++r) CHECK(b.values(r, i) == 2.0 * a.values(r, i));
  }
}

TEST_CASE("monomial columns scale as c to the total degree", "[dictionary]") {
  Library lib = standard_library(System::CubicOscillator, grid_ode());
  Matrix state = random_state(25, 2, 22);
  const double c = 1.7;
  FeatureBlock a = evaluate(lib, state, std::vector<double>(25, 0.0));
  FeatureBlock b = evaluate(lib, Matrix(c * state), std::vector<double>(25, 0.0));
  for (long i = 0; i < lib.size(); ++i) {
    const auto& t = lib.terms[static_cast<std::size_t>(i)];
    int deg = 0;
    for (int e : t.exponents) deg += e;
    double factor = std::pow(c, deg);
    for (long r = 0; r < 25; ++r)
      CHECK(b.values(r, i) == Catch::Approx(factor * a.values(r, i)).epsilon(1e-12).margin(1e-14));
  }
}

TEST_CASE("evaluation ignores the time stamp for every standard library",
          "[dictionary]") {
  struct Case {
    System sys;
    SpatialGrid grid;
  };
  std::vector<Case> cases{{System::CubicOscillator, grid_ode()},
                          {System::LinearOscillator, grid_ode()},
                          {System::FitzHughNagumo, grid_ode()},
                          {System::Advection, grid_1d(32)},
                          {System::KuramotoSivashinsky, grid_1d(40, 64.0)},
                          {System::ReactionDiffusion2D, grid_2d(8, 8, 20, 20)}};
  for (const auto& c : cases) {
    Library lib = standard_library(c.sys, c.grid);
    Matrix state = random_state(c.grid.points(), lib.d2, 33);
    FeatureBlock a = evaluate(lib, state, {0.3});
    FeatureBlock b = evaluate(lib, state, {7.9});
    CHECK(a.values == b.values);
  }
}

TEST_CASE("evaluate reports the first non-finite input", "[dictionary]") {
  Library lib = standard_library(System::Advection, grid_1d(16));
  Matrix state = random_state(16, 1, 44);
  state(5, 0) = std::numeric_limits<double>::quiet_NaN();
  try {
    evaluate(lib, state, {0.0});
    FAIL("expected NonFiniteState");
  } catch (const Error& e) {
    CHECK(e.kind == ErrorKind::NonFiniteState);
    CHECK(std::string(e.what()).find("row 5") != std::string::npos);
  }
}

TEST_CASE("multi-snapshot evaluation stacks per-time blocks", "[dictionary]") {
  const long m = 16;
  Library lib = standard_library(System::Advection, grid_1d(m));
  Matrix two(2 * m, 1);
  Matrix first = random_state(m, 1, 55);
  Matrix second = random_state(m, 1, 56);
  two.topRows(m) = first;
  two.bottomRows(m) = second;
  FeatureBlock stacked = evaluate(lib, two, {0.0, 0.1});
  FeatureBlock a = evaluate(lib, first, {0.0});
  FeatureBlock b = evaluate(lib, second, {0.1});
  CHECK(stacked.values.topRows(m) == a.values);
  CHECK(stacked.values.bottomRows(m) == b.values);
}
