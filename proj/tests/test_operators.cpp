#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "wforge/error.hpp"
#include "wforge/operators.hpp"

using namespace wforge;
using std::numbers::pi;

namespace {

constexpr cplx I{0.0, 1.0};

ComplexGrid torus(int n = 32, double l = 2 * pi) {
  return ComplexGrid(n, n, 0.0, 0.0, l, l, BoundaryMode::periodic);
}

ComplexGrid open_square(int n = 41, double half = 1.0) {
  return ComplexGrid(n, n, -half, -half, 2 * half, 2 * half,
                     BoundaryMode::open);
}

// Smooth periodic field built from a handful of random low modes.
ScalarField random_smooth(const ComplexGrid& g, unsigned seed,
                          bool zero_mean = true) {
  std::mt19937 rng(seed);
  std::normal_distribution<double> nd;
  std::vector<std::tuple<int, int, cplx>> modes;
  for (int m = -3; m <= 3; ++m)
    for (int n = -3; n <= 3; ++n) {
      if (zero_mean && m == 0 && n == 0) continue;
      modes.emplace_back(m, n, cplx(nd(rng), nd(rng)));
    }
  return ScalarField::sample(g, [&](cplx z) {
    cplx s = 0.0;
    for (auto [m, n, c] : modes)
      s += c * std::exp(I * (2 * pi * m * z.real() / g.lx() +
                             2 * pi * n * z.imag() / g.ly()));
    return s;
  });
}

}  // namespace

TEST_CASE("derivatives of z and z-bar on an open grid") {
  auto g = open_square();
  auto z = ScalarField::sample(g, [](cplx z) { return z; });
  auto zb = conj(z);
  CHECK(max_abs(d_z(zb)) <= 1e-12);
  CHECK(max_abs_diff(d_z(z), ScalarField::constant(g, 1.0)) <= 1e-12);
  CHECK(max_abs(d_zbar(z)) <= 1e-12);
  CHECK(max_abs_diff(d_zbar(zb), ScalarField::constant(g, 1.0)) <= 1e-12);
}

TEST_CASE("open-grid differences are exact on quartics and converge at 4th order") {
  auto g = open_square(21);
  auto f = ScalarField::sample(g, [](cplx z) { return z * z * z * z; });
  auto want = ScalarField::sample(g, [](cplx z) { return 4.0 * z * z * z; });
  CHECK(max_abs_diff(d_z(f), want) <= 1e-10);

  auto err = [](int n) {
    auto g = open_square(n);
    auto f = ScalarField::sample(g, [](cplx z) { return std::exp(z.real()) * std::sin(z.imag()); });
    auto want = ScalarField::sample(
        g, [](cplx z) { return std::exp(z.real()) * std::sin(z.imag()); });
    return max_abs_diff(d_x(f), want);
  };
  const double e1 = err(41), e2 = err(81);
  CHECK(e1 / e2 > 12.0);
}

TEST_CASE("spectral derivative symbols") {
  auto g = torus();
  auto fx = ScalarField::sample(g, [](cplx z) { return std::exp(3.0 * I * z.real()); });
  CHECK(max_abs_diff(d_z(fx), (1.5 * I) * fx) <= 1e-12);
  auto fy = ScalarField::sample(g, [](cplx z) { return std::exp(2.0 * I * z.imag()); });
  CHECK(max_abs_diff(d_zbar(fy), -1.0 * fy) <= 1e-12);
}

TEST_CASE("operator symmetries on periodic fields") {
  auto g = torus();
  auto f = random_smooth(g, 7, false);
  const double s = max_abs(f);
  CHECK(max_abs_diff(d_z(d_zbar(f)), d_zbar(d_z(f))) <= 1e-10 * s);
  CHECK(max_abs_diff(d_z(conj(f)), conj(d_zbar(f))) == 0.0);
  CHECK(std::abs(quadrature(d_z(f))) <= 1e-12);
}

TEST_CASE("inv_dzbar round trip and failure modes") {
  auto g = torus();
  auto u = random_smooth(g, 11);
  auto f = d_zbar(u);
  auto back = inv_dzbar(f);
  CHECK(max_abs_diff(back, u) <= 1e-10 * max_abs(u));
  CHECK(max_abs_diff(d_zbar(back), f) <= 1e-10 * max_abs(f));

  auto w = random_smooth(g, 12);
  auto v = inv_dz(d_z(w));
  CHECK(max_abs_diff(v, w) <= 1e-10 * max_abs(w));

  CHECK(max_abs(inv_dzbar(ScalarField::constant(g, 0.0))) == 0.0);
  CHECK_THROWS_AS(inv_dzbar(ScalarField::constant(g, 2.0)), NonzeroMean);
  CHECK_THROWS_AS(inv_dzbar(ScalarField::constant(open_square(), 0.0)),
                  NonPeriodicGrid);
}

TEST_CASE("quadrature") {
  ComplexGrid g(16, 16, 0.0, 0.0, 2.0, 3.0, BoundaryMode::open);
  CHECK(std::abs(quadrature(ScalarField::constant(g, 1.0)) - 6.0) <= 1e-12);
  ComplexGrid gp(16, 16, 0.0, 0.0, 2.0, 3.0, BoundaryMode::periodic);
  CHECK(std::abs(quadrature(ScalarField::constant(gp, 1.0)) - 6.0) <= 1e-12);
  auto s = ScalarField::sample(gp, [](cplx z) { return std::sin(pi * z.real()); });
  CHECK(std::abs(quadrature(s)) <= 1e-12);
  auto g6 = open_square(241, 6.0);
  auto gauss = ScalarField::sample(g6, [](cplx z) { return std::exp(-std::norm(z)); });
  CHECK(std::abs(quadrature(gauss) - pi) <= 1e-6 * pi);
}

TEST_CASE("reconstruction of exact and non-closed forms") {
  auto g = open_square(33);
  auto one = ScalarField::constant(g, 1.0);
  auto zero = ScalarField::constant(g, 0.0);
  auto r = reconstruct_from_form(OneForm(one, zero));
  auto want = ScalarField::sample(g, [&](cplx z) { return z - g.z(0, 0); });
  CHECK(max_abs_diff(r.X, want) <= 1e-12);
  CHECK(r.closedness_residual <= 1e-12);

  auto zb = ScalarField::sample(g, [](cplx z) { return std::conj(z); });
  auto bad = reconstruct_from_form(OneForm(zb, zero));
  CHECK(bad.closedness_residual == doctest::Approx(1.0).epsilon(0.05));

  // dX = z^2 dz has X = z^3/3 exactly under cubic-exact quadrature.
  auto z2 = ScalarField::sample(g, [](cplx z) { return z * z; });
  auto r3 = reconstruct_from_form(OneForm(z2, zero), {16, 16});
  auto want3 = ScalarField::sample(g, [](cplx z) { return z * z * z / 3.0; });
  CHECK(max_abs_diff(r3.X, want3) <= 1e-12);
}

TEST_CASE("path consistency is bounded by Stokes") {
  auto g = open_square(33);
  auto a = ScalarField::sample(g, [](cplx z) { return std::conj(z) * z; });
  auto b = ScalarField::sample(g, [](cplx z) { return std::exp(z); });
  OneForm w(a, b);
  auto r1 = reconstruct_from_form(w, {0, 0}, PathOrder::row_first);
  auto r2 = reconstruct_from_form(w, {0, 0}, PathOrder::column_first);
  CHECK(max_abs_diff(r1.X, r2.X) <= 2.0 * g.area() * r1.curl_max);
  CHECK(max_abs_diff(r1.X, r2.X) > 0.0);
}

TEST_CASE("periodic reconstruction keeps the linear drift") {
  auto g = torus();
  auto q = random_smooth(g, 5);
  // X = 0.7 x - 0.2 i y + q, so a = X_z, b = X_zbar.
  const cplx sx = 0.7, sy = -0.2 * I;
  auto a = d_z(q) + 0.5 * (sx - I * sy);
  auto b = d_zbar(q) + 0.5 * (sx + I * sy);
  auto r = reconstruct_from_form(OneForm(a, b), {3, 4});
  CHECK(std::abs(r.drift_x - sx) <= 1e-12);
  CHECK(std::abs(r.drift_y - sy) <= 1e-12);
  auto want = ScalarField::sample(g, [&](cplx z) { return sx * z.real() + sy * z.imag(); }) + q;
  want = want + (-want(3, 4));
  CHECK(max_abs_diff(r.X, want) <= 1e-11);
  CHECK(r.closedness_residual <= 1e-12);
  CHECK(max_abs_diff(d_z_drifting(r.X, r.drift_x, r.drift_y), a) <= 1e-11);
}

TEST_CASE("grid mismatch and real-kind invariants") {
  auto a = ScalarField::constant(torus(16), 1.0);
  auto b = ScalarField::constant(torus(32), 1.0);
  CHECK_THROWS_AS(a + b, GridMismatch);
  CHECK_THROWS(ScalarField(torus(16), std::vector<cplx>(256, I), FieldKind::real));
  CHECK_THROWS(ComplexGrid(3, 8, 0, 0, 1, 1, BoundaryMode::open));
}
