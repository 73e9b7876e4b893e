#include <doctest.h>

#include <cmath>
#include <nlohmann/json.hpp>
#include <numbers>

#include "wforge/dirac.hpp"
#include "wforge/error.hpp"
#include "wforge/gaussmap.hpp"
#include "wforge/geometry.hpp"
#include "wforge/weierstrass.hpp"

using namespace wforge;
using std::numbers::pi;

namespace {

constexpr cplx I{0.0, 1.0};

ComplexGrid torus(int n = 64) {
  return ComplexGrid(n, n, 0.0, 0.0, 2 * pi, 2 * pi, BoundaryMode::periodic);
}

// p = 0.5 + 0.1 cos x, with two mixed solutions so that u varies.
FamilyResult wavy_1d(const ComplexGrid& g) {
  OneDimensionalFamily fam;
  fam.p_of_x = [](double x) { return 0.5 + 0.1 * std::cos(x); };
  fam.coefficients = {{1.0, 0.1 * I}, {0.1, 1.0}};
  return analytic_family(g, SystemKind::euclidean, fam);
}

}  // namespace

TEST_CASE("Kenmotsu data of a minimal solution") {
  ComplexGrid g(33, 33, -1.0, -1.0, 2.0, 2.0, BoundaryMode::open);
  auto e = analytic_family(g, SystemKind::euclidean, MinimalFamily{{0.0, 1.0}, {1.0}});
  auto k = kenmotsu_from_spinors(e.solutions[0], e.potential);
  for (int i = 0; i < g.nx(); ++i)
    for (int j = 0; j < g.ny(); ++j) {
      CHECK(std::abs(k.f(i, j) - I * g.z(i, j)) <= 1e-14);
      CHECK(std::abs(k.eta(i, j) - I) <= 1e-14);
    }
  CHECK(k.eq_2_3 <= 1e-10);
  CHECK(*k.p_roundtrip_max_err <= 1e-10);
  CHECK(max_abs(k.H) <= 1e-10);
  CHECK(k.masked_fraction == 0.0);
}

TEST_CASE("Kenmotsu round trip and mean curvature") {
  SUBCASE("cylinder") {
    ComplexGrid g(16, 16, 0.0, 0.0, 2.0, pi, BoundaryMode::periodic);
    auto r = analytic_family(g, SystemKind::euclidean, ExponentialFamily{1.0, {{1.0, -1.0}}});
    auto k = kenmotsu_from_spinors(r.solutions[0], r.potential);
    for (std::size_t i = 0; i < g.size(); ++i)
      CHECK(k.H[i].real() == doctest::Approx(1.0).epsilon(1e-6));
    CHECK(max_imag(k.H) <= 1e-6);
    CHECK(*k.p_roundtrip_max_err <= 1e-6);
  }
  SUBCASE("non-constant u") {
    auto r = wavy_1d(torus());
    for (const auto& s : r.solutions) {
      auto k = kenmotsu_from_spinors(s, r.potential);
      CHECK(k.eq_2_3 <= 1e-10);
      CHECK(*k.p_roundtrip_max_err <= 1e-10);
      auto mc = mean_curvature(r.potential, build_r3(s));
      CHECK(max_abs_diff(k.H, mc.H_scalar) <= 1e-10);
    }
  }
  SUBCASE("solver output") {
    auto g = torus();
    Potential p(ScalarField::real_part(ScalarField::sample(
                    g, [](cplx z) { return 0.3 * std::cos(z.real() + z.imag()); })),
                SystemKind::euclidean);
    auto s = solve_fixed_point(p, constant_seed(g, 1.0, 0.7), 1e-12);
    auto k = kenmotsu_from_spinors(s, p);
    CHECK(k.eq_2_3 <= 1e-6);
    CHECK(*k.p_roundtrip_max_err <= 1e-6);
  }
  SUBCASE("phi = 0") {
    auto g = torus(8);
    Potential zero(ScalarField::constant(g, 0.0), SystemKind::euclidean);
    auto s = make_solution(zero, ScalarField::constant(g, 1.0), ScalarField(g), "x");
    CHECK_THROWS_AS(kenmotsu_from_spinors(s), AllDegenerate);
  }
  SUBCASE("split solutions are rejected") {
    auto g = torus(8);
    Potential zero(ScalarField::constant(g, 0.0), SystemKind::split);
    auto s = make_solution(zero, ScalarField::constant(g, 1.0), ScalarField::constant(g, 1.0), "x");
    CHECK_THROWS_AS(kenmotsu_from_spinors(s), KindMismatch);
  }
}

TEST_CASE("Hoffman-Osserman relations") {
  SUBCASE("analytic pair") {
    auto r = wavy_1d(torus());
    auto h = ho_from_spinors(r.solutions[0], r.solutions[1], r.potential);
    CHECK(h.eq_3_29 <= 1e-9);
    CHECK(h.eq_3_30 <= 1e-10);
    CHECK(h.eq_3_31 <= 1e-10);
    CHECK(h.eq_3_32 <= 1e-9);
    CHECK(*h.p_roundtrip_max_err <= 1e-10);
    CHECK(h.masked_fraction == 0.0);
  }
  SUBCASE("solver pair") {
    auto g = torus();
    Potential p(ScalarField::real_part(ScalarField::sample(
                    g, [](cplx z) { return 0.3 * std::cos(z.real()) * std::cos(z.imag()); })),
                SystemKind::euclidean);
    auto s1 = solve_fixed_point(p, constant_seed(g, 1.0, 0.7), 1e-12);
    auto s2 = solve_fixed_point(p, constant_seed(g, 0.4, 1.0), 1e-12);
    auto h = ho_from_spinors(s1, s2, p);
    CHECK(h.eq_3_29 <= 1e-6);
    CHECK(h.eq_3_30 <= 1e-6);
    CHECK(h.eq_3_31 <= 1e-6);
    CHECK(h.eq_3_32 <= 1e-6);
    CHECK(*h.p_roundtrip_max_err <= 1e-6);
  }
  SUBCASE("minimal pair") {
    ComplexGrid g(17, 17, -1.0, -1.0, 2.0, 2.0, BoundaryMode::open);
    auto e1 = analytic_family(g, SystemKind::euclidean, MinimalFamily{{0.0, 1.0}, {1.0}});
    auto e2 = analytic_family(g, SystemKind::euclidean, MinimalFamily{{1.0}, {3.0, 1.0}});
    auto h = ho_from_spinors(e1.solutions[0], e2.solutions[0], e1.potential);
    CHECK(max_abs(h.F1) <= 1e-12);
    // f2 = -i / (3 + z) is holomorphic; fourth-order differences leave O(h^4).
    CHECK(max_abs(h.F2) <= 1e-4);
    CHECK(h.eq_3_30 <= 1e-4);
    CHECK(std::all_of(h.zero_fzbar_mask.begin(), h.zero_fzbar_mask.end(),
                      [](bool b) { return b; }));
    CHECK(h.eq_3_31 == 0.0);
    CHECK(h.eq_3_32 == 0.0);
  }
  SUBCASE("equal solutions") {
    auto r = wavy_1d(torus(16));
    const auto& s = r.solutions[0];
    auto h = ho_from_spinors(s, s, r.potential);
    CHECK(max_abs(h.f1 + h.f2) == 0.0);
  }
  SUBCASE("mismatched potentials") {
    auto a = wavy_1d(torus(16));
    auto b = analytic_family(torus(16), SystemKind::euclidean,
                             ExponentialFamily{1.0, {{1.0, -1.0}}});
    CHECK_THROWS_AS(ho_from_spinors(a.solutions[0], b.solutions[0], a.potential),
                    PotentialMismatch);
  }
}

TEST_CASE("Gauss map") {
  auto r = wavy_1d(torus());
  const auto& s1 = r.solutions[0];
  const auto& s2 = r.solutions[1];
  auto G = gauss_map(s1, s2);
  CHECK(quadric_residual(G) <= 1e-12);

  auto chart = build_r4(s1, s2);
  std::vector<ScalarField> Xz;
  for (int k = 0; k < 4; ++k) Xz.push_back(chart.dz(k));
  CHECK(projective_residual(G, Xz) <= 1e-8);

  auto h = ho_from_spinors(s1, s2, r.potential);
  auto Gf = gauss_map_from_f(h.f1, h.f2);
  CHECK(quadric_residual(Gf) <= 1e-12);
  CHECK(projective_residual(G, Gf) <= 1e-10);
  for (int i = 0; i < 4; ++i) CHECK(max_abs_diff(G[i], h.eta * Gf[i]) <= 1e-12);

  auto Gs = gauss_map(s1, s1);
  CHECK(max_abs(Gs[3]) == 0.0);

  Potential q(ScalarField::real_part(ScalarField::sample(
                  torus(), [](cplx z) { return 0.3 * std::sin(z.real() - z.imag()); })),
              SystemKind::euclidean);
  auto a1 = solve_fixed_point(q, constant_seed(torus(), 1.0, 0.5), 1e-12);
  auto a2 = solve_fixed_point(q, constant_seed(torus(), 0.2, 1.0), 1e-12);
  CHECK(quadric_residual(gauss_map(a1, a2)) <= 1e-8);

  std::vector<ScalarField> a{ScalarField::constant(torus(4), 1.0)};
  std::vector<ScalarField> b{ScalarField::constant(torus(4), 1.0),
                             ScalarField::constant(torus(4), 2.0)};
  CHECK_THROWS_AS(projective_residual(a, b), ShapeMismatch);
}

TEST_CASE("residual report") {
  auto r = wavy_1d(torus(16));
  auto k = kenmotsu_from_spinors(r.solutions[0], r.potential);
  auto h = ho_from_spinors(r.solutions[0], r.solutions[1], r.potential);
  auto j = nlohmann::json::parse(gaussmap_report_json(&k, &h, "beef"));
  for (const char* key : {"eq_2_3", "eq_3_29", "eq_3_30", "eq_3_31", "eq_3_32",
                          "p_roundtrip_max_err", "masked_fraction"})
    CHECK(j.contains(key));
  CHECK(j["config_hash"] == "beef");
  auto only_k = nlohmann::json::parse(gaussmap_report_json(&k, nullptr));
  CHECK(only_k["eq_3_29"].is_null());
  CHECK(only_k["eq_2_3"].is_number());
}
