#include <doctest.h>

#include <cmath>
#include <nlohmann/json.hpp>
#include <numbers>

#include "wforge/dirac.hpp"
#include "wforge/error.hpp"
#include "wforge/geometry.hpp"
#include "wforge/operators.hpp"
#include "wforge/weierstrass.hpp"

using namespace wforge;
using std::numbers::pi;

namespace {

constexpr cplx I{0.0, 1.0};

ComplexGrid torus(int n = 32) {
  return ComplexGrid(n, n, 0.0, 0.0, 2 * pi, 2 * pi, BoundaryMode::periodic);
}

ComplexGrid open_square(int n, double half) {
  return ComplexGrid(n, n, -half, -half, 2 * half, 2 * half, BoundaryMode::open);
}

double max_rel(const ScalarField& a, const ScalarField& b, const std::vector<bool>& mask = {}) {
  double num = 0.0, den = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) {
    if (!mask.empty() && mask[k]) continue;
    num = std::max(num, std::abs(a[k] - b[k]));
    den = std::max(den, std::abs(b[k]));
  }
  return num / (den > 0.0 ? den : 1.0);
}

// Constant p = 1 with solutions mixing the periodic modes exp(2iy) and
// exp(2ix) on a 2 pi torus: u is not constant, so K is not zero.
FamilyResult wavy_exponential(const ComplexGrid& g) {
  auto r = analytic_family(g, SystemKind::euclidean,
                           ExponentialFamily{1.0, {{1.0, -1.0}, {I, I}, {-1.0, 1.0}}});
  const auto& s = r.solutions;
  auto a = combine(r.potential, 1.0, s[0], cplx(0.4, 0.2), s[1]);
  auto b = combine(r.potential, 1.0, s[2], cplx(-0.3, 0.1), s[1]);
  return {r.potential, {a, b}};
}

struct SolvedPair {
  Potential p;
  SpinorSolution s1, s2;
};

SolvedPair solved_pair(const ComplexGrid& g, double eps) {
  Potential p(ScalarField::real_part(ScalarField::sample(
                  g, [&](cplx z) { return eps * std::cos(z.real()); })),
              SystemKind::euclidean);
  auto s1 = solve_fixed_point(p, constant_seed(g, 1.0, 0.7), 1e-12);
  auto s2 = solve_fixed_point(p, constant_seed(g, 0.4, 1.0), 1e-12);
  return {p, s1, s2};
}

}  // namespace

TEST_CASE("induced metric of r4 charts") {
  auto sp = solved_pair(torus(), 0.3);
  auto chart = build_r4(sp.s1, sp.s2);
  auto g = induced_metric(chart);
  auto half_uu = 0.5 * (u_factor(sp.s1) * u_factor(sp.s2));
  CHECK(max_abs_diff(g.g_zzbar, half_uu) <= 1e-6 * max_abs(half_uu));
  CHECK(max_abs(g.g_zz) <= 1e-6 * max_abs(half_uu));
  CHECK(max_abs_diff(g.g_zbarzbar, conj(g.g_zz)) <= 1e-12);
  CHECK(g.g_zzbar.is_real());
}

TEST_CASE("split chart metric is v/2") {
  auto r = analytic_family(open_square(129, 0.5), SystemKind::split,
                           ExponentialFamily{1.0, {{2.0, 0.5}, {0.5, 2.0}}});
  auto chart = build_split22(r.solutions[0], r.solutions[1]);
  auto fm = formula_metric(chart);
  auto g = induced_metric(chart);
  CHECK(max_rel(g.g_zzbar, fm.g_zzbar) <= 5e-6);
  CHECK(max_abs(g.g_zz) <= 5e-6 * max_abs(fm.g_zzbar));
}

TEST_CASE("Minkowski line element") {
  auto sp = solved_pair(torus(), 0.3);
  auto chart = with_ambient(build_r4(sp.s1, sp.s2), AmbientSpec::minkowski4());
  auto g = induced_metric(chart);
  auto a = conj(sp.s1.psi) * sp.s2.phi;
  auto b = conj(sp.s2.psi) * sp.s1.phi;
  auto gzz = 0.5 * ((a - b) * (a - b));
  CHECK(max_abs_diff(g.g_zz, gzz) <= 1e-9);
  auto fm = formula_metric(chart);
  CHECK(max_abs_diff(g.g_zzbar, fm.g_zzbar) <= 1e-9);
  // The closed form differs from |a + b|^2 / 2 unless (|psi1|^2 - |phi1|^2)
  // (|psi2|^2 - |phi2|^2) vanishes.
  auto v = (abs2(sp.s1.psi) - abs2(sp.s1.phi)) * (abs2(sp.s2.psi) - abs2(sp.s2.phi));
  CHECK(max_abs_diff(fm.g_zzbar, 0.5 * abs2(a + b)) >= 1e-3);

  auto le = line_element(g);
  ScalarField E(chart.grid()), F(chart.grid()), G(chart.grid());
  const double sig[4] = {1, 1, 1, -1};
  for (int k = 0; k < 4; ++k) {
    auto xx = chart.dz(k) + chart.dzbar(k);
    auto xy = I * (chart.dz(k) - chart.dzbar(k));
    E += sig[k] * (xx * xx);
    F += sig[k] * (xx * xy);
    G += sig[k] * (xy * xy);
  }
  CHECK(max_abs_diff(le.E, E) <= 1e-9);
  CHECK(max_abs_diff(le.F, F) <= 1e-9);
  CHECK(max_abs_diff(le.G, G) <= 1e-9);
  auto rep = analyze(chart, sp.p);
  CHECK(rep.line.has_value());
}

TEST_CASE("normals are orthonormal and normal") {
  auto g = open_square(33, 1.0);
  auto e = analytic_family(g, SystemKind::euclidean, MinimalFamily{{0.0, 1.0}, {1.0}});
  const auto& s = e.solutions[0];
  auto n = normals_r4(s, s);
  for (std::size_t k = 0; k < g.size(); ++k) {
    double a = 0, b = 0, ab = 0;
    for (int i = 0; i < 4; ++i) {
      a += std::norm(n.N1[i][k]);
      b += std::norm(n.N2[i][k]);
      ab += (n.N1[i][k] * n.N2[i][k]).real();
    }
    CHECK(a == doctest::Approx(1.0).epsilon(1e-8));
    CHECK(b == doctest::Approx(1.0).epsilon(1e-8));
    CHECK(std::abs(ab) <= 1e-8);
  }

  auto sp = solved_pair(torus(), 0.3);
  auto chart = build_r4(sp.s1, sp.s2);
  auto m = normals_r4(sp.s1, sp.s2);
  ScalarField t1(chart.grid()), t2(chart.grid());
  for (int i = 0; i < 4; ++i) {
    t1 += m.N1[i] * chart.dz(i);
    t2 += m.N2[i] * chart.dz(i);
  }
  CHECK(max_abs(t1) <= 1e-6);
  CHECK(max_abs(t2) <= 1e-6);

  auto tg = torus(8);
  Potential zero(ScalarField::constant(tg, 0.0), SystemKind::euclidean);
  auto no_phi = make_solution(zero, ScalarField::constant(tg, 1.0), ScalarField(tg), "x");
  CHECK_THROWS_AS(normals_r4(no_phi, no_phi), AllDegenerate);
  auto part = ScalarField::sample(tg, [](cplx z) { return cplx(z.real() < 3 ? 0.0 : 1.0); });
  auto half = make_solution(zero, ScalarField::constant(tg, 1.0), part, "x");
  auto hn = normals_r4(half, half);
  for (std::size_t k = 0; k < tg.size(); ++k)
    for (int i = 0; i < 4; ++i) CHECK(std::isfinite(hn.N1[i][k].real()));
}

TEST_CASE("mean curvature") {
  SUBCASE("minimal surfaces") {
    auto g = open_square(33, 1.0);
    auto e1 = analytic_family(g, SystemKind::euclidean, MinimalFamily{{0.0, 1.0}, {1.0}});
    auto e2 = analytic_family(g, SystemKind::euclidean, MinimalFamily{{1.0}, {0.0, 1.0}});
    e2.solutions[0].potential_tag = e1.solutions[0].potential_tag;
    auto chart = build_r4(e1.solutions[0], e2.solutions[0]);
    auto mc = mean_curvature(e1.potential, chart);
    CHECK(max_abs(mc.H_scalar) == 0.0);
    for (const auto& h : mc.H_fd) CHECK(max_abs(h) <= 1e-6);
  }
  SUBCASE("cylinder") {
    ComplexGrid g(16, 16, 0.0, 0.0, 2.0, pi, BoundaryMode::periodic);
    auto r = analytic_family(g, SystemKind::euclidean, ExponentialFamily{1.0, {{1.0, -1.0}}});
    for (const auto& chart : {build_r3(r.solutions[0]),
                              build_r4(r.solutions[0], r.solutions[0])}) {
      auto mc = mean_curvature(r.potential, chart);
      for (std::size_t k = 0; k < g.size(); ++k) {
        CHECK(mc.H_scalar[k].real() == doctest::Approx(1.0).epsilon(1e-6));
        double s = 0.0;
        for (const auto& h : mc.H_fd) s += std::norm(h[k]);
        CHECK(std::sqrt(s) == doctest::Approx(1.0).epsilon(1e-6));
      }
    }
  }
  SUBCASE("unit-modulus exponentials give H = p") {
    auto g = torus(16);
    auto r = analytic_family(g, SystemKind::euclidean,
                             ExponentialFamily{std::sqrt(2.0) / 2.0,
                                               {{(1.0 + I) / 2.0, (I - 1.0) / 2.0},
                                                {(1.0 - I) / 2.0, (-1.0 - I) / 2.0}}});
    auto mc = mean_curvature(r.potential, build_r4(r.solutions[0], r.solutions[1]));
    for (std::size_t k = 0; k < g.size(); ++k)
      CHECK(mc.H_scalar[k].real() == doctest::Approx(std::sqrt(2.0) / 2.0).epsilon(1e-12));
  }
  SUBCASE("vector, components and scalar agree") {
    auto w = wavy_exponential(torus());
    auto chart = build_r4(w.solutions[0], w.solutions[1]);
    auto mc = mean_curvature(w.potential, chart);
    for (std::size_t k = 0; k < chart.grid().size(); ++k) {
      if (mc.mask[k]) continue;
      double v = 0.0;
      for (const auto& h : mc.H_vec) v += std::norm(h[k]);
      const double hs = mc.H_scalar[k].real();
      CHECK(std::sqrt(v) == doctest::Approx(hs).epsilon(1e-10));
      CHECK(std::hypot(mc.h1[k].real(), mc.h2[k].real()) == doctest::Approx(hs).epsilon(1e-10));
      CHECK(std::abs(mc.H_formula[k]) == doctest::Approx(hs).epsilon(1e-10));
    }
    for (int i = 0; i < 4; ++i) CHECK(max_rel(mc.H_fd[i], mc.H_vec[i]) <= 1e-8);
  }
}

TEST_CASE("Gaussian curvature") {
  SUBCASE("Enneper profile") {
    auto g = open_square(129, 1.0);
    auto e = analytic_family(g, SystemKind::euclidean, MinimalFamily{{0.0, 1.0}, {1.0}});
    auto gc = gauss_curvature(build_r3(e.solutions[0]));
    for (int i = 0; i < g.nx(); ++i)
      for (int j = 0; j < g.ny(); ++j) {
        const double profile = gc.K(i, j).real() * std::pow(1.0 + std::norm(g.z(i, j)), 4);
        CHECK(profile == doctest::Approx(-4.0).epsilon(1e-4));
        CHECK(gc.K_brioschi(i, j).real() == doctest::Approx(gc.K(i, j).real()).epsilon(1e-4));
      }
  }
  SUBCASE("cylinder and constant u are flat") {
    ComplexGrid g(16, 16, 0.0, 0.0, 2.0, pi, BoundaryMode::periodic);
    auto r = analytic_family(g, SystemKind::euclidean, ExponentialFamily{1.0, {{1.0, -1.0}}});
    auto gc = gauss_curvature(build_r3(r.solutions[0]));
    CHECK(max_abs(gc.K) <= 1e-6);
    CHECK(max_abs(gc.K_brioschi) <= 1e-6);
  }
  SUBCASE("closed form agrees with Brioschi on a curved periodic chart") {
    auto w = wavy_exponential(torus(64));
    for (const auto& chart : {build_r3(w.solutions[0]),
                              build_r4(w.solutions[0], w.solutions[1])}) {
      auto gc = gauss_curvature(chart);
      CHECK(max_abs(gc.K) > 1e-2);
      CHECK(max_rel(gc.K_brioschi, gc.K) <= 1e-6);
    }
  }
}

TEST_CASE("Willmore functional") {
  auto g = torus(16);
  Potential zero(ScalarField::constant(g, 0.0), SystemKind::euclidean);
  CHECK(willmore(zero) == 0.0);

  auto og = open_square(257, 6.0);
  Potential gauss(ScalarField::real_part(ScalarField::sample(
                      og, [](cplx z) { return std::exp(-std::norm(z)); })),
                  SystemKind::euclidean);
  CHECK(willmore(gauss) == doctest::Approx(2 * pi).epsilon(1e-5));
  CHECK(willmore(gauss, AmbientTag::split22) == doctest::Approx(-2 * pi).epsilon(1e-5));

  ComplexGrid cg(16, 16, 0.0, 0.0, 2.0, pi, BoundaryMode::periodic);
  auto r = analytic_family(cg, SystemKind::euclidean, ExponentialFamily{1.0, {{1.0, -1.0}}});
  auto chart = build_r3(r.solutions[0]);
  auto mc = mean_curvature(r.potential, chart);
  CHECK(willmore(r.potential) == doctest::Approx(4 * 2.0 * pi));
  CHECK(willmore_direct(chart, mc.H_fd) == doctest::Approx(4 * 2.0 * pi).epsilon(1e-10));

  auto w = wavy_exponential(torus());
  auto wc = build_r4(w.solutions[0], w.solutions[1]);
  auto wm = mean_curvature(w.potential, wc);
  const double W = willmore(w.potential);
  CHECK(std::abs(willmore_direct(wc, wm.H_fd) - W) <= 1e-4 * std::abs(W) + 1e-8);
}

TEST_CASE("conformally flat ambients") {
  auto rr = analytic_family(open_square(64, 2.0), SystemKind::euclidean,
                            RadialGaussianFamily{1.0, 1.0, {0, 1}});
  auto chart = build_r4(rr.solutions[0], rr.solutions[1]);
  auto flat = analyze(chart, rr.potential);

  auto zero_sigma = conformal_ambient_geometry(
      with_ambient(chart, AmbientSpec::conformal(ScalarField(chart.grid(), FieldKind::real))),
      rr.potential);
  CHECK(max_abs_diff(zero_sigma.H_scalar, flat.H_scalar) <= 1e-14);
  CHECK(max_abs_diff(zero_sigma.K, flat.K) <= 1e-12);

  auto s4 = with_ambient(chart, AmbientSpec::s4(1.0));
  auto geo = conformal_ambient_geometry(s4, rr.potential);
  auto sigma = ambient_sigma(s4);
  for (std::size_t k = 0; k < sigma.size(); ++k)
    CHECK(std::abs(geo.H_scalar[k] - std::exp(-sigma[k].real()) * flat.H_scalar[k]) <=
          1e-8 * (1.0 + std::abs(flat.H_scalar[k])));
  CHECK(geo.H_with_sigma_gradient.has_value());
  CHECK(*geo.W == doctest::Approx(*flat.W));

  auto diff = [&](double K0) {
    auto gk = conformal_ambient_geometry(with_ambient(chart, AmbientSpec::s4(K0)), rr.potential);
    return std::max(max_abs_diff(gk.H_scalar, flat.H_scalar), max_abs_diff(gk.K, flat.K));
  };
  const double d1 = diff(1e-3), d2 = diff(1e-4);
  CHECK(d1 / d2 == doctest::Approx(10.0).epsilon(0.05));
}

TEST_CASE("analysis reports") {
  auto w = wavy_exponential(torus());
  auto chart = build_r4(w.solutions[0], w.solutions[1]);
  auto rep = analyze(chart, w.potential);
  REQUIRE(rep.W.has_value());
  CHECK(rep.max_conformality_violation <= 1e-10);
  CHECK(rep.masked_fraction == 0.0);
  auto j = nlohmann::json::parse(geometry_summary_json(rep, "cafe"));
  for (const char* key : {"W", "W_direct", "masked_fraction", "max_conformality_violation",
                          "H_minmax", "K_minmax"})
    CHECK(j.contains(key));
  CHECK(j["config_hash"] == "cafe");

  auto cn = build_cn({w.solutions[0]}, {{{1.0}}});
  CHECK_THROWS_AS(analyze(cn, w.potential), KindMismatch);
  Potential other(ScalarField::constant(chart.grid(), 2.0), SystemKind::euclidean);
  CHECK_THROWS_AS(analyze(chart, other), PotentialMismatch);

  auto stacked = build_stacked({w.solutions[0], w.solutions[1]}, {{0}, {1}, {0, 1}});
  auto sr = analyze(stacked, w.potential);
  CHECK_FALSE(sr.W.has_value());
  CHECK(sr.W_direct.has_value());
}
