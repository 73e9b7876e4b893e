#include <doctest.h>

#include <cmath>
#include <numbers>
#include <sstream>

#include "wforge/dirac.hpp"
#include "wforge/error.hpp"
#include "wforge/operators.hpp"
#include "wforge/weierstrass.hpp"

using namespace wforge;
using std::numbers::pi;

namespace {

constexpr cplx I{0.0, 1.0};

ComplexGrid torus(int n = 32) {
  return ComplexGrid(n, n, 0.0, 0.0, 2 * pi, 2 * pi, BoundaryMode::periodic);
}

ComplexGrid open_square(int n = 33, double half = 1.0) {
  return ComplexGrid(n, n, -half, -half, 2 * half, 2 * half, BoundaryMode::open);
}

SpinorSolution enneper_seed(const ComplexGrid& g) {
  return analytic_family(g, SystemKind::euclidean, MinimalFamily{{0.0, 1.0}, {1.0}})
      .solutions.at(0);
}

// Max deviation of f - g from a constant.
double spread(const ScalarField& f, const ScalarField& g) {
  auto d = f - g;
  const cplx c = d[0];
  double m = 0.0;
  for (std::size_t k = 0; k < d.size(); ++k) m = std::max(m, std::abs(d[k] - c));
  return m;
}

struct SolvedPair {
  Potential p;
  SpinorSolution s1, s2;
};

SolvedPair solved_pair(const ComplexGrid& g, double eps, double tol) {
  Potential p(ScalarField::real_part(ScalarField::sample(
                  g, [&](cplx z) { return eps * std::cos(z.real()); })),
              SystemKind::euclidean);
  auto s1 = solve_fixed_point(p, constant_seed(g, 1.0, 0.0), tol);
  auto s2 = solve_fixed_point(p, constant_seed(g, 0.0, 1.0), tol);
  return {p, s1, s2};
}

}  // namespace

TEST_CASE("Enneper surface from the minimal family") {
  auto g = open_square();
  auto chart = build_r3(enneper_seed(g));
  REQUIRE(chart.dimension() == 3);
  auto w = ScalarField::sample(g, [](cplx z) { return I * (z * z * z / 3.0 - std::conj(z)); });
  auto x3 = ScalarField::sample(g, [](cplx z) { return cplx(-(z * z).real()); });
  CHECK(spread(chart.coords[0] + I * chart.coords[1], w) <= 1e-6);
  CHECK(spread(chart.coords[2], x3) <= 1e-6);
  CHECK(chart.coords[0](0, 0) == 0.0);
  CHECK(chart.imaginary_residue <= 1e-10);
  for (double c : chart.closedness) CHECK(c <= 1e-10);
}

TEST_CASE("cylinder has constant radius") {
  ComplexGrid g(16, 16, 0.0, 0.0, 2.0, pi, BoundaryMode::periodic);
  auto r = analytic_family(g, SystemKind::euclidean, ExponentialFamily{1.0, {{1.0, -1.0}}});
  auto chart = build_r3(r.solutions[0]);
  const cplx c1 = mean(chart.coords[0]), c2 = mean(chart.coords[1]);
  for (std::size_t k = 0; k < g.size(); ++k) {
    const double rad = std::hypot(std::abs(chart.coords[0][k] - c1),
                                  std::abs(chart.coords[1][k] - c2));
    CHECK(rad == doctest::Approx(0.5).epsilon(1e-10));
  }
  // X3 grows linearly along x: drift -2 per unit x.
  CHECK(std::abs(chart.drift_x[2] + 2.0) <= 1e-12);
}

TEST_CASE("zero spinors give a zero, flagged chart") {
  auto g = open_square(9);
  Potential zero(ScalarField::constant(g, 0.0), SystemKind::euclidean);
  auto s = make_solution(zero, ScalarField(g), ScalarField(g), "zero");
  auto chart = build_r3(s);
  for (const auto& X : chart.coords) CHECK(max_abs(X) == 0.0);
  CHECK(chart.masked_fraction() == 1.0);
  CHECK_FALSE(chart.warnings.empty());
}

TEST_CASE("r4 reduces to r3 when both solutions coincide") {
  auto sp = solved_pair(torus(32), 0.1, 1e-11);
  auto r3 = build_r3(sp.s1);
  auto r4 = build_r4(sp.s1, sp.s1);
  REQUIRE(r4.dimension() == 4);
  for (int k = 0; k < 3; ++k) CHECK(max_abs_diff(r3.coords[k], r4.coords[k]) <= 1e-9);
  CHECK(spread(r4.coords[3], ScalarField(r4.grid())) <= 1e-9);

  auto neg = combine(sp.p, -1.0, sp.s1, 0.0, sp.s1);
  auto r4n = build_r4(sp.s1, neg);
  CHECK(spread(r4n.coords[3], ScalarField(r4n.grid())) <= 1e-9);

  Potential other(ScalarField::constant(torus(32), 0.0), SystemKind::euclidean);
  auto foreign = solve_fixed_point(other, constant_seed(torus(32), 1.0, 0.0));
  CHECK_THROWS_AS(build_r4(sp.s1, foreign), PotentialMismatch);
  CHECK_THROWS_AS(build_split22(sp.s1, sp.s2), KindMismatch);
}

TEST_CASE("charts are real and covariant under a change of base point") {
  auto sp = solved_pair(torus(32), 0.2, 1e-11);
  auto a = build_r4(sp.s1, sp.s2);
  BuildOptions opt;
  opt.base = {7, 19};
  auto b = build_r4(sp.s1, sp.s2, opt);
  CHECK(a.imaginary_residue <= 1e-10);
  for (int k = 0; k < 4; ++k) {
    CHECK(a.coords[k].is_real());
    CHECK(spread(a.coords[k], b.coords[k]) <= 1e-9);
    CHECK(b.coords[k](7, 19) == 0.0);
  }

  auto g = open_square(41);
  auto m = analytic_family(g, SystemKind::euclidean, MinimalFamily{{0.0, 1.0}, {1.0}});
  auto m2 = analytic_family(g, SystemKind::euclidean, MinimalFamily{{1.0}, {0.0, 1.0}});
  m2.solutions[0].potential_tag = m.solutions[0].potential_tag;
  auto ca = build_r4(m.solutions[0], m2.solutions[0]);
  opt.base = {20, 3};
  auto cb = build_r4(m.solutions[0], m2.solutions[0], opt);
  opt.order = PathOrder::column_first;
  auto cc = build_r4(m.solutions[0], m2.solutions[0], opt);
  for (int k = 0; k < 4; ++k) {
    CHECK(spread(ca.coords[k], cb.coords[k]) <= 1e-9);
    CHECK(max_abs_diff(cb.coords[k], cc.coords[k]) <= 1e-9);
  }
}

TEST_CASE("closedness residual tracks the solver tolerance") {
  std::vector<double> res;
  for (double tol : {1e-6, 1e-8, 1e-10}) {
    auto sp = solved_pair(torus(32), 0.3, tol);
    auto c = build_r4(sp.s1, sp.s2);
    res.push_back(*std::max_element(c.closedness.begin(), c.closedness.end()));
    CHECK(res.back() <= 10 * std::max(sp.s1.residual_norm, sp.s2.residual_norm));
  }
  CHECK(res[0] > res[1]);
  CHECK(res[1] > res[2]);
}

TEST_CASE("split chart and its degeneracy") {
  auto g = open_square(65);
  auto r = analytic_family(g, SystemKind::split,
                           ExponentialFamily{1.0, {{2.0, 0.5}, {0.5, 2.0}}});
  auto chart = build_split22(r.solutions[0], r.solutions[1]);
  CHECK(chart.dimension() == 4);
  CHECK(chart.masked_fraction() == 0.0);
  CHECK(chart.imaginary_residue <= 1e-10);
  CHECK(chart.ambient.metric_signature(4) == std::vector<double>{1, 1, -1, -1});

  auto deg = analytic_family(g, SystemKind::split, ExponentialFamily{1.0, {{1.0, 1.0}}});
  auto dchart = build_split22(deg.solutions[0], deg.solutions[0]);
  CHECK(dchart.masked_fraction() == 1.0);
  bool warned = false;
  for (const auto& w : dchart.warnings) warned = warned || w.find("DegenerateMetric") == 0;
  CHECK(warned);
}

TEST_CASE("stacked charts") {
  auto sp = solved_pair(torus(32), 0.1, 1e-11);
  std::vector<SpinorSolution> sols{sp.s1, sp.s2};
  auto one = build_stacked(sols, {{0}});
  auto r3 = build_r3(sp.s1);
  REQUIRE(one.dimension() == 3);
  for (int k = 0; k < 3; ++k) CHECK(max_abs_diff(one.coords[k], r3.coords[k]) == 0.0);
  CHECK(build_stacked(sols, {{0}, {1}}).dimension() == 6);
  CHECK(build_stacked(sols, {{0}, {1}, {0, 1}}).dimension() == 10);
  CHECK_THROWS_AS(build_stacked(sols, {}), EmptyPlan);
  CHECK_THROWS_AS(build_stacked(sols, {{2}}), ShapeMismatch);
}

TEST_CASE("complex charts in C^N") {
  auto sp = solved_pair(torus(32), 0.2, 1e-11);
  auto single = build_cn({sp.s1}, {{{1.0}}});
  CHECK(single.dimension() == 1);
  CHECK(single.closedness[0] <= 1e-8);
  CHECK_FALSE(single.coords[0].is_real());

  auto zero = build_cn({sp.s1}, {{{0.0}}});
  CHECK(max_abs(zero.coords[0]) == 0.0);

  CoefficientTensor A{{{1.0, cplx(0.3, 0.2)}, {cplx(0.3, 0.2), -0.5}},
                      {{cplx(0.1, -1.0), 0.7}, {0.7, 2.0}},
                      {{0.0, I}, {I, 0.4}}};
  auto chart = build_cn({sp.s1, sp.s2}, A);
  REQUIRE(chart.dimension() == 3);
  ScalarField gzz(chart.grid()), formula(chart.grid());
  for (int k = 0; k < 3; ++k) {
    auto xz = chart.dz(k);
    gzz += xz * xz;
    formula += chart.forms[k].a * chart.forms[k].a;
    CHECK(chart.closedness[k] <= 1e-8);
  }
  CHECK(max_abs_diff(gzz, formula) <= 1e-8 * (1.0 + max_abs(formula)));
  CHECK_THROWS_AS(build_cn({sp.s1, sp.s2}, {{{1.0}}}), ShapeMismatch);
}

TEST_CASE("matrix charts on GL(M,C)") {
  auto g = torus(32);
  auto a = solved_pair(g, 0.1, 1e-10);
  Potential p2(ScalarField::real_part(ScalarField::sample(
                   g, [](cplx z) { return 0.15 * std::sin(z.imag()); })),
               SystemKind::euclidean);
  auto b1 = solve_fixed_point(p2, constant_seed(g, 1.0, 0.5), 1e-10);
  auto b2 = solve_fixed_point(p2, constant_seed(g, -0.5, 1.0), 1e-10);
  auto chart = build_glm({{a.s1, a.s2}, {b1, b2}}, {1.0, cplx(0.5, 0.5)});
  REQUIRE(chart.dimension() == 4);
  for (double c : chart.closedness) CHECK(c <= 1e-7);
  CHECK(chart.invertible_fraction >= 0.0);

  auto scalar = build_glm({{a.s1}}, {1.0});
  auto cn = build_cn({a.s1}, {{{1.0}}});
  CHECK(max_abs_diff(scalar.coords[0], cn.coords[0]) == 0.0);
  auto zero = build_glm({{a.s1, a.s2}}, {0.0});
  for (const auto& X : zero.coords) CHECK(max_abs(X) == 0.0);
  CHECK(zero.invertible_fraction == 0.0);
  CHECK_THROWS_AS(build_glm({{a.s1, a.s2}, {b1}}, {1.0, 1.0}), ShapeMismatch);
}

TEST_CASE("ambient specs") {
  CHECK_THROWS_AS(AmbientSpec::s4(0.0), ConfigError);
  CHECK(AmbientSpec::s4(1.0).tag == AmbientTag::conformal4);
  CHECK(ambient_tag_from_string("s4") == AmbientTag::conformal4);
  CHECK_THROWS_AS(ambient_tag_from_string("r5"), ConfigError);
  CHECK(AmbientSpec::minkowski4().metric_signature(4) == std::vector<double>{1, 1, 1, -1});
  auto chart = build_r3(enneper_seed(open_square(9)));
  CHECK_THROWS_AS(with_ambient(chart, AmbientSpec::minkowski4()), KindMismatch);
}

TEST_CASE("OBJ and CSV export") {
  auto chart = build_r3(enneper_seed(open_square(5)));
  std::ostringstream obj;
  write_chart_obj(obj, chart, {0, 1, 2}, "deadbeef");
  std::istringstream in(obj.str());
  std::string line;
  int v = 0, f = 0;
  std::size_t max_index = 0;
  while (std::getline(in, line)) {
    if (line.rfind("v ", 0) == 0) ++v;
    if (line.rfind("f ", 0) == 0) {
      ++f;
      std::istringstream ls(line.substr(2));
      std::size_t a, b, c;
      ls >> a >> b >> c;
      CHECK(std::min({a, b, c}) >= 1);
      max_index = std::max({max_index, a, b, c});
    }
  }
  CHECK(v == 25);
  CHECK(f == 2 * 4 * 4);
  CHECK(max_index == 25);
  CHECK(obj.str().find("# config_hash=deadbeef") != std::string::npos);
  std::ostringstream bad;
  CHECK_THROWS_AS(write_chart_obj(bad, chart, {0, 1, 3}), ShapeMismatch);

  std::stringstream csv;
  write_chart_csv(csv, chart, "deadbeef");
  auto back = read_chart_csv(csv);
  REQUIRE(back.size() == 3);
  for (int k = 0; k < 3; ++k) CHECK(max_abs_diff(back[k], chart.coords[k]) == 0.0);

  std::stringstream broken("# nx,ny,x0,y0,lx,ly,boundary_mode,kind\n# 5,5,0,0,1,1,open,real\n0,0,1,2\n");
  CHECK_THROWS_AS(read_chart_csv(broken), ParseError);
}
