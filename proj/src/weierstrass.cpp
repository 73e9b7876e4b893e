#include "wforge/weierstrass.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include "wforge/error.hpp"
#include "wforge/field_io.hpp"

namespace wforge {

namespace {

constexpr cplx I{0.0, 1.0};

std::shared_ptr<const SpinorSolution> share(const SpinorSolution& s) {
  return std::make_shared<const SpinorSolution>(s);
}

void require(const SpinorSolution& s, SystemKind kind, const char* who) {
  if (s.kind != kind)
    throw KindMismatch(std::string(who) + " needs " + to_string(kind) +
                       " solutions, got " + to_string(s.kind));
}

void require_shared_potential(const SpinorSolution& a, const SpinorSolution& b) {
  require_same_grid(a.psi, b.psi);
  if (a.potential_tag != b.potential_tag)
    throw PotentialMismatch("solutions '" + a.label + "' and '" + b.label +
                            "' were built against different potentials");
}

class ChartBuilder {
 public:
  ChartBuilder(AmbientSpec ambient, const BuildOptions& opt) : opt_(opt) {
    chart_.ambient = std::move(ambient);
  }

  void add(ScalarField a, ScalarField b, bool real) {
    OneForm w(std::move(a), std::move(b));
    auto r = reconstruct_from_form(w, opt_.base, opt_.order);
    if (real) {
      const double scale = 1.0 + max_abs(r.X);
      chart_.imaginary_residue =
          std::max(chart_.imaginary_residue, max_imag(r.X) / scale);
      r.X = ScalarField::real_part(r.X);
      r.drift_x = r.drift_x.real();
      r.drift_y = r.drift_y.real();
    }
    chart_.coords.push_back(std::move(r.X));
    chart_.forms.push_back(std::move(w));
    scale_ = std::max(scale_, r.closedness_scale);
    chart_.curl_max.push_back(r.curl_max);
    chart_.drift_x.push_back(r.drift_x);
    chart_.drift_y.push_back(r.drift_y);
  }

  /// Adds dX = a dz + conj(a) dzbar.
  void add_real(const ScalarField& a) { add(a, conj(a), true); }

  void source(const SpinorSolution& s) { chart_.sources.push_back(share(s)); }

  /// Marks points where `factor` is at or below the threshold.
  void mask_from(const ScalarField& factor) {
    chart_.mask.assign(factor.size(), false);
    std::size_t n = 0;
    for (std::size_t k = 0; k < factor.size(); ++k)
      if (std::abs(factor[k]) <= opt_.degeneracy_threshold) {
        chart_.mask[k] = true;
        ++n;
      }
    if (n == factor.size())
      chart_.warnings.push_back("degenerate chart: conformal factor vanishes everywhere");
    else if (n > 0)
      chart_.warnings.push_back("degenerate points: " + std::to_string(n) + " of " +
                                std::to_string(factor.size()));
  }

  SurfaceChart finish() {
    // Closedness is measured against the largest form in the chart, so a
    // coordinate whose form is numerically zero does not report noise as 2.
    for (double c : chart_.curl_max)
      chart_.closedness.push_back(scale_ > 0.0 ? 0.5 * c / scale_ : 0.0);
    if (chart_.mask.empty()) chart_.mask.assign(chart_.coords.at(0).size(), false);
    if (chart_.imaginary_residue > 1e-10)
      chart_.warnings.push_back("imaginary residue " +
                                format_double(chart_.imaginary_residue) +
                                " stripped from real coordinates");
    return std::move(chart_);
  }

 private:
  BuildOptions opt_;
  SurfaceChart chart_;
  double scale_ = 0.0;
};

void add_r3_forms(ChartBuilder& b, const SpinorSolution& s) {
  auto psib = conj(s.psi);
  b.add_real((0.5 * I) * (psib * psib + s.phi * s.phi));
  b.add_real(0.5 * (psib * psib - s.phi * s.phi));
  b.add_real(-1.0 * (psib * s.phi));
}

void add_r4_forms(ChartBuilder& b, const SpinorSolution& s1,
                  const SpinorSolution& s2, bool split) {
  auto pb1 = conj(s1.psi), pb2 = conj(s2.psi);
  auto pp = pb1 * pb2;
  auto ff = s1.phi * s2.phi;
  if (!split) {
    b.add_real((0.5 * I) * (pp + ff));
    b.add_real(0.5 * (pp - ff));
  } else {
    b.add_real((0.5 * I) * (pp - ff));
    b.add_real(0.5 * (pp + ff));
  }
  b.add_real(-0.5 * (pb1 * s2.phi + pb2 * s1.phi));
  b.add_real((0.5 * I) * (pb1 * s2.phi - pb2 * s1.phi));
}

}  // namespace

std::string to_string(AmbientTag t) {
  switch (t) {
    case AmbientTag::r3: return "r3";
    case AmbientTag::r4: return "r4";
    case AmbientTag::split22: return "split22";
    case AmbientTag::minkowski4: return "minkowski4";
    case AmbientTag::conformal4: return "conformal4";
    case AmbientTag::stacked: return "stacked";
    case AmbientTag::cn: return "cn";
    case AmbientTag::glm: return "glm";
  }
  return "?";
}

AmbientTag ambient_tag_from_string(const std::string& s) {
  for (auto t : {AmbientTag::r3, AmbientTag::r4, AmbientTag::split22,
                 AmbientTag::minkowski4, AmbientTag::conformal4,
                 AmbientTag::stacked, AmbientTag::cn, AmbientTag::glm})
    if (to_string(t) == s) return t;
  if (s == "s4") return AmbientTag::conformal4;
  throw ConfigError("unknown ambient '" + s + "'");
}

AmbientSpec AmbientSpec::s4(double K0) {
  if (!(K0 > 0.0)) throw ConfigError("s4 ambient needs K0 > 0");
  auto a = AmbientSpec::of(AmbientTag::conformal4);
  a.K0 = K0;
  return a;
}

AmbientSpec AmbientSpec::conformal(ScalarField sigma) {
  auto a = AmbientSpec::of(AmbientTag::conformal4);
  a.sigma = ScalarField::real_part(sigma);
  return a;
}

std::vector<double> AmbientSpec::metric_signature(int dimension) const {
  std::vector<double> g(dimension, 1.0);
  if (tag == AmbientTag::split22 && dimension == 4) g[2] = g[3] = -1.0;
  if (tag == AmbientTag::minkowski4 && dimension == 4) g[3] = -1.0;
  return g;
}

ScalarField u_factor(const SpinorSolution& s) { return abs2(s.psi) + abs2(s.phi); }

double SurfaceChart::masked_fraction() const {
  if (mask.empty()) return 0.0;
  return static_cast<double>(std::count(mask.begin(), mask.end(), true)) /
         mask.size();
}

ScalarField SurfaceChart::dz(int k) const {
  return d_z_drifting(coords.at(k), drift_x.at(k), drift_y.at(k));
}

ScalarField SurfaceChart::dzbar(int k) const {
  return d_zbar_drifting(coords.at(k), drift_x.at(k), drift_y.at(k));
}

SurfaceChart build_r3(const SpinorSolution& s, const BuildOptions& opt) {
  require(s, SystemKind::euclidean, "build_r3");
  ChartBuilder b(AmbientSpec::r3(), opt);
  add_r3_forms(b, s);
  b.source(s);
  auto u = u_factor(s);
  b.mask_from(u * u);
  return b.finish();
}

SurfaceChart build_r4(const SpinorSolution& s1, const SpinorSolution& s2,
                      const BuildOptions& opt) {
  require(s1, SystemKind::euclidean, "build_r4");
  require(s2, SystemKind::euclidean, "build_r4");
  require_shared_potential(s1, s2);
  ChartBuilder b(AmbientSpec::r4(), opt);
  add_r4_forms(b, s1, s2, false);
  b.source(s1);
  b.source(s2);
  b.mask_from(u_factor(s1) * u_factor(s2));
  return b.finish();
}

SurfaceChart build_split22(const SpinorSolution& s1, const SpinorSolution& s2,
                           const BuildOptions& opt) {
  require(s1, SystemKind::split, "build_split22");
  require(s2, SystemKind::split, "build_split22");
  require_shared_potential(s1, s2);
  ChartBuilder b(AmbientSpec::split22(), opt);
  add_r4_forms(b, s1, s2, true);
  b.source(s1);
  b.source(s2);
  auto v = (abs2(s1.psi) - abs2(s1.phi)) * (abs2(s2.psi) - abs2(s2.phi));
  b.mask_from(v);
  auto finished = b.finish();
  if (finished.masked_fraction() > 0.0)
    finished.warnings.push_back("DegenerateMetric: v = 0 at some points");
  return finished;
}

SurfaceChart build_stacked(const std::vector<SpinorSolution>& sols,
                           const std::vector<StackBlock>& plan,
                           const BuildOptions& opt) {
  if (plan.empty()) throw EmptyPlan("stacked chart needs at least one block");
  for (const auto& s : sols) require(s, SystemKind::euclidean, "build_stacked");
  for (std::size_t k = 1; k < sols.size(); ++k) require_shared_potential(sols[0], sols[k]);
  auto check = [&](int a) {
    if (a < 0 || a >= static_cast<int>(sols.size()))
      throw ShapeMismatch("stacked plan refers to solution " + std::to_string(a + 1) +
                          " but only " + std::to_string(sols.size()) + " are given");
  };
  auto amb = AmbientSpec::of(AmbientTag::stacked);
  amb.plan = plan;
  ChartBuilder b(amb, opt);
  std::optional<ScalarField> factor;
  for (const auto& blk : plan) {
    check(blk.alpha);
    ScalarField term(sols[blk.alpha].grid());
    if (blk.is_quad()) {
      check(blk.beta);
      add_r4_forms(b, sols[blk.alpha], sols[blk.beta], false);
      term = u_factor(sols[blk.alpha]) * u_factor(sols[blk.beta]);
    } else {
      add_r3_forms(b, sols[blk.alpha]);
      auto u = u_factor(sols[blk.alpha]);
      term = u * u;
    }
    factor = factor ? *factor + term : term;
  }
  for (const auto& s : sols) b.source(s);
  b.mask_from(*factor);
  return b.finish();
}

SurfaceChart build_cn(const std::vector<SpinorSolution>& sols,
                      const CoefficientTensor& A, const BuildOptions& opt) {
  if (sols.empty()) throw ShapeMismatch("build_cn needs at least one solution");
  if (A.empty()) throw ShapeMismatch("build_cn needs at least one coordinate");
  const std::size_t K = sols.size();
  for (const auto& s : sols)
    if (s.kind == SystemKind::split)
      throw KindMismatch("build_cn needs euclidean or complex_p solutions");
  for (std::size_t k = 1; k < K; ++k) require_shared_potential(sols[0], sols[k]);
  for (const auto& Ag : A) {
    if (Ag.size() != K) throw ShapeMismatch("A^gamma must be K x K");
    for (const auto& row : Ag)
      if (row.size() != K) throw ShapeMismatch("A^gamma must be K x K");
  }
  ChartBuilder b(AmbientSpec::of(AmbientTag::cn), opt);
  const auto& g = sols[0].grid();
  for (const auto& Ag : A) {
    ScalarField a(g), bb(g);
    for (std::size_t al = 0; al < K; ++al)
      for (std::size_t be = 0; be < K; ++be) {
        if (Ag[al][be] == 0.0) continue;
        a -= Ag[al][be] * (sols[al].phi * sols[be].phi);
        bb += Ag[al][be] * (sols[al].psi * sols[be].psi);
      }
    b.add(a, bb, false);
  }
  for (const auto& s : sols) b.source(s);
  auto chart = b.finish();
  bool all_zero = true;
  for (const auto& X : chart.coords) all_zero = all_zero && max_abs(X) == 0.0;
  if (all_zero) chart.warnings.push_back("degenerate chart: all coordinates vanish");
  return chart;
}

double glm_invertible_fraction(const SurfaceChart& chart, int M) {
  if (chart.dimension() != M * M) throw ShapeMismatch("chart is not M x M");
  const auto& g = chart.grid();
  std::size_t good = 0;
  Eigen::MatrixXcd X(M, M);
  for (std::size_t k = 0; k < g.size(); ++k) {
    for (int a = 0; a < M; ++a)
      for (int b = 0; b < M; ++b) X(a, b) = chart.coords[a * M + b][k];
    Eigen::JacobiSVD<Eigen::MatrixXcd> svd(X);
    const auto& s = svd.singularValues();
    const double smax = s(0), smin = s(M - 1);
    if (smin > 0.0 && smax / smin < 1e8) ++good;
  }
  return static_cast<double>(good) / g.size();
}

SurfaceChart build_glm(const std::vector<std::vector<SpinorSolution>>& sol_sets,
                       const std::vector<cplx>& B, const BuildOptions& opt) {
  if (sol_sets.empty()) throw ShapeMismatch("build_glm needs at least one potential");
  if (B.size() != sol_sets.size())
    throw ShapeMismatch("build_glm: one weight per potential is required");
  const std::size_t M = sol_sets[0].size();
  if (M == 0) throw ShapeMismatch("build_glm: empty solution set");
  for (const auto& set : sol_sets) {
    if (set.size() != M) throw ShapeMismatch("build_glm: every set needs M solutions");
    for (std::size_t k = 1; k < M; ++k) require_shared_potential(set[0], set[k]);
    for (const auto& s : set) require_same_grid(s.psi, sol_sets[0][0].psi);
  }
  auto amb = AmbientSpec::of(AmbientTag::glm);
  amb.M = static_cast<int>(M);
  ChartBuilder b(amb, opt);
  const auto& g = sol_sets[0][0].grid();
  for (std::size_t al = 0; al < M; ++al)
    for (std::size_t be = 0; be < M; ++be) {
      ScalarField a(g), bb(g);
      for (std::size_t i = 0; i < sol_sets.size(); ++i) {
        const auto& s = sol_sets[i];
        a -= B[i] * (s[al].phi * s[be].phi);
        bb += B[i] * (s[al].psi * s[be].psi);
      }
      b.add(a, bb, false);
    }
  for (const auto& set : sol_sets)
    for (const auto& s : set) b.source(s);
  auto chart = b.finish();
  chart.invertible_fraction = glm_invertible_fraction(chart, static_cast<int>(M));
  if (chart.invertible_fraction < 1.0)
    chart.warnings.push_back("matrix singular or ill-conditioned at " +
                             format_double(100.0 * (1.0 - chart.invertible_fraction)) +
                             "% of points");
  return chart;
}

SurfaceChart with_ambient(SurfaceChart chart, AmbientSpec ambient) {
  if (chart.ambient.tag != AmbientTag::r4 || chart.dimension() != 4)
    throw KindMismatch("only r4 charts can be placed in another 4-dimensional ambient");
  if (ambient.tag != AmbientTag::minkowski4 && ambient.tag != AmbientTag::conformal4 &&
      ambient.tag != AmbientTag::r4)
    throw KindMismatch("target ambient must be r4, minkowski4 or conformal4");
  if (ambient.sigma) require_same_grid(*ambient.sigma, chart.coords[0]);
  chart.ambient = std::move(ambient);
  return chart;
}

// ---------------------------------------------------------------------------

void write_obj(std::ostream& out, const std::vector<ScalarField>& coords,
               std::array<int, 3> triple, const std::string& config_hash) {
  for (int t : triple)
    if (t < 0 || t >= static_cast<int>(coords.size()))
      throw ShapeMismatch("OBJ projection index out of range");
  const auto& g = coords.at(0).grid();
  if (!config_hash.empty()) out << "# config_hash=" << config_hash << '\n';
  out << "# projection " << triple[0] + 1 << ',' << triple[1] + 1 << ','
      << triple[2] + 1 << '\n';
  for (int i = 0; i < g.nx(); ++i)
    for (int j = 0; j < g.ny(); ++j) {
      out << 'v';
      for (int t : triple) out << ' ' << format_double(coords[t](i, j).real());
      out << '\n';
    }
  auto vid = [&](int i, int j) { return g.index(i, j) + 1; };
  for (int i = 0; i + 1 < g.nx(); ++i)
    for (int j = 0; j + 1 < g.ny(); ++j) {
      out << "f " << vid(i, j) << ' ' << vid(i + 1, j) << ' ' << vid(i + 1, j + 1) << '\n';
      out << "f " << vid(i, j) << ' ' << vid(i + 1, j + 1) << ' ' << vid(i, j + 1) << '\n';
    }
}

void write_chart_obj(std::ostream& out, const SurfaceChart& chart,
                     std::array<int, 3> triple, const std::string& config_hash) {
  write_obj(out, chart.coords, triple, config_hash);
}

void write_chart_obj(const std::string& path, const SurfaceChart& chart,
                     std::array<int, 3> triple, const std::string& config_hash) {
  std::ofstream out(path);
  if (!out) throw Error("cannot open '" + path + "' for writing");
  write_chart_obj(out, chart, triple, config_hash);
}

void write_chart_csv(std::ostream& out, const SurfaceChart& chart,
                     const std::string& config_hash) {
  const auto& g = chart.grid();
  const bool cx = chart.ambient.complex_coordinates();
  out << "# nx,ny,x0,y0,lx,ly,boundary_mode,kind\n";
  out << "# " << g.nx() << ',' << g.ny() << ',' << format_double(g.x0()) << ','
      << format_double(g.y0()) << ',' << format_double(g.lx()) << ','
      << format_double(g.ly()) << ',' << to_string(g.mode()) << ','
      << (cx ? "complex" : "real") << '\n';
  if (!config_hash.empty()) out << "# config_hash=" << config_hash << '\n';
  out << "# ambient=" << to_string(chart.ambient.tag) << '\n';
  out << "# i,j";
  for (int k = 0; k < chart.dimension(); ++k) {
    if (cx)
      out << ",X" << k + 1 << "_re,X" << k + 1 << "_im";
    else
      out << ",X" << k + 1;
  }
  out << '\n';
  for (int i = 0; i < g.nx(); ++i)
    for (int j = 0; j < g.ny(); ++j) {
      out << i << ',' << j;
      for (const auto& X : chart.coords) {
        out << ',' << format_double(X(i, j).real());
        if (cx) out << ',' << format_double(X(i, j).imag());
      }
      out << '\n';
    }
}

void write_chart_csv(const std::string& path, const SurfaceChart& chart,
                     const std::string& config_hash) {
  std::ofstream out(path);
  if (!out) throw Error("cannot open '" + path + "' for writing");
  write_chart_csv(out, chart, config_hash);
}

std::vector<ScalarField> read_chart_csv(std::istream& in, const std::string& name) {
  std::string header, desc, line;
  std::getline(in, header);
  std::getline(in, desc);
  auto [g, kind] = parse_grid_header(header, desc, name);
  const bool cx = kind == FieldKind::complex;
  int lineno = 2;
  std::vector<std::vector<cplx>> values;
  std::vector<bool> seen(g.size(), false);
  std::size_t count = 0;
  int dim = -1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty() || line[0] == '#') continue;
    const std::string where = name + ":" + std::to_string(lineno);
    auto row = parse_number_row(line, where);
    const int ncols = static_cast<int>(row.size()) - 2;
    if (ncols < 1 || (cx && ncols % 2 != 0))
      throw ParseError(where + ": expected i,j followed by coordinates");
    const int d = cx ? ncols / 2 : ncols;
    if (dim < 0) {
      dim = d;
      values.assign(d, std::vector<cplx>(g.size()));
    } else if (d != dim) {
      throw ParseError(where + ": inconsistent column count");
    }
    const double fi = row[0], fj = row[1];
    if (fi != std::floor(fi) || fj != std::floor(fj) || fi < 0 || fj < 0 ||
        fi >= g.nx() || fj >= g.ny())
      throw ParseError(where + ": bad grid index");
    const std::size_t k = g.index(static_cast<int>(fi), static_cast<int>(fj));
    if (seen[k]) throw ParseError(where + ": duplicate sample");
    seen[k] = true;
    ++count;
    for (int c = 0; c < d; ++c)
      values[c][k] = cx ? cplx(row[2 + 2 * c], row[3 + 2 * c]) : cplx(row[2 + c]);
  }
  if (count != g.size())
    throw ParseError(name + ": expected " + std::to_string(g.size()) +
                     " samples, found " + std::to_string(count));
  std::vector<ScalarField> out;
  for (auto& v : values)
    out.emplace_back(g, std::move(v), cx ? FieldKind::complex : FieldKind::real);
  return out;
}

std::vector<ScalarField> read_chart_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open '" + path + "'");
  return read_chart_csv(in, path);
}

}  // namespace wforge
