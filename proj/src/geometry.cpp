#include "wforge/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <nlohmann/json.hpp>

#include "wforge/error.hpp"
#include "wforge/field_io.hpp"
#include "wforge/operators.hpp"

namespace wforge {

namespace {

constexpr cplx I{0.0, 1.0};
constexpr double kMetricFloor = 1e-12;

ScalarField real_of(const ScalarField& f) { return ScalarField::real_part(f); }

const SpinorSolution& source(const SurfaceChart& c, std::size_t k) {
  if (c.sources.size() <= k || !c.sources[k])
    throw ShapeMismatch("chart has no spinor source " + std::to_string(k + 1));
  return *c.sources[k];
}

bool is_complex_chart(const SurfaceChart& c) { return c.ambient.complex_coordinates(); }

void require_real_chart(const SurfaceChart& c, const char* who) {
  if (is_complex_chart(c))
    throw KindMismatch(std::string(who) + ": not defined for complex charts (" +
                       to_string(c.ambient.tag) + ")");
}

// Weight e^{2 sigma} for conformal charts, 1 otherwise.
std::optional<ScalarField> conformal_weight(const SurfaceChart& c) {
  if (c.ambient.tag != AmbientTag::conformal4) return std::nullopt;
  return map(ambient_sigma(c), [](cplx s) { return std::exp(2.0 * s.real()); });
}

ScalarField second_zzbar(const SurfaceChart& c, int k) { return d_zbar(c.dz(k)); }

std::vector<bool> merge_mask(const std::vector<bool>& base, const ScalarField& f,
                             double threshold) {
  std::vector<bool> m(f.size(), false);
  for (std::size_t k = 0; k < f.size(); ++k)
    m[k] = (!base.empty() && base[k]) || !(std::abs(f[k]) > threshold);
  return m;
}

std::pair<double, double> minmax_off(const ScalarField& f, const std::vector<bool>& mask) {
  double lo = std::numeric_limits<double>::infinity(), hi = -lo;
  for (std::size_t k = 0; k < f.size(); ++k) {
    if (!mask.empty() && mask[k]) continue;
    lo = std::min(lo, f[k].real());
    hi = std::max(hi, f[k].real());
  }
  if (lo > hi) return {0.0, 0.0};
  return {lo, hi};
}

double fraction(const std::vector<bool>& mask) {
  if (mask.empty()) return 0.0;
  return static_cast<double>(std::count(mask.begin(), mask.end(), true)) / mask.size();
}

bool all_masked(const std::vector<bool>& mask) {
  return !mask.empty() && std::all_of(mask.begin(), mask.end(), [](bool b) { return b; });
}

// The four components of the mean curvature vector, without the 2p/(u1 u2)
// prefactor.
std::vector<ScalarField> h_vector_shape(const SpinorSolution& s1, const SpinorSolution& s2) {
  auto S = s1.psi * s2.phi + s2.psi * s1.phi;
  auto T = s1.psi * conj(s2.psi) - s1.phi * conj(s2.phi);
  return {real_of(-I * S), real_of(S), real_of(T), real_of(I * T)};
}

double conformality_violation(const MetricSample& g, const std::vector<bool>& mask) {
  double m = 0.0;
  for (std::size_t k = 0; k < g.g_zz.size(); ++k) {
    if (!mask.empty() && mask[k]) continue;
    const double den = std::abs(g.g_zzbar[k]);
    if (den > 0.0) m = std::max(m, std::abs(g.g_zz[k]) / den);
  }
  return m;
}

}  // namespace

MetricSample induced_metric(const SurfaceChart& chart) {
  const auto& g = chart.grid();
  const int d = chart.dimension();
  const auto sig = chart.ambient.metric_signature(d);
  ScalarField gzz(g), gzzb(g), gzbzb(g);
  for (int k = 0; k < d; ++k) {
    auto xz = chart.dz(k);
    auto xzb = chart.dzbar(k);
    gzz += sig[k] * (xz * xz);
    gzzb += sig[k] * (xz * xzb);
    gzbzb += sig[k] * (xzb * xzb);
  }
  if (auto w = conformal_weight(chart)) {
    gzz *= *w;
    gzzb *= *w;
    gzbzb *= *w;
  }
  if (!is_complex_chart(chart)) gzzb = real_of(gzzb);
  return {std::move(gzz), std::move(gzzb), std::move(gzbzb)};
}

MetricSample formula_metric(const SurfaceChart& chart) {
  const auto& g = chart.grid();
  ScalarField zero(g, FieldKind::real);
  switch (chart.ambient.tag) {
    case AmbientTag::r3: {
      auto u = u_factor(source(chart, 0));
      return {zero, 0.5 * (u * u), zero};
    }
    case AmbientTag::r4:
    case AmbientTag::conformal4: {
      auto gzzb = 0.5 * (u_factor(source(chart, 0)) * u_factor(source(chart, 1)));
      if (auto w = conformal_weight(chart)) gzzb *= *w;
      return {zero, gzzb, zero};
    }
    case AmbientTag::split22: {
      const auto& s1 = source(chart, 0);
      const auto& s2 = source(chart, 1);
      auto v = (abs2(s1.psi) - abs2(s1.phi)) * (abs2(s2.psi) - abs2(s2.phi));
      return {zero, 0.5 * v, zero};
    }
    case AmbientTag::minkowski4: {
      const auto& s1 = source(chart, 0);
      const auto& s2 = source(chart, 1);
      auto diff = conj(s1.psi) * s2.phi - conj(s2.psi) * s1.phi;
      auto gzz = 0.5 * (diff * diff);
      auto gzzb = 0.5 * (u_factor(s1) * u_factor(s2)) - 0.5 * abs2(diff);
      return {gzz, gzzb, conj(gzz)};
    }
    case AmbientTag::stacked: {
      ScalarField f(g, FieldKind::real);
      for (const auto& blk : chart.ambient.plan) {
        auto ua = u_factor(source(chart, blk.alpha));
        f += blk.is_quad() ? ua * u_factor(source(chart, blk.beta)) : ua * ua;
      }
      return {zero, 0.5 * f, zero};
    }
    case AmbientTag::cn:
    case AmbientTag::glm: {
      ScalarField gzz(g), gzzb(g), gzbzb(g);
      for (const auto& w : chart.forms) {
        gzz += w.a * w.a;
        gzzb += w.a * w.b;
        gzbzb += w.b * w.b;
      }
      return {gzz, gzzb, gzbzb};
    }
  }
  throw KindMismatch("formula_metric: unknown ambient");
}

LineElement line_element(const MetricSample& g) {
  auto re = real_of(g.g_zz);
  auto im = real_of(-I * g.g_zz);
  auto two_gzzb = 2.0 * real_of(g.g_zzbar);
  return {two_gzzb + 2.0 * re, -2.0 * im, two_gzzb - 2.0 * re};
}

ScalarField ambient_sigma(const SurfaceChart& chart) {
  if (chart.ambient.tag != AmbientTag::conformal4)
    throw KindMismatch("ambient_sigma needs a conformal4 chart");
  if (chart.ambient.sigma) return *chart.ambient.sigma;
  const double K0 = chart.ambient.K0;
  ScalarField r2(chart.grid(), FieldKind::real);
  for (const auto& X : chart.coords) r2 += X * X;
  return real_of(map(r2, [K0](cplx v) { return -std::log1p(0.25 * K0 * v.real()); }));
}

Normals normals_r4(const SpinorSolution& s1, const SpinorSolution& s2, double threshold) {
  require_same_grid(s1.psi, s2.psi);
  const auto& g = s1.grid();
  Normals n;
  n.N1.assign(4, ScalarField(g, FieldKind::real));
  n.N2.assign(4, ScalarField(g, FieldKind::real));
  n.mask.assign(g.size(), false);
  std::size_t masked = 0;
  for (std::size_t k = 0; k < g.size(); ++k) {
    const cplx p1 = s1.psi[k], f1 = s1.phi[k], p2 = s2.psi[k], f2 = s2.phi[k];
    const double uu = (std::norm(p1) + std::norm(f1)) * (std::norm(p2) + std::norm(f2));
    const double ff = std::norm(f1) * std::norm(f2);
    if (!(ff > threshold) || !(uu > threshold)) {
      n.mask[k] = true;
      ++masked;
      continue;
    }
    const cplx a = p1 / std::conj(f1), b = std::conj(p2) / f2;
    const cplx A[4] = {I * (a - b), -a - b, 1.0 - a * b, -I * (1.0 + a * b)};
    const double c = std::sqrt(ff / uu);
    for (int i = 0; i < 4; ++i) {
      n.N1[i][k] = c * A[i].real();
      n.N2[i][k] = c * A[i].imag();
    }
  }
  if (masked == g.size()) throw AllDegenerate("normals_r4: phi1 phi2 vanishes everywhere");
  return n;
}

MeanCurvature mean_curvature(const SpinorSolution& s1, const SpinorSolution& s2,
                             const Potential& p, const SurfaceChart& chart) {
  require_real_chart(chart, "mean_curvature");
  require_same_grid(s1.psi, chart.coords.at(0));
  require_same_grid(p.p, s1.psi);
  const auto& g = chart.grid();
  const int d = chart.dimension();
  const bool split = chart.ambient.tag == AmbientTag::split22;

  auto metric = induced_metric(chart);
  auto mask = merge_mask(chart.mask, metric.g_zzbar, kMetricFloor);
  if (all_masked(mask)) throw DegenerateMetric("mean_curvature: metric vanishes everywhere");

  MeanCurvature mc{{}, {}, ScalarField(g, FieldKind::real), ScalarField(g, FieldKind::real),
                   ScalarField(g, FieldKind::real), ScalarField(g, FieldKind::real), mask};

  for (int k = 0; k < d; ++k) {
    auto xzz = second_zzbar(chart, k);
    ScalarField h(g, FieldKind::real);
    for (std::size_t i = 0; i < g.size(); ++i)
      if (!mask[i]) h[i] = (xzz[i] / metric.g_zzbar[i]).real();
    mc.H_fd.push_back(std::move(h));
  }

  auto u1 = u_factor(s1), u2 = u_factor(s2);
  auto uu = split ? (abs2(s1.psi) - abs2(s1.phi)) * (abs2(s2.psi) - abs2(s2.phi)) : u1 * u2;
  for (std::size_t i = 0; i < g.size(); ++i)
    if (!mask[i]) mc.H_formula[i] = 2.0 * p.p[i].real() / std::sqrt(std::abs(uu[i].real()));

  if (split) {
    mc.H_vec = mc.H_fd;
    mc.H_scalar = mc.H_formula;
    return mc;
  }

  auto shape = h_vector_shape(s1, s2);
  for (int k = 0; k < d && k < 4; ++k) {
    ScalarField h(g, FieldKind::real);
    for (std::size_t i = 0; i < g.size(); ++i)
      if (!mask[i]) h[i] = 2.0 * p.p[i].real() / uu[i].real() * shape[k][i].real();
    mc.H_vec.push_back(std::move(h));
  }
  for (std::size_t i = 0; i < g.size(); ++i) {
    if (mask[i]) continue;
    const cplx f1 = s1.phi[i], f2 = s2.phi[i];
    const double ff = std::norm(f1) * std::norm(f2);
    const double pv = p.p[i].real();
    if (ff > 1e-8) {
      const cplx w = f1 * std::conj(f2);
      const double D = std::sqrt(uu[i].real() * ff);
      mc.h1[i] = -2.0 * pv * w.real() / D;
      mc.h2[i] = -2.0 * pv * w.imag() / D;
      mc.H_scalar[i] = std::hypot(mc.h1[i].real(), mc.h2[i].real());
    } else {
      double s = 0.0;
      for (const auto& h : mc.H_vec) s += std::norm(h[i]);
      mc.H_scalar[i] = std::sqrt(s);
    }
  }
  return mc;
}

MeanCurvature mean_curvature(const Potential& p, const SurfaceChart& chart) {
  const auto& s1 = source(chart, 0);
  const auto& s2 = chart.sources.size() > 1 && chart.ambient.tag != AmbientTag::r3
                       ? source(chart, 1)
                       : s1;
  return mean_curvature(s1, s2, p, chart);
}

GaussCurvature gauss_curvature(const SurfaceChart& chart) {
  require_real_chart(chart, "gauss_curvature");
  if (chart.ambient.tag == AmbientTag::minkowski4)
    throw KindMismatch("gauss_curvature: minkowski4 geometry is limited to the line element");
  const auto& g = chart.grid();
  auto lambda = real_of(2.0 * formula_metric(chart).g_zzbar);
  auto mask = merge_mask(chart.mask, lambda, 1e-8);
  if (all_masked(mask)) throw DegenerateMetric("gauss_curvature: metric vanishes everywhere");

  // Masked points get a floor so that the logarithm stays finite.
  auto loglam = real_of(map(lambda, [](cplx v) {
    return std::log(std::max(std::abs(v.real()), 1e-8));
  }));
  auto lzz = d_zbar(d_z(loglam));
  ScalarField K(g, FieldKind::real);
  for (std::size_t i = 0; i < g.size(); ++i)
    if (!mask[i]) K[i] = -2.0 * lzz[i].real() / lambda[i].real();

  auto le = line_element(induced_metric(chart));
  const auto& E = le.E;
  const auto& F = le.F;
  const auto& G = le.G;
  auto Ex = d_x(E), Ey = d_y(E), Fx = d_x(F), Fy = d_y(F), Gx = d_x(G), Gy = d_y(G);
  auto Eyy = d_y(Ey), Gxx = d_x(Gx), Fxy = d_y(Fx);
  ScalarField Kb(g, FieldKind::real);
  for (std::size_t i = 0; i < g.size(); ++i) {
    if (mask[i]) continue;
    const double e = E[i].real(), f = F[i].real(), gg = G[i].real();
    const double ex = Ex[i].real(), ey = Ey[i].real(), fx = Fx[i].real(),
                 fy = Fy[i].real(), gx = Gx[i].real(), gy = Gy[i].real();
    const double a11 = -0.5 * Eyy[i].real() + Fxy[i].real() - 0.5 * Gxx[i].real();
    const double det1 = a11 * (e * gg - f * f) - 0.5 * ex * ((fy - 0.5 * gx) * gg - f * 0.5 * gy) +
                        (fx - 0.5 * ey) * ((fy - 0.5 * gx) * f - e * 0.5 * gy);
    const double det2 = -0.5 * ey * (0.5 * ey * gg - f * 0.5 * gx) +
                        0.5 * gx * (0.5 * ey * f - e * 0.5 * gx);
    const double den = e * gg - f * f;
    Kb[i] = (det1 - det2) / (den * den);
  }
  return {std::move(K), std::move(Kb), std::move(mask)};
}

double willmore(const Potential& p, AmbientTag tag) {
  const double w = 4.0 * quadrature(p.p * p.p).real();
  return tag == AmbientTag::split22 ? -w : w;
}

double willmore_direct(const SurfaceChart& chart, const std::vector<ScalarField>& H_vec,
                       const std::vector<bool>& mask) {
  require_real_chart(chart, "willmore_direct");
  const auto& g = chart.grid();
  const auto sig = chart.ambient.metric_signature(static_cast<int>(H_vec.size()));
  auto metric = induced_metric(chart);
  auto m = merge_mask(mask.empty() ? chart.mask : mask, metric.g_zzbar, kMetricFloor);
  if (all_masked(m)) throw DegenerateMetric("willmore_direct: metric vanishes everywhere");
  auto w = conformal_weight(chart);
  ScalarField integrand(g, FieldKind::real);
  for (std::size_t i = 0; i < g.size(); ++i) {
    if (m[i]) continue;
    double hh = 0.0;
    for (std::size_t k = 0; k < H_vec.size(); ++k) hh += sig[k] * std::norm(H_vec[k][i]);
    if (w) hh *= (*w)[i].real();
    integrand[i] = hh * 2.0 * metric.g_zzbar[i].real();
  }
  return quadrature(integrand).real();
}

GeometryReport conformal_ambient_geometry(const SurfaceChart& chart, const Potential& p) {
  if (chart.ambient.tag != AmbientTag::conformal4 || chart.dimension() != 4)
    throw KindMismatch("conformal_ambient_geometry needs a conformal4 chart");
  const auto& g = chart.grid();
  const auto& s1 = source(chart, 0);
  const auto& s2 = source(chart, 1);
  require_same_grid(p.p, s1.psi);

  GeometryReport r(g);
  r.ambient = AmbientTag::conformal4;
  r.u_factors = {u_factor(s1), u_factor(s2)};
  r.metric = induced_metric(chart);
  auto sigma = ambient_sigma(chart);
  auto uu = r.u_factors[0] * r.u_factors[1];
  r.mask = merge_mask(chart.mask, uu, 1e-8);

  for (std::size_t i = 0; i < g.size(); ++i)
    if (!r.mask[i])
      r.H_scalar[i] = 2.0 * std::exp(-sigma[i].real()) * p.p[i].real() /
                      std::sqrt(uu[i].real());

  // The Euclidean mean curvature vector and the normal part of grad sigma.
  auto shape = h_vector_shape(s1, s2);
  for (int k = 0; k < 4; ++k) {
    ScalarField h(g, FieldKind::real);
    for (std::size_t i = 0; i < g.size(); ++i)
      if (!r.mask[i]) h[i] = 2.0 * p.p[i].real() / uu[i].real() * shape[k][i].real();
    r.H_vector.push_back(std::move(h));
  }
  if (!chart.ambient.sigma) {
    const double K0 = chart.ambient.K0;
    try {
      auto n = normals_r4(s1, s2);
      ScalarField Hs(g, FieldKind::real);
      for (std::size_t i = 0; i < g.size(); ++i) {
        if (r.mask[i] || n.mask[i]) continue;
        double X2 = 0.0;
        for (const auto& X : chart.coords) X2 += std::norm(X[i]);
        double grad[4];
        for (int k = 0; k < 4; ++k)
          grad[k] = -0.5 * K0 * chart.coords[k][i].real() / (1.0 + 0.25 * K0 * X2);
        double d1 = 0.0, d2 = 0.0;
        for (int k = 0; k < 4; ++k) {
          d1 += grad[k] * n.N1[k][i].real();
          d2 += grad[k] * n.N2[k][i].real();
        }
        double s = 0.0;
        for (int k = 0; k < 4; ++k) {
          const double perp = d1 * n.N1[k][i].real() + d2 * n.N2[k][i].real();
          s += std::pow(r.H_vector[k][i].real() - perp, 2);
        }
        Hs[i] = std::exp(-sigma[i].real()) * std::sqrt(s);
      }
      r.H_with_sigma_gradient = std::move(Hs);
    } catch (const AllDegenerate&) {
      r.warnings.push_back("normals undefined: sigma-gradient correction skipped");
    }
  }

  auto gc = gauss_curvature(chart);
  r.K = gc.K;
  r.K_brioschi = gc.K_brioschi;
  for (std::size_t i = 0; i < g.size(); ++i) r.mask[i] = r.mask[i] || gc.mask[i];

  r.W = willmore(p, AmbientTag::conformal4);
  ScalarField integrand(g, FieldKind::real);
  for (std::size_t i = 0; i < g.size(); ++i)
    if (!r.mask[i]) integrand[i] = std::norm(r.H_scalar[i]) * 2.0 * r.metric.g_zzbar[i].real();
  r.W_direct = quadrature(integrand).real();

  r.masked_fraction = fraction(r.mask);
  r.max_conformality_violation = conformality_violation(r.metric, r.mask);
  r.H_minmax = minmax_off(r.H_scalar, r.mask);
  r.K_minmax = minmax_off(r.K, r.mask);
  r.warnings.insert(r.warnings.end(), chart.warnings.begin(), chart.warnings.end());
  return r;
}

GeometryReport analyze(const SurfaceChart& chart, const Potential& p) {
  require_real_chart(chart, "analyze");
  for (const auto& s : chart.sources)
    if (s && s->potential_tag != p.tag())
      throw PotentialMismatch("chart was built against a different potential");
  if (chart.ambient.tag == AmbientTag::conformal4) return conformal_ambient_geometry(chart, p);

  const auto& g = chart.grid();
  GeometryReport r(g);
  r.ambient = chart.ambient.tag;
  for (const auto& s : chart.sources) r.u_factors.push_back(u_factor(*s));
  r.metric = induced_metric(chart);
  r.warnings = chart.warnings;

  if (chart.ambient.tag == AmbientTag::minkowski4) {
    r.line = line_element(r.metric);
    r.mask = chart.mask;
    r.masked_fraction = fraction(r.mask);
    r.max_conformality_violation = conformality_violation(r.metric, r.mask);
    return r;
  }

  if (chart.ambient.tag == AmbientTag::stacked) {
    r.mask = merge_mask(chart.mask, r.metric.g_zzbar, kMetricFloor);
    if (all_masked(r.mask)) throw DegenerateMetric("analyze: metric vanishes everywhere");
    for (int k = 0; k < chart.dimension(); ++k) {
      auto xzz = second_zzbar(chart, k);
      ScalarField h(g, FieldKind::real);
      for (std::size_t i = 0; i < g.size(); ++i)
        if (!r.mask[i]) h[i] = (xzz[i] / r.metric.g_zzbar[i]).real();
      r.H_vector.push_back(std::move(h));
    }
    for (std::size_t i = 0; i < g.size(); ++i) {
      double s = 0.0;
      for (const auto& h : r.H_vector) s += std::norm(h[i]);
      r.H_scalar[i] = std::sqrt(s);
    }
    r.W_direct = willmore_direct(chart, r.H_vector, r.mask);
  } else {
    auto mc = mean_curvature(p, chart);
    r.mask = mc.mask;
    r.H_scalar = mc.H_scalar;
    r.H_vector = mc.H_vec;
    r.W = willmore(p, chart.ambient.tag);
    r.W_direct = willmore_direct(chart, mc.H_fd, r.mask);
  }

  auto gc = gauss_curvature(chart);
  r.K = gc.K;
  r.K_brioschi = gc.K_brioschi;
  for (std::size_t i = 0; i < g.size(); ++i) r.mask[i] = r.mask[i] || gc.mask[i];

  r.masked_fraction = fraction(r.mask);
  r.max_conformality_violation = conformality_violation(r.metric, r.mask);
  r.H_minmax = minmax_off(r.H_scalar, r.mask);
  r.K_minmax = minmax_off(r.K, r.mask);
  return r;
}

std::string geometry_summary_json(const GeometryReport& r, const std::string& config_hash) {
  nlohmann::json j;
  j["ambient"] = to_string(r.ambient);
  j["W"] = r.W ? nlohmann::json(*r.W) : nlohmann::json();
  j["W_direct"] = r.W_direct ? nlohmann::json(*r.W_direct) : nlohmann::json();
  j["masked_fraction"] = r.masked_fraction;
  j["max_conformality_violation"] = r.max_conformality_violation;
  j["H_minmax"] = {r.H_minmax.first, r.H_minmax.second};
  j["K_minmax"] = {r.K_minmax.first, r.K_minmax.second};
  j["warnings"] = r.warnings;
  if (!config_hash.empty()) j["config_hash"] = config_hash;
  return j.dump(2);
}

void write_geometry_report(const std::string& prefix, const GeometryReport& r,
                           const std::string& config_hash) {
  write_field_csv(prefix + "_H.csv", r.H_scalar, config_hash);
  write_field_csv(prefix + "_K.csv", r.K, config_hash);
  write_field_csv(prefix + "_g.csv", r.metric.g_zzbar, config_hash);
  std::ofstream out(prefix + "_summary.json");
  if (!out) throw Error("cannot open '" + prefix + "_summary.json' for writing");
  out << geometry_summary_json(r, config_hash) << '\n';
}

}  // namespace wforge
