#pragma once

#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "wforge/dirac.hpp"
#include "wforge/grid.hpp"
#include "wforge/weierstrass.hpp"

namespace wforge {

/// ds^2 = g_zz dz^2 + 2 g_zzbar dz dzbar + g_zbarzbar dzbar^2.
struct MetricSample {
  ScalarField g_zz;
  ScalarField g_zzbar;
  ScalarField g_zbarzbar;
};

/// ds^2 = E dx^2 + 2F dx dy + G dy^2.
struct LineElement {
  ScalarField E, F, G;
};

/// Metric from derivatives of the chart's coordinates, contracted with the
/// ambient metric (signature, and e^{2 sigma} for conformal4). Complex
/// charts use the bilinear sums without conjugation.
MetricSample induced_metric(const SurfaceChart& chart);

/// Closed-form metric from the chart's spinor sources.
MetricSample formula_metric(const SurfaceChart& chart);

LineElement line_element(const MetricSample& g);

/// The conformal ambient factor sigma of a conformal4 chart: either the one
/// given explicitly or -log(1 + K0/4 |X|^2).
ScalarField ambient_sigma(const SurfaceChart& chart);

struct Normals {
  std::vector<ScalarField> N1, N2;
  /// true where phi1 phi2 or u1 u2 vanish; normals are zero there.
  std::vector<bool> mask;
};

/// Throws AllDegenerate when every point is masked.
Normals normals_r4(const SpinorSolution& s1, const SpinorSolution& s2,
                   double threshold = 1e-8);

struct MeanCurvature {
  /// H = (2p / u1 u2) Re[...], one entry per chart coordinate.
  std::vector<ScalarField> H_vec;
  /// X_zzbar / g_zzbar from the coordinates.
  std::vector<ScalarField> H_fd;
  /// Components along N1, N2 (zero where phi1 phi2 vanish).
  ScalarField h1, h2;
  /// sqrt(h1^2 + h2^2), or |H_vec| where the h's are undefined.
  ScalarField H_scalar;
  /// 2p / sqrt(u1 u2).
  ScalarField H_formula;
  std::vector<bool> mask;
};

/// For r3 charts pass the same solution twice. Throws DegenerateMetric
/// when the metric vanishes everywhere.
MeanCurvature mean_curvature(const SpinorSolution& s1, const SpinorSolution& s2,
                             const Potential& p, const SurfaceChart& chart);
/// Uses the chart's own sources.
MeanCurvature mean_curvature(const Potential& p, const SurfaceChart& chart);

struct GaussCurvature {
  /// K = -(2 / lambda) [log |lambda|]_zzbar with lambda = 2 g_zzbar from
  /// the closed-form metric.
  ScalarField K;
  /// Brioschi formula applied to the coordinate-derived E, F, G.
  ScalarField K_brioschi;
  std::vector<bool> mask;
};

GaussCurvature gauss_curvature(const SurfaceChart& chart);

/// 4 int p^2 dx dy, negated for split22.
double willmore(const Potential& p, AmbientTag tag = AmbientTag::r4);

/// int <H, H> 2 g_zzbar dx dy over the unmasked points, with the metric
/// taken from the coordinates.
double willmore_direct(const SurfaceChart& chart, const std::vector<ScalarField>& H_vec,
                       const std::vector<bool>& mask = {});

struct GeometryReport {
  explicit GeometryReport(const ComplexGrid& g)
      : metric{ScalarField(g), ScalarField(g), ScalarField(g)},
        H_scalar(g, FieldKind::real),
        K(g, FieldKind::real) {}

  AmbientTag ambient = AmbientTag::r4;
  std::vector<ScalarField> u_factors;
  MetricSample metric;
  std::optional<LineElement> line;  // minkowski4
  ScalarField H_scalar;
  std::vector<ScalarField> H_vector;
  ScalarField K;
  std::optional<ScalarField> K_brioschi;
  /// conformal4 only: e^{-sigma} |H - (grad sigma)^perp|, the mean curvature
  /// including the normal derivative of sigma.
  std::optional<ScalarField> H_with_sigma_gradient;
  std::optional<double> W;
  std::optional<double> W_direct;
  std::vector<bool> mask;
  double masked_fraction = 0.0;
  double max_conformality_violation = 0.0;
  std::pair<double, double> H_minmax{0.0, 0.0};
  std::pair<double, double> K_minmax{0.0, 0.0};
  std::vector<std::string> warnings;
};

/// Full geometry of a real chart. Minkowski charts get the metric and line
/// element only. Throws KindMismatch for complex (cn, glm) charts.
GeometryReport analyze(const SurfaceChart& chart, const Potential& p);

/// Geometry of an r4 chart placed in a conformally flat ambient.
GeometryReport conformal_ambient_geometry(const SurfaceChart& chart,
                                          const Potential& p);

/// {W, W_direct, masked_fraction, max_conformality_violation, H_minmax,
/// K_minmax}, plus the ambient tag and warnings.
std::string geometry_summary_json(const GeometryReport& r,
                                  const std::string& config_hash = {});

/// <prefix>_H.csv, <prefix>_K.csv, <prefix>_g.csv and <prefix>_summary.json.
void write_geometry_report(const std::string& prefix, const GeometryReport& r,
                           const std::string& config_hash = {});

}  // namespace wforge
