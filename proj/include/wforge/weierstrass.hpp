#pragma once

#include <array>
#include <iosfwd>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "wforge/dirac.hpp"
#include "wforge/grid.hpp"
#include "wforge/operators.hpp"

namespace wforge {

enum class AmbientTag { r3, r4, split22, minkowski4, conformal4, stacked, cn, glm };

std::string to_string(AmbientTag t);
AmbientTag ambient_tag_from_string(const std::string& s);

/// One block of a stacked chart: a triple(alpha) adds the three R^3
/// coordinates of one solution, a quad(alpha, beta) adds the four R^4
/// coordinates of a pair. Indices are 0-based into the solution list.
struct StackBlock {
  int alpha = 0;
  int beta = -1;  // -1 for a triple
  bool is_quad() const { return beta >= 0; }
};

struct AmbientSpec {
  AmbientTag tag = AmbientTag::r3;
  /// conformal4: explicit sigma, or the S^4 factor with curvature K0 > 0
  /// when sigma is empty.
  std::optional<ScalarField> sigma;
  double K0 = 0.0;
  std::vector<StackBlock> plan;  // stacked
  int M = 0;                     // glm matrix size

  static AmbientSpec of(AmbientTag t) {
    AmbientSpec a;
    a.tag = t;
    return a;
  }
  static AmbientSpec r3() { return of(AmbientTag::r3); }
  static AmbientSpec r4() { return of(AmbientTag::r4); }
  static AmbientSpec split22() { return of(AmbientTag::split22); }
  static AmbientSpec minkowski4() { return of(AmbientTag::minkowski4); }
  static AmbientSpec s4(double K0);
  static AmbientSpec conformal(ScalarField sigma);

  bool complex_coordinates() const {
    return tag == AmbientTag::cn || tag == AmbientTag::glm;
  }
  /// Diagonal of the constant part of the ambient metric, one entry per
  /// coordinate (conformal4 returns the flat part).
  std::vector<double> metric_signature(int dimension) const;
};

struct SurfaceChart {
  std::vector<ScalarField> coords;
  /// dX^k = a dz + b dzbar, the forms the coordinates were integrated from.
  std::vector<OneForm> forms;
  /// max|d_zbar a - d_z b| per coordinate, relative to the largest form
  /// of the chart.
  std::vector<double> closedness;
  std::vector<double> curl_max;
  /// Linear growth of each coordinate on periodic grids.
  std::vector<cplx> drift_x, drift_y;
  AmbientSpec ambient;
  std::vector<std::shared_ptr<const SpinorSolution>> sources;
  /// true where the conformal factor vanishes (branch points, zeros).
  std::vector<bool> mask;
  std::vector<std::string> warnings;
  /// Largest imaginary residue stripped from real coordinates.
  double imaginary_residue = 0.0;
  /// glm only: fraction of grid points where the matrix has condition
  /// number below 1e8.
  double invertible_fraction = 0.0;

  int dimension() const { return static_cast<int>(coords.size()); }
  const ComplexGrid& grid() const { return coords.at(0).grid(); }
  double masked_fraction() const;

  /// Coordinate derivatives taken from the reconstructed coordinates
  /// (drift-aware on periodic grids).
  ScalarField dz(int k) const;
  ScalarField dzbar(int k) const;
};

struct BuildOptions {
  GridIndex base{};
  PathOrder order = PathOrder::row_first;
  double degeneracy_threshold = 1e-8;
};

/// u = |psi|^2 + |phi|^2.
ScalarField u_factor(const SpinorSolution& s);

SurfaceChart build_r3(const SpinorSolution& s, const BuildOptions& opt = {});
SurfaceChart build_r4(const SpinorSolution& s1, const SpinorSolution& s2,
                      const BuildOptions& opt = {});
SurfaceChart build_split22(const SpinorSolution& s1, const SpinorSolution& s2,
                           const BuildOptions& opt = {});
SurfaceChart build_stacked(const std::vector<SpinorSolution>& sols,
                           const std::vector<StackBlock>& plan,
                           const BuildOptions& opt = {});

/// A[gamma][alpha][beta]; X^gamma = sum A int(psi_a psi_b dzbar - phi_a phi_b dz).
using CoefficientTensor = std::vector<std::vector<std::vector<cplx>>>;
SurfaceChart build_cn(const std::vector<SpinorSolution>& sols,
                      const CoefficientTensor& A, const BuildOptions& opt = {});

/// sol_sets[i] holds the M solutions for potential p^(i).
SurfaceChart build_glm(const std::vector<std::vector<SpinorSolution>>& sol_sets,
                       const std::vector<cplx>& B, const BuildOptions& opt = {});

/// Reinterprets an r4 chart in another four-dimensional ambient
/// (minkowski4 or conformal4).
SurfaceChart with_ambient(SurfaceChart chart, AmbientSpec ambient);

/// The fraction of points where an M x M matrix chart is invertible.
double glm_invertible_fraction(const SurfaceChart& chart, int M);

// Export ---------------------------------------------------------------------

/// Wavefront OBJ: vertices from the selected coordinate triple (0-based),
/// grid quads split into two triangles, 1-based indices.
void write_chart_obj(std::ostream& out, const SurfaceChart& chart,
                     std::array<int, 3> triple = {0, 1, 2},
                     const std::string& config_hash = {});
void write_chart_obj(const std::string& path, const SurfaceChart& chart,
                     std::array<int, 3> triple = {0, 1, 2},
                     const std::string& config_hash = {});

/// Rows i,j,X1,...,Xd at 17 significant digits (complex charts write re and
/// im columns per coordinate).
void write_chart_csv(std::ostream& out, const SurfaceChart& chart,
                     const std::string& config_hash = {});
void write_chart_csv(const std::string& path, const SurfaceChart& chart,
                     const std::string& config_hash = {});

/// Reads a real chart CSV back as coordinate fields on its grid.
std::vector<ScalarField> read_chart_csv(const std::string& path);
std::vector<ScalarField> read_chart_csv(std::istream& in,
                                        const std::string& name = "<stream>");

/// OBJ from bare coordinate fields.
void write_obj(std::ostream& out, const std::vector<ScalarField>& coords,
               std::array<int, 3> triple, const std::string& config_hash = {});

}  // namespace wforge
