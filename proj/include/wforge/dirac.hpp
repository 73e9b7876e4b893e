#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "wforge/grid.hpp"

namespace wforge {

/// euclidean:  psi_z = p phi, phi_zbar = -p psi  (p real)
/// split:      psi_z = p phi, phi_zbar = +p psi  (p real)
/// complex_p:  as euclidean with complex p
enum class SystemKind { euclidean, split, complex_p };

std::string to_string(SystemKind k);
SystemKind system_kind_from_string(const std::string& s);

struct Potential {
  /// Throws InvalidPotential if a real-potential kind gets complex values.
  Potential(ScalarField p, SystemKind kind);

  ScalarField p;
  SystemKind kind;

  /// FNV-1a hash of the samples and kind. Solutions carry it so that
  /// builders can tell whether two solutions share one potential.
  std::uint64_t tag() const;
};

struct SpinorSolution {
  ScalarField psi;
  ScalarField phi;
  SystemKind kind = SystemKind::euclidean;
  std::string label;
  double residual_norm = 0.0;
  std::uint64_t potential_tag = 0;

  const ComplexGrid& grid() const { return psi.grid(); }
};

struct DiracResidual {
  ScalarField r1;
  ScalarField r2;
  double norm = 0.0;
};

/// r1 = psi_z - p phi, r2 = phi_zbar +/- p psi,
/// norm = max(|r1|, |r2|) / (1 + |psi| + |phi|), all sup norms.
DiracResidual residual(const Potential& p, const SpinorSolution& s);

/// Builds a solution record and stamps the residual against `p`.
SpinorSolution make_solution(const Potential& p, ScalarField psi,
                             ScalarField phi, std::string label);

// Analytic families ----------------------------------------------------------

/// p = 0; psi = conj(sum a_k z^k), phi = sum b_k z^k.
struct MinimalFamily {
  std::vector<cplx> psi_bar_coeffs;
  std::vector<cplx> phi_coeffs;
};

/// Constant p; psi = exp(lambda z + mu zbar), phi = (lambda / p) psi.
/// Needs lambda mu = -p^2 (euclidean, complex_p) or +p^2 (split).
struct ExponentialFamily {
  cplx p = 1.0;
  std::vector<std::pair<cplx, cplx>> modes;
};

/// p = amplitude exp(-r^2 / width^2) centred at the origin, with solutions
/// psi = e^{i n theta} A(r), phi = e^{i (n-1) theta} B(r) for each order n.
struct RadialGaussianFamily {
  double amplitude = 1.0;
  double width = 1.0;
  std::vector<int> orders{0, 1};
};

/// p = p(x). With theta = 2 int_{x0}^{x} p:
///   euclidean: psi = e^{+-i theta}, phi = +-i e^{+-i theta}
///   split:     (psi, phi) = (cosh theta, sinh theta) or (sinh, cosh)
/// Each entry of `coefficients` gives one solution as c+ s_+ + c- s_-.
struct OneDimensionalFamily {
  std::function<double(double)> p_of_x;
  std::vector<std::pair<cplx, cplx>> coefficients{{1.0, 0.0}, {0.0, 1.0}};
};

using FamilyDescriptor = std::variant<MinimalFamily, ExponentialFamily,
                                      RadialGaussianFamily, OneDimensionalFamily>;

struct FamilyResult {
  Potential potential;
  std::vector<SpinorSolution> solutions;
};

/// Samples an exact solution family on `grid`.
/// Throws BadDispersion, NotPeriodic (periodic grid but the family is not
/// periodic there), InvalidPotential.
FamilyResult analytic_family(const ComplexGrid& grid, SystemKind kind,
                             const FamilyDescriptor& family);

// Fixed-point solver ---------------------------------------------------------

/// Seed from kernel elements of the p = 0 system.
SpinorSolution make_seed(ScalarField psi0, ScalarField phi0, SystemKind kind,
                         std::string label = "seed");
SpinorSolution constant_seed(const ComplexGrid& grid, cplx psi0, cplx phi0,
                             SystemKind kind = SystemKind::euclidean);

/// Iterates psi <- psi0 + inv_dz(p phi), phi <- phi0 -/+ inv_dzbar(p psi)
/// (Gauss-Seidel, damped) until the residual drops below `tol`.
/// Throws NonPeriodicGrid, InvalidSeed, KindMismatch, NoConvergence,
/// NonzeroMean.
SpinorSolution solve_fixed_point(const Potential& p, const SpinorSolution& seed,
                                 double tol = 1e-10, int max_iter = 500,
                                 double damping = 1.0,
                                 int* iterations = nullptr);

// Identities and algebra -----------------------------------------------------

struct IntegrabilityResidual {
  ScalarField e1;  // (psi1 psi2)_z +/- (phi1 phi2)_zbar
  ScalarField e2;  // (psi1 conj phi2)_z - (phi1 conj psi2)_zbar
  double norm = 0.0;
};

/// Residuals of the bilinear closedness identities for a pair of
/// solutions. Normalized by (1 + |psi1| + |phi1|)(1 + |psi2| + |phi2|).
IntegrabilityResidual integrability_residual(const SpinorSolution& s1,
                                             const SpinorSolution& s2);

/// |psi1 phi2 - psi2 phi1| / (|s1| |s2|), with |s| = max(|psi|, |phi|).
double independence_measure(const SpinorSolution& s1, const SpinorSolution& s2);
constexpr double kIndependenceThreshold = 1e-8;

/// a s1 + b s2, residual recomputed against `p`.
SpinorSolution combine(const Potential& p, cplx a, const SpinorSolution& s1,
                       cplx b, const SpinorSolution& s2);

/// (-conj phi, conj psi): again a solution for the euclidean kind.
SpinorSolution conjugate_partner(const Potential& p, const SpinorSolution& s);

// I/O ------------------------------------------------------------------------

/// Writes <prefix>_psi.csv, <prefix>_phi.csv and <prefix>.json.
void write_solution(const std::string& prefix, const SpinorSolution& s,
                    const std::string& potential_file = {},
                    const std::string& config_hash = {});
/// Reads a manifest written by write_solution. Paths inside the manifest
/// are resolved relative to the manifest's directory.
SpinorSolution read_solution(const std::string& manifest_path);

}  // namespace wforge
