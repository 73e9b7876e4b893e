#pragma once

#include <optional>
#include <string>
#include <vector>

#include "wforge/dirac.hpp"
#include "wforge/grid.hpp"

namespace wforge {

/// Residuals are sup norms over unmasked points of |lhs - rhs| divided
/// pointwise by max(1, |lhs|, |rhs|). Derivatives are only ever taken of f,
/// eta, p and u, never of quotients that blow up where p or f_zbar vanish.
struct KenmotsuData {
  explicit KenmotsuData(const ComplexGrid& g) : f(g), eta(g), p_recovered(g), H(g) {}

  ScalarField f;
  ScalarField eta;
  /// -eta f_zbar / (|eta| (1 + |f|^2)).
  ScalarField p_recovered;
  /// -2 conj(f)_z / (eta (1 + |f|^2)^2).
  ScalarField H;
  /// (log eta)_zbar + 2 conj(f) f_zbar / (1 + |f|^2), taken as eta_zbar / eta.
  double eq_2_3 = 0.0;
  /// Only set when the input potential is known.
  std::optional<double> p_roundtrip_max_err;
  /// true where phi vanishes.
  std::vector<bool> mask;
  double masked_fraction = 0.0;
};

/// Throws KindMismatch for non-euclidean solutions and AllDegenerate when
/// phi vanishes everywhere.
KenmotsuData kenmotsu_from_spinors(const SpinorSolution& s);
KenmotsuData kenmotsu_from_spinors(const SpinorSolution& s, const Potential& p);

struct HoffmanOssermanData {
  explicit HoffmanOssermanData(const ComplexGrid& g)
      : f1(g), f2(g), eta(g), F1(g), F2(g), p_from_F1(g), p_from_F2(g) {}

  ScalarField f1, f2, eta;
  /// F_i = f_i,zbar / (1 + |f_i|^2).
  ScalarField F1, F2;
  ScalarField p_from_F1, p_from_F2;

  /// Im of the zbar-derivative of T1 + T2, where
  /// T_i = f_i,zzbar / f_i,zbar - 2 conj(f_i) f_i,z / (1 + |f_i|^2).
  double eq_3_29 = 0.0;
  /// |F1| - |F2|.
  double eq_3_30 = 0.0;
  /// conj(eta)^2 + 4 F1 F2 / (H^2 (1 + |f1|^2)(1 + |f2|^2)), relative to |eta|^2.
  double eq_3_31 = 0.0;
  /// 2 (log H)_z - T1 - T2.
  double eq_3_32 = 0.0;
  std::optional<double> p_roundtrip_max_err;

  /// Zeros of phi1 or phi2.
  std::vector<bool> mask;
  /// Additionally masks zeros of f_i,zbar (and of H), where the last three
  /// relations are undefined.
  std::vector<bool> zero_fzbar_mask;
  double masked_fraction = 0.0;
};

/// eta = i phi1 phi2, f1 = i conj(psi1) / phi1, f2 = -i conj(psi2) / phi2.
/// H in the relations is 2p / sqrt(u1 u2).
HoffmanOssermanData ho_from_spinors(const SpinorSolution& s1, const SpinorSolution& s2,
                                    const Potential& p);

/// The four complex components of the Gauss map of the R^4 chart built from
/// (s1, s2).
std::vector<ScalarField> gauss_map(const SpinorSolution& s1, const SpinorSolution& s2);

/// The Gauss map in terms of (f1, f2): [1 + f1 f2, i(1 - f1 f2), f1 - f2, -i(f1 + f2)].
std::vector<ScalarField> gauss_map_from_f(const ScalarField& f1, const ScalarField& f2);

/// sup |sum G_i^2| / |G|^2 over points with |G| > 0.
double quadric_residual(const std::vector<ScalarField>& G);

/// sup over unmasked points of max_{i<j} |A_i B_j - A_j B_i| / (|A| |B|): zero
/// when A and B are proportional at every point.
double projective_residual(const std::vector<ScalarField>& A, const std::vector<ScalarField>& B,
                           const std::vector<bool>& mask = {});

/// {eq_2_3, eq_3_29, eq_3_30, eq_3_31, eq_3_32, p_roundtrip_max_err,
/// masked_fraction}; absent entries are null.
std::string gaussmap_report_json(const KenmotsuData* k, const HoffmanOssermanData* ho,
                                 const std::string& config_hash = {});

}  // namespace wforge
