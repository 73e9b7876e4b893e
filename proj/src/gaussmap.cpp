#include "wforge/gaussmap.hpp"

#include <algorithm>
#include <cmath>
#include <nlohmann/json.hpp>

#include "wforge/error.hpp"
#include "wforge/operators.hpp"

namespace wforge {

namespace {

constexpr cplx I{0.0, 1.0};
constexpr double kPhiFloor = 1e-8;
constexpr double kFzbarFloor = 1e-8;

void require_euclidean(const SpinorSolution& s, const char* who) {
  if (s.kind != SystemKind::euclidean)
    throw KindMismatch(std::string(who) + ": needs a euclidean solution, got " +
                       to_string(s.kind));
}

std::vector<bool> phi_mask(const SpinorSolution& s) {
  auto a = abs2(s.phi);
  const double scale = max_abs(abs2(s.psi) + a);
  std::vector<bool> m(a.size());
  for (std::size_t k = 0; k < a.size(); ++k) m[k] = !(a[k].real() > kPhiFloor * scale);
  return m;
}

std::vector<bool> either(const std::vector<bool>& a, const std::vector<bool>& b) {
  std::vector<bool> m(a.size());
  for (std::size_t k = 0; k < a.size(); ++k) m[k] = a[k] || b[k];
  return m;
}

double fraction(const std::vector<bool>& m) {
  if (m.empty()) return 0.0;
  return static_cast<double>(std::count(m.begin(), m.end(), true)) / m.size();
}

void require_some(const std::vector<bool>& m, const char* who) {
  if (std::all_of(m.begin(), m.end(), [](bool b) { return b; }))
    throw AllDegenerate(std::string(who) + ": phi vanishes at every grid point");
}

// a / b on unmasked points, zero elsewhere.
ScalarField safe_div(const ScalarField& a, const ScalarField& b, const std::vector<bool>& mask) {
  ScalarField out(a.grid());
  for (std::size_t k = 0; k < a.size(); ++k)
    if (!mask[k]) out[k] = a[k] / b[k];
  return out;
}

// sup over unmasked points of |lhs - rhs| / max(1, |lhs|, |rhs|).
double relative_gap(const ScalarField& lhs, const ScalarField& rhs,
                    const std::vector<bool>& mask) {
  double gap = 0.0;
  for (std::size_t k = 0; k < lhs.size(); ++k) {
    if (mask[k]) continue;
    const double scale = std::max({1.0, std::abs(lhs[k]), std::abs(rhs[k])});
    gap = std::max(gap, std::abs(lhs[k] - rhs[k]) / scale);
  }
  return gap;
}

double roundtrip(const ScalarField& got, const Potential& p, const std::vector<bool>& mask) {
  double e = 0.0;
  for (std::size_t k = 0; k < got.size(); ++k)
    if (!mask[k]) e = std::max(e, std::abs(got[k] - p.p[k]));
  return e;
}

ScalarField one_plus_abs2(const ScalarField& f) { return abs2(f) + 1.0; }

// T = f_zzbar / f_zbar - 2 conj(f) f_z / (1 + |f|^2) and its zbar-derivative,
// both assembled pointwise from derivatives of f so that nothing singular is
// differentiated. Zero on the mask.
struct HoTerm {
  ScalarField T, T_zbar;
  // Sum of the magnitudes of the pieces of T_zbar, for scaling.
  ScalarField size;
};

HoTerm ho_term(const ScalarField& f, const std::vector<bool>& mask) {
  auto fz = d_z(f);
  auto fzb = d_zbar(f);
  auto fzzb = d_z(fzb);
  auto fzbzb = d_zbar(fzb);
  auto fzzbzb = d_zbar(fzzb);
  auto fb = conj(f);
  auto fb_zb = conj(fz);
  HoTerm t{ScalarField(f.grid()), ScalarField(f.grid()), ScalarField(f.grid())};
  for (std::size_t k = 0; k < f.size(); ++k) {
    if (mask[k]) continue;
    const cplx w = 1.0 + std::norm(f[k]);
    const cplx w_zb = fb_zb[k] * f[k] + fb[k] * fzb[k];
    const cplx a = fzzb[k] / fzb[k];
    const cplx b = 2.0 * fb[k] * fz[k] / w;
    const cplx a_zb[2] = {fzzbzb[k] / fzb[k], -fzzb[k] * fzbzb[k] / (fzb[k] * fzb[k])};
    const cplx b_zb[3] = {2.0 * fb_zb[k] * fz[k] / w, 2.0 * fb[k] * fzzb[k] / w,
                          -b * w_zb / w};
    t.T[k] = a - b;
    t.T_zbar[k] = a_zb[0] + a_zb[1] - b_zb[0] - b_zb[1] - b_zb[2];
    t.size[k] = std::abs(a_zb[0]) + std::abs(a_zb[1]) + std::abs(b_zb[0]) +
                std::abs(b_zb[1]) + std::abs(b_zb[2]);
  }
  return t;
}

double sup_off(const ScalarField& f, const std::vector<bool>& mask) {
  double m = 0.0;
  for (std::size_t k = 0; k < f.size(); ++k)
    if (!mask[k]) m = std::max(m, std::abs(f[k]));
  return m;
}

KenmotsuData build_kenmotsu(const SpinorSolution& s) {
  require_euclidean(s, "kenmotsu_from_spinors");
  KenmotsuData k(s.grid());
  k.mask = phi_mask(s);
  require_some(k.mask, "kenmotsu_from_spinors");
  k.masked_fraction = fraction(k.mask);

  k.f = safe_div(I * conj(s.psi), s.phi, k.mask);
  k.eta = I * (s.phi * s.phi);
  auto fzb = d_zbar(k.f);
  auto w = one_plus_abs2(k.f);

  auto lhs = safe_div(d_zbar(k.eta), k.eta, k.mask);
  auto rhs = -1.0 * safe_div(2.0 * (conj(k.f) * fzb), w, k.mask);
  k.eq_2_3 = relative_gap(lhs, rhs, k.mask);

  auto abs_eta = map(k.eta, [](cplx e) { return cplx(std::abs(e)); });
  k.p_recovered = -1.0 * safe_div(k.eta * fzb, abs_eta * w, k.mask);
  k.H = -2.0 * safe_div(d_z(conj(k.f)), k.eta * w * w, k.mask);
  return k;
}

}  // namespace

KenmotsuData kenmotsu_from_spinors(const SpinorSolution& s) { return build_kenmotsu(s); }

KenmotsuData kenmotsu_from_spinors(const SpinorSolution& s, const Potential& p) {
  require_same_grid(s.psi, p.p);
  auto k = build_kenmotsu(s);
  k.p_roundtrip_max_err = roundtrip(k.p_recovered, p, k.mask);
  return k;
}

HoffmanOssermanData ho_from_spinors(const SpinorSolution& s1, const SpinorSolution& s2,
                                    const Potential& p) {
  require_euclidean(s1, "ho_from_spinors");
  require_euclidean(s2, "ho_from_spinors");
  require_same_grid(s1.psi, s2.psi);
  require_same_grid(s1.psi, p.p);
  if (s1.potential_tag != 0 && s2.potential_tag != 0 && s1.potential_tag != s2.potential_tag)
    throw PotentialMismatch("ho_from_spinors: solutions belong to different potentials");

  HoffmanOssermanData h(s1.grid());
  h.mask = either(phi_mask(s1), phi_mask(s2));
  require_some(h.mask, "ho_from_spinors");
  h.masked_fraction = fraction(h.mask);

  h.eta = I * (s1.phi * s2.phi);
  h.f1 = safe_div(I * conj(s1.psi), s1.phi, h.mask);
  h.f2 = safe_div(-I * conj(s2.psi), s2.phi, h.mask);
  auto w1 = one_plus_abs2(h.f1);
  auto w2 = one_plus_abs2(h.f2);
  h.F1 = safe_div(d_zbar(h.f1), w1, h.mask);
  h.F2 = safe_div(d_zbar(h.f2), w2, h.mask);

  h.p_from_F1 = -I * safe_div(h.F1 * s1.phi, conj(s1.phi), h.mask);
  h.p_from_F2 = I * safe_div(h.F2 * s2.phi, conj(s2.phi), h.mask);
  h.p_roundtrip_max_err =
      std::max(roundtrip(h.p_from_F1, p, h.mask), roundtrip(h.p_from_F2, p, h.mask));

  auto absF1 = map(h.F1, [](cplx c) { return cplx(std::abs(c)); });
  auto absF2 = map(h.F2, [](cplx c) { return cplx(std::abs(c)); });
  h.eq_3_30 = relative_gap(absF1, absF2, h.mask);

  // H^2 = 4 p^2 / (u1 u2).
  auto u1 = abs2(s1.psi) + abs2(s1.phi);
  auto u2 = abs2(s2.psi) + abs2(s2.phi);
  auto H2 = safe_div(4.0 * (p.p * p.p), u1 * u2, h.mask);

  const double fscale = std::max(sup_off(h.F1, h.mask), sup_off(h.F2, h.mask));
  const double hscale = sup_off(H2, h.mask);
  h.zero_fzbar_mask = h.mask;
  for (std::size_t k = 0; k < h.mask.size(); ++k)
    if (std::abs(h.F1[k]) <= kFzbarFloor * fscale || std::abs(h.F2[k]) <= kFzbarFloor * fscale ||
        std::abs(H2[k]) <= kFzbarFloor * hscale || fscale == 0.0)
      h.zero_fzbar_mask[k] = true;
  const auto& zm = h.zero_fzbar_mask;

  auto t1 = ho_term(h.f1, zm);
  auto t2 = ho_term(h.f2, zm);
  auto T = t1.T + t2.T;
  auto T_zbar = t1.T_zbar + t2.T_zbar;
  for (std::size_t k = 0; k < zm.size(); ++k) {
    if (zm[k]) continue;
    const double scale = std::max(1.0, t1.size[k].real() + t2.size[k].real());
    h.eq_3_29 = std::max(h.eq_3_29, std::abs(T_zbar[k].imag()) / scale);
  }

  auto eta_bar2 = conj(h.eta) * conj(h.eta);
  auto rhs31 = -4.0 * safe_div(h.F1 * h.F2, H2 * w1 * w2, zm);
  h.eq_3_31 = relative_gap(eta_bar2, rhs31, zm);

  // 2 (log H)_z = 2 p_z / p - (log u1)_z - (log u2)_z.
  auto lhs32 = 2.0 * safe_div(d_z(p.p), p.p, zm) - safe_div(d_z(u1), u1, zm) -
               safe_div(d_z(u2), u2, zm);
  h.eq_3_32 = relative_gap(lhs32, T, zm);
  return h;
}

std::vector<ScalarField> gauss_map(const SpinorSolution& s1, const SpinorSolution& s2) {
  require_same_grid(s1.psi, s2.psi);
  auto a = conj(s1.psi) * conj(s2.psi);
  auto b = s1.phi * s2.phi;
  auto c = conj(s1.psi) * s2.phi;
  auto d = conj(s2.psi) * s1.phi;
  return {I * (a + b), a - b, -1.0 * (c + d), I * (c - d)};
}

std::vector<ScalarField> gauss_map_from_f(const ScalarField& f1, const ScalarField& f2) {
  auto q = f1 * f2;
  return {q + 1.0, I * (-1.0 * q + 1.0), f1 - f2, -I * (f1 + f2)};
}

double quadric_residual(const std::vector<ScalarField>& G) {
  if (G.empty()) return 0.0;
  double r = 0.0;
  for (std::size_t k = 0; k < G[0].size(); ++k) {
    cplx s = 0.0;
    double n = 0.0;
    for (const auto& g : G) {
      s += g[k] * g[k];
      n += std::norm(g[k]);
    }
    if (n > 0.0) r = std::max(r, std::abs(s) / n);
  }
  return r;
}

double projective_residual(const std::vector<ScalarField>& A, const std::vector<ScalarField>& B,
                           const std::vector<bool>& mask) {
  if (A.size() != B.size()) throw ShapeMismatch("projective_residual: component counts differ");
  if (A.empty()) return 0.0;
  double r = 0.0;
  for (std::size_t k = 0; k < A[0].size(); ++k) {
    if (!mask.empty() && mask[k]) continue;
    double na = 0.0, nb = 0.0;
    for (std::size_t i = 0; i < A.size(); ++i) {
      na += std::norm(A[i][k]);
      nb += std::norm(B[i][k]);
    }
    if (na == 0.0 || nb == 0.0) continue;
    double worst = 0.0;
    for (std::size_t i = 0; i < A.size(); ++i)
      for (std::size_t j = i + 1; j < A.size(); ++j)
        worst = std::max(worst, std::abs(A[i][k] * B[j][k] - A[j][k] * B[i][k]));
    r = std::max(r, worst / std::sqrt(na * nb));
  }
  return r;
}

std::string gaussmap_report_json(const KenmotsuData* k, const HoffmanOssermanData* ho,
                                 const std::string& config_hash) {
  nlohmann::json j;
  j["eq_2_3"] = k ? nlohmann::json(k->eq_2_3) : nlohmann::json();
  j["eq_3_29"] = ho ? nlohmann::json(ho->eq_3_29) : nlohmann::json();
  j["eq_3_30"] = ho ? nlohmann::json(ho->eq_3_30) : nlohmann::json();
  j["eq_3_31"] = ho ? nlohmann::json(ho->eq_3_31) : nlohmann::json();
  j["eq_3_32"] = ho ? nlohmann::json(ho->eq_3_32) : nlohmann::json();
  std::optional<double> err;
  for (const auto& e : {k ? k->p_roundtrip_max_err : std::nullopt,
                        ho ? ho->p_roundtrip_max_err : std::nullopt})
    if (e) err = std::max(err.value_or(0.0), *e);
  j["p_roundtrip_max_err"] = err ? nlohmann::json(*err) : nlohmann::json();
  double mf = 0.0;
  if (k) mf = std::max(mf, k->masked_fraction);
  if (ho) mf = std::max(mf, ho->masked_fraction);
  j["masked_fraction"] = mf;
  if (!config_hash.empty()) j["config_hash"] = config_hash;
  return j.dump(2);
}

}  // namespace wforge
