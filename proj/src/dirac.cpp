#include "wforge/dirac.hpp"

#include <algorithm>
#include <array>
#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <boost/numeric/odeint.hpp>
#include <cmath>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <map>
#include <nlohmann/json.hpp>
#include <numbers>

#include "wforge/error.hpp"
#include "wforge/field_io.hpp"
#include "wforge/operators.hpp"

namespace wforge {

namespace {

constexpr cplx I{0.0, 1.0};

double kind_sign(SystemKind k) { return k == SystemKind::split ? 1.0 : -1.0; }

void require_kind(const Potential& p, const SpinorSolution& s) {
  if (p.kind != s.kind)
    throw KindMismatch("solution kind " + to_string(s.kind) +
                       " does not match potential kind " + to_string(p.kind));
}

bool near_integer(double v) {
  return std::abs(v - std::round(v)) <= 1e-9 * std::max(1.0, std::abs(v));
}

}  // namespace

std::string to_string(SystemKind k) {
  switch (k) {
    case SystemKind::euclidean: return "euclidean";
    case SystemKind::split: return "split";
    case SystemKind::complex_p: return "complex_p";
  }
  return "?";
}

SystemKind system_kind_from_string(const std::string& s) {
  if (s == "euclidean") return SystemKind::euclidean;
  if (s == "split") return SystemKind::split;
  if (s == "complex_p") return SystemKind::complex_p;
  throw ConfigError("unknown system kind '" + s + "'");
}

Potential::Potential(ScalarField p_, SystemKind kind_)
    : p(std::move(p_)), kind(kind_) {
  if (kind != SystemKind::complex_p) {
    if (max_imag(p) != 0.0)
      throw InvalidPotential(to_string(kind) + " systems need a real potential");
    if (!p.is_real()) p = ScalarField::real_part(p);
  }
}

std::uint64_t Potential::tag() const {
  std::uint64_t h = 1469598103934665603ULL;
  auto mix = [&](const void* data, std::size_t n) {
    const auto* b = static_cast<const unsigned char*>(data);
    for (std::size_t i = 0; i < n; ++i) {
      h ^= b[i];
      h *= 1099511628211ULL;
    }
  };
  const int k = static_cast<int>(kind);
  mix(&k, sizeof k);
  const auto& g = p.grid();
  const double dims[4] = {g.x0(), g.y0(), g.lx(), g.ly()};
  mix(dims, sizeof dims);
  mix(p.values().data(), p.values().size_bytes());
  return h;
}

DiracResidual residual(const Potential& p, const SpinorSolution& s) {
  require_kind(p, s);
  require_same_grid(p.p, s.psi);
  require_same_grid(p.p, s.phi);
  auto r1 = d_z(s.psi) - p.p * s.phi;
  auto r2 = d_zbar(s.phi) - kind_sign(p.kind) * (p.p * s.psi);
  const double scale = 1.0 + max_abs(s.psi) + max_abs(s.phi);
  const double norm = std::max(max_abs(r1), max_abs(r2)) / scale;
  return {std::move(r1), std::move(r2), norm};
}

SpinorSolution make_solution(const Potential& p, ScalarField psi,
                             ScalarField phi, std::string label) {
  SpinorSolution s{psi.as_complex(), phi.as_complex(), p.kind, std::move(label)};
  s.potential_tag = p.tag();
  s.residual_norm = residual(p, s).norm;
  return s;
}

// ---------------------------------------------------------------------------

namespace {

FamilyResult minimal_family(const ComplexGrid& g, SystemKind kind,
                            const MinimalFamily& f) {
  auto degree = [](const std::vector<cplx>& c) {
    int d = -1;
    for (std::size_t k = 0; k < c.size(); ++k)
      if (c[k] != 0.0) d = static_cast<int>(k);
    return d;
  };
  if (g.periodic() && (degree(f.psi_bar_coeffs) > 0 || degree(f.phi_coeffs) > 0))
    throw NotPeriodic("polynomial seeds are not periodic; use an open grid");
  auto poly = [](const std::vector<cplx>& c, cplx z) {
    cplx s = 0.0;
    for (auto it = c.rbegin(); it != c.rend(); ++it) s = s * z + *it;
    return s;
  };
  Potential pot(ScalarField::constant(g, 0.0), kind);
  auto psi = ScalarField::sample(
      g, [&](cplx z) { return std::conj(poly(f.psi_bar_coeffs, z)); });
  auto phi = ScalarField::sample(g, [&](cplx z) { return poly(f.phi_coeffs, z); });
  std::vector<SpinorSolution> sols{make_solution(pot, psi, phi, "minimal")};
  return {std::move(pot), std::move(sols)};
}

FamilyResult exponential_family(const ComplexGrid& g, SystemKind kind,
                                const ExponentialFamily& f) {
  if (f.p == 0.0)
    throw InvalidPotential("exponential family needs a nonzero constant p");
  if (kind != SystemKind::complex_p && f.p.imag() != 0.0)
    throw InvalidPotential("exponential family: complex p needs complex_p kind");
  if (f.modes.empty()) throw InvalidPotential("exponential family: no modes");
  const double sgn = kind == SystemKind::split ? 1.0 : -1.0;
  Potential pot(ScalarField::constant(g, f.p), kind);
  std::vector<SpinorSolution> sols;
  for (const auto& [lambda, mu] : f.modes) {
    const cplx mismatch = lambda * mu - sgn * f.p * f.p;
    if (std::abs(mismatch) > 1e-12)
      throw BadDispersion("lambda mu = " + format_double((lambda * mu).real()) +
                          (std::abs((lambda * mu).imag()) > 0
                               ? "+" + format_double((lambda * mu).imag()) + "i"
                               : "") +
                          " but the " + to_string(kind) + " system needs " +
                          (sgn > 0 ? "+" : "-") + "p^2");
    if (g.periodic()) {
      const cplx a = lambda + mu;
      const cplx b = lambda - mu;
      const double tol = 1e-12 * (1.0 + std::abs(a) + std::abs(b));
      const bool ok = std::abs(a.real()) <= tol && std::abs(b.imag()) <= tol &&
                      near_integer(a.imag() * g.lx() / (2 * std::numbers::pi)) &&
                      near_integer(b.real() * g.ly() / (2 * std::numbers::pi));
      if (!ok)
        throw NotPeriodic("exp(lambda z + mu zbar) is not periodic on this grid");
    }
    auto psi = ScalarField::sample(
        g, [&](cplx z) { return std::exp(lambda * z + mu * std::conj(z)); });
    auto phi = (lambda / f.p) * psi;
    sols.push_back(make_solution(pot, psi, phi, "exponential"));
  }
  return {std::move(pot), std::move(sols)};
}

FamilyResult radial_family(const ComplexGrid& g, SystemKind kind,
                           const RadialGaussianFamily& f) {
  if (kind == SystemKind::complex_p)
    throw InvalidPotential("radial Gaussian family needs a real-potential kind");
  if (!(f.width > 0.0)) throw InvalidPotential("radial Gaussian: width must be > 0");
  if (g.periodic()) throw NotPeriodic("radial Gaussian family needs an open grid");
  const double a = f.amplitude, w2 = f.width * f.width;
  auto pfun = [=](double r) { return a * std::exp(-r * r / w2); };
  const double sb = kind == SystemKind::split ? 1.0 : -1.0;

  auto pfield = ScalarField::sample(g, [&](cplx z) { return pfun(std::abs(z)); });
  Potential pot(ScalarField::real_part(pfield), kind);

  std::map<double, std::size_t> radius_slot;
  for (int i = 0; i < g.nx(); ++i)
    for (int j = 0; j < g.ny(); ++j) radius_slot[std::abs(g.z(i, j))] = 0;

  constexpr double r0 = 1e-8;
  std::vector<SpinorSolution> sols;
  for (int n : f.orders) {
    if (std::abs(n) > 4)
      throw InvalidPotential("radial Gaussian: |order| must be <= 4");
    using State = std::array<double, 2>;
    const double p0 = a;
    const int m = std::abs(n);
    State x;
    if (n <= 0)
      x = {std::pow(r0, m), sb * p0 / (m + 1) * std::pow(r0, m + 1)};
    else
      x = {p0 / n * std::pow(r0, n), std::pow(r0, n - 1)};
    auto rhs = [&](const State& s, State& ds, double r) {
      const double p = pfun(r);
      ds[0] = 2.0 * p * s[1] - n * s[0] / r;
      ds[1] = 2.0 * sb * p * s[0] + (n - 1) * s[1] / r;
    };
    std::vector<double> times{r0};
    for (auto& [r, slot] : radius_slot)
      if (r > r0) times.push_back(r);
    std::map<double, State> values;
    namespace ode = boost::numeric::odeint;
    auto stepper =
        ode::make_dense_output(1e-30, 1e-13, ode::runge_kutta_dopri5<State>());
    ode::integrate_times(stepper, rhs, x, times.begin(), times.end(), 1e-9,
                         [&](const State& s, double r) { values[r] = s; });

    auto psi = ScalarField(g);
    auto phi = ScalarField(g);
    for (int i = 0; i < g.nx(); ++i)
      for (int j = 0; j < g.ny(); ++j) {
        const cplx z = g.z(i, j);
        const double r = std::abs(z);
        double A, B;
        cplx e = 1.0;
        if (r <= r0) {
          A = n == 0 ? 1.0 : 0.0;
          B = n == 1 ? 1.0 : 0.0;
        } else {
          const State& s = values.at(r);
          A = s[0];
          B = s[1];
          e = z / r;
        }
        psi[g.index(i, j)] = std::pow(e, n) * A;
        phi[g.index(i, j)] = std::pow(e, n - 1) * B;
      }
    sols.push_back(make_solution(pot, psi, phi,
                                 "radial_gaussian(n=" + std::to_string(n) + ")"));
  }
  return {std::move(pot), std::move(sols)};
}

FamilyResult one_dimensional_family(const ComplexGrid& g, SystemKind kind,
                                    const OneDimensionalFamily& f) {
  if (!f.p_of_x) throw InvalidPotential("one-dimensional family: p(x) missing");
  using boost::math::quadrature::gauss_kronrod;
  auto integral = [&](double a, double b) {
    return gauss_kronrod<double, 31>::integrate(f.p_of_x, a, b, 15, 1e-15);
  };
  std::vector<double> theta(g.nx());
  theta[0] = 0.0;
  for (int i = 1; i < g.nx(); ++i)
    theta[i] = theta[i - 1] + 2.0 * integral(g.x(i - 1), g.x(i));
  if (g.periodic()) {
    const double total = theta[g.nx() - 1] +
                         2.0 * integral(g.x(g.nx() - 1), g.x0() + g.lx());
    const bool ok = kind == SystemKind::split
                        ? std::abs(total) <= 1e-9
                        : near_integer(total / (2 * std::numbers::pi));
    if (!ok)
      throw NotPeriodic("2 * integral of p over one period is " +
                        format_double(total) +
                        (kind == SystemKind::split ? ", needs 0"
                                                   : ", needs a multiple of 2 pi"));
  }
  auto pfield =
      ScalarField::sample(g, [&](cplx z) { return cplx(f.p_of_x(z.real())); });
  Potential pot(ScalarField::real_part(pfield), kind);

  std::vector<SpinorSolution> sols;
  for (const auto& [cp, cm] : f.coefficients) {
    ScalarField psi(g), phi(g);
    for (int i = 0; i < g.nx(); ++i) {
      const double t = theta[i];
      cplx ps, ph;
      if (kind == SystemKind::split) {
        ps = cp * std::cosh(t) + cm * std::sinh(t);
        ph = cp * std::sinh(t) + cm * std::cosh(t);
      } else {
        const cplx ep = std::exp(I * t), em = std::exp(-I * t);
        ps = cp * ep + cm * em;
        ph = cp * I * ep - cm * I * em;
      }
      for (int j = 0; j < g.ny(); ++j) {
        psi[g.index(i, j)] = ps;
        phi[g.index(i, j)] = ph;
      }
    }
    sols.push_back(make_solution(pot, psi, phi, "one_dimensional"));
  }
  return {std::move(pot), std::move(sols)};
}

}  // namespace

FamilyResult analytic_family(const ComplexGrid& grid, SystemKind kind,
                             const FamilyDescriptor& family) {
  return std::visit(
      [&](const auto& f) -> FamilyResult {
        using T = std::decay_t<decltype(f)>;
        if constexpr (std::is_same_v<T, MinimalFamily>)
          return minimal_family(grid, kind, f);
        else if constexpr (std::is_same_v<T, ExponentialFamily>)
          return exponential_family(grid, kind, f);
        else if constexpr (std::is_same_v<T, RadialGaussianFamily>)
          return radial_family(grid, kind, f);
        else
          return one_dimensional_family(grid, kind, f);
      },
      family);
}

// ---------------------------------------------------------------------------

SpinorSolution make_seed(ScalarField psi0, ScalarField phi0, SystemKind kind,
                         std::string label) {
  require_same_grid(psi0, phi0);
  SpinorSolution s{psi0.as_complex(), phi0.as_complex(), kind, std::move(label)};
  const double scale = 1.0 + max_abs(s.psi) + max_abs(s.phi);
  s.residual_norm =
      std::max(max_abs(d_z(s.psi)), max_abs(d_zbar(s.phi))) / scale;
  return s;
}

SpinorSolution constant_seed(const ComplexGrid& grid, cplx psi0, cplx phi0,
                             SystemKind kind) {
  return make_seed(ScalarField::constant(grid, psi0),
                   ScalarField::constant(grid, phi0), kind, "constant_seed");
}

SpinorSolution solve_fixed_point(const Potential& p, const SpinorSolution& seed,
                                 double tol, int max_iter, double damping,
                                 int* iterations) {
  const auto& g = p.p.grid();
  if (!g.periodic())
    throw NonPeriodicGrid("solve_fixed_point needs a periodic grid");
  require_kind(p, seed);
  require_same_grid(p.p, seed.psi);
  if (!(damping > 0.0 && damping <= 1.0))
    throw std::invalid_argument("damping must lie in (0, 1]");
  if (max_iter < 1) throw std::invalid_argument("max_iter must be positive");
  {
    const double scale = 1.0 + max_abs(seed.psi) + max_abs(seed.phi);
    const double r0 =
        std::max(max_abs(d_z(seed.psi)), max_abs(d_zbar(seed.phi))) / scale;
    if (r0 > 1e-10)
      throw InvalidSeed("seed is not a p = 0 solution (residual " +
                        format_double(r0) + ")");
  }
  const double sgn = kind_sign(p.kind);
  SpinorSolution s = seed;
  s.potential_tag = p.tag();
  double last = 0.0;
  for (int it = 1; it <= max_iter; ++it) {
    auto psi_new = seed.psi + inv_dz(p.p * s.phi);
    s.psi = (1.0 - damping) * s.psi + damping * psi_new;
    auto phi_new = seed.phi + sgn * inv_dzbar(p.p * s.psi);
    s.phi = (1.0 - damping) * s.phi + damping * phi_new;
    last = residual(p, s).norm;
    if (!std::isfinite(last)) break;
    if (last <= tol) {
      s.residual_norm = last;
      s.label = "fixed_point(" + seed.label + ")";
      if (iterations) *iterations = it;
      return s;
    }
  }
  throw NoConvergence(max_iter, last);
}

// ---------------------------------------------------------------------------

IntegrabilityResidual integrability_residual(const SpinorSolution& s1,
                                             const SpinorSolution& s2) {
  if (s1.kind != s2.kind) throw KindMismatch("solutions of different kinds");
  require_same_grid(s1.psi, s2.psi);
  const double sgn = s1.kind == SystemKind::split ? -1.0 : 1.0;
  auto e1 = d_z(s1.psi * s2.psi) + sgn * d_zbar(s1.phi * s2.phi);
  auto e2 = d_z(s1.psi * conj(s2.phi)) - d_zbar(s1.phi * conj(s2.psi));
  const double scale = (1.0 + max_abs(s1.psi) + max_abs(s1.phi)) *
                       (1.0 + max_abs(s2.psi) + max_abs(s2.phi));
  const double norm = std::max(max_abs(e1), max_abs(e2)) / scale;
  return {std::move(e1), std::move(e2), norm};
}

double independence_measure(const SpinorSolution& s1, const SpinorSolution& s2) {
  require_same_grid(s1.psi, s2.psi);
  const double n1 = std::max(max_abs(s1.psi), max_abs(s1.phi));
  const double n2 = std::max(max_abs(s2.psi), max_abs(s2.phi));
  if (n1 == 0.0 || n2 == 0.0) return 0.0;
  return max_abs(s1.psi * s2.phi - s2.psi * s1.phi) / (n1 * n2);
}

SpinorSolution combine(const Potential& p, cplx a, const SpinorSolution& s1,
                       cplx b, const SpinorSolution& s2) {
  return make_solution(p, a * s1.psi + b * s2.psi, a * s1.phi + b * s2.phi,
                       "combination");
}

SpinorSolution conjugate_partner(const Potential& p, const SpinorSolution& s) {
  return make_solution(p, -conj(s.phi), conj(s.psi), "partner(" + s.label + ")");
}

// ---------------------------------------------------------------------------

void write_solution(const std::string& prefix, const SpinorSolution& s,
                    const std::string& potential_file,
                    const std::string& config_hash) {
  namespace fs = std::filesystem;
  const std::string psi_file = prefix + "_psi.csv";
  const std::string phi_file = prefix + "_phi.csv";
  write_field_csv(psi_file, s.psi, config_hash);
  write_field_csv(phi_file, s.phi, config_hash);
  nlohmann::json j{{"kind", to_string(s.kind)},
                   {"label", s.label},
                   {"residual_norm", s.residual_norm},
                   {"potential_file", potential_file},
                   {"potential_tag", std::to_string(s.potential_tag)},
                   {"psi_file", fs::path(psi_file).filename().string()},
                   {"phi_file", fs::path(phi_file).filename().string()}};
  if (!config_hash.empty()) j["config_hash"] = config_hash;
  std::ofstream out(prefix + ".json");
  if (!out) throw Error("cannot write '" + prefix + ".json'");
  out << j.dump(2) << '\n';
}

SpinorSolution read_solution(const std::string& manifest_path) {
  namespace fs = std::filesystem;
  std::ifstream in(manifest_path);
  if (!in) throw ParseError("cannot open '" + manifest_path + "'");
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(manifest_path + ": " + e.what());
  }
  const fs::path dir = fs::path(manifest_path).parent_path();
  try {
    SpinorSolution s{read_field_csv((dir / j.at("psi_file").get<std::string>()).string()),
                     read_field_csv((dir / j.at("phi_file").get<std::string>()).string()),
                     system_kind_from_string(j.at("kind").get<std::string>()),
                     j.value("label", std::string{})};
    s.psi.as_complex();
    s.phi.as_complex();
    require_same_grid(s.psi, s.phi);
    s.residual_norm = j.value("residual_norm", 0.0);
    s.potential_tag = std::stoull(j.value("potential_tag", std::string("0")));
    return s;
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(manifest_path + ": " + e.what());
  } catch (const ConfigError& e) {
    throw ParseError(manifest_path + ": " + e.what());
  }
}

}  // namespace wforge
