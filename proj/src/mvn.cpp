#include "wforge/mvn.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <nlohmann/json.hpp>

#include "wforge/error.hpp"
#include "wforge/field_io.hpp"
#include "wforge/operators.hpp"

namespace wforge {

namespace {

constexpr cplx I{0.0, 1.0};
constexpr double kImaginaryTol = 1e-8;

void require_periodic(const ComplexGrid& g, const char* who) {
  if (!g.periodic()) throw NonPeriodicGrid(std::string(who) + " requires a periodic grid");
}

cplx airy_symbol(double kx, double ky) {
  const cplx a = 0.5 * (I * kx + ky);
  const cplx b = 0.5 * (I * kx - ky);
  return a * a * a + b * b * b;
}

// d_z^3 + d_zbar^3 in one transform.
ScalarField airy(const ScalarField& f) { return fourier_multiplier(f, airy_symbol); }

ScalarField as_real(const ScalarField& f) { return ScalarField::real_part(f); }

double residual_of(const Potential& p, const std::vector<SpinorSolution>& sols) {
  double r = 0.0;
  for (const auto& s : sols) r = std::max(r, residual(p, s).norm);
  return r;
}

}  // namespace

ScalarField omega_of(const Potential& p) {
  require_periodic(p.p.grid(), "omega_of");
  return inv_dzbar(d_z(dealias(p.p * p.p)));
}

ScalarField rhs_p(const Potential& p) { return rhs_p(p, omega_of(p)); }

ScalarField rhs_p(const Potential& p, const ScalarField& omega) {
  return ScalarField::real_part(airy(p.p) + rhs_p_nonlinear(p, omega));
}

ScalarField rhs_p_nonlinear(const Potential& p, const ScalarField& omega) {
  require_periodic(p.p.grid(), "rhs_p");
  require_same_grid(p.p, omega);
  const auto& q = p.p;
  auto om_bar = conj(omega);
  auto half = 3.0 * dealias(d_z(q) * omega) + 1.5 * dealias(q * d_z(omega));
  auto other = 3.0 * dealias(d_zbar(q) * om_bar) + 1.5 * dealias(q * d_zbar(om_bar));
  auto r = half + other;
  const double scale = max_abs(r);
  if (max_imag(r) > kImaginaryTol * scale && max_imag(r) > 1e-14)
    throw ImaginaryDrift("rhs_p: imaginary part " + std::to_string(max_imag(r)) +
                         " against sup norm " + std::to_string(scale));
  return as_real(r);
}

SpinorRate apply_ABCD(const Potential& p, const ScalarField& omega, const SpinorSolution& s) {
  auto r = apply_ABCD_nonlinear(p, omega, s);
  return {airy(s.psi) + r.psi_t, airy(s.phi) + r.phi_t};
}

SpinorRate apply_ABCD_nonlinear(const Potential& p, const ScalarField& omega,
                                const SpinorSolution& s) {
  require_same_grid(p.p, omega);
  require_same_grid(p.p, s.psi);
  require_periodic(p.p.grid(), "apply_ABCD");
  const auto& q = p.p;
  auto om_bar = conj(omega);
  auto A = 3.0 * (om_bar * d_zbar(s.psi)) + 1.5 * (d_zbar(om_bar) * s.psi);
  auto B = -3.0 * (d_z(q) * d_z(s.phi)) + 3.0 * (q * omega * s.phi);
  auto C = 3.0 * (d_zbar(q) * d_zbar(s.psi)) - 3.0 * (q * om_bar * s.psi);
  auto D = 3.0 * (omega * d_z(s.phi)) + 1.5 * (d_z(omega) * s.phi);
  return {A + B, C + D};
}

FlowLaw mvn_law() {
  FlowLaw law;
  law.name = "mvn";
  law.linear_symbol = airy_symbol;
  law.auxiliary = [](const Potential& p) { return omega_of(p); };
  law.p_nonlinear = [](const Potential& p, const ScalarField& aux) {
    return rhs_p_nonlinear(p, aux);
  };
  law.spinor_nonlinear = [](const Potential& p, const ScalarField& aux,
                            const SpinorSolution& s) {
    return apply_ABCD_nonlinear(p, aux, s);
  };
  return law;
}

FlowState make_flow_state(const Potential& p, std::vector<SpinorSolution> sols, double t) {
  require_periodic(p.p.grid(), "make_flow_state");
  if (p.kind != SystemKind::euclidean)
    throw KindMismatch("mVN flow needs a euclidean potential, got " + to_string(p.kind));
  for (const auto& s : sols) {
    require_same_grid(p.p, s.psi);
    if (s.kind != SystemKind::euclidean)
      throw KindMismatch("mVN flow needs euclidean solutions, got " + to_string(s.kind));
  }
  auto omega = omega_of(p);
  return FlowState{t, p, std::move(sols), std::move(omega)};
}

double max_stable_dt(const ComplexGrid& g, double cfl) {
  const double h = std::min(g.hx(), g.hy());
  return cfl * h * h * h;
}

namespace {

// p followed by psi, phi of each solution.
using Fields = std::vector<ScalarField>;

Fields pack(const FlowState& st) {
  Fields y{st.p.p};
  for (const auto& s : st.sols) {
    y.push_back(s.psi);
    y.push_back(s.phi);
  }
  return y;
}

ScalarField keep_kind(const ScalarField& like, ScalarField f) {
  return like.is_real() ? ScalarField::real_part(f) : f;
}

Fields axpy(const Fields& y, double c, const Fields& k) {
  Fields out;
  out.reserve(y.size());
  for (std::size_t i = 0; i < y.size(); ++i) out.push_back(keep_kind(y[i], y[i] + c * k[i]));
  return out;
}

class Stepper {
 public:
  Stepper(const FlowState& st, const FlowLaw& law) : st_(st), law_(law) {}

  // L y + N(y), or N(y) alone.
  Fields rate(const Fields& y, bool with_linear) const {
    Potential p(y[0], st_.p.kind);
    auto aux = law_.auxiliary(p);
    Fields k{law_.p_nonlinear(p, aux)};
    for (std::size_t i = 0; i < st_.sols.size(); ++i) {
      SpinorSolution s = st_.sols[i];
      s.psi = y[1 + 2 * i];
      s.phi = y[2 + 2 * i];
      auto r = law_.spinor_nonlinear(p, aux, s);
      k.push_back(std::move(r.psi_t));
      k.push_back(std::move(r.phi_t));
    }
    if (with_linear && law_.linear_symbol)
      for (std::size_t i = 0; i < y.size(); ++i)
        k[i] = keep_kind(y[i], fourier_multiplier(y[i], law_.linear_symbol) + k[i]);
    return k;
  }

  // e^{L h} y.
  Fields propagate(const Fields& y, double h) const {
    if (!law_.linear_symbol) return y;
    const auto& sym = law_.linear_symbol;
    Fields out;
    out.reserve(y.size());
    for (const auto& f : y)
      out.push_back(keep_kind(
          f, fourier_multiplier(f, [&](double kx, double ky) { return std::exp(sym(kx, ky) * h); })));
    return out;
  }

  FlowState finish(const Fields& y, double dt) const {
    for (const auto& f : y)
      for (const auto& v : f.values())
        if (!std::isfinite(v.real()) || !std::isfinite(v.imag()))
          throw StepTooLarge("non-finite values after a step of dt = " + std::to_string(dt) +
                             "; the step is unstable");
    Potential p(y[0], st_.p.kind);
    auto sols = st_.sols;
    const auto tag = p.tag();
    for (std::size_t i = 0; i < sols.size(); ++i) {
      sols[i].psi = y[1 + 2 * i];
      sols[i].phi = y[2 + 2 * i];
      sols[i].residual_norm = residual(p, sols[i]).norm;
      sols[i].potential_tag = tag;
    }
    auto omega = law_.auxiliary(p);
    return FlowState{st_.t + dt, std::move(p), std::move(sols), std::move(omega)};
  }

 private:
  const FlowState& st_;
  const FlowLaw& law_;
};

Fields rk4_sum(const Fields& y, double dt, const Fields& k1, const Fields& k2, const Fields& k3,
               const Fields& k4) {
  Fields out;
  out.reserve(y.size());
  for (std::size_t i = 0; i < y.size(); ++i)
    out.push_back(keep_kind(y[i], y[i] + (dt / 6.0) * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i])));
  return out;
}

}  // namespace

FlowState step_rk4(const FlowState& state, double dt, const StepOptions& opts) {
  if (!(dt > 0.0)) throw StepTooLarge("time step must be positive");
  const double limit = max_stable_dt(state.p.p.grid(), opts.cfl);
  if (!opts.allow_large_step && dt > limit * (1.0 + 1e-12))
    throw StepTooLarge("dt = " + std::to_string(dt) + " exceeds " + std::to_string(opts.cfl) +
                       " h^3 = " + std::to_string(limit));
  Stepper st(state, opts.law);
  const auto y = pack(state);

  if (opts.scheme == StepScheme::classical) {
    auto k1 = st.rate(y, true);
    auto k2 = st.rate(axpy(y, 0.5 * dt, k1), true);
    auto k3 = st.rate(axpy(y, 0.5 * dt, k2), true);
    auto k4 = st.rate(axpy(y, dt, k3), true);
    return st.finish(rk4_sum(y, dt, k1, k2, k3, k4), dt);
  }

  // Lawson: stages live in the frame advanced by e^{L h}.
  const auto half = st.propagate(y, 0.5 * dt);
  auto k1 = st.rate(y, false);
  auto k1h = st.propagate(k1, 0.5 * dt);
  auto k2 = st.rate(axpy(half, 0.5 * dt, k1h), false);
  auto k3 = st.rate(axpy(half, 0.5 * dt, k2), false);
  auto k3h = st.propagate(k3, 0.5 * dt);
  auto full = st.propagate(half, 0.5 * dt);
  auto k4 = st.rate(axpy(full, dt, k3h), false);
  // y_{n+1} = E y + dt/6 (E k1 + 2 E' (k2 + k3) + k4), E = e^{L dt}, E' = e^{L dt / 2}.
  Fields mid;
  for (std::size_t i = 0; i < y.size(); ++i)
    mid.push_back(keep_kind(y[i], k1h[i] + 2.0 * (k2[i] + k3[i])));
  auto mid_h = st.propagate(mid, 0.5 * dt);
  Fields next;
  for (std::size_t i = 0; i < y.size(); ++i)
    next.push_back(keep_kind(y[i], full[i] + (dt / 6.0) * (mid_h[i] + k4[i])));
  return st.finish(next, dt);
}

FlowTrajectory run_flow(FlowState& state, double T, double dt, int record_every,
                        const StepOptions& opts, bool keep_snapshots) {
  if (record_every < 1) throw ConfigError("record_every must be at least 1");
  if (!(T >= 0.0)) throw ConfigError("flow time T must be non-negative");
  if (!(dt > 0.0)) throw StepTooLarge("time step must be positive");

  FlowTrajectory traj;
  auto record = [&] {
    traj.times.push_back(state.t);
    traj.W_values.push_back(4.0 * quadrature(state.p.p * state.p.p).real());
    traj.dirac_residuals.push_back(residual_of(state.p, state.sols));
    traj.p_integrals.push_back(quadrature(state.p.p).real());
    if (keep_snapshots) traj.p_snapshots.push_back(state.p.p);
  };

  const double t_end = state.t + T;
  long full = static_cast<long>(std::floor(T / dt * (1.0 + 1e-12)));
  const double rest = T - full * dt;
  const bool partial = rest > 1e-12 * std::max(T, dt);
  record();
  for (long k = 1; k <= full; ++k) {
    state = step_rk4(state, dt, opts);
    if (k % record_every == 0 && (k < full || partial)) record();
  }
  if (partial) state = step_rk4(state, rest, opts);
  state.t = t_end;
  record();
  return traj;
}

double relative_W_drift(const FlowTrajectory& traj) {
  if (traj.W_values.empty()) return 0.0;
  const double w0 = traj.W_values.front();
  double d = 0.0;
  for (double w : traj.W_values) d = std::max(d, std::abs(w - w0));
  return w0 != 0.0 ? d / std::abs(w0) : d;
}

void write_trajectory(const std::string& prefix, const FlowTrajectory& traj,
                      const std::string& params_json, const std::string& config_hash) {
  {
    std::ofstream out(prefix + ".csv");
    if (!out) throw ConfigError("cannot write " + prefix + ".csv");
    if (!config_hash.empty()) out << "# config_hash=" << config_hash << '\n';
    out << "t,W,dirac_residual\n";
    for (std::size_t k = 0; k < traj.times.size(); ++k)
      out << format_double(traj.times[k]) << ',' << format_double(traj.W_values[k]) << ','
          << format_double(traj.dirac_residuals[k]) << '\n';
  }
  nlohmann::json j;
  j["parameters"] = nlohmann::json::parse(params_json);
  j["p_integrals"] = traj.p_integrals;
  j["relative_W_drift"] = relative_W_drift(traj);
  j["records"] = traj.times.size();
  if (!config_hash.empty()) j["config_hash"] = config_hash;
  std::vector<std::string> snaps;
  for (std::size_t k = 0; k < traj.p_snapshots.size(); ++k) {
    const auto path = prefix + "_p" + std::to_string(k) + ".csv";
    write_field_csv(path, traj.p_snapshots[k], config_hash);
    snaps.push_back(path);
  }
  j["snapshots"] = snaps;
  std::ofstream out(prefix + ".json");
  if (!out) throw ConfigError("cannot write " + prefix + ".json");
  out << j.dump(2) << '\n';
}

}  // namespace wforge
