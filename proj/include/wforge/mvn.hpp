#pragma once

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "wforge/dirac.hpp"
#include "wforge/grid.hpp"

namespace wforge {

/// omega with d_zbar(omega) = d_z(p^2), zero mean. Throws NonPeriodicGrid.
ScalarField omega_of(const Potential& p);

/// p_t = p_zzz + 3 p_z omega + (3/2) p omega_z + c.c., with products
/// truncated by the 2/3 rule. The conjugate half is evaluated separately,
/// so the imaginary part of the sum measures how consistent the inputs are;
/// throws ImaginaryDrift above 1e-8 of the sup norm, otherwise returns the
/// real part.
ScalarField rhs_p(const Potential& p);
ScalarField rhs_p(const Potential& p, const ScalarField& omega);

struct SpinorRate {
  ScalarField psi_t;
  ScalarField phi_t;
};

/// psi_t = A psi + B phi, phi_t = C psi + D phi with
///   A = d_z^3 + d_zbar^3 + 3 conj(omega) d_zbar + (3/2) conj(omega)_zbar
///   B = -3 p_z d_z + 3 p omega
///   C = 3 p_zbar d_zbar - 3 p conj(omega)
///   D = d_z^3 + d_zbar^3 + 3 omega d_z + (3/2) omega_z
SpinorRate apply_ABCD(const Potential& p, const ScalarField& omega, const SpinorSolution& s);

/// Right-hand sides of a flow, split as y_t = L y + N(y) with L a Fourier
/// multiplier shared by p and the spinors. The default is the mVN equation
/// (L = d_z^3 + d_zbar^3); other members of the hierarchy plug in here.
struct FlowLaw {
  std::string name;
  std::function<cplx(double kx, double ky)> linear_symbol;
  std::function<ScalarField(const Potential&)> auxiliary;
  std::function<ScalarField(const Potential&, const ScalarField& aux)> p_nonlinear;
  std::function<SpinorRate(const Potential&, const ScalarField& aux, const SpinorSolution&)>
      spinor_nonlinear;
};

FlowLaw mvn_law();

/// Everything in rhs_p except p_zzz + p_zbarzbarzbar.
ScalarField rhs_p_nonlinear(const Potential& p, const ScalarField& omega);
/// apply_ABCD without the d_z^3 + d_zbar^3 terms.
SpinorRate apply_ABCD_nonlinear(const Potential& p, const ScalarField& omega,
                                const SpinorSolution& s);

struct FlowState {
  double t = 0.0;
  Potential p;
  std::vector<SpinorSolution> sols;
  ScalarField omega;
};

/// Throws NonPeriodicGrid, KindMismatch (non-euclidean) or GridMismatch.
FlowState make_flow_state(const Potential& p, std::vector<SpinorSolution> sols = {},
                          double t = 0.0);

enum class StepScheme {
  /// Classical Runge-Kutta on y_t = L y + N(y).
  classical,
  /// Runge-Kutta on the integrating-factor variable e^{-L t} y (Lawson):
  /// L is integrated exactly, so W drifts only through N.
  integrating_factor,
};

struct StepOptions {
  StepScheme scheme = StepScheme::classical;
  /// dt must not exceed cfl * h^3, h the smaller grid spacing.
  double cfl = 0.1;
  bool allow_large_step = false;
  FlowLaw law = mvn_law();
};

double max_stable_dt(const ComplexGrid& g, double cfl = 0.1);

/// One fourth-order Runge-Kutta step applied jointly to p and the solutions.
/// Throws StepTooLarge when dt is not positive or breaks the guard.
FlowState step_rk4(const FlowState& state, double dt, const StepOptions& opts = {});

struct FlowTrajectory {
  std::vector<double> times;
  std::vector<double> W_values;
  /// Largest Dirac residual norm among the evolved solutions (0 without).
  std::vector<double> dirac_residuals;
  /// int p dx dy; reported, not expected to be conserved.
  std::vector<double> p_integrals;
  std::vector<ScalarField> p_snapshots;
};

/// Advances `state` to t + T in steps of dt (the last one shortened if dt
/// does not divide T) and records every `record_every` steps plus the
/// endpoints. Throws ConfigError when record_every < 1 or T < 0.
FlowTrajectory run_flow(FlowState& state, double T, double dt, int record_every,
                        const StepOptions& opts = {}, bool keep_snapshots = false);

/// max |W - W_0| / |W_0| over the trajectory.
double relative_W_drift(const FlowTrajectory& traj);

/// <prefix>.csv with columns t,W,dirac_residual; <prefix>.json with the run
/// parameters, p integrals and config hash; <prefix>_p<k>.csv snapshots.
void write_trajectory(const std::string& prefix, const FlowTrajectory& traj,
                      const std::string& params_json = "{}",
                      const std::string& config_hash = {});

}  // namespace wforge
