#pragma once

#include <functional>
#include <string>
#include <vector>

namespace wforge::checks {

enum class Level { quick, full };

/// Thresholds of the verification suite. The defaults are the acceptance
/// values; a config `tolerances` block may override any of them by name.
struct Tolerances {
  double dirac_identity = 1e-7;
  /// Allowed relative deviation from an exact halving of the residuals.
  double halving_band = 0.25;
  double conformality = 1e-6;
  /// Smallest improvement factor per grid doubling (second order).
  double refinement_factor = 4.0;
  double metric_identity = 1e-6;
  double curvature_rel = 1e-4;
  double curvature_floor = 1e-3;
  double cylinder_abs = 1e-6;
  double enneper_H = 1e-6;
  double willmore_formula_rel = 1e-5;
  double willmore_direct_rel = 1e-4;
  double reduction = 1e-9;
  double quadric = 1e-8;
  double gaussmap = 1e-6;
  double s4_pointwise = 1e-8;
  double k0_rate_band = 0.3;
  double w_drift = 1e-6;
  double drift_ratio = 16.0;
  double drift_ratio_band = 0.3;
  double fixed_point = 1e-12;
  double surface_w_rel = 1e-4;
  double stacked_metric = 1e-8;
};

/// Parses a JSON object of overrides; throws ConfigError on unknown keys or
/// non-numeric values.
Tolerances tolerances_from_json(const std::string& json_text, Tolerances base = {});
std::vector<std::string> tolerance_names();

struct CheckResult {
  std::string id;
  std::string title;
  bool pass = false;
  /// Measured values against their thresholds.
  std::string detail;
  double seconds = 0.0;
};

struct Check {
  std::string id;
  std::string title;
  std::function<CheckResult(Level, const Tolerances&)> run;
};

/// AC1 to AC10 plus input robustness, in order.
const std::vector<Check>& all_checks();

/// Runs every check (or those whose id is listed in `only`); exceptions are
/// reported as failures.
std::vector<CheckResult> run_checks(Level level, const Tolerances& tol,
                                    const std::vector<std::string>& only = {},
                                    const std::function<void(const CheckResult&)>& on_result = {});

/// "[PASS] AC1 title (0.12 s)" and an indented detail line.
std::string format_result(const CheckResult& r);
std::string format_table(const std::vector<CheckResult>& results);

}  // namespace wforge::checks
