#pragma once

#include <array>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "checks.hpp"
#include "wforge/dirac.hpp"
#include "wforge/grid.hpp"
#include "wforge/weierstrass.hpp"

namespace wforge::cli {

/// sum of coef * f(kx x + ky y + phase) with f in {const, cos, sin, exp};
/// coef, kx, ky and phase may be complex ([re, im]).
struct Term {
  enum class Fn { constant, cos, sin, exp } fn = Fn::constant;
  cplx coef = 1.0;
  cplx kx = 0.0, ky = 0.0, phase = 0.0;
};

struct Expression {
  std::vector<Term> terms;
  cplx operator()(double x, double y) const;
  bool depends_on_y() const;
};

/// Accepts a number, a [re, im] pair, a single term object or a list of
/// terms. Throws ConfigError naming `where`.
Expression parse_expression(const nlohmann::json& j, const std::string& where);

struct OutputSpec {
  enum class Kind { obj, csv, report, solutions, trajectory } kind;
  std::string path;
  /// 1-based coordinate triple for OBJ files.
  std::array<int, 3> project{1, 2, 3};
  bool snapshot_meshes = false;
};

struct FlowSpec {
  double T = 0.0;
  double dt = 0.0;
  int record_every = 1;
  std::string scheme = "classical";
  bool allow_large_step = false;
  double cfl = 0.1;
};

struct RunConfig {
  nlohmann::json raw;
  /// FNV-1a of the canonical JSON dump, 16 hex digits.
  std::string hash;
  std::string base_dir;

  ComplexGrid grid{8, 8, 0.0, 0.0, 1.0, 1.0, BoundaryMode::periodic};
  SystemKind kind = SystemKind::euclidean;
  std::optional<nlohmann::json> potential;
  nlohmann::json solutions;
  nlohmann::json ambient;
  AmbientTag ambient_tag = AmbientTag::r3;
  std::optional<FlowSpec> flow;
  std::vector<OutputSpec> outputs;

  checks::Tolerances tolerances;
  double solver_tol = 1e-10;
  int solver_max_iter = 500;
  double solver_damping = 1.0;
  double degeneracy = 1e-8;

  std::string resolve(const std::string& path) const;
};

/// Parses and validates; throws ConfigError with the offending field.
RunConfig parse_config(const std::string& text, const std::string& base_dir = ".");
RunConfig load_config(const std::string& path);

std::string fnv1a_hex(const std::string& bytes);

struct Problem {
  Potential potential;
  std::vector<SpinorSolution> solutions;
};

/// Samples the potential and produces the solutions (analytic family,
/// fixed-point solves of seeds, or solution manifests).
Problem build_problem(const RunConfig& cfg);

/// Builds the chart requested by the ambient block; checks the number of
/// solutions it needs.
SurfaceChart build_chart(const RunConfig& cfg, const Problem& pb);

/// Number of solutions the ambient block refers to (for validation).
int solutions_needed(const RunConfig& cfg);

}  // namespace wforge::cli
