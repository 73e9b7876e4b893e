#include "config.hpp"

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "wforge/error.hpp"
#include "wforge/field_io.hpp"

namespace wforge::cli {

namespace {

using nlohmann::json;

[[noreturn]] void fail(const std::string& where, const std::string& what) {
  throw ConfigError(where + ": " + what);
}

const json& require(const json& j, const char* key, const std::string& where) {
  if (!j.is_object() || !j.contains(key)) fail(where, std::string("missing field '") + key + "'");
  return j.at(key);
}

double number(const json& j, const std::string& where) {
  if (!j.is_number()) fail(where, "expected a number, got " + j.dump());
  return j.get<double>();
}

double number_or(const json& j, const char* key, double fallback, const std::string& where) {
  return j.contains(key) ? number(j.at(key), where + "." + key) : fallback;
}

int integer(const json& j, const std::string& where) {
  if (!j.is_number_integer()) fail(where, "expected an integer, got " + j.dump());
  return j.get<int>();
}

cplx complex_value(const json& j, const std::string& where) {
  if (j.is_number()) return j.get<double>();
  if (j.is_array() && j.size() == 2 && j[0].is_number() && j[1].is_number())
    return {j[0].get<double>(), j[1].get<double>()};
  fail(where, "expected a number or [re, im], got " + j.dump());
}

std::vector<cplx> complex_list(const json& j, const std::string& where) {
  if (!j.is_array()) fail(where, "expected a list");
  std::vector<cplx> out;
  for (std::size_t k = 0; k < j.size(); ++k)
    out.push_back(complex_value(j[k], where + "[" + std::to_string(k) + "]"));
  return out;
}

std::vector<std::pair<cplx, cplx>> complex_pairs(const json& j, const std::string& where) {
  if (!j.is_array()) fail(where, "expected a list of pairs");
  std::vector<std::pair<cplx, cplx>> out;
  for (std::size_t k = 0; k < j.size(); ++k) {
    const auto w = where + "[" + std::to_string(k) + "]";
    if (!j[k].is_array() || j[k].size() != 2) fail(w, "expected a pair");
    out.emplace_back(complex_value(j[k][0], w + "[0]"), complex_value(j[k][1], w + "[1]"));
  }
  return out;
}

Term parse_term(const json& j, const std::string& where) {
  if (!j.is_object()) fail(where, "expected a term object");
  static const std::vector<std::string> allowed{"fn", "coef", "kx", "ky", "phase"};
  for (const auto& [key, _] : j.items())
    if (std::find(allowed.begin(), allowed.end(), key) == allowed.end())
      fail(where, "unknown key '" + key + "' (allowed: fn, coef, kx, ky, phase)");
  Term t;
  const std::string fn = j.value("fn", "const");
  if (fn == "const")
    t.fn = Term::Fn::constant;
  else if (fn == "cos")
    t.fn = Term::Fn::cos;
  else if (fn == "sin")
    t.fn = Term::Fn::sin;
  else if (fn == "exp")
    t.fn = Term::Fn::exp;
  else
    fail(where + ".fn", "'" + fn + "' is not one of const, cos, sin, exp");
  if (j.contains("coef")) t.coef = complex_value(j["coef"], where + ".coef");
  if (j.contains("kx")) t.kx = complex_value(j["kx"], where + ".kx");
  if (j.contains("ky")) t.ky = complex_value(j["ky"], where + ".ky");
  if (j.contains("phase")) t.phase = complex_value(j["phase"], where + ".phase");
  return t;
}

ComplexGrid parse_grid(const json& j) {
  const std::string w = "grid";
  int nx = 0, ny = 0;
  if (j.contains("n")) {
    nx = ny = integer(j["n"], w + ".n");
  } else {
    nx = integer(require(j, "nx", w), w + ".nx");
    ny = integer(require(j, "ny", w), w + ".ny");
  }
  const std::string mode = j.value("boundary", "periodic");
  BoundaryMode bm;
  if (mode == "periodic")
    bm = BoundaryMode::periodic;
  else if (mode == "open")
    bm = BoundaryMode::open;
  else
    fail(w + ".boundary", "expected 'periodic' or 'open'");
  const double two_pi = 2.0 * std::acos(-1.0);
  const double lx = number_or(j, "lx", two_pi, w), ly = number_or(j, "ly", two_pi, w);
  const double x0 = number_or(j, "x0", 0.0, w), y0 = number_or(j, "y0", 0.0, w);
  try {
    return ComplexGrid(nx, ny, x0, y0, lx, ly, bm);
  } catch (const std::exception& e) {
    fail(w, e.what());
  }
}

// How many solutions the solutions block yields.
int count_solutions(const json& s) {
  if (s.contains("select")) return static_cast<int>(s["select"].size());
  if (s.contains("seeds")) return static_cast<int>(s["seeds"].size());
  if (s.contains("files")) return static_cast<int>(s["files"].size());
  if (s.contains("family")) {
    const auto& f = s["family"];
    const std::string type = f.value("type", "");
    if (type == "minimal") return 1;
    if (type == "exponential") return f.contains("modes") ? static_cast<int>(f["modes"].size()) : 0;
    if (type == "radial_gaussian")
      return f.contains("orders") ? static_cast<int>(f["orders"].size()) : 2;
    if (type == "one_dimensional")
      return f.contains("coefficients") ? static_cast<int>(f["coefficients"].size()) : 2;
  }
  return 0;
}

FamilyDescriptor parse_family(const json& f, const std::string& w) {
  const std::string type = require(f, "type", w).get<std::string>();
  if (type == "minimal") {
    MinimalFamily m;
    m.psi_bar_coeffs = complex_list(require(f, "psi_bar_coeffs", w), w + ".psi_bar_coeffs");
    m.phi_coeffs = complex_list(require(f, "phi_coeffs", w), w + ".phi_coeffs");
    return m;
  }
  if (type == "exponential") {
    ExponentialFamily e;
    e.p = complex_value(require(f, "p", w), w + ".p");
    e.modes = complex_pairs(require(f, "modes", w), w + ".modes");
    return e;
  }
  if (type == "radial_gaussian") {
    RadialGaussianFamily r;
    r.amplitude = number_or(f, "amplitude", 1.0, w);
    r.width = number_or(f, "width", 1.0, w);
    if (f.contains("orders")) {
      r.orders.clear();
      for (const auto& o : f["orders"]) r.orders.push_back(integer(o, w + ".orders"));
    }
    return r;
  }
  if (type == "one_dimensional") {
    auto p = parse_expression(require(f, "p", w), w + ".p");
    if (p.depends_on_y()) fail(w + ".p", "a one-dimensional potential may not depend on y");
    OneDimensionalFamily o;
    o.p_of_x = [p](double x) { return p(x, 0.0).real(); };
    if (f.contains("coefficients"))
      o.coefficients = complex_pairs(f["coefficients"], w + ".coefficients");
    return o;
  }
  fail(w + ".type", "'" + type + "' is not one of minimal, exponential, radial_gaussian, one_dimensional");
}

OutputSpec parse_output(const json& o, const std::string& w) {
  OutputSpec out{};
  int kinds = 0;
  for (auto [key, kind] : {std::pair{"obj", OutputSpec::Kind::obj},
                           std::pair{"csv", OutputSpec::Kind::csv},
                           std::pair{"report", OutputSpec::Kind::report},
                           std::pair{"solutions", OutputSpec::Kind::solutions},
                           std::pair{"trajectory", OutputSpec::Kind::trajectory}}) {
    if (o.contains(key)) {
      if (!o[key].is_string()) fail(w + "." + key, "expected a path");
      out.kind = kind;
      out.path = o[key].get<std::string>();
      ++kinds;
    }
  }
  if (kinds != 1) fail(w, "needs exactly one of obj, csv, report, solutions, trajectory");
  if (o.contains("project")) {
    const auto& p = o["project"];
    if (!p.is_array() || p.size() != 3) fail(w + ".project", "expected three 1-based indices");
    for (int k = 0; k < 3; ++k) out.project[k] = integer(p[k], w + ".project");
  }
  out.snapshot_meshes = o.value("snapshot_meshes", false);
  return out;
}

}  // namespace

cplx Expression::operator()(double x, double y) const {
  cplx s = 0.0;
  for (const auto& t : terms) {
    const cplx a = t.kx * x + t.ky * y + t.phase;
    switch (t.fn) {
      case Term::Fn::constant: s += t.coef; break;
      case Term::Fn::cos: s += t.coef * std::cos(a); break;
      case Term::Fn::sin: s += t.coef * std::sin(a); break;
      case Term::Fn::exp: s += t.coef * std::exp(a); break;
    }
  }
  return s;
}

bool Expression::depends_on_y() const {
  for (const auto& t : terms)
    if (t.fn != Term::Fn::constant && t.ky != 0.0) return true;
  return false;
}

Expression parse_expression(const json& j, const std::string& where) {
  Expression e;
  if (j.is_number() || (j.is_array() && j.size() == 2 && j[0].is_number())) {
    e.terms.push_back(Term{Term::Fn::constant, complex_value(j, where)});
  } else if (j.is_object()) {
    e.terms.push_back(parse_term(j, where));
  } else if (j.is_array()) {
    for (std::size_t k = 0; k < j.size(); ++k)
      e.terms.push_back(parse_term(j[k], where + "[" + std::to_string(k) + "]"));
  } else {
    fail(where, "expected a number, a term or a list of terms");
  }
  return e;
}

std::string fnv1a_hex(const std::string& bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

std::string RunConfig::resolve(const std::string& path) const {
  std::filesystem::path p(path);
  return p.is_absolute() ? path : (std::filesystem::path(base_dir) / p).string();
}

RunConfig parse_config(const std::string& text, const std::string& base_dir) {
  RunConfig c;
  try {
    c.raw = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("config is not valid JSON: ") + e.what());
  }
  if (!c.raw.is_object()) throw ConfigError("config must be a JSON object");
  static const std::vector<std::string> sections{"grid",    "system",  "solutions", "ambient",
                                                 "flow",    "outputs", "tolerances", "name"};
  for (const auto& [key, _] : c.raw.items())
    if (std::find(sections.begin(), sections.end(), key) == sections.end())
      fail(key, "unknown section");
  c.hash = fnv1a_hex(c.raw.dump());
  c.base_dir = base_dir;
  const auto& r = c.raw;

  c.grid = parse_grid(require(r, "grid", "config"));

  if (r.contains("system")) {
    const auto& s = r["system"];
    try {
      c.kind = system_kind_from_string(s.value("kind", "euclidean"));
    } catch (const std::exception& e) {
      fail("system.kind", e.what());
    }
    if (s.contains("potential")) c.potential = s["potential"];
  }

  c.solutions = r.value("solutions", json::object());
  if (!c.solutions.is_object()) fail("solutions", "expected an object");
  {
    int sources = 0;
    for (const char* k : {"family", "seeds", "files"}) sources += c.solutions.contains(k) ? 1 : 0;
    if (sources > 1) fail("solutions", "give one of family, seeds, files");
    if (c.solutions.contains("family") && c.potential)
      fail("system.potential", "an analytic family fixes its own potential; drop one of the two");
    if (!c.solutions.contains("family") && !c.potential && sources > 0)
      fail("system.potential", "required unless the solutions come from a family");
    if (c.solutions.contains("family")) parse_family(c.solutions["family"], "solutions.family");
    if (c.solutions.contains("seeds")) {
      const auto& seeds = c.solutions["seeds"];
      if (!seeds.is_array() || seeds.empty()) fail("solutions.seeds", "expected a non-empty list");
      for (std::size_t k = 0; k < seeds.size(); ++k) {
        const auto w = "solutions.seeds[" + std::to_string(k) + "]";
        parse_expression(require(seeds[k], "psi", w), w + ".psi");
        parse_expression(require(seeds[k], "phi", w), w + ".phi");
      }
    }
  }
  if (c.potential && !c.potential->is_object()) parse_expression(*c.potential, "system.potential");

  c.ambient = r.value("ambient", json{{"type", "r3"}});
  try {
    const std::string t = c.ambient.value("type", "r3");
    c.ambient_tag = t == "s4" ? AmbientTag::conformal4 : ambient_tag_from_string(t);
  } catch (const std::exception& e) {
    fail("ambient.type", e.what());
  }
  if (c.ambient_tag == AmbientTag::glm)
    fail("ambient.type", "glm charts need one solution set per potential and are not configurable");

  if (r.contains("tolerances")) {
    json rest = json::object();
    for (const auto& [key, value] : r["tolerances"].items()) {
      const auto w = "tolerances." + key;
      if (key == "solver")
        c.solver_tol = number(value, w);
      else if (key == "degeneracy")
        c.degeneracy = number(value, w);
      else
        rest[key] = value;
    }
    c.tolerances = checks::tolerances_from_json(rest.dump());
  }
  if (c.solutions.contains("max_iter")) c.solver_max_iter = integer(c.solutions["max_iter"], "solutions.max_iter");
  if (c.solutions.contains("damping")) c.solver_damping = number(c.solutions["damping"], "solutions.damping");
  if (c.solutions.contains("tol")) c.solver_tol = number(c.solutions["tol"], "solutions.tol");

  if (r.contains("flow")) {
    const auto& f = r["flow"];
    FlowSpec fs;
    fs.T = number(require(f, "T", "flow"), "flow.T");
    fs.dt = number(require(f, "dt", "flow"), "flow.dt");
    fs.record_every = integer(require(f, "record_every", "flow"), "flow.record_every");
    if (fs.record_every < 1) fail("flow.record_every", "must be at least 1");
    if (!(fs.T >= 0.0)) fail("flow.T", "must be non-negative");
    fs.scheme = f.value("scheme", "classical");
    if (fs.scheme != "classical" && fs.scheme != "integrating_factor")
      fail("flow.scheme", "expected 'classical' or 'integrating_factor'");
    fs.allow_large_step = f.value("allow_large_step", false);
    fs.cfl = number_or(f, "cfl", 0.1, "flow");
    c.flow = fs;
  }

  if (r.contains("outputs")) {
    const auto& o = r["outputs"];
    if (!o.is_array()) fail("outputs", "expected a list");
    for (std::size_t k = 0; k < o.size(); ++k)
      c.outputs.push_back(parse_output(o[k], "outputs[" + std::to_string(k) + "]"));
  }

  const int have = count_solutions(c.solutions);
  const int need = solutions_needed(c);
  if (need > have)
    fail("ambient", "'" + c.ambient.value("type", "r3") + "' refers to " + std::to_string(need) +
                        " solution(s) but " + std::to_string(have) + " are declared");
  return c;
}

RunConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  auto dir = std::filesystem::path(path).parent_path();
  return parse_config(ss.str(), dir.empty() ? "." : dir.string());
}

int solutions_needed(const RunConfig& cfg) {
  const auto& a = cfg.ambient;
  auto max_index = [&](const char* key, std::vector<int> fallback) {
    std::vector<int> idx = fallback;
    if (a.contains(key)) {
      idx.clear();
      for (const auto& v : a[key]) idx.push_back(integer(v, std::string("ambient.") + key));
    }
    int m = -1;
    for (int i : idx) {
      if (i < 0) fail(std::string("ambient.") + key, "indices are 0-based and non-negative");
      m = std::max(m, i);
    }
    return m + 1;
  };
  switch (cfg.ambient_tag) {
    case AmbientTag::r3: {
      const int i = a.contains("solution") ? integer(a["solution"], "ambient.solution") : 0;
      if (i < 0) fail("ambient.solution", "must be non-negative");
      return i + 1;
    }
    case AmbientTag::r4:
    case AmbientTag::split22:
    case AmbientTag::minkowski4:
    case AmbientTag::conformal4: {
      if (a.contains("pair") && (!a["pair"].is_array() || a["pair"].size() != 2))
        fail("ambient.pair", "expected two indices");
      return max_index("pair", {0, 1});
    }
    case AmbientTag::stacked: {
      const auto& plan = require(a, "plan", "ambient");
      if (!plan.is_array() || plan.empty()) fail("ambient.plan", "expected a non-empty list");
      int m = 0;
      for (const auto& blk : plan) {
        if (!blk.is_array() || blk.empty() || blk.size() > 2)
          fail("ambient.plan", "each block is [alpha] or [alpha, beta]");
        for (const auto& v : blk) m = std::max(m, integer(v, "ambient.plan") + 1);
      }
      return m;
    }
    case AmbientTag::cn: {
      const auto& A = require(a, "coefficients", "ambient");
      if (!A.is_array() || A.empty() || !A[0].is_array())
        fail("ambient.coefficients", "expected A[gamma][alpha][beta]");
      return static_cast<int>(A[0].size());
    }
    case AmbientTag::glm: return 0;
  }
  return 0;
}

Problem build_problem(const RunConfig& cfg) {
  const auto& g = cfg.grid;
  const auto& s = cfg.solutions;
  if (s.contains("family")) {
    auto r = analytic_family(g, cfg.kind, parse_family(s["family"], "solutions.family"));
    Problem pb{r.potential, {}};
    if (s.contains("select")) {
      for (const auto& v : s["select"]) {
        const int i = integer(v, "solutions.select");
        if (i < 0 || i >= static_cast<int>(r.solutions.size()))
          fail("solutions.select", "index " + std::to_string(i) + " out of range");
        pb.solutions.push_back(r.solutions[i]);
      }
    } else {
      pb.solutions = r.solutions;
    }
    return pb;
  }

  std::optional<Potential> p;
  if (!cfg.potential) {
    p.emplace(ScalarField::real_part(ScalarField(g)), cfg.kind);
  } else if (cfg.potential->is_object() && cfg.potential->contains("csv")) {
    auto f = read_field_csv(cfg.resolve((*cfg.potential)["csv"].get<std::string>()));
    if (!(f.grid() == g)) fail("system.potential.csv", "grid differs from the grid block");
    p.emplace(cfg.kind == SystemKind::complex_p ? f : ScalarField::real_part(f), cfg.kind);
  } else {
    auto e = parse_expression(*cfg.potential, "system.potential");
    auto f = ScalarField::sample(g, [&](cplx z) { return e(z.real(), z.imag()); });
    if (cfg.kind != SystemKind::complex_p) {
      if (max_imag(f) > 0.0) fail("system.potential", "a real system needs a real potential");
      f = ScalarField::real_part(f);
    }
    p.emplace(f, cfg.kind);
  }

  Problem pb{*p, {}};
  if (s.contains("seeds")) {
    const auto& seeds = s["seeds"];
    for (std::size_t k = 0; k < seeds.size(); ++k) {
      const auto w = "solutions.seeds[" + std::to_string(k) + "]";
      auto psi = parse_expression(seeds[k]["psi"], w + ".psi");
      auto phi = parse_expression(seeds[k]["phi"], w + ".phi");
      auto seed = make_seed(ScalarField::sample(g, [&](cplx z) { return psi(z.real(), z.imag()); }),
                            ScalarField::sample(g, [&](cplx z) { return phi(z.real(), z.imag()); }),
                            cfg.kind, "seed" + std::to_string(k));
      pb.solutions.push_back(solve_fixed_point(*p, seed, cfg.solver_tol, cfg.solver_max_iter,
                                               cfg.solver_damping));
    }
  } else if (s.contains("files")) {
    for (const auto& f : s["files"]) {
      auto sol = read_solution(cfg.resolve(f.get<std::string>()));
      if (!(sol.grid() == g)) fail("solutions.files", "solution grid differs from the grid block");
      pb.solutions.push_back(make_solution(*p, sol.psi, sol.phi, sol.label));
    }
  }
  return pb;
}

SurfaceChart build_chart(const RunConfig& cfg, const Problem& pb) {
  const auto& a = cfg.ambient;
  const auto& sols = pb.solutions;
  const int have = static_cast<int>(sols.size());
  if (solutions_needed(cfg) > have)
    fail("ambient", "needs " + std::to_string(solutions_needed(cfg)) + " solution(s), have " +
                        std::to_string(have));
  BuildOptions opt;
  opt.degeneracy_threshold = cfg.degeneracy;
  auto pair = [&]() -> std::pair<int, int> {
    if (!a.contains("pair")) return {0, 1};
    return {a["pair"][0].get<int>(), a["pair"][1].get<int>()};
  };
  switch (cfg.ambient_tag) {
    case AmbientTag::r3: return build_r3(sols.at(a.value("solution", 0)), opt);
    case AmbientTag::r4: {
      auto [i, j] = pair();
      return build_r4(sols[i], sols[j], opt);
    }
    case AmbientTag::split22: {
      auto [i, j] = pair();
      return build_split22(sols[i], sols[j], opt);
    }
    case AmbientTag::minkowski4: {
      auto [i, j] = pair();
      return with_ambient(build_r4(sols[i], sols[j], opt), AmbientSpec::minkowski4());
    }
    case AmbientTag::conformal4: {
      auto [i, j] = pair();
      auto chart = build_r4(sols[i], sols[j], opt);
      if (a.contains("sigma")) {
        auto e = parse_expression(a["sigma"], "ambient.sigma");
        auto sigma = ScalarField::real_part(
            ScalarField::sample(cfg.grid, [&](cplx z) { return e(z.real(), z.imag()); }));
        return with_ambient(std::move(chart), AmbientSpec::conformal(sigma));
      }
      const double K0 = number_or(a, "K0", 1.0, "ambient");
      if (!(K0 > 0.0)) fail("ambient.K0", "must be positive");
      return with_ambient(std::move(chart), AmbientSpec::s4(K0));
    }
    case AmbientTag::stacked: {
      std::vector<StackBlock> plan;
      for (const auto& blk : a["plan"])
        plan.push_back(blk.size() == 1 ? StackBlock{blk[0].get<int>(), -1}
                                       : StackBlock{blk[0].get<int>(), blk[1].get<int>()});
      return build_stacked(sols, plan, opt);
    }
    case AmbientTag::cn: {
      CoefficientTensor A;
      const auto& J = a["coefficients"];
      for (std::size_t gi = 0; gi < J.size(); ++gi) {
        A.emplace_back();
        for (std::size_t ai = 0; ai < J[gi].size(); ++ai)
          A.back().push_back(complex_list(J[gi][ai], "ambient.coefficients"));
      }
      return build_cn(sols, A, opt);
    }
    case AmbientTag::glm: break;
  }
  fail("ambient.type", "unsupported");
}

}  // namespace wforge::cli
