#include <CLI11.hpp>

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <nlohmann/json.hpp>
#include <sstream>

#include "checks.hpp"
#include "config.hpp"
#include "wforge/error.hpp"
#include "wforge/field_io.hpp"
#include "wforge/gaussmap.hpp"
#include "wforge/geometry.hpp"
#include "wforge/mvn.hpp"
#include "wforge/operators.hpp"
#include "wforge/weierstrass.hpp"

using namespace wforge;
namespace fs = std::filesystem;

namespace {

enum Exit { ok = 0, invalid = 1, degenerate = 2, numerical = 3 };

struct RunArgs {
  std::string config;
  std::string out_dir = ".";
  bool strict = false;
};

std::string out_path(const RunArgs& a, const std::string& p) {
  fs::path path(p);
  if (path.is_absolute()) return p;
  fs::create_directories(a.out_dir);
  auto full = fs::path(a.out_dir) / path;
  if (full.has_parent_path()) fs::create_directories(full.parent_path());
  return full.string();
}

std::array<int, 3> zero_based(const std::array<int, 3>& t, int dim) {
  std::array<int, 3> z{};
  for (int k = 0; k < 3; ++k) {
    if (t[k] < 1 || t[k] > dim)
      throw ConfigError("project: index " + std::to_string(t[k]) + " outside 1.." +
                        std::to_string(dim));
    z[k] = t[k] - 1;
  }
  return z;
}

int warn_exit(const std::vector<std::string>& warnings, bool strict) {
  for (const auto& w : warnings) std::cerr << "warning: " << w << '\n';
  return !warnings.empty() && strict ? degenerate : ok;
}

GeometryReport geometry(const SurfaceChart& chart, const Potential& p) {
  if (chart.ambient.tag == AmbientTag::conformal4) return conformal_ambient_geometry(chart, p);
  return analyze(chart, p);
}

int cmd_synth(const RunArgs& a) {
  auto cfg = cli::load_config(a.config);
  auto pb = cli::build_problem(cfg);
  auto chart = cli::build_chart(cfg, pb);
  std::vector<std::string> warnings = chart.warnings;

  std::optional<GeometryReport> rep;
  if (!chart.ambient.complex_coordinates()) {
    rep = geometry(chart, pb.potential);
    warnings.insert(warnings.end(), rep->warnings.begin(), rep->warnings.end());
    std::cout << geometry_summary_json(*rep, cfg.hash) << '\n';
  } else {
    nlohmann::json j{{"ambient", to_string(chart.ambient.tag)},
                     {"dimension", chart.dimension()},
                     {"masked_fraction", chart.masked_fraction()},
                     {"config_hash", cfg.hash}};
    std::cout << j.dump(2) << '\n';
  }

  for (const auto& o : cfg.outputs) {
    const auto path = out_path(a, o.path);
    switch (o.kind) {
      case cli::OutputSpec::Kind::obj:
        if (chart.ambient.complex_coordinates())
          throw ConfigError("outputs: OBJ export needs real coordinates; use csv");
        write_chart_obj(path, chart, zero_based(o.project, chart.dimension()), cfg.hash);
        break;
      case cli::OutputSpec::Kind::csv: write_chart_csv(path, chart, cfg.hash); break;
      case cli::OutputSpec::Kind::report: {
        if (!rep) throw ConfigError("outputs: no geometry report for complex charts");
        write_geometry_report(path, *rep, cfg.hash);
        const bool pair = pb.solutions.size() >= 2 && pb.potential.kind == SystemKind::euclidean;
        if (pair) {
          auto k = kenmotsu_from_spinors(pb.solutions[0], pb.potential);
          auto h = ho_from_spinors(pb.solutions[0], pb.solutions[1], pb.potential);
          std::ofstream(path + "_gaussmap.json") << gaussmap_report_json(&k, &h, cfg.hash) << '\n';
        }
        break;
      }
      case cli::OutputSpec::Kind::solutions: {
        write_field_csv(path + "_p.csv", pb.potential.p, cfg.hash);
        for (std::size_t k = 0; k < pb.solutions.size(); ++k)
          write_solution(path + "_s" + std::to_string(k), pb.solutions[k],
                         fs::path(path + "_p.csv").filename().string(), cfg.hash);
        break;
      }
      case cli::OutputSpec::Kind::trajectory:
        throw ConfigError("outputs: trajectory outputs belong to deform");
    }
  }
  return warn_exit(warnings, a.strict);
}

int cmd_deform(const RunArgs& a) {
  auto cfg = cli::load_config(a.config);
  if (!cfg.flow) throw ConfigError("flow: deform needs a flow section");
  const auto& f = *cfg.flow;
  auto pb = cli::build_problem(cfg);
  auto state = make_flow_state(pb.potential, pb.solutions);

  StepOptions opts;
  opts.scheme = f.scheme == "integrating_factor" ? StepScheme::integrating_factor
                                                 : StepScheme::classical;
  opts.cfl = f.cfl;
  opts.allow_large_step = f.allow_large_step;
  // Reject an oversized step before any work.
  if (!(f.dt > 0.0)) throw StepTooLarge("flow.dt must be positive");
  if (!opts.allow_large_step && f.dt > max_stable_dt(cfg.grid, opts.cfl) * (1.0 + 1e-12))
    throw StepTooLarge("flow.dt = " + format_double(f.dt) + " exceeds " +
                       format_double(opts.cfl) + " h^3 = " +
                       format_double(max_stable_dt(cfg.grid, opts.cfl)));

  std::string prefix = "trajectory";
  bool meshes = false;
  std::array<int, 3> triple{1, 2, 3};
  for (const auto& o : cfg.outputs) {
    if (o.kind != cli::OutputSpec::Kind::trajectory)
      throw ConfigError("outputs: deform writes trajectory outputs only");
    prefix = o.path;
    meshes = o.snapshot_meshes;
    triple = o.project;
  }
  prefix = out_path(a, prefix);
  if (meshes && cli::solutions_needed(cfg) > static_cast<int>(state.sols.size()))
    throw ConfigError("outputs: snapshot meshes need the solutions the ambient refers to");

  int mesh_index = 0;
  auto write_mesh = [&] {
    auto chart = cli::build_chart(cfg, cli::Problem{state.p, state.sols});
    write_chart_obj(prefix + "_mesh" + std::to_string(mesh_index++) + ".obj", chart,
                    zero_based(triple, chart.dimension()), cfg.hash);
  };

  // Chunks of record_every steps, so meshes can be written at every record.
  FlowTrajectory traj;
  auto append = [&](const FlowTrajectory& part, bool first) {
    for (std::size_t k = first ? 0 : 1; k < part.times.size(); ++k) {
      traj.times.push_back(part.times[k]);
      traj.W_values.push_back(part.W_values[k]);
      traj.dirac_residuals.push_back(part.dirac_residuals[k]);
      traj.p_integrals.push_back(part.p_integrals[k]);
      if (!part.p_snapshots.empty()) traj.p_snapshots.push_back(part.p_snapshots[k]);
    }
  };
  const long total = static_cast<long>(std::floor(f.T / f.dt * (1.0 + 1e-12)));
  if (meshes) write_mesh();
  bool first = true;
  for (long done = 0; done < total; done += f.record_every) {
    const long n = std::min<long>(f.record_every, total - done);
    append(run_flow(state, n * f.dt, f.dt, f.record_every, opts, meshes), first);
    first = false;
    if (meshes) write_mesh();
  }
  const double rest = f.T - total * f.dt;
  if (first || rest > 1e-12 * std::max(f.T, f.dt)) {
    append(run_flow(state, std::max(rest, 0.0), f.dt, f.record_every, opts, meshes), first);
    if (meshes && !first) write_mesh();
  }

  nlohmann::json params{{"T", f.T},
                        {"dt", f.dt},
                        {"record_every", f.record_every},
                        {"scheme", f.scheme},
                        {"grid", {cfg.grid.nx(), cfg.grid.ny()}},
                        {"solutions", state.sols.size()}};
  write_trajectory(prefix, traj, params.dump(), cfg.hash);
  const double drift = relative_W_drift(traj);
  nlohmann::json summary{{"W0", traj.W_values.front()},
                         {"W_end", traj.W_values.back()},
                         {"relative_W_drift", drift},
                         {"records", traj.times.size()},
                         {"max_dirac_residual",
                          *std::max_element(traj.dirac_residuals.begin(), traj.dirac_residuals.end())},
                         {"config_hash", cfg.hash}};
  std::cout << summary.dump(2) << '\n';
  std::vector<std::string> warnings;
  if (drift > cfg.tolerances.w_drift)
    warnings.push_back("relative W drift " + format_double(drift) + " above " +
                       format_double(cfg.tolerances.w_drift));
  return warn_exit(warnings, a.strict);
}

int cmd_verify(const std::string& level, const std::string& config, const std::string& only,
               const std::string& json_out) {
  checks::Tolerances tol;
  if (!config.empty()) {
    std::ifstream in(config);
    if (!in) throw ConfigError("cannot read " + config);
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(in);
    } catch (const nlohmann::json::exception& e) {
      throw ConfigError(config + ": " + e.what());
    }
    if (j.contains("tolerances")) j = j["tolerances"];
    j.erase("solver");
    j.erase("degeneracy");
    tol = checks::tolerances_from_json(j.dump());
  }
  std::vector<std::string> ids;
  std::stringstream ss(only);
  for (std::string id; std::getline(ss, id, ',');)
    if (!id.empty()) ids.push_back(id);
  const auto lv = level == "full" ? checks::Level::full : checks::Level::quick;
  std::cout << "verify --level " << level << '\n';
  auto results = checks::run_checks(lv, tol, ids, [](const checks::CheckResult& r) {
    std::cout << checks::format_result(r) << std::flush;
  });
  int failed = 0;
  double seconds = 0.0;
  for (const auto& r : results) {
    failed += r.pass ? 0 : 1;
    seconds += r.seconds;
  }
  std::cout << results.size() - failed << '/' << results.size() << " checks passed in "
            << std::fixed << std::setprecision(2) << seconds << " s\n";
  if (!json_out.empty()) {
    nlohmann::json j = nlohmann::json::array();
    for (const auto& r : results)
      j.push_back({{"id", r.id}, {"title", r.title}, {"pass", r.pass}, {"detail", r.detail},
                   {"seconds", r.seconds}});
    std::ofstream(json_out) << nlohmann::json{{"level", level}, {"checks", j}}.dump(2) << '\n';
  }
  return failed == 0 ? ok : invalid;
}

std::string embedded_hash(const std::string& path) {
  std::ifstream in(path);
  std::string line;
  while (std::getline(in, line) && !line.empty() && line[0] == '#') {
    const auto k = line.find("config_hash=");
    if (k != std::string::npos) return line.substr(k + 12);
  }
  return {};
}

int cmd_export(const std::string& chart_csv, const std::string& obj, const std::string& project) {
  auto coords = read_chart_csv(chart_csv);
  std::array<int, 3> t{};
  std::stringstream ss(project);
  std::string item;
  int k = 0;
  while (std::getline(ss, item, ',')) {
    if (k == 3) throw ConfigError("--project takes three indices");
    try {
      std::size_t used = 0;
      t[k] = std::stoi(item, &used);
      if (used != item.size()) throw std::invalid_argument(item);
    } catch (const std::exception&) {
      throw ConfigError("--project: '" + item + "' is not an integer");
    }
    ++k;
  }
  if (k != 3) throw ConfigError("--project takes three indices");
  std::ofstream out(obj);
  if (!out) throw ConfigError("cannot write " + obj);
  write_obj(out, coords, zero_based(t, static_cast<int>(coords.size())), embedded_hash(chart_csv));
  return ok;
}

void apply_thread_env() {
  if (const char* v = std::getenv("WFORGE_THREADS")) {
    char* end = nullptr;
    const long n = std::strtol(v, &end, 10);
    if (end != v && *end == '\0' && n > 0) set_fft_threads(static_cast<int>(n));
    else std::cerr << "warning: ignoring WFORGE_THREADS='" << v << "'\n";
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"wforge: surfaces from the generalized Weierstrass representation"};
  app.require_subcommand(1);

  RunArgs synth_args, deform_args;
  auto* synth = app.add_subcommand("synth", "solve, build a chart, analyze and export");
  synth->add_option("config", synth_args.config, "JSON run config")->required()->check(CLI::ExistingFile);
  synth->add_option("--out", synth_args.out_dir, "directory for outputs");
  synth->add_flag("--strict", synth_args.strict, "exit 2 on degenerate-surface warnings");

  auto* deform = app.add_subcommand("deform", "evolve p and its solutions under the mVN flow");
  deform->add_option("config", deform_args.config, "JSON run config")->required()->check(CLI::ExistingFile);
  deform->add_option("--out", deform_args.out_dir, "directory for outputs");
  deform->add_flag("--strict", deform_args.strict, "exit 2 when W drift exceeds its tolerance");

  std::string level = "quick", tol_config, only, json_out;
  auto* verify = app.add_subcommand("verify", "run the verification suite");
  verify->add_option("--level", level, "quick or full")->check(CLI::IsMember({"quick", "full"}));
  verify->add_option("--config", tol_config, "JSON with a tolerances block")->check(CLI::ExistingFile);
  verify->add_option("--only", only, "comma-separated check ids, e.g. AC1,AC9");
  verify->add_option("--json", json_out, "write results as JSON");

  std::string chart_csv, obj, project = "1,2,3";
  auto* exp = app.add_subcommand("export", "OBJ mesh from a chart CSV");
  exp->add_option("chart", chart_csv, "chart CSV written by synth")->required()->check(CLI::ExistingFile);
  exp->add_option("--obj", obj, "output OBJ path")->required();
  exp->add_option("--project", project, "1-based coordinate triple, e.g. 1,2,4");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? ok : invalid;
  }

  apply_thread_env();
  try {
    if (*synth) return cmd_synth(synth_args);
    if (*deform) return cmd_deform(deform_args);
    if (*verify) return cmd_verify(level, tol_config, only, json_out);
    if (*exp) return cmd_export(chart_csv, obj, project);
  } catch (const NoConvergence& e) {
    std::cerr << "error: " << e.what() << '\n';
    return numerical;
  } catch (const StepTooLarge& e) {
    std::cerr << "error: StepTooLarge: " << e.what() << '\n';
    return numerical;
  } catch (const NonzeroMean& e) {
    std::cerr << "error: " << e.what() << '\n';
    return numerical;
  } catch (const ImaginaryDrift& e) {
    std::cerr << "error: ImaginaryDrift: " << e.what() << '\n';
    return numerical;
  } catch (const AllDegenerate& e) {
    std::cerr << "error: AllDegenerate: " << e.what() << '\n';
    return degenerate;
  } catch (const DegenerateMetric& e) {
    std::cerr << "error: DegenerateMetric: " << e.what() << '\n';
    return degenerate;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return invalid;
  }
  return invalid;
}
