#include <doctest.h>

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <nlohmann/json.hpp>
#include <sstream>
#include <string>
#include <sys/wait.h>

#include "config.hpp"
#include "wforge/error.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct Run {
  int code = -1;
  std::string out;
};

Run run(const std::string& args) {
  const std::string cmd = std::string(WFORGE_CLI) + " " + args + " 2>&1";
  Run r;
  FILE* pipe = popen(cmd.c_str(), "r");
  REQUIRE(pipe != nullptr);
  char buf[4096];
  while (std::fgets(buf, sizeof buf, pipe)) r.out += buf;
  const int status = pclose(pipe);
  r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  return r;
}

std::string config(const std::string& name) { return std::string(WFORGE_CONFIG_DIR) + "/" + name; }

fs::path scratch(const std::string& name) {
  auto dir = fs::temp_directory_path() / ("wforge_cli_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

fs::path write_json(const fs::path& dir, const std::string& name, const json& j) {
  auto p = dir / name;
  std::ofstream(p) << j.dump(2);
  return p;
}

json torus_base() {
  return json::parse(R"({
    "grid": {"n": 32},
    "system": {"potential": [{"fn": "cos", "coef": 0.2, "kx": 1}, {"fn": "cos", "coef": 0.2, "ky": 1}]},
    "solutions": {"seeds": [{"psi": 1, "phi": 0.7}], "tol": 1e-12},
    "ambient": {"type": "r3"}
  })");
}

}  // namespace

TEST_CASE("synth enneper: minimal surface") {
  auto dir = scratch("enneper");
  auto r = run("synth " + config("enneper.json") + " --out " + dir.string());
  REQUIRE_MESSAGE(r.code == 0, r.out);
  auto summary = json::parse(slurp(dir / "enneper_report_summary.json"));
  CHECK(std::abs(summary["W"].get<double>()) <= 1e-12);
  for (double h : summary["H_minmax"]) CHECK(std::abs(h) <= 1e-6);
  CHECK(fs::exists(dir / "enneper.obj"));
  CHECK(slurp(dir / "enneper.obj").find("config_hash=" + summary["config_hash"].get<std::string>()) !=
        std::string::npos);
}

TEST_CASE("synth cylinder: H = 1, K = 0") {
  auto dir = scratch("cylinder");
  auto r = run("synth " + config("cylinder.json") + " --out " + dir.string());
  REQUIRE_MESSAGE(r.code == 0, r.out);
  auto s = json::parse(slurp(dir / "cylinder_report_summary.json"));
  for (double h : s["H_minmax"]) CHECK(std::abs(h - 1.0) <= 1e-6);
  for (double k : s["K_minmax"]) CHECK(std::abs(k) <= 1e-6);
  // constant integrand 4 p^2 over the 2 x pi patch
  CHECK(s["W"].get<double>() == doctest::Approx(8.0 * M_PI).epsilon(1e-12));
}

TEST_CASE("deform mvn_bump: W is conserved") {
  auto dir = scratch("bump");
  auto r = run("deform " + config("mvn_bump.json") + " --out " + dir.string());
  REQUIRE_MESSAGE(r.code == 0, r.out);
  auto t = json::parse(slurp(dir / "mvn_bump_traj.json"));
  CHECK(t["relative_W_drift"].get<double>() <= 1e-6);
  CHECK(t["records"].get<int>() == 11);
  CHECK(fs::exists(dir / "mvn_bump_traj_mesh10.obj"));
  CHECK(slurp(dir / "mvn_bump_traj.csv").rfind("# config_hash=" + t["config_hash"].get<std::string>(), 0) == 0);
}

TEST_CASE("validation errors exit 1") {
  auto dir = scratch("invalid");
  SUBCASE("r4 with a single solution") {
    auto j = torus_base();
    j["ambient"] = {{"type", "r4"}, {"pair", {0, 1}}};
    auto r = run("synth " + write_json(dir, "r4.json", j).string());
    CHECK(r.code == 1);
    CHECK(r.out.find("ambient") != std::string::npos);
  }
  SUBCASE("record_every = 0") {
    auto j = torus_base();
    j["flow"] = {{"T", 0.01}, {"dt", 1e-5}, {"record_every", 0}};
    j["outputs"] = json::array({{{"trajectory", "t"}}});
    auto r = run("deform " + write_json(dir, "rec.json", j).string());
    CHECK(r.code == 1);
    CHECK(r.out.find("record_every") != std::string::npos);
  }
  SUBCASE("unknown section") {
    auto j = torus_base();
    j["extras"] = 1;
    CHECK(run("synth " + write_json(dir, "extra.json", j).string()).code == 1);
  }
  SUBCASE("malformed JSON") {
    auto p = dir / "bad.json";
    std::ofstream(p) << "{\"grid\": ";
    CHECK(run("synth " + p.string()).code == 1);
  }
}

TEST_CASE("step above the stability guard exits 3") {
  auto dir = scratch("guard");
  auto j = torus_base();
  j["flow"] = {{"T", 0.1}, {"dt", 0.05}, {"record_every", 1}};
  j["outputs"] = json::array({{{"trajectory", "t"}}});
  auto r = run("deform " + write_json(dir, "dt.json", j).string() + " --out " + dir.string());
  CHECK(r.code == 3);
  CHECK(r.out.find("StepTooLarge") != std::string::npos);
}

TEST_CASE("export reprojects a chart and keeps its hash") {
  auto dir = scratch("export");
  REQUIRE(run("synth " + config("enneper.json") + " --out " + dir.string()).code == 0);
  const auto chart = dir / "enneper_chart.csv";
  std::string header = slurp(chart);
  const auto at = header.find("config_hash=");
  REQUIRE(at != std::string::npos);
  const std::string hash = header.substr(at + 12, 16);

  auto r = run("export " + chart.string() + " --obj " + (dir / "proj.obj").string() + " --project 2,3,1");
  REQUIRE_MESSAGE(r.code == 0, r.out);
  const auto obj = slurp(dir / "proj.obj");
  CHECK(obj.find("config_hash=" + hash) != std::string::npos);
  CHECK(obj.find("projection 2,3,1") != std::string::npos);

  CHECK(run("export " + chart.string() + " --obj " + (dir / "x.obj").string() + " --project 1,2,9").code == 1);
}

TEST_CASE("corrupt chart CSV gives a clean error") {
  auto dir = scratch("corrupt");
  auto p = dir / "bad.csv";
  std::ofstream(p) << "# nx,ny\n# 4,4\n1,2,three\n";
  auto r = run("export " + p.string() + " --obj " + (dir / "o.obj").string());
  CHECK(r.code == 1);
  CHECK_MESSAGE(r.out.find("missing header") != std::string::npos, r.out);
  CHECK_FALSE(fs::exists(dir / "o.obj"));
}

TEST_CASE("identical configs give identical CSV output") {
  auto a = scratch("det_a"), b = scratch("det_b");
  REQUIRE(run("synth " + config("enneper.json") + " --out " + a.string()).code == 0);
  REQUIRE(run("synth " + config("enneper.json") + " --out " + b.string()).code == 0);
  CHECK(slurp(a / "enneper_chart.csv") == slurp(b / "enneper_chart.csv"));
  CHECK(slurp(a / "enneper_report_H.csv") == slurp(b / "enneper_report_H.csv"));
}

TEST_CASE("verify runs a selected check") {
  auto dir = scratch("verify");
  auto r = run("verify --only AC6 --json " + (dir / "v.json").string());
  CHECK_MESSAGE(r.code == 0, r.out);
  CHECK(r.out.find("AC6") != std::string::npos);
  CHECK(slurp(dir / "v.json").find("AC6") != std::string::npos);
  CHECK(run("verify --level slow").code == 1);
}

TEST_CASE("config parsing") {
  using wforge::ConfigError;
  using wforge::cli::parse_config;
  SUBCASE("hash follows the content") {
    auto j = torus_base();
    auto h1 = parse_config(j.dump(), ".").hash;
    CHECK(h1 == parse_config(j.dump(), ".").hash);
    j["grid"]["n"] = 16;
    CHECK(h1 != parse_config(j.dump(), ".").hash);
    CHECK(h1.size() == 16);
  }
  SUBCASE("expression vocabulary") {
    auto e = wforge::cli::parse_expression(
        json::parse(R"([{"fn": "cos", "coef": 2, "kx": 1}, {"fn": "exp", "coef": [0, 1], "ky": [0, 1]}])"), "p");
    CHECK(e(0.0, 0.0).real() == doctest::Approx(2.0));
    CHECK(e(0.0, 0.0).imag() == doctest::Approx(1.0));
    CHECK_THROWS_AS(wforge::cli::parse_expression(json::parse(R"({"fn": "tan"})"), "p"), ConfigError);
    CHECK_THROWS_AS(wforge::cli::parse_expression(json::parse(R"({"fn": "cos", "k": 1})"), "p"), ConfigError);
  }
  SUBCASE("y-dependent one-dimensional potential is rejected") {
    auto j = json::parse(R"({"grid": {"n": 16},
      "solutions": {"family": {"type": "one_dimensional", "p": {"fn": "cos", "coef": 1, "ky": 1}}}})");
    CHECK_THROWS_AS(parse_config(j.dump(), "."), ConfigError);
  }
  SUBCASE("two solution sources") {
    auto j = torus_base();
    j["solutions"]["files"] = json::array({"a.json"});
    CHECK_THROWS_AS(parse_config(j.dump(), "."), ConfigError);
  }
  SUBCASE("tolerance overrides") {
    auto j = torus_base();
    j["solutions"].erase("tol");
    j["tolerances"] = {{"w_drift", 1e-3}, {"solver", 1e-9}};
    auto c = parse_config(j.dump(), ".");
    CHECK(c.tolerances.w_drift == 1e-3);
    CHECK(c.solver_tol == 1e-9);
    j["tolerances"] = {{"nope", 1}};
    CHECK_THROWS_AS(parse_config(j.dump(), "."), ConfigError);
  }
}
