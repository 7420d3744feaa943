#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <sys/wait.h>

#include <json.hpp>

#include "doctest.h"
#include "epflow/commands.hpp"
#include "epflow/error.hpp"

using namespace epflow;
namespace fs = std::filesystem;
using json = nlohmann::json;

namespace {

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

RunConfig parse(const std::string& text) {
  std::istringstream is(text);
  return parse_config(is);
}

// Fresh scratch directory per test case.
fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("epflow_cli_" + name);
  fs::remove_all(p);
  return p;
}

RunConfig small(const fs::path& dir) {
  RunConfig c;
  c.nozzle.resolution = "17x33";
  c.output.dir = dir.string();
  return c;
}

json report(const RunConfig& c, const std::string& command) {
  return json::parse(slurp(report_path(c, command)));
}

std::string file_of(const RunConfig& c, const std::string& command, const std::string& suffix) {
  return slurp(fs::path(c.output.dir) / (command + "-" + config_hash(c) + suffix));
}

}  // namespace

TEST_CASE("config round trip") {
  const RunConfig d;
  const std::string text = serialize_config(d);
  CHECK(parse(text) == d);
  CHECK(serialize_config(parse(text)) == text);

  RunConfig c;
  c.gas.gamma = 1.4;
  c.nozzle.resolution = "9x17x33";
  c.perturbation.sigma = 0.1 + 0.2;
  c.perturbation.shapes.pex.kind = ShapeKind::Constant;
  c.perturbation.shapes.b.amplitude = -1.0 / 3.0;
  c.iteration.delta1 = 0.3;
  c.iteration.delta2 = 0.2;
  c.iteration.delta3 = 0.1;
  c.domain_map.kind = "bulge";
  c.domain_map.eps = 1e-3 / 7;
  c.sweep.sigmas = {1e-4 / 3, 2e-4, 5e-4};
  c.output.snapshots = true;
  c.run.seed = 4294967295u;
  const RunConfig back = parse(serialize_config(c));
  CHECK(back == c);
  CHECK(back.perturbation.sigma == c.perturbation.sigma);
  CHECK(back.domain_map.eps == c.domain_map.eps);
  CHECK(back.sweep.sigmas == c.sweep.sigmas);
  CHECK(back.perturbation.shapes.b.amplitude == c.perturbation.shapes.b.amplitude);
  CHECK(back.run.seed == 4294967295u);
  CHECK(serialize_config(back) == serialize_config(c));
}

TEST_CASE("partial files keep defaults and comments are ignored") {
  const RunConfig c = parse("; comment\n[perturbation]\nsigma = 2e-3\n[sweep]\nsigmas = 1e-4, 3e-4\n");
  CHECK(c.perturbation.sigma == 2e-3);
  CHECK(c.sweep.sigmas == std::vector<double>{1e-4, 3e-4});
  CHECK(c.gas.gamma == 2.0);
  CHECK(c.iteration_config().sigma == 2e-3);
  CHECK_FALSE(c.iteration_config().deltas.has_value());
}

TEST_CASE("config rejects bad input") {
  CHECK_THROWS_AS(parse("[gas]\ngama = 2\n"), ConfigError);
  CHECK_THROWS_AS(parse("[gasses]\ngamma = 2\n"), ConfigError);
  CHECK_THROWS_AS(parse("[gas]\ngamma = two\n"), ConfigError);
  CHECK_THROWS_AS(parse("[gas]\ngamma = 2x\n"), ConfigError);
  CHECK_THROWS_AS(parse("[gas]\ngamma = 0.5\n"), ConfigError);
  CHECK_THROWS_AS(parse("[gas]\ngamma = nan\n"), ConfigError);
  CHECK_THROWS_AS(parse("[nozzle]\nresolution = 2x9\n"), ConfigError);
  CHECK_THROWS_AS(parse("[nozzle]\nresolution = 17by33\n"), ConfigError);
  CHECK_THROWS_AS(parse("[perturbation]\npex_amplitude = 1.5\n"), ConfigError);
  CHECK_THROWS_AS(parse("[perturbation]\nb_shape = square\n"), ConfigError);
  CHECK_THROWS_AS(parse("[iteration]\ndelta1 = 0.1\n"), ConfigError);
  CHECK_THROWS_AS(parse("[domain_map]\nkind = twist\n"), ConfigError);
  CHECK_THROWS_AS(parse("[sweep]\nsigmas = 1e-4\n"), ConfigError);
  CHECK_THROWS_AS(parse("[sweep]\nsigmas = 1e-4,,2e-4\n"), ConfigError);
  CHECK_THROWS_AS(parse("[output]\nformat = hdf5\n"), ConfigError);
  CHECK_THROWS_AS(parse("[output]\nsnapshots = yes\n"), ConfigError);
  CHECK_THROWS_AS(parse("[run]\nseed = -1\n"), ConfigError);
  CHECK_THROWS_AS(parse("[gas]\ngamma = 2\ngamma = 3\n"), ConfigError);
  CHECK_THROWS_AS(load_config("/nonexistent/epflow.ini"), ConfigError);
}

TEST_CASE("config hash") {
  RunConfig a;
  const std::string h = config_hash(a);
  CHECK(h.size() == 16);
  CHECK(config_hash(a) == h);
  RunConfig b = a;
  b.output.dir = "elsewhere";
  b.output.format = "vtk";
  CHECK(config_hash(b) == h);
  b.perturbation.sigma = 2e-3;
  CHECK(config_hash(b) != h);
  b = a;
  b.run.seed = 7;
  CHECK(config_hash(b) != h);

  // Independent FNV-1a 64 over the text without the [output] section.
  std::string text = serialize_config(a);
  const auto from = text.find("[output]"), to = text.find("[run]");
  REQUIRE(from != std::string::npos);
  text.erase(from, to - from);
  std::uint64_t v = 14695981039346656037ULL;
  for (unsigned char ch : text) v = (v ^ ch) * 1099511628211ULL;
  char hex[17];
  std::snprintf(hex, sizeof hex, "%016llx", static_cast<unsigned long long>(v));
  CHECK(h == hex);
}

TEST_CASE("exit code mapping") {
  auto code = [](auto&& thrower) {
    try {
      thrower();
    } catch (...) {
      return exit_code_for_current_exception();
    }
    return -1;
  };
  CHECK(code([] { throw BreakdownError(BreakdownError::Kind::Sonic, 0.5, "s"); }) == kExitBreakdown);
  CHECK(code([] { throw VacuumError("v"); }) == kExitBreakdown);
  CHECK(code([] { throw NonContractionError("n"); }) == kExitNonContraction);
  CHECK(code([] { throw AdmissibilityError("a"); }) == kExitAdmissibility);
  CHECK(code([] { throw FoldOverError("f"); }) == kExitAdmissibility);
  CHECK(code([] { throw MaxIterationsError("m"); }) == kExitNotConverged);
  CHECK(code([] { throw ConfigError("c"); }) == kExitFailure);
  CHECK(code([] { throw std::runtime_error("r"); }) == kExitFailure);
}

TEST_CASE("solve: unperturbed data and determinism") {
  const fs::path dir = scratch("solve");
  RunConfig c = small(dir);
  c.perturbation.sigma = 0.0;
  std::ostringstream log;
  CHECK(cmd_solve(c, log) == kExitOk);
  json r = report(c, "solve");
  CHECK(r["schema"] == "epflow-report/1");
  CHECK(r["status"] == "ok");
  CHECK(r["result"]["iterations"] == 1);
  CHECK(r["result"]["norms"]["psi"]["sup"] == 0.0);
  CHECK(r["result"]["norms"]["Psi"]["sup"] == 0.0);

  c.perturbation.sigma = 1e-3;
  CHECK(cmd_solve(c, log) == kExitOk);
  const std::string first_json = slurp(report_path(c, "solve"));
  const std::string first_csv = file_of(c, "solve", "-fields.csv");
  CHECK(cmd_solve(c, log) == kExitOk);
  CHECK(slurp(report_path(c, "solve")) == first_json);
  CHECK(file_of(c, "solve", "-fields.csv") == first_csv);
  CHECK(first_csv.rfind("x,y,psi,Psi,phi,Phi,rho\n", 0) == 0);

  r = json::parse(first_json);
  CHECK(r["result"]["converged"] == true);
  CHECK(r["result"]["subsonic_margin"].get<double>() > 0.0);
  for (double k : r["result"]["contraction_factors"]) CHECK(k < 1.0);
  CHECK(r["files"].size() == 2);
  for (const char* key : {"schema", "command", "hash", "status", "exit_code", "message", "config",
                          "files", "result"}) {
    CHECK(r.contains(key));
  }
  CHECK(r["config"]["perturbation"]["sigma"] == "0.001");
}

TEST_CASE("solve: snapshots and vtk output") {
  const fs::path dir = scratch("vtk");
  RunConfig c = small(dir);
  c.output.format = "vtk";
  c.output.snapshots = true;
  std::ostringstream log;
  CHECK(cmd_solve(c, log) == kExitOk);
  const json r = report(c, "solve");
  const int it = r["result"]["iterations"];
  CHECK(r["files"].size() == static_cast<std::size_t>(it + 2));
  CHECK(file_of(c, "solve", "-fields.vtk").rfind("# vtk DataFile Version", 0) == 0);
  CHECK(fs::exists(dir / ("solve-" + config_hash(c) + "-iter-001.vtk")));
}

TEST_CASE("solve: refusal and breakdown exit codes") {
  const fs::path dir = scratch("fail");
  RunConfig c = small(dir);
  c.perturbation.sigma = 0.5;
  std::ostringstream log;
  CHECK(cmd_solve(c, log) == kExitAdmissibility);
  json r = report(c, "solve");
  CHECK(r["status"] == "refused");
  CHECK(r["exit_code"] == kExitAdmissibility);
  CHECK(r["message"].get<std::string>().find("delta3") != std::string::npos);

  RunConfig s = small(dir);
  s.background.J0 = 1.3;
  s.background.rho0 = 1.0;
  s.background.E0 = -2.0;
  CHECK(cmd_background(s, log) == kExitBreakdown);
  r = report(s, "background");
  CHECK(r["status"] == "breakdown");
  CHECK(r["result"]["breakdown"]["kind"] == "sonic");
  const double x = r["result"]["breakdown"]["x"];
  CHECK(x >= 0.0);
  CHECK(x <= 1.0);
  CHECK(log.str().find("x = ") != std::string::npos);
}

TEST_CASE("background: constant state and curved orbit") {
  const fs::path dir = scratch("background");
  RunConfig c = small(dir);
  c.background.rho0 = 1.0;
  c.background.E0 = 0.0;
  std::ostringstream log;
  CHECK(cmd_background(c, log) == kExitOk);
  json r = report(c, "background");
  CHECK(r["result"]["rho_min"] == r["result"]["rho_max"]);
  CHECK(r["result"]["nu0"].get<double>() > 0.0);
  std::istringstream prof(file_of(c, "background", "-profiles.csv"));
  std::string header, line;
  std::getline(prof, header);
  CHECK(header.find("rho") != std::string::npos);
  CHECK(file_of(c, "background", "-atlas.csv").find(",ok\n") != std::string::npos);

  RunConfig b = small(dir);
  b.background.mode = "bvp";
  b.background.rho_en = 1.2;
  b.background.rho_ex = 1.6;
  CHECK(cmd_background(b, log) == kExitOk);
  r = report(b, "background");
  CHECK(r["result"]["rho_min"].get<double>() == doctest::Approx(1.2).epsilon(1e-10));
  CHECK(r["result"]["rho_max"].get<double>() == doctest::Approx(1.6).epsilon(1e-8));
}

TEST_CASE("perturb-domain: identity matches solve, shear reports corrections") {
  const fs::path dir = scratch("perturb");
  RunConfig c = small(dir);
  std::ostringstream log;
  CHECK(cmd_solve(c, log) == kExitOk);
  CHECK(cmd_perturb_domain(c, log) == kExitOk);
  CHECK(file_of(c, "perturb-domain", "-fields.csv") == file_of(c, "solve", "-fields.csv"));
  json r = report(c, "perturb-domain");
  CHECK(r["result"]["correction_magnitude"] == 0.0);
  CHECK(r["result"]["diffs"] == report(c, "solve")["result"]["diffs"]);

  c.domain_map.kind = "shear";
  c.domain_map.eps = 5e-3;
  CHECK(cmd_perturb_domain(c, log) == kExitOk);
  r = report(c, "perturb-domain");
  CHECK(r["result"]["domain_map"]["sigmaG"] == 5e-3);
  CHECK(r["result"]["domain_map"]["combined_sigma"].get<double>() == doctest::Approx(6e-3));
  CHECK(r["result"]["correction_magnitude"].get<double>() > 0.0);
  CHECK(file_of(c, "perturb-domain", "-fields.csv") != file_of(RunConfig(small(dir)), "solve", "-fields.csv"));

  c.domain_map.kind = "bulge";
  c.domain_map.eps = 0.5;
  CHECK(cmd_perturb_domain(c, log) == kExitAdmissibility);
}

TEST_CASE("sweep: slope fit and concurrent jobs") {
  const fs::path dir = scratch("sweep");
  RunConfig c = small(dir);
  std::ostringstream log;
  CHECK(cmd_sweep(c, log) == kExitOk);
  const json r = report(c, "sweep");
  CHECK(r["result"]["rows"].size() == 4);
  const double slope = r["result"]["norm_slope"];
  CHECK(slope >= 0.9);
  CHECK(slope <= 1.1);
  CHECK(r["result"]["norm_slope_ok"] == true);
  const std::string csv = file_of(c, "sweep", ".csv");
  CHECK(csv.rfind("sigma,sup_norm,h1,contraction,iterations\n", 0) == 0);

  c.sweep.jobs = 4;
  CHECK(cmd_sweep(c, log) == kExitOk);
  CHECK(file_of(c, "sweep", ".csv") == csv);
}

TEST_CASE("verify passes on the default config") {
  const fs::path dir = scratch("verify");
  RunConfig c = small(dir);
  std::ostringstream log;
  CHECK(cmd_verify(c, log) == kExitOk);
  const json r = report(c, "verify");
  CHECK(r["result"]["all_pass"] == true);
  CHECK(r["result"]["checks"].size() == 8);
  CHECK(log.str().find("FAIL") == std::string::npos);
}

#ifdef EPFLOW_CLI_PATH
TEST_CASE("binary: template, bad arguments and exit codes") {
  const fs::path dir = scratch("binary");
  fs::create_directories(dir);
  const std::string exe = EPFLOW_CLI_PATH;
  const fs::path tmpl = dir / "template.ini";
  const std::string emit = exe + " --emit-template > " + tmpl.string();
  REQUIRE(std::system(emit.c_str()) == 0);
  CHECK(load_config(tmpl.string()) == RunConfig{});
  CHECK(slurp(tmpl) == serialize_config(RunConfig{}));

  auto status = [](const std::string& cmd) {
    const int s = std::system((cmd + " > /dev/null 2>&1").c_str());
    return WIFEXITED(s) ? WEXITSTATUS(s) : -1;
  };
  CHECK(status(exe + " frobnicate") != 0);
  CHECK(status(exe + " solve --format hdf5") != 0);
  CHECK(status(exe) == kExitFailure);

  std::ofstream(dir / "big.ini") << "[nozzle]\nresolution = 9x17\n[perturbation]\nsigma = 0.5\n";
  CHECK(status(exe + " solve --config " + (dir / "big.ini").string() + " --out " +
               (dir / "out").string()) == kExitAdmissibility);
  std::ofstream(dir / "ok.ini") << "[nozzle]\nresolution = 9x17\n";
  CHECK(status(exe + " solve --config " + (dir / "ok.ini").string() + " --out " +
               (dir / "out").string() + " --seed 7") == kExitOk);
  std::ofstream(dir / "bad.ini") << "[gas]\ngamma = 0.2\n";
  CHECK(status(exe + " solve --config " + (dir / "bad.ini").string()) == kExitFailure);
}
#endif
