#include "epflow/commands.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <ostream>

#include <json.hpp>

#include "epflow/error.hpp"
#include "epflow/verify.hpp"

namespace epflow {

namespace {

using json = nlohmann::ordered_json;
namespace fs = std::filesystem;

const char* status_name(int code) {
  switch (code) {
    case kExitOk: return "ok";
    case kExitBreakdown: return "breakdown";
    case kExitNonContraction: return "noncontraction";
    case kExitAdmissibility: return "refused";
    case kExitNotConverged: return "not_converged";
    default: return "failed";
  }
}

std::string g17(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

// Output files of one command invocation.
class Run {
 public:
  Run(const RunConfig& cfg, std::string command)
      : cfg_(cfg), command_(std::move(command)), hash_(config_hash(cfg)) {
    fs::create_directories(cfg.output.dir);
  }

  const RunConfig& cfg() const { return cfg_; }
  json& result() { return result_; }

  /// Opens <command>-<hash><suffix> for writing.
  std::ofstream open(const std::string& suffix) {
    const std::string name = command_ + "-" + hash_ + suffix;
    files_.push_back(name);
    std::ofstream os(fs::path(cfg_.output.dir) / name);
    if (!os) throw ConfigError("cannot write '" + name + "' in " + cfg_.output.dir);
    return os;
  }

  std::string field_suffix() const { return cfg_.output.format == "vtk" ? ".vtk" : ".csv"; }

  void write_report(int code, const std::string& message) {
    json config = json::object();
    for (const ConfigItem& it : config_items(cfg_)) config[it.section][it.key] = it.value;
    json r;
    r["schema"] = "epflow-report/1";
    r["command"] = command_;
    r["hash"] = hash_;
    r["status"] = status_name(code);
    r["exit_code"] = code;
    r["message"] = message;
    r["config"] = config;
    const std::string name = command_ + "-" + hash_ + ".json";
    files_.push_back(name);
    r["files"] = files_;
    r["result"] = result_;
    std::ofstream os(fs::path(cfg_.output.dir) / name);
    os << r.dump(2) << '\n';
  }

 private:
  const RunConfig& cfg_;
  std::string command_;
  std::string hash_;
  std::vector<std::string> files_;
  json result_ = json::object();
};

int run_command(const RunConfig& cfg, const std::string& name, std::ostream& log,
                const std::function<int(Run&)>& body) {
  Run run(cfg, name);
  int code = kExitOk;
  std::string message;
  try {
    code = body(run);
  } catch (const std::exception& e) {
    code = exit_code_for_current_exception();
    message = e.what();
    log << name << ": " << message << '\n';
  }
  run.write_report(code, message);
  log << name << ": " << status_name(code) << " (exit " << code << "), report "
      << report_path(cfg, name) << '\n';
  return code;
}

json to_json(const NormSummary& n) {
  return {{"sup", n.sup}, {"h1", n.h1}, {"holder", n.holder}, {"weighted", n.weighted}};
}

json to_json(const ResidualBreakdown& r) {
  return {{"total", r.total()},   {"flux", r.flux},
          {"poisson", r.poisson}, {"exit_pressure", r.exit_pressure},
          {"wall", r.wall},       {"dirichlet", r.dirichlet}};
}

json to_json(const SolveReport& s) {
  json j;
  j["converged"] = s.converged;
  j["iterations"] = s.iterations;
  j["sigma"] = s.sigma;
  j["M"] = s.M;
  j["tol"] = s.tol;
  j["deltas"] = {{"delta1", s.deltas.delta1}, {"delta2", s.deltas.delta2}, {"delta3", s.deltas.delta3}};
  j["diffs"] = s.diffs;
  j["contraction_factors"] = s.contraction_factors;
  j["subsonic_margin"] = s.subsonic_margin;
  j["residual"] = to_json(s.residual);
  j["boundary_mismatch"] = s.boundary_mismatch;
  j["max_linear_residual"] = s.max_linear_residual;
  j["norms"] = {{"psi", to_json(s.psi_norms)}, {"Psi", to_json(s.Psi_norms)}};
  return j;
}

void write_fields(std::ostream& os, const std::string& format, const Nozzle& grid,
                  const BackgroundSolution& bg, const FieldPair& pair,
                  const VectorField* coords) {
  Field phi0, Phi0;
  background_fields(bg, grid, phi0, Phi0);
  const Field phi = phi0 + pair.psi, Phi = Phi0 + pair.Psi;
  const VectorField D = gradient(grid, phi);
  Field rho(grid.size());
  for (std::size_t i = 0; i < grid.size(); ++i) {
    Vec q(grid.dim());
    for (int a = 0; a < grid.dim(); ++a) q(a) = D[a](i);
    rho(i) = charge_B(bg.law, Phi(i), q);
  }
  const std::vector<NamedField> fields = {
      {"psi", &pair.psi}, {"Psi", &pair.Psi}, {"phi", &phi}, {"Phi", &Phi}, {"rho", &rho}};
  if (format == "vtk") write_fields_vtk(os, grid, fields, coords);
  else write_fields_csv(os, grid, fields, coords);
}

RunOptions snapshot_options(Run& run, const Nozzle& grid, const BackgroundSolution& bg,
                            const VectorField* coords) {
  RunOptions opts;
  if (!run.cfg().output.snapshots) return opts;
  opts.on_iterate = [&run, &grid, &bg, coords](int k, const FieldPair& x) {
    char tag[32];
    std::snprintf(tag, sizeof tag, "-iter-%03d", k);
    std::ofstream os = run.open(tag + run.field_suffix());
    write_fields(os, run.cfg().output.format, grid, bg, x, coords);
  };
  return opts;
}

int solve_status(const SolveReport& r) {
  return r.converged && r.subsonic_margin > 0.0 ? kExitOk : kExitNotConverged;
}

void log_solve(std::ostream& log, const SolveReport& r) {
  log << "iterations " << r.iterations << (r.converged ? " (converged)" : " (not converged)")
      << ", subsonic margin " << g17(r.subsonic_margin) << ", residual "
      << g17(r.residual.total()) << '\n';
  log << "contraction factors:";
  for (double k : r.contraction_factors) log << ' ' << g17(k);
  log << '\n';
}

}  // namespace

int exit_code_for_current_exception() {
  try {
    throw;
  } catch (const BreakdownError&) {
    return kExitBreakdown;
  } catch (const VacuumError&) {
    return kExitBreakdown;
  } catch (const NotSubsonicError&) {
    return kExitBreakdown;
  } catch (const SonicProximityError&) {
    return kExitBreakdown;
  } catch (const NonContractionError&) {
    return kExitNonContraction;
  } catch (const AdmissibilityError&) {
    return kExitAdmissibility;
  } catch (const FoldOverError&) {
    return kExitAdmissibility;
  } catch (const MaxIterationsError&) {
    return kExitNotConverged;
  } catch (...) {
    return kExitFailure;
  }
}

std::string report_path(const RunConfig& config, const std::string& command) {
  return (fs::path(config.output.dir) / (command + "-" + config_hash(config) + ".json")).string();
}

int cmd_background(const RunConfig& cfg, std::ostream& log) {
  return run_command(cfg, "background", log, [&](Run& run) {
    json& res = run.result();
    BackgroundSolution sol;
    OneDParams p;
    try {
      p = cfg.ode_params();
      sol = integrate_ivp(p, cfg.background.n_steps);
    } catch (const BreakdownError& e) {
      res["breakdown"] = {{"kind", e.kind() == BreakdownError::Kind::Sonic ? "sonic" : "vacuum"},
                          {"x", e.position()}};
      throw;
    }
    {
      std::ofstream os = run.open("-profiles.csv");
      write_profiles_csv(os, sol);
    }
    {
      std::ofstream os = run.open("-atlas.csv");
      write_atlas_csv(os, {atlas_row(p, cfg.background.n_steps)});
    }
    const MonotoneResult a = monotone_admissible(p.law, p.b, p.L, p.rho0, p.E0, p.J0);
    const AdmissibilityRadii r = admissibility_radii(sol);
    const auto [rmin, rmax] = std::minmax_element(sol.rho.begin(), sol.rho.end());
    res["rho0"] = p.rho0;
    res["E0"] = p.E0;
    res["triple"] = {{"Phi_en0", sol.triple.Phi_en0}, {"B00", sol.triple.B00}, {"pex0", sol.triple.pex0}};
    res["nu0"] = sol.nu0;
    res["rho_min"] = *rmin;
    res["rho_max"] = *rmax;
    res["mass_flux_defect"] = sol.mass_flux_defect();
    res["consistency_residual"] = sol.consistency_residual();
    res["radii"] = {{"delta1", r.delta1}, {"delta2", r.delta2}, {"delta3", r.delta3}};
    res["monotone_margins"] = {{"admissible", a.admissible},
                               {"rho_margin", a.rho_margin},
                               {"E_margin", a.E_margin},
                               {"subsonic_margin", a.subsonic_margin}};
    log << "background: rho in [" << g17(*rmin) << ", " << g17(*rmax) << "], nu0 " << g17(sol.nu0)
        << ", B00 " << g17(sol.triple.B00) << '\n';
    return sol.nu0 > 0.0 ? kExitOk : kExitBreakdown;
  });
}

int cmd_solve(const RunConfig& cfg, std::ostream& log) {
  return run_command(cfg, "solve", log, [&](Run& run) {
    const BackgroundSolution bg = cfg.build_background();
    const Nozzle grid(cfg.nozzle_spec());
    const BoundaryData data =
        perturb_data(bg, grid, cfg.perturbation.sigma, cfg.perturbation.shapes);
    const FixedPoint fp =
        run_fixed_point(cfg.iteration_config(), data, bg, grid, snapshot_options(run, grid, bg, nullptr));
    run.result() = to_json(fp.report);
    std::ofstream os = run.open("-fields" + run.field_suffix());
    write_fields(os, cfg.output.format, grid, bg, fp.pair, nullptr);
    log_solve(log, fp.report);
    return solve_status(fp.report);
  });
}

int cmd_perturb_domain(const RunConfig& cfg, std::ostream& log) {
  return run_command(cfg, "perturb-domain", log, [&](Run& run) {
    const BackgroundSolution bg = cfg.build_background();
    const Nozzle grid(cfg.nozzle_spec());
    const DomainMap map = cfg.domain(grid);
    const BoundaryData data =
        perturb_data(bg, grid, cfg.perturbation.sigma, cfg.perturbation.shapes);
    const VectorField phys = physical_coords(map, grid);
    // The identity map keeps the reference layout so its files match `solve`.
    const VectorField* coords = map.kind() == MapKind::Identity ? nullptr : &phys;
    const FixedPoint fp = solve_perturbed(map, cfg.iteration_config(), data, bg, grid,
                                          snapshot_options(run, grid, bg, coords));
    const LinearizedProblem problem(grid, FrozenCoefficients::from_background(bg, grid));
    const Corrections k =
        correction_terms(MapGeometry::build(map, grid), fp.pair, data, bg, problem);
    json res = to_json(fp.report);
    res["domain_map"] = {{"kind", map_name(map.kind())},
                         {"eps", map.eps()},
                         {"sigmaG", map.sigmaG()},
                         {"combined_sigma", cfg.perturbation.sigma + map.sigmaG()}};
    res["correction_magnitude"] = k.magnitude();
    run.result() = res;
    std::ofstream os = run.open("-fields" + run.field_suffix());
    write_fields(os, cfg.output.format, grid, bg, fp.pair, coords);
    log << "map " << map_name(map.kind()) << ", sigmaG " << g17(map.sigmaG())
        << ", correction magnitude " << g17(k.magnitude()) << '\n';
    log_solve(log, fp.report);
    return solve_status(fp.report);
  });
}

int cmd_sweep(const RunConfig& cfg, std::ostream& log) {
  return run_command(cfg, "sweep", log, [&](Run& run) {
    const BackgroundSolution bg = cfg.build_background();
    const Nozzle grid(cfg.nozzle_spec());
    const SweepReport rep = stability_sweep(cfg.iteration_config(), cfg.sweep.sigmas,
                                            cfg.perturbation.shapes, bg, grid, cfg.sweep.jobs);
    {
      std::ofstream os = run.open(".csv");
      os << "sigma,sup_norm,h1,contraction,iterations\n";
      for (const SweepRow& r : rep.rows) {
        os << g17(r.sigma) << ',' << g17(r.sup_norm) << ',' << g17(r.h1) << ','
           << g17(r.contraction) << ',' << r.iterations << '\n';
      }
    }
    const bool norm_ok = std::abs(rep.norm_slope - 1.0) <= 0.1;
    const bool kappa_ok = std::abs(rep.contraction_slope - 1.0) <= 0.2;
    json rows = json::array();
    for (const SweepRow& r : rep.rows) {
      rows.push_back({{"sigma", r.sigma},
                      {"sup_norm", r.sup_norm},
                      {"h1", r.h1},
                      {"contraction", r.contraction},
                      {"iterations", r.iterations}});
    }
    json& res = run.result();
    res["rows"] = rows;
    res["constants"] = rep.constants;
    res["norm_slope"] = rep.norm_slope;
    res["contraction_slope"] = rep.contraction_slope;
    res["norm_slope_ok"] = norm_ok;
    res["contraction_slope_ok"] = kappa_ok;
    log << "norm slope " << g17(rep.norm_slope) << (norm_ok ? " (ok)" : " (outside 1 +- 0.1)")
        << ", contraction slope " << g17(rep.contraction_slope)
        << (kappa_ok ? " (ok)" : " (outside 1 +- 0.2)") << '\n';
    return norm_ok && kappa_ok ? kExitOk : kExitFailure;
  });
}

int cmd_verify(const RunConfig& cfg, std::ostream& log) {
  return run_command(cfg, "verify", log, [&](Run& run) {
    json checks = json::array();
    bool all = true;
    for (const CheckResult& c : invariant_suite(cfg.run.seed)) {
      log << (c.pass ? "PASS " : "FAIL ") << c.name << ": " << c.detail << '\n';
      checks.push_back({{"name", c.name}, {"pass", c.pass}, {"value", c.value}, {"detail", c.detail}});
      all = all && c.pass;
    }
    run.result()["checks"] = checks;
    run.result()["all_pass"] = all;
    return all ? kExitOk : kExitFailure;
  });
}

}  // namespace epflow
