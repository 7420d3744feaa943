// Acceptance suite: one PASS/FAIL line per criterion, nonzero exit on any failure.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <sstream>
#include <string>
#include <vector>

#include "epflow/domainmap.hpp"
#include "epflow/driver.hpp"
#include "epflow/error.hpp"
#include "epflow/verify.hpp"

using namespace epflow;

namespace {

struct Criterion {
  int id;
  const char* name;
  double limit_s;  // runtime bound
  std::function<CheckResult()> run;
};

Nozzle nozzle(int nc, int na) {
  NozzleSpec s;
  s.nodes = {nc, na};
  return Nozzle(s);
}

std::string sci(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3e", v);
  return buf;
}

double sup(const Field& f) { return f.cwiseAbs().maxCoeff(); }

double sup_pair(const FieldPair& a, const FieldPair& b) {
  return std::max(sup(a.psi - b.psi), sup(a.Psi - b.Psi));
}

// Shared state of criteria 8 and 12: the 64x128 fixed point at sigma = 1e-3.
struct MainRun {
  BackgroundSolution bg = reference_background();
  Nozzle grid = nozzle(64, 128);
  ResidualBreakdown floor;
  FixedPoint fp;
  bool done = false;

  void ensure() {
    if (done) return;
    floor = nonlinear_residual(FieldPair::zeros(grid), BoundaryData::zeros(grid), bg, grid);
    IterationConfig c;
    c.sigma = 1e-3;
    fp = run_fixed_point(c, perturb_data(bg, grid, c.sigma), bg, grid);
    done = true;
  }
};

CheckResult fixed_point_criterion(MainRun& m) {
  m.ensure();
  const SolveReport& r = m.fp.report;
  double kmax = 0.0;
  for (double k : r.contraction_factors) kmax = std::max(kmax, k);
  const double ratio = r.residual.total() / m.floor.total();
  CheckResult c;
  c.value = ratio;
  c.pass = r.converged && r.iterations <= 15 && kmax < 1.0 && r.subsonic_margin > 0.0 &&
           ratio <= 4.0;
  c.detail = std::to_string(r.iterations) + " steps, max contraction " + sci(kmax) +
             ", margin " + sci(r.subsonic_margin) + ", residual " + sci(r.residual.total()) +
             " = " + std::to_string(ratio) + " x floor " + sci(m.floor.total());
  return c;
}

CheckResult exit_pressure_criterion(MainRun& m) {
  m.ensure();
  const double ex = m.fp.report.residual.exit_pressure;
  const double fl = m.floor.exit_pressure;
  CheckResult c;
  c.value = ex / fl;
  c.pass = m.fp.report.converged && ex <= 10.0 * fl;
  c.detail = "max |p(rho) - p_ex| on the exit " + sci(ex) + " = " + std::to_string(c.value) +
             " x exit floor " + sci(fl);
  return c;
}

CheckResult sweep_criterion() {
  const BackgroundSolution bg = reference_background();
  const SweepReport rep =
      stability_sweep(IterationConfig{}, {1e-4, 2e-4, 4e-4, 8e-4}, {}, bg, nozzle(64, 128));
  CheckResult c;
  c.value = rep.norm_slope;
  c.pass = std::abs(rep.norm_slope - 1.0) <= 0.1 && std::abs(rep.contraction_slope - 1.0) <= 0.2;
  c.detail = "norm slope " + std::to_string(rep.norm_slope) + ", contraction slope " +
             std::to_string(rep.contraction_slope);
  return c;
}

CheckResult uniqueness_criterion() {
  const BackgroundSolution bg = reference_background();
  const Nozzle g = nozzle(64, 128);
  IterationConfig cfg;
  cfg.sigma = 1e-3;
  const BoundaryData d = perturb_data(bg, g, cfg.sigma);
  const FixedPoint a = run_fixed_point(cfg, d, bg, g);
  RunOptions o;
  o.initial = bump_start(g, d, cfg.M * cfg.sigma / 4);
  const double start_gap = sup_pair(*o.initial, FieldPair::zeros(g));
  const FixedPoint b = run_fixed_point(cfg, d, bg, g, o);
  const double gap = sup_pair(a.pair, b.pair);
  CheckResult c;
  c.value = gap;
  c.pass = a.report.converged && b.report.converged && start_gap > 0.0 && gap < 1e-8;
  c.detail = "starts differ by " + sci(start_gap) + ", fixed points by " + sci(gap) + " (" +
             std::to_string(a.report.iterations) + " and " + std::to_string(b.report.iterations) +
             " steps)";
  return c;
}

CheckResult domain_criterion() {
  const BackgroundSolution bg = reference_background();
  const Nozzle g = nozzle(64, 128);
  std::ostringstream os;
  bool pass = true;

  // Identity: exact zeros and a bit-identical solve.
  IterationConfig cfg;
  cfg.sigma = 1e-3;
  const BoundaryData d = perturb_data(bg, g, cfg.sigma);
  const FixedPoint flat = run_fixed_point(cfg, d, bg, g);
  const FixedPoint id = solve_perturbed(DomainMap::identity(g), cfg, d, bg, g);
  const LinearizedProblem prob(g, FrozenCoefficients::from_background(bg, g));
  const double k0 =
      correction_terms(MapGeometry::build(DomainMap::identity(g), g), flat.pair, d, bg, prob)
          .magnitude();
  const bool same = (flat.pair.psi.array() == id.pair.psi.array()).all() &&
                    (flat.pair.Psi.array() == id.pair.Psi.array()).all();
  pass = pass && k0 == 0.0 && same;
  os << "identity corrections " << k0 << (same ? ", bit-identical" : ", NOT identical");

  // Shear sweep of the corrections at the background state, and of the
  // fixed-point norm at sigma = 0.
  std::vector<double> eps, mags, norms_v;
  const BoundaryData zero = BoundaryData::zeros(g);
  for (double e : {1e-3, 2e-3, 4e-3, 6e-3, 8e-3, 1e-2}) {
    const DomainMap map(MapKind::Shear, e, g);
    eps.push_back(map.sigmaG());
    mags.push_back(
        correction_terms(MapGeometry::build(map, g), FieldPair::zeros(g), zero, bg, prob).magnitude());
    const FixedPoint fp = solve_perturbed(map, IterationConfig{}, zero, bg, g);
    pass = pass && fp.report.converged;
    norms_v.push_back(std::max(fp.report.psi_norms.sup, fp.report.Psi_norms.sup));
  }
  const double s_corr = loglog_slope(eps, mags), s_norm = loglog_slope(eps, norms_v);
  pass = pass && std::abs(s_corr - 1.0) <= 0.15 && std::abs(s_norm - 1.0) <= 0.15;
  os << "; correction slope " << s_corr << ", fixed-point norm slope " << s_norm;
  CheckResult c;
  c.value = s_norm;
  c.pass = pass;
  c.detail = os.str();
  return c;
}

}  // namespace

int main() {
  MainRun main_run;
  const std::vector<Criterion> criteria = {
      {1, "structural identity", 1.0, [] { return check_structural_identity(10000, 42); }},
      {2, "enthalpy roundtrip", 1.0, [] { return check_enthalpy_roundtrip(10000, 42); }},
      {3, "1D equilibrium exactness and RK4 order", 1.0, [] { return check_ode(1024); }},
      {4, "shooting/forward roundtrip", 5.0, [] { return check_shooting(); }},
      {5, "discrete coupling cancellation", 10.0, [] { return check_coupling(nozzle(33, 65), 100, 42); }},
      {6, "discrete coercivity", 30.0, [] { return check_coercivity(nozzle(33, 65), 200, 42); }},
      {7, "manufactured-solution convergence", 120.0, [] { return check_manufactured({17, 33, 65}); }},
      {8, "nonlinear fixed point", 300.0, [&] { return fixed_point_criterion(main_run); }},
      {9, "sigma-linear stability", 1200.0, [] { return sweep_criterion(); }},
      {10, "uniqueness probe", 600.0, [] { return uniqueness_criterion(); }},
      {11, "domain-map degeneracy and smallness", 900.0, [] { return domain_criterion(); }},
      {12, "exit-pressure faithfulness", 300.0, [&] { return exit_pressure_criterion(main_run); }},
  };

  int failed = 0;
  for (const Criterion& c : criteria) {
    const auto t0 = std::chrono::steady_clock::now();
    CheckResult r;
    try {
      r = c.run();
    } catch (const std::exception& e) {
      r.pass = false;
      r.detail = std::string("exception: ") + e.what();
    }
    const double s = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    const bool ok = r.pass && s < c.limit_s;
    failed += ok ? 0 : 1;
    std::printf("%s [%2d] %s: %s (%.2f s, limit %.0f s)\n", ok ? "PASS" : "FAIL", c.id, c.name,
                r.detail.c_str(), s, c.limit_s);
  }
  std::printf("%d of %zu criteria passed\n", static_cast<int>(criteria.size()) - failed,
              criteria.size());
  return failed == 0 ? 0 : 1;
}
