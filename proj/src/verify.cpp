#include "epflow/verify.hpp"

#include <chrono>
#include <cmath>
#include <random>
#include <sstream>

#include "epflow/driver.hpp"
#include "epflow/error.hpp"

namespace epflow {

namespace {

std::string sci(double v) {
  std::ostringstream os;
  os.precision(3);
  os << std::scientific << v;
  return os.str();
}

template <class Fn>
CheckResult timed(const std::string& name, Fn&& fn) {
  const auto t0 = std::chrono::steady_clock::now();
  CheckResult r;
  try {
    r = fn();
  } catch (const Error& e) {
    r.pass = false;
    r.detail = e.what();
  }
  r.name = name;
  r.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return r;
}

Nozzle nozzle(int nc, int na) {
  NozzleSpec s;
  s.nodes = {nc, na};
  return Nozzle(s);
}

// Manufactured pair on the constant background with L = 1:
//   v = cos(pi x) y^2,  W = cos(pi x) (y (1 - y) + 0.1 + 0.2 y),
// F = (0, G) with dG/dy = div(a grad v + W beta), G(x, 0) = 0.
struct Manufactured {
  double a1, an, beta, c, scale;

  double v(const Vec& p) const { return std::cos(M_PI * p(0)) * p(1) * p(1); }
  double W(const Vec& p) const {
    return std::cos(M_PI * p(0)) * (p(1) * (1 - p(1)) + 0.1 + 0.2 * p(1));
  }
  double G(const Vec& p) const {
    const double y = p(1);
    return std::cos(M_PI * p(0)) *
           (-a1 * M_PI * M_PI * y * y * y / 3 + 2 * an * y + beta * (1.2 * y - y * y));
  }
  double f(const Vec& p) const {
    const double cx = std::cos(M_PI * p(0)), y = p(1);
    const double lapW = cx * (-M_PI * M_PI * (y * (1 - y) + 0.1 + 0.2 * y) - 2);
    return lapW - c * W(p) + beta * cx * 2 * y;
  }
  double g(const Vec& p) const { return -an * 2 * std::cos(M_PI * p(0)) / scale; }
};

double manufactured_error(const BackgroundSolution& bg, int nc) {
  const Nozzle g = nozzle(nc, 2 * nc - 1);
  const LinearizedProblem prob(g, FrozenCoefficients::from_background(bg, g));
  const auto& c = prob.coefficients();
  const Manufactured m{c.a_cross[0], c.a_axial_mid[0], c.beta_mid[0], c.c_node[0], c.scale_node[0]};
  LinearData d = LinearData::zeros(g);
  const double h = g.spacing(1);
  for (std::size_t i = 0; i < g.size(); ++i) {
    Vec p = g.point(i);
    d.F_node[1](i) = m.G(p);
    d.f(i) = m.f(p);
    d.g(i) = m.g(p);
    p(1) += 0.5 * h;
    d.F.comps[1](i) = m.G(p);
  }
  d.lift = lift_boundary(
      g, [](const Vec& x) { return 0.1 * std::cos(M_PI * x(0)); },
      [](const Vec& x) { return 0.3 * std::cos(M_PI * x(0)); });
  const LinearSolution s = prob.solve(d);
  const Field ve = sample(g, [&](const Vec& p) { return m.v(p); });
  const Field We = sample(g, [&](const Vec& p) { return m.W(p); });
  return std::max((s.v - ve).cwiseAbs().maxCoeff(), (s.W - We).cwiseAbs().maxCoeff());
}

OneDParams monotone_orbit() {
  OneDParams p;
  p.law = GasLaw(2.0, 1.0);
  p.J0 = 0.5;
  p.rho0 = 1.2;
  p.E0 = 0.1;
  return p;
}

}  // namespace

BackgroundSolution reference_background() {
  OneDParams p;
  p.law = GasLaw(2.0, 1.0);
  p.J0 = 0.5;
  p.rho0 = 1.5;
  p.E0 = 0.5;
  return integrate_ivp(p);
}

BackgroundSolution constant_background() {
  OneDParams p;
  p.law = GasLaw(2.0, 1.0);
  return integrate_ivp(p);
}

CheckResult check_structural_identity(int samples, unsigned seed) {
  return timed("structural identity", [&] {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    double worst = 0.0, closed = 0.0;
    int used = 0;
    for (double gamma : {1.0, 1.4, 2.0}) {
      const GasLaw law(gamma, 1.0);
      for (int k = 0; k < samples; ++k) {
        Vec q(2);
        q << u(rng), u(rng);
        const double z = 1.5 + u(rng);
        const FlowState st = density_from_state(law, z, q.squaredNorm());
        if (!st.subsonic) continue;
        const FluxDerivatives d = derivatives(law, z, q);
        worst = std::max(worst, (d.dA_dz + d.dB_dq).cwiseAbs().maxCoeff());
        const Vec ref = q * st.density / law.dpressure(st.density);
        closed = std::max(closed, (d.dA_dz - ref).cwiseAbs().maxCoeff() / (1.0 + ref.norm()));
        ++used;
      }
    }
    CheckResult r;
    r.value = worst;
    r.pass = worst < 1e-13 && closed < 1e-12 && used > samples;
    r.detail = "max |dA/dz + dB/dq| = " + sci(worst) + " over " + std::to_string(used) +
               " subsonic samples; closed-form dA/dz defect " + sci(closed);
    return r;
  });
}

CheckResult check_enthalpy_roundtrip(int samples, unsigned seed) {
  return timed("enthalpy roundtrip", [&] {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> s_dist(-1.0, 3.0);
    double worst = 0.0;
    for (double gamma : {1.0, 1.4, 2.0}) {
      const GasLaw law(gamma, 1.0);
      for (int k = 0; k < samples; ++k) {
        const double s = s_dist(rng);
        worst = std::max(worst, std::abs(law.enthalpy(law.enthalpy_inverse(s)) - s));
      }
    }
    CheckResult r;
    r.value = worst;
    r.pass = worst < 1e-12;
    r.detail = "max |h(h^-1(s)) - s| = " + sci(worst);
    return r;
  });
}

CheckResult check_ode(int steps) {
  return timed("1D equilibrium and RK4 order", [&] {
    OneDParams p;
    p.law = GasLaw(2.0, 1.0);
    p.rho0 = 1.0;
    p.E0 = 0.0;
    const BackgroundSolution sol = integrate_ivp(p, steps);
    double drift = 0.0;
    for (std::size_t k = 0; k < sol.size(); ++k) {
      drift = std::max({drift, std::abs(sol.rho[k] - 1.0), std::abs(sol.E[k])});
    }
    const OneDParams o = monotone_orbit();
    const double r1 = integrate_ivp(o, 16).rho.back();
    const double r2 = integrate_ivp(o, 32).rho.back();
    const double r3 = integrate_ivp(o, 64).rho.back();
    const double order = std::log2(std::abs(r1 - r2) / std::abs(r2 - r3));
    CheckResult r;
    r.value = order;
    r.pass = drift < 1e-12 && order >= 3.7 && order <= 4.3;
    r.detail = "equilibrium drift " + sci(drift) + " over " + std::to_string(steps) +
               " steps; observed order " + std::to_string(order);
    return r;
  });
}

CheckResult check_shooting() {
  return timed("shooting roundtrip", [] {
    const OneDParams o = monotone_orbit();
    const double rex = integrate_ivp(o).rho.back();
    const ShootResult a = shoot_bvp(o.law, o.b, o.L, o.rho0, rex, o.J0);
    ShootOptions other;
    other.E_lo = -2.0;
    other.E_hi = 3.7;
    other.probes = 17;
    const ShootResult b = shoot_bvp(o.law, o.b, o.L, o.rho0, rex, o.J0, other);
    const double err = std::abs(a.E0 - o.E0), spread = std::abs(a.E0 - b.E0);
    CheckResult r;
    r.value = std::max(err, spread);
    r.pass = err < 1e-8 && spread < 1e-8;
    r.detail = "E0 error " + sci(err) + ", bracket spread " + sci(spread);
    return r;
  });
}

CheckResult check_coupling(const Nozzle& grid, int pairs, unsigned seed) {
  return timed("coupling cancellation", [&] {
    double worst = 0.0;
    for (const BackgroundSolution& bg : {constant_background(), reference_background()}) {
      const LinearizedProblem prob(grid, FrozenCoefficients::from_background(bg, grid));
      for (int t = 0; t < pairs; ++t) {
        const auto [xi, eta] = random_test_pair(prob, static_cast<std::uint64_t>(seed) * 1000 + t);
        worst = std::max(worst, std::abs(prob.cross_terms(xi, eta)));
      }
    }
    CheckResult r;
    r.value = worst;
    r.pass = worst < 1e-12;
    r.detail = "max |coupling sum| = " + sci(worst) + " over " + std::to_string(2 * pairs) + " pairs";
    return r;
  });
}

CheckResult check_coercivity(const Nozzle& grid, int trials, unsigned seed) {
  return timed("coercivity", [&] {
    const BackgroundSolution bg = constant_background();
    const LinearizedProblem prob(grid, FrozenCoefficients::from_background(bg, grid));
    const CoercivityResult c = coercivity_check(prob, trials, seed);
    const double bound = 0.9 * std::min(c.lambda, 1.0);
    CheckResult r;
    r.value = c.min_ratio;
    r.pass = c.min_ratio >= bound;
    r.detail = "min ratio " + std::to_string(c.min_ratio) + " >= " + std::to_string(bound);
    return r;
  });
}

CheckResult check_manufactured(const std::vector<int>& cross_nodes) {
  return timed("manufactured solution order", [&] {
    const BackgroundSolution bg = constant_background();
    std::vector<double> err;
    for (int n : cross_nodes) err.push_back(manufactured_error(bg, n));
    CheckResult r;
    r.pass = err.size() >= 2;
    r.value = 2.0;
    std::ostringstream os;
    os << "orders";
    for (std::size_t k = 1; k < err.size(); ++k) {
      const double o = std::log2(err[k - 1] / err[k]);
      os << ' ' << o;
      if (std::abs(o - 2.0) > std::abs(r.value - 2.0)) r.value = o;
      r.pass = r.pass && std::abs(o - 2.0) <= 0.3;
    }
    r.detail = os.str();
    return r;
  });
}

CheckResult check_fixed_point(const Nozzle& grid, double sigma, unsigned seed) {
  return timed("nonlinear fixed point", [&] {
    const BackgroundSolution bg = reference_background();
    IterationConfig c;
    c.sigma = sigma;
    c.seed = seed;
    const FixedPoint fp = run_fixed_point(c, perturb_data(bg, grid, sigma), bg, grid);
    double kmax = 0.0;
    for (double k : fp.report.contraction_factors) kmax = std::max(kmax, k);
    CheckResult r;
    r.value = kmax;
    r.pass = fp.report.converged && kmax < 1.0 && fp.report.subsonic_margin > 0.0;
    r.detail = std::to_string(fp.report.iterations) + " steps, max contraction " + sci(kmax) +
               ", subsonic margin " + sci(fp.report.subsonic_margin);
    return r;
  });
}

std::vector<CheckResult> invariant_suite(unsigned seed) {
  return {check_structural_identity(10000, seed),
          check_enthalpy_roundtrip(10000, seed),
          check_ode(1024),
          check_shooting(),
          check_coupling(nozzle(33, 65), 100, seed),
          check_coercivity(nozzle(17, 33), 200, seed),
          check_manufactured({17, 33, 65}),
          check_fixed_point(nozzle(17, 33), 1e-3, seed)};
}

}  // namespace epflow
