#include "epflow/ode1d.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <ostream>

#include "epflow/error.hpp"

namespace epflow {

namespace {

std::string fmt17(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

double hermite(double h, double t, double y0, double y1, double d0, double d1) {
  const double t2 = t * t, t3 = t2 * t;
  return (2 * t3 - 3 * t2 + 1) * y0 + (t3 - 2 * t2 + t) * h * d0 +
         (-2 * t3 + 3 * t2) * y1 + (t3 - t2) * h * d1;
}

// Cumulative integral of samples f on a uniform grid: Simpson on pairs of
// intervals, the three-point half-interval rule for odd nodes.
std::vector<double> cumulative_simpson(const std::vector<double>& f, double h) {
  const std::size_t n = f.size();
  std::vector<double> out(n, 0.0);
  if (n < 3) {
    if (n == 2) out[1] = 0.5 * h * (f[0] + f[1]);
    return out;
  }
  for (std::size_t k = 0; k + 1 < n; k += 2) {
    if (k + 2 < n) {
      out[k + 1] = out[k] + h * (5 * f[k] + 8 * f[k + 1] - f[k + 2]) / 12.0;
      out[k + 2] = out[k] + h * (f[k] + 4 * f[k + 1] + f[k + 2]) / 3.0;
    } else {
      out[k + 1] = out[k] + h * (-f[k - 1] + 8 * f[k] + 5 * f[k + 1]) / 12.0;
    }
  }
  return out;
}

}  // namespace

void OneDParams::validate() const {
  if (!(J0 > 0.0)) throw DomainError("OneDParams: J0 must be positive");
  if (!(rho0 > 0.0)) throw DomainError("OneDParams: rho0 must be positive");
  if (!(L > 0.0)) throw DomainError("OneDParams: L must be positive");
  if (!b) throw DomainError("OneDParams: missing b profile");
}

double sonic_density(const GasLaw& law, double J0) {
  if (law.isothermal()) return J0;
  return std::pow(J0 * J0 / law.gamma(), 1.0 / (law.gamma() + 1.0));
}

OdeRhs ode_rhs(const OneDParams& params, double x, double rho, double E) {
  const double J2 = params.J0 * params.J0;
  const double denom = rho * rho * params.law.dpressure(rho) - J2;
  if (denom < kSonicGuard * J2) {
    throw SonicProximityError("ode_rhs: sonic proximity at x = " + fmt17(x));
  }
  return {rho * rho * rho * E / denom, rho - params.b(x)};
}

BackgroundSolution integrate_ivp(const OneDParams& params, int n_steps) {
  params.validate();
  if (n_steps < 16) throw DomainError("integrate_ivp: n_steps must be >= 16");
  const GasLaw& law = params.law;
  const double h = params.L / n_steps;

  BackgroundSolution sol;
  sol.law = law;
  sol.J0 = params.J0;
  sol.L = params.L;
  sol.b = params.b;
  sol.xs.resize(n_steps + 1);
  sol.rho.resize(n_steps + 1);
  sol.E.resize(n_steps + 1);

  auto rhs = [&](double x, double r, double e) {
    if (!(r > law.rho_floor())) {
      throw BreakdownError(BreakdownError::Kind::Vacuum, x,
                           "vacuum breakdown at x = " + fmt17(x));
    }
    try {
      return ode_rhs(params, x, r, e);
    } catch (const SonicProximityError&) {
      throw BreakdownError(BreakdownError::Kind::Sonic, x,
                           "sonic breakdown at x = " + fmt17(x));
    }
  };

  double r = params.rho0, e = params.E0;
  rhs(0.0, r, e);
  for (int k = 0; k <= n_steps; ++k) {
    const double x = k * h;
    sol.xs[k] = x;
    sol.rho[k] = r;
    sol.E[k] = e;
    if (k == n_steps) break;
    const OdeRhs k1 = rhs(x, r, e);
    const OdeRhs k2 = rhs(x + 0.5 * h, r + 0.5 * h * k1.drho, e + 0.5 * h * k1.dE);
    const OdeRhs k3 = rhs(x + 0.5 * h, r + 0.5 * h * k2.drho, e + 0.5 * h * k2.dE);
    const OdeRhs k4 = rhs(x + h, r + h * k3.drho, e + h * k3.dE);
    r += h / 6.0 * (k1.drho + 2 * k2.drho + 2 * k3.drho + k4.drho);
    e += h / 6.0 * (k1.dE + 2 * k2.dE + 2 * k3.dE + k4.dE);
  }

  sol.u.resize(n_steps + 1);
  sol.drho.resize(n_steps + 1);
  sol.dE.resize(n_steps + 1);
  sol.nu0 = INFINITY;
  for (int k = 0; k <= n_steps; ++k) {
    const OdeRhs d = rhs(sol.xs[k], sol.rho[k], sol.E[k]);
    sol.drho[k] = d.drho;
    sol.dE[k] = d.dE;
    sol.u[k] = params.J0 / sol.rho[k];
    const double margin = law.dpressure(sol.rho[k]) - sol.u[k] * sol.u[k];
    if (!(margin > 0.0)) {
      throw BreakdownError(BreakdownError::Kind::Sonic, sol.xs[k],
                           "sonic breakdown at x = " + fmt17(sol.xs[k]));
    }
    sol.nu0 = std::min(sol.nu0, margin);
  }
  build_background(sol);
  return sol;
}

BoundaryTriple params_to_boundary_data(const BackgroundSolution& sol) {
  const GasLaw& law = sol.law;
  const double rL = sol.rho.back(), r0 = sol.rho.front();
  BoundaryTriple t;
  t.B00 = 0.5 * std::pow(sol.J0 / rL, 2) + law.enthalpy(rL);
  t.pex0 = law.pressure(rL);
  t.Phi_en0 = 0.5 * std::pow(sol.J0 / r0, 2) + law.enthalpy(r0) - t.B00;
  return t;
}

void build_background(BackgroundSolution& sol) {
  const std::size_t n = sol.xs.size();
  if (n < 2) throw DomainError("build_background: need at least two nodes");
  const double h = sol.xs[1] - sol.xs[0];
  sol.triple = params_to_boundary_data(sol);
  sol.phi0 = cumulative_simpson(sol.u, h);
  sol.Phi0 = cumulative_simpson(sol.E, h);
  const double base = sol.triple.B00 + sol.triple.Phi_en0;
  for (double& v : sol.Phi0) v += base;
}

BackgroundSample BackgroundSolution::at(double x) const {
  const std::size_t n = xs.size();
  const double h = xs[1] - xs[0];
  x = std::clamp(x, 0.0, L);
  std::size_t k = std::min<std::size_t>(static_cast<std::size_t>(x / h), n - 2);
  const double t = (x - xs[k]) / h;
  BackgroundSample s;
  if (t == 0.0) {
    s.rho = rho[k];
    s.E = E[k];
    s.phi0 = phi0[k];
    s.Phi0 = Phi0[k];
  } else if (t == 1.0) {
    s.rho = rho[k + 1];
    s.E = E[k + 1];
    s.phi0 = phi0[k + 1];
    s.Phi0 = Phi0[k + 1];
  } else {
    s.rho = hermite(h, t, rho[k], rho[k + 1], drho[k], drho[k + 1]);
    s.E = hermite(h, t, E[k], E[k + 1], dE[k], dE[k + 1]);
    s.phi0 = hermite(h, t, phi0[k], phi0[k + 1], u[k], u[k + 1]);
    s.Phi0 = hermite(h, t, Phi0[k], Phi0[k + 1], E[k], E[k + 1]);
  }
  s.u = J0 / s.rho;
  s.b = b(x);
  return s;
}

double BackgroundSolution::mass_flux_defect() const {
  double m = 0.0;
  for (std::size_t k = 0; k < xs.size(); ++k) m = std::max(m, std::abs(rho[k] * u[k] - J0));
  return m;
}

double BackgroundSolution::consistency_residual() const {
  double m = 0.0;
  for (std::size_t k = 0; k < xs.size(); ++k) {
    m = std::max(m, std::abs(law.enthalpy(rho[k]) - Phi0[k] + 0.5 * u[k] * u[k]));
  }
  return m;
}

ShootResult shoot_bvp(const GasLaw& law, const Profile& b, double L, double rho_en,
                      double rho_ex, double J0, const ShootOptions& opts) {
  const double rs = sonic_density(law, J0);
  if (!(rho_en > rs) || !(rho_ex > rs)) {
    throw NoBracketError("shoot_bvp: boundary densities must exceed the sonic density " +
                         fmt17(rs));
  }
  OneDParams p;
  p.law = law;
  p.J0 = J0;
  p.rho0 = rho_en;
  p.L = L;
  p.b = b;

  // Forward map; NaN marks a breakdown.
  auto miss = [&](double E0) {
    p.E0 = E0;
    try {
      return integrate_ivp(p, opts.n_steps).rho.back() - rho_ex;
    } catch (const BreakdownError&) {
      return std::nan("");
    }
  };

  const int probes = std::max(opts.probes, 2);
  double a = 0, fa = 0, c = 0, fc = 0;
  bool found = false;
  double prev_E = opts.E_lo, prev_f = miss(prev_E);
  if (prev_f == 0.0) {
    p.E0 = prev_E;
    return {integrate_ivp(p, opts.n_steps), prev_E, 0};
  }
  for (int i = 1; i < probes && !found; ++i) {
    const double E = opts.E_lo + (opts.E_hi - opts.E_lo) * i / (probes - 1);
    const double f = miss(E);
    if (f == 0.0) {
      p.E0 = E;
      return {integrate_ivp(p, opts.n_steps), E, 0};
    }
    if (std::isfinite(prev_f) && std::isfinite(f) && (prev_f < 0) != (f < 0)) {
      a = prev_E, fa = prev_f, c = E, fc = f;
      found = true;
    }
    prev_E = E;
    prev_f = f;
  }
  if (!found) {
    throw NoBracketError("shoot_bvp: no sign change of rho(L) - rho_ex in E0 scan");
  }

  // Illinois-modified regula falsi: secant steps kept inside the bracket.
  int side = 0;
  for (int it = 1; it <= opts.max_iter; ++it) {
    const double E = (a * fc - c * fa) / (fc - fa);
    const double f = miss(E);
    if (!std::isfinite(f)) throw NoBracketError("shoot_bvp: breakdown inside bracket");
    if (std::abs(f) < opts.tol || std::abs(c - a) < 1e-15) {
      p.E0 = E;
      return {integrate_ivp(p, opts.n_steps), E, it};
    }
    if ((f < 0) == (fc < 0)) {
      c = E, fc = f;
      if (side == -1) fa *= 0.5;
      side = -1;
    } else {
      a = E, fa = f;
      if (side == 1) fc *= 0.5;
      side = 1;
    }
  }
  throw MaxIterationsError("shoot_bvp: secant iteration did not converge");
}

MonotoneResult monotone_admissible(const GasLaw& law, const Profile& b, double L,
                                     double rho0, double E0, double J0,
                                     const MonotoneMargins& m) {
  double bsup = -INFINITY;
  for (int i = 0; i <= 1024; ++i) bsup = std::max(bsup, b(L * i / 1024.0));
  MonotoneResult r;
  r.rho_margin = rho0 - bsup - m.eps0;
  r.E_margin = E0 - m.eps1;
  const double u0 = J0 / rho0;
  r.subsonic_margin = law.dpressure(rho0) - u0 * u0 - m.nu1;
  r.admissible = r.rho_margin >= 0 && r.E_margin >= 0 && r.subsonic_margin >= 0;
  return r;
}

AtlasRow atlas_row(const OneDParams& params, int n_steps) {
  AtlasRow row;
  row.J0 = params.J0;
  row.rho0 = params.rho0;
  row.E0 = params.E0;
  try {
    const BackgroundSolution sol = integrate_ivp(params, n_steps);
    row.Phi_en0 = sol.triple.Phi_en0;
    row.B00 = sol.triple.B00;
    row.pex0 = sol.triple.pex0;
    row.nu0 = sol.nu0;
    row.status = "ok";
  } catch (const BreakdownError& e) {
    row.status = std::string(e.kind() == BreakdownError::Kind::Sonic ? "sonic@" : "vacuum@") +
                 fmt17(e.position());
    row.Phi_en0 = row.B00 = row.pex0 = row.nu0 = std::nan("");
  }
  return row;
}

void write_atlas_csv(std::ostream& os, const std::vector<AtlasRow>& rows) {
  os << "J0,rho0,E0,Phi_en0,B00,pex0,nu0,status\n";
  for (const auto& r : rows) {
    os << fmt17(r.J0) << ',' << fmt17(r.rho0) << ',' << fmt17(r.E0) << ','
       << fmt17(r.Phi_en0) << ',' << fmt17(r.B00) << ',' << fmt17(r.pex0) << ','
       << fmt17(r.nu0) << ',' << r.status << '\n';
  }
}

void write_profiles_csv(std::ostream& os, const BackgroundSolution& sol) {
  os << "x,rho,u,E,phi0,Phi0,b\n";
  for (std::size_t k = 0; k < sol.size(); ++k) {
    os << fmt17(sol.xs[k]) << ',' << fmt17(sol.rho[k]) << ',' << fmt17(sol.u[k]) << ','
       << fmt17(sol.E[k]) << ',' << fmt17(sol.phi0[k]) << ',' << fmt17(sol.Phi0[k]) << ','
       << fmt17(sol.b(sol.xs[k])) << '\n';
  }
}

}  // namespace epflow
