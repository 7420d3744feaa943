#pragma once

#include <functional>
#include <iosfwd>
#include <string>
#include <vector>

#include "epflow/gas.hpp"

namespace epflow {

using Profile = std::function<double(double)>;

/// Parameters of the 1D initial value problem for (rho, E).
struct OneDParams {
  GasLaw law;
  double J0 = 0.5;
  double rho0 = 1.0;
  double E0 = 0.0;
  double L = 1.0;
  Profile b = [](double) { return 1.0; };

  void validate() const;
};

struct OdeRhs {
  double drho;
  double dE;
};

/// Relative sonic guard: the RHS refuses states with rho^2 p' - J0^2 < guard*J0^2.
inline constexpr double kSonicGuard = 1e-6;

/// rho' = rho^3 E / (rho^2 p'(rho) - J0^2), E' = rho - b(x).
OdeRhs ode_rhs(const OneDParams& params, double x, double rho, double E);

/// Density where rho^2 p'(rho) = J0^2.
double sonic_density(const GasLaw& law, double J0);

struct BoundaryTriple {
  double Phi_en0 = 0.0;
  double B00 = 0.0;
  double pex0 = 0.0;
};

/// Background values at one axial position.
struct BackgroundSample {
  double rho;
  double u;
  double E;
  double phi0;
  double Phi0;
  double b;
};

class BackgroundSolution {
 public:
  GasLaw law;
  double J0 = 0.0;
  double L = 0.0;
  Profile b;
  std::vector<double> xs, rho, u, E, drho, dE, phi0, Phi0;
  double nu0 = 0.0;
  BoundaryTriple triple;

  std::size_t size() const { return xs.size(); }
  /// Cubic Hermite evaluation at x in [0, L]; uses the known derivatives
  /// rho', E' = rho - b, phi0' = u, Phi0' = E.
  BackgroundSample at(double x) const;
  /// Largest of |rho*u - J0| over the nodes.
  double mass_flux_defect() const;
  /// Largest of |h(rho) - Phi0 + u^2/2| over the nodes.
  double consistency_residual() const;
};

/// Classical RK4 on [0, L]. Throws BreakdownError on sonic or vacuum failure.
BackgroundSolution integrate_ivp(const OneDParams& params, int n_steps = 1024);

BoundaryTriple params_to_boundary_data(const BackgroundSolution& sol);

/// Fills phi0, Phi0 (composite Simpson) and the boundary triple from the
/// sampled rho, u, E profiles.
void build_background(BackgroundSolution& sol);

struct ShootOptions {
  double E_lo = -5.0;
  double E_hi = 5.0;
  int probes = 64;
  double tol = 1e-12;
  int max_iter = 100;
  int n_steps = 1024;
};

struct ShootResult {
  BackgroundSolution solution;
  double E0 = 0.0;
  int iterations = 0;
};

/// Solves rho(0) = rho_en, rho(L) = rho_ex by shooting on E0.
ShootResult shoot_bvp(const GasLaw& law, const Profile& b, double L, double rho_en,
                      double rho_ex, double J0, const ShootOptions& opts = {});

struct MonotoneMargins {
  double eps0 = 0.05;
  double eps1 = 0.05;
  double nu1 = 0.05;
};

struct MonotoneResult {
  bool admissible = false;
  double rho_margin = 0.0;     // rho0 - sup b - eps0
  double E_margin = 0.0;       // E0 - eps1
  double subsonic_margin = 0.0;  // p'(rho0) - u0^2 - nu1
};

/// sup b is taken over 1025 uniform samples of [0, L].
MonotoneResult monotone_admissible(const GasLaw& law, const Profile& b, double L,
                                     double rho0, double E0, double J0,
                                     const MonotoneMargins& m = {});

struct AtlasRow {
  double J0 = 0.0, rho0 = 0.0, E0 = 0.0;
  double Phi_en0 = 0.0, B00 = 0.0, pex0 = 0.0, nu0 = 0.0;
  std::string status;  // "ok", "sonic@x" or "vacuum@x"
};

AtlasRow atlas_row(const OneDParams& params, int n_steps = 1024);
void write_atlas_csv(std::ostream& os, const std::vector<AtlasRow>& rows);
void write_profiles_csv(std::ostream& os, const BackgroundSolution& sol);

}  // namespace epflow
