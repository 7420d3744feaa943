#pragma once

#include <string>
#include <vector>

#include "epflow/elliptic.hpp"
#include "epflow/ode1d.hpp"

namespace epflow {

/// Outcome of one invariant check. `value` is the measured quantity and
/// `detail` a short human-readable account of it.
struct CheckResult {
  std::string name;
  bool pass = false;
  double value = 0.0;
  std::string detail;
  double seconds = 0.0;
};

/// max |dA/dz + dB/dq| over random admissible (z, q) for gamma in {1, 1.4, 2};
/// also compares dA/dz with the closed form q rho / p'(rho).
CheckResult check_structural_identity(int samples, unsigned seed);

/// max |h(h^{-1}(s)) - s| over random s, gamma in {1, 1.4, 2}.
CheckResult check_enthalpy_roundtrip(int samples, unsigned seed);

/// Constant state with rho0 = b0, E0 = 0 preserved to 1e-12 over `steps`
/// steps, and the observed RK4 order on a monotone orbit in [3.7, 4.3].
CheckResult check_ode(int steps);

/// E0 recovered from its own exit density, and agreement of two bracket starts.
CheckResult check_shooting();

/// Largest assembled coupling sum over random admissible test pairs.
CheckResult check_coupling(const Nozzle& grid, int pairs, unsigned seed);

/// Smallest Rayleigh ratio against 0.9 min(lambda, 1) on the constant background.
CheckResult check_coercivity(const Nozzle& grid, int trials, unsigned seed);

/// Observed max-norm orders of a manufactured linear solution over the node
/// counts (nc, 2 nc - 1); each must lie in 2 +- 0.3.
CheckResult check_manufactured(const std::vector<int>& cross_nodes);

/// Fixed point at sigma on the given grid: converged, all contraction
/// factors < 1 and a positive subsonic margin.
CheckResult check_fixed_point(const Nozzle& grid, double sigma, unsigned seed);

/// The desk-scale battery run by `epflow verify`.
std::vector<CheckResult> invariant_suite(unsigned seed);

/// The curved background used by the nonlinear checks: gamma = 2, k0 = 1,
/// J0 = 0.5, rho0 = 1.5, E0 = 0.5, b = 1.
BackgroundSolution reference_background();

/// The uniform state rho = b = 1, u = 0.5 for gamma = 2, k0 = 1.
BackgroundSolution constant_background();

}  // namespace epflow
