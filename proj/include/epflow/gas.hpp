#pragma once

namespace epflow {

/// Polytropic pressure law p(rho) = rho^gamma together with the enthalpy
/// h(rho) = \int_{k0}^{rho} p'(s)/s ds and its inverse.
///
/// gamma values in [1, 1 + 1e-10) are treated as exactly isothermal so that
/// the logarithmic branch of h is used instead of the ill-conditioned power
/// form.
class GasLaw {
 public:
  GasLaw() = default;
  GasLaw(double gamma, double k0, double rho_floor = 1e-8);

  double gamma() const noexcept { return gamma_; }
  double k0() const noexcept { return k0_; }
  double rho_floor() const noexcept { return rho_floor_; }
  bool isothermal() const noexcept { return isothermal_; }

  double pressure(double rho) const;
  /// p'(rho), the squared sound speed.
  double dpressure(double rho) const;
  double d2pressure(double rho) const;

  double enthalpy(double rho) const;
  /// Inverse of `enthalpy`. Throws VacuumError when s <= h(rho_floor).
  double enthalpy_inverse(double s) const;
  /// h(rho_floor), the lower admissibility bound for enthalpy arguments.
  double enthalpy_floor() const;

 private:
  double gamma_ = 2.0;
  double k0_ = 1.0;
  double rho_floor_ = 1e-8;
  bool isothermal_ = false;
};

struct FlowState {
  double phi_potential = 0.0;
  double speed_sq = 0.0;
  double density = 0.0;
  bool subsonic = false;
};

/// rho = h^{-1}(Phi - speed_sq/2), flagged subsonic iff speed_sq < p'(rho).
FlowState density_from_state(const GasLaw& law, double Phi, double speed_sq);

/// B = speed_sq/2 + h(rho).
double bernoulli(const GasLaw& law, double speed_sq, double rho);

}  // namespace epflow
