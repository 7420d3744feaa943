#include "epflow/gas.hpp"

#include <cmath>
#include <string>

#include "epflow/error.hpp"

namespace epflow {

namespace {

constexpr double kIsothermalSnap = 1e-10;

void require_positive_density(double rho, const char* fn) {
  if (!(rho > 0.0)) {
    throw DomainError(std::string(fn) + ": density must be positive, got " +
                      std::to_string(rho));
  }
}

}  // namespace

GasLaw::GasLaw(double gamma, double k0, double rho_floor)
    : gamma_(gamma), k0_(k0), rho_floor_(rho_floor) {
  if (!(gamma >= 1.0)) throw DomainError("GasLaw: gamma must be >= 1");
  if (!(k0 > 0.0)) throw DomainError("GasLaw: k0 must be positive");
  if (!(rho_floor > 0.0)) throw DomainError("GasLaw: rho_floor must be positive");
  isothermal_ = gamma < 1.0 + kIsothermalSnap;
  if (isothermal_) gamma_ = 1.0;
}

double GasLaw::pressure(double rho) const {
  require_positive_density(rho, "pressure");
  return isothermal_ ? rho : std::pow(rho, gamma_);
}

double GasLaw::dpressure(double rho) const {
  require_positive_density(rho, "dpressure");
  return isothermal_ ? 1.0 : gamma_ * std::pow(rho, gamma_ - 1.0);
}

double GasLaw::d2pressure(double rho) const {
  require_positive_density(rho, "d2pressure");
  return isothermal_ ? 0.0 : gamma_ * (gamma_ - 1.0) * std::pow(rho, gamma_ - 2.0);
}

double GasLaw::enthalpy(double rho) const {
  require_positive_density(rho, "enthalpy");
  if (isothermal_) return std::log(rho / k0_);
  const double e = gamma_ - 1.0;
  return gamma_ / e * (std::pow(rho, e) - std::pow(k0_, e));
}

double GasLaw::enthalpy_floor() const { return enthalpy(rho_floor_); }

double GasLaw::enthalpy_inverse(double s) const {
  if (!(s > enthalpy_floor())) {
    throw VacuumError("enthalpy_inverse: argument " + std::to_string(s) +
                      " is not above h(rho_floor)");
  }
  if (isothermal_) return k0_ * std::exp(s);
  const double e = gamma_ - 1.0;
  const double base = std::pow(k0_, e) + s * e / gamma_;
  return std::pow(base, 1.0 / e);
}

FlowState density_from_state(const GasLaw& law, double Phi, double speed_sq) {
  if (!(speed_sq >= 0.0)) throw DomainError("density_from_state: negative speed_sq");
  FlowState st;
  st.phi_potential = Phi;
  st.speed_sq = speed_sq;
  st.density = law.enthalpy_inverse(Phi - 0.5 * speed_sq);
  st.subsonic = speed_sq < law.dpressure(st.density);
  return st;
}

double bernoulli(const GasLaw& law, double speed_sq, double rho) {
  return 0.5 * speed_sq + law.enthalpy(rho);
}

}  // namespace epflow
