#include "epflow/coeffs.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "epflow/error.hpp"
#include "epflow/ode1d.hpp"

namespace epflow {

namespace {

void check_ball(double size, double radius, const char* fn) {
  if (!(size < radius)) {
    throw AdmissibilityError(std::string(fn) + ": argument of size " + std::to_string(size) +
                             " outside admissibility radius " + std::to_string(radius));
  }
}

}  // namespace

double charge_B(const GasLaw& law, double z, const Vec& q) {
  return law.enthalpy_inverse(z - 0.5 * q.squaredNorm());
}

Vec flux_A(const GasLaw& law, double z, const Vec& q) { return charge_B(law, z, q) * q; }

FluxDerivatives derivatives(const GasLaw& law, double z, const Vec& q) {
  FluxDerivatives d;
  const int n = static_cast<int>(q.size());
  d.rho = charge_B(law, z, q);
  const double c2 = law.dpressure(d.rho);
  d.dB_dz = d.rho / c2;
  d.dA_dz = d.dB_dz * q;
  d.dB_dq = -d.dA_dz;
  d.dA_dq = d.rho * (Mat::Identity(n, n) - q * q.transpose() / c2);
  return d;
}

LinPoint LinPoint::make(const GasLaw& law, double Phi0, const Vec& Dphi0) {
  LinPoint p;
  p.law = law;
  p.Phi0 = Phi0;
  p.Dphi0 = Dphi0;
  p.d = derivatives(law, Phi0, Dphi0);
  p.rho_bg = p.d.rho;
  if (!(Dphi0.squaredNorm() < law.dpressure(p.rho_bg))) {
    throw NotSubsonicError("LinPoint: background state is not subsonic");
  }
  return p;
}

LinPoint background_point(const BackgroundSolution& bg, double x, int dim) {
  const BackgroundSample s = bg.at(x);
  Vec D = Vec::Zero(dim);
  D(dim - 1) = s.u;
  return LinPoint::make(bg.law, s.Phi0, D);
}

AijResult aij_at(const LinPoint& pt) {
  const int n = pt.dim();
  const double c2 = pt.law.dpressure(pt.rho_bg);
  const double u2 = pt.Dphi0.squaredNorm();
  AijResult r;
  r.a = Mat::Zero(n, n);
  for (int i = 0; i < n - 1; ++i) r.a(i, i) = pt.rho_bg;
  r.a(n - 1, n - 1) = pt.rho_bg * (1.0 - u2 / c2);
  if (!(r.a(n - 1, n - 1) > 0.0)) throw NotSubsonicError("aij_at: a_nn is not positive");
  r.lambda = r.a.diagonal().minCoeff();
  return r;
}

Vec remainder_F(const LinPoint& pt, double z, const Vec& q, double radius) {
  check_ball(std::abs(z) + q.norm(), radius, "remainder_F");
  const Vec A = flux_A(pt.law, pt.Phi0 + z, pt.Dphi0 + q);
  const Vec A0 = pt.rho_bg * pt.Dphi0;
  return -(A - A0 - z * pt.d.dA_dz - pt.d.dA_dq * q);
}

double remainder_f(const LinPoint& pt, double z, const Vec& q, double radius) {
  check_ball(std::abs(z) + q.norm(), radius, "remainder_f");
  const double B = charge_B(pt.law, pt.Phi0 + z, pt.Dphi0 + q);
  return B - pt.rho_bg - z * pt.d.dB_dz - pt.d.dB_dq.dot(q);
}

ExitG exit_g(const LinPoint& pt, const Vec& q, double pex, double Psi_ex, double radius) {
  check_ball(q.norm(), radius, "exit_g");
  const GasLaw& law = pt.law;
  ExitG r;
  r.rho_tilde = charge_B(law, pt.Phi0 + Psi_ex, pt.Dphi0 + q);
  const double drho = r.rho_tilde - pt.rho_bg;
  const double p_bg = law.pressure(pt.rho_bg);
  r.g1 = std::abs(drho) < 1e-12 ? law.dpressure(pt.rho_bg)
                                : (law.pressure(r.rho_tilde) - p_bg) / drho;
  r.g2hat = -drho + pt.d.dB_dq.dot(q);
  r.g = (pex - p_bg) / r.g1 + r.g2hat;
  return r;
}

double conormal_scale(const LinPoint& pt) {
  const double J = pt.mass_flux();
  if (!(J >= 1e-8)) throw DomainError("conormal_scale: mass flux must be >= 1e-8");
  return aij_at(pt).a(pt.dim() - 1, pt.dim() - 1) * pt.law.dpressure(pt.rho_bg) / J;
}

AdmissibilityRadii admissibility_radii(const BackgroundSolution& bg) {
  const GasLaw& law = bg.law;
  const double rho_min = *std::min_element(bg.rho.begin(), bg.rho.end());
  const double h_floor = law.enthalpy(law.rho_floor());
  const double h_half = law.enthalpy(0.5 * rho_min);
  AdmissibilityRadii r;
  r.delta1 = r.delta2 = 1.0;
  for (std::size_t k = 0; k < bg.size(); ++k) {
    const double s0 = bg.Phi0[k] - 0.5 * bg.u[k] * bg.u[k];
    const double c = std::max(1.0, std::abs(bg.u[k]));
    // Largest s with s^2/2 + c s <= m/2.
    auto reach = [c](double m) { return -c + std::sqrt(c * c + std::max(m, 0.0)); };
    r.delta1 = std::min(r.delta1, reach(s0 - h_floor) / 3.0);
    r.delta2 = std::min(r.delta2, reach(s0 - h_half) / 4.0);
  }
  r.delta1 = std::min(r.delta1, 0.999);
  r.delta2 = std::min(r.delta2, 0.999);
  r.delta3 = std::min(r.delta1, r.delta2);
  return r;
}

}  // namespace epflow
