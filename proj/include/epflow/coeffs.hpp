#pragma once

#include <limits>

#include <Eigen/Core>

#include "epflow/gas.hpp"

namespace epflow {

class BackgroundSolution;

using Vec = Eigen::Matrix<double, Eigen::Dynamic, 1, 0, 3, 1>;
using Mat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, 0, 3, 3>;

inline constexpr double kNoRadius = std::numeric_limits<double>::infinity();

/// A(z, q) = rho(z, |q|^2) q.
Vec flux_A(const GasLaw& law, double z, const Vec& q);
/// B(z, q) = rho(z, |q|^2).
double charge_B(const GasLaw& law, double z, const Vec& q);

struct FluxDerivatives {
  double rho = 0.0;
  Vec dA_dz;
  double dB_dz = 0.0;
  Mat dA_dq;
  Vec dB_dq;
};

/// Exact first derivatives of A and B. dB_dq is formed as -dA_dz so that
/// dA_dz + dB_dq vanishes identically in floating point.
FluxDerivatives derivatives(const GasLaw& law, double z, const Vec& q);

/// Linearization point (Phi0, Dphi0) of a background; rho_bg is the closure.
struct LinPoint {
  GasLaw law;
  double Phi0 = 0.0;
  Vec Dphi0;
  double rho_bg = 0.0;
  FluxDerivatives d;  // derivatives at (Phi0, Dphi0)

  /// Throws NotSubsonicError unless |Dphi0|^2 < p'(rho_bg).
  static LinPoint make(const GasLaw& law, double Phi0, const Vec& Dphi0);
  int dim() const { return static_cast<int>(Dphi0.size()); }
  /// Local mass flux rho_bg * |Dphi0|.
  double mass_flux() const { return rho_bg * Dphi0.norm(); }
};

/// Background linearization point at axial position x for an n-dim nozzle.
LinPoint background_point(const BackgroundSolution& bg, double x, int dim);

struct AijResult {
  Mat a;  // diagonal
  double lambda = 0.0;
};

AijResult aij_at(const LinPoint& pt);

/// Quadratic Taylor remainders. `radius` bounds |z| + |q|; exceeding it throws
/// AdmissibilityError.
Vec remainder_F(const LinPoint& pt, double z, const Vec& q, double radius = kNoRadius);
double remainder_f(const LinPoint& pt, double z, const Vec& q, double radius = kNoRadius);

struct ExitG {
  double g = 0.0;
  double g1 = 0.0;
  double g2hat = 0.0;
  double rho_tilde = 0.0;
};

/// Exit datum for B_q . Dv = g; p_ex,0 is p(rho_bg). `radius` bounds |q|.
ExitG exit_g(const LinPoint& pt, const Vec& q, double pex, double Psi_ex,
             double radius = kNoRadius);

/// a_nn p'(rho_bg) / J0, the factor converting g into a conormal flux datum.
double conormal_scale(const LinPoint& pt);

struct AdmissibilityRadii {
  double delta1 = 0.0;
  double delta2 = 0.0;
  double delta3 = 0.0;
};

/// Operational delta1, delta2 and delta3 = min(delta1, delta2) over the
/// background nodes; see README for the definition.
AdmissibilityRadii admissibility_radii(const BackgroundSolution& bg);

}  // namespace epflow
