#include <cmath>
#include <random>

#include "doctest.h"
#include "epflow/coeffs.hpp"
#include "epflow/error.hpp"
#include "epflow/ode1d.hpp"

using namespace epflow;

namespace {

Vec vec2(double a, double b) {
  Vec v(2);
  v << a, b;
  return v;
}

// Constant background with rho = 1, u = 0.5 for gamma = 2, k0 = 1.
LinPoint flat_point() { return LinPoint::make(GasLaw(2.0, 1.0), 0.125, vec2(0.0, 0.5)); }

// t-integral forms of the remainders, 64-point midpoint rule.
Vec F_quadrature(const LinPoint& pt, double z, const Vec& q) {
  Vec acc = Vec::Zero(q.size());
  const int n = 64;
  for (int k = 0; k < n; ++k) {
    const double t = (k + 0.5) / n;
    const auto dz = derivatives(pt.law, pt.Phi0 + t * z, pt.Dphi0 + q);
    const auto dq = derivatives(pt.law, pt.Phi0, pt.Dphi0 + t * q);
    acc += z * (dz.dA_dz - pt.d.dA_dz) + (dq.dA_dq - pt.d.dA_dq) * q;
  }
  return -acc / n;
}

double f_quadrature(const LinPoint& pt, double z, const Vec& q) {
  double acc = 0.0;
  const int n = 64;
  for (int k = 0; k < n; ++k) {
    const double t = (k + 0.5) / n;
    const auto dz = derivatives(pt.law, pt.Phi0 + t * z, pt.Dphi0 + q);
    const auto dq = derivatives(pt.law, pt.Phi0, pt.Dphi0 + t * q);
    acc += z * (dz.dB_dz - pt.d.dB_dz) + (dq.dB_dq - pt.d.dB_dq).dot(q);
  }
  return acc / n;
}

double fitted_slope(const std::vector<double>& ts, const std::vector<double>& vals) {
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  const double n = static_cast<double>(ts.size());
  for (std::size_t i = 0; i < ts.size(); ++i) {
    const double x = std::log(ts[i]), y = std::log(vals[i]);
    sx += x, sy += y, sxx += x * x, sxy += x * y;
  }
  return (n * sxy - sx * sy) / (n * sxx - sx * sx);
}

}  // namespace

TEST_CASE("flux and charge") {
  GasLaw law(2.0, 1.0);
  const Vec q = vec2(0.0, 0.5);
  CHECK(charge_B(law, 0.125, q) == doctest::Approx(1.0).epsilon(1e-15));
  const Vec A = flux_A(law, 0.125, q);
  CHECK(A(0) == 0.0);
  CHECK(A(1) == doctest::Approx(0.5));
  CHECK(charge_B(law, 0.0, Vec::Zero(2)) == doctest::Approx(1.0));
  CHECK(flux_A(law, 0.0, Vec::Zero(2)).norm() == 0.0);
  CHECK_THROWS_AS(charge_B(law, -5.0, q), VacuumError);

  std::mt19937_64 rng(42);
  std::uniform_real_distribution<double> u(-0.5, 0.5);
  for (int i = 0; i < 100; ++i) {
    const Vec qq = vec2(u(rng), u(rng));
    const Vec AA = flux_A(law, 1.0 + u(rng), qq);
    CHECK(std::abs(AA(0) * qq(1) - AA(1) * qq(0)) < 1e-15);
  }
}

TEST_CASE("derivatives: hand values and finite differences") {
  GasLaw law(2.0, 1.0);
  const auto d = derivatives(law, 0.125, vec2(0.0, 0.5));
  CHECK(d.dB_dz == doctest::Approx(0.5));
  CHECK(d.dB_dq(0) == 0.0);
  CHECK(d.dB_dq(1) == doctest::Approx(-0.25));
  CHECK(d.dA_dz(1) == doctest::Approx(0.25));
  CHECK((d.dA_dz + d.dB_dq).norm() == 0.0);

  const auto d0 = derivatives(law, 0.3, Vec::Zero(2));
  CHECK((d0.dA_dq - d0.rho * Mat::Identity(2, 2)).norm() == 0.0);
  CHECK(d0.dB_dq.norm() == 0.0);

  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> u(-0.6, 0.6);
  for (double gamma : {1.0, 1.4, 2.0}) {
    GasLaw lw(gamma, 1.0);
    for (int i = 0; i < 50; ++i) {
      const int n = (i % 2) ? 3 : 2;
      Vec q(n);
      for (int k = 0; k < n; ++k) q(k) = u(rng);
      const double z = 1.0 + u(rng);
      const auto dd = derivatives(lw, z, q);
      const double e = 1e-6;
      auto rel = [](double a, double b) { return std::abs(a - b) / std::max(1.0, std::abs(b)); };
      const Vec Az = (flux_A(lw, z + e, q) - flux_A(lw, z - e, q)) / (2 * e);
      const double Bz = (charge_B(lw, z + e, q) - charge_B(lw, z - e, q)) / (2 * e);
      CHECK(rel(dd.dB_dz, Bz) < 1e-6);
      for (int k = 0; k < n; ++k) CHECK(rel(dd.dA_dz(k), Az(k)) < 1e-6);
      for (int j = 0; j < n; ++j) {
        Vec qp = q, qm = q;
        qp(j) += e;
        qm(j) -= e;
        const Vec Aq = (flux_A(lw, z, qp) - flux_A(lw, z, qm)) / (2 * e);
        const double Bq = (charge_B(lw, z, qp) - charge_B(lw, z, qm)) / (2 * e);
        CHECK(rel(dd.dB_dq(j), Bq) < 1e-6);
        for (int k = 0; k < n; ++k) CHECK(rel(dd.dA_dq(k, j), Aq(k)) < 1e-6);
      }
    }
  }
}

TEST_CASE("property: structural identity dA/dz + dB/dq = 0") {
  std::mt19937_64 rng(42);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  double worst = 0.0;
  for (double gamma : {1.0, 1.4, 2.0}) {
    GasLaw law(gamma, 1.0);
    for (int i = 0; i < 10000; ++i) {
      Vec q(2);
      q << u(rng), u(rng);
      const double z = 1.5 + u(rng);
      const auto d = derivatives(law, z, q);
      worst = std::max(worst, (d.dA_dz + d.dB_dq).cwiseAbs().maxCoeff());
    }
  }
  CHECK(worst < 1e-13);
}

TEST_CASE("aij") {
  const auto r = aij_at(flat_point());
  CHECK(r.a(0, 0) == doctest::Approx(1.0));
  CHECK(r.a(1, 1) == doctest::Approx(0.875));
  CHECK(r.a(0, 1) == 0.0);
  CHECK(r.a(1, 0) == 0.0);
  CHECK(r.lambda == doctest::Approx(0.875));
  const auto rest = aij_at(LinPoint::make(GasLaw(2.0, 1.0), 0.0, Vec::Zero(2)));
  CHECK(rest.a(1, 1) == rest.a(0, 0));
  // u^2 = p'(rho) exactly: rho = 1, u^2 = 2 requires Phi0 = 1.
  CHECK_THROWS_AS(LinPoint::make(GasLaw(2.0, 1.0), 1.0, vec2(0.0, std::sqrt(2.0))),
                  NotSubsonicError);
  // The coefficient matrix is dA/dq at the background.
  const auto p = flat_point();
  CHECK((r.a - p.d.dA_dq).norm() < 1e-15);
}

TEST_CASE("remainders F and f") {
  const LinPoint pt = flat_point();
  CHECK(remainder_F(pt, 0.0, Vec::Zero(2)).norm() == 0.0);
  CHECK(remainder_f(pt, 0.0, Vec::Zero(2)) == 0.0);

  const Vec q = vec2(0.01, 0.01);
  CHECK((remainder_F(pt, 0.01, q) - F_quadrature(pt, 0.01, q)).norm() < 1e-8);
  CHECK(std::abs(remainder_f(pt, 0.01, q) - f_quadrature(pt, 0.01, q)) < 1e-8);

  std::vector<double> ts, nF, nf;
  const Vec q0 = vec2(0.05, -0.03);
  for (int k = 0; k < 6; ++k) {
    const double t = std::pow(0.5, k);
    ts.push_back(t);
    nF.push_back(remainder_F(pt, 0.04 * t, t * q0).norm());
    nf.push_back(std::abs(remainder_f(pt, 0.04 * t, t * q0)));
  }
  CHECK(fitted_slope(ts, nF) >= 1.9);
  CHECK(fitted_slope(ts, nf) >= 1.9);

  CHECK_THROWS_AS(remainder_F(pt, 0.2, q, 0.1), AdmissibilityError);
  CHECK_THROWS_AS(remainder_f(pt, 0.2, q, 0.1), AdmissibilityError);
}

TEST_CASE("property: remainders closed form vs quadrature") {
  std::mt19937_64 rng(42);
  std::uniform_real_distribution<double> u(-0.05, 0.05);
  for (double gamma : {1.0, 1.4, 2.0}) {
    GasLaw law(gamma, 1.0);
    const LinPoint pt = LinPoint::make(law, 0.4, vec2(0.0, 0.5));
    for (int i = 0; i < 100; ++i) {
      const double z = u(rng);
      const Vec q = vec2(u(rng), u(rng));
      CHECK((remainder_F(pt, z, q) - F_quadrature(pt, z, q)).norm() < 1e-8);
      CHECK(std::abs(remainder_f(pt, z, q) - f_quadrature(pt, z, q)) < 1e-8);
    }
  }
}

TEST_CASE("tangential q enters f at second order") {
  const LinPoint pt = flat_point();
  std::vector<double> ts, vals;
  for (int k = 0; k < 5; ++k) {
    const double t = 0.02 * std::pow(0.5, k);
    ts.push_back(t);
    vals.push_back(std::abs(remainder_f(pt, 0.0, vec2(t, 0.0))));
  }
  CHECK(fitted_slope(ts, vals) == doctest::Approx(2.0).epsilon(0.02));
}

TEST_CASE("exit datum") {
  const LinPoint pt = flat_point();
  const double p0 = pt.law.pressure(pt.rho_bg);
  const auto r0 = exit_g(pt, Vec::Zero(2), p0, 0.0);
  CHECK(r0.g == 0.0);
  CHECK(r0.g1 == doctest::Approx(2.0));

  // rho~ = 2 from Psi_ex: h(2) = 2, so Phi0 + Psi_ex - u^2/2 = 2.
  const auto r2 = exit_g(pt, Vec::Zero(2), p0, 2.0);
  CHECK(r2.rho_tilde == doctest::Approx(2.0));
  CHECK(r2.g1 == doctest::Approx(3.0));

  // A consistent triple: pick (q, Psi_ex) and set pex = p(rho~).
  const Vec q = vec2(0.01, -0.02);
  const double Psi = 0.013;
  const double rt = charge_B(pt.law, pt.Phi0 + Psi, pt.Dphi0 + q);
  const auto rc = exit_g(pt, q, pt.law.pressure(rt), Psi);
  CHECK(std::abs(pt.d.dB_dq.dot(q) - rc.g) < 1e-10);

  // g1 against a t-quadrature of p' along the chord.
  GasLaw g14(1.4, 1.0);
  const LinPoint p14 = LinPoint::make(g14, 0.3, vec2(0.0, 0.4));
  const auto r14 = exit_g(p14, q, g14.pressure(p14.rho_bg), Psi);
  double acc = 0.0;
  for (int k = 0; k < 2000; ++k) {
    const double t = (k + 0.5) / 2000;
    acc += g14.dpressure(t * r14.rho_tilde + (1 - t) * p14.rho_bg);
  }
  CHECK(r14.g1 == doctest::Approx(acc / 2000).epsilon(1e-9));
  CHECK_THROWS_AS(exit_g(pt, vec2(0.5, 0.5), p0, 0.0, 0.1), AdmissibilityError);
}

TEST_CASE("conormal scale") {
  CHECK(conormal_scale(flat_point()) == doctest::Approx(3.5));
  const auto rest = LinPoint::make(GasLaw(2.0, 1.0), 0.0, Vec::Zero(2));
  CHECK_THROWS_AS(conormal_scale(rest), DomainError);
}

TEST_CASE("admissibility radii") {
  OneDParams p;
  p.law = GasLaw(2.0, 1.0);
  auto bg = integrate_ivp(p, 64);
  const auto r = admissibility_radii(bg);
  CHECK(r.delta1 > 0.0);
  CHECK(r.delta2 > 0.0);
  CHECK(r.delta3 == std::min(r.delta1, r.delta2));
  // A perturbation inside the delta1 ball keeps the closure defined with margin.
  const LinPoint pt = flat_point();
  const double s = 3 * r.delta1 * 0.99;
  const Vec q = vec2(0.0, -s / 2);
  CHECK_NOTHROW(charge_B(pt.law, pt.Phi0 - s / 2, pt.Dphi0 + q));
  // Inside the delta2 ball the density stays above half the background.
  const double s2 = 4 * r.delta2 * 0.99;
  CHECK(charge_B(pt.law, pt.Phi0 - s2 / 2, pt.Dphi0 + vec2(s2 / 2, 0.0)) > 0.5 * pt.rho_bg);
}
