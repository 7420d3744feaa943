#include <cmath>
#include <random>

#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <boost/math/tools/roots.hpp>

#include "doctest.h"
#include "epflow/error.hpp"
#include "epflow/gas.hpp"

using namespace epflow;

namespace {

// h(rho) as the integral of p'(s)/s from k0, independent of the closed form.
double enthalpy_by_quadrature(const GasLaw& law, double rho) {
  auto integrand = [&](double s) {
    const double g = law.gamma();
    return g * std::pow(s, g - 1.0) / s;
  };
  double err = 0.0;
  return boost::math::quadrature::gauss_kronrod<double, 61>::integrate(
      integrand, law.k0(), rho, 15, 1e-14, &err);
}

double inverse_by_bisection(const GasLaw& law, double s) {
  auto f = [&](double r) { return law.enthalpy(r) - s; };
  auto tol = [](double a, double b) { return std::abs(b - a) < 1e-15 * std::abs(a); };
  auto r = boost::math::tools::bisect(f, 1e-8, 1e4, tol);
  return 0.5 * (r.first + r.second);
}

}  // namespace

TEST_CASE("pressure values and derivative") {
  GasLaw law(2.0, 1.0);
  CHECK(law.pressure(1.0) == doctest::Approx(1.0));
  CHECK(law.pressure(2.0) == doctest::Approx(4.0));

  GasLaw g14(1.4, 1.0);
  const double rho = 1.3, eps = 1e-6;
  const double fd = (g14.pressure(rho + eps) - g14.pressure(rho - eps)) / (2 * eps);
  CHECK(std::abs(fd - g14.dpressure(rho)) < 1e-8);
  const double fd2 = (g14.dpressure(rho + eps) - g14.dpressure(rho - eps)) / (2 * eps);
  CHECK(std::abs(fd2 - g14.d2pressure(rho)) < 1e-7);
  CHECK_THROWS_AS(law.pressure(0.0), DomainError);
  CHECK_THROWS_AS(law.pressure(-1.0), DomainError);
}

TEST_CASE("enthalpy against quadrature") {
  GasLaw law(2.0, 1.0);
  CHECK(law.enthalpy(1.0) == 0.0);
  CHECK(law.enthalpy(2.0) == doctest::Approx(enthalpy_by_quadrature(law, 2.0)).epsilon(1e-12));
  CHECK(law.enthalpy(2.0) == doctest::Approx(2.0).epsilon(1e-14));

  GasLaw iso(1.0, 1.0);
  CHECK(iso.isothermal());
  CHECK(iso.enthalpy(std::exp(1.0)) ==
        doctest::Approx(enthalpy_by_quadrature(iso, std::exp(1.0))).epsilon(1e-12));

  GasLaw g14(1.4, 0.7);
  for (double r : {0.3, 1.0, 2.5})
    CHECK(g14.enthalpy(r) == doctest::Approx(enthalpy_by_quadrature(g14, r)).epsilon(1e-12));
  CHECK_THROWS_AS(law.enthalpy(0.0), DomainError);
}

TEST_CASE("near-isothermal gamma snaps to log branch") {
  GasLaw near(1.0 + 1e-12, 1.0);
  CHECK(near.isothermal());
  CHECK(near.gamma() == 1.0);
  CHECK(near.enthalpy(2.0) == doctest::Approx(std::log(2.0)).epsilon(1e-15));
  GasLaw above(1.0 + 1e-6, 1.0);
  CHECK_FALSE(above.isothermal());
}

TEST_CASE("enthalpy inverse") {
  GasLaw law(2.0, 1.0);
  CHECK(law.enthalpy_inverse(0.0) == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(law.enthalpy_inverse(2.0) == doctest::Approx(inverse_by_bisection(law, 2.0)).epsilon(1e-12));
  CHECK(law.enthalpy_inverse(2.0) == doctest::Approx(2.0).epsilon(1e-14));

  GasLaw g14(1.4, 1.0);
  const double r = g14.enthalpy_inverse(0.7);
  CHECK(std::abs(g14.enthalpy(r) - 0.7) < 1e-12);
  CHECK(r == doctest::Approx(inverse_by_bisection(g14, 0.7)).epsilon(1e-12));

  CHECK_THROWS_AS(law.enthalpy_inverse(law.enthalpy_floor()), VacuumError);
  CHECK_THROWS_AS(law.enthalpy_inverse(-3.0), VacuumError);
}

TEST_CASE("density_from_state") {
  GasLaw law(2.0, 1.0);
  auto st = density_from_state(law, 3.0, 2.0);
  CHECK(st.density == doctest::Approx(2.0).epsilon(1e-14));
  CHECK(st.subsonic);
  CHECK(st.density == doctest::Approx(inverse_by_bisection(law, 2.0)).epsilon(1e-12));
  CHECK(density_from_state(law, 0.0, 0.0).density == doctest::Approx(1.0));
  CHECK_THROWS_AS(density_from_state(law, -3.0, 0.0), VacuumError);
  // q^2 = 5 at Phi = 4.5: rho = 1 + (4.5 - 2.5)/2 = 2, p'(2) = 4 < 5.
  CHECK_FALSE(density_from_state(law, 4.5, 5.0).subsonic);
}

TEST_CASE("bernoulli") {
  GasLaw law(2.0, 1.0);
  CHECK(bernoulli(law, 0.0, 1.0) == 0.0);
  CHECK(bernoulli(law, 0.25, 1.0) == doctest::Approx(0.125));
  auto st = density_from_state(law, 3.0, 2.0);
  CHECK(bernoulli(law, st.speed_sq, st.density) == doctest::Approx(3.0).epsilon(1e-14));
  CHECK_THROWS_AS(bernoulli(law, 0.0, -1.0), DomainError);
}

TEST_CASE("property: roundtrip, monotonicity and B - Phi = 0") {
  std::mt19937_64 rng(42);
  for (double gamma : {1.0, 1.4, 2.0, 3.0}) {
    GasLaw law(gamma, 1.0);
    std::uniform_real_distribution<double> s_dist(-1.0, 3.0);
    double worst = 0.0;
    for (int i = 0; i < 10000; ++i) {
      const double s = s_dist(rng);
      worst = std::max(worst, std::abs(law.enthalpy(law.enthalpy_inverse(s)) - s));
    }
    CHECK(worst < 1e-12);

    double prev_h = law.enthalpy(0.01), prev_p = law.pressure(0.01);
    for (int i = 1; i <= 1000; ++i) {
      const double r = 0.01 + i * 0.005;
      const double h = law.enthalpy(r), p = law.pressure(r);
      CHECK(h > prev_h);
      CHECK(p > prev_p);
      CHECK(law.dpressure(r) > 0.0);
      CHECK(law.d2pressure(r) >= 0.0);
      prev_h = h;
      prev_p = p;
    }

    std::uniform_real_distribution<double> phi_dist(0.0, 2.0), q_dist(0.0, 1.0);
    double worst_b = 0.0;
    for (int i = 0; i < 1000; ++i) {
      const double Phi = phi_dist(rng), q2 = q_dist(rng);
      auto st = density_from_state(law, Phi, q2);
      worst_b = std::max(worst_b, std::abs(bernoulli(law, q2, st.density) - Phi));
    }
    CHECK(worst_b < 1e-10);
  }
}
