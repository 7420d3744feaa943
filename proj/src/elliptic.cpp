#include "epflow/elliptic.hpp"

#include <cmath>
#include <cstdio>
#include <ostream>
#include <random>

#include <Eigen/OrderingMethods>
#include <Eigen/SparseLU>

#include "epflow/error.hpp"
#include "epflow/ode1d.hpp"

namespace epflow {

namespace {

using Triplets = std::vector<Eigen::Triplet<double>>;

// Calls fn(axis, i, j, w_e, h) for every grid edge i -> j = i + stride(axis).
// w_e is h times the trapezoid weights of the transverse directions.
template <class Fn>
void for_each_edge(const Nozzle& grid, Fn&& fn) {
  for (int a = 0; a < grid.dim(); ++a) {
    const std::size_t s = grid.stride(a);
    const double h = grid.spacing(a);
    for (std::size_t i = 0; i < grid.size(); ++i) {
      if (grid.on_high(i, a)) continue;
      fn(a, i, i + s, h * grid.face_weight(i, a), h);
    }
  }
}

double edge_coefficient(const Nozzle& grid, const FrozenCoefficients& c, int axis, std::size_t i) {
  const int k = grid.level(i);
  return axis == grid.axial() ? c.a_axial_mid[k] : c.a_cross[k];
}

// Fourth-order central derivative of fn at x along direction e.
double central_derivative(const CrossFn& fn, Vec x, int axis) {
  const double e = 1e-3;
  auto at = [&](double t) {
    Vec y = x;
    y(axis) += t;
    return fn(y);
  };
  return (8 * (at(e) - at(-e)) - (at(2 * e) - at(-2 * e))) / (12 * e);
}

}  // namespace

EdgeField EdgeField::zeros(const Nozzle& grid) {
  EdgeField e;
  e.comps.assign(grid.dim(), Field::Zero(grid.size()));
  return e;
}

FrozenCoefficients FrozenCoefficients::from_background(const BackgroundSolution& bg,
                                                       const Nozzle& grid) {
  if (std::abs(bg.L - grid.length()) > 1e-12 * grid.length()) {
    throw ShapeMismatchError("background length does not match the nozzle");
  }
  const int n = grid.count(grid.axial());
  const double h = grid.spacing(grid.axial());
  const int dim = grid.dim();
  FrozenCoefficients c;
  c.lambda = INFINITY;
  for (int k = 0; k < n; ++k) {
    const double x = (k == n - 1) ? grid.length() : k * h;
    c.node.push_back(background_point(bg, x, dim));
    const LinPoint& p = c.node.back();
    const AijResult a = aij_at(p);
    c.a_cross.push_back(p.rho_bg);
    c.c_node.push_back(p.d.dB_dz);
    c.scale_node.push_back(conormal_scale(p));
    c.lambda = std::min(c.lambda, a.lambda);
    if (k + 1 < n) {
      c.mid.push_back(background_point(bg, (k + 0.5) * h, dim));
      const LinPoint& m = c.mid.back();
      const AijResult am = aij_at(m);
      c.a_axial_mid.push_back(am.a(dim - 1, dim - 1));
      c.beta_mid.push_back(m.d.dA_dz(dim - 1));
      c.lambda = std::min(c.lambda, am.lambda);
    }
  }
  return c;
}

LiftField lift_boundary(const Nozzle& grid, const Field& W_en, const Field& W_ex) {
  const std::size_t ns = grid.slice_size();
  if (static_cast<std::size_t>(W_en.size()) != ns || static_cast<std::size_t>(W_ex.size()) != ns) {
    throw ShapeMismatchError("lift_boundary: end data must have one value per slice node");
  }
  LiftField lf;
  lf.W_en = W_en;
  lf.W_ex = W_ex;
  lf.W_bd.resize(grid.size());
  const double L = grid.length();
  for (std::size_t i = 0; i < grid.size(); ++i) {
    const double t = grid.coord(i, grid.axial()) / L;
    const std::size_t s = grid.slice_index(i);
    lf.W_bd(i) = (1.0 - t) * W_en(s) + t * W_ex(s);
  }
  return lf;
}

LiftField lift_boundary(const Nozzle& grid, const CrossFn& W_en, const CrossFn& W_ex) {
  const std::size_t ns = grid.slice_size();
  Field en(ns), ex(ns);
  double defect = 0.0;
  for (std::size_t s = 0; s < ns; ++s) {
    const Vec xp = grid.cross_point(s);
    en(s) = W_en(xp);
    ex(s) = W_ex(xp);
    const auto m = grid.multi(s);
    for (int a = 0; a < grid.dim() - 1; ++a) {
      if (m[a] != 0 && m[a] != grid.count(a) - 1) continue;
      defect = std::max({defect, std::abs(central_derivative(W_en, xp, a)),
                         std::abs(central_derivative(W_ex, xp, a))});
    }
  }
  LiftField lf = lift_boundary(grid, en, ex);
  lf.compat_defect = defect;
  lf.warning = defect > 1e-10;
  return lf;
}

LinearData LinearData::zeros(const Nozzle& grid) {
  LinearData d;
  d.F = EdgeField::zeros(grid);
  d.F_node.assign(grid.dim(), Field::Zero(grid.size()));
  d.f = Field::Zero(grid.size());
  d.g = Field::Zero(grid.size());
  const Field z = Field::Zero(grid.slice_size());
  d.lift = lift_boundary(grid, z, z);
  return d;
}

struct LinearizedProblem::Factor {
  Eigen::SparseLU<SpMat, Eigen::COLAMDOrdering<int>> lu;
};

LinearizedProblem::~LinearizedProblem() = default;
LinearizedProblem::LinearizedProblem(LinearizedProblem&&) noexcept = default;
LinearizedProblem& LinearizedProblem::operator=(LinearizedProblem&&) noexcept = default;

LinearizedProblem::LinearizedProblem(const Nozzle& grid, FrozenCoefficients coeffs)
    : grid_(grid), coeffs_(std::move(coeffs)) {
  const std::size_t N = grid_.size();
  const int ax = grid_.axial();
  if (coeffs_.node.size() != static_cast<std::size_t>(grid_.count(ax))) {
    throw ShapeMismatchError("LinearizedProblem: coefficients do not match the grid");
  }
  Triplets t;
  t.reserve(N * 4 * (2 * grid_.dim() + 2));
  for_each_edge(grid_, [&](int a, std::size_t i, std::size_t j, double w, double h) {
    const double k = edge_coefficient(grid_, coeffs_, a, i) * w / (h * h);
    const std::size_t Wi = N + i, Wj = N + j;
    t.emplace_back(i, i, k);
    t.emplace_back(i, j, -k);
    t.emplace_back(j, j, k);
    t.emplace_back(j, i, -k);
    const double l = w / (h * h);
    t.emplace_back(Wi, Wi, l);
    t.emplace_back(Wi, Wj, -l);
    t.emplace_back(Wj, Wj, l);
    t.emplace_back(Wj, Wi, -l);
    if (a == ax) {
      // beta * avg(W) * dxi/h and gamma * dv/h * avg(eta), gamma = -beta.
      const double val = coeffs_.beta_mid[grid_.level(i)] * w / (2 * h);
      const double gval = -val;
      t.emplace_back(j, Wi, val);
      t.emplace_back(j, Wj, val);
      t.emplace_back(i, Wi, -val);
      t.emplace_back(i, Wj, -val);
      t.emplace_back(Wi, j, gval);
      t.emplace_back(Wj, j, gval);
      t.emplace_back(Wi, i, -gval);
      t.emplace_back(Wj, i, -gval);
    }
  });
  for (std::size_t i = 0; i < N; ++i) {
    t.emplace_back(N + i, N + i, coeffs_.c_node[grid_.level(i)] * grid_.weight(i));
  }
  form_.resize(2 * N, 2 * N);
  form_.setFromTriplets(t.begin(), t.end());

  dirichlet_.assign(2 * N, false);
  for (std::size_t i = 0; i < N; ++i) {
    if (grid_.on_low(i, ax)) dirichlet_[i] = true;
    if (grid_.on_low(i, ax) || grid_.on_high(i, ax)) dirichlet_[N + i] = true;
  }
  Triplets ot;
  ot.reserve(form_.nonZeros());
  for (int col = 0; col < form_.outerSize(); ++col) {
    for (SpMat::InnerIterator it(form_, col); it; ++it) {
      if (!dirichlet_[it.row()]) ot.emplace_back(it.row(), it.col(), it.value());
    }
  }
  for (std::size_t r = 0; r < 2 * N; ++r) {
    if (dirichlet_[r]) ot.emplace_back(r, r, 1.0);
  }
  op_.resize(2 * N, 2 * N);
  op_.setFromTriplets(ot.begin(), ot.end());
  op_.makeCompressed();

  lu_ = std::make_unique<Factor>();
  lu_->lu.compute(op_);
  if (lu_->lu.info() != Eigen::Success) {
    throw SolverError("LinearizedProblem: sparse LU factorization failed: " +
                      lu_->lu.lastErrorMessage());
  }
}

Field LinearizedProblem::rhs(const LinearData& d) const {
  const std::size_t N = grid_.size();
  const int ax = grid_.axial();
  grid_.check_field(d.f, "rhs: f");
  grid_.check_field(d.g, "rhs: g");
  grid_.check_field(d.lift.W_bd, "rhs: W_bd");
  if (d.F.comps.size() != static_cast<std::size_t>(grid_.dim()) ||
      d.F_node.size() != static_cast<std::size_t>(grid_.dim())) {
    throw ShapeMismatchError("rhs: F must have dim components");
  }
  const Field& Wbd = d.lift.W_bd;
  Field r = Field::Zero(2 * N);

  for_each_edge(grid_, [&](int a, std::size_t i, std::size_t j, double w, double h) {
    double flux = d.F.comps[a](i);
    if (!d.H1.empty()) flux += d.H1.comps[a](i);
    r(i) -= flux * w / h;
    r(j) += flux * w / h;
    if (a == ax) {
      const double val = coeffs_.beta_mid[grid_.level(i)] * w / (2 * h);
      const double s = val * (Wbd(i) + Wbd(j));
      r(j) -= s;
      r(i) += s;
    }
    const double dW = (Wbd(j) - Wbd(i)) * w / (h * h);
    r(N + j) -= dW;
    r(N + i) += dW;
    if (!d.H2.empty()) {
      r(N + i) -= d.H2.comps[a](i) * w / h;
      r(N + j) += d.H2.comps[a](i) * w / h;
    }
  });

  for (std::size_t i = 0; i < N; ++i) {
    const int k = grid_.level(i);
    const double om = grid_.weight(i);
    r(N + i) -= (d.f(i) + coeffs_.c_node[k] * Wbd(i)) * om;

    if (grid_.on_high(i, ax)) {
      const double fw = grid_.face_weight(i, ax);
      const double beta = coeffs_.node[k].d.dA_dz(ax);
      r(i) += fw * (-coeffs_.scale_node[k] * d.g(i) + d.lift.W_ex(grid_.slice_index(i)) * beta -
                    d.F_node[ax](i));
    }
    for (int a = 0; a < ax; ++a) {
      const bool low = grid_.on_low(i, a), high = grid_.on_high(i, a);
      if (!low && !high) continue;
      const double sign = high ? 1.0 : -1.0;  // outward normal component
      const double fw = grid_.face_weight(i, a);
      double datum = -sign * d.F_node[a](i);
      if (!d.wall_flux.empty()) datum += sign * d.wall_flux[a](i);
      r(i) += fw * datum;
    }
  }

  // F-condition: tangential F vanishes on the entrance.
  for (std::size_t i = 0; i < N; ++i) {
    if (!grid_.on_low(i, ax)) continue;
    for (int a = 0; a < ax; ++a) {
      if (std::abs(d.F_node[a](i)) > 1e-12) {
        throw Error("rhs: tangential F does not vanish on the entrance");
      }
    }
  }

  for (std::size_t row = 0; row < 2 * N; ++row) {
    if (dirichlet_[row]) r(row) = 0.0;
  }
  return r;
}

WeakSystem LinearizedProblem::system(const LinearData& d) const {
  return {op_, rhs(d), d.lift.W_bd, dirichlet_};
}

Field LinearizedProblem::solve_stacked(const Field& b, SolveStats* stats) const {
  SolveStats st;
  const double bn = b.norm();
  if (bn == 0.0) {
    if (stats) *stats = st;
    return Field::Zero(b.size());
  }
  Field x = lu_->lu.solve(b);
  if (lu_->lu.info() != Eigen::Success) throw SolverError("sparse LU solve failed");
  st.residual = (op_ * x - b).norm() / bn;
  if (!(st.residual < 1e-11)) {
    x += lu_->lu.solve(Field(b - op_ * x));
    st.refined = true;
    st.residual = (op_ * x - b).norm() / bn;
    if (!(st.residual < 1e-11)) {
      throw SolverError("sparse LU residual " + std::to_string(st.residual) + " above 1e-11");
    }
  }
  if (stats) *stats = st;
  return x;
}

LinearSolution LinearizedProblem::solve(const LinearData& d) const {
  const std::size_t N = grid_.size();
  LinearSolution s;
  const Field x = solve_stacked(rhs(d), &s.stats);
  s.v = x.head(N);
  s.W_tilde = x.tail(N);
  s.W = s.W_tilde + d.lift.W_bd;
  return s;
}

double LinearizedProblem::form(const Field& xi, const Field& eta) const {
  Field z(2 * grid_.size());
  z << xi, eta;
  return z.dot(form_ * z);
}

double LinearizedProblem::cross_terms(const Field& xi, const Field& eta) const {
  const Eigen::Index N = static_cast<Eigen::Index>(grid_.size());
  Field a(2 * N), b(2 * N);
  a << xi, Field::Zero(N);
  b << Field::Zero(N), eta;
  return a.dot(form_ * b) + b.dot(form_ * a);
}

double LinearizedProblem::gradient_norm_sq(const Field& f) const {
  double s = 0.0;
  for_each_edge(grid_, [&](int, std::size_t i, std::size_t j, double w, double h) {
    const double q = (f(j) - f(i)) / h;
    s += w * q * q;
  });
  return s;
}

WeakSystem assemble(const BackgroundSolution& bg, const Nozzle& grid, const LinearData& data) {
  LinearizedProblem p(grid, FrozenCoefficients::from_background(bg, grid));
  return p.system(data);
}

LinearSolution solve(const WeakSystem& system, const Nozzle& grid) {
  Eigen::SparseLU<SpMat, Eigen::COLAMDOrdering<int>> lu;
  SpMat op = system.op;
  op.makeCompressed();
  lu.compute(op);
  if (lu.info() != Eigen::Success) throw SolverError("sparse LU factorization failed");
  LinearSolution s;
  Field x = Field::Zero(system.rhs.size());
  const double bn = system.rhs.norm();
  if (bn > 0.0) {
    x = lu.solve(system.rhs);
    s.stats.residual = (op * x - system.rhs).norm() / bn;
    if (!(s.stats.residual < 1e-11)) {
      x += lu.solve(Field(system.rhs - op * x));
      s.stats.refined = true;
      s.stats.residual = (op * x - system.rhs).norm() / bn;
      if (!(s.stats.residual < 1e-11)) throw SolverError("sparse LU residual above 1e-11");
    }
  }
  const std::size_t N = grid.size();
  s.v = x.head(N);
  s.W_tilde = x.tail(N);
  s.W = s.W_tilde + system.W_bd;
  return s;
}

double rayleigh_ratio(const LinearizedProblem& p, const Field& xi, const Field& eta) {
  const double den = p.gradient_norm_sq(xi) + p.gradient_norm_sq(eta);
  if (!(den > 0.0)) throw DomainError("rayleigh_ratio: degenerate (zero) test pair");
  return p.form(xi, eta) / den;
}

std::pair<Field, Field> random_test_pair(const LinearizedProblem& p, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  const std::size_t N = p.grid().size();
  Field xi(N), eta(N);
  for (std::size_t i = 0; i < N; ++i) {
    xi(i) = p.xi_fixed(i) ? 0.0 : u(rng);
    eta(i) = p.eta_fixed(i) ? 0.0 : u(rng);
  }
  return {xi, eta};
}

CoercivityResult coercivity_check(const LinearizedProblem& p, int trials, unsigned seed) {
  CoercivityResult r;
  r.lambda = p.coefficients().lambda;
  r.min_ratio = INFINITY;
  std::mt19937_64 rng(seed);
  for (int t = 0; t < trials; ++t) {
    auto [xi, eta] = random_test_pair(p, rng());
    r.min_ratio = std::min(r.min_ratio, rayleigh_ratio(p, xi, eta));
    ++r.trials;
  }
  return r;
}

void write_coo(std::ostream& os, const SpMat& m) {
  os << "% " << m.rows() << ' ' << m.cols() << ' ' << m.nonZeros() << '\n';
  char buf[64];
  for (int col = 0; col < m.outerSize(); ++col) {
    for (SpMat::InnerIterator it(m, col); it; ++it) {
      std::snprintf(buf, sizeof buf, "%.17g", it.value());
      os << it.row() << ' ' << it.col() << ' ' << buf << '\n';
    }
  }
}

}  // namespace epflow
