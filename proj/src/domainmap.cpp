#include "epflow/domainmap.hpp"

#include <algorithm>
#include <cmath>

#include <Eigen/LU>

#include "epflow/error.hpp"
#include "epflow/ode1d.hpp"

namespace epflow {

namespace {

Vec grad_at(const VectorField& D, std::size_t i) {
  Vec q(static_cast<int>(D.size()));
  for (std::size_t a = 0; a < D.size(); ++a) q(a) = D[a](i);
  return q;
}

// Difference quotient of `f` along edge (a, i -> i + stride(a)); the other
// components average the nodal gradient.
Vec edge_gradient(const Nozzle& grid, const Field& f, const VectorField& D, int a, std::size_t i) {
  const std::size_t j = i + grid.stride(a);
  Vec q(grid.dim());
  for (int b = 0; b < grid.dim(); ++b) {
    q(b) = b == a ? (f(j) - f(i)) / grid.spacing(a) : 0.5 * (D[b](i) + D[b](j));
  }
  return q;
}

double sup_abs(const Field& f) { return f.size() ? f.cwiseAbs().maxCoeff() : 0.0; }

}  // namespace

const char* map_name(MapKind k) {
  switch (k) {
    case MapKind::Identity: return "identity";
    case MapKind::Shear: return "shear";
    case MapKind::Bulge: return "bulge";
  }
  return "?";
}

MapKind parse_map(const std::string& s) {
  if (s == "identity") return MapKind::Identity;
  if (s == "shear") return MapKind::Shear;
  if (s == "bulge") return MapKind::Bulge;
  throw ConfigError("unknown map '" + s + "' (identity, shear or bulge)");
}

DomainMap::DomainMap(MapKind kind, double eps, const Nozzle& grid)
    : kind_(kind), eps_(kind == MapKind::Identity ? 0.0 : eps), dim_(grid.dim()),
      L_(grid.length()) {
  if (!std::isfinite(eps)) throw DomainError("DomainMap: eps must be finite");
  for (int a = 0; a < dim_ - 1; ++a) {
    lo_.push_back(grid.lo(a));
    width_.push_back(grid.hi(a) - grid.lo(a));
  }
}

Vec DomainMap::displacement(const Vec& x) const {
  Vec d = Vec::Zero(dim_ - 1);
  if (kind_ == MapKind::Identity) return d;
  const double s = std::pow(std::sin(M_PI * x(dim_ - 1) / L_), 4);
  for (int a = 0; a < dim_ - 1; ++a) {
    const double w = kind_ == MapKind::Shear ? 1.0 : std::cos(M_PI * (x(a) - lo_[a]) / width_[a]);
    d(a) = eps_ * w * s;
  }
  return d;
}

Vec DomainMap::apply(const Vec& x) const {
  Vec y = x;
  y.head(dim_ - 1) += displacement(x);
  return y;
}

Mat DomainMap::jacobian(const Vec& x) const {
  Mat DT = Mat::Identity(dim_, dim_);
  if (kind_ == MapKind::Identity) return DT;
  const double e = 1e-3;
  for (int b = 0; b < dim_; ++b) {
    auto at = [&](double t) {
      Vec y = x;
      y(b) += t;
      return displacement(y);
    };
    const Vec d = (8 * (at(e) - at(-e)) - (at(2 * e) - at(-2 * e))) / (12 * e);
    for (int a = 0; a < dim_ - 1; ++a) DT(a, b) += d(a);
  }
  return DT;
}

JacobianJT jacobian_JT(const DomainMap& map, const Vec& x) {
  const Mat DT = map.jacobian(x);
  const double det = DT.determinant();
  if (!(det > 0.0)) {
    throw FoldOverError("domain map folds over: det DT = " + std::to_string(det));
  }
  if (DT.isIdentity(0.0)) return {DT, 1.0};
  return {Mat(DT.inverse().transpose()), 1.0 / det};
}

Vec pullback_A1(const GasLaw& law, double z, const Vec& q, const Mat& M) {
  const Vec Mq = M * q;
  return charge_B(law, z, Mq) * (M.transpose() * Mq) / M.determinant();
}

Vec pullback_A2(const Vec& q2, const Mat& M) {
  return (M.transpose() * (M * q2)) / M.determinant();
}

MapGeometry MapGeometry::build(const DomainMap& map, const Nozzle& grid) {
  if (map.dim() != grid.dim()) throw ShapeMismatchError("MapGeometry: dimension mismatch");
  MapGeometry g;
  g.map = map;
  g.node.reserve(grid.size());
  for (std::size_t i = 0; i < grid.size(); ++i) g.node.push_back(jacobian_JT(map, grid.point(i)));
  g.edge.resize(grid.dim());
  for (int a = 0; a < grid.dim(); ++a) {
    g.edge[a].assign(grid.size(), {Mat::Identity(grid.dim(), grid.dim()), 1.0});
    for (std::size_t i = 0; i < grid.size(); ++i) {
      if (grid.on_high(i, a)) continue;
      Vec x = grid.point(i);
      x(a) += 0.5 * grid.spacing(a);
      g.edge[a][i] = jacobian_JT(map, x);
    }
  }
  return g;
}

double Corrections::magnitude() const {
  double m = std::max({sup_abs(g1), sup_abs(g2), sup_abs(g3), sup_abs(source)});
  for (const Field& f : H1_node) m = std::max(m, sup_abs(f));
  for (const Field& f : H2_node) m = std::max(m, sup_abs(f));
  return m;
}

Corrections correction_terms(const MapGeometry& geo, const FieldPair& pair, const BoundaryData& data,
                             const BackgroundSolution& bg, const LinearizedProblem& problem) {
  const Nozzle& grid = problem.grid();
  const FrozenCoefficients& c = problem.coefficients();
  const GasLaw& law = bg.law;
  const int n = grid.dim(), ax = grid.axial();
  if (geo.node.size() != grid.size()) throw ShapeMismatchError("correction_terms: geometry/grid");

  Field W(grid.size());
  for (std::size_t i = 0; i < grid.size(); ++i) W(i) = c.node[grid.level(i)].Phi0 + pair.Psi(i);
  const VectorField Dpsi = gradient(grid, pair.psi);
  const VectorField DW = gradient(grid, W);

  Corrections k;
  k.H1 = EdgeField::zeros(grid);
  k.H2 = EdgeField::zeros(grid);
  for (int a = 0; a < n; ++a) {
    for (std::size_t i = 0; i < grid.size(); ++i) {
      if (grid.on_high(i, a)) continue;
      const std::size_t j = i + grid.stride(a);
      const LinPoint& pt = a == ax ? c.mid[grid.level(i)] : c.node[grid.level(i)];
      const Mat& J = geo.edge[a][i].J;
      const Vec q = pt.Dphi0 + edge_gradient(grid, pair.psi, Dpsi, a, i);
      const double z = pt.Phi0 + 0.5 * (pair.Psi(i) + pair.Psi(j));
      k.H1.comps[a](i) = (flux_A(law, z, q) - pullback_A1(law, z, q, J))(a);
      const Vec q2 = edge_gradient(grid, W, DW, a, i);
      k.H2.comps[a](i) = (q2 - pullback_A2(q2, J))(a);
    }
  }

  k.H1_node.assign(n, Field::Zero(grid.size()));
  k.H2_node.assign(n, Field::Zero(grid.size()));
  k.g1 = k.g2 = k.g3 = k.source = Field::Zero(grid.size());
  for (std::size_t i = 0; i < grid.size(); ++i) {
    const LinPoint& pt = c.node[grid.level(i)];
    const JacobianJT& jt = geo.node[i];
    const Vec q = pt.Dphi0 + grad_at(Dpsi, i);
    const Vec q2 = grad_at(DW, i);
    const Vec h1 = flux_A(law, W(i), q) - pullback_A1(law, W(i), q, jt.J);
    const Vec h2 = q2 - pullback_A2(q2, jt.J);
    for (int a = 0; a < n; ++a) {
      k.H1_node[a](i) = h1(a);
      k.H2_node[a](i) = h2(a);
    }
    if (grid.tag(i) == Tag::Wall || grid.tag(i) == Tag::Corner) {
      const Vec nw = grid.inward_normal(i);
      k.g1(i) = h1.dot(nw);
      k.g2(i) = h2.dot(nw);
    }
    const double rho = charge_B(law, W(i), q);
    const double rhoJ = charge_B(law, W(i), jt.J * q);
    const double b = bg.b(grid.coord(i, ax)) + data.b(i);
    k.source(i) = (rhoJ / jt.det - rho) + b * (1.0 - 1.0 / jt.det);
    if (grid.on_high(i, ax)) k.g3(i) = law.pressure(rho) - law.pressure(rhoJ);
  }
  return k;
}

CorrectionHook correction_hook(const MapGeometry& geo, const BoundaryData& data,
                               const BackgroundSolution& bg) {
  return [&geo, &data, &bg](const FieldPair& cur, const LinearizedProblem& problem, LinearData& d) {
    const Nozzle& grid = problem.grid();
    const Corrections k = correction_terms(geo, cur, data, bg, problem);
    d.H1 = k.H1;
    d.H2 = k.H2;
    d.f += k.source;
    // On a deformed wall the conormal datum keeps F . n; on the flat wall
    // F . n vanishes with the wall-normal derivative and is left out.
    if (geo.map.sigmaG() > 0.0) d.wall_flux = d.F_node;
    const VectorField Dpsi = gradient(grid, cur.psi);
    for (std::size_t i = 0; i < grid.size(); ++i) {
      if (!grid.on_high(i, grid.axial())) continue;
      // Shifting p_ex by g3 moves g by g3 / g1.
      const LinPoint& pt = problem.coefficients().node[grid.level(i)];
      const double g1 = exit_g(pt, grad_at(Dpsi, i), 0.0, data.lift.W_ex(grid.slice_index(i))).g1;
      d.g(i) += k.g3(i) / g1;
    }
  };
}

ResidualBreakdown pushforward_residual(const MapGeometry& geo, const FieldPair& pair,
                                       const BoundaryData& data, const BackgroundSolution& bg,
                                       const Nozzle& grid) {
  const GasLaw& law = bg.law;
  const int n = grid.dim(), ax = grid.axial();
  Field phi0, Phi0;
  background_fields(bg, grid, phi0, Phi0);
  const Field phi = phi0 + pair.psi;
  const Field W = Phi0 + pair.Psi;
  const VectorField D = gradient(grid, phi);
  const VectorField DW = gradient(grid, W);

  Field rho(grid.size());
  VectorField V(n, Field(grid.size())), G(n, Field(grid.size()));
  std::vector<Vec> U(grid.size());
  for (std::size_t i = 0; i < grid.size(); ++i) {
    const Mat& J = geo.node[i].J;
    U[i] = J * grad_at(D, i);
    const Vec g = J * grad_at(DW, i);
    rho(i) = charge_B(law, W(i), U[i]);
    for (int a = 0; a < n; ++a) {
      V[a](i) = rho(i) * U[i](a);
      G[a](i) = g(a);
    }
  }
  // dV[a][b] = d/dx_b of the physical component a.
  std::vector<VectorField> dV(n), dG(n);
  for (int a = 0; a < n; ++a) {
    for (int b = 0; b < n; ++b) {
      dV[a].push_back(partial(grid, V[a], b));
      dG[a].push_back(partial(grid, G[a], b));
    }
  }

  ResidualBreakdown r;
  const double pex_bg = background_exit_pressure(bg, n);
  const BoundaryTriple& t = bg.triple;
  for (std::size_t i = 0; i < grid.size(); ++i) {
    const auto m = grid.multi(i);
    const std::size_t s = grid.slice_index(i);
    bool deep = true;
    for (int a = 0; a < n; ++a) deep = deep && m[a] >= 2 && m[a] <= grid.count(a) - 3;
    if (deep) {
      const Mat& J = geo.node[i].J;
      double div = 0.0, lap = 0.0;
      for (int a = 0; a < n; ++a) {
        for (int b = 0; b < n; ++b) {
          div += J(a, b) * dV[a][b](i);
          lap += J(a, b) * dG[a][b](i);
        }
      }
      const double b = bg.b(grid.coord(i, ax)) + data.b(i);
      r.flux = std::max(r.flux, std::abs(div));
      r.poisson = std::max(r.poisson, std::abs(lap - rho(i) + b));
    }
    if (grid.on_high(i, ax)) {
      r.exit_pressure = std::max(r.exit_pressure,
                                 std::abs(law.pressure(rho(i)) - (pex_bg + data.pex(s))));
      r.dirichlet = std::max(r.dirichlet, std::abs(W(i) - (t.B00 + data.lift.W_ex(s))));
    }
    if (grid.on_low(i, ax)) {
      r.dirichlet = std::max({r.dirichlet, std::abs(phi(i)),
                              std::abs(W(i) - (t.B00 + t.Phi_en0 + data.lift.W_en(s)))});
    }
    for (int a = 0; a < ax; ++a) {
      if (!grid.on_low(i, a) && !grid.on_high(i, a)) continue;
      // The physical wall normal is parallel to J e_a.
      const Vec nw = geo.node[i].J.col(a).normalized();
      r.wall = std::max({r.wall, std::abs(nw.dot(U[i])), std::abs(nw.dot(grad_at(G, i)))});
    }
  }
  return r;
}

FixedPoint solve_perturbed(const DomainMap& map, const IterationConfig& config,
                           const BoundaryData& data, const BackgroundSolution& bg,
                           const Nozzle& grid, RunOptions opts) {
  const MapGeometry geo = MapGeometry::build(map, grid);
  IterationConfig c = config;
  c.sigma = config.sigma + map.sigmaG();
  const CorrectionHook hook = correction_hook(geo, data, bg);
  if (opts.correction) {
    CorrectionHook user = opts.correction;
    opts.correction = [hook, user](const FieldPair& x, const LinearizedProblem& p, LinearData& d) {
      hook(x, p, d);
      user(x, p, d);
    };
  } else {
    opts.correction = hook;
  }
  if (!opts.residual) {
    opts.residual = [&](const FieldPair& x) { return pushforward_residual(geo, x, data, bg, grid); };
  }
  return run_fixed_point(c, data, bg, grid, opts);
}

VectorField physical_coords(const DomainMap& map, const Nozzle& grid) {
  VectorField out(grid.dim(), Field(grid.size()));
  for (std::size_t i = 0; i < grid.size(); ++i) {
    const Vec y = map.apply(grid.point(i));
    for (int a = 0; a < grid.dim(); ++a) out[a](i) = y(a);
  }
  return out;
}

}  // namespace epflow
