#include "epflow/driver.hpp"

#include <algorithm>
#include <cmath>
#include <future>
#include <random>

#include "epflow/error.hpp"
#include "epflow/ode1d.hpp"

namespace epflow {

namespace {

double sup_abs(const Field& f) { return f.size() ? f.cwiseAbs().maxCoeff() : 0.0; }

double sup_grad(const VectorField& D) {
  double m = 0.0;
  for (Eigen::Index i = 0; i < D[0].size(); ++i) {
    double s = 0.0;
    for (const Field& c : D) s += c(i) * c(i);
    m = std::max(m, std::sqrt(s));
  }
  return m;
}

Vec grad_at(const VectorField& D, std::size_t i) {
  Vec q(static_cast<int>(D.size()));
  for (std::size_t a = 0; a < D.size(); ++a) q(a) = D[a](i);
  return q;
}

}  // namespace

void background_fields(const BackgroundSolution& bg, const Nozzle& grid, Field& phi0, Field& Phi0) {
  const int ax = grid.axial();
  const int n = grid.count(ax);
  std::vector<BackgroundSample> levels;
  for (int k = 0; k < n; ++k) {
    levels.push_back(bg.at(k == n - 1 ? grid.length() : k * grid.spacing(ax)));
  }
  phi0.resize(grid.size());
  Phi0.resize(grid.size());
  for (std::size_t i = 0; i < grid.size(); ++i) {
    const auto& s = levels[grid.level(i)];
    phi0(i) = s.phi0;
    Phi0(i) = s.Phi0;
  }
}

double background_exit_pressure(const BackgroundSolution& bg, int dim) {
  const LinPoint p = background_point(bg, bg.L, dim);
  return p.law.pressure(p.rho_bg);
}

const char* shape_name(ShapeKind k) {
  switch (k) {
    case ShapeKind::Constant: return "constant";
    case ShapeKind::Cosine: return "cosine";
    case ShapeKind::Sine: return "sine";
  }
  return "?";
}

ShapeKind parse_shape(const std::string& s) {
  if (s == "constant") return ShapeKind::Constant;
  if (s == "cosine") return ShapeKind::Cosine;
  if (s == "sine") return ShapeKind::Sine;
  throw ConfigError("unknown shape '" + s + "' (constant, cosine or sine)");
}

double Shape::operator()(const Nozzle& grid, const Vec& xp) const {
  double v = amplitude;
  if (kind == ShapeKind::Constant) return v;
  for (int a = 0; a < grid.dim() - 1; ++a) {
    const double t = mode * M_PI * (xp(a) - grid.lo(a)) / (grid.hi(a) - grid.lo(a));
    v *= kind == ShapeKind::Cosine ? std::cos(t) : std::sin(t);
  }
  return v;
}

BoundaryData BoundaryData::zeros(const Nozzle& grid) {
  BoundaryData d;
  const Field z = Field::Zero(grid.slice_size());
  d.Phi_en = d.Phi_ex = d.pex = z;
  d.b = Field::Zero(grid.size());
  d.lift = lift_boundary(grid, z, z);
  return d;
}

BoundaryData perturb_data(const BackgroundSolution& bg, const Nozzle& grid, double sigma,
                          const PerturbationShapes& shapes) {
  if (!(sigma >= 0.0)) throw DomainError("perturb_data: sigma must be nonnegative");
  if (std::abs(bg.L - grid.length()) > 1e-12 * grid.length()) {
    throw ShapeMismatchError("perturb_data: background length does not match the nozzle");
  }
  for (const Shape* s : {&shapes.Phi_en, &shapes.Phi_ex, &shapes.pex, &shapes.b}) {
    if (!(std::abs(s->amplitude) <= 1.0)) throw ConfigError("shape amplitude must lie in [-1, 1]");
    if (s->mode < 0) throw ConfigError("shape mode must be nonnegative");
  }
  if (!(std::abs(shapes.B0) <= 1.0)) throw ConfigError("B0 amplitude must lie in [-1, 1]");

  // Compatibility is a property of the profiles, so it is checked at unit size.
  const LiftField unit = lift_boundary(
      grid, [&](const Vec& x) { return shapes.Phi_en(grid, x); },
      [&](const Vec& x) { return shapes.Phi_ex(grid, x); });
  if (unit.warning) {
    throw CompatibilityError("perturb_data: end profile has wall-normal derivative " +
                             std::to_string(unit.compat_defect));
  }

  BoundaryData d;
  d.sigma = sigma;
  d.B0 = sigma * shapes.B0;
  const std::size_t ns = grid.slice_size();
  d.Phi_en.resize(ns);
  d.Phi_ex.resize(ns);
  d.pex.resize(ns);
  for (std::size_t s = 0; s < ns; ++s) {
    const Vec xp = grid.cross_point(s);
    d.Phi_en(s) = sigma * shapes.Phi_en(grid, xp);
    d.Phi_ex(s) = sigma * shapes.Phi_ex(grid, xp);
    d.pex(s) = sigma * shapes.pex(grid, xp);
  }
  d.b.resize(grid.size());
  for (std::size_t i = 0; i < grid.size(); ++i) {
    const double xn = grid.coord(i, grid.axial());
    d.b(i) = sigma * shapes.b(grid, grid.cross_point(i)) * std::cos(M_PI * xn / grid.length());
  }
  d.lift = lift_boundary(grid, Field(d.Phi_en.array() + d.B0), Field(d.Phi_ex.array() + d.B0));
  return d;
}

double IterationConfig::effective_tol(const Nozzle& grid) const {
  if (tol > 0.0) return tol;
  double h = 0.0;
  for (int a = 0; a < grid.dim(); ++a) h = std::max(h, grid.spacing(a));
  return std::max(1e-10, 1e-3 * sigma * h * h);
}

FieldPair FieldPair::zeros(const Nozzle& grid) {
  return {Field::Zero(grid.size()), Field::Zero(grid.size())};
}

double boundary_mismatch(const FieldPair& p, const BoundaryData& data, const Nozzle& grid) {
  const int ax = grid.axial();
  double m = 0.0;
  for (std::size_t i = 0; i < grid.size(); ++i) {
    const std::size_t s = grid.slice_index(i);
    if (grid.on_low(i, ax)) {
      m = std::max({m, std::abs(p.psi(i)), std::abs(p.Psi(i) - data.lift.W_en(s))});
    } else if (grid.on_high(i, ax)) {
      m = std::max(m, std::abs(p.Psi(i) - data.lift.W_ex(s)));
    }
  }
  return m;
}

double ResidualBreakdown::total() const {
  return std::max({flux, poisson, exit_pressure, wall, dirichlet});
}

ResidualBreakdown nonlinear_residual(const FieldPair& pair, const BoundaryData& data,
                                     const BackgroundSolution& bg, const Nozzle& grid) {
  grid.check_field(pair.psi, "nonlinear_residual: psi");
  grid.check_field(pair.Psi, "nonlinear_residual: Psi");
  const GasLaw& law = bg.law;
  const int ax = grid.axial();
  Field phi0, Phi0;
  background_fields(bg, grid, phi0, Phi0);
  const Field phi = phi0 + pair.psi;
  const Field Phi = Phi0 + pair.Psi;
  const VectorField D = gradient(grid, phi);
  const VectorField DPhi = gradient(grid, Phi);

  Field rho(grid.size());
  for (std::size_t i = 0; i < grid.size(); ++i) rho(i) = charge_B(law, Phi(i), grad_at(D, i));

  // Mass flux on the face between i and i + stride(a).
  auto face_flux = [&](int a, std::size_t i) {
    const std::size_t j = i + grid.stride(a);
    Vec q(grid.dim());
    for (int b = 0; b < grid.dim(); ++b) {
      q(b) = b == a ? (phi(j) - phi(i)) / grid.spacing(a) : 0.5 * (D[b](i) + D[b](j));
    }
    return charge_B(law, 0.5 * (Phi(i) + Phi(j)), q) * q(a);
  };

  ResidualBreakdown r;
  const double pex_bg = background_exit_pressure(bg, grid.dim());
  const BoundaryTriple& t = bg.triple;
  for (std::size_t i = 0; i < grid.size(); ++i) {
    const Tag tag = grid.tag(i);
    const std::size_t s = grid.slice_index(i);
    if (tag == Tag::Interior) {
      double div = 0.0, lap = 0.0;
      for (int a = 0; a < grid.dim(); ++a) {
        const std::size_t st = grid.stride(a);
        const double h = grid.spacing(a);
        div += (face_flux(a, i) - face_flux(a, i - st)) / h;
        lap += (Phi(i + st) - 2 * Phi(i) + Phi(i - st)) / (h * h);
      }
      const double b = bg.b(grid.coord(i, ax)) + data.b(i);
      r.flux = std::max(r.flux, std::abs(div));
      r.poisson = std::max(r.poisson, std::abs(lap - rho(i) + b));
    }
    if (grid.on_high(i, ax)) {
      r.exit_pressure = std::max(r.exit_pressure,
                                 std::abs(law.pressure(rho(i)) - (pex_bg + data.pex(s))));
      r.dirichlet = std::max(r.dirichlet, std::abs(Phi(i) - (t.B00 + data.lift.W_ex(s))));
    }
    if (grid.on_low(i, ax)) {
      r.dirichlet = std::max({r.dirichlet, std::abs(phi(i)),
                              std::abs(Phi(i) - (t.B00 + t.Phi_en0 + data.lift.W_en(s)))});
    }
    for (int a = 0; a < ax; ++a) {
      if (grid.on_low(i, a) || grid.on_high(i, a)) {
        r.wall = std::max({r.wall, std::abs(D[a](i)), std::abs(DPhi[a](i))});
      }
    }
  }
  return r;
}

double subsonic_margin(const FieldPair& pair, const BackgroundSolution& bg, const Nozzle& grid) {
  Field phi0, Phi0;
  background_fields(bg, grid, phi0, Phi0);
  const Field phi = phi0 + pair.psi;
  const VectorField D = gradient(grid, phi);
  double m = INFINITY;
  for (std::size_t i = 0; i < grid.size(); ++i) {
    const Vec q = grad_at(D, i);
    const double rho = charge_B(bg.law, Phi0(i) + pair.Psi(i), q);
    m = std::min(m, bg.law.dpressure(rho) - q.squaredNorm());
  }
  return m;
}

NormSummary norms(const Field& f, const Nozzle& grid, double alpha, int samples, unsigned seed) {
  grid.check_field(f, "norms");
  NormSummary n;
  n.sup = sup_abs(f);
  double h1 = 0.0;
  for (int a = 0; a < grid.dim(); ++a) {
    const double h = grid.spacing(a);
    for (std::size_t i = 0; i < grid.size(); ++i) {
      if (grid.on_high(i, a)) continue;
      const double q = (f(i + grid.stride(a)) - f(i)) / h;
      h1 += h * grid.face_weight(i, a) * q * q;
    }
  }
  n.h1 = std::sqrt(h1);

  const VectorField D = gradient(grid, f);
  Field D2 = Field::Zero(grid.size());
  for (int a = 0; a < grid.dim(); ++a) {
    for (int b = 0; b < grid.dim(); ++b) D2 += partial(grid, D[a], b).cwiseAbs();
  }
  double wD2 = 0.0;
  for (std::size_t i = 0; i < grid.size(); ++i) {
    wD2 = std::max(wD2, std::pow(grid.corner_distance(i), 1.0 - alpha) * D2(i));
  }

  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<std::size_t> pick(0, grid.size() - 1);
  double hold = 0.0, whold = 0.0;
  for (int s = 0; s < samples; ++s) {
    const std::size_t i = pick(rng), j = pick(rng);
    if (i == j) continue;
    const double d = std::pow((grid.point(i) - grid.point(j)).norm(), alpha);
    hold = std::max(hold, std::abs(f(i) - f(j)) / d);
    const double dxy = std::min(grid.corner_distance(i), grid.corner_distance(j));
    whold = std::max(whold, dxy * std::abs(D2(i) - D2(j)) / d);
  }
  n.holder = hold;
  n.weighted = n.sup + sup_grad(D) + wD2 + whold;
  return n;
}

LinearData step_data(const FieldPair& cur, const BoundaryData& data, const BackgroundSolution& bg,
                     const LinearizedProblem& problem) {
  const Nozzle& grid = problem.grid();
  const FrozenCoefficients& c = problem.coefficients();
  const int ax = grid.axial();
  grid.check_field(cur.psi, "step_data: psi");
  grid.check_field(cur.Psi, "step_data: Psi");
  const VectorField D = gradient(grid, cur.psi);

  LinearData d = LinearData::zeros(grid);
  d.lift = data.lift;
  for (int a = 0; a < grid.dim(); ++a) {
    const double h = grid.spacing(a);
    for (std::size_t i = 0; i < grid.size(); ++i) {
      if (grid.on_high(i, a)) continue;
      const std::size_t j = i + grid.stride(a);
      const int k = grid.level(i);
      const LinPoint& pt = a == ax ? c.mid[k] : c.node[k];
      Vec q(grid.dim());
      for (int b = 0; b < grid.dim(); ++b) {
        q(b) = b == a ? (cur.psi(j) - cur.psi(i)) / h : 0.5 * (D[b](i) + D[b](j));
      }
      d.F.comps[a](i) = remainder_F(pt, 0.5 * (cur.Psi(i) + cur.Psi(j)), q)(a);
    }
  }
  const double pex_bg = background_exit_pressure(bg, grid.dim());
  for (std::size_t i = 0; i < grid.size(); ++i) {
    const LinPoint& pt = c.node[grid.level(i)];
    const Vec q = grad_at(D, i);
    const Vec Fn = remainder_F(pt, cur.Psi(i), q);
    for (int a = 0; a < grid.dim(); ++a) d.F_node[a](i) = Fn(a);
    d.f(i) = remainder_f(pt, cur.Psi(i), q) - data.b(i);
    if (grid.on_high(i, ax)) {
      const std::size_t s = grid.slice_index(i);
      d.g(i) = exit_g(pt, q, pex_bg + data.pex(s), data.lift.W_ex(s)).g;
    }
  }
  return d;
}

void check_admissible(const FieldPair& pair, const Nozzle& grid, const AdmissibilityRadii& r) {
  const double sP = sup_abs(pair.Psi), sp = sup_abs(pair.psi);
  const double sD = sup_grad(gradient(grid, pair.psi));
  if (!(sP + sD < 2 * r.delta1)) {
    throw AdmissibilityError("iterate left the admissibility ball: sup|Psi| + sup|Dpsi| = " +
                             std::to_string(sP + sD) + " >= 2 delta1 = " +
                             std::to_string(2 * r.delta1));
  }
  if (!(sP + sp + sD <= 4 * r.delta2)) {
    throw AdmissibilityError("iterate left the admissibility ball: sup|Psi| + sup|psi| + "
                             "sup|Dpsi| = " + std::to_string(sP + sp + sD) + " > 4 delta2 = " +
                             std::to_string(4 * r.delta2));
  }
}

FieldPair iteration_step(const FieldPair& current, const BoundaryData& data,
                         const BackgroundSolution& bg, const LinearizedProblem& problem,
                         const AdmissibilityRadii& radii, const CorrectionHook& hook,
                         double* linear_residual) {
  check_admissible(current, problem.grid(), radii);
  LinearData d = step_data(current, data, bg, problem);
  if (hook) hook(current, problem, d);
  const LinearSolution s = problem.solve(d);
  if (linear_residual) *linear_residual = s.stats.residual;
  return {s.v, s.W};
}

FieldPair iteration_step(const FieldPair& current, const BoundaryData& data,
                         const BackgroundSolution& bg, const Nozzle& grid) {
  const LinearizedProblem p(grid, FrozenCoefficients::from_background(bg, grid));
  return iteration_step(current, data, bg, p, admissibility_radii(bg));
}

FixedPoint run_fixed_point(const IterationConfig& config, const BoundaryData& data,
                           const BackgroundSolution& bg, const Nozzle& grid,
                           const RunOptions& opts) {
  if (!(config.sigma >= 0.0)) throw DomainError("run_fixed_point: sigma must be nonnegative");
  if (!(config.M > 0.0)) throw DomainError("run_fixed_point: M must be positive");
  if (config.max_iter < 1) throw DomainError("run_fixed_point: max_iter must be positive");
  const AdmissibilityRadii radii = config.deltas ? *config.deltas : admissibility_radii(bg);
  if (config.M * config.sigma > radii.delta3) {
    throw AdmissibilityError("refused: M sigma = " + std::to_string(config.M * config.sigma) +
                             " exceeds delta3 = " + std::to_string(radii.delta3));
  }
  const LinearizedProblem problem(grid, FrozenCoefficients::from_background(bg, grid));

  FixedPoint out;
  SolveReport& rep = out.report;
  rep.sigma = config.sigma;
  rep.M = config.M;
  rep.tol = config.effective_tol(grid);
  rep.deltas = radii;

  FieldPair x = opts.initial ? *opts.initial : FieldPair::zeros(grid);
  grid.check_field(x.psi, "run_fixed_point: initial psi");
  grid.check_field(x.Psi, "run_fixed_point: initial Psi");
  int growing = 0;
  for (int k = 1; k <= config.max_iter; ++k) {
    double lres = 0.0;
    FieldPair y = iteration_step(x, data, bg, problem, radii, opts.correction, &lres);
    rep.max_linear_residual = std::max(rep.max_linear_residual, lres);
    const double diff = std::max(sup_abs(y.psi - x.psi), sup_abs(y.Psi - x.Psi));
    if (!rep.diffs.empty() && rep.diffs.back() > 0.0) {
      const double ratio = diff / rep.diffs.back();
      rep.contraction_factors.push_back(ratio);
      growing = ratio >= 1.0 ? growing + 1 : 0;
    }
    rep.diffs.push_back(diff);
    x = std::move(y);
    rep.iterations = k;
    if (opts.on_iterate) opts.on_iterate(k, x);
    if (growing >= 3) {
      throw NonContractionError("successive differences grew for 3 consecutive steps (step " +
                                std::to_string(k) + ")");
    }
    if (diff < rep.tol) {
      rep.converged = true;
      break;
    }
  }
  if (!rep.converged) {
    throw MaxIterationsError("no convergence in " + std::to_string(config.max_iter) +
                             " Picard steps; last difference " + std::to_string(rep.diffs.back()));
  }

  rep.subsonic_margin = subsonic_margin(x, bg, grid);
  rep.residual = opts.residual ? opts.residual(x) : nonlinear_residual(x, data, bg, grid);
  rep.nonlinear_residual = rep.residual.total();
  rep.boundary_mismatch = boundary_mismatch(x, data, grid);
  rep.psi_norms = norms(x.psi, grid, config.alpha, config.norm_samples, config.seed);
  rep.Psi_norms = norms(x.Psi, grid, config.alpha, config.norm_samples, config.seed);
  out.pair = std::move(x);
  return out;
}

FieldPair bump_start(const Nozzle& grid, const BoundaryData& data, double size) {
  FieldPair p{Field(grid.size()), data.lift.W_bd};
  const int ax = grid.axial();
  const double L = grid.length();
  for (std::size_t i = 0; i < grid.size(); ++i) {
    double c = 1.0;
    for (int a = 0; a < ax; ++a) {
      c *= std::cos(M_PI * (grid.coord(i, a) - grid.lo(a)) / (grid.hi(a) - grid.lo(a)));
    }
    const double xn = grid.coord(i, ax);
    p.psi(i) = grid.on_low(i, ax) ? 0.0 : size * std::sin(0.5 * M_PI * xn / L) * c;
    if (!grid.on_low(i, ax) && !grid.on_high(i, ax)) p.Psi(i) += size * std::sin(M_PI * xn / L) * c;
  }
  return p;
}

double loglog_slope(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() != y.size()) throw ShapeMismatchError("loglog_slope: size mismatch");
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  int n = 0;
  for (std::size_t k = 0; k < x.size(); ++k) {
    if (!(x[k] > 0.0) || !(y[k] > 0.0)) continue;
    const double lx = std::log(x[k]), ly = std::log(y[k]);
    sx += lx;
    sy += ly;
    sxx += lx * lx;
    sxy += lx * ly;
    ++n;
  }
  if (n < 2) throw DomainError("loglog_slope: need two positive points");
  const double den = n * sxx - sx * sx;
  if (!(den > 0.0)) throw DomainError("loglog_slope: degenerate abscissae");
  return (n * sxy - sx * sy) / den;
}

SweepReport stability_sweep(const IterationConfig& config, const std::vector<double>& sigmas,
                            const PerturbationShapes& shapes, const BackgroundSolution& bg,
                            const Nozzle& grid, int jobs) {
  if (jobs < 1) throw DomainError("stability_sweep: jobs must be positive");
  auto run = [&](double s) {
    IterationConfig c = config;
    c.sigma = s;
    const BoundaryData data = perturb_data(bg, grid, s, shapes);
    const FixedPoint fp = run_fixed_point(c, data, bg, grid);
    SweepRow row;
    row.sigma = s;
    row.sup_norm = std::max(fp.report.psi_norms.sup, fp.report.Psi_norms.sup);
    row.h1 = std::hypot(fp.report.psi_norms.h1, fp.report.Psi_norms.h1);
    row.contraction =
        fp.report.contraction_factors.empty() ? 0.0 : fp.report.contraction_factors.front();
    row.iterations = fp.report.iterations;
    return row;
  };
  SweepReport rep;
  // Batches of independent runs; rows keep the order of `sigmas`.
  for (std::size_t k = 0; k < sigmas.size(); k += static_cast<std::size_t>(jobs)) {
    std::vector<std::future<SweepRow>> batch;
    for (std::size_t j = k; j < std::min(sigmas.size(), k + jobs); ++j) {
      batch.push_back(std::async(jobs > 1 ? std::launch::async : std::launch::deferred, run,
                                 sigmas[j]));
    }
    for (auto& f : batch) rep.rows.push_back(f.get());
  }
  std::vector<double> xs, norms_v, kappas;
  for (const SweepRow& row : rep.rows) {
    if (row.sigma > 0.0) {
      xs.push_back(row.sigma);
      norms_v.push_back(row.sup_norm);
      kappas.push_back(row.contraction);
      rep.constants.push_back(row.sup_norm / row.sigma);
    }
  }
  if (xs.size() >= 2) {
    rep.norm_slope = loglog_slope(xs, norms_v);
    rep.contraction_slope = loglog_slope(xs, kappas);
  }
  return rep;
}

}  // namespace epflow
