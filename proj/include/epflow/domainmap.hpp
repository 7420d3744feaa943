#pragma once

#include <string>
#include <vector>

#include "epflow/driver.hpp"

namespace epflow {

enum class MapKind { Identity, Shear, Bulge };

const char* map_name(MapKind k);
MapKind parse_map(const std::string& s);

/// Nozzle deformation T(x', x_n) = (G(x', x_n), x_n) with
/// G_a = x'_a + eps * w_a(x') * sin^4(pi x_n / L).
/// Shear: w_a = 1. Bulge: w_a = cos(pi (x'_a - lo_a) / width_a).
/// The axial factor vanishes with three derivatives on the end caps, so the
/// deformed wall meets the end caps flat and without curvature.
class DomainMap {
 public:
  DomainMap() = default;
  DomainMap(MapKind kind, double eps, const Nozzle& grid);
  static DomainMap identity(const Nozzle& grid) { return DomainMap(MapKind::Identity, 0.0, grid); }

  MapKind kind() const { return kind_; }
  double eps() const { return eps_; }
  /// Bound on |G - Id| in sup norm.
  double sigmaG() const { return kind_ == MapKind::Identity ? 0.0 : std::abs(eps_); }
  int dim() const { return dim_; }

  /// G(x) - x', one entry per cross axis.
  Vec displacement(const Vec& x) const;
  /// T(x).
  Vec apply(const Vec& x) const;
  /// D_x T by fourth-order central differences of the displacement.
  Mat jacobian(const Vec& x) const;

 private:
  MapKind kind_ = MapKind::Identity;
  double eps_ = 0.0;
  int dim_ = 2;
  double L_ = 1.0;
  std::vector<double> lo_, width_;
};

struct JacobianJT {
  Mat J;       // (D T)^{-T}
  double det;  // det J
};

/// Throws FoldOverError unless det D T > 0.
JacobianJT jacobian_JT(const DomainMap& map, const Vec& x);

/// rho(z, |M q|^2) (M^T M / det M) q.
Vec pullback_A1(const GasLaw& law, double z, const Vec& q, const Mat& M);
/// (M^T M / det M) q2.
Vec pullback_A2(const Vec& q2, const Mat& M);

/// J_T at the nodes and at the edge midpoints.
struct MapGeometry {
  DomainMap map;
  std::vector<JacobianJT> node;
  std::vector<std::vector<JacobianJT>> edge;  // [axis][low node]

  static MapGeometry build(const DomainMap& map, const Nozzle& grid);
};

struct Corrections {
  EdgeField H1, H2;
  VectorField H1_node, H2_node;
  Field g1, g2;   // H . n_w (inward) on wall nodes, zero elsewhere
  Field g3;       // exit pressure shift on exit nodes
  Field source;   // rho_J / det J - rho + b (1 - 1 / det J)

  /// Largest sup norm over the five correction fields.
  double magnitude() const;
};

/// Corrections at the iterate `pair` (fields relative to the background).
Corrections correction_terms(const MapGeometry& geo, const FieldPair& pair, const BoundaryData& data,
                             const BackgroundSolution& bg, const LinearizedProblem& problem);

/// Hook adding the corrections to the flat data of each Picard step.
CorrectionHook correction_hook(const MapGeometry& geo, const BoundaryData& data,
                               const BackgroundSolution& bg);

/// Residual of the physical problem on the deformed nozzle, with derivatives
/// taken by the chain rule from reference-grid differences. Interior
/// equations are checked two node layers away from the boundary.
ResidualBreakdown pushforward_residual(const MapGeometry& geo, const FieldPair& pair,
                                       const BoundaryData& data, const BackgroundSolution& bg,
                                       const Nozzle& grid);

/// run_fixed_point on the reference nozzle with the corrections recomputed at
/// every iterate. Admissibility is judged for sigma + sigmaG.
FixedPoint solve_perturbed(const DomainMap& map, const IterationConfig& config,
                           const BoundaryData& data, const BackgroundSolution& bg,
                           const Nozzle& grid, RunOptions opts = {});

/// Physical node coordinates T(x).
VectorField physical_coords(const DomainMap& map, const Nozzle& grid);

}  // namespace epflow
