#pragma once

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "epflow/coeffs.hpp"
#include "epflow/elliptic.hpp"
#include "epflow/grid.hpp"

namespace epflow {

class BackgroundSolution;

/// Background potentials phi0, Phi0 sampled at the nodes.
void background_fields(const BackgroundSolution& bg, const Nozzle& grid, Field& phi0, Field& Phi0);
/// Exit pressure of the background, taken from the closure at x_n = L so that
/// unperturbed data reproduce the background exactly.
double background_exit_pressure(const BackgroundSolution& bg, int dim);

enum class ShapeKind { Constant, Cosine, Sine };

const char* shape_name(ShapeKind k);
ShapeKind parse_shape(const std::string& s);

/// Cross-section profile amplitude * prod_a m(k pi (x'_a - lo_a) / width_a),
/// with m = 1, cos or sin.
struct Shape {
  ShapeKind kind = ShapeKind::Cosine;
  double amplitude = 1.0;
  int mode = 1;

  double operator()(const Nozzle& grid, const Vec& xprime) const;
};

/// Profiles of the data perturbations; amplitudes are relative to sigma and
/// must lie in [-1, 1]. b - b0 uses the cross profile times cos(pi x_n / L).
struct PerturbationShapes {
  Shape Phi_en;
  Shape Phi_ex;
  Shape pex;
  double B0 = 1.0;
  Shape b;
};

/// Boundary data and background charge, stored as perturbations of the
/// background values. Slice fields have one value per cross-section node.
struct BoundaryData {
  double sigma = 0.0;
  Field Phi_en;  // Phi_en - Phi_en0
  Field Phi_ex;  // Phi_ex (background value 0)
  Field pex;     // p_ex - p_ex0
  double B0 = 0.0;  // B0 - B00
  Field b;       // b - b0 at every node
  LiftField lift;  // Psi_en = B0 + Phi_en, Psi_ex = B0 + Phi_ex

  static BoundaryData zeros(const Nozzle& grid);
};

/// Samples the shapes at magnitude sigma. Throws CompatibilityError if an
/// end profile has a nonzero wall-normal derivative.
BoundaryData perturb_data(const BackgroundSolution& bg, const Nozzle& grid, double sigma,
                          const PerturbationShapes& shapes = {});

struct IterationConfig {
  double sigma = 0.0;
  double M = 8.0;
  int max_iter = 50;
  /// Non-positive: max(1e-10, 1e-3 sigma h^2) with h the largest spacing.
  double tol = 0.0;
  /// Unset entries come from admissibility_radii of the background.
  std::optional<AdmissibilityRadii> deltas;
  /// Hoelder sampling of the reported norms.
  double alpha = 0.5;
  int norm_samples = 2000;
  unsigned seed = 42;

  double effective_tol(const Nozzle& grid) const;
};

/// (psi, Psi) = (phi, Phi) - (phi0, Phi0) at the nodes.
struct FieldPair {
  Field psi;
  Field Psi;

  static FieldPair zeros(const Nozzle& grid);
};

/// Largest violation of psi = 0 on the entrance and Psi = Psi_en / Psi_ex on
/// the end caps.
double boundary_mismatch(const FieldPair& p, const BoundaryData& data, const Nozzle& grid);

struct ResidualBreakdown {
  double flux = 0.0;      // div(rho grad phi), interior
  double poisson = 0.0;   // Laplace Phi - rho + b, interior
  double exit_pressure = 0.0;
  double wall = 0.0;      // wall-normal derivatives of phi and Phi
  double dirichlet = 0.0;

  double total() const;
};

/// Residual of the nonlinear problem for (phi0 + psi, Phi0 + Psi), with
/// compact second-order stencils inside and one-sided gradients on the boundary.
ResidualBreakdown nonlinear_residual(const FieldPair& pair, const BoundaryData& data,
                                     const BackgroundSolution& bg, const Nozzle& grid);

/// min over nodes of p'(rho) - |grad phi|^2 of the total fields.
double subsonic_margin(const FieldPair& pair, const BackgroundSolution& bg, const Nozzle& grid);

struct NormSummary {
  double sup = 0.0;
  double h1 = 0.0;      // discrete H1 seminorm
  double holder = 0.0;  // sampled C^alpha seminorm
  double weighted = 0.0;  // corner-weighted C^{2,alpha}-type diagnostic
};

NormSummary norms(const Field& f, const Nozzle& grid, double alpha = 0.5, int samples = 2000,
                  unsigned seed = 42);

struct SolveReport {
  int iterations = 0;
  bool converged = false;
  double sigma = 0.0;
  double M = 0.0;
  double tol = 0.0;
  AdmissibilityRadii deltas;
  std::vector<double> diffs;
  std::vector<double> contraction_factors;
  double subsonic_margin = 0.0;
  double nonlinear_residual = 0.0;
  ResidualBreakdown residual;
  double boundary_mismatch = 0.0;
  double max_linear_residual = 0.0;
  NormSummary psi_norms;
  NormSummary Psi_norms;
};

/// Extra terms for a step, called after the flat data are assembled.
using CorrectionHook =
    std::function<void(const FieldPair& current, const LinearizedProblem& problem, LinearData& d)>;

/// The data of the linear problem solved by one Picard step.
LinearData step_data(const FieldPair& current, const BoundaryData& data,
                     const BackgroundSolution& bg, const LinearizedProblem& problem);

/// Throws AdmissibilityError if the pair lies outside the ball given by the radii.
void check_admissible(const FieldPair& pair, const Nozzle& grid, const AdmissibilityRadii& r);

FieldPair iteration_step(const FieldPair& current, const BoundaryData& data,
                         const BackgroundSolution& bg, const LinearizedProblem& problem,
                         const AdmissibilityRadii& radii, const CorrectionHook& hook = {},
                         double* linear_residual = nullptr);
/// Convenience overload building the linear problem.
FieldPair iteration_step(const FieldPair& current, const BoundaryData& data,
                         const BackgroundSolution& bg, const Nozzle& grid);

struct RunOptions {
  std::optional<FieldPair> initial;
  CorrectionHook correction;
  /// Replaces nonlinear_residual in the report.
  std::function<ResidualBreakdown(const FieldPair&)> residual;
  std::function<void(int, const FieldPair&)> on_iterate;
};

struct FixedPoint {
  FieldPair pair;
  SolveReport report;
};

/// Picard iteration from (0, 0). Refuses M sigma > delta3 with AdmissibilityError;
/// throws NonContractionError after three consecutive ratios >= 1 and
/// MaxIterationsError when max_iter is exhausted.
FixedPoint run_fixed_point(const IterationConfig& config, const BoundaryData& data,
                           const BackgroundSolution& bg, const Nozzle& grid,
                           const RunOptions& opts = {});

/// Admissible smooth second start for the uniqueness probe: the Dirichlet
/// lift plus a bump of sup size M sigma / 4 vanishing on the entrance.
FieldPair bump_start(const Nozzle& grid, const BoundaryData& data, double size);

struct SweepRow {
  double sigma = 0.0;
  double sup_norm = 0.0;
  double h1 = 0.0;
  double contraction = 0.0;  // first recorded ratio
  int iterations = 0;
};

struct SweepReport {
  std::vector<SweepRow> rows;
  double norm_slope = 0.0;
  double contraction_slope = 0.0;
  std::vector<double> constants;  // sup_norm / sigma
};

/// Least-squares slope of log y against log x; non-positive entries are skipped.
double loglog_slope(const std::vector<double>& x, const std::vector<double>& y);

/// One fixed point per sigma; up to `jobs` runs execute concurrently.
SweepReport stability_sweep(const IterationConfig& config, const std::vector<double>& sigmas,
                            const PerturbationShapes& shapes, const BackgroundSolution& bg,
                            const Nozzle& grid, int jobs = 1);

}  // namespace epflow
