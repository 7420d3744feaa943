#pragma once

#include <functional>
#include <iosfwd>
#include <memory>
#include <vector>

#include <Eigen/SparseCore>

#include "epflow/coeffs.hpp"
#include "epflow/grid.hpp"

namespace epflow {

class BackgroundSolution;

using SpMat = Eigen::SparseMatrix<double>;

/// Values on grid edges. comps[a](i) lives on the axis-a edge joining node i
/// to node i + stride(a); entries of nodes on the upper face of axis a are unused.
struct EdgeField {
  std::vector<Field> comps;

  static EdgeField zeros(const Nozzle& grid);
  bool empty() const { return comps.empty(); }
};

/// Background coefficients frozen per axial level (nodes) and half level
/// (axial edge midpoints). The background only depends on x_n.
struct FrozenCoefficients {
  std::vector<LinPoint> node;
  std::vector<LinPoint> mid;
  std::vector<double> a_cross;      // a_ii, i < n, at nodes
  std::vector<double> a_axial_mid;  // a_nn at midpoints
  std::vector<double> beta_mid;     // dA_n/dz at midpoints; dB/dq_n is its negative
  std::vector<double> c_node;       // dB/dz at nodes
  std::vector<double> scale_node;   // conormal scale at nodes
  double lambda = 0.0;              // smallest diagonal coefficient

  static FrozenCoefficients from_background(const BackgroundSolution& bg, const Nozzle& grid);
};

using CrossFn = std::function<double(const Vec&)>;

struct LiftField {
  Field W_bd;        // on all nodes
  Field W_en, W_ex;  // per slice index
  double compat_defect = 0.0;
  bool warning = false;
};

/// Linear-in-x_n interpolant of the end data. The wall compatibility
/// d/dn_w W = 0 is checked with a 4th-order central difference of the profile
/// across each wall; a defect above 1e-10 sets `warning`.
LiftField lift_boundary(const Nozzle& grid, const CrossFn& W_en, const CrossFn& W_ex);
/// Same from sampled slices; no compatibility check is possible.
LiftField lift_boundary(const Nozzle& grid, const Field& W_en, const Field& W_ex);

/// Right-hand-side data of one linearized solve.
struct LinearData {
  EdgeField F;        // F_a on axis-a edges
  VectorField F_node; // nodal F for surface terms
  Field f;            // nodal, source of the second equation (includes b0 - b)
  Field g;            // nodal, read on the exit face
  LiftField lift;
  EdgeField H1;          // optional conservative flux in the first equation
  EdgeField H2;          // optional conservative flux in the second equation
  VectorField wall_flux; // optional: conormal flux datum D . n_out on the wall

  static LinearData zeros(const Nozzle& grid);
};

struct WeakSystem {
  SpMat op;   // Dirichlet rows replaced by identity rows
  Field rhs;
  Field W_bd;
  std::vector<bool> dirichlet;  // per stacked unknown
};

struct SolveStats {
  double residual = 0.0;
  bool refined = false;
};

struct LinearSolution {
  Field v;
  Field W;        // W_tilde + W_bd
  Field W_tilde;
  SolveStats stats;
};

/// The linear operator of one background/grid pair, factorized once.
class LinearizedProblem {
 public:
  LinearizedProblem(const Nozzle& grid, FrozenCoefficients coeffs);
  ~LinearizedProblem();
  LinearizedProblem(LinearizedProblem&&) noexcept;
  LinearizedProblem& operator=(LinearizedProblem&&) noexcept;

  const Nozzle& grid() const { return grid_; }
  const FrozenCoefficients& coefficients() const { return coeffs_; }
  /// Bilinear form before boundary rows are imposed.
  const SpMat& bilinear() const { return form_; }
  const SpMat& op() const { return op_; }
  const std::vector<bool>& dirichlet() const { return dirichlet_; }
  bool xi_fixed(std::size_t i) const { return dirichlet_[i]; }
  bool eta_fixed(std::size_t i) const { return dirichlet_[grid_.size() + i]; }

  Field rhs(const LinearData& data) const;
  WeakSystem system(const LinearData& data) const;
  LinearSolution solve(const LinearData& data) const;
  Field solve_stacked(const Field& rhs, SolveStats* stats = nullptr) const;

  /// Q((xi, eta), (xi, eta)).
  double form(const Field& xi, const Field& eta) const;
  /// The coupling part of Q: the v-W and W-v blocks only.
  double cross_terms(const Field& xi, const Field& eta) const;
  /// sum over edges of w_e |difference quotient|^2.
  double gradient_norm_sq(const Field& f) const;

 private:
  Nozzle grid_;
  FrozenCoefficients coeffs_;
  SpMat form_;
  SpMat op_;
  std::vector<bool> dirichlet_;
  struct Factor;
  std::unique_ptr<Factor> lu_;
};

/// Assemble for a background directly (builds coefficients and factorization).
WeakSystem assemble(const BackgroundSolution& bg, const Nozzle& grid, const LinearData& data);
LinearSolution solve(const WeakSystem& system, const Nozzle& grid);

struct CoercivityResult {
  double min_ratio = 0.0;
  double lambda = 0.0;
  int trials = 0;
};

/// Q / (|D xi|^2 + |D eta|^2); throws DomainError for the zero pair.
double rayleigh_ratio(const LinearizedProblem& p, const Field& xi, const Field& eta);
/// Minimum ratio over random admissible pairs (zero on the Dirichlet nodes).
CoercivityResult coercivity_check(const LinearizedProblem& p, int trials, unsigned seed = 42);
/// Random admissible test pair.
std::pair<Field, Field> random_test_pair(const LinearizedProblem& p, std::uint64_t seed);

/// "row col value" lines, 0-based, preceded by a "% rows cols nnz" header.
void write_coo(std::ostream& os, const SpMat& m);

}  // namespace epflow
