#pragma once

#include <array>
#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "epflow/coeffs.hpp"

namespace epflow {

enum class Tag : std::uint8_t { Interior, Entrance, Exit, Wall, Corner };

const char* tag_name(Tag t);

/// Box nozzle Lambda x (0, L). Cross-section axes come first, the axial
/// axis is last; `nodes` follows the same order.
struct NozzleSpec {
  int dim = 2;
  std::vector<double> cross_lo{0.0};
  std::vector<double> cross_hi{1.0};
  double L = 1.0;
  std::vector<int> nodes{33, 65};

  /// "NxM" (2D) or "NxMxK" (3D): cross-section counts then the axial count.
  static NozzleSpec parse_resolution(const std::string& res);
};

using Field = Eigen::VectorXd;
using VectorField = std::vector<Field>;

class Nozzle {
 public:
  explicit Nozzle(const NozzleSpec& spec);

  const NozzleSpec& spec() const { return spec_; }
  int dim() const { return dim_; }
  int axial() const { return dim_ - 1; }
  std::size_t size() const { return size_; }
  /// Nodes per cross-section slice.
  std::size_t slice_size() const { return size_ / n_[axial()]; }
  int count(int axis) const { return n_[axis]; }
  double spacing(int axis) const { return h_[axis]; }
  double lo(int axis) const { return lo_[axis]; }
  double hi(int axis) const { return lo_[axis] + h_[axis] * (n_[axis] - 1); }
  double length() const { return spec_.L; }
  std::size_t stride(int axis) const { return stride_[axis]; }

  std::size_t index(const std::array<int, 3>& ijk) const;
  std::array<int, 3> multi(std::size_t idx) const;
  int level(std::size_t idx) const { return multi(idx)[axial()]; }
  /// Index of a node inside its cross-section slice.
  std::size_t slice_index(std::size_t idx) const { return idx % slice_size(); }
  double coord(std::size_t idx, int axis) const;
  Vec point(std::size_t idx) const;
  /// Cross-section coordinates x'.
  Vec cross_point(std::size_t idx) const;

  Tag tag(std::size_t idx) const { return tags_[idx]; }
  bool on_low(std::size_t idx, int axis) const { return multi(idx)[axis] == 0; }
  bool on_high(std::size_t idx, int axis) const { return multi(idx)[axis] == n_[axis] - 1; }
  bool on_cross_boundary(std::size_t idx) const;

  /// 1D trapezoid weight of the node along `axis`.
  double trap_weight(std::size_t idx, int axis) const;
  /// Product trapezoid weight (volume quadrature).
  double weight(std::size_t idx) const;
  /// Trapezoid weight of the node on a face normal to `axis`.
  double face_weight(std::size_t idx, int axis) const;

  /// Inward unit normal: on the wall the (averaged) cross-axis normal,
  /// +e_n on the entrance and -e_n on the exit. Zero for interior nodes.
  Vec inward_normal(std::size_t idx) const;
  /// Distance to the corner set (boundary of Lambda) x {0, L}.
  double corner_distance(std::size_t idx) const;

  void check_field(const Field& f, const char* what) const;

 private:
  NozzleSpec spec_;
  int dim_;
  std::array<int, 3> n_{1, 1, 1};
  std::array<double, 3> lo_{0, 0, 0};
  std::array<double, 3> h_{1, 1, 1};
  std::array<std::size_t, 3> stride_{0, 0, 0};
  std::size_t size_ = 0;
  std::vector<Tag> tags_;
};

/// Second-order central differences, one-sided second order at boundaries.
Field partial(const Nozzle& grid, const Field& f, int axis);
VectorField gradient(const Nozzle& grid, const Field& f);
Field divergence(const Nozzle& grid, const VectorField& v);

/// Samples a function of the node coordinates.
template <class Fn>
Field sample(const Nozzle& grid, Fn&& fn) {
  Field out(grid.size());
  for (std::size_t i = 0; i < grid.size(); ++i) out(i) = fn(grid.point(i));
  return out;
}

struct NamedField {
  std::string name;
  const Field* values;
};

/// CSV with columns x, y[, z] and one column per field, 17 significant digits.
/// `coords` optionally replaces the node coordinates (deformed geometry).
void write_fields_csv(std::ostream& os, const Nozzle& grid, const std::vector<NamedField>& fields,
                      const VectorField* coords = nullptr);
/// Legacy ASCII VTK: STRUCTURED_POINTS, or STRUCTURED_GRID when `coords` is given.
void write_fields_vtk(std::ostream& os, const Nozzle& grid, const std::vector<NamedField>& fields,
                      const VectorField* coords = nullptr);

}  // namespace epflow
