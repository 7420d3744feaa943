#include "epflow/grid.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <ostream>
#include <sstream>

#include "epflow/error.hpp"

namespace epflow {

namespace {

std::string fmt17(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

}  // namespace

const char* tag_name(Tag t) {
  switch (t) {
    case Tag::Interior: return "interior";
    case Tag::Entrance: return "entrance";
    case Tag::Exit: return "exit";
    case Tag::Wall: return "wall";
    case Tag::Corner: return "corner";
  }
  return "?";
}

NozzleSpec NozzleSpec::parse_resolution(const std::string& res) {
  NozzleSpec s;
  s.nodes.clear();
  std::stringstream ss(res);
  std::string part;
  while (std::getline(ss, part, 'x')) {
    try {
      s.nodes.push_back(std::stoi(part));
    } catch (const std::exception&) {
      throw ConfigError("bad resolution '" + res + "'");
    }
  }
  if (s.nodes.size() != 2 && s.nodes.size() != 3) {
    throw ConfigError("resolution must be NxM or NxMxK, got '" + res + "'");
  }
  s.dim = static_cast<int>(s.nodes.size());
  s.cross_lo.assign(s.dim - 1, 0.0);
  s.cross_hi.assign(s.dim - 1, 1.0);
  return s;
}

Nozzle::Nozzle(const NozzleSpec& spec) : spec_(spec), dim_(spec.dim) {
  if (dim_ != 2 && dim_ != 3) throw DomainError("Nozzle: dim must be 2 or 3");
  if (static_cast<int>(spec.nodes.size()) != dim_ ||
      static_cast<int>(spec.cross_lo.size()) != dim_ - 1 ||
      static_cast<int>(spec.cross_hi.size()) != dim_ - 1) {
    throw DomainError("Nozzle: extents and node counts must match dim");
  }
  if (!(spec.L > 0.0)) throw DomainError("Nozzle: L must be positive");
  for (int a = 0; a < dim_; ++a) {
    if (spec.nodes[a] < 8) throw DomainError("Nozzle: at least 8 nodes per axis");
    n_[a] = spec.nodes[a];
    if (a < dim_ - 1) {
      if (!(spec.cross_hi[a] > spec.cross_lo[a])) throw DomainError("Nozzle: degenerate extent");
      lo_[a] = spec.cross_lo[a];
      h_[a] = (spec.cross_hi[a] - spec.cross_lo[a]) / (n_[a] - 1);
    } else {
      lo_[a] = 0.0;
      h_[a] = spec.L / (n_[a] - 1);
    }
  }
  std::size_t s = 1;
  for (int a = 0; a < dim_; ++a) {
    stride_[a] = s;
    s *= static_cast<std::size_t>(n_[a]);
  }
  size_ = s;

  tags_.resize(size_);
  for (std::size_t i = 0; i < size_; ++i) {
    const bool end0 = on_low(i, axial()), endL = on_high(i, axial());
    const bool wall = on_cross_boundary(i);
    if ((end0 || endL) && wall) tags_[i] = Tag::Corner;
    else if (end0) tags_[i] = Tag::Entrance;
    else if (endL) tags_[i] = Tag::Exit;
    else if (wall) tags_[i] = Tag::Wall;
    else tags_[i] = Tag::Interior;
  }
}

std::size_t Nozzle::index(const std::array<int, 3>& ijk) const {
  std::size_t idx = 0;
  for (int a = 0; a < dim_; ++a) idx += stride_[a] * static_cast<std::size_t>(ijk[a]);
  return idx;
}

std::array<int, 3> Nozzle::multi(std::size_t idx) const {
  std::array<int, 3> m{0, 0, 0};
  for (int a = 0; a < dim_; ++a) {
    m[a] = static_cast<int>(idx % n_[a]);
    idx /= n_[a];
  }
  return m;
}

double Nozzle::coord(std::size_t idx, int axis) const {
  const int k = multi(idx)[axis];
  if (k == n_[axis] - 1) return hi(axis);
  return lo_[axis] + h_[axis] * k;
}

Vec Nozzle::point(std::size_t idx) const {
  Vec p(dim_);
  for (int a = 0; a < dim_; ++a) p(a) = coord(idx, a);
  return p;
}

Vec Nozzle::cross_point(std::size_t idx) const {
  Vec p(dim_ - 1);
  for (int a = 0; a < dim_ - 1; ++a) p(a) = coord(idx, a);
  return p;
}

bool Nozzle::on_cross_boundary(std::size_t idx) const {
  const auto m = multi(idx);
  for (int a = 0; a < dim_ - 1; ++a) {
    if (m[a] == 0 || m[a] == n_[a] - 1) return true;
  }
  return false;
}

double Nozzle::trap_weight(std::size_t idx, int axis) const {
  const int k = multi(idx)[axis];
  return (k == 0 || k == n_[axis] - 1) ? 0.5 * h_[axis] : h_[axis];
}

double Nozzle::weight(std::size_t idx) const {
  double w = 1.0;
  for (int a = 0; a < dim_; ++a) w *= trap_weight(idx, a);
  return w;
}

double Nozzle::face_weight(std::size_t idx, int axis) const {
  double w = 1.0;
  for (int a = 0; a < dim_; ++a) {
    if (a != axis) w *= trap_weight(idx, a);
  }
  return w;
}

Vec Nozzle::inward_normal(std::size_t idx) const {
  Vec n = Vec::Zero(dim_);
  const auto m = multi(idx);
  const Tag t = tags_[idx];
  if (t == Tag::Wall || t == Tag::Corner) {
    for (int a = 0; a < dim_ - 1; ++a) {
      if (m[a] == 0) n(a) += 1.0;
      if (m[a] == n_[a] - 1) n(a) -= 1.0;
    }
    return n / n.norm();
  }
  if (t == Tag::Entrance) n(axial()) = 1.0;
  if (t == Tag::Exit) n(axial()) = -1.0;
  return n;
}

double Nozzle::corner_distance(std::size_t idx) const {
  double dcross = INFINITY;
  for (int a = 0; a < dim_ - 1; ++a) {
    const double x = coord(idx, a);
    dcross = std::min({dcross, x - lo(a), hi(a) - x});
  }
  const double xn = coord(idx, axial());
  const double dax = std::min(xn, spec_.L - xn);
  return std::sqrt(dcross * dcross + dax * dax);
}

void Nozzle::check_field(const Field& f, const char* what) const {
  if (static_cast<std::size_t>(f.size()) != size_) {
    throw ShapeMismatchError(std::string(what) + ": field has " + std::to_string(f.size()) +
                             " values, grid has " + std::to_string(size_) + " nodes");
  }
}

Field partial(const Nozzle& grid, const Field& f, int axis) {
  grid.check_field(f, "partial");
  const std::size_t s = grid.stride(axis);
  const int n = grid.count(axis);
  const double h = grid.spacing(axis);
  Field d(grid.size());
  for (std::size_t i = 0; i < grid.size(); ++i) {
    const int k = grid.multi(i)[axis];
    if (k == 0) {
      d(i) = (4 * (f(i + s) - f(i)) - (f(i + 2 * s) - f(i))) / (2 * h);
    } else if (k == n - 1) {
      d(i) = (4 * (f(i) - f(i - s)) - (f(i) - f(i - 2 * s))) / (2 * h);
    } else {
      d(i) = (f(i + s) - f(i - s)) / (2 * h);
    }
  }
  return d;
}

VectorField gradient(const Nozzle& grid, const Field& f) {
  VectorField g;
  for (int a = 0; a < grid.dim(); ++a) g.push_back(partial(grid, f, a));
  return g;
}

Field divergence(const Nozzle& grid, const VectorField& v) {
  if (static_cast<int>(v.size()) != grid.dim()) {
    throw ShapeMismatchError("divergence: component count does not match dim");
  }
  Field d = Field::Zero(grid.size());
  for (int a = 0; a < grid.dim(); ++a) d += partial(grid, v[a], a);
  return d;
}

void write_fields_csv(std::ostream& os, const Nozzle& grid, const std::vector<NamedField>& fields,
                      const VectorField* coords) {
  static const char* axis_names[] = {"x", "y", "z"};
  for (int a = 0; a < grid.dim(); ++a) os << (a ? "," : "") << axis_names[a];
  for (const auto& f : fields) {
    grid.check_field(*f.values, "write_fields_csv");
    os << ',' << f.name;
  }
  os << '\n';
  for (std::size_t i = 0; i < grid.size(); ++i) {
    for (int a = 0; a < grid.dim(); ++a) {
      os << (a ? "," : "") << fmt17(coords ? (*coords)[a](i) : grid.coord(i, a));
    }
    for (const auto& f : fields) os << ',' << fmt17((*f.values)(i));
    os << '\n';
  }
}

void write_fields_vtk(std::ostream& os, const Nozzle& grid, const std::vector<NamedField>& fields,
                      const VectorField* coords) {
  const int nx = grid.count(0), ny = grid.count(1), nz = grid.dim() == 3 ? grid.count(2) : 1;
  os << "# vtk DataFile Version 3.0\nepflow fields\nASCII\n";
  if (coords) {
    os << "DATASET STRUCTURED_GRID\nDIMENSIONS " << nx << ' ' << ny << ' ' << nz << '\n';
    os << "POINTS " << grid.size() << " double\n";
    for (std::size_t i = 0; i < grid.size(); ++i) {
      for (int a = 0; a < 3; ++a) {
        os << (a ? " " : "") << (a < grid.dim() ? fmt17((*coords)[a](i)) : "0");
      }
      os << '\n';
    }
  } else {
    os << "DATASET STRUCTURED_POINTS\nDIMENSIONS " << nx << ' ' << ny << ' ' << nz << '\n';
    os << "ORIGIN";
    for (int a = 0; a < 3; ++a) os << ' ' << (a < grid.dim() ? fmt17(grid.lo(a)) : "0");
    os << "\nSPACING";
    for (int a = 0; a < 3; ++a) os << ' ' << (a < grid.dim() ? fmt17(grid.spacing(a)) : "1");
    os << '\n';
  }
  os << "POINT_DATA " << grid.size() << '\n';
  for (const auto& f : fields) {
    grid.check_field(*f.values, "write_fields_vtk");
    os << "SCALARS " << f.name << " double 1\nLOOKUP_TABLE default\n";
    for (std::size_t i = 0; i < grid.size(); ++i) os << fmt17((*f.values)(i)) << '\n';
  }
}

}  // namespace epflow
