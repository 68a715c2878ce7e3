#ifndef CQGRAV_GRID_HPP
#define CQGRAV_GRID_HPP

#include <array>
#include <cstddef>
#include <string>
#include <vector>

#include "cqgrav/errors.hpp"

namespace cqgrav {

/// One classical phase-space axis, discretized into uniform cells.
struct Axis {
  std::string name;
  double lo = 0.0;
  double hi = 1.0;
  int cells = 1;

  double width() const { return (hi - lo) / cells; }
  double center(int k) const { return lo + (k + 0.5) * width(); }
};

/// Rectangular phase-space grid. Cells are addressed by a flat index with the
/// last axis varying fastest.
class PhaseSpaceGrid {
 public:
  PhaseSpaceGrid() = default;
  explicit PhaseSpaceGrid(std::vector<Axis> axes);

  int dim() const { return static_cast<int>(axes_.size()); }
  std::size_t cells() const { return cells_; }
  double cell_volume() const { return volume_; }
  const Axis& axis(int i) const { return axes_[i]; }
  const std::vector<Axis>& axes() const { return axes_; }

  std::vector<int> unravel(std::size_t k) const;
  std::size_t ravel(const std::vector<int>& idx) const;

  /// Flat index of the neighbor along `axis` (+1/-1), or npos at the boundary.
  static constexpr std::size_t npos = static_cast<std::size_t>(-1);
  std::size_t neighbor(std::size_t k, int axis, int dir) const;

  double coord(std::size_t k, int axis) const;
  std::vector<double> point(std::size_t k) const;

  bool same_shape(const PhaseSpaceGrid& other) const;

 private:
  std::vector<Axis> axes_;
  std::vector<std::size_t> strides_;
  std::size_t cells_ = 0;
  double volume_ = 1.0;
};

/// Uniform spatial grid (1-3 axes) for field kernels and the Newtonian sim.
class SpatialGrid {
 public:
  SpatialGrid() = default;
  /// extents in meters, sites per axis.
  SpatialGrid(std::vector<double> extents, std::vector<int> sites);

  static SpatialGrid cube(double extent, int sites_per_axis) {
    return SpatialGrid({extent, extent, extent}, {sites_per_axis, sites_per_axis, sites_per_axis});
  }

  int dim() const { return static_cast<int>(sites_.size()); }
  std::size_t size() const { return size_; }
  double spacing(int i) const { return extents_[i] / sites_[i]; }
  int sites(int i) const { return sites_[i]; }
  double extent(int i) const { return extents_[i]; }
  double cell_volume() const { return volume_; }
  /// Radius of the sphere with the cell's volume; regularizes 1/|x-y| diagonals.
  double cell_radius() const;

  std::array<double, 3> position(std::size_t a) const;  // unused axes at 0
  std::vector<int> unravel(std::size_t a) const;
  std::size_t ravel(const std::vector<int>& idx) const;
  std::size_t neighbor(std::size_t a, int axis, int dir) const;  // npos at boundary
  bool interior(std::size_t a) const;

  static constexpr std::size_t npos = static_cast<std::size_t>(-1);

  bool operator==(const SpatialGrid& o) const {
    return extents_ == o.extents_ && sites_ == o.sites_;
  }

 private:
  std::vector<double> extents_;
  std::vector<int> sites_;
  std::vector<std::size_t> strides_;
  std::size_t size_ = 0;
  double volume_ = 1.0;
};

inline void require_same_grid(const SpatialGrid& a, const SpatialGrid& b, const char* what) {
  require(a == b, ErrorCode::GridMismatch, what);
}

}  // namespace cqgrav

#endif
