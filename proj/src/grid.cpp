#include "cqgrav/grid.hpp"

#include <cmath>
#include <numbers>

namespace cqgrav {

PhaseSpaceGrid::PhaseSpaceGrid(std::vector<Axis> axes) : axes_(std::move(axes)) {
  require(!axes_.empty(), ErrorCode::DimensionMismatch, "grid needs at least one axis");
  cells_ = 1;
  volume_ = 1.0;
  for (const auto& ax : axes_) {
    require(ax.cells >= 1, ErrorCode::DimensionMismatch, "axis cell count must be >= 1");
    require(ax.hi > ax.lo, ErrorCode::DimensionMismatch, "axis needs max > min");
    cells_ *= static_cast<std::size_t>(ax.cells);
    volume_ *= ax.width();
  }
  strides_.assign(axes_.size(), 1);
  for (int i = static_cast<int>(axes_.size()) - 2; i >= 0; --i)
    strides_[i] = strides_[i + 1] * static_cast<std::size_t>(axes_[i + 1].cells);
}

std::vector<int> PhaseSpaceGrid::unravel(std::size_t k) const {
  std::vector<int> idx(axes_.size());
  for (std::size_t i = 0; i < axes_.size(); ++i) {
    idx[i] = static_cast<int>(k / strides_[i]);
    k %= strides_[i];
  }
  return idx;
}

std::size_t PhaseSpaceGrid::ravel(const std::vector<int>& idx) const {
  std::size_t k = 0;
  for (std::size_t i = 0; i < axes_.size(); ++i) k += strides_[i] * static_cast<std::size_t>(idx[i]);
  return k;
}

std::size_t PhaseSpaceGrid::neighbor(std::size_t k, int axis, int dir) const {
  int pos = static_cast<int>((k / strides_[axis]) % static_cast<std::size_t>(axes_[axis].cells));
  int next = pos + dir;
  if (next < 0 || next >= axes_[axis].cells) return npos;
  return k + static_cast<std::size_t>(dir) * strides_[axis];
}

double PhaseSpaceGrid::coord(std::size_t k, int axis) const {
  int pos = static_cast<int>((k / strides_[axis]) % static_cast<std::size_t>(axes_[axis].cells));
  return axes_[axis].center(pos);
}

std::vector<double> PhaseSpaceGrid::point(std::size_t k) const {
  std::vector<double> z(axes_.size());
  for (int i = 0; i < dim(); ++i) z[i] = coord(k, i);
  return z;
}

bool PhaseSpaceGrid::same_shape(const PhaseSpaceGrid& other) const {
  if (axes_.size() != other.axes_.size()) return false;
  for (std::size_t i = 0; i < axes_.size(); ++i)
    if (axes_[i].cells != other.axes_[i].cells) return false;
  return true;
}

SpatialGrid::SpatialGrid(std::vector<double> extents, std::vector<int> sites)
    : extents_(std::move(extents)), sites_(std::move(sites)) {
  require(!sites_.empty() && sites_.size() <= 3 && extents_.size() == sites_.size(),
          ErrorCode::GridMismatch, "spatial grid needs 1-3 axes");
  size_ = 1;
  volume_ = 1.0;
  for (std::size_t i = 0; i < sites_.size(); ++i) {
    require(sites_[i] >= 2, ErrorCode::GridMismatch, "need >= 2 sites per axis");
    require(extents_[i] > 0.0, ErrorCode::GridMismatch, "extent must be positive");
    size_ *= static_cast<std::size_t>(sites_[i]);
    volume_ *= extents_[i] / sites_[i];
  }
  strides_.assign(sites_.size(), 1);
  for (int i = static_cast<int>(sites_.size()) - 2; i >= 0; --i)
    strides_[i] = strides_[i + 1] * static_cast<std::size_t>(sites_[i + 1]);
}

double SpatialGrid::cell_radius() const {
  return std::cbrt(3.0 * volume_ / (4.0 * std::numbers::pi));
}

std::array<double, 3> SpatialGrid::position(std::size_t a) const {
  std::array<double, 3> x{0.0, 0.0, 0.0};
  for (std::size_t i = 0; i < sites_.size(); ++i) {
    int pos = static_cast<int>((a / strides_[i]) % static_cast<std::size_t>(sites_[i]));
    x[i] = (pos + 0.5) * spacing(static_cast<int>(i));
  }
  return x;
}

std::vector<int> SpatialGrid::unravel(std::size_t a) const {
  std::vector<int> idx(sites_.size());
  for (std::size_t i = 0; i < sites_.size(); ++i) {
    idx[i] = static_cast<int>(a / strides_[i]);
    a %= strides_[i];
  }
  return idx;
}

std::size_t SpatialGrid::ravel(const std::vector<int>& idx) const {
  std::size_t a = 0;
  for (std::size_t i = 0; i < sites_.size(); ++i) a += strides_[i] * static_cast<std::size_t>(idx[i]);
  return a;
}

std::size_t SpatialGrid::neighbor(std::size_t a, int axis, int dir) const {
  int pos = static_cast<int>((a / strides_[axis]) % static_cast<std::size_t>(sites_[axis]));
  int next = pos + dir;
  if (next < 0 || next >= sites_[axis]) return npos;
  return a + static_cast<std::size_t>(dir) * strides_[axis];
}

bool SpatialGrid::interior(std::size_t a) const {
  for (int i = 0; i < dim(); ++i) {
    int pos = static_cast<int>((a / strides_[i]) % static_cast<std::size_t>(sites_[i]));
    if (pos == 0 || pos == sites_[i] - 1) return false;
  }
  return true;
}

}  // namespace cqgrav
