#pragma once

#include <array>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "insat/errors.hpp"
#include "insat/flatness.hpp"

namespace insat
{

using Cell = std::array<int, 3>;

class VoxelMap
{
public:
  VoxelMap() = default;
  VoxelMap(const Vec3& origin, double resolution, const Cell& dims)
    : origin_(origin), res_(resolution), dims_(dims)
  {
    if (!(resolution > 0.0) || dims[0] <= 0 || dims[1] <= 0 || dims[2] <= 0)
      throw InvalidArgument("voxel map needs positive resolution and dims");
    occ_.assign(static_cast<std::size_t>(dims[0]) * dims[1] * dims[2], 0);
  }

  const Vec3& origin() const { return origin_; }
  double resolution() const { return res_; }
  const Cell& dims() const { return dims_; }
  std::size_t size() const { return occ_.size(); }
  Vec3 upper() const { return origin_ + res_ * Vec3(dims_[0], dims_[1], dims_[2]); }

  bool in_bounds(const Cell& c) const
  {
    return c[0] >= 0 && c[1] >= 0 && c[2] >= 0 && c[0] < dims_[0] && c[1] < dims_[1] &&
           c[2] < dims_[2];
  }

  std::size_t index(const Cell& c) const
  {
    return (static_cast<std::size_t>(c[2]) * dims_[1] + c[1]) * dims_[0] + c[0];
  }

  Cell cell_of(std::size_t idx) const
  {
    const int x = static_cast<int>(idx % dims_[0]);
    const int y = static_cast<int>((idx / dims_[0]) % dims_[1]);
    const int z = static_cast<int>(idx / (static_cast<std::size_t>(dims_[0]) * dims_[1]));
    return {x, y, z};
  }

  bool occupied(const Cell& c) const { return occ_[index(c)] != 0; }
  bool occupied(std::size_t idx) const { return occ_[idx] != 0; }
  void set(const Cell& c, bool v) { occ_[index(c)] = v ? 1 : 0; }
  void set(std::size_t idx, bool v) { occ_[idx] = v ? 1 : 0; }

  /// Occupied or outside the map.
  bool blocked(const Cell& c) const { return !in_bounds(c) || occupied(c); }

  std::size_t count_occupied() const
  {
    std::size_t n = 0;
    for (auto v : occ_) n += v;
    return n;
  }

  const std::vector<std::uint8_t>& raw() const { return occ_; }

  /// Floor quantization, with a 1e-9 cell tolerance so 1.0 / 0.2 lands in cell 5.
  std::optional<Cell> try_world_to_cell(const Vec3& p) const
  {
    Cell c;
    for (int a = 0; a < 3; ++a)
    {
      const double f = (p[a] - origin_[a]) / res_;
      if (!std::isfinite(f))
        return std::nullopt;
      c[a] = static_cast<int>(std::floor(f + 1e-9));
    }
    if (!in_bounds(c))
      return std::nullopt;
    return c;
  }

  Cell world_to_cell(const Vec3& p) const
  {
    auto c = try_world_to_cell(p);
    if (!c)
      throw OutOfBounds("point outside the map");
    return *c;
  }

  Vec3 cell_to_world(const Cell& c) const
  {
    if (!in_bounds(c))
      throw OutOfBounds("cell outside the map");
    return origin_ + res_ * Vec3(c[0] + 0.5, c[1] + 0.5, c[2] + 0.5);
  }

  bool operator==(const VoxelMap& o) const
  {
    return origin_ == o.origin_ && res_ == o.res_ && dims_ == o.dims_ && occ_ == o.occ_;
  }

private:
  Vec3 origin_ = Vec3::Zero();
  double res_ = 0.2;
  Cell dims_{1, 1, 1};
  std::vector<std::uint8_t> occ_ = std::vector<std::uint8_t>(1, 0);
};

/// Cell occupied in the result iff its centre lies within `radius` of an occupied centre.
inline VoxelMap inflate(const VoxelMap& map, double radius)
{
  if (!(radius >= 0.0))
    throw InvalidArgument("inflation radius must be non-negative");
  VoxelMap out = map;
  const double res = map.resolution();
  const int r = static_cast<int>(std::floor(radius / res + 1e-9));
  std::vector<Cell> offsets;
  for (int dz = -r; dz <= r; ++dz)
    for (int dy = -r; dy <= r; ++dy)
      for (int dx = -r; dx <= r; ++dx)
        if ((dx * dx + dy * dy + dz * dz) * res * res <= radius * radius + 1e-12)
          offsets.push_back({dx, dy, dz});
  for (std::size_t i = 0; i < map.size(); ++i)
  {
    if (!map.occupied(i))
      continue;
    const Cell c = map.cell_of(i);
    for (const Cell& o : offsets)
    {
      const Cell n{c[0] + o[0], c[1] + o[1], c[2] + o[2]};
      if (map.in_bounds(n))
        out.set(n, true);
    }
  }
  return out;
}

}  // namespace insat
