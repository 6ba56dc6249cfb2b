#pragma once

// World = occupancy + level-1 inflated occupancy + obstacle surface cloud,
// plus the walls-and-windows scenario generator and the Dijkstra distance field.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <queue>
#include <random>
#include <string>
#include <unordered_set>
#include <utility>
#include <vector>

#include "insat/errors.hpp"
#include "insat/kd_tree.hpp"
#include "insat/voxel_map.hpp"

namespace insat
{

struct WindowRect
{
  double y_min = 0, y_max = 0, z_min = 0, z_max = 0;
};

struct WallInfo
{
  double x_min = 0, x_max = 0;
  std::vector<WindowRect> windows;
};

/// Level-1 radius that makes "inflated cell free" imply "no cloud point within
/// r_max of any point in that cell": r_max plus the centre-to-corner distance
/// of the query cell and of the obstacle cell.
inline double level1_radius(double r_max, double resolution)
{
  return r_max + std::sqrt(3.0) * resolution;
}

/// Points on the faces of occupied cells that border free in-bounds cells,
/// on a resolution/2 lattice.
inline std::vector<Vec3> surface_cloud(const VoxelMap& map)
{
  const double h = 0.5 * map.resolution();
  const Cell d = map.dims();
  std::unordered_set<std::uint64_t> seen;
  std::vector<Vec3> pts;
  auto key = [](int i, int j, int k) {
    return (static_cast<std::uint64_t>(i) << 42) | (static_cast<std::uint64_t>(j) << 21) |
           static_cast<std::uint64_t>(k);
  };
  const int nb[6][3] = {{1, 0, 0}, {-1, 0, 0}, {0, 1, 0}, {0, -1, 0}, {0, 0, 1}, {0, 0, -1}};
  for (int z = 0; z < d[2]; ++z)
    for (int y = 0; y < d[1]; ++y)
      for (int x = 0; x < d[0]; ++x)
      {
        const Cell c{x, y, z};
        if (!map.occupied(c))
          continue;
        for (const auto& o : nb)
        {
          const Cell n{x + o[0], y + o[1], z + o[2]};
          if (!map.in_bounds(n) || map.occupied(n))
            continue;
          // Face lattice in half-cell units; the face axis is fixed.
          int ax = 0;
          while (o[ax] == 0) ++ax;
          const int u = (ax + 1) % 3, v = (ax + 2) % 3;
          const int base[3] = {2 * x, 2 * y, 2 * z};
          for (int a = 0; a <= 2; ++a)
            for (int b = 0; b <= 2; ++b)
            {
              int q[3] = {base[0], base[1], base[2]};
              q[ax] += (o[ax] > 0) ? 2 : 0;
              q[u] += a;
              q[v] += b;
              if (seen.insert(key(q[0], q[1], q[2])).second)
                pts.emplace_back(map.origin() + h * Vec3(q[0], q[1], q[2]));
            }
        }
      }
  return pts;
}

struct World
{
  VoxelMap map;
  VoxelMap inflated;
  CloudIndex cloud;
  double inflation_radius = 0.0;
  std::vector<WallInfo> walls;

  Vec3 lower() const { return map.origin(); }
  Vec3 upper() const { return map.upper(); }

  bool contains(const Vec3& p) const
  {
    return (p.array() >= lower().array()).all() && (p.array() <= upper().array()).all();
  }
};

inline World make_world(VoxelMap map, double inflation_radius, std::vector<WallInfo> walls = {})
{
  World w;
  w.inflated = inflate(map, inflation_radius);
  w.cloud = CloudIndex(surface_cloud(map));
  w.map = std::move(map);
  w.inflation_radius = inflation_radius;
  w.walls = std::move(walls);
  return w;
}

struct ScenarioSpec
{
  int n_walls = 2;
  int windows_per_wall = 1;
  double wall_gap = 5.0;        // m
  double wall_thickness = 0.2;  // m
  double window_width = 0.6;    // m, along y
  double window_height = 1.0;   // m, along z
  Vec3 bounds_min = Vec3(0, 0, 0);
  Vec3 bounds_max = Vec3(12, 8, 6);
  double resolution = 0.2;
  std::uint64_t seed = 42;
  double robot_radius = 0.31;   // bounding radius of the vehicle
  bool allow_non_forcing = false;
  int max_retries = 100;
};

inline int cells_for(double length, double res)
{
  return std::max(1, static_cast<int>(std::lround(length / res)));
}

inline void validate(const ScenarioSpec& s)
{
  if (s.n_walls < 0 || s.windows_per_wall < 0)
    throw InvalidArgument("wall and window counts must be non-negative");
  if (!(s.resolution > 0) || !((s.bounds_max - s.bounds_min).minCoeff() > 0))
    throw InvalidArgument("bounds must be a non-empty box and resolution positive");
  if (s.n_walls > 0 && !(s.wall_thickness > 0))
    throw InvalidArgument("wall thickness must be positive");
  if (s.n_walls > 1 && !(s.wall_gap > s.wall_thickness))
    throw InvalidArgument("wall gap must exceed wall thickness");
  if (s.n_walls > 0 && s.windows_per_wall > 0)
  {
    if (!(s.window_width > 0) || !(s.window_height > 0))
      throw InvalidArgument("window dimensions must be positive");
    const double w = cells_for(s.window_width, s.resolution) * s.resolution;
    const double h = cells_for(s.window_height, s.resolution) * s.resolution;
    if (!(std::min(w, h) < 2.0 * s.robot_radius) && !s.allow_non_forcing)
      throw InvalidArgument("window " + std::to_string(w) + " x " + std::to_string(h) +
                            " m is not attitude-forcing for bounding radius " +
                            std::to_string(s.robot_radius) + " m");
  }
}

/// n_walls slabs perpendicular to x, centred in the box and spaced by wall_gap,
/// each with windows_per_wall rectangular openings at seeded positions.
inline World generate_walls_windows(const ScenarioSpec& s, double inflation_radius)
{
  validate(s);
  const double res = s.resolution;
  const Vec3 ext = s.bounds_max - s.bounds_min;
  const Cell dims{cells_for(ext.x(), res), cells_for(ext.y(), res), cells_for(ext.z(), res)};
  VoxelMap map(s.bounds_min, res, dims);
  std::vector<WallInfo> walls;
  std::mt19937_64 rng(s.seed);
  auto uniform_int = [&rng](int lo, int hi) {  // inclusive; portable across std libraries
    const std::uint64_t span = static_cast<std::uint64_t>(hi - lo) + 1;
    return lo + static_cast<int>(rng() % span);
  };
  const int nt = cells_for(s.wall_thickness, res);
  const int nw = cells_for(s.window_width, res);
  const int nh = cells_for(s.window_height, res);
  const int margin = 1;
  const double mid_x = s.bounds_min.x() + 0.5 * ext.x();
  for (int i = 0; i < s.n_walls; ++i)
  {
    const double xc = mid_x + (i - 0.5 * (s.n_walls - 1)) * s.wall_gap;
    const int x0 = static_cast<int>(std::lround((xc - s.bounds_min.x()) / res - 0.5 * nt));
    if (x0 < 0 || x0 + nt > dims[0])
      throw InvalidArgument("wall " + std::to_string(i) + " does not fit inside the bounds");
    std::vector<std::array<int, 2>> placed;  // (y0, z0) lower window corners
    for (int w = 0; w < s.windows_per_wall; ++w)
    {
      if (nw + 2 * margin > dims[1] || nh + 2 * margin > dims[2])
        throw InvalidArgument("window does not fit inside the wall");
      bool ok = false;
      std::array<int, 2> pos{};
      for (int attempt = 0; attempt < s.max_retries && !ok; ++attempt)
      {
        pos = {uniform_int(margin, dims[1] - nw - margin), uniform_int(margin, dims[2] - nh - margin)};
        ok = std::none_of(placed.begin(), placed.end(), [&](const auto& p) {
          // Keep at least one wall cell between windows.
          return pos[0] <= p[0] + nw && p[0] <= pos[0] + nw && pos[1] <= p[1] + nh &&
                 p[1] <= pos[1] + nh;
        });
      }
      if (!ok)
        throw InvalidArgument("could not place non-overlapping windows after " +
                              std::to_string(s.max_retries) + " retries");
      placed.push_back(pos);
    }
    WallInfo info;
    info.x_min = s.bounds_min.x() + x0 * res;
    info.x_max = info.x_min + nt * res;
    for (int z = 0; z < dims[2]; ++z)
      for (int y = 0; y < dims[1]; ++y)
      {
        const bool open = std::any_of(placed.begin(), placed.end(), [&](const auto& p) {
          return y >= p[0] && y < p[0] + nw && z >= p[1] && z < p[1] + nh;
        });
        if (!open)
          for (int x = x0; x < x0 + nt; ++x) map.set(Cell{x, y, z}, true);
      }
    for (const auto& p : placed)
      info.windows.push_back({s.bounds_min.y() + p[0] * res, s.bounds_min.y() + (p[0] + nw) * res,
                              s.bounds_min.z() + p[1] * res, s.bounds_min.z() + (p[1] + nh) * res});
    walls.push_back(std::move(info));
  }
  return make_world(std::move(map), inflation_radius, std::move(walls));
}

inline constexpr double kUnreachable = std::numeric_limits<double>::infinity();

/// Backward 26-connected Dijkstra from goal over free cells; Euclidean edge lengths.
inline std::vector<double> dijkstra_field(const VoxelMap& map, const Cell& goal)
{
  if (!map.in_bounds(goal))
    throw OutOfBounds("goal cell outside the map");
  if (map.occupied(goal))
    throw InvalidArgument("goal cell is occupied");
  std::vector<double> dist(map.size(), kUnreachable);
  using Item = std::pair<double, std::size_t>;
  std::priority_queue<Item, std::vector<Item>, std::greater<>> pq;
  const double res = map.resolution();
  std::vector<std::pair<Cell, double>> nbrs;
  for (int dz = -1; dz <= 1; ++dz)
    for (int dy = -1; dy <= 1; ++dy)
      for (int dx = -1; dx <= 1; ++dx)
        if (dx || dy || dz)
          nbrs.push_back({Cell{dx, dy, dz}, res * std::sqrt(double(dx * dx + dy * dy + dz * dz))});
  const std::size_t g = map.index(goal);
  dist[g] = 0.0;
  pq.push({0.0, g});
  while (!pq.empty())
  {
    const auto [d, i] = pq.top();
    pq.pop();
    if (d > dist[i])
      continue;
    const Cell c = map.cell_of(i);
    for (const auto& [o, w] : nbrs)
    {
      const Cell n{c[0] + o[0], c[1] + o[1], c[2] + o[2]};
      if (!map.in_bounds(n))
        continue;
      const std::size_t j = map.index(n);
      if (map.occupied(j))
        continue;
      const double nd = d + w;
      if (nd < dist[j])
      {
        dist[j] = nd;
        pq.push({nd, j});
      }
    }
  }
  return dist;
}

}  // namespace insat
