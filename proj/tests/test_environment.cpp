#include <gtest/gtest.h>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <random>

#include "insat/world.hpp"
#include "insat/world_io.hpp"

using namespace insat;

namespace
{

std::string temp_path(const std::string& name)
{
  return (std::filesystem::temp_directory_path() / ("insat_env_" + name)).string();
}

double r1() { return level1_radius(0.31, 0.2); }

}  // namespace

TEST(VoxelMap, WorldToCell)
{
  VoxelMap m(Vec3::Zero(), 0.2, Cell{20, 10, 10});
  EXPECT_EQ(m.world_to_cell(Vec3(1.0, 0, 0)), (Cell{5, 0, 0}));
  EXPECT_EQ(m.world_to_cell(Vec3(0.4, 0.6, 0.8)), (Cell{2, 3, 4}));
  EXPECT_EQ(m.world_to_cell(Vec3(0.39, 0, 0)), (Cell{1, 0, 0}));
  EXPECT_THROW(m.world_to_cell(Vec3(-0.01, 0, 0)), OutOfBounds);
  EXPECT_THROW(m.world_to_cell(Vec3(4.0, 0, 0)), OutOfBounds);
  std::mt19937_64 rng(2);
  std::uniform_real_distribution<double> U(0.0, 1.99);
  for (int i = 0; i < 1000; ++i)
  {
    const Vec3 p(2 * U(rng), U(rng), U(rng));
    const Vec3 c = m.cell_to_world(m.world_to_cell(p));
    EXPECT_LE((c - p).cwiseAbs().maxCoeff(), 0.1 + 1e-9);
  }
}

TEST(Inflate, IdentityBruteForceMonotone)
{
  VoxelMap m(Vec3::Zero(), 0.2, Cell{9, 9, 9});
  m.set(Cell{4, 4, 4}, true);
  EXPECT_EQ(inflate(m, 0.0), m);
  const double r = 1.5 * 0.2;
  const VoxelMap inf = inflate(m, r);
  for (std::size_t i = 0; i < m.size(); ++i)
  {
    const Vec3 d = m.cell_to_world(m.cell_of(i)) - m.cell_to_world(Cell{4, 4, 4});
    EXPECT_EQ(inf.occupied(i), d.norm() <= r + 1e-12);
  }
  EXPECT_EQ(inf.count_occupied(), 19u);  // centre, 6 faces, 12 edges
  std::mt19937_64 rng(3);
  VoxelMap rnd(Vec3::Zero(), 0.2, Cell{12, 12, 12});
  for (std::size_t i = 0; i < rnd.size(); ++i) rnd.set(i, rng() % 40 == 0);
  VoxelMap prev = rnd;
  for (double rad : {0.1, 0.2, 0.3, 0.5, 0.7})
  {
    const VoxelMap cur = inflate(rnd, rad);
    for (std::size_t i = 0; i < rnd.size(); ++i)
      if (prev.occupied(i))
      {
        EXPECT_TRUE(cur.occupied(i));
      }
    prev = cur;
  }
}

TEST(CloudIndex, MatchesLinearScan)
{
  ScenarioSpec s;
  s.bounds_max = Vec3(6, 4, 3);
  s.wall_gap = 2.0;
  s.windows_per_wall = 2;
  const World w = generate_walls_windows(s, r1());
  ASSERT_GT(w.cloud.size(), 100u);
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> U(0.0, 1.0);
  const auto& pts = w.cloud.points();
  for (int q = 0; q < 1000; ++q)
  {
    const Vec3 c(6 * U(rng), 4 * U(rng), 3 * U(rng));
    const double r = 0.05 + 0.6 * U(rng);
    std::vector<std::size_t> expect;
    for (std::size_t i = 0; i < pts.size(); ++i)
      if ((pts[i] - c).norm() <= r)
        expect.push_back(i);
    EXPECT_EQ(w.cloud.radius_search(c, r), expect);
  }
}

TEST(SurfaceCloud, HalfResolutionLatticeOnExposedFaces)
{
  VoxelMap m(Vec3::Zero(), 0.2, Cell{5, 5, 5});
  m.set(Cell{2, 2, 2}, true);
  const auto pts = surface_cloud(m);
  EXPECT_EQ(pts.size(), 26u);  // 3x3x3 lattice on the cube surface
  for (const auto& p : pts)
    EXPECT_NEAR((p - Vec3(0.5, 0.5, 0.5)).cwiseAbs().maxCoeff(), 0.1, 1e-12);
}

TEST(Scenario, EmptyAndSlabVolume)
{
  ScenarioSpec s;
  s.n_walls = 0;
  const World empty = generate_walls_windows(s, r1());
  EXPECT_EQ(empty.map.count_occupied(), 0u);
  EXPECT_TRUE(empty.cloud.empty());

  s.n_walls = 2;
  s.windows_per_wall = 1;
  s.wall_gap = 5;
  s.seed = 42;
  const World w = generate_walls_windows(s, r1());
  const Cell d = w.map.dims();
  ASSERT_EQ(w.walls.size(), 2u);
  const std::size_t slab = static_cast<std::size_t>(d[1]) * d[2];  // one cell thick
  const std::size_t window = 3 * 5;
  EXPECT_EQ(w.map.count_occupied(), 2 * (slab - window));
  EXPECT_NEAR(w.walls[1].x_min - w.walls[0].x_min, 5.0, 1e-9);
  EXPECT_NEAR(0.5 * (w.walls[0].x_min + w.walls[1].x_max), 6.0, 0.2);
  // Exactly two occupied x-slabs.
  int slabs = 0;
  for (int x = 0; x < d[0]; ++x)
    slabs += w.map.occupied(Cell{x, 0, 0});
  EXPECT_EQ(slabs, 2);

  const World again = generate_walls_windows(s, r1());
  EXPECT_EQ(again.map, w.map);
  s.seed = 43;
  EXPECT_FALSE(generate_walls_windows(s, r1()).map == w.map);
}

TEST(Scenario, WindowsAreAttitudeForcing)
{
  ScenarioSpec s;
  s.windows_per_wall = 2;
  const World w = generate_walls_windows(s, r1());
  const double R = s.robot_radius;
  for (const auto& wall : w.walls)
    for (const auto& win : wall.windows)
    {
      // Every cell centre in the opening is level-1 occupied ...
      for (double y = win.y_min + 0.1; y < win.y_max; y += 0.2)
        for (double z = win.z_min + 0.1; z < win.z_max; z += 0.2)
          EXPECT_TRUE(w.inflated.occupied(w.map.world_to_cell(Vec3(wall.x_min + 0.1, y, z))));
      // ... and a sphere of the bounding radius anywhere in the opening hits a cloud point.
      for (double y = win.y_min; y <= win.y_max; y += 0.05)
        for (double z = win.z_min; z <= win.z_max; z += 0.05)
          EXPECT_FALSE(w.cloud.radius_search(Vec3(0.5 * (wall.x_min + wall.x_max), y, z), R).empty());
    }
}

TEST(Scenario, RejectsBadSpecs)
{
  ScenarioSpec s;
  s.window_width = 1.0;
  EXPECT_THROW(generate_walls_windows(s, r1()), InvalidArgument);
  s.allow_non_forcing = true;
  EXPECT_NO_THROW(generate_walls_windows(s, r1()));
  ScenarioSpec crowded;
  crowded.bounds_max = Vec3(12, 1.4, 1.6);
  crowded.windows_per_wall = 3;
  crowded.max_retries = 20;
  EXPECT_THROW(generate_walls_windows(crowded, r1()), InvalidArgument);
  ScenarioSpec neg;
  neg.n_walls = -1;
  EXPECT_THROW(generate_walls_windows(neg, r1()), InvalidArgument);
}

TEST(Dijkstra, EmptyLineBoundsAndTriangle)
{
  VoxelMap m(Vec3::Zero(), 0.2, Cell{15, 10, 8});
  const Cell goal{2, 3, 4};
  const auto f = dijkstra_field(m, goal);
  EXPECT_NEAR(f[m.index(Cell{9, 3, 4})], 7 * 0.2, 1e-12);
  for (std::size_t i = 0; i < m.size(); ++i)
  {
    const Cell c = m.cell_of(i);
    const Vec3 d = 0.2 * Vec3(c[0] - goal[0], c[1] - goal[1], c[2] - goal[2]);
    EXPECT_GE(f[i], d.norm() - 1e-12);
    const double inf_norm = d.cwiseAbs().maxCoeff();
    EXPECT_LE(f[i], inf_norm * std::sqrt(3.0) + 1e-12);
  }
  ScenarioSpec s;
  s.windows_per_wall = 2;
  const World w = generate_walls_windows(s, r1());
  const Cell g = w.map.world_to_cell(Vec3(11, 4, 3));
  const auto fw = dijkstra_field(w.map, g);
  for (std::size_t i = 0; i < w.map.size(); ++i)
  {
    if (w.map.occupied(i) || fw[i] == kUnreachable)
      continue;
    const Cell c = w.map.cell_of(i);
    for (int dz = -1; dz <= 1; ++dz)
      for (int dy = -1; dy <= 1; ++dy)
        for (int dx = -1; dx <= 1; ++dx)
        {
          const Cell n{c[0] + dx, c[1] + dy, c[2] + dz};
          if (!w.map.in_bounds(n) || w.map.occupied(n))
            continue;
          EXPECT_LE(fw[i], fw[w.map.index(n)] + 0.2 * std::sqrt(double(dx * dx + dy * dy + dz * dz)) + 1e-9);
        }
  }
  EXPECT_TRUE(std::isfinite(fw[w.map.index(w.map.world_to_cell(Vec3(1, 4, 3)))]));
}

TEST(Dijkstra, SealedWallAndOccupiedGoal)
{
  ScenarioSpec s;
  s.n_walls = 1;
  s.windows_per_wall = 0;
  const World w = generate_walls_windows(s, r1());
  const auto f = dijkstra_field(w.map, w.map.world_to_cell(Vec3(11, 4, 3)));
  EXPECT_EQ(f[w.map.index(w.map.world_to_cell(Vec3(1, 4, 3)))], kUnreachable);
  const Cell wall_cell = w.map.world_to_cell(Vec3(w.walls[0].x_min + 0.1, 4, 3));
  EXPECT_THROW(dijkstra_field(w.map, wall_cell), InvalidArgument);
}

TEST(WorldIo, RoundTripAndErrors)
{
  ScenarioSpec s;
  s.windows_per_wall = 2;
  const World w = generate_walls_windows(s, r1());
  const std::string path = temp_path("rt.world");
  save_world(w, path);
  const World back = load_world(path);
  EXPECT_EQ(back.map, w.map);
  EXPECT_EQ(back.inflated, w.inflated);
  EXPECT_EQ(back.cloud.size(), w.cloud.size());
  EXPECT_EQ(back.walls.size(), w.walls.size());
  EXPECT_EQ(back.walls[1].windows[1].z_max, w.walls[1].windows[1].z_max);

  const std::string data = serialize_world(w);
  try
  {
    deserialize_world(data.substr(0, data.size() - 3));
    FAIL() << "truncated file accepted";
  }
  catch (const ParseError& e)
  {
    EXPECT_EQ(e.offset, data.size() - 3);
  }
  std::string bumped = data;
  const auto at = bumped.find("\"version\":1");
  ASSERT_NE(at, std::string::npos);
  bumped.replace(at, 11, "\"version\":7");
  EXPECT_THROW(deserialize_world(bumped), VersionError);
  EXPECT_THROW(deserialize_world("{\"format\":"), ParseError);
  EXPECT_THROW(deserialize_world("{not json}\n"), ParseError);
  std::remove(path.c_str());
}

TEST(WorldIo, ImportXyz)
{
  const std::string path = temp_path("pts.xyz");
  {
    std::ofstream f(path);
    f << "# a tiny cloud\n0 0 0\n1.0 0.5 0.25\n\n2 1 1\n";
  }
  const World w = import_xyz(path, 0.2, 0.3);
  EXPECT_EQ(w.map.count_occupied(), 3u);
  EXPECT_TRUE(w.map.occupied(w.map.world_to_cell(Vec3(1.0, 0.5, 0.25))));
  {
    std::ofstream f(path);
    f << "0 0 0\n1 2\n";
  }
  try
  {
    import_xyz(path, 0.2, 0.3);
    FAIL();
  }
  catch (const ParseError& e)
  {
    EXPECT_EQ(e.offset, 6u);
  }
  std::remove(path.c_str());
}
