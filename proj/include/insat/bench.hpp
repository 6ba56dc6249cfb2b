#pragma once

// Seeded benchmark campaigns over walls-and-windows worlds: one world and one
// start/goal pair per trial, all derived from a master seed.

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <mutex>
#include <optional>
#include <ostream>
#include <string>
#include <thread>
#include <vector>

#include "insat/config_io.hpp"

namespace insat
{

/// Planner settings for campaigns and the command line. A search weight of 2
/// expands nearly every state whose key is below the first candidate's cost,
/// which does not finish inside the timeout even in an empty world.
inline PlannerConfig bench_config()
{
  PlannerConfig c;
  c.epsilon = 50.0;
  return c;
}

struct BenchSpec
{
  ScenarioSpec scenario;
  int n_trials = 20;
  std::uint64_t seed = 1;
  bool vary_world = true;  // new window positions every trial
  PlannerConfig config = bench_config();
  bool keep_trajectories = false;

  void validate() const
  {
    if (n_trials < 1)
      throw InvalidArgument("n_trials must be >= 1");
    insat::validate(scenario);
    config.validate();
  }
};

inline std::uint64_t splitmix64(std::uint64_t x)
{
  x += 0x9e3779b97f4a7c15ull;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
  return x ^ (x >> 31);
}

inline std::uint64_t trial_seed(std::uint64_t master, int index)
{
  return splitmix64(master ^ splitmix64(static_cast<std::uint64_t>(index)));
}

struct BenchTrial
{
  int index = 0;
  std::uint64_t seed = 0;
  Vec3 start = Vec3::Zero();
  Vec3 goal = Vec3::Zero();
  PlanStatus status = PlanStatus::exhausted;
  double j_total = kInf;
  double execution_time = 0.0;
  double planning_time = 0.0;
  long expansions = 0;
  long qp_solves = 0;
  bool audit_ok = false;
  std::string error;  // set when the trial could not be run
  std::vector<double> goal_history;
  std::optional<PiecewiseTrajectory> trajectory;
  std::optional<World> world;

  bool solved() const { return status == PlanStatus::solved && error.empty(); }
};

struct MeanSd
{
  double mean = 0.0;
  std::optional<double> sd;  // absent with fewer than two samples
};

inline std::optional<MeanSd> mean_sd(const std::vector<double>& xs)
{
  if (xs.empty())
    return std::nullopt;
  MeanSd r;
  for (double x : xs) r.mean += x;
  r.mean /= static_cast<double>(xs.size());
  if (xs.size() > 1)
  {
    double s = 0.0;
    for (double x : xs) s += (x - r.mean) * (x - r.mean);
    r.sd = std::sqrt(s / static_cast<double>(xs.size() - 1));
  }
  return r;
}

struct BenchRow
{
  int n_trials = 0;
  int successes = 0;
  double success_rate = 0.0;  // percent
  std::optional<MeanSd> solution_cost;
  std::optional<MeanSd> execution_time;
  std::optional<MeanSd> planning_time;
};

inline BenchRow summarize(const std::vector<BenchTrial>& trials)
{
  BenchRow row;
  row.n_trials = static_cast<int>(trials.size());
  std::vector<double> cost, exec, plan;
  for (const auto& t : trials)
    if (t.solved())
    {
      ++row.successes;
      cost.push_back(t.j_total);
      exec.push_back(t.execution_time);
      plan.push_back(t.planning_time);
    }
  row.success_rate = row.n_trials ? 100.0 * row.successes / row.n_trials : 0.0;
  row.solution_cost = mean_sd(cost);
  row.execution_time = mean_sd(exec);
  row.planning_time = mean_sd(plan);
  return row;
}

/// Free cell centres (level-1 clearance, so any attitude is safe) strictly
/// between x_lo and x_hi, in grid order.
inline std::vector<Vec3> chamber_cells(const World& world, const EllipsoidShape& shape, double x_lo,
                                       double x_hi)
{
  std::vector<Vec3> out;
  const VoxelMap& m = world.inflated;
  for (int z = 0; z < m.dims()[2]; ++z)
    for (int y = 0; y < m.dims()[1]; ++y)
      for (int x = 0; x < m.dims()[0]; ++x)
      {
        const Vec3 p = m.cell_to_world(Cell{x, y, z});
        if (p.x() > x_lo && p.x() < x_hi && level1_free(world, shape, p) &&
            pose_collision_free(world, shape, p, Attitude()))
          out.push_back(p);
      }
  return out;
}

/// World, start and goal for trial `index`: start in the first chamber, goal
/// in the last, both at rest and level.
inline BenchTrial prepare_trial(const BenchSpec& spec, int index, World& world)
{
  BenchTrial t;
  t.index = index;
  t.seed = trial_seed(spec.seed, index);
  ScenarioSpec sc = spec.scenario;
  if (spec.vary_world)
    sc.seed = t.seed;
  world = generate_walls_windows(sc, level1_radius(spec.config.shape.bounding_radius(), sc.resolution));
  double first = world.upper().x(), last = world.lower().x();
  for (const auto& w : world.walls)
  {
    first = std::min(first, w.x_min);
    last = std::max(last, w.x_max);
  }
  if (world.walls.empty())
    first = last = world.lower().x() + 0.5 * (world.upper().x() - world.lower().x());
  const auto starts = chamber_cells(world, spec.config.shape, world.lower().x(), first);
  const auto goals = chamber_cells(world, spec.config.shape, last, world.upper().x());
  if (starts.empty() || goals.empty())
    throw InvalidArgument("no free cells in the first or last chamber");
  std::uint64_t s = splitmix64(t.seed ^ 0x5354415254ull);
  t.start = starts[s % starts.size()];
  s = splitmix64(s);
  t.goal = goals[s % goals.size()];
  return t;
}

inline BenchTrial run_trial(const BenchSpec& spec, int index)
{
  World world;
  BenchTrial t;
  try
  {
    t = prepare_trial(spec, index, world);
    Planner planner(world, spec.config);
    const PlanResult r = planner.plan(FlatState{t.start, Vec3::Zero(), Vec3::Zero(), Vec3::Zero()},
                                      FlatState{t.goal, Vec3::Zero(), Vec3::Zero(), Vec3::Zero()});
    t.status = r.status;
    t.planning_time = r.planning_time;
    t.expansions = r.expansions;
    t.qp_solves = r.qp_solves;
    t.goal_history = r.goal_history;
    if (r.status == PlanStatus::solved)
    {
      t.j_total = r.j_total;
      t.execution_time = r.execution_time;
      t.audit_ok = !audit(r.trajectory, spec.config.limits, planner.config().effective_model(), world,
                          spec.config.shape, spec.config.collision_dt)
                         .has_value();
      if (spec.keep_trajectories)
        t.trajectory = r.trajectory;
    }
  }
  catch (const Error& e)
  {
    t.index = index;
    t.seed = trial_seed(spec.seed, index);
    t.error = e.what();
  }
  if (spec.keep_trajectories)
    t.world = std::move(world);
  return t;
}

/// Thread count from INSAT_THREADS, else the hardware concurrency.
inline int bench_threads()
{
  if (const char* e = std::getenv("INSAT_THREADS"))
  {
    char* end = nullptr;
    const long n = std::strtol(e, &end, 10);
    if (end != e && *end == '\0' && n >= 1)
      return static_cast<int>(n);
    throw InvalidArgument(std::string("INSAT_THREADS must be a positive integer, got '") + e + "'");
  }
  return static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
}

/// Runs every trial; results are indexed by trial so the thread count never
/// changes them. `progress` is called once per finished trial.
inline std::vector<BenchTrial> run_bench(const BenchSpec& spec, int threads = 1,
                                         const std::function<void(const BenchTrial&)>& progress = {})
{
  spec.validate();
  std::vector<BenchTrial> out(static_cast<std::size_t>(spec.n_trials));
  std::atomic<int> next{0};
  std::mutex mu;
  auto worker = [&] {
    for (int i = next++; i < spec.n_trials; i = next++)
    {
      BenchTrial t = run_trial(spec, i);
      std::lock_guard<std::mutex> lock(mu);
      if (progress)
        progress(t);
      out[static_cast<std::size_t>(i)] = std::move(t);
    }
  };
  threads = std::clamp(threads, 1, spec.n_trials);
  if (threads == 1)
    worker();
  else
  {
    std::vector<std::thread> pool;
    for (int k = 0; k < threads; ++k) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
  }
  return out;
}

namespace detail
{

inline Json mean_sd_json(const std::optional<MeanSd>& m)
{
  if (!m)
    return Json{{"mean", nullptr}, {"sd", nullptr}};
  return Json{{"mean", m->mean}, {"sd", m->sd ? Json(*m->sd) : Json(nullptr)}};
}

}  // namespace detail

/// Aggregate without wall-clock quantities: identical for identical seeds.
inline Json aggregate_json(const BenchSpec& spec, const std::vector<BenchTrial>& trials)
{
  const BenchRow row = summarize(trials);
  Json tj = Json::array();
  for (const auto& t : trials)
  {
    Json j{{"index", t.index},
           {"seed", t.seed},
           {"start", detail::vec_json(t.start)},
           {"goal", detail::vec_json(t.goal)},
           {"status", t.error.empty() ? to_string(t.status) : "error"},
           {"j_total", t.solved() ? Json(t.j_total) : Json(nullptr)},
           {"execution_time", t.solved() ? Json(t.execution_time) : Json(nullptr)},
           {"audit_ok", t.audit_ok}};
    if (!t.error.empty())
      j["error"] = t.error;
    tj.push_back(j);
  }
  return Json{{"master_seed", spec.seed},
              {"n_trials", spec.n_trials},
              {"vary_world", spec.vary_world},
              {"scenario", to_json(spec.scenario)},
              {"config", to_json(spec.config)},
              {"successes", row.successes},
              {"success_rate", row.success_rate},
              {"solution_cost", detail::mean_sd_json(row.solution_cost)},
              {"execution_time", detail::mean_sd_json(row.execution_time)},
              {"trials", tj}};
}

inline Json timing_json(const std::vector<BenchTrial>& trials)
{
  const BenchRow row = summarize(trials);
  Json per = Json::array();
  for (const auto& t : trials) per.push_back(t.planning_time);
  return Json{{"planning_time", detail::mean_sd_json(row.planning_time)}, {"per_trial", per}};
}

inline void write_trials_csv(std::ostream& os, const std::vector<BenchTrial>& trials)
{
  os << "index,seed,sx,sy,sz,gx,gy,gz,status,j_total,execution_time,planning_time,expansions,"
        "qp_solves,audit_ok\n";
  os << std::setprecision(10);
  for (const auto& t : trials)
  {
    os << t.index << ',' << t.seed << ',' << t.start.x() << ',' << t.start.y() << ',' << t.start.z()
       << ',' << t.goal.x() << ',' << t.goal.y() << ',' << t.goal.z() << ','
       << (t.error.empty() ? to_string(t.status) : "error") << ',';
    if (t.solved())
      os << t.j_total << ',' << t.execution_time;
    else
      os << ',';
    os << ',' << t.planning_time << ',' << t.expansions << ',' << t.qp_solves << ','
       << (t.audit_ok ? 1 : 0) << "\n";
  }
}

}  // namespace insat
