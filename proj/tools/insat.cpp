// insat: gen-env | plan | bench | export

#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "insat/insat.hpp"

using namespace insat;

namespace
{

constexpr int kExitOk = 0;
constexpr int kExitTimeout = 2;
constexpr int kExitExhausted = 3;
constexpr int kExitUsage = 64;

struct Usage : Error
{
  using Error::Error;
};

Json read_json(const std::string& path)
{
  try
  {
    return Json::parse(read_file(path));
  }
  catch (const Json::parse_error& e)
  {
    throw Usage(path + ": " + e.what());
  }
}

Vec3 to_vec(const std::vector<double>& v, const char* what)
{
  if (v.size() != 3)
    throw Usage(std::string(what) + " needs three values");
  return Vec3(v[0], v[1], v[2]);
}

void write_text(const std::string& path, const std::string& text)
{
  std::ofstream f(path, std::ios::binary);
  if (!f || !(f << text))
    throw Error("cannot write " + path);
}

// Scenario flags mirror the scenario JSON keys.
struct ScenarioFlags
{
  std::string json;
  std::optional<int> walls, windows;
  std::optional<double> gap, thickness, width, height, resolution, radius;
  std::optional<std::uint64_t> seed;
  std::vector<double> bmin, bmax;
  bool allow_non_forcing = false;

  void add(CLI::App* app)
  {
    app->add_option("--scenario", json, "scenario JSON file");
    app->add_option("--walls", walls, "number of walls (n_walls)");
    app->add_option("--windows-per-wall", windows, "windows per wall");
    app->add_option("--wall-gap", gap, "wall spacing, m");
    app->add_option("--wall-thickness", thickness, "m");
    app->add_option("--window-width", width, "m, along y");
    app->add_option("--window-height", height, "m, along z");
    app->add_option("--bounds-min", bmin, "x y z")->expected(3);
    app->add_option("--bounds-max", bmax, "x y z")->expected(3);
    app->add_option("--resolution", resolution, "m per cell");
    app->add_option("--robot-radius", radius, "bounding radius, m");
    app->add_option("--seed", seed, "scenario seed");
    app->add_flag("--allow-non-forcing", allow_non_forcing, "accept windows the robot fits through level");
  }

  ScenarioSpec spec() const
  {
    Json j = json.empty() ? Json::object() : read_json(json);
    if (walls) j["n_walls"] = *walls;
    if (windows) j["windows_per_wall"] = *windows;
    if (gap) j["wall_gap"] = *gap;
    if (thickness) j["wall_thickness"] = *thickness;
    if (width) j["window_width"] = *width;
    if (height) j["window_height"] = *height;
    if (!bmin.empty()) j["bounds_min"] = bmin;
    if (!bmax.empty()) j["bounds_max"] = bmax;
    if (resolution) j["resolution"] = *resolution;
    if (radius) j["robot_radius"] = *radius;
    if (seed) j["seed"] = *seed;
    if (allow_non_forcing) j["allow_non_forcing"] = true;
    try
    {
      return scenario_from_json(j);
    }
    catch (const InvalidArgument& e)
    {
      throw Usage(e.what());
    }
  }
};

// Planner flags mirror the planner config JSON keys.
struct PlannerFlags
{
  std::string json;
  std::optional<double> epsilon, gamma, timeout;
  std::optional<long> max_expansions;
  std::optional<int> duplication_cap;

  void add(CLI::App* app)
  {
    app->add_option("--config", json, "planner config JSON file");
    app->add_option("--epsilon", epsilon, "search weight");
    app->add_option("--gamma", gamma, "time penalty");
    app->add_option("--timeout", timeout, "s");
    app->add_option("--max-expansions", max_expansions, "0 for unlimited");
    app->add_option("--duplication-cap", duplication_cap, "generations per state");
  }

  PlannerConfig config(PlannerConfig base = bench_config()) const
  {
    Json j = json.empty() ? Json::object() : read_json(json);
    if (epsilon) j["epsilon"] = *epsilon;
    if (gamma) j["gamma"] = *gamma;
    if (timeout) j["timeout"] = *timeout;
    if (max_expansions) j["max_expansions"] = *max_expansions;
    if (duplication_cap) j["duplication_cap"] = *duplication_cap;
    try
    {
      return planner_config_from_json(j, base);
    }
    catch (const InvalidArgument& e)
    {
      throw Usage(e.what());
    }
  }
};

int cmd_gen_env(const ScenarioFlags& flags, const std::string& out)
{
  const ScenarioSpec s = flags.spec();
  if (s.n_walls == 0)
    std::cerr << "warning: no walls, the world is empty\n";
  const World w = generate_walls_windows(s, level1_radius(s.robot_radius, s.resolution));
  save_world(w, out);
  const Cell d = w.map.dims();
  std::size_t occ = 0, infl = 0;
  for (std::size_t i = 0; i < w.map.size(); ++i)
  {
    occ += w.map.occupied(i);
    infl += w.inflated.occupied(i);
  }
  std::cout << "dims " << d[0] << " x " << d[1] << " x " << d[2] << ", occupied " << occ << ", free "
            << w.map.size() - occ << ", inflated occupied " << infl << ", cloud points "
            << w.cloud.size() << "\n";
  for (std::size_t i = 0; i < w.walls.size(); ++i)
    for (const auto& r : w.walls[i].windows)
      std::cout << "wall " << i << " x [" << w.walls[i].x_min << ", " << w.walls[i].x_max << "] window y ["
                << r.y_min << ", " << r.y_max << "] z [" << r.z_min << ", " << r.z_max << "]\n";
  return kExitOk;
}

int cmd_plan(const std::string& world_path, const PlannerFlags& pf, const std::vector<double>& start,
             const std::vector<double>& goal, const std::string& out, const std::string& csv, double dt)
{
  if (!(dt > 0))
    throw Usage("--dt must be positive");
  const PlannerConfig cfg = pf.config();
  const World world = load_world(world_path);
  const Vec3 s = to_vec(start, "--start"), g = to_vec(goal, "--goal");
  for (const Vec3* p : {&s, &g})
    if (!world.contains(*p))
      throw Usage("start and goal must lie inside the world bounds");
  Planner planner(world, cfg);
  PlanResult r;
  try
  {
    r = planner.plan(FlatState{s, Vec3::Zero(), Vec3::Zero(), Vec3::Zero()},
                     FlatState{g, Vec3::Zero(), Vec3::Zero(), Vec3::Zero()});
  }
  catch (const InvalidArgument& e)
  {
    throw Usage(e.what());
  }
  Json j = to_json(r);
  j["config"] = to_json(cfg);
  if (!out.empty())
    write_text(out, j.dump(1) + "\n");
  if (!csv.empty() && r.status == PlanStatus::solved)
  {
    std::ofstream f(csv);
    write_csv(f, r.trajectory, cfg.effective_model(), dt);
  }
  std::cout << to_string(r.status) << " J=" << r.j_total << " duration=" << r.execution_time
            << " s planning=" << r.planning_time << " s expansions=" << r.expansions << "\n";
  switch (r.status)
  {
    case PlanStatus::solved: return kExitOk;
    case PlanStatus::timeout: return kExitTimeout;
    case PlanStatus::exhausted: return kExitExhausted;
  }
  return kExitExhausted;
}

int cmd_bench(const ScenarioFlags& sf, const PlannerFlags& pf, int trials, std::uint64_t seed,
              bool fixed_world, const std::string& out, const std::string& timing, const std::string& csv)
{
  BenchSpec b;
  b.scenario = sf.spec();
  b.config = pf.config(b.config);
  b.n_trials = trials;
  b.seed = seed;
  b.vary_world = !fixed_world;
  try
  {
    b.validate();
  }
  catch (const InvalidArgument& e)
  {
    throw Usage(e.what());
  }
  const int threads = bench_threads();
  const auto res = run_bench(b, threads, [](const BenchTrial& t) {
    std::cerr << "trial " << t.index << ": " << (t.error.empty() ? to_string(t.status) : t.error.c_str())
              << " (" << t.planning_time << " s)\n";
  });
  const std::string agg = aggregate_json(b, res).dump(1) + "\n";
  if (out.empty())
    std::cout << agg;
  else
    write_text(out, agg);
  if (!timing.empty())
    write_text(timing, timing_json(res).dump(1) + "\n");
  if (!csv.empty())
  {
    std::ofstream f(csv);
    write_trials_csv(f, res);
  }
  const BenchRow row = summarize(res);
  std::cerr << "success " << row.successes << "/" << row.n_trials << " (" << row.success_rate << "%)\n";
  return kExitOk;
}

int cmd_export(const std::string& result, const PlannerFlags& pf, double dt, const std::string& out)
{
  if (!(dt > 0))
    throw Usage("--dt must be positive");
  const Json j = read_json(result);
  if (!j.contains("trajectory"))
    throw Usage(result + " has no trajectory");
  const PiecewiseTrajectory t = trajectory_from_json(j.at("trajectory"));
  if (t.empty())
    throw Usage(result + " holds an empty trajectory");
  PlannerConfig base = bench_config();
  if (j.contains("config"))
    base = planner_config_from_json(j.at("config"));
  const QuadModel m = pf.config(base).effective_model();
  if (out.empty())
    write_csv(std::cout, t, m, dt);
  else
  {
    std::ofstream f(out);
    write_csv(f, t, m, dt);
  }
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv)
{
  CLI::App app{"Interleaved search and trajectory optimization for quadrotors"};
  app.require_subcommand(1);

  auto* gen = app.add_subcommand("gen-env", "generate a walls-and-windows world");
  ScenarioFlags gen_flags;
  gen_flags.add(gen);
  std::string gen_out;
  gen->add_option("--out", gen_out, "world file")->required();

  auto* plan = app.add_subcommand("plan", "plan one start/goal pair");
  PlannerFlags plan_flags;
  plan_flags.add(plan);
  std::string world_path, plan_out, plan_csv;
  std::vector<double> start, goal;
  double plan_dt = 0.05;
  plan->add_option("--world", world_path, "world file")->required();
  plan->add_option("--start", start, "x y z")->expected(3)->required();
  plan->add_option("--goal", goal, "x y z")->expected(3)->required();
  plan->add_option("--out", plan_out, "result JSON");
  plan->add_option("--csv", plan_csv, "trajectory CSV");
  plan->add_option("--dt", plan_dt, "CSV sample step, s");

  auto* bench = app.add_subcommand("bench", "seeded benchmark campaign");
  ScenarioFlags bench_sf;
  PlannerFlags bench_pf;
  bench_sf.add(bench);
  bench_pf.add(bench);
  int trials = 20;
  std::uint64_t master = 1;
  bool fixed_world = false;
  std::string bench_out, bench_timing, bench_csv;
  bench->add_option("--trials", trials, "number of trials");
  bench->add_option("--master-seed", master, "seed for trial worlds and start/goal pairs");
  bench->add_flag("--fixed-world", fixed_world, "use the scenario seed for every trial");
  bench->add_option("--out", bench_out, "aggregate JSON (stdout if omitted)");
  bench->add_option("--timing", bench_timing, "planning-time JSON");
  bench->add_option("--csv", bench_csv, "per-trial CSV");

  auto* exp = app.add_subcommand("export", "resample a planned trajectory");
  PlannerFlags exp_flags;
  exp_flags.add(exp);
  std::string exp_in, exp_out;
  double exp_dt = 0.05;
  exp->add_option("--result", exp_in, "result JSON from plan")->required();
  exp->add_option("--dt", exp_dt, "sample step, s");
  exp->add_option("--out", exp_out, "CSV (stdout if omitted)");

  try
  {
    app.parse(argc, argv);
  }
  catch (const CLI::ParseError& e)
  {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try
  {
    if (*gen)
      return cmd_gen_env(gen_flags, gen_out);
    if (*plan)
      return cmd_plan(world_path, plan_flags, start, goal, plan_out, plan_csv, plan_dt);
    if (*bench)
      return cmd_bench(bench_sf, bench_pf, trials, master, fixed_world, bench_out, bench_timing, bench_csv);
    if (*exp)
      return cmd_export(exp_in, exp_flags, exp_dt, exp_out);
  }
  catch (const Usage& e)
  {
    std::cerr << "usage error: " << e.what() << "\n";
    return kExitUsage;
  }
  catch (const InvalidArgument& e)
  {
    std::cerr << "usage error: " << e.what() << "\n";
    return kExitUsage;
  }
  catch (const std::exception& e)
  {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return kExitUsage;
}
