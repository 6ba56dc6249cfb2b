#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <set>

#include "scenarios.hpp"

using namespace insat;
using scenarios::rest;

namespace
{

// Time-optimal stop of a triple integrator from speed v with |a| <= A, |j| <= J.
double min_stopping_distance(double v, double A, double J)
{
  if (v >= A * A / J)
    return 0.5 * v * (v / A + A / J);
  return v * std::sqrt(v / J);
}

// Boundary states pin position, velocity and acceleration; jerk stays free.
bool same_boundary(const FlatState& a, const FlatState& b)
{
  return (a.x - b.x).norm() < 1e-6 && (a.v - b.v).norm() < 1e-6 && (a.a - b.a).norm() < 1e-6;
}

PlannerConfig fast_config()
{
  PlannerConfig c = bench_config();
  c.timeout = 60.0;
  return c;
}

}  // namespace

TEST(Key, WeightedSum)
{
  const World w = scenarios::empty_world(Vec3(2, 2, 2));
  PlannerConfig c;
  c.epsilon = 2.0;
  Planner p(w, c);
  SearchNode n;
  n.g = 10.0;
  n.h = 2.0;
  EXPECT_DOUBLE_EQ(p.key(n), 14.0);
  n.h = 0.0;
  EXPECT_DOUBLE_EQ(p.key(n), 10.0);
  n.g = c.tunnel_cost;
  n.h = 3.0;
  EXPECT_GE(p.key(n), c.tunnel_cost);
}

TEST(Config, Validation)
{
  PlannerConfig c;
  EXPECT_NO_THROW(c.validate());
  c.epsilon = 0.5;
  EXPECT_THROW(c.validate(), InvalidArgument);
  c = PlannerConfig{};
  c.duplication_cap = 0;
  EXPECT_THROW(c.validate(), InvalidArgument);
  c = PlannerConfig{};
  c.max_tilt = 2.0;
  EXPECT_THROW(c.validate(), InvalidArgument);
  c = PlannerConfig{};
  c.tunnel_cost = std::numeric_limits<double>::infinity();
  EXPECT_THROW(c.validate(), InvalidArgument);
}

TEST(Heuristic, GoalAndStraightLine)
{
  const World w = scenarios::empty_world(Vec3(12, 2, 2));
  Planner p(w, PlannerConfig{});
  EXPECT_THROW(p.heuristic(LowState{}), InvalidArgument);
  p.set_goal(p.centre(Cell{2, 5, 5}));
  EXPECT_DOUBLE_EQ(p.heuristic(LowState{Cell{2, 5, 5}, 0, 0}), 0.0);
  // 50 cells of 0.2 m = 10 m; 500 * 10 / 10
  EXPECT_NEAR(p.heuristic(LowState{Cell{52, 5, 5}, 3, -2}), 500.0, 1e-9);
}

TEST(Heuristic, UnreachableBehindSealedWall)
{
  const World w = scenarios::sealed_wall(Vec3(6, 3, 3), 3.0, 0.2);
  Planner p(w, PlannerConfig{});
  p.set_goal(Vec3(5.1, 1.5, 1.5));
  EXPECT_TRUE(std::isinf(p.heuristic(p.project(rest(Vec3(1.1, 1.5, 1.5))))));
}

TEST(Successors, InteriorCountAndOrder)
{
  const World w = scenarios::empty_world(Vec3(4, 4, 4));
  Planner p(w, PlannerConfig{});
  const LowState s{Cell{10, 10, 10}, 0, 0};
  const auto succ = p.successors(s);
  ASSERT_EQ(succ.size(), 30u);
  // position moves in (dx, dy, dz) lexicographic order, attitude held
  int k = 0;
  for (int dx = -1; dx <= 1; ++dx)
    for (int dy = -1; dy <= 1; ++dy)
      for (int dz = -1; dz <= 1; ++dz)
      {
        if (!dx && !dy && !dz)
          continue;
        EXPECT_EQ(succ[k].cell, (Cell{10 + dx, 10 + dy, 10 + dz}));
        EXPECT_EQ(succ[k].phi, 0);
        EXPECT_EQ(succ[k].theta, 0);
        ++k;
      }
  EXPECT_EQ(succ[26], (LowState{s.cell, -1, 0}));
  EXPECT_EQ(succ[27], (LowState{s.cell, 1, 0}));
  EXPECT_EQ(succ[28], (LowState{s.cell, 0, -1}));
  EXPECT_EQ(succ[29], (LowState{s.cell, 0, 1}));
  const std::set<std::tuple<int, int, int, int, int>> uniq = [&] {
    std::set<std::tuple<int, int, int, int, int>> u;
    for (const auto& n : succ) u.insert({n.cell[0], n.cell[1], n.cell[2], n.phi, n.theta});
    return u;
  }();
  EXPECT_EQ(uniq.size(), succ.size());
}

TEST(Successors, TiltLimitAndCorner)
{
  const World w = scenarios::empty_world(Vec3(4, 4, 4));
  PlannerConfig c;
  Planner p(w, c);
  const int m = c.max_tilt_index();
  EXPECT_EQ(m, 15);
  EXPECT_EQ(p.successors(LowState{Cell{10, 10, 10}, m, 0}).size(), 29u);
  EXPECT_EQ(p.successors(LowState{Cell{10, 10, 10}, m, -m}).size(), 28u);

  // The corner cell itself is too close to the bounds for the body, so every
  // surviving neighbour must be valid and inside the grid.
  const auto corner = p.successors(LowState{Cell{2, 2, 2}, 0, 0});
  EXPECT_LT(corner.size(), 30u);
  for (const auto& n : corner)
  {
    EXPECT_TRUE(p.in_grid(n));
    EXPECT_TRUE(p.valid(n));
  }
}

TEST(Successors, WallNeighboursAbsent)
{
  const World w = scenarios::sealed_wall(Vec3(6, 3, 3), 3.0, 0.2);
  Planner p(w, PlannerConfig{});
  const LowState s = p.project(rest(Vec3(2.5, 1.5, 1.5)));
  for (const auto& n : p.successors(s))
  {
    const Vec3 c = p.centre(n.cell);
    EXPECT_FALSE(c.x() > 3.0 && c.x() < 3.2);
    EXPECT_FALSE(w.map.occupied(w.map.world_to_cell(c)));
  }
}

TEST(Lift, LevelHoverAndConstraintResidual)
{
  const World w = scenarios::empty_world(Vec3(4, 4, 4));
  PlannerConfig fixed;
  fixed.free_thrust = false;
  fixed.model.f_nom = fixed.model.mass * fixed.model.gravity;
  Planner pf(w, fixed);
  const WaypointSpec level = pf.lift(LowState{Cell{5, 6, 7}, 0, 0});
  EXPECT_TRUE(level.fixed[2]);
  EXPECT_LT(level.value[2].norm(), 1e-12);
  EXPECT_FALSE(level.fixed[1]);
  EXPECT_FALSE(level.fixed[3]);
  EXPECT_TRUE(level.position().isApprox(pf.centre(Cell{5, 6, 7})));

  // phi = 0.5
  const WaypointSpec rolled = pf.lift(LowState{Cell{5, 6, 7}, 5, 0});
  const ConstraintSystem cs = constraint_system(attitude_to_thrust_dir(Attitude(0.5, 0.0)), 9.81);
  EXPECT_LT((cs.W * rolled.value[2] - cs.d).norm(), 1e-10);

  // With free thrust the acceleration is tied to the thrust line only.
  Planner p(w, PlannerConfig{});
  const WaypointSpec coupled = p.lift(LowState{Cell{5, 6, 7}, 5, -3});
  ASSERT_TRUE(coupled.coupling.has_value());
  const Vec3 z = attitude_to_thrust_dir(Attitude(0.5, -0.3)).vec();
  EXPECT_LT((coupled.coupling->z - z).norm(), 1e-12);
  const ConstraintSystem cs2 = constraint_system(ThrustDir(z), coupled.coupling->gravity);
  for (double lambda : {2.0, 9.81, 15.0})
    EXPECT_LT((cs2.W * (lambda * z - 9.81 * kWorldUp) - cs2.d).norm(), 1e-10);
  ASSERT_TRUE(coupled.attitude.has_value());
  EXPECT_NEAR(coupled.attitude->phi(), 0.5, 1e-12);
  EXPECT_NEAR(coupled.attitude->theta(), -0.3, 1e-12);
}

TEST(Lift, GoalConsistency)
{
  const World w = scenarios::empty_world(Vec3(4, 4, 4));
  PlannerConfig c;
  c.free_thrust = false;
  c.model.f_nom = c.model.mass * c.model.gravity;
  Planner p(w, c);
  const Vec3 g = p.centre(Cell{12, 9, 8});
  const WaypointSpec lw = p.lift(p.project(rest(g)));
  EXPECT_LT((lw.position() - g).norm(), 1e-9);
  EXPECT_LT(lw.value[2].norm(), 1e-9);
}

TEST(GenerateTrajectory, DirectInEmptyWorld)
{
  const World w = scenarios::empty_world(Vec3(6, 4, 4));
  Planner p(w, PlannerConfig{});
  const FlatState s = rest(p.centre(Cell{5, 10, 10})), g = rest(p.centre(Cell{25, 10, 10}));
  p.prepare(s, g);
  SearchNode root;
  root.state = p.project(s);
  root.traj.waypoints.push_back(WaypointSpec::fixed_state(s, WaypointSource::start));
  const LowState n{Cell{6, 11, 10}, 1, 0};
  const GeneratedTrajectory gen = p.generate_trajectory(root, n);
  ASSERT_FALSE(gen.blocked);
  EXPECT_EQ(gen.tag, TrajTag::direct);
  EXPECT_EQ(gen.wp_index, 1u);
  EXPECT_LT((gen.traj.waypoint_state(1).x - p.centre(n.cell)).norm(), 1e-6);
  EXPECT_TRUE(same_boundary(gen.traj.waypoint_state(0), s));
  EXPECT_TRUE(same_boundary(gen.traj.waypoint_state(gen.traj.size()), g));
  // roll 0.1 at the waypoint
  const Attitude att = attitude_from_acceleration(gen.traj.waypoint_state(1).a, p.config().effective_model());
  EXPECT_NEAR(att.phi(), 0.1, 1e-6);
  EXPECT_NEAR(att.theta(), 0.0, 1e-6);
  // a second generation of the same state reuses the direct attempt
  EXPECT_TRUE(p.generate_trajectory(root, n).cached);
}

TEST(GenerateTrajectory, RepairThroughWindow)
{
  const World w = scenarios::single_window(3);
  const PlannerConfig cfg;
  Planner p(w, cfg);
  const QuadModel model = cfg.effective_model();
  const LowState win = p.project(rest(scenarios::window_centre(w)));
  const Vec3 wc = p.centre(win.cell);
  const FlatState s = rest(wc - Vec3(2.6, 1.6, 0.0)), g = rest(wc + Vec3(2.0, 0.0, 0.0));
  p.prepare(s, g);

  // Parent chain lined up with the window: start, level waypoint, level cell.
  const Vec3 pre = wc - Vec3(1.4, 0.0, 0.0);
  WaypointSpec a = WaypointSpec::position_only(pre - Vec3(0.8, 0.0, 0.0), WaypointSource::search);
  a.coupling = AccelCoupling{kWorldUp, model.gravity};
  const LowState pre_low = p.project(rest(pre));
  auto parent_traj = p.optimize({WaypointSpec::fixed_state(s, WaypointSource::start), a, p.lift(pre_low),
                                 WaypointSpec::fixed_state(g, WaypointSource::goal)});
  ASSERT_TRUE(parent_traj.has_value());
  ASSERT_TRUE(p.prefix_feasible(*parent_traj, 2));
  SearchNode parent;
  parent.state = pre_low;
  parent.traj = *parent_traj;
  parent.wp_index = 2;
  parent.tag = TrajTag::repaired;

  LowState n = win;
  n.phi = 4;  // 0.4 rad: the level body does not fit
  EXPECT_FALSE(pose_collision_free(w, cfg.shape, wc, Attitude()));
  EXPECT_TRUE(pose_collision_free(w, cfg.shape, wc, Attitude(0.4, 0.0)));
  const GeneratedTrajectory gen = p.generate_trajectory(parent, n);
  ASSERT_FALSE(gen.blocked);
  EXPECT_EQ(gen.tag, TrajTag::repaired);
  const double t_n = gen.traj.waypoint_times()[gen.wp_index];
  EXPECT_FALSE(check_inputs(gen.traj, cfg.limits, model, t_n).has_value());
  EXPECT_FALSE(collision_free(gen.traj, w, cfg.shape, model, t_n, cfg.collision_dt).has_value());
  EXPECT_LT((gen.traj.waypoint_state(gen.wp_index).x - wc).norm(), 1e-6);
  EXPECT_TRUE(same_boundary(gen.traj.waypoint_state(0), s));
  // the spliced trajectory keeps C3 continuity at every junction
  for (std::size_t i = 1; i < gen.traj.size(); ++i)
  {
    const Segment& l = gen.traj.segments[i - 1];
    const Segment& r = gen.traj.segments[i];
    for (int k = 0; k <= 3; ++k)
      EXPECT_LT((l.eval(l.duration, k) - r.eval(0.0, k)).norm(), 1e-6 * std::max(1.0, r.eval(0.0, k).norm()));
  }
}

TEST(GenerateTrajectory, TunnelWhenSmoothAttemptsViolateLimits)
{
  const World w = scenarios::empty_world(Vec3(6, 4, 4));
  PlannerConfig cfg;
  cfg.limits.v_max = 0.5;
  Planner p(w, cfg);
  const FlatState s = rest(p.centre(Cell{5, 10, 10})), g = rest(p.centre(Cell{25, 10, 10}));
  p.prepare(s, g);
  SearchNode root;
  root.state = p.project(s);
  root.traj.waypoints.push_back(WaypointSpec::fixed_state(s, WaypointSource::start));
  const GeneratedTrajectory gen = p.generate_trajectory(root, LowState{Cell{6, 10, 10}, 0, 0});
  ASSERT_FALSE(gen.blocked);
  EXPECT_EQ(gen.tag, TrajTag::tunnel);
  EXPECT_FALSE(check_inputs(gen.traj, cfg.limits, cfg.effective_model()).has_value());
  const FlatState end = gen.traj.waypoint_state(gen.wp_index);
  EXPECT_LT((end.x - p.centre(Cell{6, 10, 10})).norm(), 1e-6);
  EXPECT_LT(end.v.norm(), 1e-6);

  // In the search such nodes carry the sentinel cost.
  cfg.max_expansions = 2;
  Planner q(w, cfg);
  q.plan(s, g);
  bool seen = false;
  for (const auto& n : q.nodes())
    if (n.tag == TrajTag::tunnel && std::isfinite(n.g))
    {
      seen = true;
      EXPECT_EQ(n.g, cfg.tunnel_cost);
      EXPECT_GE(q.key(n), cfg.tunnel_cost);
    }
  EXPECT_TRUE(seen);
}

TEST(Tunnel, AtRestContained)
{
  const World w = scenarios::empty_world(Vec3(4, 4, 4));
  PlannerConfig cfg;
  Planner p(w, cfg);
  const LowState m_low{Cell{10, 10, 10}, 0, 0}, n{Cell{11, 10, 10}, 0, 0};
  const TunnelResult t = p.tunnel_trajectory(rest(p.centre(m_low.cell)), m_low, n);
  ASSERT_TRUE(t.ok);
  EXPECT_TRUE(t.contained);
  EXPECT_EQ(t.stop_distance, 0.0);
  ASSERT_EQ(t.segments.size(), 1u);
  const Segment& s = t.segments[0];
  EXPECT_LT((s.eval(0.0, 0) - p.centre(m_low.cell)).norm(), 1e-9);
  EXPECT_LT((s.eval(s.duration, 0) - p.centre(n.cell)).norm(), 1e-9);
  EXPECT_LT(s.eval(s.duration, 1).norm(), 1e-9);
  // straight line: no motion off the edge
  for (int i = 0; i <= 50; ++i)
  {
    const Vec3 x = s.eval(s.duration * i / 50.0, 0);
    EXPECT_NEAR(x.y(), p.centre(n.cell).y(), 1e-9);
    EXPECT_NEAR(x.z(), p.centre(n.cell).z(), 1e-9);
  }
}

TEST(Tunnel, FullSpeedStopLeavesTheTunnel)
{
  const World w = scenarios::empty_world(Vec3(12, 4, 4));
  PlannerConfig cfg;
  Planner p(w, cfg);
  const LowState m_low{Cell{10, 10, 10}, 0, 0}, n{Cell{11, 10, 10}, 0, 0};
  const FlatState m{p.centre(m_low.cell), Vec3(cfg.limits.v_max, 0, 0), Vec3::Zero(), Vec3::Zero()};
  const TunnelResult t = p.tunnel_trajectory(m, m_low, n);
  ASSERT_FALSE(t.segments.empty());
  EXPECT_FALSE(t.contained);
  const double oracle = min_stopping_distance(cfg.limits.v_max, cfg.limits.a_max, cfg.limits.j_max);
  EXPECT_NEAR(oracle, 4.5, 1e-12);
  EXPECT_GE(t.stop_distance, oracle - 1e-9);
  EXPECT_LE(t.stop_distance, cfg.limits.v_max * t.segments[0].duration);
  PiecewiseTrajectory stop;
  stop.segments.push_back(t.segments[0]);
  EXPECT_FALSE(check_inputs(stop, cfg.limits, cfg.effective_model()).has_value());

  // The planner treats such an edge as blocked.
  const FlatState s = m, g = rest(p.centre(Cell{40, 10, 10}));
  p.prepare(s, g);
  SearchNode parent;
  parent.state = m_low;
  parent.traj.waypoints.push_back(WaypointSpec::fixed_state(s, WaypointSource::start));
  const LowState back{Cell{9, 10, 10}, 0, 0};
  const GeneratedTrajectory gen = p.generate_trajectory(parent, back);
  if (gen.tag == TrajTag::tunnel)
  {
    EXPECT_TRUE(gen.blocked);
  }
}

TEST(Prepare, RejectsCollidingOrNonFiniteBoundary)
{
  const World w = scenarios::sealed_wall(Vec3(6, 3, 3), 3.0, 0.2);
  Planner p(w, PlannerConfig{});
  EXPECT_THROW(p.prepare(rest(Vec3(3.1, 1.5, 1.5)), rest(Vec3(5.1, 1.5, 1.5))), InvalidArgument);
  FlatState bad = rest(Vec3(1.1, 1.5, 1.5));
  bad.v.x() = std::nan("");
  EXPECT_THROW(p.prepare(bad, rest(Vec3(5.1, 1.5, 1.5))), InvalidArgument);
}

TEST(Plan, StartEqualsGoal)
{
  const World w = scenarios::empty_world(Vec3(4, 4, 4));
  Planner p(w, fast_config());
  const FlatState s = rest(p.centre(Cell{10, 10, 10}));
  const PlanResult r = p.plan(s, s);
  ASSERT_EQ(r.status, PlanStatus::solved);
  EXPECT_LE(r.expansions, 1);
  EXPECT_LT(r.trajectory.j_control(), 1e-9);
  EXPECT_LT((r.trajectory.evaluate(r.execution_time, 0) - s.x).norm(), 1e-9);
}

TEST(Plan, EmptyCorridorMatchesClosedForm)
{
  const World w = scenarios::empty_world(Vec3(12, 2, 2));
  const PlannerConfig cfg = fast_config();
  Planner p(w, cfg);
  const FlatState s = rest(Vec3(1.1, 1.1, 1.1)), g = rest(Vec3(11.1, 1.1, 1.1));
  const PlanResult r = p.plan(s, g);
  ASSERT_EQ(r.status, PlanStatus::solved);
  const double d = 10.0, T = std::pow(3600.0 * d * d / cfg.gamma, 1.0 / 6.0);
  const double J = 720.0 * d * d / std::pow(T, 5) + cfg.gamma * T;
  EXPECT_NEAR(r.j_total, J, 0.05 * J);
  EXPECT_NEAR(r.execution_time, r.trajectory.duration(), 0.0);
  EXPECT_FALSE(audit(r.trajectory, cfg.limits, cfg.effective_model(), w, cfg.shape, cfg.collision_dt));
}

TEST(Plan, SealedWallIsExhausted)
{
  const World w = scenarios::sealed_wall(Vec3(6, 3, 3), 3.0, 0.2);
  Planner p(w, fast_config());
  const PlanResult r = p.plan(rest(Vec3(1.1, 1.5, 1.5)), rest(Vec3(5.1, 1.5, 1.5)));
  EXPECT_EQ(r.status, PlanStatus::exhausted);
  EXPECT_TRUE(std::isinf(r.start_h));
  EXPECT_TRUE(std::isinf(r.j_total));
}

TEST(Plan, ExpansionBudgetReportsTimeout)
{
  const World w = scenarios::single_window(1);
  PlannerConfig cfg = fast_config();
  cfg.max_expansions = 1;
  cfg.epsilon = 1.0;
  Planner p(w, cfg);
  const Vec3 wc = scenarios::window_centre(w);
  const PlanResult r = p.plan(rest(p.centre(p.project(rest(wc - Vec3(2.0, -1.0, 0))).cell)),
                              rest(p.centre(p.project(rest(wc + Vec3(2.0, 0, 0))).cell)));
  EXPECT_EQ(r.status, PlanStatus::timeout);
  EXPECT_EQ(r.expansions, 1);
}

class SolvedWindow : public ::testing::Test
{
protected:
  static void SetUpTestSuite()
  {
    world_ = new World(scenarios::single_window(1));
    cfg_ = fast_config();
    const Vec3 wc = scenarios::window_centre(*world_);
    Planner p(*world_, cfg_);
    start_ = rest(p.centre(p.project(rest(wc + Vec3(-2.0, 1.0, 0.0))).cell));
    goal_ = rest(p.centre(p.project(rest(wc + Vec3(2.0, 0.0, 0.0))).cell));
    planner_ = new Planner(*world_, cfg_);
    result_ = new PlanResult(planner_->plan(start_, goal_));
  }
  static void TearDownTestSuite()
  {
    delete result_;
    delete planner_;
    delete world_;
  }

  static World* world_;
  static Planner* planner_;
  static PlanResult* result_;
  static PlannerConfig cfg_;
  static FlatState start_, goal_;
};

World* SolvedWindow::world_ = nullptr;
Planner* SolvedWindow::planner_ = nullptr;
PlanResult* SolvedWindow::result_ = nullptr;
PlannerConfig SolvedWindow::cfg_;
FlatState SolvedWindow::start_, SolvedWindow::goal_;

TEST_F(SolvedWindow, BoundaryStatesAndAudit)
{
  const PlanResult& r = *result_;
  ASSERT_EQ(r.status, PlanStatus::solved);
  EXPECT_TRUE(same_boundary(r.trajectory.waypoint_state(0), start_));
  EXPECT_TRUE(same_boundary(r.trajectory.waypoint_state(r.trajectory.size()), goal_));
  EXPECT_FALSE(audit(r.trajectory, cfg_.limits, cfg_.effective_model(), *world_, cfg_.shape, cfg_.collision_dt));
  EXPECT_DOUBLE_EQ(r.execution_time, r.trajectory.duration());
  EXPECT_NEAR(r.j_total, total_cost(r.trajectory, cfg_.gamma), 1e-9 * r.j_total);
  // the goal position lies inside the goal region
  EXPECT_LE((r.trajectory.evaluate(r.execution_time, 0) - goal_.x).norm(), cfg_.goal_pos_tol);
}

TEST_F(SolvedWindow, HeuristicBelowCostAndMonotoneCandidates)
{
  const PlanResult& r = *result_;
  ASSERT_EQ(r.status, PlanStatus::solved);
  EXPECT_LE(r.start_h, r.j_total);
  ASSERT_FALSE(r.goal_history.empty());
  EXPECT_DOUBLE_EQ(r.goal_history.back(), r.j_total);
  for (std::size_t i = 1; i < r.goal_history.size(); ++i) EXPECT_LE(r.goal_history[i], r.goal_history[i - 1] + 1e-9);
}

TEST_F(SolvedWindow, NodeCostsMatchTheirTrajectories)
{
  int checked = 0;
  for (const auto& n : planner_->nodes())
  {
    if (!std::isfinite(n.g) || n.tag == TrajTag::tunnel)
      continue;
    EXPECT_NEAR(n.g, cost_prefix(n.traj, n.t_n(), cfg_.gamma), 1e-6 * std::max(1.0, n.g));
    ++checked;
  }
  EXPECT_GT(checked, 1);
}

TEST_F(SolvedWindow, Deterministic)
{
  Planner again(*world_, cfg_);
  const PlanResult r2 = again.plan(start_, goal_);
  const PlanResult& r = *result_;
  EXPECT_EQ(r.status, r2.status);
  EXPECT_EQ(r.expansions, r2.expansions);
  EXPECT_EQ(r.qp_solves, r2.qp_solves);
  EXPECT_EQ(r.nodes, r2.nodes);
  EXPECT_EQ(r.goal_history, r2.goal_history);
  EXPECT_EQ(to_json(r.trajectory).dump(), to_json(r2.trajectory).dump());
}

TEST(Duplication, GenerationsAndCap)
{
  for (int cap : {2, 3})
  {
    auto t = scenarios::swing_tube(cap);
    Planner p(t.world, t.config);
    const PlanResult r = p.plan(t.start, t.goal);
    int max_gen = 0;
    for (const auto& n : p.nodes())
    {
      max_gen = std::max(max_gen, n.generation);
      if (n.generation > 1)
      {
        ASSERT_GE(n.previous, 0);
        const SearchNode& prev = p.nodes()[n.previous];
        EXPECT_EQ(prev.state, n.state);
        EXPECT_EQ(prev.generation, n.generation - 1);
        EXPECT_TRUE(prev.closed);
      }
    }
    EXPECT_GT(r.duplicates, 0);
    EXPECT_EQ(max_gen, cap);
  }
}

TEST(Duplication, RevisitScenarioNeedsDuplicates)
{
  auto with = scenarios::swing_tube(3);
  Planner p(with.world, with.config);
  const PlanResult r = p.plan(with.start, with.goal);
  ASSERT_EQ(r.status, PlanStatus::solved);
  EXPECT_FALSE(audit(r.trajectory, with.config.limits, with.config.effective_model(), with.world,
                     with.config.shape, with.config.collision_dt));
  // the solution node chain passes some cell more than once
  std::set<int> xs;
  bool revisit = false;
  for (const auto& s : r.path) revisit |= !xs.insert(s.cell[0]).second;
  EXPECT_TRUE(revisit);

  auto without = scenarios::swing_tube(1);
  Planner q(without.world, without.config);
  const PlanResult r1 = q.plan(without.start, without.goal);
  EXPECT_EQ(r1.status, PlanStatus::exhausted);
  EXPECT_EQ(r1.duplicates, 0);
}

TEST(Plan, ExpandHookSeesEveryExpansion)
{
  const World w = scenarios::single_window(2);
  PlannerConfig cfg = fast_config();
  cfg.max_expansions = 5;
  Planner p(w, cfg);
  long calls = 0;
  p.on_expand = [&](const SearchNode& n, const PlanResult& r) {
    ++calls;
    EXPECT_TRUE(n.closed);
    EXPECT_EQ(r.expansions, calls);
  };
  const Vec3 wc = scenarios::window_centre(w);
  const PlanResult r = p.plan(rest(p.centre(p.project(rest(wc - Vec3(2.0, -1.0, 0))).cell)),
                              rest(p.centre(p.project(rest(wc + Vec3(2.0, 0, 0))).cell)));
  EXPECT_EQ(calls, r.expansions);
}
