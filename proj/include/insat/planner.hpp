#pragma once

// Interleaved search and trajectory optimization: weighted A* over a 5-d grid
// (position cell, roll, pitch) whose nodes carry full high-dimensional
// trajectories from the start through the node to the goal.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <functional>
#include <limits>
#include <numbers>
#include <optional>
#include <queue>
#include <string>
#include <tuple>
#include <unordered_map>
#include <vector>

#include "insat/feasibility.hpp"
#include "insat/polyopt.hpp"
#include "insat/trajectory.hpp"
#include "insat/world.hpp"

namespace insat
{

struct LowState
{
  Cell cell{0, 0, 0};
  int phi = 0;    // roll index, angle = phi * dTheta
  int theta = 0;  // pitch index

  bool operator==(const LowState&) const = default;
};

struct LowStateHash
{
  std::size_t operator()(const LowState& s) const
  {
    std::uint64_t h = 1469598103934665603ull;
    for (int v : {s.cell[0], s.cell[1], s.cell[2], s.phi, s.theta})
    {
      h ^= static_cast<std::uint64_t>(static_cast<std::uint32_t>(v));
      h *= 1099511628211ull;
    }
    return static_cast<std::size_t>(h);
  }
};

enum class TrajTag
{
  start,
  direct,
  repaired,
  tunnel
};

inline const char* to_string(TrajTag t)
{
  switch (t)
  {
    case TrajTag::start: return "start";
    case TrajTag::direct: return "direct";
    case TrajTag::repaired: return "repaired";
    case TrajTag::tunnel: return "tunnel";
  }
  return "?";
}

inline constexpr double kInf = std::numeric_limits<double>::infinity();

struct SearchNode
{
  int id = -1;
  LowState state;
  int generation = 1;
  int previous = -1;  // earlier generation of the same state
  double g = kInf;
  double h = kInf;
  int parent = -1;
  PiecewiseTrajectory traj;  // start .. this node's waypoint (.. goal unless tunnel)
  std::size_t wp_index = 0;  // this node's waypoint in traj
  TrajTag tag = TrajTag::start;
  bool closed = false;

  double t_n() const { return traj.empty() ? 0.0 : traj.waypoint_times()[wp_index]; }
};

struct PlannerConfig
{
  double epsilon = 2.0;
  double gamma = 500.0;
  double dx = 0.2;       // m
  double dtheta = 0.1;   // rad
  double max_tilt = std::numbers::pi / 2;  // |roll|, |pitch| strictly below this
  Limits limits;
  QuadModel model;
  EllipsoidShape shape;
  PolyOptions poly;
  double collision_dt = 0.05;
  double timeout = 300.0;      // s
  long max_expansions = 0;     // 0: unlimited
  double tunnel_cost = 1e12;
  int duplication_cap = 3;     // generations per low-dim state
  int repair_cap = 32;         // repair anchors tried per successor
  bool free_thrust = true;     // lift couples acceleration to the thrust line
  bool fix_boundary_jerk = false;
  double goal_pos_tol = 0.2;   // m (1 dx)
  double goal_att_tol = 0.1;   // rad (1 dTheta)

  void validate() const
  {
    if (!(epsilon >= 1.0))
      throw InvalidArgument("epsilon must be >= 1");
    if (!(gamma >= 0.0))
      throw InvalidArgument("gamma must be non-negative");
    if (!(dx > 0.0) || !(dtheta > 0.0))
      throw InvalidArgument("grid resolutions must be positive");
    if (!(max_tilt > 0.0) || max_tilt > std::numbers::pi / 2)
      throw InvalidArgument("max_tilt must be in (0, pi/2]");
    if (!(collision_dt > 0.0))
      throw InvalidArgument("collision_dt must be positive");
    if (!(timeout > 0.0))
      throw InvalidArgument("timeout must be positive");
    if (!(tunnel_cost > 0.0) || !std::isfinite(tunnel_cost))
      throw InvalidArgument("tunnel_cost must be positive and finite");
    if (duplication_cap < 1 || repair_cap < 0 || max_expansions < 0)
      throw InvalidArgument("caps must be non-negative (duplication cap >= 1)");
    limits.validate();
    shape.validate();
    effective_model().validate();
  }

  /// Vehicle model with the thrust and body-rate limits taken from `limits`.
  QuadModel effective_model() const
  {
    QuadModel m = model;
    m.f_max = limits.f_max;
    m.omega_max = limits.omega_max;
    return m;
  }

  int max_tilt_index() const
  {
    return static_cast<int>(std::ceil(max_tilt / dtheta - 1e-9)) - 1;
  }
};

enum class PlanStatus
{
  solved,
  timeout,
  exhausted
};

inline const char* to_string(PlanStatus s)
{
  switch (s)
  {
    case PlanStatus::solved: return "solved";
    case PlanStatus::timeout: return "timeout";
    case PlanStatus::exhausted: return "exhausted";
  }
  return "?";
}

struct PlanResult
{
  PlanStatus status = PlanStatus::exhausted;
  PiecewiseTrajectory trajectory;
  double j_total = kInf;
  double planning_time = 0.0;   // s, wall clock
  double execution_time = 0.0;  // s, sum of segment durations
  long expansions = 0;
  long qp_solves = 0;
  long nodes = 0;
  long duplicates = 0;
  long tunnels = 0;
  long repairs = 0;
  long directs = 0;
  double start_h = kInf;
  std::vector<double> goal_history;  // J_total of every accepted goal candidate
  std::vector<LowState> path;        // low-dim states of the solution node chain
};

struct GeneratedTrajectory
{
  PiecewiseTrajectory traj;
  std::size_t wp_index = 0;
  TrajTag tag = TrajTag::direct;
  bool blocked = false;
  bool cached = false;  // same direct trajectory as an earlier generation
};

struct TunnelResult
{
  std::vector<Segment> segments;         // after the anchor state
  std::vector<WaypointSpec> waypoints;   // end of each segment
  bool ok = false;
  bool contained = false;
  double stop_distance = 0.0;            // deceleration phase displacement
};

class Planner
{
public:
  Planner(const World& world, PlannerConfig cfg) : world_(world), cfg_(std::move(cfg))
  {
    cfg_.validate();
    model_ = cfg_.effective_model();
    const Vec3 ext = world_.upper() - world_.lower();
    for (int a = 0; a < 3; ++a)
      dims_[a] = std::max(1, static_cast<int>(std::floor(ext[a] / cfg_.dx + 1e-9)));
  }

  /// Called after each node is closed, before its successors are generated.
  std::function<void(const SearchNode&, const PlanResult&)> on_expand;

  const PlannerConfig& config() const { return cfg_; }
  const World& world() const { return world_; }
  const std::vector<SearchNode>& nodes() const { return nodes_; }

  // --- low-dimensional grid ------------------------------------------------

  bool in_grid(const LowState& s) const
  {
    const int m = cfg_.max_tilt_index();
    for (int a = 0; a < 3; ++a)
      if (s.cell[a] < 0 || s.cell[a] >= dims_[a])
        return false;
    return std::abs(s.phi) <= m && std::abs(s.theta) <= m;
  }

  Vec3 centre(const Cell& c) const
  {
    return world_.lower() + cfg_.dx * Vec3(c[0] + 0.5, c[1] + 0.5, c[2] + 0.5);
  }

  Attitude attitude(const LowState& s) const
  {
    return Attitude(s.phi * cfg_.dtheta, s.theta * cfg_.dtheta);
  }

  /// Low-dim projection of a high-dim state: position cell, attitude from acceleration.
  LowState project(const FlatState& x) const
  {
    LowState s;
    for (int a = 0; a < 3; ++a)
      s.cell[a] = static_cast<int>(std::floor((x.x[a] - world_.lower()[a]) / cfg_.dx + 1e-9));
    const Attitude att = attitude_from_acceleration(x.a, model_);
    s.phi = static_cast<int>(std::lround(att.phi() / cfg_.dtheta));
    s.theta = static_cast<int>(std::lround(att.theta() / cfg_.dtheta));
    return s;
  }

  bool valid(const LowState& s) const
  {
    if (!in_grid(s))
      return false;
    const Vec3 p = centre(s.cell);
    if (!world_.contains(p))
      return false;
    return level1_free(world_, cfg_.shape, p) || level2_free(world_, cfg_.shape, p, attitude(s));
  }

  /// 26 position moves with attitude held, then +-1 roll and +-1 pitch.
  std::vector<LowState> successors(const LowState& s) const
  {
    std::vector<LowState> out;
    for (int dx = -1; dx <= 1; ++dx)
      for (int dy = -1; dy <= 1; ++dy)
        for (int dz = -1; dz <= 1; ++dz)
        {
          if (!dx && !dy && !dz)
            continue;
          LowState n = s;
          n.cell = {s.cell[0] + dx, s.cell[1] + dy, s.cell[2] + dz};
          if (valid(n))
            out.push_back(n);
        }
    for (auto [dp, dt] : {std::pair{-1, 0}, std::pair{1, 0}, std::pair{0, -1}, std::pair{0, 1}})
    {
      LowState n = s;
      n.phi += dp;
      n.theta += dt;
      if (valid(n))
        out.push_back(n);
    }
    return out;
  }

  double key(const SearchNode& n) const { return n.g + cfg_.epsilon * n.h; }

  void set_goal(const Vec3& goal_position)
  {
    const auto gc = world_.map.try_world_to_cell(goal_position);
    if (!gc)
      throw OutOfBounds("goal outside the world");
    field_ = dijkstra_field(world_.map, *gc);
  }

  double heuristic(const LowState& s) const
  {
    if (field_.empty())
      throw InvalidArgument("heuristic queried before set_goal");
    const auto c = world_.map.try_world_to_cell(centre(s.cell));
    if (!c)
      return kInf;
    const double d = field_[world_.map.index(*c)];
    return std::isfinite(d) ? cfg_.gamma * d / cfg_.limits.v_max : kInf;
  }

  /// Waypoint at the cell centre with acceleration tied to the state's attitude.
  WaypointSpec lift(const LowState& s) const
  {
    WaypointSpec w = WaypointSpec::position_only(centre(s.cell), WaypointSource::search);
    const Attitude att = attitude(s);
    w.attitude = att;
    if (cfg_.free_thrust)
      w.coupling = AccelCoupling{attitude_to_thrust_dir(att).vec(), model_.gravity};
    else
    {
      w.fixed[2] = true;
      w.value[2] = constrained_acceleration(att, model_);
    }
    return w;
  }

  // --- trajectory generation -----------------------------------------------

  /// Optimized times and coefficients through wps; nullopt if the QP is singular.
  std::optional<PiecewiseTrajectory> optimize(const std::vector<WaypointSpec>& wps)
  {
    try
    {
      const auto T0 = trapezoid_durations(wps, cfg_.limits.v_max, cfg_.limits.a_max, cfg_.poly.t_min);
      auto [traj, rep] = optimize_times(wps, T0, cfg_.gamma, cfg_.poly);
      stats_.qp_solves += rep.time_iterations + 1;
      return std::move(traj);
    }
    catch (const InfeasibleQp&)
    {
      ++stats_.qp_solves;
      return std::nullopt;
    }
  }

  bool prefix_feasible(const PiecewiseTrajectory& traj, std::size_t wp) const
  {
    const double t_n = traj.waypoint_times()[wp];
    if (check_inputs(traj, cfg_.limits, model_, t_n))
      return false;
    return !collision_free(traj, world_, cfg_.shape, model_, t_n, cfg_.collision_dt);
  }

  bool fully_feasible(const PiecewiseTrajectory& traj) const
  {
    return !audit(traj, cfg_.limits, model_, world_, cfg_.shape, cfg_.collision_dt);
  }

  GeneratedTrajectory generate_trajectory(const SearchNode& parent, const LowState& succ)
  {
    const WaypointSpec n = lift(succ);
    // The direct attempt does not depend on the parent, so it is solved once per state.
    auto cached = direct_cache_.find(succ);
    const bool hit = cached != direct_cache_.end();
    if (!hit)
    {
      auto r = optimize({start_spec_, n, goal_spec_});
      if (r && !prefix_feasible(*r, 1))
        r.reset();
      cached = direct_cache_.emplace(succ, std::move(r)).first;
    }
    if (cached->second)
    {
      ++stats_.directs;
      return {*cached->second, 1, TrajTag::direct, false, hit};
    }
    // Repair: re-plan the tail from successively later waypoints of the parent.
    const std::size_t last = std::min<std::size_t>(parent.wp_index, static_cast<std::size_t>(cfg_.repair_cap));
    for (std::size_t w = 1; w <= last && !parent.traj.empty(); ++w)
    {
      if (expired())
        break;
      const WaypointSpec m = anchor_spec(parent.traj, w);
      auto r = optimize({m, n, goal_spec_});
      if (!r || !prefix_feasible(*r, 1))
        continue;
      PiecewiseTrajectory full = concatenate(parent.traj.truncated(w), *r);
      const std::size_t idx = w + 1;
      full = refine_warm_start(
          full, cfg_.gamma, [&](const PiecewiseTrajectory& t) { return prefix_feasible(t, idx); },
          cfg_.poly);
      ++stats_.repairs;
      return {std::move(full), idx, TrajTag::repaired, false};
    }
    // Tunnel from the parent's own waypoint.
    const FlatState m = parent.traj.empty() ? start_state_ : parent.traj.waypoint_state(parent.wp_index);
    const LowState m_low = parent.state;
    TunnelResult tun = tunnel_trajectory(m, m_low, succ);
    if (!tun.ok || !tun.contained)
      return {{}, 0, TrajTag::tunnel, true};
    PiecewiseTrajectory prefix =
        parent.traj.empty() ? single_point(start_spec_) : parent.traj.truncated(parent.wp_index);
    for (std::size_t i = 0; i < tun.segments.size(); ++i)
    {
      prefix.segments.push_back(tun.segments[i]);
      prefix.waypoints.push_back(tun.waypoints[i]);
    }
    if (collision_free(prefix, world_, cfg_.shape, model_, prefix.duration(), cfg_.collision_dt))
      return {{}, 0, TrajTag::tunnel, true};
    ++stats_.tunnels;
    const std::size_t idx = prefix.segments.size();
    return {std::move(prefix), idx, TrajTag::tunnel, false};
  }

  /// Stop from m inside the tunnel, then move rest-to-rest onto lift(n) with the
  /// nominal-thrust acceleration of n's attitude.
  TunnelResult tunnel_trajectory(const FlatState& m, const LowState& m_low, const LowState& n)
  {
    TunnelResult out;
    const Vec3 lo = (centre(m_low.cell).cwiseMin(centre(n.cell)).array() - cfg_.dx).matrix();
    const Vec3 hi = (centre(m_low.cell).cwiseMax(centre(n.cell)).array() + cfg_.dx).matrix();
    auto contained = [&](const Segment& s) {
      const int steps = std::max(2, static_cast<int>(std::ceil(s.duration / 0.01)));
      for (int i = 0; i <= steps; ++i)
      {
        const Vec3 p = s.eval(s.duration * i / steps, 0);
        if ((p.array() < lo.array() - 1e-9).any() || (p.array() > hi.array() + 1e-9).any())
          return false;
      }
      return true;
    };
    auto inputs_ok = [&](const Segment& s) {
      PiecewiseTrajectory t;
      t.segments.push_back(s);
      return !check_inputs(t, cfg_.limits, model_);
    };
    auto ladder = [](int k) { return 0.1 * std::pow(1.25, k); };
    constexpr int kRungs = 25;  // up to ~26 s

    FlatState cur = m;
    out.contained = true;
    const bool moving = m.v.norm() > 1e-9 || m.a.norm() > 1e-9 || m.j.norm() > 1e-9;
    if (moving)
    {
      bool found = false;
      for (int k = 0; k < kRungs && !found; ++k)
      {
        const double T = ladder(k);
        auto seg = stopping_segment(m, T);
        if (!seg || !inputs_ok(*seg))
          continue;
        found = true;
        cur = FlatState{seg->eval(T, 0), Vec3::Zero(), Vec3::Zero(), Vec3::Zero()};
        out.stop_distance = (cur.x - m.x).norm();
        out.contained = contained(*seg);
        out.segments.push_back(*seg);
        out.waypoints.push_back(WaypointSpec::fixed_state(cur, WaypointSource::anchor, true));
      }
      if (!found)
        return out;
    }
    const Attitude att = attitude(n);
    const FlatState target{centre(n.cell), Vec3::Zero(), constrained_acceleration(att, model_), Vec3::Zero()};
    WaypointSpec end = WaypointSpec::fixed_state(target, WaypointSource::search, true);
    end.attitude = att;
    const WaypointSpec begin = WaypointSpec::fixed_state(cur, WaypointSource::anchor, true);
    for (int k = 0; k < kRungs; ++k)
    {
      const double T = ladder(k);
      auto [t, rep] = solve_fixed_times({begin, end}, {T}, cfg_.poly);
      ++stats_.qp_solves;
      const Segment& s = t.segments.front();
      if (!inputs_ok(s) || !contained(s))
        continue;
      out.segments.push_back(s);
      out.waypoints.push_back(end);
      out.ok = true;
      return out;
    }
    return out;
  }

  // --- search ----------------------------------------------------------------

  /// Boundary waypoints and heuristic field for a start/goal pair; plan() calls
  /// this, tests use it to drive generate_trajectory directly.
  void prepare(const FlatState& start, const FlatState& goal)
  {
    if (!start.finite() || !goal.finite())
      throw InvalidArgument("start and goal must be finite");
    start_state_ = start;
    direct_cache_.clear();
    start_spec_ = WaypointSpec::fixed_state(start, WaypointSource::start, cfg_.fix_boundary_jerk);
    goal_spec_ = WaypointSpec::fixed_state(goal, WaypointSource::goal, cfg_.fix_boundary_jerk);
    start_spec_.attitude = attitude_from_acceleration(start.a, model_);
    goal_spec_.attitude = attitude_from_acceleration(goal.a, model_);
    if (!pose_collision_free(world_, cfg_.shape, start.x, *start_spec_.attitude) ||
        !pose_collision_free(world_, cfg_.shape, goal.x, *goal_spec_.attitude))
      throw InvalidArgument("start and goal poses must be collision-free");
    set_goal(goal.x);
  }

  PlanResult plan(const FlatState& start, const FlatState& goal)
  {
    const auto t0 = std::chrono::steady_clock::now();
    deadline_ = t0 + std::chrono::duration_cast<std::chrono::steady_clock::duration>(
                         std::chrono::duration<double>(cfg_.timeout));
    nodes_.clear();
    latest_.clear();
    best_path_.clear();
    stats_ = PlanResult{};
    PlanResult& res = stats_;
    auto finish = [&](PlanStatus st) {
      res.status = st;
      res.planning_time = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
      res.nodes = static_cast<long>(nodes_.size());
      PlanResult r = std::move(res);
      stats_ = PlanResult{};
      return r;
    };

    prepare(start, goal);
    const LowState s_low = project(start);
    const double h0 = heuristic(s_low);
    res.start_h = h0;
    if (!std::isfinite(h0))
      return finish(PlanStatus::exhausted);

    std::optional<PiecewiseTrajectory> best;
    double best_j = kInf;
    auto offer = [&](const PiecewiseTrajectory& t) {
      const double J = total_cost(t, cfg_.gamma);
      if (J < best_j && fully_feasible(t))
      {
        best = t;
        best_j = J;
        res.goal_history.push_back(J);
        return true;
      }
      return false;
    };
    if (auto d = optimize({start_spec_, goal_spec_}))
      offer(*d);

    SearchNode root;
    root.state = s_low;
    root.g = 0.0;
    root.h = h0;
    root.traj = single_point(start_spec_);
    root.tag = TrajTag::start;
    add_node(std::move(root));

    using Entry = std::tuple<double, int>;  // key, node id
    std::priority_queue<Entry, std::vector<Entry>, std::greater<>> open;
    open.push({key(nodes_[0]), 0});

    PlanStatus status = PlanStatus::exhausted;
    while (true)
    {
      while (!open.empty())
      {
        const auto [k, id] = open.top();
        if (nodes_[id].closed || k != key(nodes_[id]))
          open.pop();
        else
          break;
      }
      if (open.empty())
      {
        status = best ? PlanStatus::solved : PlanStatus::exhausted;
        break;
      }
      if (best && best_j <= std::get<0>(open.top()))
      {
        status = PlanStatus::solved;
        break;
      }
      if (expired() || (cfg_.max_expansions > 0 && res.expansions >= cfg_.max_expansions))
      {
        status = PlanStatus::timeout;
        break;
      }
      const int pid = std::get<1>(open.top());
      open.pop();
      nodes_[pid].closed = true;
      ++res.expansions;
      if (on_expand)
        on_expand(nodes_[pid], res);
      for (const LowState& succ : successors(nodes_[pid].state))
      {
        if (expired())
          break;
        const double h = heuristic(succ);
        if (!std::isfinite(h))
          continue;
        GeneratedTrajectory gen = generate_trajectory(nodes_[pid], succ);
        if (gen.blocked)
          continue;
        double g_new = cfg_.tunnel_cost;
        if (gen.tag != TrajTag::tunnel)
        {
          if (!gen.cached && offer(gen.traj))
          {
            best_path_ = chain(pid);
            best_path_.push_back(succ);
          }
          g_new = cost_prefix(gen.traj, gen.traj.waypoint_times()[gen.wp_index], cfg_.gamma);
        }

        int nid = -1;
        if (auto it = latest_.find(succ); it == latest_.end())
        {
          SearchNode n;
          n.state = succ;
          n.h = h;
          nid = add_node(std::move(n));
        }
        else if (nodes_[it->second].closed)
        {
          if (nodes_[it->second].generation >= cfg_.duplication_cap || represented(it->second, g_new))
            continue;
          SearchNode n;
          n.state = succ;
          n.h = h;
          n.generation = nodes_[it->second].generation + 1;
          n.previous = it->second;
          nid = add_node(std::move(n));
          ++res.duplicates;
        }
        else
          nid = it->second;

        SearchNode& n = nodes_[nid];
        if (g_new < n.g)
        {
          n.g = g_new;
          n.parent = pid;
          n.traj = std::move(gen.traj);
          n.wp_index = gen.wp_index;
          n.tag = gen.tag;
          open.push({key(n), nid});
        }
      }
    }
    if (status == PlanStatus::solved)
    {
      res.trajectory = std::move(*best);
      res.j_total = best_j;
      res.execution_time = res.trajectory.duration();
      res.path = best_path_.empty() ? std::vector<LowState>{s_low} : best_path_;
    }
    return finish(status);
  }

private:
  static PiecewiseTrajectory single_point(const WaypointSpec& w)
  {
    PiecewiseTrajectory t;
    t.waypoints.push_back(w);
    return t;
  }

  WaypointSpec anchor_spec(const PiecewiseTrajectory& traj, std::size_t w) const
  {
    const FlatState s = traj.waypoint_state(w);
    const Vec3 snap = w < traj.segments.size() ? traj.segments[w].eval(0.0, 4)
                                               : traj.segments.back().eval(traj.segments.back().duration, 4);
    return WaypointSpec::fixed_state(s, WaypointSource::anchor, true, snap);
  }

  /// Single segment from m to rest, ending where the jerk cost is least.
  std::optional<Segment> stopping_segment(const FlatState& m, double T)
  {
    const WaypointSpec a = WaypointSpec::fixed_state(m, WaypointSource::anchor, true);
    auto solve_at = [&](const Vec3& p) {
      WaypointSpec b = WaypointSpec::fixed_state(FlatState{p, Vec3::Zero(), Vec3::Zero(), Vec3::Zero()},
                                                 WaypointSource::anchor, true);
      ++stats_.qp_solves;
      return solve_fixed_times({a, b}, {T}, cfg_.poly).first;
    };
    // Cost is quadratic and separable in the end position; fit it per axis.
    const Vec3 base = m.x + 0.5 * T * m.v;
    const double J0 = solve_at(base).segments[0].jerk_cost;
    Vec3 p = base;
    for (int ax = 0; ax < 3; ++ax)
    {
      Vec3 e = Vec3::Zero();
      e[ax] = 1.0;
      const double Jp = solve_at(base + e).segments[0].jerk_cost;
      const double Jm = solve_at(base - e).segments[0].jerk_cost;
      const double curv = Jp + Jm - 2 * J0;
      if (curv > 0)
        p[ax] -= (Jp - Jm) / (2 * curv);
    }
    return solve_at(p).segments[0];
  }

  // A closed generation already carries a trajectory of this cost.
  bool represented(int id, double g) const
  {
    for (; id >= 0; id = nodes_[id].previous)
      if (std::abs(nodes_[id].g - g) <= 1e-9 * std::max(1.0, std::abs(g)))
        return true;
    return false;
  }

  int add_node(SearchNode n)
  {
    n.id = static_cast<int>(nodes_.size());
    latest_[n.state] = n.id;
    nodes_.push_back(std::move(n));
    return nodes_.back().id;
  }

  std::vector<LowState> chain(int id) const
  {
    std::vector<LowState> out;
    for (int i = id; i >= 0; i = nodes_[i].parent) out.push_back(nodes_[i].state);
    std::reverse(out.begin(), out.end());
    return out;
  }

  bool expired() const { return std::chrono::steady_clock::now() >= deadline_; }

  const World& world_;
  PlannerConfig cfg_;
  QuadModel model_;
  std::array<int, 3> dims_{};
  std::vector<double> field_;
  std::vector<SearchNode> nodes_;
  std::unordered_map<LowState, int, LowStateHash> latest_;
  std::unordered_map<LowState, std::optional<PiecewiseTrajectory>, LowStateHash> direct_cache_;
  FlatState start_state_;
  WaypointSpec start_spec_, goal_spec_;
  PlanResult stats_;
  std::vector<LowState> best_path_;
  std::chrono::steady_clock::time_point deadline_ = std::chrono::steady_clock::time_point::max();
};

}  // namespace insat
