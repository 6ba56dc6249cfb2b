#pragma once

// JSON for planner configs, scenario specs and plan results; CSV sampling of
// trajectories with the attitude, thrust and body rate recovered by flatness.

#include <cmath>
#include <iomanip>
#include <ostream>
#include <set>
#include <sstream>
#include <string>

#include <json.hpp>

#include "insat/planner.hpp"
#include "insat/world_io.hpp"

namespace insat
{

using Json = nlohmann::json;

namespace detail
{

template <class T>
void read_key(const Json& j, const char* k, T& out)
{
  if (!j.contains(k))
    return;
  try
  {
    out = j.at(k).get<T>();
  }
  catch (const Json::exception&)
  {
    throw InvalidArgument(std::string("config key '") + k + "' has the wrong type");
  }
}

inline void reject_unknown(const Json& j, const std::set<std::string>& known, const char* what)
{
  if (!j.is_object())
    throw InvalidArgument(std::string(what) + " must be a JSON object");
  for (const auto& [k, v] : j.items())
    if (!known.count(k))
      throw InvalidArgument(std::string("unknown ") + what + " key '" + k + "'");
}

}  // namespace detail

inline Json to_json(const PlannerConfig& c)
{
  return Json{{"epsilon", c.epsilon},
              {"gamma", c.gamma},
              {"dx", c.dx},
              {"dtheta", c.dtheta},
              {"max_tilt", c.max_tilt},
              {"v_max", c.limits.v_max},
              {"a_max", c.limits.a_max},
              {"j_max", c.limits.j_max},
              {"f_max", c.limits.f_max},
              {"omega_max", c.limits.omega_max},
              {"mass", c.model.mass},
              {"gravity", c.model.gravity},
              {"f_nom", c.model.f_nom},
              {"thrust_floor", c.model.thrust_floor},
              {"semi_axes", detail::vec_json(c.shape.semi_axes)},
              {"order", c.poly.order},
              {"t_min", c.poly.t_min},
              {"max_iterations", c.poly.max_iterations},
              {"collision_dt", c.collision_dt},
              {"timeout", c.timeout},
              {"max_expansions", c.max_expansions},
              {"tunnel_cost", c.tunnel_cost},
              {"duplication_cap", c.duplication_cap},
              {"repair_cap", c.repair_cap},
              {"free_thrust", c.free_thrust},
              {"fix_boundary_jerk", c.fix_boundary_jerk},
              {"goal_pos_tol", c.goal_pos_tol},
              {"goal_att_tol", c.goal_att_tol}};
}

/// Overrides the fields present in j; unknown keys are an error.
inline PlannerConfig planner_config_from_json(const Json& j, PlannerConfig c = {})
{
  std::set<std::string> known;
  const Json defaults = to_json(c);
  for (const auto& [k, v] : defaults.items()) known.insert(k);
  detail::reject_unknown(j, known, "planner config");
  using detail::read_key;
  read_key(j, "epsilon", c.epsilon);
  read_key(j, "gamma", c.gamma);
  read_key(j, "dx", c.dx);
  read_key(j, "dtheta", c.dtheta);
  read_key(j, "max_tilt", c.max_tilt);
  read_key(j, "v_max", c.limits.v_max);
  read_key(j, "a_max", c.limits.a_max);
  read_key(j, "j_max", c.limits.j_max);
  read_key(j, "f_max", c.limits.f_max);
  read_key(j, "omega_max", c.limits.omega_max);
  read_key(j, "mass", c.model.mass);
  read_key(j, "gravity", c.model.gravity);
  read_key(j, "f_nom", c.model.f_nom);
  read_key(j, "thrust_floor", c.model.thrust_floor);
  if (j.contains("semi_axes"))
    c.shape.semi_axes = detail::json_vec(j.at("semi_axes"));
  read_key(j, "order", c.poly.order);
  read_key(j, "t_min", c.poly.t_min);
  read_key(j, "max_iterations", c.poly.max_iterations);
  read_key(j, "collision_dt", c.collision_dt);
  read_key(j, "timeout", c.timeout);
  read_key(j, "max_expansions", c.max_expansions);
  read_key(j, "tunnel_cost", c.tunnel_cost);
  read_key(j, "duplication_cap", c.duplication_cap);
  read_key(j, "repair_cap", c.repair_cap);
  read_key(j, "free_thrust", c.free_thrust);
  read_key(j, "fix_boundary_jerk", c.fix_boundary_jerk);
  read_key(j, "goal_pos_tol", c.goal_pos_tol);
  read_key(j, "goal_att_tol", c.goal_att_tol);
  c.validate();
  return c;
}

inline Json to_json(const ScenarioSpec& s)
{
  return Json{{"n_walls", s.n_walls},
              {"windows_per_wall", s.windows_per_wall},
              {"wall_gap", s.wall_gap},
              {"wall_thickness", s.wall_thickness},
              {"window_width", s.window_width},
              {"window_height", s.window_height},
              {"bounds_min", detail::vec_json(s.bounds_min)},
              {"bounds_max", detail::vec_json(s.bounds_max)},
              {"resolution", s.resolution},
              {"seed", s.seed},
              {"robot_radius", s.robot_radius},
              {"allow_non_forcing", s.allow_non_forcing},
              {"max_retries", s.max_retries}};
}

inline ScenarioSpec scenario_from_json(const Json& j, ScenarioSpec s = {})
{
  std::set<std::string> known;
  const Json defaults = to_json(s);
  for (const auto& [k, v] : defaults.items()) known.insert(k);
  detail::reject_unknown(j, known, "scenario");
  using detail::read_key;
  read_key(j, "n_walls", s.n_walls);
  read_key(j, "windows_per_wall", s.windows_per_wall);
  read_key(j, "wall_gap", s.wall_gap);
  read_key(j, "wall_thickness", s.wall_thickness);
  read_key(j, "window_width", s.window_width);
  read_key(j, "window_height", s.window_height);
  if (j.contains("bounds_min"))
    s.bounds_min = detail::json_vec(j.at("bounds_min"));
  if (j.contains("bounds_max"))
    s.bounds_max = detail::json_vec(j.at("bounds_max"));
  read_key(j, "resolution", s.resolution);
  read_key(j, "seed", s.seed);
  read_key(j, "robot_radius", s.robot_radius);
  read_key(j, "allow_non_forcing", s.allow_non_forcing);
  read_key(j, "max_retries", s.max_retries);
  validate(s);
  return s;
}

inline Json to_json(const PiecewiseTrajectory& t)
{
  Json segs = Json::array();
  for (const auto& s : t.segments)
    segs.push_back({{"duration", s.duration}, {"coeffs", {s.coeffs[0], s.coeffs[1], s.coeffs[2]}}});
  Json wps = Json::array();
  for (const auto& w : t.waypoints)
  {
    Json wj{{"position", detail::vec_json(w.position())}, {"source", to_string(w.source)}};
    if (w.attitude)
      wj["attitude"] = {w.attitude->phi(), w.attitude->theta()};
    wps.push_back(wj);
  }
  return Json{{"segments", segs}, {"waypoints", wps}};
}

inline PiecewiseTrajectory trajectory_from_json(const Json& j)
{
  PiecewiseTrajectory t;
  try
  {
    for (const auto& sj : j.at("segments"))
    {
      Segment s;
      s.duration = sj.at("duration").get<double>();
      if (!(s.duration > 0))
        throw InvalidArgument("segment duration must be positive");
      for (int a = 0; a < 3; ++a) s.coeffs[a] = sj.at("coeffs").at(a).get<poly::Coeffs>();
      s.finalize();
      t.segments.push_back(std::move(s));
    }
    for (const auto& wj : j.value("waypoints", Json::array()))
    {
      WaypointSpec w = WaypointSpec::position_only(detail::json_vec(wj.at("position")),
                                                   WaypointSource::search);
      const std::string src = wj.value("source", std::string("search-waypoint"));
      for (auto s : {WaypointSource::start, WaypointSource::goal, WaypointSource::search,
                     WaypointSource::anchor})
        if (src == to_string(s))
          w.source = s;
      if (wj.contains("attitude"))
        w.attitude = Attitude(wj.at("attitude").at(0).get<double>(), wj.at("attitude").at(1).get<double>());
      t.waypoints.push_back(w);
    }
  }
  catch (const Json::exception& e)
  {
    throw ParseError(std::string("bad trajectory: ") + e.what(), 0);
  }
  if (!t.waypoints.empty() && t.waypoints.size() != t.segments.size() + 1)
    throw ParseError("waypoint count must be segment count + 1", 0);
  return t;
}

inline Json to_json(const LowState& s)
{
  return Json{s.cell[0], s.cell[1], s.cell[2], s.phi, s.theta};
}

inline Json to_json(const PlanResult& r)
{
  Json path = Json::array();
  for (const auto& s : r.path) path.push_back(to_json(s));
  auto num = [](double v) { return std::isfinite(v) ? Json(v) : Json(nullptr); };
  return Json{{"status", to_string(r.status)},
              {"j_total", num(r.j_total)},
              {"planning_time", r.planning_time},
              {"execution_time", r.execution_time},
              {"expansions", r.expansions},
              {"qp_solves", r.qp_solves},
              {"nodes", r.nodes},
              {"duplicates", r.duplicates},
              {"tunnels", r.tunnels},
              {"repairs", r.repairs},
              {"directs", r.directs},
              {"start_h", num(r.start_h)},
              {"goal_history", r.goal_history},
              {"path", path},
              {"trajectory", to_json(r.trajectory)}};
}

inline const char* kCsvHeader = "t,x,y,z,vx,vy,vz,ax,ay,az,jx,jy,jz,phi,theta,thrust,wx,wy,wz";

/// Number of rows for sampling [0, duration] at dt, both ends included when
/// the duration is a multiple of dt.
inline long csv_rows(double duration, double dt)
{
  if (!(dt > 0))
    throw InvalidArgument("sample step must be positive");
  return static_cast<long>(std::floor(duration / dt + 1e-9)) + 1;
}

/// One row per sample; attitude, thrust (N) and body rates come from the
/// flat outputs. Fields that are undefined at a sample (free fall) are empty.
inline void write_csv(std::ostream& os, const PiecewiseTrajectory& traj, const QuadModel& model, double dt)
{
  const long n = csv_rows(traj.duration(), dt);
  os << kCsvHeader << "\n";
  os << std::setprecision(10);
  for (long i = 0; i < n; ++i)
  {
    const double t = std::min(i * dt, traj.duration());
    const FlatState s = traj.state_at(t);
    os << t;
    for (const Vec3* v : {&s.x, &s.v, &s.a, &s.j})
      os << ',' << v->x() << ',' << v->y() << ',' << v->z();
    const double c = thrust_per_mass(s.a, model);
    try
    {
      const Attitude att = attitude_from_acceleration(s.a, model);
      os << ',' << att.phi() << ',' << att.theta() << ',' << model.mass * c;
      try
      {
        const Vec3 w = body_rate(att, s.j, c, model.thrust_floor);
        os << ',' << w.x() << ',' << w.y() << ',' << w.z();
      }
      catch (const RateSingularity&)
      {
        os << ",,,";
      }
    }
    catch (const UndefinedAttitude&)
    {
      os << ",,," << model.mass * c << ",,,";
    }
    os << "\n";
  }
}

}  // namespace insat
