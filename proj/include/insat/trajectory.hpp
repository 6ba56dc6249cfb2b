#pragma once

// Piecewise polynomial trajectory in R^3 with per-waypoint boundary metadata.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include "insat/errors.hpp"
#include "insat/flatness.hpp"
#include "insat/polynomial.hpp"

namespace insat
{

inline constexpr int kMaxDerivs = 5;  // position through snap

enum class WaypointSource
{
  start,
  goal,
  search,
  anchor
};

inline const char* to_string(WaypointSource s)
{
  switch (s)
  {
    case WaypointSource::start: return "start";
    case WaypointSource::goal: return "goal";
    case WaypointSource::search: return "search-waypoint";
    case WaypointSource::anchor: return "repair-anchor";
  }
  return "?";
}

/// Acceleration restricted to the line a = lambda * z - g * e3 with lambda free.
struct AccelCoupling
{
  Vec3 z = kWorldUp;
  double gravity = 9.81;
};

struct WaypointSpec
{
  std::array<Vec3, kMaxDerivs> value{Vec3::Zero(), Vec3::Zero(), Vec3::Zero(), Vec3::Zero(),
                                     Vec3::Zero()};
  std::array<bool, kMaxDerivs> fixed{true, false, false, false, false};
  std::optional<AccelCoupling> coupling;  // overrides fixed[2] when present
  std::optional<Attitude> attitude;
  WaypointSource source = WaypointSource::search;

  const Vec3& position() const { return value[0]; }

  /// Position, velocity and acceleration pinned to a flat state; jerk and snap
  /// pinned too when fix_higher is set (repair anchors need the full state).
  static WaypointSpec fixed_state(const FlatState& s, WaypointSource src, bool fix_higher = false,
                                  const Vec3& snap = Vec3::Zero())
  {
    WaypointSpec w;
    w.value = {s.x, s.v, s.a, s.j, snap};
    w.fixed = {true, true, true, fix_higher, fix_higher};
    w.source = src;
    return w;
  }

  /// Position pinned, everything else free.
  static WaypointSpec position_only(const Vec3& p, WaypointSource src)
  {
    WaypointSpec w;
    w.value[0] = p;
    w.source = src;
    return w;
  }

  void release_derivatives()
  {
    for (int k = 1; k < kMaxDerivs; ++k)
      fixed[k] = false;
    coupling.reset();
  }
};

struct Segment
{
  double duration = 0.0;
  std::array<poly::Coeffs, 3> coeffs;  // monomial basis in local time, per axis
  double jerk_cost = 0.0;              // integral of |jerk|^2 over the segment

  Vec3 eval(double tau, int k) const
  {
    Vec3 r;
    for (int a = 0; a < 3; ++a)
      r[a] = poly::eval(k == 0 ? coeffs[a] : poly::derivative(coeffs[a], k), tau);
    return r;
  }

  static double integrate_jerk_sq(const std::array<poly::Coeffs, 3>& c, double T)
  {
    double s = 0.0;
    for (const auto& ax : c)
    {
      const poly::Coeffs j = poly::derivative(ax, 3);
      const poly::Coeffs sq = poly::multiply(j, j);
      double f = T;
      for (std::size_t k = 0; k < sq.size(); ++k)
      {
        s += sq[k] * f / static_cast<double>(k + 1);
        f *= T;
      }
    }
    return s;
  }

  void finalize() { jerk_cost = integrate_jerk_sq(coeffs, duration); }
};

class PiecewiseTrajectory
{
public:
  std::vector<Segment> segments;
  std::vector<WaypointSpec> waypoints;  // segments.size() + 1 entries, or empty

  bool empty() const { return segments.empty(); }
  std::size_t size() const { return segments.size(); }

  double duration() const
  {
    double t = 0.0;
    for (const auto& s : segments) t += s.duration;
    return t;
  }

  double j_control() const
  {
    double c = 0.0;
    for (const auto& s : segments) c += s.jerk_cost;
    return c;
  }

  double j_time() const { return duration(); }

  std::vector<double> durations() const
  {
    std::vector<double> d;
    d.reserve(segments.size());
    for (const auto& s : segments) d.push_back(s.duration);
    return d;
  }

  std::vector<double> waypoint_times() const
  {
    std::vector<double> t{0.0};
    for (const auto& s : segments) t.push_back(t.back() + s.duration);
    return t;
  }

  /// Segment index and local time; joints resolve to the later segment.
  std::pair<std::size_t, double> locate(double t) const
  {
    if (segments.empty())
      throw OutOfBounds("evaluate on an empty trajectory");
    const double total = duration();
    if (!(t >= -1e-12) || !(t <= total + 1e-9))
      throw OutOfBounds("time " + std::to_string(t) + " outside [0, " + std::to_string(total) + "]");
    double t0 = 0.0;
    for (std::size_t i = 0; i < segments.size(); ++i)
    {
      const double t1 = t0 + segments[i].duration;
      if (t < t1 || i + 1 == segments.size())
        return {i, std::clamp(t - t0, 0.0, segments[i].duration)};
      t0 = t1;
    }
    return {segments.size() - 1, segments.back().duration};
  }

  Vec3 evaluate(double t, int k) const
  {
    if (k < 0 || k > 4)
      throw InvalidArgument("derivative order must be in 0..4");
    const auto [i, tau] = locate(t);
    return segments[i].eval(tau, k);
  }

  FlatState state_at(double t) const
  {
    const auto [i, tau] = locate(t);
    const Segment& s = segments[i];
    return FlatState{s.eval(tau, 0), s.eval(tau, 1), s.eval(tau, 2), s.eval(tau, 3)};
  }

  /// Boundary state at waypoint w evaluated from the polynomials.
  FlatState waypoint_state(std::size_t w) const
  {
    if (w >= waypoints.size())
      throw OutOfBounds("waypoint index out of range");
    if (w == segments.size())
    {
      const Segment& s = segments.back();
      return FlatState{s.eval(s.duration, 0), s.eval(s.duration, 1), s.eval(s.duration, 2),
                       s.eval(s.duration, 3)};
    }
    const Segment& s = segments[w];
    return FlatState{s.eval(0, 0), s.eval(0, 1), s.eval(0, 2), s.eval(0, 3)};
  }

  /// Largest derivative mismatch (orders 0..3) across interior joints.
  double continuity_error() const
  {
    double e = 0.0;
    for (std::size_t i = 0; i + 1 < segments.size(); ++i)
      for (int k = 0; k < 4; ++k)
        e = std::max(e, (segments[i].eval(segments[i].duration, k) - segments[i + 1].eval(0, k))
                            .cwiseAbs()
                            .maxCoeff());
    return e;
  }

  std::size_t waypoint_index_at(double t_n, double tol = 1e-9) const
  {
    const auto times = waypoint_times();
    for (std::size_t i = 0; i < times.size(); ++i)
      if (std::abs(times[i] - t_n) <= tol * std::max(1.0, std::abs(t_n)))
        return i;
    throw InvalidArgument("time " + std::to_string(t_n) + " is not a waypoint time");
  }

  /// Trajectory restricted to waypoints [0, w].
  PiecewiseTrajectory truncated(std::size_t w) const
  {
    if (w >= waypoints.size())
      throw OutOfBounds("truncation waypoint out of range");
    PiecewiseTrajectory p;
    p.segments.assign(segments.begin(), segments.begin() + static_cast<std::ptrdiff_t>(w));
    p.waypoints.assign(waypoints.begin(), waypoints.begin() + static_cast<std::ptrdiff_t>(w) + 1);
    return p;
  }
};

inline double total_cost(const PiecewiseTrajectory& traj, double gamma)
{
  return traj.j_control() + gamma * traj.j_time();
}

/// J_control over [0, t_n] plus gamma * t_n, for t_n a waypoint time.
inline double cost_prefix(const PiecewiseTrajectory& traj, double t_n, double gamma)
{
  if (traj.empty())
  {
    if (std::abs(t_n) > 1e-12)
      throw InvalidArgument("empty trajectory has only t = 0");
    return 0.0;
  }
  const std::size_t w = traj.waypoint_index_at(t_n);
  double c = 0.0, t = 0.0;
  for (std::size_t i = 0; i < w; ++i)
  {
    c += traj.segments[i].jerk_cost;
    t += traj.segments[i].duration;
  }
  return c + gamma * t;
}

inline bool states_match(const FlatState& a, const FlatState& b, double tol = 1e-6)
{
  for (int k = 0; k < 4; ++k)
  {
    const Vec3 d = a.derivative(k) - b.derivative(k);
    const double scale = std::max(1.0, a.derivative(k).cwiseAbs().maxCoeff());
    if (d.cwiseAbs().maxCoeff() > tol * scale)
      return false;
  }
  return true;
}

/// Prefix up to waypoint w followed by suffix, which must start at the prefix's state there.
inline PiecewiseTrajectory concatenate(const PiecewiseTrajectory& prefix, std::size_t w,
                                       const PiecewiseTrajectory& suffix)
{
  if (suffix.empty())
    return prefix.empty() ? prefix : prefix.truncated(std::min(w, prefix.size()));
  if (prefix.empty())
    return suffix;
  PiecewiseTrajectory out = prefix.truncated(w);
  const FlatState at_w = prefix.waypoint_state(w);
  const FlatState s0 = suffix.waypoint_state(0);
  if (!states_match(at_w, s0))
    throw Discontinuity("splice mismatch at waypoint " + std::to_string(w));
  out.segments.insert(out.segments.end(), suffix.segments.begin(), suffix.segments.end());
  out.waypoints.insert(out.waypoints.end(), suffix.waypoints.begin() + 1, suffix.waypoints.end());
  return out;
}

inline PiecewiseTrajectory concatenate(const PiecewiseTrajectory& prefix,
                                       const PiecewiseTrajectory& suffix)
{
  return concatenate(prefix, prefix.empty() ? 0 : prefix.size(), suffix);
}

}  // namespace insat
