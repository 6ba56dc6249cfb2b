#pragma once

// Input feasibility (box limits, thrust, body rate) and two-level collision
// checking of a piecewise trajectory.

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "insat/flatness.hpp"
#include "insat/polynomial.hpp"
#include "insat/trajectory.hpp"
#include "insat/world.hpp"

namespace insat
{

struct Limits
{
  double v_max = 10.0;      // m/s, per axis
  double a_max = 20.0;      // m/s^2, per axis
  double j_max = 50.0;      // m/s^3, per axis
  double f_max = 10.0;      // N
  double omega_max = 5.0;   // rad/s

  void validate() const
  {
    if (!(v_max > 0) || !(a_max > 0) || !(j_max > 0) || !(f_max > 0) || !(omega_max > 0))
      throw InvalidArgument("all limits must be positive");
  }

  double box(int order) const { return order == 1 ? v_max : order == 2 ? a_max : j_max; }
};

struct EllipsoidShape
{
  Vec3 semi_axes = Vec3(0.31, 0.31, 0.1);  // body frame, m

  void validate() const
  {
    if (!(semi_axes.minCoeff() > 0))
      throw InvalidArgument("ellipsoid semi-axes must be positive");
    if (std::abs(semi_axes.x() - semi_axes.y()) > 1e-12)
      throw InvalidArgument("ellipsoid must be symmetric about body z (r_x = r_y)");
  }

  double bounding_radius() const { return semi_axes.maxCoeff(); }
};

enum class ViolationKind
{
  velocity,
  acceleration,
  jerk,
  thrust,
  body_rate,
  collision
};

inline const char* to_string(ViolationKind k)
{
  switch (k)
  {
    case ViolationKind::velocity: return "velocity";
    case ViolationKind::acceleration: return "acceleration";
    case ViolationKind::jerk: return "jerk";
    case ViolationKind::thrust: return "thrust";
    case ViolationKind::body_rate: return "body-rate";
    case ViolationKind::collision: return "collision";
  }
  return "?";
}

struct Violation
{
  ViolationKind kind = ViolationKind::collision;
  double time = 0.0;
  double magnitude = 0.0;
};

using CheckResult = std::optional<Violation>;

namespace detail
{

inline constexpr double kLimitSlack = 1e-9;

inline ViolationKind box_kind(int order)
{
  return order == 1 ? ViolationKind::velocity
                    : order == 2 ? ViolationKind::acceleration : ViolationKind::jerk;
}

// Segments overlapping [0, t_end] with their start time and the local span to check.
struct SegmentSpan
{
  const Segment* seg;
  double t0;
  double tau_end;
};

inline std::vector<SegmentSpan> spans(const PiecewiseTrajectory& traj, double t_end)
{
  std::vector<SegmentSpan> out;
  double t0 = 0.0;
  for (const auto& s : traj.segments)
  {
    if (t0 > t_end + 1e-12)
      break;
    out.push_back({&s, t0, std::min(s.duration, t_end - t0)});
    t0 += s.duration;
  }
  return out;
}

inline poly::Coeffs thrust_axis(const Segment& s, int a, double g)
{
  poly::Coeffs acc = poly::derivative(s.coeffs[a], 2);
  if (a == 2)
    acc[0] += g;
  return acc;
}

inline poly::Coeffs thrust_sq(const Segment& s, double g)
{
  poly::Coeffs c2{0.0};
  for (int a = 0; a < 3; ++a)
  {
    const auto u = thrust_axis(s, a, g);
    c2 = poly::add(c2, poly::multiply(u, u));
  }
  return c2;
}

inline poly::Coeffs jerk_sq(const Segment& s)
{
  poly::Coeffs j2{0.0};
  for (int a = 0; a < 3; ++a)
  {
    const auto j = poly::derivative(s.coeffs[a], 3);
    j2 = poly::add(j2, poly::multiply(j, j));
  }
  return j2;
}

// |j|^2 c^2 - (j.u)^2 - w^2 c^4; positive exactly where the body rate exceeds w.
inline poly::Coeffs rate_excess(const Segment& s, double g, double omega_max)
{
  poly::Coeffs ju{0.0};
  for (int a = 0; a < 3; ++a)
    ju = poly::add(ju, poly::multiply(poly::derivative(s.coeffs[a], 3), thrust_axis(s, a, g)));
  const auto c2 = thrust_sq(s, g);
  const auto j2 = jerk_sq(s);
  return poly::add(poly::add(poly::multiply(j2, c2), poly::scale(poly::multiply(ju, ju), -1.0)),
                   poly::scale(poly::multiply(c2, c2), -omega_max * omega_max));
}

inline double rate_at(const Segment& s, double tau, double g)
{
  return body_rate_norm(s.eval(tau, 2), s.eval(tau, 3), g);
}

inline void keep_earliest(CheckResult& best, const Violation& v)
{
  if (!best || v.time < best->time)
    best = v;
}

}  // namespace detail

/// Per-axis |v|, |a|, |j| bounds via extremum finding; earliest offending extremum.
inline CheckResult check_box_limits(const PiecewiseTrajectory& traj, const Limits& lim,
                                    double t_end = std::numeric_limits<double>::infinity())
{
  for (const auto& sp : detail::spans(traj, t_end))
  {
    CheckResult best;
    for (int order = 1; order <= 3; ++order)
      for (int a = 0; a < 3; ++a)
      {
        const auto p = poly::derivative(sp.seg->coeffs[a], order);
        const auto r = poly::range_bound(p, 0.0, sp.tau_end);
        if (std::max(-r.lo, r.hi) <= lim.box(order) + detail::kLimitSlack)
          continue;
        for (double t : poly::extremum_candidates(p, 0.0, sp.tau_end))
        {
          const double v = std::abs(poly::eval(p, t));
          if (v > lim.box(order) + detail::kLimitSlack)
          {
            detail::keep_earliest(best, {detail::box_kind(order), sp.t0 + t, v});
            break;
          }
        }
      }
    if (best)
      return best;
  }
  return std::nullopt;
}

/// m * |a + g e3| <= f_max and |a + g e3| >= thrust floor.
inline CheckResult check_thrust(const PiecewiseTrajectory& traj, const QuadModel& model,
                                double t_end = std::numeric_limits<double>::infinity())
{
  const double hi = model.f_max / model.mass;
  const double lo = model.thrust_floor;
  for (const auto& sp : detail::spans(traj, t_end))
  {
    const auto c2 = detail::thrust_sq(*sp.seg, model.gravity);
    const auto r = poly::range_bound(c2, 0.0, sp.tau_end);
    if (r.lo >= lo * lo && r.hi <= std::pow(hi * (1 + detail::kLimitSlack), 2))
      continue;
    for (double t : poly::extremum_candidates(c2, 0.0, sp.tau_end))
    {
      const double c = std::sqrt(std::max(0.0, poly::eval(c2, t)));
      if (c > hi * (1 + detail::kLimitSlack) || c < lo)
        return Violation{ViolationKind::thrust, sp.t0 + t, model.mass * c};
    }
  }
  return std::nullopt;
}

/// |omega| <= omega_max. The bound max|j|^2 / min c^2 settles most segments; the
/// rest are decided exactly on the excess polynomial.
inline CheckResult check_body_rate(const PiecewiseTrajectory& traj, const QuadModel& model,
                                   double t_end = std::numeric_limits<double>::infinity(),
                                   int* exact_evaluations = nullptr)
{
  const double w2 = model.omega_max * model.omega_max;
  for (const auto& sp : detail::spans(traj, t_end))
  {
    const auto j2 = detail::jerk_sq(*sp.seg);
    const auto c2 = detail::thrust_sq(*sp.seg, model.gravity);
    const auto jr = poly::range_bound(j2, 0.0, sp.tau_end);
    const auto cr = poly::range_bound(c2, 0.0, sp.tau_end);
    if (cr.lo > 0.0 && jr.hi <= w2 * cr.lo)
      continue;
    const double j2max = poly::max_on(j2, 0.0, sp.tau_end).value;
    const double c2min = poly::min_on(c2, 0.0, sp.tau_end).value;
    if (c2min > 0.0 && j2max <= w2 * c2min)
      continue;
    if (exact_evaluations)
      ++*exact_evaluations;
    const auto P = detail::rate_excess(*sp.seg, model.gravity, model.omega_max);
    const double scale = std::max(1.0, poly::eval(poly::multiply(c2, c2), 0.0) * w2);
    for (double t : poly::extremum_candidates(P, 0.0, sp.tau_end))
      if (poly::eval(P, t) > 1e-12 * scale)
      {
        const double w = detail::rate_at(*sp.seg, t, model.gravity);
        if (w > model.omega_max + detail::kLimitSlack)
          return Violation{ViolationKind::body_rate, sp.t0 + t, w};
      }
  }
  return std::nullopt;
}

/// Analytic input feasibility: box limits, thrust, body rate; earliest violation.
inline CheckResult check_inputs(const PiecewiseTrajectory& traj, const Limits& lim,
                                const QuadModel& model,
                                double t_end = std::numeric_limits<double>::infinity())
{
  CheckResult best;
  if (auto v = check_box_limits(traj, lim, t_end))
    detail::keep_earliest(best, *v);
  if (auto v = check_thrust(traj, model, t_end))
    detail::keep_earliest(best, *v);
  if (auto v = check_body_rate(traj, model, t_end))
    detail::keep_earliest(best, *v);
  return best;
}

struct RecursiveStats
{
  int intervals = 0;
  int max_depth = 0;
};

/// Interval refinement on Taylor-shifted coefficient bounds, bisecting down to
/// min_width; inconclusive intervals at that width are accepted.
inline CheckResult recursive_check(const PiecewiseTrajectory& traj, const Limits& lim,
                                   const QuadModel& model, double min_width = 1e-3,
                                   RecursiveStats* stats = nullptr)
{
  const double thrust_hi2 = std::pow(model.f_max / model.mass, 2);
  const double thrust_lo2 = model.thrust_floor * model.thrust_floor;
  double t0 = 0.0;
  for (const auto& seg : traj.segments)
  {
    struct Quantity
    {
      poly::Coeffs p;
      ViolationKind kind;
      double upper;                                   // p <= upper required
      double lower = -std::numeric_limits<double>::infinity();  // p >= lower required
    };
    std::vector<Quantity> qs;
    for (int order = 1; order <= 3; ++order)
      for (int a = 0; a < 3; ++a)
        qs.push_back({poly::derivative(seg.coeffs[a], order), detail::box_kind(order),
                      lim.box(order), -lim.box(order)});
    qs.push_back({detail::thrust_sq(seg, model.gravity), ViolationKind::thrust, thrust_hi2, thrust_lo2});
    qs.push_back({detail::rate_excess(seg, model.gravity, model.omega_max), ViolationKind::body_rate, 0.0});

    auto magnitude = [&](const Quantity& q, double tau) {
      switch (q.kind)
      {
        case ViolationKind::thrust: return model.mass * std::sqrt(std::max(0.0, poly::eval(q.p, tau)));
        case ViolationKind::body_rate: return detail::rate_at(seg, tau, model.gravity);
        default: return std::abs(poly::eval(q.p, tau));
      }
    };
    auto violates = [&](const Quantity& q, double tau) {
      if (q.kind == ViolationKind::body_rate)
        return detail::rate_at(seg, tau, model.gravity) > model.omega_max + detail::kLimitSlack;
      if (q.kind == ViolationKind::thrust)
      {
        const double c2 = poly::eval(q.p, tau);
        return c2 > q.upper * (1 + 2 * detail::kLimitSlack) || c2 < q.lower;
      }
      const double v = poly::eval(q.p, tau);
      return v > q.upper + detail::kLimitSlack || v < q.lower - detail::kLimitSlack;
    };

    // Depth-first, left child first, so the first rejection is the earliest found.
    std::function<CheckResult(double, double, int)> visit = [&](double a, double b,
                                                                int depth) -> CheckResult {
      if (stats)
      {
        ++stats->intervals;
        stats->max_depth = std::max(stats->max_depth, depth);
      }
      const double c = 0.5 * (a + b), h = 0.5 * (b - a);
      bool inconclusive = false;
      for (const auto& q : qs)
      {
        const auto sh = poly::taylor_shift(q.p, c);
        const double ub = sh.empty() ? 0.0 : poly::abs_bound(sh, h) - std::abs(sh[0]) + sh[0];
        const double lb = poly::lower_bound(sh, h);
        const bool ok = ub <= q.upper && lb >= q.lower;
        if (ok)
          continue;
        for (double t : {a, c, b})
          if (violates(q, t))
            return Violation{q.kind, t0 + t, magnitude(q, t)};
        inconclusive = true;
      }
      if (!inconclusive || b - a <= min_width)
        return std::nullopt;
      if (auto v = visit(a, c, depth + 1))
        return v;
      return visit(c, b, depth + 1);
    };
    if (auto v = visit(0.0, seg.duration, 0))
      return v;
    t0 += seg.duration;
  }
  return std::nullopt;
}

// ---------------------------------------------------------------------------
// Collision

/// True iff some cloud point lies inside the ellipsoid at p with attitude att.
inline bool ellipsoid_hits_cloud(const World& world, const EllipsoidShape& shape, const Vec3& p,
                                 const Attitude& att)
{
  const Mat3 Rt = att.rotation().transpose();
  const Vec3 inv = shape.semi_axes.cwiseInverse();
  return world.cloud.any_within(p, shape.bounding_radius(), [&](const Vec3& q) {
    return (inv.asDiagonal() * (Rt * (q - p))).squaredNorm() <= 1.0;
  });
}

inline bool ellipsoid_inside_bounds(const World& world, const EllipsoidShape& shape, const Vec3& p,
                                    const Attitude& att)
{
  const Mat3 R = att.rotation();
  for (int a = 0; a < 3; ++a)
  {
    const double e = (R.row(a).transpose().cwiseProduct(shape.semi_axes)).norm();
    if (p[a] - e < world.lower()[a] || p[a] + e > world.upper()[a])
      return false;
  }
  return true;
}

/// Level 1: inflated voxel of p free and the bounding sphere clear of the world box.
inline bool level1_free(const World& world, const EllipsoidShape& shape, const Vec3& p)
{
  const auto c = world.map.try_world_to_cell(p);
  if (!c || world.inflated.occupied(*c))
    return false;
  const double r = shape.bounding_radius();
  return ((p - world.lower()).array() >= r).all() && ((world.upper() - p).array() >= r).all();
}

/// Level 2: ellipsoid inside the world box and free of cloud points.
inline bool level2_free(const World& world, const EllipsoidShape& shape, const Vec3& p,
                        const Attitude& att)
{
  return ellipsoid_inside_bounds(world, shape, p, att) && !ellipsoid_hits_cloud(world, shape, p, att);
}

inline bool pose_collision_free(const World& world, const EllipsoidShape& shape, const Vec3& p,
                                const Attitude& att)
{
  if (!world.map.try_world_to_cell(p))
    return false;
  return level1_free(world, shape, p) || level2_free(world, shape, p, att);
}

inline std::vector<double> collision_sample_times(const PiecewiseTrajectory& traj, double t_end,
                                                  double dt)
{
  std::vector<double> ts;
  for (long i = 0;; ++i)
  {
    const double t = static_cast<double>(i) * dt;
    if (t > t_end + 1e-12)
      break;
    ts.push_back(t);
  }
  for (double t : traj.waypoint_times())
    if (t <= t_end + 1e-12)
      ts.push_back(t);
  ts.push_back(t_end);
  std::sort(ts.begin(), ts.end());
  ts.erase(std::unique(ts.begin(), ts.end(), [](double a, double b) { return std::abs(a - b) < 1e-12; }),
           ts.end());
  return ts;
}

struct CollisionStats
{
  int samples = 0;
  int level2 = 0;
};

/// Sampled two-level collision test on [0, t_end] at dt and waypoint times, refined
/// so consecutive positions are at most a quarter voxel apart; attitude from acceleration.
inline CheckResult collision_free(const PiecewiseTrajectory& traj, const World& world,
                                  const EllipsoidShape& shape, const QuadModel& model, double t_end,
                                  double dt = 0.05, CollisionStats* stats = nullptr)
{
  if (!(dt > 0.0))
    throw InvalidArgument("collision sampling step must be positive");
  if (traj.empty())
    return std::nullopt;
  t_end = std::min(t_end, traj.duration());
  const double spacing = 0.25 * world.map.resolution();
  std::vector<double> ts;
  const auto base = collision_sample_times(traj, t_end, dt);
  for (std::size_t i = 0; i < base.size(); ++i)
  {
    if (i > 0)
    {
      const double gap = (traj.state_at(base[i]).x - traj.state_at(base[i - 1]).x).norm();
      const int n = static_cast<int>(std::ceil(gap / spacing));
      for (int k = 1; k < n; ++k)
        ts.push_back(base[i - 1] + (base[i] - base[i - 1]) * k / n);
    }
    ts.push_back(base[i]);
  }
  for (double t : ts)
  {
    const FlatState s = traj.state_at(t);
    if (stats)
      ++stats->samples;
    if (level1_free(world, shape, s.x))
      continue;
    if (stats)
      ++stats->level2;
    std::optional<Attitude> att;
    try
    {
      att = attitude_from_acceleration(s.a, model);
    }
    catch (const Error&)
    {
      return Violation{ViolationKind::collision, t, 1.0};
    }
    if (!pose_collision_free(world, shape, s.x, *att))
      return Violation{ViolationKind::collision, t, 1.0};
  }
  return std::nullopt;
}

/// Everything: input feasibility and collision over [0, t_end].
inline CheckResult audit(const PiecewiseTrajectory& traj, const Limits& lim, const QuadModel& model,
                         const World& world, const EllipsoidShape& shape, double dt,
                         double t_end = std::numeric_limits<double>::infinity())
{
  if (auto v = check_inputs(traj, lim, model, t_end))
    return v;
  return collision_free(traj, world, shape, model, std::min(t_end, traj.duration()), dt);
}

}  // namespace insat
