#pragma once

// Minimum-jerk piecewise polynomials through waypoints with fixed, free, and
// thrust-coupled boundary derivatives; segment-time descent; warm-start refinement.
//
// Each segment is written in normalized time s = t/T. Its jerk integral is
// T^-5 * e'Qe where e stacks the endpoint derivatives scaled by T^k, so the
// whole problem is a quadratic in the per-waypoint derivatives. Free
// derivatives are eliminated in closed form.

#include <Eigen/Dense>

#include <algorithm>
#include <array>
#include <cmath>
#include <functional>
#include <limits>
#include <map>
#include <numeric>
#include <mutex>
#include <utility>
#include <vector>

#include "insat/errors.hpp"
#include "insat/trajectory.hpp"

namespace insat
{

struct PolyOptions
{
  int order = 7;             // 7 gives C3 joints, 9 gives C4
  double t_min = 0.05;       // s
  int max_iterations = 50;
  double grad_tol = 1e-3;
  double rel_tol = 1e-4;
  double armijo = 1e-4;
  double backtrack = 0.5;
  double initial_log_step = 0.1;  // first step changes log T by at most this much

  int continuity() const
  {
    if (order != 7 && order != 9)
      throw InvalidArgument("polynomial order must be 7 or 9");
    return (order + 1) / 2;
  }
};

struct QpReport
{
  double j_control = 0.0;
  double constraint_residual = 0.0;
  int time_iterations = 0;
  bool converged = false;
};

namespace detail
{

inline double falling(int n, int k)
{
  double r = 1.0;
  for (int i = 0; i < k; ++i) r *= static_cast<double>(n - i);
  return r;
}

struct Basis
{
  int K = 4;
  Eigen::MatrixXd A_inv;  // normalized endpoint derivatives -> normalized coefficients
  Eigen::MatrixXd Q;      // jerk cost in normalized endpoint derivatives
};

inline const Basis& basis(int K)
{
  static std::mutex mu;
  static std::map<int, Basis> cache;
  std::lock_guard<std::mutex> lock(mu);
  auto it = cache.find(K);
  if (it != cache.end())
    return it->second;
  // Built in extended precision: Q must annihilate constant polynomials to
  // well below double rounding or identical waypoints pick up spurious motion.
  using MatL = Eigen::Matrix<long double, Eigen::Dynamic, Eigen::Dynamic>;
  const int n = 2 * K;
  MatL A = MatL::Zero(n, n);
  for (int k = 0; k < K; ++k)
  {
    A(k, k) = static_cast<long double>(falling(k, k));
    for (int j = k; j < n; ++j)
      A(K + k, j) = static_cast<long double>(falling(j, k));
  }
  MatL H = MatL::Zero(n, n);
  for (int i = 3; i < n; ++i)
    for (int j = 3; j < n; ++j)
      H(i, j) = static_cast<long double>(falling(i, 3) * falling(j, 3)) /
                static_cast<long double>(i + j - 5);
  const MatL A_inv = A.fullPivLu().inverse();
  MatL Q = A_inv.transpose() * H * A_inv;
  Q = (0.5L * (Q + Q.transpose())).eval();
  Basis b;
  b.K = K;
  b.A_inv = A_inv.cast<double>();
  b.Q = Q.cast<double>();
  return cache.emplace(K, std::move(b)).first->second;
}

// Entry e = w*K + k of one axis is either constant, or coef * u[param] + constant.
struct EntryMap
{
  int param = -1;
  double coef = 0.0;
  double constant = 0.0;
};

struct Layout
{
  int K = 4;
  std::size_t n_waypoints = 0;
  int n_params = 0;
  std::array<std::vector<EntryMap>, 3> axes;
  bool coupled = false;
};

inline Layout make_layout(const std::vector<WaypointSpec>& wps, int K)
{
  Layout L;
  L.K = K;
  L.n_waypoints = wps.size();
  for (auto& ax : L.axes) ax.resize(wps.size() * static_cast<std::size_t>(K));
  for (std::size_t w = 0; w < wps.size(); ++w)
  {
    const WaypointSpec& wp = wps[w];
    if (!wp.fixed[0])
      throw InvalidArgument("waypoint positions must be fixed");
    int lambda = -1;
    if (wp.coupling && K > 2)
    {
      lambda = L.n_params++;
      L.coupled = true;
    }
    for (int k = 0; k < K; ++k)
      for (int a = 0; a < 3; ++a)
      {
        EntryMap& e = L.axes[a][w * static_cast<std::size_t>(K) + static_cast<std::size_t>(k)];
        if (k == 2 && lambda >= 0)
        {
          e.param = lambda;
          e.coef = wp.coupling->z[a];
          e.constant = (a == 2) ? -wp.coupling->gravity : 0.0;
        }
        else if (wp.fixed[static_cast<std::size_t>(k)])
        {
          e.constant = wp.value[static_cast<std::size_t>(k)][a];
        }
      }
    for (int k = 0; k < K; ++k)
      for (int a = 0; a < 3; ++a)
      {
        EntryMap& e = L.axes[a][w * static_cast<std::size_t>(K) + static_cast<std::size_t>(k)];
        if (!(k == 2 && lambda >= 0) && !wp.fixed[static_cast<std::size_t>(k)])
        {
          e.param = L.n_params++;
          e.coef = 1.0;
        }
      }
  }
  return L;
}

// Per-axis quadratic: sum over segments of T^-5 * (S e)' Q (S e), S = diag(T^k).
inline Eigen::MatrixXd assemble_cost(const std::vector<double>& T, int K)
{
  const Basis& B = basis(K);
  const auto n = static_cast<Eigen::Index>((T.size() + 1) * static_cast<std::size_t>(K));
  Eigen::MatrixXd R = Eigen::MatrixXd::Zero(n, n);
  for (std::size_t i = 0; i < T.size(); ++i)
  {
    const auto off = static_cast<Eigen::Index>(i) * K;
    for (int a = 0; a < 2 * K; ++a)
      for (int b = 0; b < 2 * K; ++b)
        R(off + a, off + b) += B.Q(a, b) * std::pow(T[i], (a % K) + (b % K) - 5);
  }
  return R;
}

struct Solution
{
  std::array<Eigen::VectorXd, 3> d;  // per-axis waypoint derivatives, index w*K + k
  double j_control = 0.0;
};

inline Solution solve_layout(const Layout& L, const std::vector<double>& T)
{
  const Eigen::MatrixXd R = assemble_cost(T, L.K);
  const Eigen::Index n = R.rows();
  Solution sol;
  std::array<Eigen::VectorXd, 3> c;
  for (int a = 0; a < 3; ++a)
  {
    c[a].resize(n);
    for (Eigen::Index e = 0; e < n; ++e) c[a][e] = L.axes[a][static_cast<std::size_t>(e)].constant;
  }
  Eigen::VectorXd u = Eigen::VectorXd::Zero(L.n_params);
  if (L.n_params > 0)
  {
    Eigen::MatrixXd G = Eigen::MatrixXd::Zero(L.n_params, L.n_params);
    Eigen::VectorXd rhs = Eigen::VectorXd::Zero(L.n_params);
    for (int a = 0; a < 3; ++a)
    {
      const Eigen::VectorXd Rc = R * c[a];
      std::vector<std::pair<Eigen::Index, const EntryMap*>> active;
      for (Eigen::Index e = 0; e < n; ++e)
      {
        const EntryMap& m = L.axes[a][static_cast<std::size_t>(e)];
        if (m.param >= 0 && m.coef != 0.0)
          active.emplace_back(e, &m);
      }
      for (const auto& [e, me] : active)
      {
        rhs[me->param] -= me->coef * Rc[e];
        for (const auto& [f, mf] : active)
          G(me->param, mf->param) += me->coef * mf->coef * R(e, f);
      }
    }
    Eigen::LDLT<Eigen::MatrixXd> ldlt(G);
    if (ldlt.info() != Eigen::Success || !(ldlt.vectorD().minCoeff() > 0.0))
      throw InfeasibleQp("free-derivative system is singular");
    u = ldlt.solve(rhs);
    if (!u.allFinite())
      throw InfeasibleQp("free-derivative solve produced non-finite values");
  }
  sol.j_control = 0.0;
  for (int a = 0; a < 3; ++a)
  {
    sol.d[a] = c[a];
    for (Eigen::Index e = 0; e < n; ++e)
    {
      const EntryMap& m = L.axes[a][static_cast<std::size_t>(e)];
      if (m.param >= 0)
        sol.d[a][e] += m.coef * u[m.param];
    }
    sol.j_control += sol.d[a].dot(R * sol.d[a]);
  }
  sol.j_control = std::max(0.0, sol.j_control);
  return sol;
}

inline PiecewiseTrajectory build_trajectory(const Layout& L, const Solution& sol,
                                            const std::vector<WaypointSpec>& wps,
                                            const std::vector<double>& T)
{
  const Basis& B = basis(L.K);
  const int K = L.K;
  PiecewiseTrajectory traj;
  traj.waypoints = wps;
  traj.segments.resize(T.size());
  for (std::size_t i = 0; i < T.size(); ++i)
  {
    Segment& s = traj.segments[i];
    s.duration = T[i];
    double cost = 0.0;
    for (int a = 0; a < 3; ++a)
    {
      Eigen::VectorXd e(2 * K);
      double f = 1.0;
      for (int k = 0; k < K; ++k)
      {
        e[k] = sol.d[a][static_cast<Eigen::Index>(i) * K + k] * f;
        e[K + k] = sol.d[a][static_cast<Eigen::Index>(i + 1) * K + k] * f;
        f *= T[i];
      }
      const Eigen::VectorXd cn = B.A_inv * e;
      cost += e.dot(B.Q * e) * std::pow(T[i], -5);
      poly::Coeffs p(static_cast<std::size_t>(2 * K));
      double g = 1.0;
      for (int k = 0; k < 2 * K; ++k)
      {
        p[static_cast<std::size_t>(k)] = cn[k] / g;
        g *= T[i];
      }
      s.coeffs[a] = std::move(p);
    }
    s.jerk_cost = std::max(0.0, cost);
  }
  return traj;
}

inline std::vector<double> envelope_gradient(const Solution& sol, const std::vector<double>& T,
                                             int K, double gamma)
{
  const Basis& B = basis(K);
  std::vector<double> g(T.size(), gamma);
  for (std::size_t i = 0; i < T.size(); ++i)
    for (int a = 0; a < 3; ++a)
    {
      const Eigen::VectorXd d = sol.d[a].segment(static_cast<Eigen::Index>(i) * K, 2 * K);
      for (int r = 0; r < 2 * K; ++r)
        for (int c = 0; c < 2 * K; ++c)
        {
          const int p = (r % K) + (c % K) - 5;
          g[i] += B.Q(r, c) * p * std::pow(T[i], p - 1) * d[r] * d[c];
        }
    }
  return g;
}

inline void check_inputs(const std::vector<WaypointSpec>& wps, const std::vector<double>& T)
{
  if (wps.size() < 2 || T.size() + 1 != wps.size())
    throw InvalidArgument("need M+1 waypoints for M durations, M >= 1");
  for (double t : T)
    if (!(t > 0.0) || !std::isfinite(t))
      throw InvalidArgument("segment durations must be positive and finite");
}

inline double residual(const PiecewiseTrajectory& traj, int K)
{
  double r = traj.continuity_error();
  for (std::size_t w = 0; w < traj.waypoints.size(); ++w)
  {
    const WaypointSpec& wp = traj.waypoints[w];
    const double t = (w == traj.size()) ? traj.segments.back().duration : 0.0;
    const Segment& s = traj.segments[std::min(w, traj.size() - 1)];
    for (int k = 0; k < K; ++k)
    {
      const Vec3 val = s.eval(t, k);
      if (k == 2 && wp.coupling)
      {
        const Vec3 thrust = val + wp.coupling->gravity * kWorldUp;
        r = std::max(r, thrust.cross(wp.coupling->z).cwiseAbs().maxCoeff());
      }
      else if (wp.fixed[static_cast<std::size_t>(k)])
      {
        r = std::max(r, (val - wp.value[static_cast<std::size_t>(k)]).cwiseAbs().maxCoeff());
      }
    }
  }
  return r;
}

}  // namespace detail

/// Block-diagonal jerk Hessian in monomial coefficients of local time.
inline Eigen::MatrixXd build_hessian(const std::vector<double>& durations, int order)
{
  if (order < 7)
    throw InvalidArgument("order must be at least 7");
  const int n = order + 1;
  const auto M = static_cast<Eigen::Index>(durations.size());
  Eigen::MatrixXd H = Eigen::MatrixXd::Zero(M * n, M * n);
  for (Eigen::Index i = 0; i < M; ++i)
  {
    const double T = durations[static_cast<std::size_t>(i)];
    if (!(T > 0.0))
      throw InvalidArgument("segment durations must be positive");
    for (int a = 3; a < n; ++a)
      for (int b = 3; b < n; ++b)
      {
        const int p = a + b - 5;
        H(i * n + a, i * n + b) =
            detail::falling(a, 3) * detail::falling(b, 3) * std::pow(T, p) / static_cast<double>(p);
      }
  }
  return H;
}

/// Rows: per segment, derivatives 0..K-1 at tau = 0 then at tau = T.
inline Eigen::MatrixXd build_endpoint_map(const std::vector<double>& durations, int order)
{
  if (order < 7)
    throw InvalidArgument("order must be at least 7");
  const int n = order + 1;
  const int K = n / 2;
  const auto M = static_cast<Eigen::Index>(durations.size());
  Eigen::MatrixXd A = Eigen::MatrixXd::Zero(M * 2 * K, M * n);
  for (Eigen::Index i = 0; i < M; ++i)
  {
    const double T = durations[static_cast<std::size_t>(i)];
    if (!(T > 0.0))
      throw InvalidArgument("segment durations must be positive");
    for (int k = 0; k < K; ++k)
    {
      A(i * 2 * K + k, i * n + k) = detail::falling(k, k);
      for (int j = k; j < n; ++j)
        A(i * 2 * K + K + k, i * n + j) = detail::falling(j, k) * std::pow(T, j - k);
    }
  }
  return A;
}

inline std::pair<PiecewiseTrajectory, QpReport> solve_fixed_times(
    const std::vector<WaypointSpec>& waypoints, const std::vector<double>& durations,
    const PolyOptions& opts = {})
{
  detail::check_inputs(waypoints, durations);
  const int K = opts.continuity();
  const detail::Layout L = detail::make_layout(waypoints, K);
  const detail::Solution sol = detail::solve_layout(L, durations);
  PiecewiseTrajectory traj = detail::build_trajectory(L, sol, waypoints, durations);
  QpReport rep;
  rep.j_control = traj.j_control();
  rep.constraint_residual = detail::residual(traj, K);
  rep.converged = rep.constraint_residual < 1e-6;
  return {std::move(traj), rep};
}

/// dJ_total/dT_i at fixed waypoints, by the envelope theorem on the eliminated cost.
inline std::vector<double> time_gradient(const std::vector<WaypointSpec>& waypoints,
                                         const std::vector<double>& durations, double gamma,
                                         const PolyOptions& opts = {})
{
  detail::check_inputs(waypoints, durations);
  const int K = opts.continuity();
  const detail::Layout L = detail::make_layout(waypoints, K);
  const detail::Solution sol = detail::solve_layout(L, durations);
  return detail::envelope_gradient(sol, durations, K, gamma);
}

/// Seed durations from a trapezoidal velocity profile per leg.
inline std::vector<double> trapezoid_durations(const std::vector<WaypointSpec>& waypoints,
                                               double v_max, double a_max, double t_min = 0.05)
{
  std::vector<double> T;
  for (std::size_t i = 0; i + 1 < waypoints.size(); ++i)
  {
    const double d = (waypoints[i + 1].position() - waypoints[i].position()).norm();
    const double t = (d >= v_max * v_max / a_max) ? d / v_max + v_max / a_max
                                                  : 2.0 * std::sqrt(d / a_max);
    T.push_back(std::max(t, t_min));
  }
  return T;
}

namespace detail
{

// Projected descent on log T. on_iterate is called for every accepted iterate
// after the initial one and may stop the descent by returning false.
inline std::pair<PiecewiseTrajectory, QpReport> descend(
    const std::vector<WaypointSpec>& waypoints, std::vector<double> T, double gamma,
    const PolyOptions& opts,
    const std::function<bool(const PiecewiseTrajectory&)>& on_iterate)
{
  check_inputs(waypoints, T);
  const int K = opts.continuity();
  const Layout L = make_layout(waypoints, K);
  const std::size_t M = T.size();
  for (double& t : T) t = std::max(t, opts.t_min);

  auto evaluate = [&](const std::vector<double>& dur) {
    Solution s = solve_layout(L, dur);
    return std::make_pair(s, s.j_control + gamma * std::accumulate(dur.begin(), dur.end(), 0.0));
  };
  auto gradient = [&](const Solution& s, const std::vector<double>& dur) {
    return envelope_gradient(s, dur, K, gamma);
  };

  auto [sol, J] = evaluate(T);
  std::vector<double> gT = gradient(sol, T);
  std::vector<double> prev_tau, prev_gtau;
  QpReport rep;
  bool stop_requested = false;
  int it = 0;
  for (; it < opts.max_iterations; ++it)
  {
    // Projected gradient: coordinates held at T_min with outward gradient are inactive.
    std::vector<double> gtau(M);
    double gnorm = 0.0;
    for (std::size_t i = 0; i < M; ++i)
    {
      const bool pinned = T[i] <= opts.t_min * (1.0 + 1e-12) && gT[i] > 0.0;
      gtau[i] = pinned ? 0.0 : gT[i] * T[i];
      if (!pinned)
        gnorm += gT[i] * gT[i];
    }
    gnorm = std::sqrt(gnorm);
    if (gnorm < opts.grad_tol)
    {
      rep.converged = true;
      break;
    }
    std::vector<double> tau(M);
    for (std::size_t i = 0; i < M; ++i) tau[i] = std::log(T[i]);

    double gmax = 0.0;
    for (double v : gtau) gmax = std::max(gmax, std::abs(v));
    double alpha = opts.initial_log_step / gmax;
    if (!prev_tau.empty())
    {
      double ss = 0.0, sy = 0.0;
      for (std::size_t i = 0; i < M; ++i)
      {
        const double s = tau[i] - prev_tau[i], y = gtau[i] - prev_gtau[i];
        ss += s * s;
        sy += s * y;
      }
      if (sy > 0.0 && ss > 0.0)
        alpha = ss / sy;
      alpha = std::min(alpha, 2.0 / gmax);  // never move log T by more than 2 in one step
    }

    bool accepted = false;
    std::vector<double> T_new(M);
    Solution sol_new;
    double J_new = J;
    for (int bt = 0; bt < 40; ++bt)
    {
      double decrease = 0.0;
      for (std::size_t i = 0; i < M; ++i)
      {
        T_new[i] = std::max(opts.t_min, std::exp(tau[i] - alpha * gtau[i]));
        decrease += gtau[i] * (tau[i] - std::log(T_new[i]));
      }
      auto [s, Jn] = evaluate(T_new);
      if (Jn <= J - opts.armijo * decrease)
      {
        sol_new = std::move(s);
        J_new = Jn;
        accepted = true;
        break;
      }
      alpha *= opts.backtrack;
    }
    if (!accepted)
    {
      rep.converged = true;  // no descent direction left at working precision
      break;
    }
    if (on_iterate)
    {
      PiecewiseTrajectory cand = build_trajectory(L, sol_new, waypoints, T_new);
      if (!on_iterate(cand))
      {
        stop_requested = true;
        break;
      }
    }
    prev_tau = tau;
    prev_gtau = gtau;
    const double rel = (J - J_new) / std::max(std::abs(J), 1e-12);
    T = T_new;
    sol = std::move(sol_new);
    J = J_new;
    gT = gradient(sol, T);
    if (rel < opts.rel_tol)
    {
      ++it;
      rep.converged = true;
      break;
    }
  }
  PiecewiseTrajectory traj = build_trajectory(L, sol, waypoints, T);
  rep.j_control = traj.j_control();
  rep.constraint_residual = residual(traj, K);
  rep.time_iterations = it;
  if (stop_requested)
    rep.converged = false;
  return {std::move(traj), rep};
}

}  // namespace detail

inline std::pair<PiecewiseTrajectory, QpReport> optimize_times(
    const std::vector<WaypointSpec>& waypoints, const std::vector<double>& initial_durations,
    double gamma, const PolyOptions& opts = {})
{
  for (double t : initial_durations)
    if (!(t >= opts.t_min))
      throw InvalidArgument("initial durations must be at least t_min");
  return detail::descend(waypoints, initial_durations, gamma, opts, {});
}

using TrajectoryPredicate = std::function<bool(const PiecewiseTrajectory&)>;

/// Releases every interior derivative constraint (positions stay), re-solves at
/// the current durations, then descends on time. Stops at the first iterate that
/// fails `feasible` and returns the one before it.
inline PiecewiseTrajectory refine_warm_start(const PiecewiseTrajectory& traj, double gamma,
                                             const TrajectoryPredicate& feasible,
                                             const PolyOptions& opts = {})
{
  if (traj.size() < 2)
    return traj;
  std::vector<WaypointSpec> wps = traj.waypoints;
  for (std::size_t w = 1; w + 1 < wps.size(); ++w) wps[w].release_derivatives();
  std::vector<double> T = traj.durations();
  for (double& t : T) t = std::max(t, opts.t_min);

  const double J_in = total_cost(traj, gamma);
  PiecewiseTrajectory current;
  try
  {
    current = solve_fixed_times(wps, T, opts).first;
  }
  catch (const InfeasibleQp&)
  {
    return traj;
  }
  if (total_cost(current, gamma) > J_in || !feasible(current))
    return traj;

  PiecewiseTrajectory last_ok = current;
  try
  {
    auto [out, rep] = detail::descend(wps, T, gamma, opts, [&](const PiecewiseTrajectory& cand) {
      if (!feasible(cand))
        return false;
      last_ok = cand;
      return true;
    });
    (void)out;
    (void)rep;
  }
  catch (const InfeasibleQp&)
  {
  }
  // The released problem forgets which waypoints carried attitude; restore the tags.
  last_ok.waypoints = traj.waypoints;
  for (std::size_t w = 1; w + 1 < last_ok.waypoints.size(); ++w)
    last_ok.waypoints[w].release_derivatives();
  return total_cost(last_ok, gamma) <= J_in ? last_ok : traj;
}

}  // namespace insat
