#pragma once

// Dense univariate polynomials (ascending monomial coefficients) and the
// real-root isolation used for extremum finding on bounded intervals.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <vector>

namespace insat::poly
{

using Coeffs = std::vector<double>;

inline double eval(const Coeffs& p, double t)
{
  double r = 0.0;
  for (auto it = p.rbegin(); it != p.rend(); ++it)
    r = r * t + *it;
  return r;
}

inline Coeffs derivative(const Coeffs& p, int order = 1)
{
  Coeffs d = p;
  for (int r = 0; r < order; ++r)
  {
    if (d.size() <= 1)
      return {0.0};
    Coeffs n(d.size() - 1);
    for (std::size_t k = 1; k < d.size(); ++k)
      n[k - 1] = static_cast<double>(k) * d[k];
    d = std::move(n);
  }
  return d;
}

inline Coeffs add(const Coeffs& a, const Coeffs& b)
{
  Coeffs r(std::max(a.size(), b.size()), 0.0);
  for (std::size_t i = 0; i < a.size(); ++i) r[i] += a[i];
  for (std::size_t i = 0; i < b.size(); ++i) r[i] += b[i];
  return r;
}

inline Coeffs scale(Coeffs a, double s)
{
  for (double& c : a) c *= s;
  return a;
}

inline Coeffs multiply(const Coeffs& a, const Coeffs& b)
{
  if (a.empty() || b.empty())
    return {0.0};
  Coeffs r(a.size() + b.size() - 1, 0.0);
  for (std::size_t i = 0; i < a.size(); ++i)
    for (std::size_t j = 0; j < b.size(); ++j)
      r[i + j] += a[i] * b[j];
  return r;
}

/// Coefficients of q(u) = p(c + u).
inline Coeffs taylor_shift(Coeffs p, double c)
{
  const std::size_t n = p.size();
  for (std::size_t i = 0; i + 1 < n; ++i)
    for (std::size_t k = n - 1; k > i; --k)
      p[k - 1] += c * p[k];
  return p;
}

/// Coefficients of q(s) = p(s * T).
inline Coeffs time_scale(Coeffs p, double T)
{
  double f = 1.0;
  for (double& c : p)
  {
    c *= f;
    f *= T;
  }
  return p;
}

/// Upper bound of |p(c+u)| over |u| <= h given shifted coefficients q.
inline double abs_bound(const Coeffs& q, double h)
{
  double s = 0.0, f = 1.0;
  for (double c : q)
  {
    s += std::abs(c) * f;
    f *= h;
  }
  return s;
}

/// Lower bound of p(c+u) over |u| <= h given shifted coefficients q.
inline double lower_bound(const Coeffs& q, double h)
{
  if (q.empty())
    return 0.0;
  double s = 0.0, f = h;
  for (std::size_t k = 1; k < q.size(); ++k)
  {
    s += std::abs(q[k]) * f;
    f *= h;
  }
  return q[0] - s;
}

struct Range
{
  double lo;
  double hi;
};

/// Conservative enclosure of p over [a, b] from coefficients shifted to the midpoint.
inline Range range_bound(const Coeffs& p, double a, double b)
{
  const double c = 0.5 * (a + b), h = 0.5 * (b - a);
  const Coeffs q = taylor_shift(p, c);
  const double lo = lower_bound(q, h);
  const double spread = q.empty() ? 0.0 : q[0] - lo;
  const double pad = 1e-12 * (std::abs(q.empty() ? 0.0 : q[0]) + spread);
  return {lo - pad, (q.empty() ? 0.0 : q[0]) + spread + pad};
}

namespace detail
{

inline std::size_t effective_degree(const Coeffs& p)
{
  double scale = 0.0;
  for (double c : p) scale = std::max(scale, std::abs(c));
  if (scale == 0.0)
    return 0;
  std::size_t d = p.size() - 1;
  while (d > 0 && std::abs(p[d]) <= 1e-14 * scale)
    --d;
  return d;
}

inline double eval_raw(const double* p, std::size_t n, double t)
{
  double r = 0.0;
  for (std::size_t i = n; i-- > 0;)
    r = r * t + p[i];
  return r;
}

// Root of p in [lo, hi] where p(lo), p(hi) have opposite signs and p is monotone.
inline double bracketed_root(const double* p, const double* dp, std::size_t n, double lo, double hi,
                             double flo)
{
  double t = 0.5 * (lo + hi);
  for (int it = 0; it < 100; ++it)
  {
    const double ft = eval_raw(p, n, t);
    if (ft == 0.0)
      return t;
    if ((ft < 0.0) == (flo < 0.0))
      lo = t, flo = ft;
    else
      hi = t;
    if (hi - lo <= 1e-14 * std::max(1.0, std::abs(hi)))
      break;
    const double d = eval_raw(dp, n - 1, t);
    double next = (d != 0.0) ? t - ft / d : 0.5 * (lo + hi);
    if (!(next > lo && next < hi))
      next = 0.5 * (lo + hi);
    else if (std::abs(next - t) <= 1e-15 * std::max(1.0, std::abs(t)))
      return next;
    t = next;
  }
  return t;
}

inline constexpr std::size_t kMaxStackDegree = 24;

// Roots of p (n coefficients, n - 1 <= kMaxStackDegree) in [a, b] written to out; returns count.
inline std::size_t roots_into(const double* p_in, std::size_t n, double a, double b, double* out)
{
  double scale = 0.0;
  for (std::size_t i = 0; i < n; ++i) scale = std::max(scale, std::abs(p_in[i]));
  if (scale == 0.0 || b < a)
    return 0;
  std::size_t deg = n - 1;
  while (deg > 0 && std::abs(p_in[deg]) <= 1e-14 * scale)
    --deg;
  if (deg == 0)
    return 0;
  const double* p = p_in;
  std::size_t count = 0;
  if (deg == 1)
  {
    const double r = -p[0] / p[1];
    if (r >= a && r <= b)
      out[count++] = r;
    return count;
  }
  double dp[kMaxStackDegree];
  for (std::size_t k = 1; k <= deg; ++k)
    dp[k - 1] = static_cast<double>(k) * p[k];
  double breaks[kMaxStackDegree + 4];
  std::size_t nb = 0;
  breaks[nb++] = a;
  double crit[kMaxStackDegree + 2];
  const std::size_t nc = roots_into(dp, deg, a, b, crit);
  for (std::size_t i = 0; i < nc; ++i)
    if (crit[i] > breaks[nb - 1])
      breaks[nb++] = crit[i];
  if (b > breaks[nb - 1])
    breaks[nb++] = b;

  double pscale = 0.0;
  for (std::size_t i = 0; i <= deg; ++i) pscale = std::max(pscale, std::abs(p[i]));
  const double zero_tol = 1e-13 * pscale;

  double f_prev = eval_raw(p, deg + 1, breaks[0]);
  if (std::abs(f_prev) <= zero_tol)
    out[count++] = breaks[0];
  for (std::size_t i = 1; i < nb; ++i)
  {
    const double f_cur = eval_raw(p, deg + 1, breaks[i]);
    const bool prev_zero = std::abs(f_prev) <= zero_tol;
    const bool cur_zero = std::abs(f_cur) <= zero_tol;
    if (cur_zero)
    {
      if (count == 0 || breaks[i] > out[count - 1])
        out[count++] = breaks[i];
    }
    else if (!prev_zero && ((f_prev < 0.0) != (f_cur < 0.0)))
    {
      out[count++] = bracketed_root(p, dp, deg + 1, breaks[i - 1], breaks[i], f_prev);
    }
    f_prev = f_cur;
  }
  return count;
}

}  // namespace detail

/// Real roots of p strictly inside or on [a, b], ascending. Double roots of even
/// multiplicity that do not change sign are reported only if p vanishes exactly
/// at a critical point.
inline std::vector<double> real_roots(const Coeffs& p, double a, double b)
{
  if (p.empty())
    return {};
  if (p.size() - 1 > detail::kMaxStackDegree)
  {
    // trim leading negligible terms; larger degrees are not produced by the planner
    const std::size_t deg = detail::effective_degree(p);
    if (deg > detail::kMaxStackDegree)
      throw std::invalid_argument("real_roots: degree too high");
    return real_roots(Coeffs(p.begin(), p.begin() + static_cast<std::ptrdiff_t>(deg) + 1), a, b);
  }
  double out[detail::kMaxStackDegree + 4];
  const std::size_t n = detail::roots_into(p.data(), p.size(), a, b, out);
  return std::vector<double>(out, out + n);
}

/// Interval endpoints plus interior critical points of p, ascending.
inline std::vector<double> extremum_candidates(const Coeffs& p, double a, double b)
{
  std::vector<double> c{a};
  for (double r : real_roots(derivative(p), a, b))
    if (r > a && r < b)
      c.push_back(r);
  c.push_back(b);
  return c;
}

struct Extremum
{
  double t;
  double value;
};

inline Extremum max_on(const Coeffs& p, double a, double b)
{
  Extremum best{a, eval(p, a)};
  for (double t : extremum_candidates(p, a, b))
  {
    const double v = eval(p, t);
    if (v > best.value)
      best = {t, v};
  }
  return best;
}

inline Extremum min_on(const Coeffs& p, double a, double b)
{
  Extremum e = max_on(scale(p, -1.0), a, b);
  e.value = -e.value;
  return e;
}

}  // namespace insat::poly
