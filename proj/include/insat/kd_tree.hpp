#pragma once

// Static 3-d tree over obstacle points, stored implicitly: the median of every
// index range is its node, split on the widest axis of the range.

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <vector>

#include "insat/flatness.hpp"

namespace insat
{

class CloudIndex
{
public:
  CloudIndex() = default;
  explicit CloudIndex(std::vector<Vec3> points) : pts_(std::move(points))
  {
    axis_.assign(pts_.size(), 0);
    build(0, pts_.size());
  }

  std::size_t size() const { return pts_.size(); }
  bool empty() const { return pts_.empty(); }
  const std::vector<Vec3>& points() const { return pts_; }

  /// Indices of every point with |p - c| <= r, ascending.
  std::vector<std::size_t> radius_search(const Vec3& c, double r) const
  {
    std::vector<std::size_t> out;
    if (!pts_.empty() && r >= 0.0)
      search(0, pts_.size(), c, r, r * r, out);
    std::sort(out.begin(), out.end());
    return out;
  }

  /// Early-exit query: true if any point within r satisfies pred.
  template <class Pred>
  bool any_within(const Vec3& c, double r, Pred&& pred) const
  {
    return !pts_.empty() && r >= 0.0 && any(0, pts_.size(), c, r, r * r, pred);
  }

private:
  void build(std::size_t lo, std::size_t hi)
  {
    if (hi - lo <= 1)
      return;
    Vec3 mn = pts_[lo], mx = pts_[lo];
    for (std::size_t i = lo + 1; i < hi; ++i)
    {
      mn = mn.cwiseMin(pts_[i]);
      mx = mx.cwiseMax(pts_[i]);
    }
    Eigen::Index ax;
    (mx - mn).maxCoeff(&ax);
    const std::size_t mid = lo + (hi - lo) / 2;
    // Full ordering on (axis value, x, y, z) keeps the layout reproducible.
    auto less = [ax](const Vec3& a, const Vec3& b) {
      if (a[ax] != b[ax])
        return a[ax] < b[ax];
      return std::lexicographical_compare(a.data(), a.data() + 3, b.data(), b.data() + 3);
    };
    std::nth_element(pts_.begin() + static_cast<std::ptrdiff_t>(lo),
                     pts_.begin() + static_cast<std::ptrdiff_t>(mid),
                     pts_.begin() + static_cast<std::ptrdiff_t>(hi), less);
    axis_[mid] = static_cast<std::uint8_t>(ax);
    build(lo, mid);
    build(mid + 1, hi);
  }

  void search(std::size_t lo, std::size_t hi, const Vec3& c, double r, double r2,
              std::vector<std::size_t>& out) const
  {
    if (lo >= hi)
      return;
    const std::size_t mid = lo + (hi - lo) / 2;
    const Vec3& p = pts_[mid];
    if ((p - c).squaredNorm() <= r2)
      out.push_back(mid);
    if (hi - lo == 1)
      return;
    const int ax = axis_[mid];
    const double d = c[ax] - p[ax];
    if (d - r <= 0.0)
      search(lo, mid, c, r, r2, out);
    if (d + r >= 0.0)
      search(mid + 1, hi, c, r, r2, out);
  }

  template <class Pred>
  bool any(std::size_t lo, std::size_t hi, const Vec3& c, double r, double r2, Pred& pred) const
  {
    if (lo >= hi)
      return false;
    const std::size_t mid = lo + (hi - lo) / 2;
    const Vec3& p = pts_[mid];
    if ((p - c).squaredNorm() <= r2 && pred(p))
      return true;
    if (hi - lo == 1)
      return false;
    const int ax = axis_[mid];
    const double d = c[ax] - p[ax];
    if (d - r <= 0.0 && any(lo, mid, c, r, r2, pred))
      return true;
    return d + r >= 0.0 && any(mid + 1, hi, c, r, r2, pred);
  }

  std::vector<Vec3> pts_;
  std::vector<std::uint8_t> axis_;
};

}  // namespace insat
