#include "platelab/geometry/polyline.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "platelab/core/errors.hpp"

namespace platelab::geometry {

double segment_distance(const Vec2& x, const Vec2& a, const Vec2& b) {
  const Vec2 ab = b - a;
  const double len2 = ab.squaredNorm();
  double t = len2 > 0.0 ? (x - a).dot(ab) / len2 : 0.0;
  t = std::clamp(t, 0.0, 1.0);
  return (a + t * ab - x).norm();
}

struct Polyline::Index {
  double cell = 1.0;
  int nx = 1, ny = 1;
  Vec2 origin = Vec2::Zero();
  std::vector<std::vector<int>> buckets;  // segments touching each bucket
  std::vector<std::vector<int>> rows;     // segments spanning each row (for crossings)

  int bx(double x) const { return static_cast<int>(std::floor((x - origin.x()) / cell)); }
  int by(double y) const { return static_cast<int>(std::floor((y - origin.y()) / cell)); }
};

Polyline::Polyline(std::vector<Vec2> points) : points_(std::move(points)) {
  if (points_.size() < 3) throw InvalidInputError("polyline: need at least 3 points");
  lo_ = hi_ = points_.front();
  for (const auto& p : points_) {
    if (!p.allFinite()) throw InvalidInputError("polyline: non-finite point");
    lo_ = lo_.cwiseMin(p);
    hi_ = hi_.cwiseMax(p);
  }
  const std::size_t n = points_.size();
  for (std::size_t i = 0; i < n; ++i) step_ = std::max(step_, (points_[(i + 1) % n] - points_[i]).norm());

  auto index = std::make_shared<Index>();
  const Vec2 extent = hi_ - lo_;
  const double span = std::max({extent.x(), extent.y(), 1e-12});
  const double target = span / std::max(1.0, std::sqrt(static_cast<double>(n)));
  index->cell = std::max({target, 2.0 * step_, span / 1024.0});
  index->origin = lo_;
  index->nx = std::max(1, static_cast<int>(std::ceil(extent.x() / index->cell)) + 1);
  index->ny = std::max(1, static_cast<int>(std::ceil(extent.y() / index->cell)) + 1);
  index->buckets.resize(static_cast<std::size_t>(index->nx) * index->ny);
  index->rows.resize(index->ny);
  for (std::size_t i = 0; i < n; ++i) {
    const Vec2& a = points_[i];
    const Vec2& b = points_[(i + 1) % n];
    const int x0 = std::clamp(index->bx(std::min(a.x(), b.x())), 0, index->nx - 1);
    const int x1 = std::clamp(index->bx(std::max(a.x(), b.x())), 0, index->nx - 1);
    const int y0 = std::clamp(index->by(std::min(a.y(), b.y())), 0, index->ny - 1);
    const int y1 = std::clamp(index->by(std::max(a.y(), b.y())), 0, index->ny - 1);
    for (int iy = y0; iy <= y1; ++iy) {
      index->rows[iy].push_back(static_cast<int>(i));
      for (int ix = x0; ix <= x1; ++ix) index->buckets[static_cast<std::size_t>(iy) * index->nx + ix].push_back(static_cast<int>(i));
    }
  }
  index_ = std::move(index);
}

double Polyline::length() const {
  double l = 0.0;
  for (std::size_t i = 0; i < points_.size(); ++i) l += (points_[(i + 1) % points_.size()] - points_[i]).norm();
  return l;
}

double Polyline::signed_area() const {
  double a = 0.0;
  for (std::size_t i = 0; i < points_.size(); ++i) {
    const Vec2& p = points_[i];
    const Vec2& q = points_[(i + 1) % points_.size()];
    a += p.x() * q.y() - q.x() * p.y();
  }
  return 0.5 * a;
}

double Polyline::distance(const Vec2& x) const {
  const Index& idx = *index_;
  const std::size_t n = points_.size();
  const int cx = idx.bx(x.x());
  const int cy = idx.by(x.y());
  // Chebyshev distance (in buckets) from the query bucket to the grid.
  const int gx = cx < 0 ? -cx : (cx >= idx.nx ? cx - idx.nx + 1 : 0);
  const int gy = cy < 0 ? -cy : (cy >= idx.ny ? cy - idx.ny + 1 : 0);
  const int kmin = std::max(gx, gy);
  const int kmax = std::max({std::abs(cx) + idx.nx, std::abs(cy) + idx.ny});
  double best = std::numeric_limits<double>::infinity();
  auto visit = [&](int ix, int iy) {
    if (ix < 0 || iy < 0 || ix >= idx.nx || iy >= idx.ny) return;
    for (int s : idx.buckets[static_cast<std::size_t>(iy) * idx.nx + ix]) {
      best = std::min(best, segment_distance(x, points_[s], points_[(s + 1) % n]));
    }
  };
  for (int k = kmin; k <= kmax; ++k) {
    if (k == 0) {
      visit(cx, cy);
    } else {
      for (int d = -k; d <= k; ++d) {
        visit(cx + d, cy - k);
        visit(cx + d, cy + k);
      }
      for (int d = -k + 1; d <= k - 1; ++d) {
        visit(cx - k, cy + d);
        visit(cx + k, cy + d);
      }
    }
    // Buckets in ring k+1 are at least k cells away from x.
    if (best <= static_cast<double>(k) * idx.cell) break;
  }
  return best;
}

bool Polyline::contains(const Vec2& x) const {
  if (x.x() < lo_.x() || x.x() > hi_.x() || x.y() < lo_.y() || x.y() > hi_.y()) return false;
  const Index& idx = *index_;
  const int row = std::clamp(idx.by(x.y()), 0, idx.ny - 1);
  const std::size_t n = points_.size();
  bool inside = false;
  for (int s : idx.rows[row]) {
    const Vec2& a = points_[s];
    const Vec2& b = points_[(s + 1) % n];
    if ((a.y() > x.y()) != (b.y() > x.y())) {
      const double xc = a.x() + (x.y() - a.y()) * (b.x() - a.x()) / (b.y() - a.y());
      if (xc > x.x()) inside = !inside;
    }
  }
  return inside;
}

namespace {
double orient(const Vec2& a, const Vec2& b, const Vec2& c) {
  return (b.x() - a.x()) * (c.y() - a.y()) - (b.y() - a.y()) * (c.x() - a.x());
}

bool segments_cross(const Vec2& a, const Vec2& b, const Vec2& c, const Vec2& d) {
  const double o1 = orient(a, b, c), o2 = orient(a, b, d);
  const double o3 = orient(c, d, a), o4 = orient(c, d, b);
  return ((o1 > 0) != (o2 > 0)) && ((o3 > 0) != (o4 > 0)) && o1 != 0 && o2 != 0 && o3 != 0 && o4 != 0;
}
}  // namespace

bool Polyline::self_intersects() const {
  const Index& idx = *index_;
  const std::size_t n = points_.size();
  for (const auto& bucket : idx.buckets) {
    for (std::size_t u = 0; u < bucket.size(); ++u) {
      for (std::size_t v = u + 1; v < bucket.size(); ++v) {
        const std::size_t i = bucket[u], j = bucket[v];
        const std::size_t gap = i > j ? i - j : j - i;
        if (gap <= 1 || gap == n - 1) continue;
        if (segments_cross(points_[i], points_[(i + 1) % n], points_[j], points_[(j + 1) % n])) return true;
      }
    }
  }
  return false;
}

}  // namespace platelab::geometry
