#pragma once

#include <Eigen/Core>
#include <memory>
#include <span>
#include <vector>

namespace platelab::geometry {

using Vec2 = Eigen::Vector2d;

// Closed polygonal curve (last point connects to the first) with a bucket
// index for distance and point-in-polygon queries.
class Polyline {
 public:
  Polyline() = default;
  explicit Polyline(std::vector<Vec2> points);

  std::span<const Vec2> points() const { return points_; }
  std::size_t size() const { return points_.size(); }
  bool empty() const { return points_.empty(); }
  // Longest segment length.
  double step() const { return step_; }
  double length() const;
  double signed_area() const;
  Vec2 lower() const { return lo_; }
  Vec2 upper() const { return hi_; }

  double distance(const Vec2& x) const;
  bool contains(const Vec2& x) const;
  bool self_intersects() const;

 private:
  struct Index;
  std::vector<Vec2> points_;
  double step_ = 0.0;
  Vec2 lo_ = Vec2::Zero();
  Vec2 hi_ = Vec2::Zero();
  std::shared_ptr<const Index> index_;
};

double segment_distance(const Vec2& x, const Vec2& a, const Vec2& b);

}  // namespace platelab::geometry
