#pragma once

#include <utility>
#include <vector>

#include "dualtwist/kinematics.hpp"

namespace dualtwist {

/// Closed segment start + c * direction, c in [0, 1].
struct Segment {
  Vec3 start;
  Vec3 end;

  Vec3 direction() const { return end - start; }
  Vec3 at(double c) const { return start + c * direction(); }
  double length() const { return direction().norm(); }
};

struct LineDistance {
  double distance = 0.0;
  /// Closest-approach parameters along each line.
  double c_a = 0.0;
  double c_b = 0.0;
  bool parallel = false;
};

struct PointSegmentDistance {
  double distance = 0.0;
  /// Projection parameter of the point onto the segment's line (unclamped).
  double b = 0.0;
  Vec3 witness;
};

struct SegmentDistance {
  double distance = 0.0;
  Vec3 witness_a;
  Vec3 witness_b;
};

/// Distance between the infinite lines through `a` and `b`. Parallel lines
/// (|n_a x n_b| <= 1e-9 |n_a||n_b|) use the point-to-line distance of a.start.
LineDistance line_line_distance(const Segment& a, const Segment& b);

/// Perpendicular distance when the foot lands on the segment, nearer endpoint otherwise.
PointSegmentDistance point_segment_distance(const Vec3& c, const Segment& s);

/// Exact minimum distance between two closed segments.
SegmentDistance segment_segment_distance(const Segment& a, const Segment& b);

struct ArmSkeleton {
  std::vector<Vec3> points;

  ArmSkeleton() = default;
  explicit ArmSkeleton(std::vector<Vec3> pts) : points(std::move(pts)) {}

  int segment_count() const { return points.empty() ? 0 : static_cast<int>(points.size()) - 1; }
  Segment segment(int i) const { return Segment{points[i], points[i + 1]}; }
};

struct DistanceReport {
  double d_min = 0.0;
  int left_segment = -1;
  int right_segment = -1;
  Vec3 witness_left = Vec3::Zero();
  Vec3 witness_right = Vec3::Zero();
};

/// Minimum over all left x right link pairs. With `skip_adjacent_to_grasp` the
/// terminal (gripper) segment of each arm is left out. Zero-length links count as points.
DistanceReport min_arm_distance(const ArmSkeleton& left, const ArmSkeleton& right,
                                bool skip_adjacent_to_grasp);

enum class Safety { Safe, Unsafe };

struct SafetyVerdict {
  Safety safety = Safety::Safe;
  DistanceReport report;
  bool safe() const { return safety == Safety::Safe; }
};

/// SAFE iff d_min >= d_thr. Throws InputError unless d_thr > 0.
SafetyVerdict collision_check(const DistanceReport& report, double d_thr);

}  // namespace dualtwist
