#include "dualtwist/collision.hpp"

#include <cmath>
#include <limits>

namespace dualtwist {

namespace {

constexpr double kParallelTol = 1e-9;
constexpr double kDegenerateLength = 1e-12;

void require_nondegenerate(const Segment& s) {
  if (!(s.length() > kDegenerateLength)) {
    throw DegenerateGeometryError("zero-length segment");
  }
}

// Nearest point of a possibly zero-length segment to c.
Vec3 closest_on(const Segment& s, const Vec3& c) {
  const Vec3 n = s.direction();
  const double len2 = n.squaredNorm();
  if (len2 <= kDegenerateLength * kDegenerateLength) return s.start;
  const double b = (c - s.start).dot(n) / len2;
  if (b <= 0.0) return s.start;
  if (b >= 1.0) return s.end;
  return s.start + b * n;
}

SegmentDistance endpoint_candidates(const Segment& a, const Segment& b) {
  SegmentDistance best;
  best.distance = std::numeric_limits<double>::infinity();
  auto consider = [&best](const Vec3& wa, const Vec3& wb) {
    const double d = (wa - wb).norm();
    if (d < best.distance) best = SegmentDistance{d, wa, wb};
  };
  consider(a.start, closest_on(b, a.start));
  consider(a.end, closest_on(b, a.end));
  consider(closest_on(a, b.start), b.start);
  consider(closest_on(a, b.end), b.end);
  return best;
}

// Same as segment_segment_distance but tolerant of zero-length segments.
SegmentDistance link_distance(const Segment& a, const Segment& b) {
  const Vec3 na = a.direction();
  const Vec3 nb = b.direction();
  const Vec3 cross = na.cross(nb);
  const double scale = na.norm() * nb.norm();
  if (scale > 0.0 && cross.norm() > kParallelTol * scale) {
    const Vec3 w0 = a.start - b.start;
    const double A = na.dot(na);
    const double B = na.dot(nb);
    const double C = nb.dot(nb);
    const double D = na.dot(w0);
    const double E = nb.dot(w0);
    const double denom = A * C - B * B;
    const double ca = (B * E - C * D) / denom;
    const double cb = (A * E - B * D) / denom;
    if (ca >= 0.0 && ca <= 1.0 && cb >= 0.0 && cb <= 1.0) {
      const Vec3 wa = a.start + ca * na;
      const Vec3 wb = b.start + cb * nb;
      return SegmentDistance{(wa - wb).norm(), wa, wb};
    }
  }
  return endpoint_candidates(a, b);
}

}  // namespace

LineDistance line_line_distance(const Segment& a, const Segment& b) {
  require_nondegenerate(a);
  require_nondegenerate(b);
  const Vec3 na = a.direction();
  const Vec3 nb = b.direction();
  const Vec3 cross = na.cross(nb);
  const Vec3 w0 = a.start - b.start;

  LineDistance out;
  if (cross.norm() <= kParallelTol * na.norm() * nb.norm()) {
    out.parallel = true;
    out.c_a = 0.0;
    out.c_b = (a.start - b.start).dot(nb) / nb.squaredNorm();
    out.distance = nb.cross(w0).norm() / nb.norm();
    return out;
  }
  // |(n_a x n_b) . (P_a - P_b)| / |n_a x n_b|; the closest-point parameters solve
  // the 2x2 normal equations of |w0 + c_a n_a - c_b n_b|^2.
  out.distance = std::abs(cross.dot(w0)) / cross.norm();
  const double A = na.dot(na);
  const double B = na.dot(nb);
  const double C = nb.dot(nb);
  const double D = na.dot(w0);
  const double E = nb.dot(w0);
  const double denom = A * C - B * B;
  out.c_a = (B * E - C * D) / denom;
  out.c_b = (A * E - B * D) / denom;
  return out;
}

PointSegmentDistance point_segment_distance(const Vec3& c, const Segment& s) {
  require_nondegenerate(s);
  const Vec3 n = s.direction();
  const Vec3 qc = c - s.start;
  PointSegmentDistance out;
  out.b = n.dot(qc) / n.squaredNorm();
  if (out.b >= 0.0 && out.b <= 1.0) {
    out.distance = n.cross(qc).norm() / n.norm();
    out.witness = s.start + out.b * n;
    return out;
  }
  const double d_start = qc.norm();
  const double d_end = (c - s.end).norm();
  if (d_start <= d_end) {
    out.distance = d_start;
    out.witness = s.start;
  } else {
    out.distance = d_end;
    out.witness = s.end;
  }
  return out;
}

SegmentDistance segment_segment_distance(const Segment& a, const Segment& b) {
  require_nondegenerate(a);
  require_nondegenerate(b);
  return link_distance(a, b);
}

DistanceReport min_arm_distance(const ArmSkeleton& left, const ArmSkeleton& right,
                                bool skip_adjacent_to_grasp) {
  const int nl = left.segment_count() - (skip_adjacent_to_grasp ? 1 : 0);
  const int nr = right.segment_count() - (skip_adjacent_to_grasp ? 1 : 0);
  if (nl <= 0 || nr <= 0) throw ConfigurationError("arm skeleton has no segments to check");

  DistanceReport report;
  report.d_min = std::numeric_limits<double>::infinity();
  for (int i = 0; i < nl; ++i) {
    const Segment a = left.segment(i);
    for (int j = 0; j < nr; ++j) {
      const SegmentDistance d = link_distance(a, right.segment(j));
      if (d.distance < report.d_min) {
        report.d_min = d.distance;
        report.left_segment = i;
        report.right_segment = j;
        report.witness_left = d.witness_a;
        report.witness_right = d.witness_b;
      }
    }
  }
  return report;
}

SafetyVerdict collision_check(const DistanceReport& report, double d_thr) {
  if (!(d_thr > 0.0)) throw InputError("collision threshold must be positive");
  return SafetyVerdict{report.d_min >= d_thr ? Safety::Safe : Safety::Unsafe, report};
}

}  // namespace dualtwist
