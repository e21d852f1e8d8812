#include "dualtwist/object_model.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace dualtwist {

const char* holder_name(Holder h) {
  switch (h) {
    case Holder::Free: return "free";
    case Holder::Left: return "left";
    case Holder::Right: return "right";
  }
  return "?";
}

const char* variant_name(AlignmentVariant v) {
  switch (v) {
    case AlignmentVariant::AxisToObject: return "axis_to_object";
    case AlignmentVariant::GripLine: return "grip_line";
    case AlignmentVariant::AxisToAxis: return "axis_to_axis";
  }
  return "?";
}

TwistObject TwistObject::straight(const Vec3& p1, const Vec3& direction, double length,
                                  double stiffness) {
  if (!(length > 0.0)) throw ConfigurationError("object length must be positive");
  if (!(stiffness >= 0.0 && stiffness <= 1.0)) {
    throw ConfigurationError("object stiffness must lie in [0, 1]");
  }
  if (direction.norm() < 1e-12) throw DegenerateGeometryError("object direction is zero");
  TwistObject obj;
  obj.length = length;
  obj.stiffness = stiffness;
  const Vec3 u = direction.normalized();
  obj.end1.position = p1;
  obj.end1.axis = u;
  obj.end2.position = p1 + length * u;
  obj.end2.axis = u;
  return obj;
}

int TwistObject::held_count() const {
  return (end1.holder != Holder::Free ? 1 : 0) + (end2.holder != Holder::Free ? 1 : 0);
}

AlignmentVariant variant_for_stiffness(double stiffness) {
  return stiffness >= kRigidVariantThreshold ? AlignmentVariant::GripLine
                                             : AlignmentVariant::AxisToAxis;
}

double angle_between(const Vec3& u, const Vec3& v) {
  const double nu = u.norm();
  const double nv = v.norm();
  if (!(nu > 1e-12) || !(nv > 1e-12)) {
    throw DegenerateGeometryError("angle undefined for a zero-length vector");
  }
  // atan2 form keeps precision near 0 and 180 degrees.
  return rad2deg(std::atan2(u.cross(v).norm(), u.dot(v)));
}

AlignmentError alignment_error(const Pose& right_ee, const Pose& left_ee, const TwistObject& obj,
                               AlignmentVariant variant) {
  const Vec3 z_right = right_ee.orientation * Vec3::UnitZ();
  switch (variant) {
    case AlignmentVariant::AxisToObject:
      return {angle_between(z_right, obj.axis()), variant};
    case AlignmentVariant::GripLine:
      return {angle_between(left_ee.position - right_ee.position, obj.axis()), variant};
    case AlignmentVariant::AxisToAxis:
      return {angle_between(z_right, left_ee.orientation * Vec3::UnitZ()), variant};
  }
  throw InputError("unknown alignment variant");
}

double pendent_angle(const TwistObject& obj, const Pose& grasped_end_pose) {
  if (obj.held_count() != 1) {
    throw StateError("pendent angle needs exactly one held end");
  }
  const Vec3 axis = grasped_end_pose.orientation * Vec3::UnitZ();
  const double elevation = std::asin(std::clamp(axis.normalized().z(), -1.0, 1.0));
  return (1.0 - obj.stiffness) * 90.0 * std::cos(elevation);
}

Vec3 droop_direction(const Vec3& axis, double droop_deg) {
  const Vec3 a = axis.normalized();
  const Vec3 horizontal(a.x(), a.y(), 0.0);
  if (horizontal.norm() < 1e-12) return a;
  const double elevation = std::atan2(a.z(), horizontal.norm()) - deg2rad(droop_deg);
  return std::cos(elevation) * horizontal.normalized() + std::sin(elevation) * Vec3::UnitZ();
}

namespace {

ObjectEnd& end_ref(TwistObject& obj, int which) {
  if (which == 1) return obj.end1;
  if (which == 2) return obj.end2;
  throw InputError("object end must be 1 or 2");
}

void track(ObjectEnd& end, const Pose& gripper) {
  end.position = gripper.position + gripper.orientation * end.local_position;
  end.axis = (gripper.orientation * end.local_axis).normalized();
}

// Orientation whose z axis is `z`; the rest of the frame is irrelevant for the droop.
Pose axis_pose(const Vec3& position, const Vec3& z) {
  return Pose(position, Eigen::Quaterniond::FromTwoVectors(Vec3::UnitZ(), z));
}

}  // namespace

TwistObject grasp(const TwistObject& obj, int which, Holder by, const Pose& gripper,
                  double offset_deg) {
  if (by == Holder::Free) throw InputError("grasp needs a holder");
  TwistObject out = obj;
  ObjectEnd& end = end_ref(out, which);
  if (end.holder != Holder::Free) throw StateError("object end is already held");
  const Eigen::Quaterniond inv = gripper.orientation.conjugate();
  end.holder = by;
  end.local_position = inv * (end.position - gripper.position);
  end.local_axis = inv * end.axis;
  if (offset_deg != 0.0) {
    end.local_axis = Eigen::AngleAxisd(deg2rad(offset_deg), Vec3::UnitX()) * end.local_axis;
    track(end, gripper);
  }
  return out;
}

TwistObject release(const TwistObject& obj, int which) {
  TwistObject out = obj;
  ObjectEnd& end = end_ref(out, which);
  end.holder = Holder::Free;
  end.local_position.setZero();
  end.local_axis = Vec3::UnitZ();
  return out;
}

TwistObject update_object(const TwistObject& obj, const Pose& left_ee, const Pose& right_ee) {
  TwistObject out = obj;
  auto gripper_of = [&](Holder h) -> const Pose& { return h == Holder::Left ? left_ee : right_ee; };
  if (out.end1.holder != Holder::Free) track(out.end1, gripper_of(out.end1.holder));
  if (out.end2.holder != Holder::Free) track(out.end2, gripper_of(out.end2.holder));

  const bool held1 = out.end1.holder != Holder::Free;
  const bool held2 = out.end2.holder != Holder::Free;
  if (held1 && held2) {
    const double sep = (out.p2() - out.p1()).norm();
    if (sep > out.length + out.stretch_tolerance) {
      std::ostringstream os;
      os << "object overstretched: ends " << sep << " m apart, length " << out.length << " m";
      throw OverstretchError(os.str(), sep);
    }
  } else if (held1) {
    const double droop = pendent_angle(out, axis_pose(out.p1(), out.end1.axis));
    const Vec3 d = droop_direction(out.end1.axis, droop);
    out.end2.position = out.p1() + out.length * d;
    out.end2.axis = d;
  } else if (held2) {
    const double droop = pendent_angle(out, axis_pose(out.p2(), -out.end2.axis));
    const Vec3 d = droop_direction(-out.end2.axis, droop);
    out.end1.position = out.p2() + out.length * d;
    out.end1.axis = -d;
  }
  return out;
}

}  // namespace dualtwist
