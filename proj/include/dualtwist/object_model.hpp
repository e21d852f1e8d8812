#pragma once

#include <optional>

#include "dualtwist/kinematics.hpp"

namespace dualtwist {

enum class Holder { Free, Left, Right };

const char* holder_name(Holder h);

/// One end of the object plus, when held, where it sits in the holder's tool frame.
struct ObjectEnd {
  Vec3 position = Vec3::Zero();
  /// Unit tangent at this end, oriented along the object from end 1 toward end 2.
  Vec3 axis = Vec3::UnitY();
  Holder holder = Holder::Free;
  Vec3 local_position = Vec3::Zero();
  Vec3 local_axis = Vec3::UnitZ();
};

/// Bar-like object twisted between the two grippers. End 1 is the end the planned
/// (right) arm picks up, end 2 the one the teleoperated arm aligns.
struct TwistObject {
  double length = 0.2;
  /// 1 = rigid, 0 = fully soft.
  double stiffness = 1.0;
  /// Allowed excess of |P1P2| over `length` while both ends are held.
  double stretch_tolerance = 2e-3;
  ObjectEnd end1;
  ObjectEnd end2;

  /// Straight object lying from p1 along `direction`.
  static TwistObject straight(const Vec3& p1, const Vec3& direction, double length,
                              double stiffness);

  const Vec3& p1() const { return end1.position; }
  const Vec3& p2() const { return end2.position; }
  Vec3 axis() const { return p2() - p1(); }
  int held_count() const;
};

enum class AlignmentVariant { AxisToObject, GripLine, AxisToAxis };

const char* variant_name(AlignmentVariant v);

struct AlignmentError {
  double degrees = 0.0;
  AlignmentVariant variant = AlignmentVariant::AxisToAxis;
};

/// Stiffness at or above which the grip-line form is used instead of axis-to-axis.
constexpr double kRigidVariantThreshold = 0.7;

AlignmentVariant variant_for_stiffness(double stiffness);

/// Angle between two vectors in degrees, [0, 180].
double angle_between(const Vec3& u, const Vec3& v);

/// Axis-to-object: right tool z vs P1P2. Grip line: right-to-left tool positions vs P1P2.
/// Axis-to-axis: right tool z vs left tool z.
AlignmentError alignment_error(const Pose& right_ee, const Pose& left_ee, const TwistObject& obj,
                               AlignmentVariant variant);

/// Droop of the free end, in degrees: (1 - s) * 90 * cos(elevation of the held axis).
/// `grasped_end_pose` z is the direction in which the object leaves the gripper.
double pendent_angle(const TwistObject& obj, const Pose& grasped_end_pose);

/// `axis` tipped downward by `droop_deg` within its vertical plane.
Vec3 droop_direction(const Vec3& axis, double droop_deg);

/// Attach `which` end (1 or 2) to the gripper at `gripper`. `offset_deg` tilts the held
/// axis about the tool x axis to model an inexact grasp.
TwistObject grasp(const TwistObject& obj, int which, Holder by, const Pose& gripper,
                  double offset_deg = 0.0);
TwistObject release(const TwistObject& obj, int which);

/// Held ends follow their grippers exactly; a single free end hangs per pendent_angle.
/// Throws OverstretchError when both ends are held farther apart than length + tolerance.
TwistObject update_object(const TwistObject& obj, const Pose& left_ee, const Pose& right_ee);

}  // namespace dualtwist
