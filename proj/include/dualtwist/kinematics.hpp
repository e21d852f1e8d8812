#pragma once

#include <string>
#include <vector>

#include <Eigen/Core>
#include <Eigen/Geometry>

#include "dualtwist/errors.hpp"

namespace dualtwist {

using Vec3 = Eigen::Vector3d;
using JointConfig = Eigen::VectorXd;

struct Pose {
  Vec3 position = Vec3::Zero();
  Eigen::Quaterniond orientation = Eigen::Quaterniond::Identity();

  Pose() = default;
  Pose(Vec3 p, Eigen::Quaterniond q) : position(std::move(p)), orientation(q.normalized()) {}

  static Pose from_isometry(const Eigen::Isometry3d& T);
  Eigen::Isometry3d isometry() const;
  Eigen::Matrix3d rotation() const { return orientation.toRotationMatrix(); }
};

/// Rotation angle (rad, in [0, pi]) taking `a` to `b`; the log-map norm of a^-1 b.
double orientation_distance(const Eigen::Quaterniond& a, const Eigen::Quaterniond& b);

/// Position error (m) plus `orientation_weight` times the orientation angle (rad).
double pose_error(const Pose& a, const Pose& b, double orientation_weight = 0.5);

/// World-frame twist (translation delta, rotation vector) taking `from` to `to`.
Eigen::Matrix<double, 6, 1> pose_difference(const Pose& from, const Pose& to);

struct JointSpec {
  std::string name;
  Vec3 axis = Vec3::UnitZ();
  /// Fixed transform from this joint's frame (after its rotation) to the next joint's frame.
  Eigen::Isometry3d link = Eigen::Isometry3d::Identity();
  double lower = -M_PI;
  double upper = M_PI;
};

/// Serial chain of revolute joints. Joint i rotates about `axis` in its own frame,
/// then `link` carries the frame to joint i+1; the last link ends at the tool frame.
class KinematicChain {
public:
  KinematicChain() = default;
  KinematicChain(std::string name, Eigen::Isometry3d base, std::vector<JointSpec> joints);

  const std::string& name() const noexcept { return name_; }
  const Eigen::Isometry3d& base() const noexcept { return base_; }
  const std::vector<JointSpec>& joints() const noexcept { return joints_; }
  int joint_count() const noexcept { return static_cast<int>(joints_.size()); }

  Eigen::VectorXd lower_limits() const;
  Eigen::VectorXd upper_limits() const;
  bool within_limits(const JointConfig& q, double slack = 0.0) const;
  JointConfig clamp(const JointConfig& q) const;
  /// Sum of link translation lengths: an upper bound on tool distance from the first joint.
  double reach() const;

  void require_size(const JointConfig& q) const;

private:
  std::string name_;
  Eigen::Isometry3d base_ = Eigen::Isometry3d::Identity();
  std::vector<JointSpec> joints_;
};

struct Jacobian {
  Eigen::Matrix<double, 3, Eigen::Dynamic> linear;
  Eigen::Matrix<double, 3, Eigen::Dynamic> angular;

  int cols() const { return static_cast<int>(linear.cols()); }
  /// Stacked [linear; angular], 6 x n.
  Eigen::Matrix<double, 6, Eigen::Dynamic> full() const;
};

Pose forward_kinematics(const KinematicChain& chain, const JointConfig& q);

/// Base origin, then each subsequent joint origin, then the tool point: joint_count + 1 points.
std::vector<Vec3> joint_positions(const KinematicChain& chain, const JointConfig& q);

/// Geometric Jacobian at the tool point, world frame.
Jacobian jacobian(const KinematicChain& chain, const JointConfig& q);

struct IkOptions {
  double tol = 1e-4;
  int max_iters = 200;
  double damping = 0.01;
  double orientation_weight = 0.5;
  /// Largest per-iteration joint update (rad, inf-norm).
  double max_step = 0.25;
};

struct IkResult {
  JointConfig q;
  double residual = 0.0;
  int iterations = 0;
};

/// Damped least-squares IK with joint-limit clamping at every iteration.
/// Throws UnreachableTargetError when `options.tol` is not reached within `options.max_iters`.
IkResult solve_ik(const KinematicChain& chain, const Pose& target, const JointConfig& seed,
                  const IkOptions& options = {});

inline JointConfig inverse_kinematics(const KinematicChain& chain, const Pose& target,
                                      const JointConfig& seed, double tol, int max_iters) {
  IkOptions opts;
  opts.tol = tol;
  opts.max_iters = max_iters;
  return solve_ik(chain, target, seed, opts).q;
}

constexpr double deg2rad(double deg) { return deg * M_PI / 180.0; }
constexpr double rad2deg(double rad) { return rad * 180.0 / M_PI; }

}  // namespace dualtwist
