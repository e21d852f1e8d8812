#include "dualtwist/kinematics.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include <Eigen/LU>

namespace dualtwist {

Pose Pose::from_isometry(const Eigen::Isometry3d& T) {
  return Pose(T.translation(), Eigen::Quaterniond(T.rotation()));
}

Eigen::Isometry3d Pose::isometry() const {
  Eigen::Isometry3d T = Eigen::Isometry3d::Identity();
  T.linear() = orientation.toRotationMatrix();
  T.translation() = position;
  return T;
}

double orientation_distance(const Eigen::Quaterniond& a, const Eigen::Quaterniond& b) {
  const Eigen::Quaterniond d = a.conjugate() * b;
  return 2.0 * std::atan2(d.vec().norm(), std::abs(d.w()));
}

double pose_error(const Pose& a, const Pose& b, double orientation_weight) {
  return (a.position - b.position).norm() +
         orientation_weight * orientation_distance(a.orientation, b.orientation);
}

Eigen::Matrix<double, 6, 1> pose_difference(const Pose& from, const Pose& to) {
  Eigen::Matrix<double, 6, 1> d;
  d.head<3>() = to.position - from.position;
  Eigen::Quaterniond r = to.orientation * from.orientation.conjugate();
  if (r.w() < 0.0) r.coeffs() = -r.coeffs();
  const double s = r.vec().norm();
  if (s < 1e-12) {
    d.tail<3>() = 2.0 * r.vec();
  } else {
    d.tail<3>() = r.vec() / s * (2.0 * std::atan2(s, r.w()));
  }
  return d;
}

KinematicChain::KinematicChain(std::string name, Eigen::Isometry3d base,
                               std::vector<JointSpec> joints)
    : name_(std::move(name)), base_(base), joints_(std::move(joints)) {
  if (joints_.empty()) throw ConfigurationError("chain '" + name_ + "' has no joints");
  for (const auto& j : joints_) {
    if (std::abs(j.axis.norm() - 1.0) > 1e-9) {
      throw ConfigurationError("joint '" + j.name + "' axis is not unit length");
    }
    if (!(j.lower < j.upper)) {
      throw ConfigurationError("joint '" + j.name + "' has lower limit >= upper limit");
    }
  }
}

Eigen::VectorXd KinematicChain::lower_limits() const {
  Eigen::VectorXd v(joint_count());
  for (int i = 0; i < joint_count(); ++i) v[i] = joints_[i].lower;
  return v;
}

Eigen::VectorXd KinematicChain::upper_limits() const {
  Eigen::VectorXd v(joint_count());
  for (int i = 0; i < joint_count(); ++i) v[i] = joints_[i].upper;
  return v;
}

bool KinematicChain::within_limits(const JointConfig& q, double slack) const {
  if (q.size() != joint_count()) return false;
  for (int i = 0; i < joint_count(); ++i) {
    if (!(q[i] >= joints_[i].lower - slack && q[i] <= joints_[i].upper + slack)) return false;
  }
  return true;
}

JointConfig KinematicChain::clamp(const JointConfig& q) const {
  require_size(q);
  JointConfig out(q.size());
  for (int i = 0; i < joint_count(); ++i) {
    out[i] = std::clamp(q[i], joints_[i].lower, joints_[i].upper);
  }
  return out;
}

double KinematicChain::reach() const {
  double r = 0.0;
  for (const auto& j : joints_) r += j.link.translation().norm();
  return r;
}

void KinematicChain::require_size(const JointConfig& q) const {
  if (q.size() != joint_count()) {
    std::ostringstream os;
    os << "chain '" << name_ << "' expects " << joint_count() << " joint values, got "
       << q.size();
    throw ConfigurationError(os.str());
  }
}

Eigen::Matrix<double, 6, Eigen::Dynamic> Jacobian::full() const {
  Eigen::Matrix<double, 6, Eigen::Dynamic> J(6, linear.cols());
  J.topRows<3>() = linear;
  J.bottomRows<3>() = angular;
  return J;
}

namespace {

// Frames at each joint (before the joint's own rotation) plus the tool frame.
std::vector<Eigen::Isometry3d> chain_frames(const KinematicChain& chain, const JointConfig& q) {
  chain.require_size(q);
  std::vector<Eigen::Isometry3d> frames;
  frames.reserve(chain.joint_count() + 1);
  Eigen::Isometry3d T = chain.base();
  for (int i = 0; i < chain.joint_count(); ++i) {
    frames.push_back(T);
    const auto& j = chain.joints()[i];
    T = T * Eigen::AngleAxisd(q[i], j.axis) * j.link;
  }
  frames.push_back(T);
  return frames;
}

}  // namespace

Pose forward_kinematics(const KinematicChain& chain, const JointConfig& q) {
  return Pose::from_isometry(chain_frames(chain, q).back());
}

std::vector<Vec3> joint_positions(const KinematicChain& chain, const JointConfig& q) {
  const auto frames = chain_frames(chain, q);
  std::vector<Vec3> pts;
  pts.reserve(frames.size());
  for (const auto& f : frames) pts.push_back(f.translation());
  return pts;
}

Jacobian jacobian(const KinematicChain& chain, const JointConfig& q) {
  const auto frames = chain_frames(chain, q);
  const int n = chain.joint_count();
  const Vec3 tip = frames.back().translation();
  Jacobian J;
  J.linear.resize(3, n);
  J.angular.resize(3, n);
  for (int i = 0; i < n; ++i) {
    const Vec3 z = frames[i].linear() * chain.joints()[i].axis;
    J.angular.col(i) = z;
    J.linear.col(i) = z.cross(tip - frames[i].translation());
  }
  return J;
}

IkResult solve_ik(const KinematicChain& chain, const Pose& target, const JointConfig& seed,
                  const IkOptions& options) {
  chain.require_size(seed);
  if (!(options.tol > 0.0)) throw InputError("IK tolerance must be positive");
  if (!target.position.allFinite() || !target.orientation.coeffs().allFinite()) {
    throw InputError("IK target is not finite");
  }

  JointConfig q = chain.clamp(seed);
  const double base_dist = (target.position - chain.base().translation()).norm();
  if (base_dist > chain.reach() + options.tol) {
    std::ostringstream os;
    os << "target is " << base_dist << " m from the base of '" << chain.name()
       << "', beyond reach " << chain.reach() << " m";
    throw UnreachableTargetError(os.str(), base_dist - chain.reach(), q);
  }

  const double lambda2 = options.damping * options.damping;
  double err = pose_error(forward_kinematics(chain, q), target, options.orientation_weight);
  JointConfig best = q;
  double best_err = err;

  int iter = 0;
  while (err > options.tol && iter < options.max_iters) {
    ++iter;
    const Pose current = forward_kinematics(chain, q);
    const Eigen::Matrix<double, 6, 1> e = pose_difference(current, target);
    const auto J = jacobian(chain, q).full();
    const Eigen::Matrix<double, 6, 6> JJt =
        J * J.transpose() + lambda2 * Eigen::Matrix<double, 6, 6>::Identity();
    Eigen::VectorXd dq = J.transpose() * JJt.partialPivLu().solve(e);
    const double peak = dq.cwiseAbs().maxCoeff();
    if (peak > options.max_step) dq *= options.max_step / peak;
    q = chain.clamp(q + dq);
    err = pose_error(forward_kinematics(chain, q), target, options.orientation_weight);
    if (err < best_err) {
      best_err = err;
      best = q;
    }
  }

  if (best_err > options.tol) {
    std::ostringstream os;
    os << "IK on '" << chain.name() << "' did not converge in " << options.max_iters
       << " iterations (residual " << best_err << ")";
    throw UnreachableTargetError(os.str(), best_err, best);
  }
  return IkResult{best, best_err, iter};
}

}  // namespace dualtwist
