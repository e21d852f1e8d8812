#include "dualtwist/task_engine.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "dualtwist/manipulability.hpp"

namespace dualtwist {

const char* phase_name(Phase p) {
  switch (p) {
    case Phase::Initial: return "Initial";
    case Phase::GraspRight: return "GraspRight";
    case Phase::Transport: return "Transport";
    case Phase::AlignLeft: return "AlignLeft";
    case Phase::Twist: return "Twist";
    case Phase::Done: return "Done";
    case Phase::Aborted: return "Aborted";
  }
  return "?";
}

bool transition_allowed(Phase from, Phase to) {
  if (to == Phase::Aborted) return from != Phase::Aborted && from != Phase::Done;
  switch (from) {
    case Phase::Initial: return to == Phase::GraspRight;
    case Phase::GraspRight: return to == Phase::Transport;
    case Phase::Transport: return to == Phase::AlignLeft;
    case Phase::AlignLeft: return to == Phase::Twist;
    case Phase::Twist: return to == Phase::Done;
    default: return false;
  }
}

double twist_progress(double right_deg, double left_deg) { return std::abs(left_deg - right_deg); }

PlannedPath PlannedPath::between(const Pose& from, const Pose& to, double linear_step,
                                 double angular_step_deg) {
  PlannedPath p;
  p.start = from;
  p.goal = to;
  const double dist = (to.position - from.position).norm();
  const double angle = rad2deg(orientation_distance(from.orientation, to.orientation));
  const int by_dist = dist > 0.0 ? static_cast<int>(std::ceil(dist / linear_step)) : 0;
  const int by_angle = angle > 0.0 ? static_cast<int>(std::ceil(angle / angular_step_deg)) : 0;
  p.steps = std::max(by_dist, by_angle);
  return p;
}

Pose PlannedPath::waypoint(int k) const {
  if (steps == 0 || k >= steps) return goal;
  const double s = static_cast<double>(k) / steps;
  return Pose(start.position + s * (goal.position - start.position),
              start.orientation.slerp(s, goal.orientation));
}

TaskEngine::TaskEngine(const Scenario& scenario) : scenario_(scenario) {
  world_.q_left = scenario_.left_initial;
  world_.q_right = scenario_.right_initial;
  world_.object = scenario_.object;
  world_.teleop = TeleopChannel(scenario_.teleop.map, left_pose());
  right_grasp_pose_ = Pose(scenario_.object.p1(),
                           frame_from_axis(scenario_.object.end1.axis, scenario_.grasp_x_hint));
  state_.metrics = compute_metrics();
}

ArmSkeleton TaskEngine::left_skeleton() const {
  return ArmSkeleton(joint_positions(scenario_.left_arm, world_.q_left));
}

ArmSkeleton TaskEngine::right_skeleton() const {
  return ArmSkeleton(joint_positions(scenario_.right_arm, world_.q_right));
}

Pose TaskEngine::right_grasp_pose() const { return right_grasp_pose_; }

Pose TaskEngine::right_hold_pose() const {
  return Pose(scenario_.prepare_position,
              frame_from_axis(scenario_.hold_axis, scenario_.hold_x_hint));
}

void TaskEngine::transition(Phase to, std::string reason) {
  transitions_.push_back(Transition{state_.tick, state_.phase, to, std::move(reason)});
  state_.phase = to;
}

void TaskEngine::reject(std::string message) {
  last_verdict_ = CommandVerdict{state_.tick, false, std::move(message)};
  verdicts_.push_back(*last_verdict_);
}

void TaskEngine::accept(std::string message) {
  last_verdict_ = CommandVerdict{state_.tick, true, std::move(message)};
  verdicts_.push_back(*last_verdict_);
}

void TaskEngine::apply(const TaskCommand& cmd) {
  if (const auto* mc = std::get_if<MasterCommand>(&cmd)) {
    apply_master(*mc);
    return;
  }
  if (state_.phase != Phase::GraspRight) {
    reject(std::string("phase error: lift is only valid in GraspRight, not ") +
           phase_name(state_.phase));
    return;
  }
  world_.lift_requested = true;
  accept("lift");
}

void TaskEngine::apply_master(const MasterCommand& cmd) {
  const Phase phase = state_.phase;
  if (phase != Phase::AlignLeft && phase != Phase::Twist) {
    reject(std::string("phase error: teleoperation is not active in ") + phase_name(phase));
    return;
  }
  if (phase == Phase::Twist && scenario_.plan.left_source == LeftTwistSource::Mirrored) {
    reject("phase error: left arm follows the mirrored twist plan");
    return;
  }

  std::string message = "no motion (clutch disengaged)";
  bool accepted = true;
  if (const auto target = world_.teleop.propose(cmd)) {
    SlaveLimits limits;
    limits.step_bound = scenario_.teleop.step_bound;
    limits.singularity_floor = scenario_.singularity_floor;
    limits.d_thr = scenario_.gates.d_thr;
    limits.ik = scenario_.ik;
    const SlaveVerdict v =
        slave_target_config(*target, world_.q_left, scenario_.left_arm, right_skeleton(), limits);
    if (v.accepted) {
      world_.q_left = v.q;
      world_.teleop.commit(*target);
      message = "moved";
    } else {
      accepted = false;
      message = "rejected:";
      for (const auto& s : v.violations) message += " " + s + ";";
    }
  }

  const bool closing = cmd.gripper_closed() && !world_.left_gripper_closed;
  const bool opening = !cmd.gripper_closed() && world_.left_gripper_closed;
  if (closing) {
    world_.left_gripper_closed = true;
    if (phase == Phase::AlignLeft && world_.object.end2.holder == Holder::Free) {
      const Pose lp = left_pose();
      const ObjectEnd& end = world_.object.end2;
      const double dp = (lp.position - end.position).norm();
      const double da = angle_between(lp.orientation * Vec3::UnitZ(), end.axis);
      if (dp <= scenario_.gates.grasp_position_tol &&
          da <= scenario_.gates.grasp_angle_tol_deg) {
        world_.object = grasp(world_.object, 2, Holder::Left, lp);
        message += " grasped end 2";
      } else {
        std::ostringstream os;
        os << " grasp missed (" << dp * 1000.0 << " mm, " << da << " deg)";
        message += os.str();
      }
    }
  } else if (opening) {
    if (phase == Phase::Twist) {
      message += " gripper held closed during twist";
    } else {
      world_.left_gripper_closed = false;
      if (world_.object.end2.holder == Holder::Left) {
        world_.object = release(world_.object, 2);
        message += " released end 2";
      }
    }
  }
  if (accepted) accept(message);
  else reject(message);
}

std::optional<JointConfig> TaskEngine::right_arm_plan() {
  const auto& chain = scenario_.right_arm;
  switch (state_.phase) {
    case Phase::Initial:
    case Phase::Transport: {
      if (!world_.right_path) {
        const bool approach = state_.phase == Phase::Initial;
        world_.right_path = PlannedPath::between(
            right_pose(), approach ? right_grasp_pose_ : right_hold_pose(),
            approach ? scenario_.motion.approach_step : scenario_.motion.transport_step,
            scenario_.motion.orientation_step_deg);
      }
      auto& path = *world_.right_path;
      if (path.finished()) return std::nullopt;
      ++path.done;
      return solve_ik(chain, path.waypoint(path.done), world_.q_right, scenario_.ik).q;
    }
    case Phase::GraspRight:
      return solve_ik(chain, right_grasp_pose_, world_.q_right, scenario_.ik).q;
    case Phase::Twist: {
      const double target = scenario_.plan.theta_right_deg;
      const double rate = scenario_.plan.rate_deg_per_tick;
      double& cmd = world_.right_twist_command_deg;
      if (cmd == target) return std::nullopt;
      cmd = target < cmd ? std::max(target, cmd - rate) : std::min(target, cmd + rate);
      const Pose& a = world_.right_twist_anchor;
      const Pose goal(a.position,
                      a.orientation * Eigen::Quaterniond(Eigen::AngleAxisd(deg2rad(cmd),
                                                                           Vec3::UnitZ())));
      return solve_ik(chain, goal, world_.q_right, scenario_.ik).q;
    }
    default:
      return std::nullopt;
  }
}

void TaskEngine::advance_right() {
  if (auto q = right_arm_plan()) world_.q_right = *q;
}

void TaskEngine::advance_left_mirrored() {
  const double target = scenario_.plan.theta_left_deg;
  const double rate = scenario_.plan.rate_deg_per_tick;
  double& cmd = world_.left_twist_command_deg;
  if (cmd == target) return;
  cmd = target < cmd ? std::max(target, cmd - rate) : std::min(target, cmd + rate);
  const Pose& a = world_.left_twist_anchor;
  const Pose goal(a.position,
                  a.orientation * Eigen::Quaterniond(Eigen::AngleAxisd(deg2rad(cmd), Vec3::UnitZ())));
  world_.q_left = solve_ik(scenario_.left_arm, goal, world_.q_left, scenario_.ik).q;
}

namespace {

// Rotation angle (deg) of `prev -> cur` about `axis`, both expressed in the base frame.
double rotation_about(const Eigen::Quaterniond& prev, const Eigen::Quaterniond& cur,
                      const Vec3& axis) {
  Eigen::Quaterniond d = cur * prev.conjugate();
  if (d.w() < 0.0) d.coeffs() = -d.coeffs();
  const double s = d.vec().norm();
  if (s < 1e-15) return rad2deg(2.0 * d.vec().dot(axis));
  const Vec3 rotvec = d.vec() / s * (2.0 * std::atan2(s, d.w()));
  return rad2deg(rotvec.dot(axis));
}

}  // namespace

void TaskEngine::accumulate_twist() {
  const Pose rp = right_pose();
  const Pose lp = left_pose();
  const Vec3 axis = twist_axis_direction(rp);
  state_.metrics.theta_right_deg += rotation_about(world_.prev_right_orientation, rp.orientation, axis);
  state_.metrics.theta_left_deg += rotation_about(world_.prev_left_orientation, lp.orientation, axis);
}

TaskMetrics TaskEngine::compute_metrics() const {
  TaskMetrics m;
  m.theta_left_deg = state_.metrics.theta_left_deg;
  m.theta_right_deg = state_.metrics.theta_right_deg;
  m.theta_t_deg = twist_progress(m.theta_right_deg, m.theta_left_deg);

  m.distance = min_arm_distance(left_skeleton(), right_skeleton(), true);

  const Pose lp = left_pose();
  const Pose rp = right_pose();
  try {
    m.delta_deg = alignment_error(rp, lp, world_.object, scenario_.alignment_variant()).degrees;
  } catch (const DegenerateGeometryError&) {
    m.delta_deg = std::numeric_limits<double>::quiet_NaN();
  }
  m.m_left = directional_manipulability(jacobian(scenario_.left_arm, world_.q_left).angular,
                                        twist_axis_direction(lp));
  m.m_right = directional_manipulability(jacobian(scenario_.right_arm, world_.q_right).angular,
                                         twist_axis_direction(rp));
  m.f_m = (m.m_left > 0.0 && m.m_right > 0.0)
              ? manipulability_fitness(m.m_left, m.m_right, scenario_.optimizer.beta_left,
                                       scenario_.optimizer.beta_right)
              : std::numeric_limits<double>::quiet_NaN();
  return m;
}

const TaskState& TaskEngine::step(std::span<const TaskCommand> commands) {
  if (finished()) return state_;
  ++state_.tick;
  last_verdict_.reset();
  world_.prev_right_orientation = right_pose().orientation;
  world_.prev_left_orientation = left_pose().orientation;

  for (const auto& cmd : commands) apply(cmd);

  if (state_.phase == Phase::GraspRight && (world_.lift_requested || scenario_.motion.auto_lift)) {
    world_.lift_requested = false;
    world_.right_path.reset();
    transition(Phase::Transport, "lift");
  }

  try {
    advance_right();
    if (state_.phase == Phase::Twist && scenario_.plan.left_source == LeftTwistSource::Mirrored) {
      advance_left_mirrored();
    }
  } catch (const UnreachableTargetError& e) {
    transition(Phase::Aborted, std::string("planned motion unreachable: ") + e.what());
  }

  try {
    world_.object = update_object(world_.object, left_pose(), right_pose());
  } catch (const OverstretchError& e) {
    if (state_.phase != Phase::Aborted) transition(Phase::Aborted, e.what());
  }

  if (state_.phase == Phase::Twist) accumulate_twist();
  state_.metrics = compute_metrics();
  if (state_.phase == Phase::Aborted) return state_;

  const auto& m = state_.metrics;
  if (m.distance.d_min < scenario_.gates.d_thr) {
    std::ostringstream os;
    os << "arm distance " << m.distance.d_min << " m below d_thr " << scenario_.gates.d_thr << " m";
    transition(Phase::Aborted, os.str());
    return state_;
  }

  switch (state_.phase) {
    case Phase::Initial: {
      const Pose rp = right_pose();
      const ObjectEnd& end = world_.object.end1;
      const double dp = (rp.position - end.position).norm();
      const double da = angle_between(rp.orientation * Vec3::UnitZ(), end.axis);
      if (dp <= scenario_.gates.grasp_position_tol && da <= scenario_.gates.grasp_angle_tol_deg) {
        world_.right_gripper_closed = true;
        world_.object = grasp(world_.object, 1, Holder::Right, rp, scenario_.grasp_offset_deg);
        world_.object = update_object(world_.object, left_pose(), rp);
        world_.right_path.reset();
        state_.metrics = compute_metrics();
        transition(Phase::GraspRight, "right gripper closed on end 1");
      }
      break;
    }
    case Phase::Transport:
      if (world_.right_path && world_.right_path->finished()) {
        world_.right_path.reset();
        transition(Phase::AlignLeft, "object at preparing location");
      }
      break;
    case Phase::AlignLeft:
      if (world_.object.end2.holder == Holder::Left && m.delta_deg <= scenario_.gates.delta_tor_deg) {
        world_.right_twist_anchor = right_pose();
        world_.left_twist_anchor = left_pose();
        world_.right_twist_command_deg = 0.0;
        world_.left_twist_command_deg = 0.0;
        state_.metrics.theta_left_deg = 0.0;
        state_.metrics.theta_right_deg = 0.0;
        state_.metrics.theta_t_deg = 0.0;
        std::ostringstream os;
        os << "aligned within " << m.delta_deg << " deg";
        transition(Phase::Twist, os.str());
      }
      break;
    case Phase::Twist:
      if (m.theta_t_deg >= scenario_.plan.theta_total_deg) {
        std::ostringstream os;
        os << "twist reached " << m.theta_t_deg << " deg";
        transition(Phase::Done, os.str());
      }
      break;
    default:
      break;
  }
  return state_;
}

}  // namespace dualtwist
