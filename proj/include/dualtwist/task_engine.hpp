#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "dualtwist/collision.hpp"
#include "dualtwist/object_model.hpp"
#include "dualtwist/scenario.hpp"
#include "dualtwist/teleop.hpp"

namespace dualtwist {

enum class Phase { Initial, GraspRight, Transport, AlignLeft, Twist, Done, Aborted };

const char* phase_name(Phase p);

/// True for the edges of the task graph (plus any -> Aborted).
bool transition_allowed(Phase from, Phase to);

/// |left - right| of the accumulated rotations about the twist axis.
double twist_progress(double right_deg, double left_deg);

struct TaskMetrics {
  double delta_deg = 0.0;
  DistanceReport distance;
  double theta_t_deg = 0.0;
  double theta_left_deg = 0.0;
  double theta_right_deg = 0.0;
  double m_left = 0.0;
  double m_right = 0.0;
  double f_m = 0.0;
};

struct TaskState {
  Phase phase = Phase::Initial;
  std::int64_t tick = 0;
  TaskMetrics metrics;
};

struct LiftCommand {};
using TaskCommand = std::variant<MasterCommand, LiftCommand>;

struct CommandVerdict {
  std::int64_t tick = 0;
  bool accepted = true;
  std::string message;
};

struct Transition {
  std::int64_t tick;
  Phase from;
  Phase to;
  std::string reason;
};

/// Straight-line end-effector path with slerped orientation, one waypoint per tick.
struct PlannedPath {
  Pose start;
  Pose goal;
  int steps = 0;
  int done = 0;

  static PlannedPath between(const Pose& from, const Pose& to, double linear_step,
                             double angular_step_deg);
  bool finished() const { return done >= steps; }
  Pose waypoint(int k) const;
};

/// Arm configurations, object and plan state the engine advances each tick.
struct World {
  JointConfig q_left;
  JointConfig q_right;
  bool left_gripper_closed = false;
  bool right_gripper_closed = false;
  TwistObject object;
  TeleopChannel teleop;
  std::optional<PlannedPath> right_path;
  /// Twist bookkeeping.
  Pose right_twist_anchor;
  Pose left_twist_anchor;
  double right_twist_command_deg = 0.0;
  double left_twist_command_deg = 0.0;
  Eigen::Quaterniond prev_right_orientation = Eigen::Quaterniond::Identity();
  Eigen::Quaterniond prev_left_orientation = Eigen::Quaterniond::Identity();
  bool lift_requested = false;
};

/// Single-writer tick loop for the twisting task. Each step drains the given commands
/// in order, advances the planned arm, refreshes the object and metrics, then applies
/// the phase gates.
class TaskEngine {
public:
  explicit TaskEngine(const Scenario& scenario);

  const TaskState& step(std::span<const TaskCommand> commands = {});

  const TaskState& state() const { return state_; }
  const World& world() const { return world_; }
  const Scenario& scenario() const { return scenario_; }
  const std::vector<Transition>& transitions() const { return transitions_; }
  const std::vector<CommandVerdict>& verdicts() const { return verdicts_; }
  const std::optional<CommandVerdict>& last_verdict() const { return last_verdict_; }

  Pose left_pose() const { return forward_kinematics(scenario_.left_arm, world_.q_left); }
  Pose right_pose() const { return forward_kinematics(scenario_.right_arm, world_.q_right); }
  ArmSkeleton left_skeleton() const;
  ArmSkeleton right_skeleton() const;

  /// Grasp frame of the right arm at end 1 and the transport hold pose.
  Pose right_grasp_pose() const;
  Pose right_hold_pose() const;

  /// Target for the planned arm this tick. Throws UnreachableTargetError on IK failure.
  std::optional<JointConfig> right_arm_plan();

  /// Clutch off, e.g. when the operator connection drops.
  void force_disengage() { world_.teleop.force_disengage(); }

  bool finished() const {
    return state_.phase == Phase::Done || state_.phase == Phase::Aborted;
  }

  /// Recompute metrics from the current world (no side effects).
  TaskMetrics compute_metrics() const;

private:
  void apply(const TaskCommand& cmd);
  void apply_master(const MasterCommand& cmd);
  void advance_right();
  void advance_left_mirrored();
  void accumulate_twist();
  void transition(Phase to, std::string reason);
  void reject(std::string message);
  void accept(std::string message);

  Scenario scenario_;
  World world_;
  TaskState state_;
  std::vector<Transition> transitions_;
  std::vector<CommandVerdict> verdicts_;
  std::optional<CommandVerdict> last_verdict_;
  Pose right_grasp_pose_;
};

}  // namespace dualtwist
