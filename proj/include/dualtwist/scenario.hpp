#pragma once

#include <filesystem>
#include <optional>

#include <json.hpp>

#include "dualtwist/config_opt.hpp"
#include "dualtwist/object_model.hpp"
#include "dualtwist/teleop.hpp"

namespace dualtwist {

enum class LeftTwistSource { Teleop, Mirrored };
enum class TeleopSource { Live, Trace };

struct TwistPlan {
  double theta_right_deg = -45.0;
  double theta_left_deg = 45.0;
  double theta_total_deg = 90.0;
  double rate_deg_per_tick = 1.0;
  LeftTwistSource left_source = LeftTwistSource::Teleop;
};

struct TaskGates {
  double delta_tor_deg = 5.0;
  double d_thr = 0.2;
  double grasp_position_tol = 0.005;
  double grasp_angle_tol_deg = 10.0;
};

struct MotionSettings {
  /// Planned arm path speed (m per tick) and orientation rate (deg per tick).
  double approach_step = 0.005;
  double transport_step = 0.005;
  double orientation_step_deg = 2.0;
  bool auto_lift = true;
};

struct TeleopSettings {
  TeleopSource source = TeleopSource::Trace;
  std::filesystem::path trace;
  WorkspaceMap map;
  double step_bound = 0.05;
};

struct OptimizerSettings {
  double lambda_m = 1.0;
  int seed_count = 8;
  int redundant_joint = 2;
  double beta_left = 1.0;
  double beta_right = 1.0;
  VariationWeights alpha;
};

struct Scenario {
  std::filesystem::path source;
  KinematicChain left_arm;
  KinematicChain right_arm;
  JointConfig left_initial;
  JointConfig right_initial;

  TwistObject object;
  double grasp_offset_deg = 0.0;
  /// Tool x axis hint used to complete grasp/hold frames from their z axis.
  Vec3 grasp_x_hint = -Vec3::UnitZ();
  Vec3 prepare_position = Vec3::Zero();
  Vec3 hold_axis = Vec3::UnitY();
  Vec3 hold_x_hint = -Vec3::UnitZ();

  TwistPlan plan;
  TaskGates gates;
  MotionSettings motion;
  TeleopSettings teleop;
  OptimizerSettings optimizer;
  std::optional<AlignmentVariant> variant;

  double singularity_floor = 1e-3;
  IkOptions ik;
  double tick_rate_hz = 50.0;
  int settle_ticks = 200;
  int max_ticks = 20000;

  AlignmentVariant alignment_variant() const {
    return variant.value_or(variant_for_stiffness(object.stiffness));
  }
};

struct ScenarioOverrides {
  std::optional<std::filesystem::path> left_arm;
  std::optional<std::filesystem::path> right_arm;
  std::optional<std::filesystem::path> trace;
};

/// Relative paths inside the scenario resolve against the scenario file's directory.
Scenario load_scenario(const std::filesystem::path& path, const ScenarioOverrides& overrides = {});
Scenario scenario_from_json(const nlohmann::json& j, const std::filesystem::path& base_dir,
                            const ScenarioOverrides& overrides = {});

/// Orientation with the given z axis; x follows `x_hint` projected off z.
Eigen::Quaterniond frame_from_axis(const Vec3& z, const Vec3& x_hint);

}  // namespace dualtwist
