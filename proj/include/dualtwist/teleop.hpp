#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "dualtwist/collision.hpp"
#include "dualtwist/kinematics.hpp"

namespace dualtwist {

/// One sample from the operator's master device.
struct MasterCommand {
  std::int64_t tick = 0;
  Pose pose;
  /// 0 open .. 1 closed.
  double gripper = 0.0;
  bool clutch = false;

  bool gripper_closed() const { return gripper >= 0.5; }
  bool operator==(const MasterCommand& o) const;
};

struct WorkspaceMap {
  double scale = 1.0;
  /// Master base frame expressed in the slave base frame; only its rotation affects deltas.
  Eigen::Isometry3d offset = Eigen::Isometry3d::Identity();
};

struct ClutchAnchor {
  Pose master;
  Pose slave;
};

/// slave = anchor.slave (+) scale * (master (-) anchor.master). Position deltas are
/// scaled; orientation deltas are carried over unscaled, both rotated into the slave frame.
Pose map_master_to_slave(const MasterCommand& cmd, const WorkspaceMap& map,
                         const ClutchAnchor& anchor);

/// Clutch bookkeeping for one teleoperated arm.
class TeleopChannel {
public:
  TeleopChannel() = default;
  TeleopChannel(WorkspaceMap map, Pose initial_target);

  /// Slave target for this command, or nullopt while the clutch is disengaged.
  /// Engaging captures the anchor pair (command pose, last committed target).
  std::optional<Pose> propose(const MasterCommand& cmd);
  /// Record the target the arm actually accepted.
  void commit(const Pose& target) { target_ = target; }
  void force_disengage() { engaged_ = false; }

  bool engaged() const { return engaged_; }
  const Pose& target() const { return target_; }
  const WorkspaceMap& map() const { return map_; }
  const std::optional<ClutchAnchor>& anchor() const { return anchor_; }

private:
  WorkspaceMap map_;
  Pose target_;
  bool engaged_ = false;
  std::optional<ClutchAnchor> anchor_;
};

struct SlaveLimits {
  double step_bound = 0.05;
  double singularity_floor = 1e-3;
  double d_thr = 0.0;
  bool skip_terminal_segments = true;
  IkOptions ik;
};

struct SlaveVerdict {
  bool accepted = false;
  JointConfig q;
  std::vector<std::string> violations;
  double d_min = 0.0;
};

/// IK seeded at `current`, then limit / singularity / step / self-collision checks
/// against `other_arm`. Any violation keeps `current`.
SlaveVerdict slave_target_config(const Pose& target, const JointConfig& current,
                                 const KinematicChain& chain, const ArmSkeleton& other_arm,
                                 const SlaveLimits& limits);

// Trace files: '#' header, then one command per line:
//   tick x y z qw qx qy qz gripper clutch
extern const char* const kTraceHeader;

void write_trace(std::ostream& out, const std::vector<MasterCommand>& commands);
void record_trace(const std::filesystem::path& path, const std::vector<MasterCommand>& commands);
std::vector<MasterCommand> read_trace(std::istream& in);
std::vector<MasterCommand> replay_trace(const std::filesystem::path& path);

std::string format_trace_line(const MasterCommand& cmd);

}  // namespace dualtwist
