#include "dualtwist/teleop.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

#include "dualtwist/manipulability.hpp"

namespace dualtwist {

bool MasterCommand::operator==(const MasterCommand& o) const {
  return tick == o.tick && pose.position == o.pose.position &&
         pose.orientation.coeffs() == o.pose.orientation.coeffs() && gripper == o.gripper &&
         clutch == o.clutch;
}

Pose map_master_to_slave(const MasterCommand& cmd, const WorkspaceMap& map,
                         const ClutchAnchor& anchor) {
  const Eigen::Quaterniond r_off(map.offset.rotation());
  const Vec3 dp = cmd.pose.position - anchor.master.position;
  const Eigen::Quaterniond dr = cmd.pose.orientation * anchor.master.orientation.conjugate();
  Pose out;
  out.position = anchor.slave.position + map.scale * (r_off * dp);
  out.orientation = ((r_off * dr * r_off.conjugate()) * anchor.slave.orientation).normalized();
  return out;
}

TeleopChannel::TeleopChannel(WorkspaceMap map, Pose initial_target)
    : map_(std::move(map)), target_(std::move(initial_target)) {
  if (!(map_.scale > 0.0)) throw ConfigurationError("teleop scale must be positive");
}

std::optional<Pose> TeleopChannel::propose(const MasterCommand& cmd) {
  if (!cmd.clutch) {
    engaged_ = false;
    return std::nullopt;
  }
  if (!engaged_) {
    engaged_ = true;
    anchor_ = ClutchAnchor{cmd.pose, target_};
  }
  return map_master_to_slave(cmd, map_, *anchor_);
}

SlaveVerdict slave_target_config(const Pose& target, const JointConfig& current,
                                 const KinematicChain& chain, const ArmSkeleton& other_arm,
                                 const SlaveLimits& limits) {
  SlaveVerdict v;
  v.q = current;
  if (!target.position.allFinite() || !target.orientation.coeffs().allFinite()) {
    v.violations.push_back("target not finite");
    return v;
  }
  JointConfig candidate;
  try {
    candidate = solve_ik(chain, target, current, limits.ik).q;
  } catch (const UnreachableTargetError& e) {
    v.violations.push_back(std::string("ik: ") + e.what());
    return v;
  }

  if (!chain.within_limits(candidate)) v.violations.push_back("joint limits");
  const double step = (candidate - current).cwiseAbs().maxCoeff();
  if (step > limits.step_bound) {
    std::ostringstream os;
    os << "joint step " << step << " rad exceeds bound " << limits.step_bound;
    v.violations.push_back(os.str());
  }
  const double w = singularity_measure(jacobian(chain, candidate));
  if (w < limits.singularity_floor) {
    std::ostringstream os;
    os << "singularity measure " << w << " below floor " << limits.singularity_floor;
    v.violations.push_back(os.str());
  }
  if (!other_arm.points.empty()) {
    const ArmSkeleton mine(joint_positions(chain, candidate));
    v.d_min = min_arm_distance(mine, other_arm, limits.skip_terminal_segments).d_min;
    if (v.d_min < limits.d_thr) {
      std::ostringstream os;
      os << "arm distance " << v.d_min << " m below threshold " << limits.d_thr << " m";
      v.violations.push_back(os.str());
    }
  }
  if (v.violations.empty()) {
    v.accepted = true;
    v.q = candidate;
  }
  return v;
}

const char* const kTraceHeader = "# tick x y z qw qx qy qz gripper clutch";

namespace {

std::string fmt_double(double x) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), x);
  return std::string(buf, res.ptr);
}

}  // namespace

std::string format_trace_line(const MasterCommand& cmd) {
  const auto& p = cmd.pose.position;
  const auto& q = cmd.pose.orientation;
  std::string line = std::to_string(cmd.tick);
  for (double v : {p.x(), p.y(), p.z(), q.w(), q.x(), q.y(), q.z(), cmd.gripper}) {
    line += ' ';
    line += fmt_double(v);
  }
  line += cmd.clutch ? " 1" : " 0";
  return line;
}

void write_trace(std::ostream& out, const std::vector<MasterCommand>& commands) {
  out << kTraceHeader << '\n';
  for (const auto& c : commands) out << format_trace_line(c) << '\n';
}

void record_trace(const std::filesystem::path& path, const std::vector<MasterCommand>& commands) {
  std::ofstream out(path);
  if (!out) throw ConfigurationError("cannot write trace " + path.string());
  write_trace(out, commands);
}

std::vector<MasterCommand> read_trace(std::istream& in) {
  std::vector<MasterCommand> out;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto first = line.find_first_not_of(" \t\r");
    if (first == std::string::npos || line[first] == '#') continue;

    std::istringstream is(line);
    MasterCommand cmd;
    double x, y, z, qw, qx, qy, qz;
    int clutch;
    if (!(is >> cmd.tick >> x >> y >> z >> qw >> qx >> qy >> qz >> cmd.gripper >> clutch)) {
      throw ParseError("expected 10 fields: tick x y z qw qx qy qz gripper clutch", line_no);
    }
    std::string extra;
    if (is >> extra) throw ParseError("trailing field '" + extra + "'", line_no);
    if (clutch != 0 && clutch != 1) throw ParseError("clutch must be 0 or 1", line_no);
    if (!(cmd.gripper >= 0.0 && cmd.gripper <= 1.0)) {
      throw ParseError("gripper must lie in [0, 1]", line_no);
    }
    Eigen::Quaterniond q(qw, qx, qy, qz);
    if (!(std::abs(q.norm() - 1.0) < 1e-6)) throw ParseError("quaternion is not unit", line_no);
    if (!out.empty() && cmd.tick <= out.back().tick) {
      throw ParseError("ticks must be strictly increasing", line_no);
    }
    cmd.pose.position = Vec3(x, y, z);
    // Stored as read so that record/replay is bit-exact.
    cmd.pose.orientation = q;
    cmd.clutch = clutch == 1;
    out.push_back(cmd);
  }
  return out;
}

std::vector<MasterCommand> replay_trace(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigurationError("cannot open trace " + path.string());
  return read_trace(in);
}

}  // namespace dualtwist
