// Authors the golden operator trace for a scenario by driving the engine tick by
// tick and scripting the left master: approach the drooping end, close the
// gripper, swing the end up about end 1 until aligned, then twist.
//
//   dualtwist_author <scenario.json> <out_trace.txt>

#include <cmath>
#include <iostream>
#include <vector>

#include "dualtwist/service.hpp"

using namespace dualtwist;

namespace {

constexpr double kLinearStep = 0.0015;   // m per tick
constexpr double kAngularStep = 1.0;     // deg per tick
constexpr double kPregraspBack = 0.04;   // m along the end axis
constexpr double kSwingStep = 0.5;       // deg per tick
constexpr double kTwistStep = 1.0;       // deg per tick
constexpr double kOvershootStep = 0.01;  // deg per tick past the plan

struct Script {
  std::vector<Pose> poses;
  std::vector<double> gripper;
};

void append_line(Script& s, const Pose& from, const Pose& to, double gripper) {
  const double dist = (to.position - from.position).norm();
  const double ang = rad2deg(orientation_distance(from.orientation, to.orientation));
  const int n = std::max(1, static_cast<int>(std::ceil(std::max(dist / kLinearStep, ang / kAngularStep))));
  for (int k = 1; k <= n; ++k) {
    const double t = static_cast<double>(k) / n;
    s.poses.emplace_back(from.position + t * (to.position - from.position),
                         from.orientation.slerp(t, to.orientation));
    s.gripper.push_back(gripper);
  }
}

}  // namespace

int main(int argc, char** argv) {
  if (argc != 3) {
    std::cerr << "usage: dualtwist_author <scenario.json> <out_trace.txt>\n";
    return kExitInputError;
  }
  try {
    const Scenario sc = load_scenario(argv[1]);
    TaskEngine engine(sc);
    std::vector<MasterCommand> trace;
    double min_d = engine.state().metrics.distance.d_min;

    auto step = [&](const std::vector<TaskCommand>& cmds) {
      engine.step(cmds);
      min_d = std::min(min_d, engine.state().metrics.distance.d_min);
      if (engine.last_verdict() && !engine.last_verdict()->accepted) {
        std::cerr << "tick " << engine.state().tick << ": " << engine.last_verdict()->message << '\n';
      }
      if (engine.state().phase == Phase::Aborted) {
        std::cerr << "aborted at tick " << engine.state().tick << ": "
                  << engine.transitions().back().reason << '\n';
        std::exit(kExitAborted);
      }
    };
    auto send = [&](const Pose& p, double gripper) {
      MasterCommand c;
      c.tick = engine.state().tick + 1;
      c.pose = p;
      c.gripper = gripper;
      c.clutch = true;
      trace.push_back(c);
      step({TaskCommand(c)});
    };

    while (engine.state().phase != Phase::AlignLeft) {
      step({});
      if (engine.state().tick > sc.max_ticks) throw StateError("never reached AlignLeft");
    }
    std::cerr << "AlignLeft at tick " << engine.state().tick << '\n';

    // The identity workspace map makes master poses equal slave targets once the
    // clutch anchors at the current left pose.
    const ObjectEnd end2 = engine.world().object.end2;
    const Vec3 p1 = engine.world().object.p1();
    const Eigen::Quaterniond aligned = frame_from_axis(sc.hold_axis, sc.hold_x_hint);
    const Eigen::Quaterniond droop = Eigen::Quaterniond::FromTwoVectors(sc.hold_axis.normalized(), end2.axis);
    const Pose grasp_pose(end2.position, droop * aligned);
    const Pose pregrasp(end2.position + kPregraspBack * end2.axis, grasp_pose.orientation);

    Script approach;
    const Pose start = engine.left_pose();
    append_line(approach, start, pregrasp, 0.0);
    append_line(approach, pregrasp, grasp_pose, 0.0);
    send(start, 0.0);
    for (size_t i = 0; i < approach.poses.size(); ++i) send(approach.poses[i], approach.gripper[i]);
    send(grasp_pose, 0.0);
    send(grasp_pose, 1.0);
    if (engine.world().object.end2.holder != Holder::Left) throw StateError("left grasp missed");
    std::cerr << "grasped end 2 at tick " << engine.state().tick << '\n';

    // Swing end 2 about end 1 back onto the hold axis.
    const Eigen::AngleAxisd droop_aa(droop);
    const double swing_deg = rad2deg(droop_aa.angle());
    const int n = static_cast<int>(std::ceil(swing_deg / kSwingStep));
    auto swing = [&](int k) {
      return Eigen::Quaterniond(
          Eigen::AngleAxisd(droop_aa.angle() * (1.0 - double(std::min(k, n)) / n), droop_aa.axis()));
    };
    int k = 0;
    while (engine.state().phase == Phase::AlignLeft) {
      const Eigen::Quaterniond r = swing(++k);
      send(Pose(p1 + sc.object.length * (r * sc.hold_axis.normalized()), r * aligned), 1.0);
      if (engine.state().tick > sc.max_ticks) throw StateError("alignment never reached");
    }
    std::cerr << "Twist at tick " << engine.state().tick << " delta "
              << engine.state().metrics.delta_deg << '\n';

    // The rest of the swing blends into the first twist ticks. Like an operator, the
    // script keeps turning past the planned angle until the engine reports Done.
    double cmd = 0.0;
    while (engine.state().phase == Phase::Twist) {
      const double target = cmd < sc.plan.theta_left_deg ? sc.plan.theta_left_deg : cmd + kOvershootStep;
      cmd = std::min(target, cmd + kTwistStep);
      const Eigen::Quaterniond r = swing(++k);
      const Eigen::Quaterniond q =
          r * aligned * Eigen::Quaterniond(Eigen::AngleAxisd(deg2rad(cmd), Vec3::UnitZ()));
      send(Pose(p1 + sc.object.length * (r * sc.hold_axis.normalized()), q), 1.0);
      if (engine.state().tick > sc.max_ticks) throw StateError("twist never completed");
    }
    std::cerr << "final phase " << phase_name(engine.state().phase) << " at tick "
              << engine.state().tick << ", theta_t " << engine.state().metrics.theta_t_deg
              << ", min d_min " << min_d << '\n';
    record_trace(argv[2], trace);
    return engine.state().phase == Phase::Done ? kExitDone : kExitIncomplete;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitInputError;
  }
}
