#include <gtest/gtest.h>

#include <fstream>
#include <sstream>

#include "dualtwist/manipulability.hpp"
#include "dualtwist/service.hpp"
#include "support/oracles.hpp"
#include "support/scenarios.hpp"

using namespace dualtwist;
using nlohmann::json;

namespace {

Vec3 v3(const json& j) { return Vec3(j[0].get<double>(), j[1].get<double>(), j[2].get<double>()); }

std::string metrics_of(const Scenario& sc, const std::vector<MasterCommand>& trace, HeadlessSummary* out = nullptr) {
  std::ostringstream os;
  const auto s = run_headless(sc, trace, &os);
  if (out) *out = s;
  return os.str();
}

}  // namespace

TEST(Snapshot, FieldsAgreeWithIndependentRecomputation) {
  const Scenario sc = test_data::reference();
  const auto trace = replay_trace(sc.teleop.trace);
  std::map<std::int64_t, MasterCommand> by_tick;
  for (const auto& c : trace) by_tick[c.tick] = c;
  TaskEngine e(sc);
  int checked = 0;
  while (!e.finished()) {
    std::vector<TaskCommand> cmds;
    if (auto it = by_tick.find(e.state().tick + 1); it != by_tick.end()) cmds.emplace_back(it->second);
    e.step(cmds);
    if (e.state().tick % 25 != 0 && !e.finished()) continue;
    const json s = json::parse(snapshot_json(e).dump());
    ++checked;
    EXPECT_EQ(s["type"], "snapshot");
    EXPECT_EQ(s["protocol_version"], kProtocolVersion);
    EXPECT_EQ(s["tick"], e.state().tick);
    EXPECT_EQ(s["phase"], phase_name(e.state().phase));

    JointConfig ql(7), qr(7);
    for (int i = 0; i < 7; ++i) {
      ql[i] = s["left"]["joints"][i];
      qr[i] = s["right"]["joints"][i];
    }
    const auto lp = oracle::points(sc.left_arm, ql);
    const auto rp = oracle::points(sc.right_arm, qr);
    ASSERT_EQ(s["left"]["points"].size(), lp.size());
    for (size_t i = 0; i < lp.size(); ++i) {
      EXPECT_LT((v3(s["left"]["points"][i]) - lp[i]).norm(), 1e-9);
      EXPECT_LT((v3(s["right"]["points"][i]) - rp[i]).norm(), 1e-9);
    }
    double dmin = std::numeric_limits<double>::infinity();
    for (size_t i = 0; i + 2 < lp.size(); ++i)
      for (size_t j = 0; j + 2 < rp.size(); ++j)
        dmin = std::min(dmin, oracle::grid_segment_distance(lp[i], lp[i + 1], rp[j], rp[j + 1], 60));
    const double d = s["metrics"]["d_min"];
    EXPECT_LE(d, dmin + 1e-9);
    EXPECT_NEAR(d, dmin, 5e-3);
    EXPECT_NEAR((v3(s["metrics"]["witness_left"]) - v3(s["metrics"]["witness_right"])).norm(), d, 1e-9);

    const Eigen::Matrix4d TL = oracle::fk(sc.left_arm, ql);
    const Eigen::Matrix4d TR = oracle::fk(sc.right_arm, qr);
    EXPECT_LT((v3(s["left"]["ee"]["position"]) - TL.block<3, 1>(0, 3)).norm(), 1e-9);
    const Eigen::MatrixXd JL = oracle::fd_jacobian(sc.left_arm, ql, 1e-6);
    const Vec3 kL = TL.block<3, 1>(0, 2);
    const double mL = oracle::manipulability_svd(JL.bottomRows(3), kL);
    EXPECT_NEAR(s["metrics"]["m_left"].get<double>(), mL, 1e-6 * std::max(1.0, mL));
    const Eigen::MatrixXd JR = oracle::fd_jacobian(sc.right_arm, qr, 1e-6);
    const double mR = oracle::manipulability_svd(JR.bottomRows(3), TR.block<3, 1>(0, 2));
    EXPECT_NEAR(s["metrics"]["m_right"].get<double>(), mR, 1e-6 * std::max(1.0, mR));
    EXPECT_NEAR(s["metrics"]["f_m"].get<double>(),
                1.0 / s["metrics"]["m_left"].get<double>() + 1.0 / s["metrics"]["m_right"].get<double>(), 1e-9);
    EXPECT_NEAR(s["metrics"]["theta_t_deg"].get<double>(),
                std::abs(s["metrics"]["theta_left_deg"].get<double>() - s["metrics"]["theta_right_deg"].get<double>()),
                1e-9);
    // Auto variant at s = 0.5 compares the two tool z axes.
    const double delta = rad2deg(std::acos(std::clamp(Vec3(TL.block<3, 1>(0, 2)).dot(TR.block<3, 1>(0, 2)), -1.0, 1.0)));
    EXPECT_NEAR(s["metrics"]["delta_deg"].get<double>(), delta, 1e-6);
    EXPECT_EQ(s["gates"]["d_thr"], sc.gates.d_thr);
  }
  EXPECT_GT(checked, 10);
}

TEST(Metrics, HeaderHasFixedColumnOrder) {
  std::ostringstream os;
  write_metrics_header(os, 2, 1);
  EXPECT_EQ(os.str(), "tick,phase,delta_deg,d_min,theta_t_deg,m_left,m_right,f_m,q_left_1,q_left_2,q_right_1\n");
}

TEST(Headless, GoldenTraceCompletes) {
  const Scenario sc = test_data::reference();
  HeadlessSummary s;
  const std::string log = metrics_of(sc, replay_trace(sc.teleop.trace), &s);
  EXPECT_EQ(s.final_phase, Phase::Done);
  EXPECT_EQ(s.exit_code, kExitDone);
  EXPECT_GE(s.final_theta_t_deg, 90.0);
  EXPECT_GE(s.min_d_min, sc.gates.d_thr);
  EXPECT_LE(s.max_delta_twist_deg, 5.0);
  EXPECT_EQ(s.rejected_commands, 0);
  // Header, the initial row and one row per tick.
  EXPECT_EQ(std::count(log.begin(), log.end(), '\n'), s.ticks + 2);
}

TEST(Headless, MetricsLogsAreByteIdentical) {
  const Scenario sc = test_data::reference();
  const auto trace = replay_trace(sc.teleop.trace);
  EXPECT_EQ(metrics_of(sc, trace), metrics_of(sc, trace));
}

TEST(Headless, TruncatedTraceEndsIncomplete) {
  const Scenario sc = test_data::reference();
  auto trace = replay_trace(sc.teleop.trace);
  trace.resize(150);
  HeadlessSummary s;
  metrics_of(sc, trace, &s);
  EXPECT_EQ(s.final_phase, Phase::AlignLeft);
  EXPECT_EQ(s.exit_code, kExitIncomplete);
  EXPECT_EQ(s.ticks, trace.back().tick + sc.settle_ticks);
}

TEST(Headless, EmptyTraceLeavesLeftArmStill) {
  const Scenario sc = test_data::reference();
  HeadlessSummary s;
  const std::string log = metrics_of(sc, {}, &s);
  EXPECT_EQ(s.exit_code, kExitIncomplete);
  std::istringstream in(log);
  std::string header, first, line, last;
  std::getline(in, header);
  std::getline(in, first);
  while (std::getline(in, line)) last = line;
  auto left_q = [](const std::string& row) {
    std::vector<std::string> f;
    std::stringstream ss(row);
    for (std::string x; std::getline(ss, x, ',');) f.push_back(x);
    return std::vector<std::string>(f.begin() + 8, f.begin() + 15);
  };
  EXPECT_EQ(left_q(first), left_q(last));
}

TEST(Headless, ThresholdAboveSeparationAborts) {
  const Scenario sc = test_data::reference_with([](json& j) { j["gates"]["d_thr"] = 0.5; });
  HeadlessSummary s;
  metrics_of(sc, replay_trace(sc.teleop.trace), &s);
  EXPECT_EQ(s.final_phase, Phase::Aborted);
  EXPECT_EQ(s.exit_code, kExitAborted);
  EXPECT_EQ(s.ticks, 1);
}

TEST(Headless, LoadsTraceNamedByScenario) {
  const Scenario sc = test_data::reference();
  std::ostringstream a, b;
  run_headless(sc, &a);
  run_headless(sc, replay_trace(sc.teleop.trace), &b);
  EXPECT_EQ(a.str(), b.str());
}

TEST(Queue, DrainsLiftsAndOneMasterCommandPerTick) {
  CommandQueue q(8);
  MasterCommand m1, m2;
  m1.tick = 1;
  m2.tick = 2;
  EXPECT_TRUE(q.push(LiftCommand{}));
  EXPECT_TRUE(q.push(m1));
  EXPECT_TRUE(q.push(LiftCommand{}));
  EXPECT_TRUE(q.push(m2));
  const auto first = q.drain_tick();
  ASSERT_EQ(first.size(), 3u);
  EXPECT_TRUE(std::holds_alternative<LiftCommand>(first[0]));
  EXPECT_EQ(std::get<MasterCommand>(first[1]).tick, 1);
  const auto second = q.drain_tick();
  ASSERT_EQ(second.size(), 1u);
  EXPECT_EQ(std::get<MasterCommand>(second[0]).tick, 2);
  EXPECT_TRUE(q.drain_tick().empty());
}

TEST(Queue, BoundedCapacity) {
  CommandQueue q(2);
  EXPECT_TRUE(q.push(LiftCommand{}));
  EXPECT_TRUE(q.push(LiftCommand{}));
  EXPECT_FALSE(q.push(LiftCommand{}));
  EXPECT_EQ(q.size(), 2u);
  q.clear();
  EXPECT_EQ(q.size(), 0u);
}

TEST(Protocol, ParsesCommand) {
  const auto m = parse_client_message(
      R"({"type":"command","protocol_version":1,"position":[0.1,0.2,0.3],"orientation":[1,0,0,0],"gripper":0.8,"clutch":true})");
  EXPECT_EQ(m.kind, ClientMessage::Kind::Command);
  EXPECT_EQ(m.command.pose.position, Vec3(0.1, 0.2, 0.3));
  EXPECT_EQ(m.command.gripper, 0.8);
  EXPECT_TRUE(m.command.clutch);
  EXPECT_TRUE(m.command.gripper_closed());
}

TEST(Protocol, ParsesControl) {
  const auto m = parse_client_message(R"({"type":"control","action":"record_start","path":"/tmp/x.txt"})");
  EXPECT_EQ(m.kind, ClientMessage::Kind::Control);
  EXPECT_EQ(m.action, "record_start");
  EXPECT_EQ(m.path, std::optional<std::string>("/tmp/x.txt"));
}

TEST(Protocol, RejectsMalformedMessages) {
  for (const char* text : {
           "not json",
           "[1,2]",
           R"({"type":"teleport"})",
           R"({"type":"command","position":[0,0],"orientation":[1,0,0,0],"gripper":0,"clutch":true})",
           R"({"type":"command","position":[0,0,0],"orientation":[2,0,0,0],"gripper":0,"clutch":true})",
           R"({"type":"command","position":[0,0,0],"orientation":[1,0,0,0],"gripper":3,"clutch":true})",
           R"({"type":"command","position":[0,0,0],"orientation":[1,0,0,0],"gripper":0})",
           R"({"type":"command","protocol_version":2,"position":[0,0,0],"orientation":[1,0,0,0],"gripper":0,"clutch":true})",
           R"({"type":"control","action":"explode"})",
           R"({"type":"control"})",
       }) {
    EXPECT_THROW(parse_client_message(text), InputError) << text;
  }
}

TEST(Protocol, ErrorFrame) {
  const json e = error_message("bad");
  EXPECT_EQ(e["type"], "error");
  EXPECT_EQ(e["message"], "bad");
  EXPECT_EQ(e["protocol_version"], kProtocolVersion);
}

TEST(DistanceJson, VerdictOnlyWithThreshold) {
  DistanceReport r;
  r.d_min = 0.3;
  EXPECT_FALSE(distance_report_json(r, 0.0).contains("verdict"));
  EXPECT_EQ(distance_report_json(r, 0.25)["verdict"], "SAFE");
  EXPECT_EQ(distance_report_json(r, 0.35)["verdict"], "UNSAFE");
}

TEST(TwistProblem, StartPosesShareTheHoldAxis) {
  const Scenario sc = test_data::reference();
  const Pose r = twist_start_pose_right(sc);
  const Pose l = twist_start_pose_left(sc);
  EXPECT_NEAR((l.position - r.position - sc.object.length * sc.hold_axis).norm(), 0.0, 1e-15);
  EXPECT_NEAR(((r.orientation * Vec3::UnitZ()) - sc.hold_axis).norm(), 0.0, 1e-12);
  const auto p = twist_problem(sc);
  EXPECT_LE(pose_error(forward_kinematics(sc.right_arm, p.right.initial), r), sc.ik.tol);
  EXPECT_LE(pose_error(forward_kinematics(sc.left_arm, p.left.initial), l), sc.ik.tol);
  EXPECT_NEAR(rad2deg(orientation_distance(p.right.target.orientation, r.orientation)), 45.0, 1e-9);
}
