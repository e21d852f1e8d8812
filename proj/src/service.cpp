#include "dualtwist/service.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <limits>
#include <map>
#include <ostream>
#include <sstream>

#include "dualtwist/chain_io.hpp"

namespace dualtwist {

using nlohmann::json;

const std::vector<std::string> kMetricsColumns = {
    "tick", "phase", "delta_deg", "d_min", "theta_t_deg", "m_left", "m_right", "f_m"};

namespace {

void put(std::ostream& out, double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  out.write(buf, res.ptr - buf);
}

json joints_json(const JointConfig& q) {
  json a = json::array();
  for (Eigen::Index i = 0; i < q.size(); ++i) a.push_back(q[i]);
  return a;
}

json pose_json(const Pose& p) {
  return json{{"position", vec3_to_json(p.position)}, {"orientation", quat_to_json(p.orientation)}};
}

json points_json(const ArmSkeleton& s) {
  json a = json::array();
  for (const auto& p : s.points) a.push_back(vec3_to_json(p));
  return a;
}

}  // namespace

void write_metrics_header(std::ostream& out, int left_joints, int right_joints) {
  for (size_t i = 0; i < kMetricsColumns.size(); ++i) {
    if (i) out << ',';
    out << kMetricsColumns[i];
  }
  for (int i = 1; i <= left_joints; ++i) out << ",q_left_" << i;
  for (int i = 1; i <= right_joints; ++i) out << ",q_right_" << i;
  out << '\n';
}

void write_metrics_row(std::ostream& out, const TaskEngine& engine) {
  const auto& st = engine.state();
  const auto& m = st.metrics;
  out << st.tick << ',' << phase_name(st.phase);
  for (double v : {m.delta_deg, m.distance.d_min, m.theta_t_deg, m.m_left, m.m_right, m.f_m}) {
    out << ',';
    put(out, v);
  }
  const auto& w = engine.world();
  for (Eigen::Index i = 0; i < w.q_left.size(); ++i) {
    out << ',';
    put(out, w.q_left[i]);
  }
  for (Eigen::Index i = 0; i < w.q_right.size(); ++i) {
    out << ',';
    put(out, w.q_right[i]);
  }
  out << '\n';
}

json snapshot_json(const TaskEngine& engine) {
  const auto& st = engine.state();
  const auto& m = st.metrics;
  const auto& w = engine.world();
  const auto& sc = engine.scenario();
  json verdict = nullptr;
  if (const auto& v = engine.last_verdict()) {
    verdict = {{"tick", v->tick}, {"accepted", v->accepted}, {"message", v->message}};
  }
  return json{
      {"type", "snapshot"},
      {"protocol_version", kProtocolVersion},
      {"tick", st.tick},
      {"phase", phase_name(st.phase)},
      {"left",
       {{"joints", joints_json(w.q_left)},
        {"gripper_closed", w.left_gripper_closed},
        {"points", points_json(engine.left_skeleton())},
        {"ee", pose_json(engine.left_pose())}}},
      {"right",
       {{"joints", joints_json(w.q_right)},
        {"gripper_closed", w.right_gripper_closed},
        {"points", points_json(engine.right_skeleton())},
        {"ee", pose_json(engine.right_pose())}}},
      {"object",
       {{"p1", vec3_to_json(w.object.p1())},
        {"p2", vec3_to_json(w.object.p2())},
        {"axis", vec3_to_json(w.object.axis())},
        {"length", w.object.length},
        {"stiffness", w.object.stiffness},
        {"end1_holder", holder_name(w.object.end1.holder)},
        {"end2_holder", holder_name(w.object.end2.holder)}}},
      {"metrics",
       {{"delta_deg", m.delta_deg},
        {"d_min", m.distance.d_min},
        {"closest_pair", {m.distance.left_segment, m.distance.right_segment}},
        {"witness_left", vec3_to_json(m.distance.witness_left)},
        {"witness_right", vec3_to_json(m.distance.witness_right)},
        {"theta_t_deg", m.theta_t_deg},
        {"theta_left_deg", m.theta_left_deg},
        {"theta_right_deg", m.theta_right_deg},
        {"m_left", m.m_left},
        {"m_right", m.m_right},
        {"f_m", m.f_m}}},
      {"gates",
       {{"delta_tor_deg", sc.gates.delta_tor_deg},
        {"d_thr", sc.gates.d_thr},
        {"theta_total_deg", sc.plan.theta_total_deg}}},
      {"teleop", {{"engaged", w.teleop.engaged()}}},
      {"last_verdict", verdict},
  };
}

std::string HeadlessSummary::describe() const {
  std::ostringstream os;
  os << "phase " << phase_name(final_phase) << " after " << ticks << " ticks\n"
     << "final theta_t " << final_theta_t_deg << " deg\n"
     << "min d_min " << min_d_min << " m\n"
     << "max delta during twist " << max_delta_twist_deg << " deg\n"
     << "rejected commands " << rejected_commands << '\n';
  return os.str();
}

HeadlessSummary run_headless(const Scenario& scenario, const std::vector<MasterCommand>& trace,
                             std::ostream* metrics_out) {
  std::map<std::int64_t, const MasterCommand*> by_tick;
  for (const auto& c : trace) by_tick[c.tick] = &c;
  const std::int64_t last_tick = trace.empty() ? 0 : trace.back().tick;

  TaskEngine engine(scenario);
  HeadlessSummary s;
  s.min_d_min = engine.state().metrics.distance.d_min;
  if (metrics_out) {
    write_metrics_header(*metrics_out, scenario.left_arm.joint_count(),
                         scenario.right_arm.joint_count());
    write_metrics_row(*metrics_out, engine);
  }

  while (!engine.finished() && engine.state().tick < scenario.max_ticks) {
    const std::int64_t next = engine.state().tick + 1;
    if (next > last_tick + scenario.settle_ticks) break;
    std::vector<TaskCommand> cmds;
    if (auto it = by_tick.find(next); it != by_tick.end()) cmds.emplace_back(*it->second);
    const Phase before = engine.state().phase;
    engine.step(cmds);
    const auto& st = engine.state();
    if (engine.last_verdict() && !engine.last_verdict()->accepted) ++s.rejected_commands;
    s.min_d_min = std::min(s.min_d_min, st.metrics.distance.d_min);
    if (before == Phase::Twist || st.phase == Phase::Twist) {
      s.max_delta_twist_deg = std::max(s.max_delta_twist_deg, st.metrics.delta_deg);
    }
    if (metrics_out) write_metrics_row(*metrics_out, engine);
  }

  s.final_phase = engine.state().phase;
  s.ticks = engine.state().tick;
  s.final_theta_t_deg = engine.state().metrics.theta_t_deg;
  s.exit_code = s.final_phase == Phase::Done      ? kExitDone
                : s.final_phase == Phase::Aborted ? kExitAborted
                                                  : kExitIncomplete;
  return s;
}

HeadlessSummary run_headless(const Scenario& scenario, std::ostream* metrics_out) {
  std::vector<MasterCommand> trace;
  if (scenario.teleop.source == TeleopSource::Trace && !scenario.teleop.trace.empty()) {
    trace = replay_trace(scenario.teleop.trace);
  }
  return run_headless(scenario, trace, metrics_out);
}

bool CommandQueue::push(TaskCommand cmd) {
  std::lock_guard lock(mutex_);
  if (queue_.size() >= capacity_) return false;
  queue_.push_back(std::move(cmd));
  return true;
}

std::vector<TaskCommand> CommandQueue::drain_tick() {
  std::lock_guard lock(mutex_);
  std::vector<TaskCommand> out;
  bool have_master = false;
  while (!queue_.empty()) {
    const bool is_master = std::holds_alternative<MasterCommand>(queue_.front());
    if (is_master && have_master) break;
    have_master = have_master || is_master;
    out.push_back(std::move(queue_.front()));
    queue_.pop_front();
  }
  return out;
}

std::size_t CommandQueue::size() const {
  std::lock_guard lock(mutex_);
  return queue_.size();
}

void CommandQueue::clear() {
  std::lock_guard lock(mutex_);
  queue_.clear();
}

ClientMessage parse_client_message(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error&) {
    throw InputError("message is not valid JSON");
  }
  if (!j.is_object()) throw InputError("message must be a JSON object");
  if (j.contains("protocol_version") &&
      (!j.at("protocol_version").is_number_integer() ||
       j.at("protocol_version").get<int>() != kProtocolVersion)) {
    throw InputError("unsupported protocol_version");
  }
  const auto type = j.value("type", std::string());
  ClientMessage msg;
  try {
    if (type == "command") {
      msg.kind = ClientMessage::Kind::Command;
      const Vec3 p = vec3_from_json(j.at("position"));
      const auto& o = j.at("orientation");
      if (!o.is_array() || o.size() != 4) throw InputError("orientation must be [w,x,y,z]");
      const Eigen::Quaterniond q(o[0].get<double>(), o[1].get<double>(), o[2].get<double>(),
                                 o[3].get<double>());
      if (!p.allFinite() || !q.coeffs().allFinite() || std::abs(q.norm() - 1.0) > 1e-6) {
        throw InputError("pose must be finite with a unit quaternion");
      }
      msg.command.pose.position = p;
      msg.command.pose.orientation = q;
      msg.command.gripper = j.at("gripper").get<double>();
      if (!(msg.command.gripper >= 0.0 && msg.command.gripper <= 1.0)) {
        throw InputError("gripper must lie in [0, 1]");
      }
      msg.command.clutch = j.at("clutch").get<bool>();
    } else if (type == "control") {
      msg.kind = ClientMessage::Kind::Control;
      msg.action = j.at("action").get<std::string>();
      static const std::vector<std::string> actions = {"reset", "record_start", "record_stop",
                                                       "lift", "pause", "resume"};
      if (std::find(actions.begin(), actions.end(), msg.action) == actions.end()) {
        throw InputError("unknown control action '" + msg.action + "'");
      }
      if (j.contains("path")) msg.path = j.at("path").get<std::string>();
    } else {
      throw InputError("unknown message type '" + type + "'");
    }
  } catch (const json::exception& e) {
    throw InputError(std::string("malformed ") + type + " message: " + e.what());
  } catch (const ConfigurationError& e) {
    throw InputError(std::string("malformed ") + type + " message: " + e.what());
  }
  return msg;
}

json error_message(const std::string& reason) {
  return json{{"type", "error"}, {"protocol_version", kProtocolVersion}, {"message", reason}};
}

Pose twist_start_pose_right(const Scenario& scenario) {
  return Pose(scenario.prepare_position,
              frame_from_axis(scenario.hold_axis, scenario.hold_x_hint));
}

Pose twist_start_pose_left(const Scenario& scenario) {
  return Pose(scenario.prepare_position + scenario.object.length * scenario.hold_axis.normalized(),
              frame_from_axis(scenario.hold_axis, scenario.hold_x_hint));
}

namespace {

Pose twisted(const Pose& p, double deg) {
  return Pose(p.position,
              p.orientation * Eigen::Quaterniond(Eigen::AngleAxisd(deg2rad(deg), Vec3::UnitZ())));
}

json solution_json(const ArmSolution& s) {
  return json{{"q", joints_json(s.q)},
              {"variation", s.variation},
              {"manipulability", s.manipulability},
              {"singularity", s.singularity},
              {"pose_error", s.pose_error}};
}

}  // namespace

OptimizationProblem twist_problem(const Scenario& scenario) {
  OptimizationProblem p;
  const Pose rs = twist_start_pose_right(scenario);
  const Pose ls = twist_start_pose_left(scenario);
  p.right.chain = &scenario.right_arm;
  p.left.chain = &scenario.left_arm;
  p.right.initial = solve_ik(scenario.right_arm, rs, scenario.right_initial, scenario.ik).q;
  p.left.initial = solve_ik(scenario.left_arm, ls, scenario.left_initial, scenario.ik).q;
  p.right.target = twisted(rs, scenario.plan.theta_right_deg);
  p.left.target = twisted(ls, scenario.plan.theta_left_deg);
  p.left.alpha = scenario.optimizer.alpha;
  p.right.alpha = scenario.optimizer.alpha;
  p.left.beta = scenario.optimizer.beta_left;
  p.right.beta = scenario.optimizer.beta_right;
  p.lambda_m = scenario.optimizer.lambda_m;
  p.singularity_floor = scenario.singularity_floor;
  p.d_thr = scenario.gates.d_thr;
  p.seed_count = scenario.optimizer.seed_count;
  p.redundant_joint = scenario.optimizer.redundant_joint;
  p.ik = scenario.ik;
  return p;
}

json optimization_result_json(const OptimizationResult& r, const CandidateScore& baseline) {
  json base{{"f_a", baseline.f_a},
            {"f_m", baseline.f_m},
            {"objective", baseline.objective},
            {"d_min", baseline.d_min},
            {"violations", baseline.violations}};
  return json{{"left", solution_json(r.left)},
              {"right", solution_json(r.right)},
              {"f_a", r.f_a},
              {"f_m", r.f_m},
              {"objective", r.objective},
              {"d_min", r.d_min},
              {"iterations", r.iterations},
              {"candidates_evaluated", r.candidates_evaluated},
              {"converged", r.converged},
              {"accepted_objectives", r.accepted_objectives},
              {"baseline", base}};
}

json distance_report_json(const DistanceReport& r, double d_thr) {
  json out{{"d_min", r.d_min},
           {"left_segment", r.left_segment},
           {"right_segment", r.right_segment},
           {"witness_left", vec3_to_json(r.witness_left)},
           {"witness_right", vec3_to_json(r.witness_right)}};
  if (d_thr > 0.0) {
    out["d_thr"] = d_thr;
    out["verdict"] = collision_check(r, d_thr).safe() ? "SAFE" : "UNSAFE";
  }
  return out;
}

}  // namespace dualtwist
