// dualtwist: headless runs, interactive sessions and offline checks for the
// dual-arm twisting task.

#include <chrono>
#include <csignal>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <thread>

#include <CLI11.hpp>

#include "dualtwist/chain_io.hpp"
#include "dualtwist/server.hpp"
#include "dualtwist/service.hpp"

using namespace dualtwist;

namespace {

struct CommonArgs {
  std::string scenario;
  std::string left_arm;
  std::string right_arm;
  std::string trace;
  std::string metrics_out;
};

ScenarioOverrides overrides_from(const CommonArgs& a) {
  ScenarioOverrides o;
  if (!a.left_arm.empty()) o.left_arm = a.left_arm;
  if (!a.right_arm.empty()) o.right_arm = a.right_arm;
  if (!a.trace.empty()) o.trace = a.trace;
  return o;
}

JointConfig parse_config(const std::string& text) {
  std::vector<double> v;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    try {
      size_t used = 0;
      v.push_back(std::stod(item, &used));
      if (used != item.size()) throw std::invalid_argument(item);
    } catch (const std::exception&) {
      throw InputError("bad joint value '" + item + "'");
    }
  }
  return Eigen::Map<JointConfig>(v.data(), static_cast<Eigen::Index>(v.size()));
}

int run_cmd(const CommonArgs& a, bool require_trace) {
  if (require_trace && a.trace.empty()) throw InputError("replay needs --trace");
  const Scenario sc = load_scenario(a.scenario, overrides_from(a));
  if (sc.teleop.source != TeleopSource::Trace || sc.teleop.trace.empty()) {
    throw InputError("headless runs need a trace-backed scenario (use --trace)");
  }
  const auto trace = replay_trace(sc.teleop.trace);
  std::ofstream metrics;
  if (!a.metrics_out.empty()) {
    metrics.open(a.metrics_out, std::ios::trunc);
    if (!metrics) throw InputError("cannot write " + a.metrics_out);
  }
  const HeadlessSummary s = run_headless(sc, trace, metrics.is_open() ? &metrics : nullptr);
  std::cout << s.describe();
  return s.exit_code;
}

volatile std::sig_atomic_t g_stop = 0;

extern "C" void on_signal(int) { g_stop = 1; }

int serve_cmd(const CommonArgs& a, const std::string& listen, double tick_rate,
              const std::string& record) {
  const Scenario sc = load_scenario(a.scenario, overrides_from(a));
  ServeOptions opt;
  const auto colon = listen.rfind(':');
  if (colon == std::string::npos) throw InputError("--listen expects host:port");
  opt.address = listen.substr(0, colon);
  try {
    const int port = std::stoi(listen.substr(colon + 1));
    if (port < 0 || port > 65535) throw std::out_of_range("port");
    opt.port = static_cast<unsigned short>(port);
  } catch (const std::exception&) {
    throw InputError("bad port in --listen '" + listen + "'");
  }
  opt.tick_rate_hz = tick_rate;
  if (!record.empty()) opt.record = record;
  if (!a.metrics_out.empty()) opt.metrics_out = a.metrics_out;

  InteractiveServer server(sc, opt);
  server.start();
  std::cout << "listening on " << opt.address << ':' << server.port() << std::endl;
  std::signal(SIGINT, on_signal);
  std::signal(SIGTERM, on_signal);
  while (!g_stop) std::this_thread::sleep_for(std::chrono::milliseconds(100));
  server.stop();
  return 0;
}

int optimize_cmd(const CommonArgs& a) {
  const Scenario sc = load_scenario(a.scenario, overrides_from(a));
  const OptimizationProblem p = twist_problem(sc);
  const CandidateScore base = baseline_solution(p);
  const OptimizationResult r = optimize_twist_configs(p);
  std::cout << optimization_result_json(r, base).dump(2) << '\n';
  return 0;
}

int collision_cmd(const CommonArgs& a, const std::string& ql, const std::string& qr,
                  std::optional<double> d_thr, bool all_segments) {
  std::optional<Scenario> sc;
  if (!a.scenario.empty()) sc = load_scenario(a.scenario, overrides_from(a));
  if (!sc && (a.left_arm.empty() || a.right_arm.empty())) {
    throw InputError("check-collision needs --scenario or both --left-arm and --right-arm");
  }
  const KinematicChain left = sc ? sc->left_arm : load_chain(a.left_arm);
  const KinematicChain right = sc ? sc->right_arm : load_chain(a.right_arm);
  const JointConfig q_left = ql.empty() && sc ? sc->left_initial : parse_config(ql);
  const JointConfig q_right = qr.empty() && sc ? sc->right_initial : parse_config(qr);
  left.require_size(q_left);
  right.require_size(q_right);
  const DistanceReport r = min_arm_distance(ArmSkeleton(joint_positions(left, q_left)),
                                            ArmSkeleton(joint_positions(right, q_right)),
                                            !all_segments);
  const double thr = d_thr.value_or(sc ? sc->gates.d_thr : 0.0);
  std::cout << distance_report_json(r, thr).dump(2) << '\n';
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Dual-arm coordinated twisting: simulation, teleoperation and analysis"};
  app.require_subcommand(1);

  CommonArgs args;
  auto add_common = [&](CLI::App* sub, bool scenario_required) {
    auto* opt = sub->add_option("--scenario", args.scenario, "Scenario file");
    if (scenario_required) opt->required()->check(CLI::ExistingFile);
    sub->add_option("--left-arm", args.left_arm, "Left arm chain file (overrides scenario)")
        ->check(CLI::ExistingFile);
    sub->add_option("--right-arm", args.right_arm, "Right arm chain file (overrides scenario)")
        ->check(CLI::ExistingFile);
  };

  auto* run = app.add_subcommand("run", "Run a scenario headlessly against its trace");
  add_common(run, true);
  run->add_option("--trace", args.trace, "Command trace (overrides scenario)")
      ->check(CLI::ExistingFile);
  run->add_option("--metrics-out", args.metrics_out, "Per-tick metrics log (CSV)");

  auto* replay = app.add_subcommand("replay", "Replay a recorded trace headlessly");
  add_common(replay, true);
  replay->add_option("--trace", args.trace, "Recorded trace")->required()->check(CLI::ExistingFile);
  replay->add_option("--metrics-out", args.metrics_out, "Per-tick metrics log (CSV)");

  std::string listen = "127.0.0.1:8765";
  std::string record;
  double tick_rate = 20.0;
  auto* serve = app.add_subcommand("serve", "Host an interactive WebSocket session");
  add_common(serve, true);
  serve->add_option("--listen", listen, "host:port (port 0 picks a free one)")
      ->capture_default_str();
  serve->add_option("--tick-rate", tick_rate, "Tick and snapshot rate in Hz")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  serve->add_option("--record", record, "Write the operator's commands to this trace file");
  serve->add_option("--metrics-out", args.metrics_out, "Per-tick metrics log (CSV)");

  auto* optimize = app.add_subcommand("optimize", "Optimize the twist configurations");
  add_common(optimize, true);

  std::string ql, qr;
  std::optional<double> d_thr;
  bool all_segments = false;
  auto* collide = app.add_subcommand("check-collision", "Minimum distance between two arms");
  add_common(collide, false);
  collide->add_option("--q-left", ql, "Comma-separated left joint angles (rad)");
  collide->add_option("--q-right", qr, "Comma-separated right joint angles (rad)");
  collide->add_option("--d-thr", d_thr, "Safety threshold (m)");
  collide->add_flag("--all-segments", all_segments, "Include the gripper segments");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : kExitInputError;
  }

  try {
    if (*run) return run_cmd(args, false);
    if (*replay) return run_cmd(args, true);
    if (*serve) return serve_cmd(args, listen, tick_rate, record);
    if (*optimize) return optimize_cmd(args);
    if (*collide) return collision_cmd(args, ql, qr, d_thr, all_segments);
  } catch (const InputError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitInputError;
  } catch (const ParseError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitInputError;
  } catch (const ConfigurationError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitInputError;
  } catch (const InfeasibleError& e) {
    std::cerr << "infeasible: " << e.what() << '\n';
    return kExitAborted;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitAborted;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitInputError;
  }
  return kExitInputError;
}
