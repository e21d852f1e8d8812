#pragma once

#include <cstdint>
#include <deque>
#include <iosfwd>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "dualtwist/task_engine.hpp"

namespace dualtwist {

inline constexpr int kProtocolVersion = 1;

enum ExitCode : int {
  kExitDone = 0,
  kExitIncomplete = 1,
  kExitAborted = 2,
  kExitInputError = 3,
};

/// Metrics log columns, in order.
extern const std::vector<std::string> kMetricsColumns;

void write_metrics_header(std::ostream& out, int left_joints, int right_joints);
void write_metrics_row(std::ostream& out, const TaskEngine& engine);

/// Full world snapshot (message type "snapshot").
nlohmann::json snapshot_json(const TaskEngine& engine);

struct HeadlessSummary {
  Phase final_phase = Phase::Initial;
  std::int64_t ticks = 0;
  double final_theta_t_deg = 0.0;
  double min_d_min = 0.0;
  double max_delta_twist_deg = 0.0;
  /// Commands rejected by the engine (phase errors, validation failures).
  int rejected_commands = 0;
  int exit_code = kExitIncomplete;

  std::string describe() const;
};

/// Runs the scenario against a command trace until Done, Aborted, the trace is
/// exhausted plus settle_ticks, or max_ticks. Each tick applies the trace command
/// stamped with that tick, if any.
HeadlessSummary run_headless(const Scenario& scenario, const std::vector<MasterCommand>& trace,
                             std::ostream* metrics_out = nullptr);

/// Loads the scenario's trace (if trace-backed) and runs it.
HeadlessSummary run_headless(const Scenario& scenario, std::ostream* metrics_out = nullptr);

/// Bounded FIFO shared between network contexts and the tick loop.
class CommandQueue {
public:
  explicit CommandQueue(std::size_t capacity = 64) : capacity_(capacity) {}

  /// False when full.
  bool push(TaskCommand cmd);
  /// Lift commands plus at most one master command, in arrival order.
  std::vector<TaskCommand> drain_tick();
  std::size_t size() const;
  void clear();

private:
  mutable std::mutex mutex_;
  std::deque<TaskCommand> queue_;
  std::size_t capacity_;
};

/// Parsed client message.
struct ClientMessage {
  enum class Kind { Command, Control } kind = Kind::Command;
  MasterCommand command;
  std::string action;
  std::optional<std::string> path;
};

/// Throws InputError with a human-readable reason for malformed messages.
ClientMessage parse_client_message(const std::string& text);

nlohmann::json error_message(const std::string& reason);

/// Twist-phase pose pair: both grippers on the hold axis at the preparing location,
/// end 2 one object length along it.
Pose twist_start_pose_right(const Scenario& scenario);
Pose twist_start_pose_left(const Scenario& scenario);

/// Configuration problem for the twist: initial configurations reach the twist start
/// poses, targets are those poses rotated by the planned twist angles about the tool z.
/// Throws UnreachableTargetError when a start pose has no IK solution.
OptimizationProblem twist_problem(const Scenario& scenario);

nlohmann::json optimization_result_json(const OptimizationResult& result,
                                        const CandidateScore& baseline);
/// Adds the safety verdict when d_thr > 0.
nlohmann::json distance_report_json(const DistanceReport& report, double d_thr);

}  // namespace dualtwist
