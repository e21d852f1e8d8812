#pragma once

#include <cstdint>
#include <filesystem>
#include <memory>
#include <optional>
#include <string>

#include "dualtwist/scenario.hpp"

namespace dualtwist {

struct ServeOptions {
  std::string address = "127.0.0.1";
  /// 0 picks an ephemeral port; see InteractiveServer::port().
  unsigned short port = 8765;
  double tick_rate_hz = 20.0;
  std::optional<std::filesystem::path> record;
  std::optional<std::filesystem::path> metrics_out;
};

/// WebSocket session host. One authoritative tick loop owns the engine; network I/O
/// runs on its own thread and talks to the loop only through the command queue
/// (inbound) and snapshot broadcast (outbound). The first client is the operator,
/// later clients are read-only observers.
class InteractiveServer {
public:
  InteractiveServer(Scenario scenario, ServeOptions options);
  ~InteractiveServer();

  InteractiveServer(const InteractiveServer&) = delete;
  InteractiveServer& operator=(const InteractiveServer&) = delete;

  /// Binds and starts the I/O and tick threads. Throws on bind failure.
  void start();
  /// Stops both threads and flushes the recorded trace, if any.
  void stop();
  /// Blocks until stop() is called from another thread.
  void wait();

  unsigned short port() const;
  std::int64_t tick() const;

private:
  class Impl;
  std::unique_ptr<Impl> impl_;
};

}  // namespace dualtwist
