#include "dualtwist/server.hpp"

#include <atomic>
#include <chrono>
#include <condition_variable>
#include <deque>
#include <fstream>
#include <iostream>
#include <mutex>
#include <set>
#include <thread>
#include <vector>

#include <boost/asio.hpp>
#include <boost/beast/core.hpp>
#include <boost/beast/websocket.hpp>

#include "dualtwist/service.hpp"

namespace dualtwist {

namespace asio = boost::asio;
namespace beast = boost::beast;
namespace websocket = beast::websocket;
using tcp = asio::ip::tcp;

namespace {

constexpr std::size_t kMaxPendingFrames = 256;

class Session;

struct SessionHost {
  virtual ~SessionHost() = default;
  virtual void on_open(const std::shared_ptr<Session>& s) = 0;
  virtual void on_message(const std::shared_ptr<Session>& s, const std::string& text) = 0;
  virtual void on_close(const std::shared_ptr<Session>& s) = 0;
};

class Session : public std::enable_shared_from_this<Session> {
public:
  Session(tcp::socket socket, SessionHost& host) : ws_(std::move(socket)), host_(host) {}

  void run() {
    ws_.text(true);
    ws_.async_accept([self = shared_from_this()](beast::error_code ec) {
      if (ec) return;
      self->open_ = true;
      self->host_.on_open(self);
      self->do_read();
    });
  }

  // I/O thread only.
  void send(std::shared_ptr<const std::string> frame) {
    if (!open_ || out_.size() >= kMaxPendingFrames) return;
    out_.push_back(std::move(frame));
    if (out_.size() == 1) do_write();
  }

  void close() {
    if (!open_) return;
    open_ = false;
    beast::error_code ec;
    ws_.next_layer().shutdown(tcp::socket::shutdown_both, ec);
    ws_.next_layer().close(ec);
  }

  bool is_operator = false;

private:
  void do_read() {
    ws_.async_read(buffer_, [self = shared_from_this()](beast::error_code ec, std::size_t) {
      if (ec) {
        self->finish();
        return;
      }
      const std::string text = beast::buffers_to_string(self->buffer_.data());
      self->buffer_.consume(self->buffer_.size());
      self->host_.on_message(self, text);
      self->do_read();
    });
  }

  void do_write() {
    ws_.async_write(asio::buffer(*out_.front()),
                    [self = shared_from_this()](beast::error_code ec, std::size_t) {
                      if (ec) {
                        self->finish();
                        return;
                      }
                      self->out_.pop_front();
                      if (!self->out_.empty()) self->do_write();
                    });
  }

  void finish() {
    if (closed_reported_) return;
    closed_reported_ = true;
    open_ = false;
    out_.clear();
    host_.on_close(shared_from_this());
  }

  websocket::stream<tcp::socket> ws_;
  beast::flat_buffer buffer_;
  std::deque<std::shared_ptr<const std::string>> out_;
  SessionHost& host_;
  bool open_ = false;
  bool closed_reported_ = false;
};

}  // namespace

class InteractiveServer::Impl : public SessionHost {
public:
  Impl(Scenario scenario, ServeOptions options)
      : scenario_(std::move(scenario)), options_(std::move(options)), acceptor_(ioc_) {
    if (!(options_.tick_rate_hz > 0.0)) throw ConfigurationError("tick rate must be positive");
    recording_ = options_.record.has_value();
  }

  ~Impl() override { stop(); }

  void start() {
    const tcp::endpoint ep(asio::ip::make_address(options_.address), options_.port);
    acceptor_.open(ep.protocol());
    acceptor_.set_option(asio::socket_base::reuse_address(true));
    acceptor_.bind(ep);
    acceptor_.listen();
    port_ = acceptor_.local_endpoint().port();
    reset_world();
    running_ = true;
    do_accept();
    io_thread_ = std::thread([this] { ioc_.run(); });
    tick_thread_ = std::thread([this] { tick_loop(); });
  }

  void stop() {
    {
      std::lock_guard lock(stop_mutex_);
      if (!running_) return;
      running_ = false;
    }
    stop_cv_.notify_all();
    if (tick_thread_.joinable()) tick_thread_.join();
    asio::post(ioc_, [this] {
      beast::error_code ec;
      acceptor_.close(ec);
      for (const auto& s : sessions_) s->close();
      sessions_.clear();
    });
    if (io_thread_.joinable()) {
      // Let the close handlers run, then stop the loop.
      asio::post(ioc_, [this] { ioc_.stop(); });
      io_thread_.join();
    }
    flush_recording();
  }

  void wait() {
    std::unique_lock lock(stop_mutex_);
    stop_cv_.wait(lock, [this] { return !running_; });
  }

  unsigned short port() const { return port_; }
  std::int64_t tick() const { return tick_.load(); }

  void on_open(const std::shared_ptr<Session>& s) override {
    sessions_.insert(s);
    const bool has_operator = !operator_.expired();
    s->is_operator = !has_operator;
    if (s->is_operator) operator_ = s;
    nlohmann::json hello{{"type", "hello"},
                         {"protocol_version", kProtocolVersion},
                         {"role", s->is_operator ? "operator" : "observer"}};
    s->send(std::make_shared<const std::string>(hello.dump()));
  }

  void on_message(const std::shared_ptr<Session>& s, const std::string& text) override {
    auto error = [&](const std::string& why) {
      s->send(std::make_shared<const std::string>(error_message(why).dump()));
    };
    ClientMessage msg;
    try {
      msg = parse_client_message(text);
    } catch (const InputError& e) {
      error(e.what());
      return;
    }
    if (!s->is_operator) {
      error("observer connections are read-only");
      return;
    }
    if (msg.kind == ClientMessage::Kind::Command) {
      last_command_ = msg.command;
      if (!queue_.push(msg.command)) error("command queue full; command dropped");
      return;
    }
    if (msg.action == "lift") {
      if (!queue_.push(LiftCommand{})) error("command queue full; command dropped");
      return;
    }
    std::lock_guard lock(control_mutex_);
    controls_.push_back(msg);
  }

  void on_close(const std::shared_ptr<Session>& s) override {
    sessions_.erase(s);
    if (s->is_operator) {
      operator_.reset();
      // Dropped operator: the clutch opens and the arm holds where it is.
      if (last_command_) {
        MasterCommand release = *last_command_;
        release.clutch = false;
        queue_.push(release);
      }
      last_command_.reset();
    }
  }

private:
  void do_accept() {
    acceptor_.async_accept([this](beast::error_code ec, tcp::socket socket) {
      if (ec) return;
      std::make_shared<Session>(std::move(socket), *this)->run();
      do_accept();
    });
  }

  void reset_world() {
    engine_ = std::make_unique<TaskEngine>(scenario_);
    queue_.clear();
    recorded_.clear();
    paused_ = false;
    if (options_.metrics_out) {
      metrics_.close();
      metrics_.open(*options_.metrics_out, std::ios::trunc);
      write_metrics_header(metrics_, scenario_.left_arm.joint_count(),
                           scenario_.right_arm.joint_count());
      write_metrics_row(metrics_, *engine_);
      metrics_.flush();
    }
    tick_ = 0;
  }

  void flush_recording() {
    if (!recording_ || !options_.record) return;
    record_trace(*options_.record, recorded_);
  }

  void apply_controls() {
    std::deque<ClientMessage> pending;
    {
      std::lock_guard lock(control_mutex_);
      pending.swap(controls_);
    }
    for (const auto& c : pending) {
      if (c.action == "reset") {
        reset_world();
      } else if (c.action == "record_start") {
        if (c.path) options_.record = *c.path;
        if (!options_.record) continue;
        recording_ = true;
        reset_world();
      } else if (c.action == "record_stop") {
        flush_recording();
        recording_ = false;
      } else if (c.action == "pause") {
        paused_ = true;
      } else if (c.action == "resume") {
        paused_ = false;
      }
    }
  }

  void tick_loop() {
    using clock = std::chrono::steady_clock;
    const auto period = std::chrono::duration_cast<clock::duration>(
        std::chrono::duration<double>(1.0 / options_.tick_rate_hz));
    auto next = clock::now();
    std::unique_lock lock(stop_mutex_);
    while (running_) {
      lock.unlock();
      apply_controls();
      if (!paused_ && !engine_->finished()) {
        auto cmds = queue_.drain_tick();
        for (const auto& c : cmds) {
          if (const auto* mc = std::get_if<MasterCommand>(&c); mc && recording_) {
            MasterCommand stamped = *mc;
            stamped.tick = engine_->state().tick + 1;
            recorded_.push_back(stamped);
          }
        }
        engine_->step(cmds);
        tick_ = engine_->state().tick;
        if (metrics_.is_open()) {
          write_metrics_row(metrics_, *engine_);
          metrics_.flush();
        }
      }
      auto frame = std::make_shared<const std::string>(snapshot_json(*engine_).dump());
      asio::post(ioc_, [this, frame] {
        for (const auto& s : sessions_) s->send(frame);
      });
      next += period;
      lock.lock();
      stop_cv_.wait_until(lock, next, [this] { return !running_; });
    }
  }

  Scenario scenario_;
  ServeOptions options_;
  asio::io_context ioc_;
  tcp::acceptor acceptor_;
  std::thread io_thread_;
  std::thread tick_thread_;
  unsigned short port_ = 0;

  // I/O thread state.
  std::set<std::shared_ptr<Session>> sessions_;
  std::weak_ptr<Session> operator_;
  std::optional<MasterCommand> last_command_;

  // Shared between threads.
  CommandQueue queue_;
  std::mutex control_mutex_;
  std::deque<ClientMessage> controls_;
  std::mutex stop_mutex_;
  std::condition_variable stop_cv_;
  bool running_ = false;
  std::atomic<std::int64_t> tick_{0};

  // Tick thread state.
  std::unique_ptr<TaskEngine> engine_;
  std::vector<MasterCommand> recorded_;
  std::ofstream metrics_;
  bool recording_ = false;
  bool paused_ = false;
};

InteractiveServer::InteractiveServer(Scenario scenario, ServeOptions options)
    : impl_(std::make_unique<Impl>(std::move(scenario), std::move(options))) {}

InteractiveServer::~InteractiveServer() = default;

void InteractiveServer::start() { impl_->start(); }
void InteractiveServer::stop() { impl_->stop(); }
void InteractiveServer::wait() { impl_->wait(); }
unsigned short InteractiveServer::port() const { return impl_->port(); }
std::int64_t InteractiveServer::tick() const { return impl_->tick(); }

}  // namespace dualtwist
