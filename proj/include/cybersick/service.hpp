#pragma once

#include <atomic>
#include <chrono>
#include <condition_variable>
#include <cstddef>
#include <cstdint>
#include <deque>
#include <functional>
#include <iosfwd>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <thread>
#include <variant>
#include <vector>

#include "cybersick/controller.hpp"
#include "cybersick/forest.hpp"
#include "cybersick/keyvalue.hpp"
#include "cybersick/telemetry.hpp"
#include "cybersick/vrsq.hpp"

namespace cybersick {

inline constexpr int kProtocolVersion = 1;

struct ServiceConfig {
  std::string listen;  ///< "host:port" or "port"; empty with stdio
  bool stdio = false;
  std::string model_path;
  std::string log_path;  ///< optional session log CSV written on shutdown
  ControllerConfig controller;
  double window_seconds = kDefaultWindowSeconds;
  double rate = kDefaultRateHz;
  double fps_window = 1.0;
  double capacity_seconds = 10.0;
  std::size_t queue_capacity = 4096;

  void validate() const;
  /// Controller keys plus window, rate, fps_window, capacity, queue_capacity,
  /// model, listen, log. Unknown keys are rejected.
  static ServiceConfig from(const KeyValueConfig& kv);
};

/// Fixed-capacity FIFO. A push into a full queue evicts the oldest element
/// and counts it as dropped, so producers never block.
template <typename T>
class BoundedQueue {
 public:
  explicit BoundedQueue(std::size_t capacity) : capacity_(capacity ? capacity : 1) {}

  void push(T value) {
    {
      std::lock_guard lock(mutex_);
      if (items_.size() >= capacity_) {
        items_.pop_front();
        ++dropped_;
      }
      items_.push_back(std::move(value));
    }
    ready_.notify_one();
  }

  /// Blocks until an element is available; nullopt once closed and drained.
  std::optional<T> pop() {
    std::unique_lock lock(mutex_);
    ready_.wait(lock, [&] { return !items_.empty() || closed_; });
    if (items_.empty()) return std::nullopt;
    T v = std::move(items_.front());
    items_.pop_front();
    return v;
  }

  void close() {
    {
      std::lock_guard lock(mutex_);
      closed_ = true;
    }
    ready_.notify_all();
  }

  std::size_t dropped() const {
    std::lock_guard lock(mutex_);
    return dropped_;
  }

 private:
  std::size_t capacity_;
  mutable std::mutex mutex_;
  std::condition_variable ready_;
  std::deque<T> items_;
  std::size_t dropped_ = 0;
  bool closed_ = false;
};

namespace wire {

struct Hello {
  int version = 0;
};
struct Head {
  HeadSample sample;
};
struct Frame {
  FrameTiming frame;
};
struct Vrsq {
  VrsqResponse response;
};
/// Inbound line that could not be turned into a message.
struct Invalid {
  std::string code;
  std::string message;
};

using Inbound = std::variant<Hello, Head, Frame, Vrsq, Invalid>;

/// Parses one newline-delimited JSON record. Never throws.
Inbound parse_line(const std::string& line);

std::string ack(const ServiceConfig& config);
std::string score(double t, double value);
std::string adjust(double t, int ffr, double fov, const std::string& reason);
std::string error(const std::string& code, const std::string& message);

std::string head(const HeadSample& s);
std::string frame(const FrameTiming& f);
std::string hello(int version = kProtocolVersion);

}  // namespace wire

struct SessionStats {
  std::size_t lines = 0;
  std::size_t head_samples = 0;
  std::size_t frames = 0;
  std::size_t evaluations = 0;
  std::size_t scores = 0;
  std::size_t adjusts = 0;
  std::size_t errors = 0;
  std::size_t drops = 0;
  std::size_t labels = 0;
  /// Window-ready to output-written latency per evaluation, microseconds.
  std::vector<double> latency_us;

  double latency_percentile(double p) const;
};

std::string stats_record(const SessionStats& stats);

/// One client session. `ingest` is called from the connection's reader; `run`
/// executes in a separate evaluation context and owns the telemetry stream and
/// controller. Output lines go to `sink` from the evaluation context only.
class Session {
 public:
  using Sink = std::function<void(const std::string&)>;

  Session(std::shared_ptr<const ForestModel> model, ServiceConfig config, Sink sink);

  void ingest(const std::string& line);
  /// No more input; `run` drains the queue, emits `stats` and returns.
  void close_input();
  void run();

  const SessionStats& stats() const { return stats_; }
  const Controller& controller() const { return controller_; }

 private:
  void handle(const wire::Inbound& msg);
  void on_head(const HeadSample& s);
  void evaluate(double t);
  void emit(const std::string& line);

  std::shared_ptr<const ForestModel> model_;
  ServiceConfig config_;
  Sink sink_;
  BoundedQueue<wire::Inbound> queue_;
  std::atomic<std::size_t> lines_{0};

  TelemetryStream stream_;
  Controller controller_;
  std::optional<double> next_eval_;
  std::optional<VrsqScore> label_;
  SessionStats stats_;
};

/// Runs one session over a pair of streams (stdin/stdout mode).
SessionStats serve_stream(std::shared_ptr<const ForestModel> model, const ServiceConfig& config,
                          std::istream& in, std::ostream& out);

/// Loopback-capable TCP listener; one session per connection.
class TcpServer {
 public:
  TcpServer(std::shared_ptr<const ForestModel> model, ServiceConfig config);
  ~TcpServer();
  TcpServer(const TcpServer&) = delete;
  TcpServer& operator=(const TcpServer&) = delete;

  /// Binds `host:port` (port 0 picks a free one) and starts accepting.
  void start(const std::string& host, std::uint16_t port);
  std::uint16_t port() const { return port_; }
  /// Stops accepting, disconnects clients and joins all threads.
  void stop();
  std::size_t sessions_served() const { return served_.load(); }

 private:
  void accept_loop();
  void handle_client(int fd, std::size_t index);

  std::shared_ptr<const ForestModel> model_;
  ServiceConfig config_;
  int listen_fd_ = -1;
  std::uint16_t port_ = 0;
  std::atomic<bool> running_{false};
  std::atomic<std::size_t> served_{0};
  std::thread acceptor_;
  std::mutex clients_mutex_;
  std::vector<int> client_fds_;
  std::vector<std::thread> client_threads_;
};

/// Blocking line-oriented TCP client.
class LineClient {
 public:
  LineClient(const std::string& host, std::uint16_t port);
  ~LineClient();
  LineClient(const LineClient&) = delete;
  LineClient& operator=(const LineClient&) = delete;

  void send_line(const std::string& line);
  /// Half-closes the write side so the server sees end of input.
  void finish_sending();
  /// Next line without the newline; nullopt at end of stream.
  std::optional<std::string> read_line();

 private:
  int fd_ = -1;
  std::string buffer_;
};

/// Parses "host:port" or "port" (host defaults to 127.0.0.1).
std::pair<std::string, std::uint16_t> parse_endpoint(const std::string& endpoint);

}  // namespace cybersick
