#include "cybersick/service.hpp"

#include <arpa/inet.h>
#include <netinet/in.h>
#include <netinet/tcp.h>
#include <sys/socket.h>
#include <unistd.h>

#include <algorithm>
#include <cerrno>
#include <cmath>
#include <cstring>
#include <fstream>
#include <istream>
#include <ostream>

#include <json.hpp>

#include "cybersick/csv.hpp"
#include "cybersick/error.hpp"
#include "cybersick/kinematics.hpp"

namespace cybersick {

using json = nlohmann::json;

void ServiceConfig::validate() const {
  controller.validate();
  if (!(window_seconds > 0.0) || !(rate > 0.0) || !(fps_window > 0.0)) {
    throw ParameterError("service: window, rate and fps_window must be positive");
  }
  if (!(capacity_seconds >= window_seconds + controller.eval_period)) {
    throw ParameterError("service: capacity must cover window + eval_period");
  }
  if (queue_capacity == 0) throw ParameterError("service: queue_capacity must be positive");
}

ServiceConfig ServiceConfig::from(const KeyValueConfig& kv) {
  ServiceConfig c;
  c.controller = ControllerConfig::from(kv);
  c.window_seconds = kv.get_double("window", c.window_seconds);
  c.rate = kv.get_double("rate", c.rate);
  c.fps_window = kv.get_double("fps_window", c.fps_window);
  c.capacity_seconds = kv.get_double("capacity", c.capacity_seconds);
  const long long q = kv.get_int("queue_capacity", static_cast<long long>(c.queue_capacity));
  if (q <= 0) throw ParameterError("service: queue_capacity must be positive");
  c.queue_capacity = static_cast<std::size_t>(q);
  c.model_path = kv.get_string("model", c.model_path);
  c.listen = kv.get_string("listen", c.listen);
  c.log_path = kv.get_string("log", c.log_path);
  kv.reject_unused();
  c.validate();
  return c;
}

// ---------------------------------------------------------------------------
// wire format

namespace wire {

namespace {

double number(const json& j, const char* key) {
  const auto it = j.find(key);
  if (it == j.end() || !it->is_number()) {
    throw ValidationError(std::string("field '") + key + "' must be a number");
  }
  return it->get<double>();
}

template <std::size_t N>
std::array<double, N> numbers(const json& j, const char* key) {
  const auto it = j.find(key);
  if (it == j.end() || !it->is_array() || it->size() != N) {
    throw ValidationError(std::string("field '") + key + "' must be an array of " +
                          std::to_string(N) + " numbers");
  }
  std::array<double, N> out{};
  for (std::size_t i = 0; i < N; ++i) {
    if (!(*it)[i].is_number()) {
      throw ValidationError(std::string("field '") + key + "' must contain numbers");
    }
    out[i] = (*it)[i].get<double>();
  }
  return out;
}

}  // namespace

Inbound parse_line(const std::string& line) {
  json j;
  try {
    j = json::parse(line);
  } catch (const json::parse_error& e) {
    return Invalid{"parse_error", std::string("malformed JSON: ") + e.what()};
  }
  if (!j.is_object()) return Invalid{"parse_error", "record must be a JSON object"};
  const auto type = j.find("type");
  if (type == j.end() || !type->is_string()) {
    return Invalid{"bad_record", "missing string field 'type'"};
  }
  const std::string kind = type->get<std::string>();
  try {
    if (kind == "head") {
      const auto pos = numbers<3>(j, "pos");
      const auto q = numbers<4>(j, "quat");
      return Head{{number(j, "t"), {pos[0], pos[1], pos[2]}, {q[0], q[1], q[2], q[3]}}};
    }
    if (kind == "frame") return Frame{{number(j, "t"), number(j, "dt_ms")}};
    if (kind == "hello") {
      const double v = number(j, "version");
      if (v != std::floor(v)) throw ValidationError("field 'version' must be an integer");
      return Hello{static_cast<int>(v)};
    }
    if (kind == "vrsq") {
      const auto items = numbers<9>(j, "items");
      Vrsq msg;
      for (std::size_t i = 0; i < 9; ++i) {
        if (items[i] != std::floor(items[i])) throw ValidationError("VRSQ items must be integers");
        msg.response.items[i] = static_cast<int>(items[i]);
      }
      score(msg.response);
      return msg;
    }
  } catch (const Error& e) {
    return Invalid{"bad_record", kind + ": " + e.what()};
  }
  return Invalid{"unknown_type", "unknown record type '" + kind + "'"};
}

std::string ack(const ServiceConfig& c) {
  json cfg = {{"score_threshold", c.controller.score_threshold},
              {"fps_threshold", c.controller.fps_threshold},
              {"ffr_max", c.controller.ffr_max},
              {"fov_max", c.controller.fov_max},
              {"fov_min", c.controller.fov_min},
              {"fov_step", c.controller.fov_step},
              {"eval_period", c.controller.eval_period},
              {"hysteresis", c.controller.hysteresis},
              {"relax_dwell", c.controller.relax_dwell},
              {"window", c.window_seconds},
              {"rate", c.rate}};
  return json{{"type", "ack"}, {"version", kProtocolVersion}, {"config", cfg}}.dump();
}

std::string score(double t, double value) {
  return json{{"type", "score"}, {"t", t}, {"value", value}}.dump();
}

std::string adjust(double t, int ffr, double fov, const std::string& reason) {
  return json{{"type", "adjust"}, {"t", t}, {"ffr", ffr}, {"fov", fov}, {"reason", reason}}.dump();
}

std::string error(const std::string& code, const std::string& message) {
  return json{{"type", "error"}, {"code", code}, {"message", message}}.dump(
      -1, ' ', false, json::error_handler_t::replace);
}

std::string head(const HeadSample& s) {
  return json{{"type", "head"},
              {"t", s.t},
              {"pos", {s.pos.x, s.pos.y, s.pos.z}},
              {"quat", {s.quat.w, s.quat.x, s.quat.y, s.quat.z}}}
      .dump();
}

std::string frame(const FrameTiming& f) {
  return json{{"type", "frame"}, {"t", f.t}, {"dt_ms", f.dt_ms}}.dump();
}

std::string hello(int version) { return json{{"type", "hello"}, {"version", version}}.dump(); }

}  // namespace wire

double SessionStats::latency_percentile(double p) const {
  if (latency_us.empty()) return 0.0;
  std::vector<double> sorted = latency_us;
  std::sort(sorted.begin(), sorted.end());
  const double rank = std::ceil(p / 100.0 * static_cast<double>(sorted.size()));
  const auto idx = static_cast<std::size_t>(std::clamp(rank, 1.0, static_cast<double>(sorted.size())));
  return sorted[idx - 1];
}

std::string stats_record(const SessionStats& s) {
  const double max = s.latency_us.empty()
                         ? 0.0
                         : *std::max_element(s.latency_us.begin(), s.latency_us.end());
  return json{{"type", "stats"},
              {"lines", s.lines},
              {"head", s.head_samples},
              {"frames", s.frames},
              {"labels", s.labels},
              {"evaluations", s.evaluations},
              {"scores", s.scores},
              {"adjusts", s.adjusts},
              {"errors", s.errors},
              {"drops", s.drops},
              {"latency_p50_us", s.latency_percentile(50.0)},
              {"latency_p99_us", s.latency_percentile(99.0)},
              {"latency_max_us", max}}
      .dump();
}

// ---------------------------------------------------------------------------
// session

Session::Session(std::shared_ptr<const ForestModel> model, ServiceConfig config, Sink sink)
    : model_(std::move(model)),
      config_(std::move(config)),
      sink_(std::move(sink)),
      queue_(config_.queue_capacity),
      stream_(config_.capacity_seconds, config_.rate),
      controller_(config_.controller) {
  config_.validate();
  if (!model_) throw ParameterError("service needs a loaded model");
  if (model_->n_features != kFeatureCount) {
    throw ParameterError("model expects " + std::to_string(model_->n_features) +
                         " features; the service computes " + std::to_string(kFeatureCount));
  }
}

void Session::ingest(const std::string& line) {
  lines_.fetch_add(1, std::memory_order_relaxed);
  std::string text = line;
  if (!text.empty() && text.back() == '\r') text.pop_back();
  if (text.empty()) {
    queue_.push(wire::Invalid{"parse_error", "empty line"});
    return;
  }
  queue_.push(wire::parse_line(text));
}

void Session::close_input() { queue_.close(); }

void Session::run() {
  while (auto msg = queue_.pop()) handle(*msg);
  stats_.lines = lines_.load();
  stats_.drops = queue_.dropped();
  emit(stats_record(stats_));
}

void Session::emit(const std::string& line) { sink_(line); }

void Session::handle(const wire::Inbound& msg) {
  std::visit(
      [&](const auto& m) {
        using T = std::decay_t<decltype(m)>;
        if constexpr (std::is_same_v<T, wire::Hello>) {
          if (m.version != kProtocolVersion) {
            ++stats_.errors;
            emit(wire::error("version", "unsupported protocol version " +
                                            std::to_string(m.version) + "; server speaks " +
                                            std::to_string(kProtocolVersion)));
          } else {
            emit(wire::ack(config_));
          }
        } else if constexpr (std::is_same_v<T, wire::Head>) {
          on_head(m.sample);
        } else if constexpr (std::is_same_v<T, wire::Frame>) {
          if (auto r = stream_.push_frame(m.frame)) {
            ++stats_.frames;
          } else {
            ++stats_.errors;
            emit(wire::error("rejected", "frame: " + r.reason));
          }
        } else if constexpr (std::is_same_v<T, wire::Vrsq>) {
          label_ = score(m.response);
          ++stats_.labels;
        } else {
          ++stats_.errors;
          emit(wire::error(m.code, m.message));
        }
      },
      msg);
}

void Session::on_head(const HeadSample& s) {
  const PushResult r = stream_.push_head(s);
  if (!r) {
    ++stats_.errors;
    emit(wire::error("rejected", "head: " + r.reason));
    return;
  }
  ++stats_.head_samples;
  if (!next_eval_) next_eval_ = s.t + config_.window_seconds;
  if (s.t + 1e-9 < *next_eval_) return;
  while (*next_eval_ <= s.t + 1e-9) *next_eval_ += config_.controller.eval_period;
  evaluate(s.t);
}

void Session::evaluate(double t) {
  const auto start = std::chrono::steady_clock::now();
  TelemetryWindow window;
  try {
    window = stream_.window(config_.window_seconds);
  } catch (const InsufficientData&) {
    return;  // gap in telemetry; try again next period
  }
  const double value = predict(*model_, featurize(window, config_.rate));
  double fps = config_.controller.fps_threshold;
  if (stream_.frame_count() > 0) fps = stream_.current_fps(config_.fps_window);
  const ComfortParams before = controller_.params();
  const DecisionRecord& rec = controller_.step(t, value, fps);
  ++stats_.evaluations;
  emit(wire::score(t, value));
  ++stats_.scores;
  if (!(controller_.params() == before)) {
    emit(wire::adjust(t, rec.ffr, rec.fov, rec.reason));
    ++stats_.adjusts;
  }
  const auto end = std::chrono::steady_clock::now();
  stats_.latency_us.push_back(std::chrono::duration<double, std::micro>(end - start).count());
}

namespace {

void write_session_log_file(const std::string& path, const Controller& controller) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write session log '" + path + "'");
  write_session_log(out, controller.history());
}

}  // namespace

SessionStats serve_stream(std::shared_ptr<const ForestModel> model, const ServiceConfig& config,
                          std::istream& in, std::ostream& out) {
  Session session(std::move(model), config, [&out](const std::string& line) {
    out << line << '\n';
    out.flush();
  });
  std::thread evaluator([&] { session.run(); });
  std::string line;
  while (std::getline(in, line)) session.ingest(line);
  session.close_input();
  evaluator.join();
  if (!config.log_path.empty()) write_session_log_file(config.log_path, session.controller());
  return session.stats();
}

// ---------------------------------------------------------------------------
// sockets

namespace {

void write_all(int fd, const std::string& data) {
  std::size_t sent = 0;
  while (sent < data.size()) {
    const ssize_t n = ::send(fd, data.data() + sent, data.size() - sent, MSG_NOSIGNAL);
    if (n < 0) {
      if (errno == EINTR) continue;
      throw Error(std::string("socket write failed: ") + std::strerror(errno));
    }
    sent += static_cast<std::size_t>(n);
  }
}

sockaddr_in make_address(const std::string& host, std::uint16_t port) {
  sockaddr_in addr{};
  addr.sin_family = AF_INET;
  addr.sin_port = htons(port);
  const std::string h = host == "localhost" ? "127.0.0.1" : host;
  if (::inet_pton(AF_INET, h.c_str(), &addr.sin_addr) != 1) {
    throw ParameterError("invalid IPv4 address '" + host + "'");
  }
  return addr;
}

void set_nodelay(int fd) {
  int one = 1;
  ::setsockopt(fd, IPPROTO_TCP, TCP_NODELAY, &one, sizeof(one));
}

}  // namespace

std::pair<std::string, std::uint16_t> parse_endpoint(const std::string& endpoint) {
  std::string host = "127.0.0.1";
  std::string port = endpoint;
  if (const auto colon = endpoint.rfind(':'); colon != std::string::npos) {
    host = endpoint.substr(0, colon);
    port = endpoint.substr(colon + 1);
  }
  const long long p = csv::parse_int(port, "port");
  if (p < 0 || p > 65535) throw ParameterError("port out of range: " + port);
  return {host, static_cast<std::uint16_t>(p)};
}

TcpServer::TcpServer(std::shared_ptr<const ForestModel> model, ServiceConfig config)
    : model_(std::move(model)), config_(std::move(config)) {
  config_.validate();
  if (!model_) throw ParameterError("service needs a loaded model");
}

TcpServer::~TcpServer() { stop(); }

void TcpServer::start(const std::string& host, std::uint16_t port) {
  listen_fd_ = ::socket(AF_INET, SOCK_STREAM, 0);
  if (listen_fd_ < 0) throw Error(std::string("socket: ") + std::strerror(errno));
  int one = 1;
  ::setsockopt(listen_fd_, SOL_SOCKET, SO_REUSEADDR, &one, sizeof(one));
  sockaddr_in addr = make_address(host, port);
  if (::bind(listen_fd_, reinterpret_cast<sockaddr*>(&addr), sizeof(addr)) != 0 ||
      ::listen(listen_fd_, 16) != 0) {
    const std::string reason = std::strerror(errno);
    ::close(listen_fd_);
    listen_fd_ = -1;
    throw Error("cannot listen on " + host + ":" + std::to_string(port) + ": " + reason);
  }
  socklen_t len = sizeof(addr);
  ::getsockname(listen_fd_, reinterpret_cast<sockaddr*>(&addr), &len);
  port_ = ntohs(addr.sin_port);
  running_ = true;
  acceptor_ = std::thread([this] { accept_loop(); });
}

void TcpServer::accept_loop() {
  std::size_t index = 0;
  while (running_) {
    const int fd = ::accept(listen_fd_, nullptr, nullptr);
    if (fd < 0) {
      if (errno == EINTR) continue;
      break;
    }
    set_nodelay(fd);
    std::lock_guard lock(clients_mutex_);
    if (!running_) {
      ::close(fd);
      break;
    }
    client_fds_.push_back(fd);
    client_threads_.emplace_back([this, fd, index] { handle_client(fd, index); });
    ++index;
  }
}

void TcpServer::handle_client(int fd, std::size_t index) {
  try {
    Session session(model_, config_, [fd](const std::string& line) {
      try {
        write_all(fd, line + "\n");
      } catch (const Error&) {
        // client went away; keep draining so the session shuts down cleanly
      }
    });
    std::thread evaluator([&] { session.run(); });
    std::string buffer;
    char chunk[4096];
    for (;;) {
      const ssize_t n = ::recv(fd, chunk, sizeof(chunk), 0);
      if (n < 0 && errno == EINTR) continue;
      if (n <= 0) break;
      buffer.append(chunk, static_cast<std::size_t>(n));
      std::size_t start = 0;
      for (auto nl = buffer.find('\n'); nl != std::string::npos; nl = buffer.find('\n', start)) {
        session.ingest(buffer.substr(start, nl - start));
        start = nl + 1;
      }
      buffer.erase(0, start);
    }
    if (!buffer.empty()) session.ingest(buffer);
    session.close_input();
    evaluator.join();
    if (!config_.log_path.empty()) {
      write_session_log_file(config_.log_path + "." + std::to_string(index) + ".csv",
                             session.controller());
    }
  } catch (const std::exception&) {
    // session setup failures close the connection
  }
  ::shutdown(fd, SHUT_WR);
  ++served_;
}

void TcpServer::stop() {
  if (!running_.exchange(false)) return;
  ::shutdown(listen_fd_, SHUT_RDWR);
  ::close(listen_fd_);
  if (acceptor_.joinable()) acceptor_.join();
  std::vector<std::thread> threads;
  {
    std::lock_guard lock(clients_mutex_);
    for (int fd : client_fds_) ::shutdown(fd, SHUT_RD);
    threads.swap(client_threads_);
  }
  for (auto& t : threads) t.join();
  std::lock_guard lock(clients_mutex_);
  for (int fd : client_fds_) ::close(fd);
  client_fds_.clear();
}

LineClient::LineClient(const std::string& host, std::uint16_t port) {
  fd_ = ::socket(AF_INET, SOCK_STREAM, 0);
  if (fd_ < 0) throw Error(std::string("socket: ") + std::strerror(errno));
  sockaddr_in addr = make_address(host, port);
  if (::connect(fd_, reinterpret_cast<sockaddr*>(&addr), sizeof(addr)) != 0) {
    const std::string reason = std::strerror(errno);
    ::close(fd_);
    fd_ = -1;
    throw Error("cannot connect to " + host + ":" + std::to_string(port) + ": " + reason);
  }
  set_nodelay(fd_);
}

LineClient::~LineClient() {
  if (fd_ >= 0) ::close(fd_);
}

void LineClient::send_line(const std::string& line) { write_all(fd_, line + "\n"); }

void LineClient::finish_sending() { ::shutdown(fd_, SHUT_WR); }

std::optional<std::string> LineClient::read_line() {
  for (;;) {
    if (const auto nl = buffer_.find('\n'); nl != std::string::npos) {
      std::string line = buffer_.substr(0, nl);
      buffer_.erase(0, nl + 1);
      return line;
    }
    char chunk[4096];
    const ssize_t n = ::recv(fd_, chunk, sizeof(chunk), 0);
    if (n < 0 && errno == EINTR) continue;
    if (n <= 0) {
      if (buffer_.empty()) return std::nullopt;
      std::string rest = std::move(buffer_);
      buffer_.clear();
      return rest;
    }
    buffer_.append(chunk, static_cast<std::size_t>(n));
  }
}

}  // namespace cybersick
