#include "evtrack/live_server.hpp"

#include <atomic>
#include <chrono>
#include <cmath>
#include <deque>
#include <limits>
#include <mutex>
#include <thread>

#include <boost/asio.hpp>
#include <boost/beast/core.hpp>
#include <boost/beast/websocket.hpp>
#include <boost/lockfree/spsc_queue.hpp>

#include "evtrack/config.hpp"
#include "evtrack/error.hpp"

namespace evtrack {

namespace asio = boost::asio;
namespace beast = boost::beast;
namespace websocket = beast::websocket;
using tcp = asio::ip::tcp;

ClientMessage parse_client_message(std::string_view line) {
  ClientMessage m;
  const nlohmann::json j = nlohmann::json::parse(line, nullptr, false);
  if (j.is_discarded()) {
    m.error = "not JSON";
    return m;
  }
  if (!j.is_object()) {
    m.error = "not an object";
    return m;
  }
  const auto kind = j.find("kind");
  if (kind == j.end() || !kind->is_string() || kind->get<std::string>() != "steer") {
    m.error = "kind must be \"steer\"";
    return m;
  }
  const auto angle = j.find("angle");
  if (angle == j.end() || !angle->is_number() || !std::isfinite(angle->get<double>())) {
    m.error = "angle must be a finite number";
    return m;
  }
  m.kind = ClientMessage::Kind::steer;
  m.angle_deg = angle->get<double>();
  return m;
}

nlohmann::json telemetry_frame(const TickSnapshot& s, std::span<const Event> events, std::size_t max_points) {
  auto opt = [&](double v) { return std::isfinite(v) ? nlohmann::json(v) : nlohmann::json(nullptr); };
  const double disk = rad2deg(s.world.disk_angle);
  nlohmann::json pts = nlohmann::json::array();
  if (max_points > 0 && !events.empty()) {
    const std::size_t stride = (events.size() + max_points - 1) / max_points;
    for (std::size_t i = 0; i < events.size(); i += stride) {
      pts.push_back({events[i].x, events[i].y, events[i].polarity});
    }
  }
  return {
      {"kind", "telemetry"},
      {"t", s.t},
      {"disk_angle", disk},
      {"alpha_true", rad2deg(s.world.alpha)},
      {"alpha_est", s.estimator_initialized ? opt(disk + s.alpha_est_deg) : nlohmann::json(nullptr)},
      {"alpha_dot_est", s.estimator_initialized ? opt(s.alpha_dot_est_deg_s) : nlohmann::json(nullptr)},
      {"peak_count", s.peak_count},
      {"measurement", s.measurement},
      {"setpoint", s.setpoint_deg},
      {"events", std::move(pts)},
      {"duty1", s.duty1},
      {"duty2", s.duty2},
  };
}

namespace {

class Session;

}  // namespace

struct LiveServer::Impl {
  Impl(const ExperimentConfig& c, LiveOptions o)
      : config(c), options(std::move(o)), manual(c.initial_disk), loop(c, &manual, false), frames(256) {}

  ExperimentConfig config;
  LiveOptions options;
  ManualChannel manual;
  ClosedLoop loop;

  asio::io_context ioc;
  std::optional<tcp::acceptor> acceptor;
  std::optional<asio::steady_timer> pump;
  std::vector<std::weak_ptr<Session>> sessions;  // transport thread only
  std::string hello;

  boost::lockfree::spsc_queue<std::string> frames;
  std::thread loop_thread;
  std::thread io_thread;
  std::atomic<bool> stopping{false};
  std::atomic<bool> loop_done{false};

  std::atomic<std::uint64_t> ticks{0}, published{0}, dropped{0}, steer{0}, malformed{0}, clients{0};
  mutable std::mutex fault_mutex;
  std::string fault;

  void on_client_line(std::string_view line) {
    const ClientMessage m = parse_client_message(line);
    if (m.kind == ClientMessage::Kind::steer) {
      manual.push(deg2rad(m.angle_deg));
      ++steer;
    } else {
      ++malformed;
    }
  }

  void run_loop();
  void do_accept();
  void schedule_pump();
  void broadcast(const std::shared_ptr<const std::string>& msg);
};

namespace {

class Session : public std::enable_shared_from_this<Session> {
 public:
  Session(tcp::socket socket, LiveServer::Impl& server) : ws_(std::move(socket)), server_(server) {}

  void run() {
    ws_.set_option(websocket::stream_base::timeout::suggested(beast::role_type::server));
    ws_.async_accept([self = shared_from_this()](beast::error_code ec) { self->on_accept(ec); });
  }

  void send(std::shared_ptr<const std::string> msg) {
    if (!open_) return;
    if (outbox_.size() >= kMaxQueued) return;  // slow client, drop the frame
    outbox_.push_back(std::move(msg));
    if (outbox_.size() == 1) write_next();
  }

 private:
  static constexpr std::size_t kMaxQueued = 32;

  void on_accept(beast::error_code ec) {
    if (ec) return;
    open_ = true;
    ++server_.clients;
    ws_.text(true);
    send(std::make_shared<const std::string>(server_.hello));
    read_next();
  }

  void read_next() {
    ws_.async_read(buffer_, [self = shared_from_this()](beast::error_code ec, std::size_t) { self->on_read(ec); });
  }

  void on_read(beast::error_code ec) {
    if (ec) {
      close();
      return;
    }
    const std::string text = beast::buffers_to_string(buffer_.data());
    buffer_.consume(buffer_.size());
    std::size_t start = 0;
    while (start <= text.size()) {
      auto end = text.find('\n', start);
      if (end == std::string::npos) end = text.size();
      std::string_view line(text.data() + start, end - start);
      if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
      if (!line.empty()) server_.on_client_line(line);
      start = end + 1;
    }
    read_next();
  }

  void write_next() {
    ws_.async_write(asio::buffer(*outbox_.front()),
                    [self = shared_from_this()](beast::error_code ec, std::size_t) { self->on_write(ec); });
  }

  void on_write(beast::error_code ec) {
    if (ec) {
      close();
      return;
    }
    outbox_.pop_front();
    if (!outbox_.empty()) write_next();
  }

  void close() {
    if (!open_) return;
    open_ = false;
    outbox_.clear();
    --server_.clients;
  }

  websocket::stream<beast::tcp_stream> ws_;
  LiveServer::Impl& server_;
  beast::flat_buffer buffer_;
  std::deque<std::shared_ptr<const std::string>> outbox_;
  bool open_ = false;
};

}  // namespace

void LiveServer::Impl::run_loop() {
  using clock = std::chrono::steady_clock;
  const Micros tick = config.tick;
  const auto frame_period = static_cast<Micros>(std::llround(1e6 / options.telemetry_hz));
  const Micros end = options.duration ? static_cast<Micros>(std::llround(*options.duration * 1e6))
                                       : std::numeric_limits<Micros>::max();
  std::deque<Event> trail;
  std::vector<Event> shown;
  Micros next_frame = 0;
  auto origin = clock::now();
  Micros origin_sim = 0;

  try {
    while (!stopping.load()) {
      const double wall_us = std::chrono::duration<double, std::micro>(clock::now() - origin).count();
      Micros target = origin_sim + static_cast<Micros>(wall_us * options.time_scale);
      if (target - loop.now() > 200000) {
        // Far behind the wall clock: resynchronise.
        origin = clock::now();
        origin_sim = loop.now();
        target = origin_sim;
      }
      while (loop.now() + tick <= target && !stopping.load()) {
        loop.advance();
        ++ticks;
        for (const Event& e : loop.released_events()) trail.push_back(e);
        const Micros now = loop.snapshot().t;
        while (!trail.empty() && trail.front().t < now - options.event_trail) trail.pop_front();
        if (now >= next_frame) {
          shown.assign(trail.begin(), trail.end());
          std::string msg = telemetry_frame(loop.snapshot(), shown, options.max_points).dump();
          msg += '\n';
          if (frames.push(std::move(msg))) ++published;
          else ++dropped;
          next_frame = now + frame_period;
        }
        if (loop.now() >= end) {
          stopping = true;
          break;
        }
      }
      std::this_thread::sleep_for(std::chrono::microseconds(500));
    }
  } catch (const std::exception& e) {
    std::lock_guard lock(fault_mutex);
    fault = e.what();
  }
  loop_done = true;
}

void LiveServer::Impl::do_accept() {
  acceptor->async_accept([this](beast::error_code ec, tcp::socket socket) {
    if (ec) return;  // acceptor closed
    auto session = std::make_shared<Session>(std::move(socket), *this);
    sessions.push_back(session);
    session->run();
    do_accept();
  });
}

void LiveServer::Impl::broadcast(const std::shared_ptr<const std::string>& msg) {
  std::erase_if(sessions, [](const std::weak_ptr<Session>& w) { return w.expired(); });
  for (auto& w : sessions) {
    if (auto s = w.lock()) s->send(msg);
  }
}

void LiveServer::Impl::schedule_pump() {
  pump->expires_after(std::chrono::milliseconds(4));
  pump->async_wait([this](beast::error_code ec) {
    if (ec) return;
    std::string msg;
    while (frames.pop(msg)) broadcast(std::make_shared<const std::string>(std::move(msg)));
    if (loop_done.load()) {
      beast::error_code ignored;
      acceptor->close(ignored);
      ioc.stop();
      return;
    }
    schedule_pump();
  });
}

LiveServer::LiveServer(const ExperimentConfig& config, LiveOptions options) {
  if (config.scenario != Scenario::manual) throw ConfigError("serve requires the manual scenario");
  if (!(options.telemetry_hz > 0.0)) throw ConfigError("telemetry rate must be > 0");
  if (!(options.time_scale > 0.0)) throw ConfigError("time scale must be > 0");
  if (options.event_trail < 0) throw ConfigError("event trail must be >= 0");
  impl_ = std::make_unique<Impl>(config, std::move(options));
  const nlohmann::json hello = {
      {"kind", "config"},
      {"width", config.camera.width},
      {"height", config.camera.height},
      {"cx", config.camera.cx},
      {"cy", config.camera.cy},
      {"disk_radius", config.camera.disk_radius},
      {"min_line_count", config.estimator.hough.min_line_count},
      {"telemetry_hz", impl_->options.telemetry_hz},
      {"experiment", to_json(config)},
  };
  impl_->hello = hello.dump() + "\n";
}

LiveServer::~LiveServer() { stop(); }

std::uint16_t LiveServer::start() {
  Impl& s = *impl_;
  if (s.io_thread.joinable()) throw ContractViolation("live server already started");
  try {
    const tcp::endpoint ep(asio::ip::make_address(s.options.address), s.options.port);
    s.acceptor.emplace(s.ioc);
    s.acceptor->open(ep.protocol());
    s.acceptor->set_option(asio::socket_base::reuse_address(true));
    s.acceptor->bind(ep);
    s.acceptor->listen();
  } catch (const boost::system::system_error& e) {
    throw FaultError("live server: cannot listen on " + s.options.address + ":" +
                     std::to_string(s.options.port) + ": " + e.code().message());
  }
  const std::uint16_t port = s.acceptor->local_endpoint().port();
  s.pump.emplace(s.ioc);
  s.do_accept();
  s.schedule_pump();
  s.loop_thread = std::thread([&s] { s.run_loop(); });
  s.io_thread = std::thread([&s] { s.ioc.run(); });
  return port;
}

void LiveServer::stop() {
  if (!impl_) return;
  impl_->stopping = true;
  if (impl_->loop_thread.joinable()) impl_->loop_thread.join();
  impl_->loop_done = true;
  if (impl_->io_thread.joinable()) {
    asio::post(impl_->ioc, [s = impl_.get()] {
      beast::error_code ignored;
      s->acceptor->close(ignored);
      s->ioc.stop();
    });
    impl_->io_thread.join();
  }
}

void LiveServer::wait() {
  while (!impl_->loop_done.load()) std::this_thread::sleep_for(std::chrono::milliseconds(20));
  stop();
}

bool LiveServer::running() const { return impl_->io_thread.joinable() && !impl_->loop_done.load(); }

LiveStats LiveServer::stats() const {
  const Impl& s = *impl_;
  LiveStats st;
  st.ticks = s.ticks;
  st.frames_published = s.published;
  st.frames_dropped = s.dropped;
  st.steer_accepted = s.steer;
  st.malformed = s.malformed;
  st.clients = s.clients;
  st.disk_angle_deg = rad2deg(s.manual.latest());
  std::lock_guard lock(s.fault_mutex);
  st.fault = s.fault;
  return st;
}

}  // namespace evtrack
