#include <chrono>
#include <thread>

#include <boost/asio.hpp>
#include <boost/beast/core.hpp>
#include <boost/beast/websocket.hpp>
#include <gtest/gtest.h>

#include "evtrack/error.hpp"
#include "evtrack/live_server.hpp"

using namespace evtrack;
namespace beast = boost::beast;
namespace websocket = beast::websocket;
using tcp = boost::asio::ip::tcp;

namespace {

ExperimentConfig manual_config() {
  ExperimentConfig c;
  c.scenario = Scenario::manual;
  c.record_timing = false;
  return c;
}

/// Reads frames until one with the given kind turns up.
nlohmann::json read_kind(websocket::stream<tcp::socket>& ws, const std::string& kind) {
  for (int i = 0; i < 500; ++i) {
    beast::flat_buffer buf;
    ws.read(buf);
    std::string text = beast::buffers_to_string(buf.data());
    std::size_t start = 0;
    while (start < text.size()) {
      std::size_t end = text.find('\n', start);
      if (end == std::string::npos) end = text.size();
      const auto j = nlohmann::json::parse(text.substr(start, end - start));
      if (j["kind"] == kind) return j;
      start = end + 1;
    }
  }
  return {};
}

template <typename Pred>
bool eventually(Pred p) {
  for (int i = 0; i < 200; ++i) {
    if (p()) return true;
    std::this_thread::sleep_for(std::chrono::milliseconds(10));
  }
  return false;
}

}  // namespace

TEST(ClientMessage, Parsing) {
  const ClientMessage ok = parse_client_message(R"({"kind":"steer","angle":45.5,"extra":1})");
  EXPECT_EQ(ok.kind, ClientMessage::Kind::steer);
  EXPECT_EQ(ok.angle_deg, 45.5);
  for (const char* bad : {"", "not json", "[]", R"({"kind":"steer"})", R"({"kind":"jump","angle":1})",
                          R"({"kind":"steer","angle":"x"})", R"({"kind":"steer","angle":1e999})"}) {
    const ClientMessage m = parse_client_message(bad);
    EXPECT_EQ(m.kind, ClientMessage::Kind::malformed) << bad;
    EXPECT_FALSE(m.error.empty()) << bad;
  }
}

TEST(TelemetryFrame, FieldsAndDecimation) {
  TickSnapshot s;
  s.t = 5000;
  s.world.disk_angle = deg2rad(30.0);
  s.world.alpha = deg2rad(31.0);
  s.alpha_est_deg = 2.0;
  s.estimator_initialized = true;
  std::vector<Event> ev(1000, Event{1, 2, -1, 4000});
  const auto j = telemetry_frame(s, ev, 100);
  EXPECT_EQ(j["kind"], "telemetry");
  EXPECT_NEAR(j["alpha_est"].get<double>(), 32.0, 1e-12);
  EXPECT_NEAR(j["disk_angle"].get<double>(), 30.0, 1e-12);
  EXPECT_LE(j["events"].size(), 100u);
  EXPECT_EQ(j["events"][0], nlohmann::json::array({1, 2, -1}));
  for (const char* k : {"t", "alpha_true", "alpha_dot_est", "peak_count", "measurement", "setpoint", "duty1", "duty2"})
    EXPECT_TRUE(j.contains(k)) << k;
  s.estimator_initialized = false;
  EXPECT_TRUE(telemetry_frame(s, {}, 10)["alpha_est"].is_null());
}

TEST(LiveServer, RequiresManualScenario) {
  EXPECT_THROW(LiveServer(ExperimentConfig{}), ConfigError);
}

TEST(LiveServer, SessionOverWebsocket) {
  LiveOptions opts;
  opts.port = 0;
  LiveServer server(manual_config(), opts);
  const std::uint16_t port = server.start();
  ASSERT_NE(port, 0);

  boost::asio::io_context ioc;
  websocket::stream<tcp::socket> ws(ioc);
  ws.next_layer().connect({boost::asio::ip::make_address("127.0.0.1"), port});
  ws.handshake("127.0.0.1", "/");

  const auto hello = read_kind(ws, "config");
  EXPECT_EQ(hello["width"], 240);
  EXPECT_TRUE(hello.contains("experiment"));
  const auto frame = read_kind(ws, "telemetry");
  EXPECT_TRUE(frame.contains("alpha_est"));

  ws.write(boost::asio::buffer(std::string(R"({"kind":"steer","angle":20})") + "\n"));
  ws.write(boost::asio::buffer(std::string("garbage\n")));
  EXPECT_TRUE(eventually([&] { return server.stats().steer_accepted == 1 && server.stats().malformed == 1; }));
  EXPECT_TRUE(eventually([&] { return server.stats().disk_angle_deg == 20.0; }));

  // The loop follows the new disk angle.
  bool followed = false;
  for (int i = 0; i < 200 && !followed; ++i) {
    const auto t = read_kind(ws, "telemetry");
    followed = std::abs(t["alpha_true"].get<double>() - 20.0) < 3.0;
  }
  EXPECT_TRUE(followed);

  ws.close(websocket::close_code::normal);
  server.stop();
  EXPECT_FALSE(server.running());
  EXPECT_GT(server.stats().ticks, 0u);
  EXPECT_TRUE(server.stats().fault.empty());
}

TEST(LiveServer, StopsAfterDuration) {
  LiveOptions opts;
  opts.port = 0;
  opts.duration = 0.2;
  opts.time_scale = 4.0;
  LiveServer server(manual_config(), opts);
  server.start();
  server.wait();
  EXPECT_FALSE(server.running());
  EXPECT_GE(server.stats().ticks, 200u);
}

TEST(LiveServer, BusyPortIsAFault) {
  LiveOptions opts;
  opts.port = 0;
  LiveServer first(manual_config(), opts);
  opts.port = first.start();
  LiveServer second(manual_config(), opts);
  EXPECT_THROW(second.start(), FaultError);
}
