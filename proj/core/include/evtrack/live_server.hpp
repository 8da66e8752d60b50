#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>

#include <nlohmann/json.hpp>

#include "evtrack/experiment.hpp"

namespace evtrack {

struct LiveOptions {
  std::string address = "127.0.0.1";
  std::uint16_t port = 8765;     ///< 0 picks a free port
  double telemetry_hz = 60.0;
  Micros event_trail = 30000;    ///< events shown per frame: this far back
  std::size_t max_points = 2000; ///< decimation ceiling for the event list
  double time_scale = 1.0;       ///< simulated seconds per wall second
  std::optional<double> duration;  ///< stop after this much simulated time [s]
};

struct LiveStats {
  std::uint64_t ticks = 0;
  std::uint64_t frames_published = 0;  ///< frames handed to the transport
  std::uint64_t frames_dropped = 0;    ///< transport queue was full
  std::uint64_t steer_accepted = 0;
  std::uint64_t malformed = 0;         ///< ignored client messages
  std::uint64_t clients = 0;           ///< currently connected
  double disk_angle_deg = 0.0;         ///< latest steering target
  std::string fault;                   ///< set when the loop stopped on a fault
};

/// Outcome of decoding one client line.
struct ClientMessage {
  enum class Kind { steer, malformed } kind = Kind::malformed;
  double angle_deg = 0.0;
  std::string error;
};

/// Decodes a newline-free client line. Only {"kind":"steer","angle":deg}
/// with a finite angle is accepted; unknown extra fields are ignored.
ClientMessage parse_client_message(std::string_view line);

/// Telemetry frame for one tick. alpha_est is the estimated roll in the
/// world frame (disk angle plus estimated relative roll), null while the
/// estimator has no state. The event list is thinned by an even stride to
/// at most max_points entries of [x, y, polarity].
nlohmann::json telemetry_frame(const TickSnapshot& snapshot, std::span<const Event> events,
                               std::size_t max_points);

/// Real-time closed loop behind a websocket endpoint. Text frames carry
/// newline-delimited JSON in both directions: the server sends one `config`
/// message on connect and then `telemetry` messages; clients send `steer`
/// messages that move the disk.
///
/// Two threads: the loop, paced against the wall clock, and the transport.
/// Frames travel loop -> transport through a bounded single-producer queue
/// (dropped when full, never blocking the loop); steering travels back
/// through the manual-reference mailbox.
class LiveServer {
 public:
  /// Requires the manual scenario (ConfigError otherwise).
  LiveServer(const ExperimentConfig& config, LiveOptions options = {});
  ~LiveServer();
  LiveServer(const LiveServer&) = delete;
  LiveServer& operator=(const LiveServer&) = delete;

  /// Binds and starts both threads; returns the bound port. Throws
  /// FaultError when the port cannot be bound.
  std::uint16_t start();
  /// Stops both threads; safe to call twice.
  void stop();
  /// Blocks until stop() or the configured duration ends.
  void wait();
  bool running() const;

  LiveStats stats() const;

  struct Impl;

 private:
  std::unique_ptr<Impl> impl_;
};

}  // namespace evtrack
