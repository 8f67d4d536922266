// Copyright 2026 The edge-iis Authors
// SPDX-License-Identifier: Apache-2.0

/// @file telemetry.hpp
/// @brief Topic grammar, payload schemas and wire encoding.
///
/// Topics:
///   dev/<device_id>/svc/<service_id>/measurement
///   dev/<device_id>/svc/<service_id>/cmd
///   dev/<device_id>/svc/<service_id>/event
///   dev/<device_id>/energy
///
/// A frame on the wire is the UTF-8 JSON object
/// {"topic": ..., "publish_time_s": ..., "payload": {...}}. Stream transports
/// prefix each frame with its length as a 4-byte big-endian integer.

#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "iis/energy.hpp"
#include "iis/model.hpp"

namespace iis
{

inline constexpr std::size_t kMaxPayloadBytes = 4096;

enum class TopicKind
{
  measurement,
  cmd,
  event,
  energy
};

struct Topic
{
  TopicKind kind = TopicKind::measurement;
  std::string device_id;
  std::string service_id;  ///< empty for energy topics

  std::string str() const;

  static Topic measurement(std::string device, std::string service);
  static Topic cmd(std::string device, std::string service);
  static Topic event(std::string device, std::string service);
  static Topic energy(std::string device);

  friend bool operator==(const Topic&, const Topic&) = default;
};

class ProtocolError : public std::runtime_error
{
public:
  using std::runtime_error::runtime_error;
};

/// Throws ProtocolError when `topic` is not in the grammar.
Topic parse_topic(std::string_view topic);

/// MQTT-style filter match: `+` matches one level, a trailing `#` any suffix.
bool topic_matches(std::string_view filter, std::string_view topic);

struct BusMessage
{
  std::string topic;
  nlohmann::json payload;
  SimTime publish_time{0};

  friend bool operator==(const BusMessage&, const BusMessage&) = default;
};

struct CommandPayload
{
  LifecycleAction action = LifecycleAction::stop;
  std::string command_id;
  std::optional<ServiceDescriptor> descriptor;

  friend bool operator==(const CommandPayload&, const CommandPayload&) = default;
};

/// Device's answer to one command, carried on the service's event topic.
struct AckPayload
{
  std::string command_id;
  LifecycleAction action = LifecycleAction::stop;
  bool ok = true;
  std::optional<LifecycleState> state;
  std::uint32_t code_version = 0;
  std::string error;

  friend bool operator==(const AckPayload&, const AckPayload&) = default;
};

struct EnergyWindowPayload
{
  SimTime window_start{0};
  SimTime window_end{0};
  Charge charge;
  std::vector<EnergyEvent> events;

  friend bool operator==(const EnergyWindowPayload&, const EnergyWindowPayload&) = default;
};

BusMessage make_message(const Measurement& m, SimTime publish_time);
BusMessage make_message(const std::string& device_id, const std::string& service_id, const CommandPayload& c,
                        SimTime publish_time);
BusMessage make_message(const std::string& device_id, const std::string& service_id, const AckPayload& a,
                        SimTime publish_time);
BusMessage make_message(const std::string& device_id, const EnergyWindowPayload& e, SimTime publish_time);

/// Typed views of a message whose topic/payload already passed validation.
Measurement measurement_from(const BusMessage& msg);
CommandPayload command_from(const BusMessage& msg);
AckPayload ack_from(const BusMessage& msg);
EnergyWindowPayload energy_from(const BusMessage& msg);

/// Schema check of `payload` against the topic suffix; throws ProtocolError.
void validate_message(const BusMessage& msg);

std::string encode(const BusMessage& msg);
BusMessage decode(std::string_view bytes);

/// 4-byte big-endian length prefix + body.
std::string frame(std::string_view body);

/// Incremental reassembly of length-prefixed frames from a byte stream.
class FrameDecoder
{
public:
  explicit FrameDecoder(std::size_t max_frame = 64 * 1024) : max_frame_(max_frame) {}

  /// Appends bytes and returns every frame body completed by them.
  std::vector<std::string> feed(std::string_view bytes);
  std::size_t buffered() const { return buffer_.size(); }

private:
  std::size_t max_frame_;
  std::string buffer_;
};

}  // namespace iis
