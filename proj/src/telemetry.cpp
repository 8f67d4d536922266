// Copyright 2026 The edge-iis Authors
// SPDX-License-Identifier: Apache-2.0

#include "iis/telemetry.hpp"

#include <cmath>
#include <initializer_list>
#include <limits>
#include <set>

#include "iis/scenario.hpp"

namespace iis
{

using nlohmann::json;

namespace
{

bool valid_id(std::string_view id)
{
  return !id.empty() && id.find_first_of("/+#") == std::string_view::npos;
}

std::vector<std::string_view> split_levels(std::string_view s)
{
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    auto pos = s.find('/', start);
    if (pos == std::string_view::npos) {
      out.push_back(s.substr(start));
      return out;
    }
    out.push_back(s.substr(start, pos - start));
    start = pos + 1;
  }
}

void require_object(const json& j, const char* what)
{
  if (!j.is_object()) {
    throw ProtocolError(std::string(what) + ": payload must be a JSON object");
  }
}

void require_keys(const json& j, std::initializer_list<const char*> required, std::initializer_list<const char*> optional,
                  const char* what)
{
  std::set<std::string> allowed(required.begin(), required.end());
  allowed.insert(optional.begin(), optional.end());
  for (const auto& [key, _] : j.items()) {
    if (!allowed.count(key)) {
      throw ProtocolError(std::string(what) + ": unknown field '" + key + "'");
    }
  }
  for (const char* key : required) {
    if (!j.contains(key)) {
      throw ProtocolError(std::string(what) + ": missing field '" + key + "'");
    }
  }
}

double number_field(const json& j, const char* key, const char* what)
{
  const auto& v = j.at(key);
  if (!v.is_number()) {
    throw ProtocolError(std::string(what) + ": '" + key + "' must be a number");
  }
  return v.get<double>();
}

std::uint64_t uint_field(const json& j, const char* key, const char* what)
{
  const auto& v = j.at(key);
  if (!v.is_number_unsigned() && !(v.is_number_integer() && v.get<std::int64_t>() >= 0)) {
    throw ProtocolError(std::string(what) + ": '" + key + "' must be a non-negative integer");
  }
  return v.get<std::uint64_t>();
}

std::int64_t int_field(const json& j, const char* key, const char* what)
{
  const auto& v = j.at(key);
  if (!v.is_number_integer()) {
    throw ProtocolError(std::string(what) + ": '" + key + "' must be an integer");
  }
  return v.get<std::int64_t>();
}

std::string string_field(const json& j, const char* key, const char* what)
{
  const auto& v = j.at(key);
  if (!v.is_string()) {
    throw ProtocolError(std::string(what) + ": '" + key + "' must be a string");
  }
  return v.get<std::string>();
}

SimTime time_field(const json& j, const char* key, const char* what)
{
  const double s = number_field(j, key, what);
  if (!std::isfinite(s) || s < 0.0) {
    throw ProtocolError(std::string(what) + ": '" + key + "' must be a non-negative time");
  }
  return from_seconds(s);
}

LifecycleAction action_field(const json& j, const char* what)
{
  auto s = string_field(j, "action", what);
  auto a = parse_lifecycle_action(s);
  if (!a) {
    throw ProtocolError(std::string(what) + ": unknown action '" + s + "'");
  }
  return *a;
}

ServiceDescriptor descriptor_field(const json& j, const std::string& expected_service)
{
  std::vector<ValidationIssue> issues;
  auto d = parse_service_descriptor(j.at("descriptor"), "descriptor", issues);
  if (!d) {
    throw ProtocolError("cmd: invalid descriptor: " + issues.front().to_string());
  }
  if (d->service_id != expected_service) {
    throw ProtocolError("cmd: descriptor service_id does not match topic");
  }
  return *d;
}

json energy_event_json(const EnergyEvent& e)
{
  json j{{"kind", to_string(e.kind)},
         {"timestamp_s", to_seconds(e.timestamp)},
         {"duration_s", to_seconds(e.duration)},
         {"current_uA", e.current_uA}};
  if (e.attributed_service) {
    j["service_id"] = *e.attributed_service;
  }
  return j;
}

EnergyEvent energy_event_from(const json& j, const std::string& device_id)
{
  const char* what = "energy event";
  if (!j.is_object()) throw ProtocolError("energy: events must be objects");
  require_keys(j, {"kind", "timestamp_s", "duration_s", "current_uA"}, {"service_id"}, what);
  EnergyEvent e;
  e.device_id = device_id;
  auto kind = parse_energy_event_kind(string_field(j, "kind", what));
  if (!kind) throw ProtocolError("energy event: unknown kind");
  e.kind = *kind;
  e.timestamp = time_field(j, "timestamp_s", what);
  e.duration = time_field(j, "duration_s", what);
  e.current_uA = int_field(j, "current_uA", what);
  if (e.current_uA < 0) throw ProtocolError("energy event: negative current");
  if (j.contains("service_id")) e.attributed_service = string_field(j, "service_id", what);
  return e;
}

Measurement measurement_payload(const json& p, const Topic& t)
{
  const char* what = "measurement";
  require_object(p, what);
  require_keys(p, {"timestamp_s", "value", "code_version"}, {}, what);
  Measurement m;
  m.device_id = t.device_id;
  m.service_id = t.service_id;
  m.timestamp = time_field(p, "timestamp_s", what);
  const auto& v = p.at("value");
  if (v.is_null()) {
    m.value = std::numeric_limits<double>::quiet_NaN();  // JSON has no NaN
  } else if (v.is_number()) {
    m.value = v.get<double>();
  } else {
    throw ProtocolError("measurement: 'value' must be a number");
  }
  m.code_version = static_cast<std::uint32_t>(uint_field(p, "code_version", what));
  return m;
}

CommandPayload command_payload(const json& p, const Topic& t)
{
  const char* what = "cmd";
  require_object(p, what);
  require_keys(p, {"action", "command_id"}, {"descriptor"}, what);
  CommandPayload c;
  c.action = action_field(p, what);
  c.command_id = string_field(p, "command_id", what);
  if (c.command_id.empty()) throw ProtocolError("cmd: empty command_id");
  const bool needs = c.action == LifecycleAction::install || c.action == LifecycleAction::update;
  if (needs != p.contains("descriptor")) {
    throw ProtocolError(std::string("cmd: descriptor ") + (needs ? "required" : "not allowed") + " for " +
                        std::string(to_string(c.action)));
  }
  if (needs) c.descriptor = descriptor_field(p, t.service_id);
  return c;
}

AckPayload ack_payload(const json& p)
{
  const char* what = "event";
  require_object(p, what);
  require_keys(p, {"command_id", "action", "ok", "code_version"}, {"state", "error"}, what);
  AckPayload a;
  a.command_id = string_field(p, "command_id", what);
  a.action = action_field(p, what);
  if (!p.at("ok").is_boolean()) throw ProtocolError("event: 'ok' must be a boolean");
  a.ok = p.at("ok").get<bool>();
  a.code_version = static_cast<std::uint32_t>(uint_field(p, "code_version", what));
  if (p.contains("state")) {
    auto s = parse_lifecycle_state(string_field(p, "state", what));
    if (!s) throw ProtocolError("event: unknown lifecycle state");
    a.state = *s;
  }
  if (p.contains("error")) a.error = string_field(p, "error", what);
  return a;
}

EnergyWindowPayload energy_payload(const json& p, const Topic& t)
{
  const char* what = "energy";
  require_object(p, what);
  require_keys(p, {"window_start_s", "window_end_s", "charge_uAms", "events"}, {}, what);
  EnergyWindowPayload e;
  e.window_start = time_field(p, "window_start_s", what);
  e.window_end = time_field(p, "window_end_s", what);
  e.charge = Charge{int_field(p, "charge_uAms", what)};
  if (!p.at("events").is_array()) throw ProtocolError("energy: 'events' must be an array");
  for (const auto& ev : p.at("events")) {
    e.events.push_back(energy_event_from(ev, t.device_id));
  }
  return e;
}

}  // namespace

std::string Topic::str() const
{
  switch (kind) {
    case TopicKind::measurement:
      return "dev/" + device_id + "/svc/" + service_id + "/measurement";
    case TopicKind::cmd:
      return "dev/" + device_id + "/svc/" + service_id + "/cmd";
    case TopicKind::event:
      return "dev/" + device_id + "/svc/" + service_id + "/event";
    case TopicKind::energy:
      return "dev/" + device_id + "/energy";
  }
  return {};
}

Topic Topic::measurement(std::string device, std::string service)
{
  return {TopicKind::measurement, std::move(device), std::move(service)};
}
Topic Topic::cmd(std::string device, std::string service)
{
  return {TopicKind::cmd, std::move(device), std::move(service)};
}
Topic Topic::event(std::string device, std::string service)
{
  return {TopicKind::event, std::move(device), std::move(service)};
}
Topic Topic::energy(std::string device)
{
  return {TopicKind::energy, std::move(device), {}};
}

Topic parse_topic(std::string_view topic)
{
  const auto levels = split_levels(topic);
  auto bad = [&]() { return ProtocolError("malformed topic '" + std::string(topic) + "'"); };
  if (levels.size() < 3 || levels[0] != "dev" || !valid_id(levels[1])) {
    throw bad();
  }
  Topic t;
  t.device_id = std::string(levels[1]);
  if (levels.size() == 3 && levels[2] == "energy") {
    t.kind = TopicKind::energy;
    return t;
  }
  if (levels.size() != 5 || levels[2] != "svc" || !valid_id(levels[3])) {
    throw bad();
  }
  t.service_id = std::string(levels[3]);
  if (levels[4] == "measurement") {
    t.kind = TopicKind::measurement;
  } else if (levels[4] == "cmd") {
    t.kind = TopicKind::cmd;
  } else if (levels[4] == "event") {
    t.kind = TopicKind::event;
  } else {
    throw bad();
  }
  return t;
}

bool topic_matches(std::string_view filter, std::string_view topic)
{
  const auto f = split_levels(filter);
  const auto t = split_levels(topic);
  for (std::size_t i = 0; i < f.size(); ++i) {
    if (f[i] == "#") return true;
    if (i >= t.size()) return false;
    if (f[i] != "+" && f[i] != t[i]) return false;
  }
  return f.size() == t.size();
}

BusMessage make_message(const Measurement& m, SimTime publish_time)
{
  json value = std::isfinite(m.value) ? json(m.value) : json(nullptr);
  return {Topic::measurement(m.device_id, m.service_id).str(),
          json{{"timestamp_s", to_seconds(m.timestamp)}, {"value", std::move(value)}, {"code_version", m.code_version}},
          publish_time};
}

BusMessage make_message(const std::string& device_id, const std::string& service_id, const CommandPayload& c,
                        SimTime publish_time)
{
  json p{{"action", to_string(c.action)}, {"command_id", c.command_id}};
  if (c.descriptor) p["descriptor"] = to_json(*c.descriptor);
  return {Topic::cmd(device_id, service_id).str(), std::move(p), publish_time};
}

BusMessage make_message(const std::string& device_id, const std::string& service_id, const AckPayload& a,
                        SimTime publish_time)
{
  json p{{"command_id", a.command_id}, {"action", to_string(a.action)}, {"ok", a.ok}, {"code_version", a.code_version}};
  if (a.state) p["state"] = to_string(*a.state);
  if (!a.error.empty()) p["error"] = a.error;
  return {Topic::event(device_id, service_id).str(), std::move(p), publish_time};
}

BusMessage make_message(const std::string& device_id, const EnergyWindowPayload& e, SimTime publish_time)
{
  json events = json::array();
  for (const auto& ev : e.events) events.push_back(energy_event_json(ev));
  return {Topic::energy(device_id).str(),
          json{{"window_start_s", to_seconds(e.window_start)},
               {"window_end_s", to_seconds(e.window_end)},
               {"charge_uAms", e.charge.uA_ms},
               {"events", std::move(events)}},
          publish_time};
}

Measurement measurement_from(const BusMessage& msg)
{
  const auto t = parse_topic(msg.topic);
  if (t.kind != TopicKind::measurement) throw ProtocolError("not a measurement topic");
  return measurement_payload(msg.payload, t);
}

CommandPayload command_from(const BusMessage& msg)
{
  const auto t = parse_topic(msg.topic);
  if (t.kind != TopicKind::cmd) throw ProtocolError("not a cmd topic");
  return command_payload(msg.payload, t);
}

AckPayload ack_from(const BusMessage& msg)
{
  const auto t = parse_topic(msg.topic);
  if (t.kind != TopicKind::event) throw ProtocolError("not an event topic");
  return ack_payload(msg.payload);
}

EnergyWindowPayload energy_from(const BusMessage& msg)
{
  const auto t = parse_topic(msg.topic);
  if (t.kind != TopicKind::energy) throw ProtocolError("not an energy topic");
  return energy_payload(msg.payload, t);
}

void validate_message(const BusMessage& msg)
{
  const auto t = parse_topic(msg.topic);
  if (msg.payload.dump().size() > kMaxPayloadBytes) {
    throw ProtocolError("payload exceeds " + std::to_string(kMaxPayloadBytes) + " bytes");
  }
  switch (t.kind) {
    case TopicKind::measurement:
      measurement_payload(msg.payload, t);
      break;
    case TopicKind::cmd:
      command_payload(msg.payload, t);
      break;
    case TopicKind::event:
      ack_payload(msg.payload);
      break;
    case TopicKind::energy:
      energy_payload(msg.payload, t);
      break;
  }
}

std::string encode(const BusMessage& msg)
{
  validate_message(msg);
  json frame_json{{"topic", msg.topic}, {"publish_time_s", to_seconds(msg.publish_time)}, {"payload", msg.payload}};
  return frame_json.dump();
}

BusMessage decode(std::string_view bytes)
{
  json j = json::parse(bytes.begin(), bytes.end(), nullptr, false);
  if (j.is_discarded()) {
    throw ProtocolError("frame is not valid JSON");
  }
  if (!j.is_object()) throw ProtocolError("frame must be a JSON object");
  require_keys(j, {"topic", "publish_time_s", "payload"}, {}, "frame");
  BusMessage msg;
  msg.topic = string_field(j, "topic", "frame");
  msg.publish_time = time_field(j, "publish_time_s", "frame");
  msg.payload = std::move(j.at("payload"));
  validate_message(msg);
  return msg;
}

std::string frame(std::string_view body)
{
  const auto n = static_cast<std::uint32_t>(body.size());
  std::string out;
  out.reserve(body.size() + 4);
  out.push_back(static_cast<char>((n >> 24) & 0xff));
  out.push_back(static_cast<char>((n >> 16) & 0xff));
  out.push_back(static_cast<char>((n >> 8) & 0xff));
  out.push_back(static_cast<char>(n & 0xff));
  out.append(body);
  return out;
}

std::vector<std::string> FrameDecoder::feed(std::string_view bytes)
{
  buffer_.append(bytes);
  std::vector<std::string> out;
  std::size_t pos = 0;
  while (buffer_.size() - pos >= 4) {
    const auto* p = reinterpret_cast<const unsigned char*>(buffer_.data() + pos);
    const std::size_t n = (std::size_t{p[0]} << 24) | (std::size_t{p[1]} << 16) | (std::size_t{p[2]} << 8) | p[3];
    if (n > max_frame_) {
      throw ProtocolError("frame length " + std::to_string(n) + " exceeds limit");
    }
    if (buffer_.size() - pos - 4 < n) break;
    out.emplace_back(buffer_, pos + 4, n);
    pos += 4 + n;
  }
  buffer_.erase(0, pos);
  return out;
}

}  // namespace iis
