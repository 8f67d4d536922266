// Copyright 2026 The edge-iis Authors
// SPDX-License-Identifier: Apache-2.0

#include "iis/replay.hpp"

#include <cmath>
#include <fstream>
#include <limits>
#include <memory>

#include "iis/scenario.hpp"

namespace iis
{

using nlohmann::json;

namespace
{

template <typename T>
T parsed(std::optional<T> v, const char* what)
{
  if (!v) throw std::invalid_argument(std::string("bad ") + what);
  return *v;
}

Measurement measurement_of(const json& b)
{
  Measurement m;
  m.device_id = b.at("device_id").get<std::string>();
  m.service_id = b.at("service_id").get<std::string>();
  m.timestamp = from_seconds(b.at("timestamp_s").get<double>());
  m.value = b.at("value").is_null() ? std::numeric_limits<double>::quiet_NaN() : b.at("value").get<double>();
  m.code_version = b.at("code_version").get<std::uint32_t>();
  return m;
}

AckPayload ack_of(const json& b)
{
  AckPayload a;
  a.command_id = b.at("command_id").get<std::string>();
  a.action = parsed(parse_lifecycle_action(b.at("action").get<std::string>()), "ack action");
  a.ok = b.at("ok").get<bool>();
  if (b.contains("state")) a.state = parsed(parse_lifecycle_state(b.at("state").get<std::string>()), "ack state");
  a.code_version = b.at("code_version").get<std::uint32_t>();
  a.error = b.value("error", std::string{});
  return a;
}

StateChange change_of(const StreamEvent& e)
{
  const auto& b = e.body;
  return StateChange{b.at("device_id").get<std::string>(),
                     b.at("service_id").get<std::string>(),
                     parsed(parse_health(b.at("from").get<std::string>()), "health"),
                     parsed(parse_health(b.at("to").get<std::string>()), "health"),
                     parsed(parse_verdict_reason(b.at("reason").get<std::string>()), "reason"),
                     e.at};
}

std::unique_ptr<ControlPlane> rebuild(const StreamEvent& start)
{
  auto validation = validate_scenario(start.body.at("scenario"));
  if (!validation.config) {
    throw std::invalid_argument("run_start scenario is invalid: " + validation.errors.front().path + ": " +
                                validation.errors.front().message);
  }
  ControlPlaneOptions options;
  options.policy = parsed(parse_policy(start.body.at("policy").get<std::string>()), "policy");
  options.uninstall_after_auto_stop = start.body.value("uninstall_after_auto_stop", true);
  return std::make_unique<ControlPlane>(*validation.config, options, nullptr, nullptr);
}

}  // namespace

ReplayResult replay_events(std::istream& in)
{
  ReplayResult result;
  std::unique_ptr<ControlPlane> cp;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    StreamEvent e;
    try {
      e = StreamEvent::from_json(json::parse(line));
    } catch (const std::exception& ex) {
      result.corrupt_line = line_no;
      result.error = ex.what();
      break;
    }
    ++result.lines_read;

    try {
      const auto& b = e.body;
      if (e.type == "run_start") {
        if (cp) throw std::invalid_argument("second run_start");
        cp = rebuild(e);
        continue;
      }
      if (!cp) {
        if (e.type == "energy_window" || e.type == "run_end") continue;
        throw std::invalid_argument("event before run_start");
      }
      if (e.type == "measurement") {
        cp->ingest(measurement_of(b));
      } else if (e.type == "ack") {
        cp->on_ack(b.at("device_id").get<std::string>(), b.at("service_id").get<std::string>(), ack_of(b), e.at);
      } else if (e.type == "eval_tick") {
        cp->evaluate_due(b.at("device_id").get<std::string>(), e.at);
      } else if (e.type == "timeout_check") {
        cp->check_timeouts(e.at);
      } else if (e.type == "command" && b.value("origin", "") == "operator") {
        std::optional<ServiceDescriptor> descriptor;
        if (b.contains("descriptor")) {
          std::vector<ValidationIssue> issues;
          descriptor = parse_service_descriptor(b.at("descriptor"), "$.descriptor", issues);
          if (!descriptor) throw std::invalid_argument("operator command has an invalid descriptor");
        }
        cp->orchestrate(b.at("device_id").get<std::string>(), b.at("service_id").get<std::string>(),
                        parsed(parse_lifecycle_action(b.at("action").get<std::string>()), "action"), descriptor, e.at,
                        "operator");
      } else if (e.type == "state_change") {
        result.logged.push_back(change_of(e));
      }
    } catch (const std::exception& ex) {
      result.corrupt_line = line_no;
      result.error = ex.what();
      break;
    }
  }
  if (cp) {
    result.recomputed = cp->state_changes();
  } else if (!result.corrupt_line) {
    result.error = "no run_start event";
  }
  return result;
}

ReplayResult replay_file(const std::string& path)
{
  std::ifstream in(path);
  if (!in) {
    ReplayResult r;
    r.error = "cannot open " + path;
    return r;
  }
  return replay_events(in);
}

}  // namespace iis
