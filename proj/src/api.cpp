// Copyright 2026 The edge-iis Authors
// SPDX-License-Identifier: Apache-2.0

#include "iis/api.hpp"

#include <charconv>
#include <sstream>
#include <vector>

#include "iis/scenario.hpp"

namespace iis
{

using nlohmann::json;

namespace
{

ApiResponse error(int status, std::string message)
{
  return {status, json{{"error", std::move(message)}}};
}

std::vector<std::string> split_path(const std::string& path)
{
  std::vector<std::string> parts;
  std::string part;
  std::istringstream in(path);
  while (std::getline(in, part, '/')) {
    if (!part.empty()) parts.push_back(part);
  }
  return parts;
}

}  // namespace

std::uint64_t parse_since(const std::string& query)
{
  std::istringstream in(query);
  std::string kv;
  while (std::getline(in, kv, '&')) {
    const auto eq = kv.find('=');
    if (kv.substr(0, eq) != "since") continue;
    const std::string v = eq == std::string::npos ? "" : kv.substr(eq + 1);
    std::uint64_t out = 0;
    const auto res = std::from_chars(v.data(), v.data() + v.size(), out);
    if (v.empty() || res.ec != std::errc{} || res.ptr != v.data() + v.size()) {
      throw std::invalid_argument("since must be a non-negative integer");
    }
    return out;
  }
  return 0;
}

std::string sse_frame(const StreamEvent& e)
{
  return "id: " + std::to_string(e.seq) + "\nevent: " + e.type + "\ndata: " + e.to_json().dump() + "\n\n";
}

ManagementApi::ManagementApi(Simulation& sim, SummaryProvider summary) : sim_(sim), summary_(std::move(summary)) {}

ApiResponse ManagementApi::handle(const std::string& method, const std::string& target, const std::string& body)
{
  const auto q = target.find('?');
  const std::string path = target.substr(0, q);
  const std::string query = q == std::string::npos ? "" : target.substr(q + 1);
  const auto parts = split_path(path);

  if (parts.empty() || parts[0] != "api") return error(404, "not found");
  const bool get = method == "GET";
  const bool post = method == "POST";

  if (parts.size() == 2 && parts[1] == "devices") {
    return get ? devices() : error(405, "method not allowed");
  }
  if (parts.size() == 5 && parts[1] == "devices" && parts[3] == "services") {
    return get ? service(parts[2], parts[4]) : error(405, "method not allowed");
  }
  if (parts.size() == 6 && parts[1] == "devices" && parts[3] == "services" && parts[5] == "actions") {
    return post ? action(parts[2], parts[4], body) : error(405, "method not allowed");
  }
  if (parts.size() == 2 && (parts[1] == "events" || parts[1] == "stream")) {
    if (!get) return error(405, "method not allowed");
    try {
      return events_page(parse_since(query));
    } catch (const std::invalid_argument& e) {
      return error(400, e.what());
    }
  }
  if (parts.size() == 2 && parts[1] == "summary") {
    return get ? summary() : error(405, "method not allowed");
  }
  return error(404, "not found");
}

ApiResponse ManagementApi::devices() const
{
  json body = sim_.with_control_plane([](const ControlPlane& cp) { return cp.list_devices(); });
  body["now_s"] = to_seconds(sim_.now());
  body["finished"] = sim_.finished();
  return {200, std::move(body)};
}

ApiResponse ManagementApi::service(const std::string& device_id, const std::string& service_id) const
{
  auto detail = sim_.with_control_plane([&](const ControlPlane& cp) -> std::optional<json> {
    if (!cp.has_device(device_id)) return std::nullopt;
    return cp.service_detail(device_id, service_id);
  });
  if (!detail) return error(404, "unknown device or service");
  return {200, std::move(*detail)};
}

ApiResponse ManagementApi::action(const std::string& device_id, const std::string& service_id,
                                  const std::string& body)
{
  json req;
  try {
    req = json::parse(body);
  } catch (const json::parse_error&) {
    return error(400, "body is not valid JSON");
  }
  if (!req.is_object() || !req.contains("action") || !req.at("action").is_string()) {
    return error(400, "body needs a string 'action'");
  }
  for (const auto& [key, _] : req.items()) {
    if (key != "action" && key != "descriptor") return error(400, "unknown key '" + key + "'");
  }
  const auto action = parse_lifecycle_action(req.at("action").get<std::string>());
  if (!action) return error(400, "unknown action '" + req.at("action").get<std::string>() + "'");

  std::optional<ServiceDescriptor> descriptor;
  if (req.contains("descriptor")) {
    std::vector<ValidationIssue> issues;
    descriptor = parse_service_descriptor(req.at("descriptor"), "$.descriptor", issues);
    if (!descriptor) {
      json errors = json::array();
      for (const auto& i : issues) errors.push_back({{"path", i.path}, {"message", i.message}});
      return {400, json{{"error", "invalid descriptor"}, {"errors", std::move(errors)}}};
    }
  }

  const OrchestrationResult r = sim_.submit(device_id, service_id, *action, descriptor);
  switch (r.error) {
    case OrchestrationError::none:
      return {202, json{{"command_id", r.command_id}, {"action", to_string(*action)}}};
    case OrchestrationError::unknown_target:
      return error(404, r.message);
    case OrchestrationError::illegal_transition:
      return error(409, r.message);
    case OrchestrationError::malformed:
      return error(400, r.message);
  }
  return error(500, "unhandled orchestration result");
}

ApiResponse ManagementApi::events_page(std::uint64_t since) const
{
  json events = json::array();
  for (const auto& e : sim_.events().since(since)) events.push_back(e.to_json());
  return {200, json{{"events", std::move(events)}, {"closed", sim_.events().closed()}}};
}

ApiResponse ManagementApi::summary() const
{
  if (summary_) {
    if (auto s = summary_()) {
      (*s)["complete"] = true;
      return {200, std::move(*s)};
    }
  }
  return {200, json{{"complete", false}, {"now_s", to_seconds(sim_.now())}}};
}

}  // namespace iis
