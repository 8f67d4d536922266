// Copyright 2026 The edge-iis Authors
// SPDX-License-Identifier: Apache-2.0

/// @file api.hpp
/// @brief Management API: transport-independent request handling plus an
/// HTTP front end.
///
///   GET  /api/devices
///   GET  /api/devices/{device_id}/services/{service_id}
///   POST /api/devices/{device_id}/services/{service_id}/actions
///   GET  /api/events?since=N      (JSON page of the event stream)
///   GET  /api/stream?since=N      (text/event-stream, HTTP only)
///   GET  /api/summary

#pragma once

#include <atomic>
#include <functional>
#include <memory>
#include <optional>
#include <string>

#include <json.hpp>

#include "iis/events.hpp"
#include "iis/simulation.hpp"

namespace iis
{

struct ApiResponse
{
  int status = 200;
  nlohmann::json body;
};

class ManagementApi
{
public:
  using SummaryProvider = std::function<std::optional<nlohmann::json>()>;

  /// `sim` is the managed run; `summary` returns the comparison once it
  /// exists.
  ManagementApi(Simulation& sim, SummaryProvider summary = {});

  /// `target` is the request path with an optional query string.
  ApiResponse handle(const std::string& method, const std::string& target, const std::string& body);

  EventLog& events() { return sim_.events(); }

private:
  ApiResponse devices() const;
  ApiResponse service(const std::string& device_id, const std::string& service_id) const;
  ApiResponse action(const std::string& device_id, const std::string& service_id, const std::string& body);
  ApiResponse events_page(std::uint64_t since) const;
  ApiResponse summary() const;

  Simulation& sim_;
  SummaryProvider summary_;
};

/// One server-sent-events frame: id, event type and the event JSON.
std::string sse_frame(const StreamEvent& e);

/// Parses "since" out of a query string; 0 when absent. Throws
/// std::invalid_argument when present but not a non-negative integer.
std::uint64_t parse_since(const std::string& query);

class HttpServer
{
public:
  explicit HttpServer(ManagementApi& api, std::string static_dir = {});
  ~HttpServer();
  HttpServer(const HttpServer&) = delete;
  HttpServer& operator=(const HttpServer&) = delete;

  /// Binds; port 0 picks a free port. Returns the bound port or -1.
  int bind(const std::string& host, int port);
  /// Serves until stop(). Call after bind().
  void serve();
  void stop();

private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

}  // namespace iis
