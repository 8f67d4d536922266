// Copyright 2026 The edge-iis Authors
// SPDX-License-Identifier: Apache-2.0

/// @file events.hpp
/// @brief Ordered run events: the events.log lines and the API stream.

#pragma once

#include <condition_variable>
#include <cstdint>
#include <functional>
#include <mutex>
#include <string>
#include <vector>

#include <json.hpp>

#include "iis/model.hpp"

namespace iis
{

struct StreamEvent
{
  std::uint64_t seq = 0;
  SimTime at{0};
  std::string type;
  nlohmann::json body;

  /// One events.log line: {"seq":..,"t":..,"type":..,...body fields}.
  nlohmann::json to_json() const;
  static StreamEvent from_json(const nlohmann::json& j);
};

using EventSink = std::function<void(SimTime at, std::string type, nlohmann::json body)>;

/// Append-only, thread-safe event history with blocking readers. Sequence
/// numbers are assigned in append order starting at 1.
class EventLog
{
public:
  const StreamEvent& append(SimTime at, std::string type, nlohmann::json body);

  /// Copies events with seq > after.
  std::vector<StreamEvent> since(std::uint64_t after) const;

  /// Blocks until an event with seq > after exists, close() is called or
  /// `timeout` passes. Returns what is available.
  std::vector<StreamEvent> wait_since(std::uint64_t after, std::chrono::milliseconds timeout) const;

  void close();
  bool closed() const;
  std::size_t size() const;

  EventSink sink();

private:
  mutable std::mutex mutex_;
  mutable std::condition_variable cv_;
  std::vector<StreamEvent> events_;
  bool closed_ = false;
};

}  // namespace iis
