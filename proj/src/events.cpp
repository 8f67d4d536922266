// Copyright 2026 The edge-iis Authors
// SPDX-License-Identifier: Apache-2.0

#include "iis/events.hpp"

#include <stdexcept>

namespace iis
{

using nlohmann::json;

json StreamEvent::to_json() const
{
  json j = body.is_object() ? body : json::object();
  j["seq"] = seq;
  j["t"] = to_seconds(at);
  j["type"] = type;
  return j;
}

StreamEvent StreamEvent::from_json(const json& j)
{
  if (!j.is_object() || !j.contains("seq") || !j.contains("t") || !j.contains("type")) {
    throw std::invalid_argument("event needs seq, t and type");
  }
  if (!j.at("seq").is_number_unsigned() || !j.at("t").is_number() || !j.at("type").is_string()) {
    throw std::invalid_argument("event seq/t/type have wrong types");
  }
  StreamEvent e;
  e.seq = j.at("seq").get<std::uint64_t>();
  e.at = from_seconds(j.at("t").get<double>());
  e.type = j.at("type").get<std::string>();
  e.body = j;
  e.body.erase("seq");
  e.body.erase("t");
  e.body.erase("type");
  return e;
}

const StreamEvent& EventLog::append(SimTime at, std::string type, json body)
{
  std::lock_guard lock(mutex_);
  events_.push_back({events_.size() + 1, at, std::move(type), std::move(body)});
  cv_.notify_all();
  return events_.back();
}

std::vector<StreamEvent> EventLog::since(std::uint64_t after) const
{
  std::lock_guard lock(mutex_);
  if (after >= events_.size()) return {};
  return {events_.begin() + static_cast<std::ptrdiff_t>(after), events_.end()};
}

std::vector<StreamEvent> EventLog::wait_since(std::uint64_t after, std::chrono::milliseconds timeout) const
{
  std::unique_lock lock(mutex_);
  cv_.wait_for(lock, timeout, [&] { return closed_ || events_.size() > after; });
  if (after >= events_.size()) return {};
  return {events_.begin() + static_cast<std::ptrdiff_t>(after), events_.end()};
}

void EventLog::close()
{
  std::lock_guard lock(mutex_);
  closed_ = true;
  cv_.notify_all();
}

bool EventLog::closed() const
{
  std::lock_guard lock(mutex_);
  return closed_;
}

std::size_t EventLog::size() const
{
  std::lock_guard lock(mutex_);
  return events_.size();
}

EventSink EventLog::sink()
{
  return [this](SimTime at, std::string type, json body) { append(at, std::move(type), std::move(body)); };
}

}  // namespace iis
