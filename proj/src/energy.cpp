// Copyright 2026 The edge-iis Authors
// SPDX-License-Identifier: Apache-2.0

#include "iis/energy.hpp"

#include <algorithm>

namespace iis
{

std::string_view to_string(EnergyEventKind k)
{
  switch (k) {
    case EnergyEventKind::wake_window:
      return "wake_window";
    case EnergyEventKind::sensor_sample:
      return "sensor_sample";
    case EnergyEventKind::radio_tx:
      return "radio_tx";
  }
  return "?";
}

std::optional<EnergyEventKind> parse_energy_event_kind(std::string_view s)
{
  if (s == "wake_window") return EnergyEventKind::wake_window;
  if (s == "sensor_sample") return EnergyEventKind::sensor_sample;
  if (s == "radio_tx") return EnergyEventKind::radio_tx;
  return std::nullopt;
}

Charge interval_charge(const EnergyProfile& profile, std::span<const EnergyEvent> events, SimTime interval)
{
  if (interval.count() <= 0) {
    throw EnergyError("interval must be positive");
  }
  SimTime active{0};
  Charge charge;
  for (const auto& e : events) {
    if (e.duration.count() < 0 || e.duration > interval) {
      throw EnergyError("event duration outside [0, interval]");
    }
    if (e.kind == EnergyEventKind::wake_window) {
      active += e.duration;
    }
    charge += e.charge();
  }
  if (active > interval) {
    throw EnergyError("active time exceeds interval");
  }
  return charge + charge_of(profile.sleep_current_uA, interval - active);
}

double average_current_mA(Charge charge, SimTime span)
{
  if (span.count() <= 0) {
    throw EnergyError("empty averaging window");
  }
  // uA*ms / ms = uA; /1000 = mA
  return static_cast<double>(charge.uA_ms) / static_cast<double>(span.count()) / 1000.0;
}

EnergyTrace::EnergyTrace(std::string device_id, EnergyProfile profile)
    : device_id_(std::move(device_id)), profile_(profile)
{
}

void EnergyTrace::record(EnergyEvent event)
{
  events_.push_back(std::move(event));
}

const EnergyWindow& EnergyTrace::close_window(SimTime end)
{
  if (end <= closed_until_) {
    throw EnergyError("window end must advance");
  }
  std::span<const EnergyEvent> open(events_.data() + open_from_, events_.size() - open_from_);
  Charge c = interval_charge(profile_, open, end - closed_until_);
  windows_.push_back({closed_until_, end, c});
  closed_until_ = end;
  open_from_ = events_.size();
  return windows_.back();
}

Charge EnergyTrace::total_charge() const
{
  Charge total;
  for (const auto& w : windows_) {
    total += w.charge;
  }
  return total;
}

Charge EnergyTrace::charge_between(SimTime from, SimTime to) const
{
  if (from >= to) {
    throw EnergyError("empty averaging window");
  }
  auto is_boundary = [&](SimTime t) {
    return t == SimTime{0} ||
           std::any_of(windows_.begin(), windows_.end(), [&](const EnergyWindow& w) { return w.end == t; });
  };
  if (!is_boundary(from) || !is_boundary(to)) {
    throw EnergyError("averaging window not aligned to wake boundaries");
  }
  Charge c;
  for (const auto& w : windows_) {
    if (w.start >= from && w.end <= to) {
      c += w.charge;
    }
  }
  return c;
}

SimTime EnergyTrace::boundary_at_or_after(SimTime t) const
{
  if (t <= SimTime{0}) return SimTime{0};
  for (const auto& w : windows_) {
    if (w.end >= t) return w.end;
  }
  return closed_until_;
}

double average_current(const EnergyTrace& trace, SimTime from, SimTime to)
{
  return average_current_mA(trace.charge_between(from, to), to - from);
}

}  // namespace iis
