// Copyright 2026 The edge-iis Authors
// SPDX-License-Identifier: Apache-2.0

/// @file energy.hpp
/// @brief Duty-cycle charge accounting in exact integer arithmetic.
///
/// Charge is counted in microamp-milliseconds (uA*ms, i.e. nanocoulombs), so
/// summing a trace and evaluating the closed form from the schedule produce
/// the same integer. A device's timeline is cut into windows (prev_wake, wake]:
/// the wake at the right edge and everything charged during it (sensor
/// samples, transmissions, command receptions) belong to that window.
///
/// Within a window the MCU-active time of wake_window events displaces sleep
/// time. Sensor and radio events are overlays: their current is added on top
/// of whatever the MCU draws, so they do not displace sleep.

#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "iis/model.hpp"

namespace iis
{

enum class EnergyEventKind
{
  wake_window,
  sensor_sample,
  radio_tx
};

std::string_view to_string(EnergyEventKind k);
std::optional<EnergyEventKind> parse_energy_event_kind(std::string_view s);

/// Exact charge in uA*ms.
struct Charge
{
  std::int64_t uA_ms = 0;

  double milliamp_seconds() const { return static_cast<double>(uA_ms) / 1e6; }

  Charge& operator+=(Charge o)
  {
    uA_ms += o.uA_ms;
    return *this;
  }
  friend Charge operator+(Charge a, Charge b) { return a += b; }
  friend Charge operator-(Charge a, Charge b) { return Charge{a.uA_ms - b.uA_ms}; }
  friend auto operator<=>(const Charge&, const Charge&) = default;
};

inline Charge charge_of(Microamps current, SimTime duration)
{
  return Charge{current * duration.count()};
}

struct EnergyEvent
{
  std::string device_id;
  SimTime timestamp{0};
  EnergyEventKind kind = EnergyEventKind::wake_window;
  SimTime duration{0};
  Microamps current_uA = 0;
  std::optional<std::string> attributed_service;

  Charge charge() const { return charge_of(current_uA, duration); }

  friend bool operator==(const EnergyEvent&, const EnergyEvent&) = default;
};

class EnergyError : public std::invalid_argument
{
public:
  using std::invalid_argument::invalid_argument;
};

/// Closed-form charge of one window: sleep over the non-active remainder plus
/// every event's current*duration. Throws EnergyError when MCU-active time
/// exceeds the window or any single event is longer than the window.
Charge interval_charge(const EnergyProfile& profile, std::span<const EnergyEvent> events, SimTime interval);

/// Average current in mA of `charge` spread over `span`.
double average_current_mA(Charge charge, SimTime span);

struct EnergyWindow
{
  SimTime start{0};
  SimTime end{0};
  Charge charge;

  double average_mA() const { return average_current_mA(charge, end - start); }
};

/// Per-device event record plus its integrated windows.
class EnergyTrace
{
public:
  EnergyTrace() = default;
  EnergyTrace(std::string device_id, EnergyProfile profile);

  const std::string& device_id() const { return device_id_; }
  const EnergyProfile& profile() const { return profile_; }

  /// Appends an event to the currently open window.
  void record(EnergyEvent event);

  /// Closes the open window at `end` (> previous end). Returns the window.
  const EnergyWindow& close_window(SimTime end);

  SimTime closed_until() const { return closed_until_; }
  std::span<const EnergyEvent> open_events() const
  {
    return std::span<const EnergyEvent>(events_).subspan(open_from_);
  }
  std::span<const EnergyEvent> events() const { return events_; }
  std::span<const EnergyWindow> windows() const { return windows_; }
  Charge total_charge() const;

  /// Sum of window charges in [from, to]. Both bounds must coincide with
  /// window boundaries; throws EnergyError otherwise or if from >= to.
  Charge charge_between(SimTime from, SimTime to) const;

  /// Smallest window boundary >= t (or closed_until() if none).
  SimTime boundary_at_or_after(SimTime t) const;

private:
  std::string device_id_;
  EnergyProfile profile_;
  std::vector<EnergyEvent> events_;
  std::size_t open_from_ = 0;  ///< index of first event in the open window
  std::vector<EnergyWindow> windows_;
  SimTime closed_until_{0};
};

/// Mean current over [from, to] in mA.
double average_current(const EnergyTrace& trace, SimTime from, SimTime to);

}  // namespace iis
