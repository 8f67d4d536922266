// Copyright 2026 The edge-iis Authors
// SPDX-License-Identifier: Apache-2.0

/// @file simulation.hpp
/// @brief Discrete-event run of a scenario: devices, bus, control plane.
///
/// Instants are device wake times. At each instant, in device_id order:
///   1. queued commands reach the devices that wake now,
///   2. those devices sample and publish,
///   3. the control plane ingests, evaluates due services and may command,
///   4. commands are applied while the device is still awake,
///   5. each awake device closes its energy window at this instant.
/// Commands submitted between instants (served mode) are delivered at the
/// target device's next wake.

#pragma once

#include <atomic>
#include <cstdint>
#include <deque>
#include <functional>
#include <map>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include "iis/bus.hpp"
#include "iis/control_plane.hpp"
#include "iis/emulator.hpp"
#include "iis/energy.hpp"
#include "iis/events.hpp"
#include "iis/model.hpp"

namespace iis
{

struct RunOptions
{
  std::string variant = "managed";
  /// Run-level seed mixed into every device's rng_seed; unset uses rng_seed as is.
  std::optional<std::uint64_t> seed;
  std::optional<Policy> policy;
  /// false runs the unmanaged baseline: no control action is ever taken.
  bool managed = true;
  double drop_probability = 0.0;
  bool uninstall_after_auto_stop = true;
};

std::uint64_t effective_device_seed(const DeviceDescriptor& d, const RunOptions& options);

class Simulation
{
public:
  Simulation(ScenarioConfig scenario, RunOptions options);
  Simulation(const Simulation&) = delete;
  Simulation& operator=(const Simulation&) = delete;

  const ScenarioConfig& scenario() const { return scenario_; }
  const RunOptions& options() const { return options_; }
  Policy policy() const { return policy_; }

  /// Next wake instant within the run, if any.
  std::optional<SimTime> next_instant() const;
  SimTime now() const;
  bool finished() const;

  /// Processes one instant. Returns false once nothing is left (and the run
  /// has been finalized).
  bool step();
  void run();

  /// Runs with wall-clock pacing: simulated instant t is processed no
  /// earlier than start + t / speedup; speedup <= 0 disables pacing.
  /// `cancel` aborts between instants.
  void run_paced(double speedup, const std::atomic<bool>* cancel = nullptr,
                 const std::function<void()>& after_step = {});

  /// Operator action from the management API. Thread-safe. Refused with
  /// illegal_transition when the target device will not wake again before
  /// the run ends, since such a command could never be delivered.
  OrchestrationResult submit(const std::string& device_id, const std::string& service_id, LifecycleAction action,
                             const std::optional<ServiceDescriptor>& descriptor);

  /// Serialized read access to the control plane. Thread-safe.
  template <typename F>
  auto with_control_plane(F&& f) const
  {
    std::lock_guard lock(mutex_);
    return f(*control_plane_);
  }

  // Results; read once the run is finished (or under with_control_plane).
  const std::vector<Measurement>& measurements() const { return measurements_; }
  const std::map<std::string, EnergyTrace>& energy() const { return traces_; }
  const DeviceRuntime& device(const std::string& device_id) const { return devices_.at(device_id); }
  const ControlPlane& control_plane() const { return *control_plane_; }
  EventLog& events() { return events_; }
  const EventLog& events() const { return events_; }
  const Bus& bus() const { return bus_; }

  /// Measurements of one service in emission order.
  std::vector<Measurement> trace_of(const std::string& device_id, const std::string& service_id) const;

private:
  void finish_locked();
  void deliver_commands(const std::string& device_id, SimTime now);
  void settle(const std::vector<std::string>& awake, SimTime now);

  ScenarioConfig scenario_;
  RunOptions options_;
  Policy policy_;
  mutable std::mutex mutex_;
  EventLog events_;
  Bus bus_;
  std::map<std::string, DeviceRuntime> devices_;
  std::map<std::string, std::deque<BusMessage>> inbox_;
  std::map<std::string, SimTime> next_wake_;
  std::map<std::string, EnergyTrace> traces_;
  std::optional<ControlPlane> control_plane_;
  std::vector<Measurement> measurements_;
  SimTime now_{0};
  bool finished_ = false;
};

}  // namespace iis
