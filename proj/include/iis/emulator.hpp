// Copyright 2026 The edge-iis Authors
// SPDX-License-Identifier: Apache-2.0

/// @file emulator.hpp
/// @brief Duty-cycled edge device hosting isolated services.
///
/// Isolation is modelled at the scheduling, randomness and energy level: each
/// service owns a private RNG stream seeded from (device seed, service_id),
/// reports on multiples of its own interval, and is charged only for its own
/// sampling and transmissions. A lifecycle action on one service therefore
/// cannot change any sibling's (timestamp, value) trace.

#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "iis/energy.hpp"
#include "iis/model.hpp"
#include "iis/rng.hpp"

namespace iis
{

/// Sensor truth signal plus fault transform.
///
/// `stuck_value` is the last reading taken before the fault began; it is
/// only consulted for stuck faults. Dropout leaves the value untouched (the
/// caller suppresses emission). One gaussian is always drawn so the stream
/// position does not depend on the fault state; offset_outlier draws one
/// extra uniform while its fault is active.
double generate_reading(const SensorModel& sensor, SimTime t, const FaultSpec* fault, SensorRng& rng,
                        std::optional<double> stuck_value = std::nullopt);

struct LifecycleEvent
{
  std::string device_id;
  std::string service_id;
  LifecycleAction action = LifecycleAction::start;
  LifecycleState state = LifecycleState::Installed;
  std::uint32_t code_version = 0;
  SimTime at{0};
};

struct TickResult
{
  std::vector<Measurement> measurements;
  std::vector<EnergyEvent> energy;
};

struct ServiceStatus
{
  LifecycleState state;
  std::uint32_t code_version;
  ServiceDescriptor descriptor;
};

class DeviceRuntime
{
public:
  /// Installs every service in `descriptor`; when `autostart` is set they are
  /// also started, which is how scenarios begin.
  DeviceRuntime(DeviceDescriptor descriptor, std::uint64_t seed, bool autostart = true);

  const std::string& device_id() const { return descriptor_.device_id; }
  const DeviceDescriptor& descriptor() const { return descriptor_; }
  std::uint64_t seed() const { return seed_; }

  LifecycleEvent install_service(const ServiceDescriptor& service, SimTime now);
  LifecycleEvent start_service(const std::string& service_id, SimTime now);
  LifecycleEvent stop_service(const std::string& service_id, SimTime now);
  LifecycleEvent uninstall_service(const std::string& service_id, SimTime now);
  LifecycleEvent update_service(const ServiceDescriptor& next, SimTime now);

  /// Dispatches one lifecycle action. `descriptor` is required for install
  /// and update. Throws LifecycleError on an illegal request.
  LifecycleEvent apply(LifecycleAction action, const std::string& service_id,
                       const std::optional<ServiceDescriptor>& descriptor, SimTime now);

  /// Radio charge for receiving one management command.
  EnergyEvent command_rx_event(const std::string& service_id, SimTime now) const;

  /// Throws std::invalid_argument for a service this device has never seen.
  void inject_fault(const FaultSpec& fault);
  void clear_faults(const std::string& service_id);

  /// Device-wide wake period: gcd of live services' report intervals.
  SimTime wake_period() const;
  /// Smallest wake instant strictly after `t`.
  SimTime next_wake_after(SimTime t) const;

  /// One wake. `wake_time` must be a multiple of wake_period(), or the
  /// instant of the latest lifecycle change (the device is already awake
  /// then, even if the change moved its schedule). Services are visited in
  /// service_id order.
  TickResult tick(SimTime wake_time);

  std::optional<ServiceStatus> status(const std::string& service_id) const;
  std::vector<std::string> service_ids() const;

private:
  /// Throws LifecycleError if installing/updating `candidate` would make
  /// the wake period shorter than some activity on the device.
  void check_fits(const ServiceDescriptor& candidate) const;

  struct Slot
  {
    ServiceDescriptor descriptor;
    LifecycleState state = LifecycleState::Installed;
    SensorRng rng;
    std::optional<double> last_clean_value;
    std::vector<FaultSpec> faults;
  };

  Slot& live_slot(const std::string& service_id);
  /// Records `now` as the latest change instant.
  LifecycleEvent event_for(const std::string& service_id, LifecycleAction action, SimTime now);

  DeviceDescriptor descriptor_;
  std::uint64_t seed_;
  SimTime fallback_period_;
  std::optional<SimTime> last_change_;
  std::map<std::string, Slot> slots_;  // ordered: deterministic emission order
};

}  // namespace iis
