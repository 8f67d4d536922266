// Copyright 2026 The edge-iis Authors
// SPDX-License-Identifier: Apache-2.0

#include "iis/emulator.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>
#include <stdexcept>

namespace iis
{

namespace
{

constexpr double kSecondsPerDay = 86400.0;
constexpr double kSecondsPerHour = 3600.0;

bool fault_active(const FaultSpec& f, SimTime t)
{
  return t >= f.start;
}

}  // namespace

double generate_reading(const SensorModel& sensor, SimTime t, const FaultSpec* fault, SensorRng& rng,
                        std::optional<double> stuck_value)
{
  const double ts = to_seconds(t);
  double value = sensor.baseline + sensor.diurnal_amplitude * std::sin(2.0 * std::numbers::pi * ts / kSecondsPerDay) +
                 sensor.noise_sigma * rng.gaussian();
  if (!fault || !fault_active(*fault, t)) {
    return value;
  }
  switch (fault->kind) {
    case FaultKind::dropout:
      break;
    case FaultKind::stuck:
      value = stuck_value.value_or(value);
      break;
    case FaultKind::drift:
      value += fault->magnitude * (ts - to_seconds(fault->start)) / kSecondsPerHour;
      break;
    case FaultKind::offset_outlier:
      if (rng.uniform() < fault->outlier_probability) {
        value += fault->magnitude;
      }
      break;
  }
  return value;
}

DeviceRuntime::DeviceRuntime(DeviceDescriptor descriptor, std::uint64_t seed, bool autostart)
    : descriptor_(std::move(descriptor)), seed_(seed), fallback_period_(600'000)
{
  if (!descriptor_.services.empty()) {
    SimTime g{0};
    for (const auto& s : descriptor_.services) {
      g = SimTime{std::gcd(g.count(), s.report_interval.count())};
    }
    fallback_period_ = g;
  }
  for (const auto& s : descriptor_.services) {
    install_service(s, SimTime{0});
    if (autostart) {
      start_service(s.service_id, SimTime{0});
    }
  }
}

LifecycleEvent DeviceRuntime::event_for(const std::string& service_id, LifecycleAction action, SimTime now)
{
  last_change_ = now;
  const auto& slot = slots_.at(service_id);
  return {descriptor_.device_id, service_id, action, slot.state, slot.descriptor.code_version, now};
}

DeviceRuntime::Slot& DeviceRuntime::live_slot(const std::string& service_id)
{
  auto it = slots_.find(service_id);
  if (it == slots_.end()) {
    throw LifecycleError("unknown service '" + service_id + "'");
  }
  return it->second;
}

void DeviceRuntime::check_fits(const ServiceDescriptor& candidate) const
{
  if (candidate.report_interval.count() <= 0) {
    throw LifecycleError("report interval must be positive");
  }
  const auto& profile = descriptor_.energy_profile;
  std::int64_t g = candidate.report_interval.count();
  SimTime longest = std::max({profile.wake_duration, profile.radio_tx_duration, candidate.energy_cost.sample_duration});
  for (const auto& [id, slot] : slots_) {
    if (id == candidate.service_id || slot.state == LifecycleState::Uninstalled) continue;
    g = std::gcd(g, slot.descriptor.report_interval.count());
    longest = std::max(longest, slot.descriptor.energy_cost.sample_duration);
  }
  if (longest.count() > g) {
    throw LifecycleError("'" + candidate.service_id + "' would shrink the wake period to " +
                         std::to_string(g) + " ms, shorter than a " + std::to_string(longest.count()) +
                         " ms activity");
  }
}

LifecycleEvent DeviceRuntime::install_service(const ServiceDescriptor& service, SimTime now)
{
  auto it = slots_.find(service.service_id);
  if (it != slots_.end()) {
    if (it->second.state != LifecycleState::Uninstalled) {
      throw LifecycleError("service '" + service.service_id + "' is already installed");
    }
    if (service.code_version <= it->second.descriptor.code_version) {
      throw LifecycleError("reinstall of '" + service.service_id + "' must raise code_version");
    }
  }
  check_fits(service);
  if (it != slots_.end()) {
    slots_.erase(it);
  }
  Slot slot{service, LifecycleState::Installed, SensorRng(service_stream_seed(seed_, service.service_id)),
            std::nullopt, {}};
  slots_.emplace(service.service_id, std::move(slot));
  return event_for(service.service_id, LifecycleAction::install, now);
}

LifecycleEvent DeviceRuntime::start_service(const std::string& service_id, SimTime now)
{
  auto& slot = live_slot(service_id);
  slot.state = lifecycle_apply(slot.state, LifecycleAction::start);
  return event_for(service_id, LifecycleAction::start, now);
}

LifecycleEvent DeviceRuntime::stop_service(const std::string& service_id, SimTime now)
{
  auto& slot = live_slot(service_id);
  slot.state = lifecycle_apply(slot.state, LifecycleAction::stop);
  return event_for(service_id, LifecycleAction::stop, now);
}

LifecycleEvent DeviceRuntime::uninstall_service(const std::string& service_id, SimTime now)
{
  auto& slot = live_slot(service_id);
  slot.state = lifecycle_apply(slot.state, LifecycleAction::uninstall);
  slot.faults.clear();
  return event_for(service_id, LifecycleAction::uninstall, now);
}

LifecycleEvent DeviceRuntime::update_service(const ServiceDescriptor& next, SimTime now)
{
  auto& slot = live_slot(next.service_id);
  if (!lifecycle_allows(slot.state, LifecycleAction::update)) {
    throw LifecycleError("cannot update '" + next.service_id + "' in state " + std::string(to_string(slot.state)));
  }
  if (next.code_version <= slot.descriptor.code_version) {
    throw LifecycleError("update of '" + next.service_id + "' must raise code_version (have " +
                         std::to_string(slot.descriptor.code_version) + ", got " +
                         std::to_string(next.code_version) + ")");
  }
  check_fits(next);
  // The RNG stream and fault list stay with the service; only code changes.
  slot.descriptor = next;
  return event_for(next.service_id, LifecycleAction::update, now);
}

LifecycleEvent DeviceRuntime::apply(LifecycleAction action, const std::string& service_id,
                                    const std::optional<ServiceDescriptor>& descriptor, SimTime now)
{
  const bool needs_descriptor = action == LifecycleAction::install || action == LifecycleAction::update;
  if (needs_descriptor != descriptor.has_value()) {
    throw LifecycleError(std::string(to_string(action)) + (needs_descriptor ? " requires" : " forbids") +
                         " a descriptor");
  }
  if (descriptor && descriptor->service_id != service_id) {
    throw LifecycleError("descriptor service_id does not match target");
  }
  switch (action) {
    case LifecycleAction::install:
      return install_service(*descriptor, now);
    case LifecycleAction::start:
      return start_service(service_id, now);
    case LifecycleAction::stop:
      return stop_service(service_id, now);
    case LifecycleAction::uninstall:
      return uninstall_service(service_id, now);
    case LifecycleAction::update:
      return update_service(*descriptor, now);
  }
  throw LifecycleError("unknown action");
}

EnergyEvent DeviceRuntime::command_rx_event(const std::string& service_id, SimTime now) const
{
  const auto& p = descriptor_.energy_profile;
  return {descriptor_.device_id, now, EnergyEventKind::radio_tx, p.radio_tx_duration, p.radio_tx_current_uA,
          service_id};
}

void DeviceRuntime::inject_fault(const FaultSpec& fault)
{
  auto it = slots_.find(fault.service_id);
  if (fault.device_id != descriptor_.device_id || it == slots_.end()) {
    throw std::invalid_argument("fault references unknown service '" + fault.device_id + "/" + fault.service_id +
                                "'");
  }
  auto& faults = it->second.faults;
  faults.push_back(fault);
  std::stable_sort(faults.begin(), faults.end(),
                   [](const FaultSpec& a, const FaultSpec& b) { return a.start < b.start; });
}

void DeviceRuntime::clear_faults(const std::string& service_id)
{
  live_slot(service_id).faults.clear();
}

SimTime DeviceRuntime::wake_period() const
{
  std::int64_t g = 0;
  for (const auto& [id, slot] : slots_) {
    if (slot.state != LifecycleState::Uninstalled) {
      g = std::gcd(g, slot.descriptor.report_interval.count());
    }
  }
  return g == 0 ? fallback_period_ : SimTime{g};
}

SimTime DeviceRuntime::next_wake_after(SimTime t) const
{
  const auto p = wake_period().count();
  return SimTime{(t.count() / p + 1) * p};
}

TickResult DeviceRuntime::tick(SimTime wake_time)
{
  const bool aligned = wake_time.count() % wake_period().count() == 0;
  if (wake_time.count() <= 0 || (!aligned && wake_time != last_change_)) {
    throw std::invalid_argument("wake time not aligned to the device wake schedule");
  }
  const auto& profile = descriptor_.energy_profile;
  TickResult out;
  out.energy.push_back({descriptor_.device_id, wake_time, EnergyEventKind::wake_window, profile.wake_duration,
                        profile.mcu_active_current_uA, std::nullopt});

  for (auto& [id, slot] : slots_) {
    if (slot.state != LifecycleState::Running) continue;
    if (wake_time.count() % slot.descriptor.report_interval.count() != 0) continue;

    const FaultSpec* active = nullptr;
    for (const auto& f : slot.faults) {
      if (fault_active(f, wake_time)) active = &f;
    }
    const double value = generate_reading(slot.descriptor.sensor, wake_time, active, slot.rng, slot.last_clean_value);
    if (!active) {
      slot.last_clean_value = value;
    }

    const auto& cost = slot.descriptor.energy_cost;
    out.energy.push_back({descriptor_.device_id, wake_time, EnergyEventKind::sensor_sample, cost.sample_duration,
                          cost.sample_current_uA, id});
    if (active && active->kind == FaultKind::dropout) {
      continue;  // sensor powered, nothing valid to send
    }
    out.measurements.push_back({descriptor_.device_id, id, wake_time, value, slot.descriptor.code_version});
    out.energy.push_back({descriptor_.device_id, wake_time, EnergyEventKind::radio_tx, profile.radio_tx_duration,
                          profile.radio_tx_current_uA, id});
  }
  return out;
}

std::optional<ServiceStatus> DeviceRuntime::status(const std::string& service_id) const
{
  auto it = slots_.find(service_id);
  if (it == slots_.end()) return std::nullopt;
  return ServiceStatus{it->second.state, it->second.descriptor.code_version, it->second.descriptor};
}

std::vector<std::string> DeviceRuntime::service_ids() const
{
  std::vector<std::string> ids;
  for (const auto& [id, _] : slots_) ids.push_back(id);
  return ids;
}

}  // namespace iis
