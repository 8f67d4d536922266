// Copyright 2026 The edge-iis Authors
// SPDX-License-Identifier: Apache-2.0

#include "iis/model.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <utility>

namespace iis
{

double to_seconds(SimTime t)
{
  return static_cast<double>(t.count()) / 1000.0;
}

SimTime from_seconds(double seconds)
{
  return SimTime{std::llround(seconds * 1000.0)};
}

Microamps from_milliamps(double mA)
{
  return std::llround(mA * 1000.0);
}

double to_milliamps(Microamps uA)
{
  return static_cast<double>(uA) / 1000.0;
}

namespace
{

template <typename E, std::size_t N>
using NameTable = std::array<std::pair<E, std::string_view>, N>;

constexpr NameTable<SensorKind, 4> kSensorKinds{{{SensorKind::temperature, "temperature"},
                                                 {SensorKind::humidity, "humidity"},
                                                 {SensorKind::co2, "co2"},
                                                 {SensorKind::generic, "generic"}}};

constexpr NameTable<LifecycleState, 4> kLifecycleStates{{{LifecycleState::Installed, "Installed"},
                                                         {LifecycleState::Running, "Running"},
                                                         {LifecycleState::Stopped, "Stopped"},
                                                         {LifecycleState::Uninstalled, "Uninstalled"}}};

constexpr NameTable<LifecycleAction, 5> kActions{{{LifecycleAction::install, "install"},
                                                  {LifecycleAction::start, "start"},
                                                  {LifecycleAction::stop, "stop"},
                                                  {LifecycleAction::uninstall, "uninstall"},
                                                  {LifecycleAction::update, "update"}}};

constexpr NameTable<VerdictReason, 4> kReasons{{{VerdictReason::ok, "ok"},
                                                {VerdictReason::missed_reports, "missed_reports"},
                                                {VerdictReason::outlier, "outlier"},
                                                {VerdictReason::drift, "drift"}}};

constexpr NameTable<Health, 2> kHealth{{{Health::Normal, "Normal"}, {Health::Suspicious, "Suspicious"}}};

constexpr NameTable<FaultKind, 4> kFaultKinds{{{FaultKind::dropout, "dropout"},
                                               {FaultKind::stuck, "stuck"},
                                               {FaultKind::offset_outlier, "offset_outlier"},
                                               {FaultKind::drift, "drift"}}};

constexpr NameTable<Policy, 2> kPolicies{
    {{Policy::manual, "manual"}, {Policy::auto_stop_on_suspicious, "auto_stop_on_suspicious"}}};

template <typename E, std::size_t N>
std::string_view name_of(const NameTable<E, N>& table, E value)
{
  for (const auto& [e, name] : table) {
    if (e == value) {
      return name;
    }
  }
  return "?";
}

template <typename E, std::size_t N>
std::optional<E> value_of(const NameTable<E, N>& table, std::string_view s)
{
  for (const auto& [e, name] : table) {
    if (name == s) {
      return e;
    }
  }
  return std::nullopt;
}

}  // namespace

std::string_view to_string(SensorKind v) { return name_of(kSensorKinds, v); }
std::string_view to_string(LifecycleState v) { return name_of(kLifecycleStates, v); }
std::string_view to_string(LifecycleAction v) { return name_of(kActions, v); }
std::string_view to_string(VerdictReason v) { return name_of(kReasons, v); }
std::string_view to_string(Health v) { return name_of(kHealth, v); }
std::string_view to_string(FaultKind v) { return name_of(kFaultKinds, v); }
std::string_view to_string(Policy v) { return name_of(kPolicies, v); }

std::optional<SensorKind> parse_sensor_kind(std::string_view s) { return value_of(kSensorKinds, s); }
std::optional<LifecycleState> parse_lifecycle_state(std::string_view s) { return value_of(kLifecycleStates, s); }
std::optional<LifecycleAction> parse_lifecycle_action(std::string_view s) { return value_of(kActions, s); }
std::optional<VerdictReason> parse_verdict_reason(std::string_view s) { return value_of(kReasons, s); }
std::optional<Health> parse_health(std::string_view s) { return value_of(kHealth, s); }
std::optional<FaultKind> parse_fault_kind(std::string_view s) { return value_of(kFaultKinds, s); }
std::optional<Policy> parse_policy(std::string_view s) { return value_of(kPolicies, s); }

DetectorParams DetectorOverrides::apply(DetectorParams base) const
{
  if (availability_grace) base.availability_grace = *availability_grace;
  if (missed_reports_k) base.missed_reports_k = *missed_reports_k;
  if (zscore_threshold) base.zscore_threshold = *zscore_threshold;
  if (zscore_window) base.zscore_window = *zscore_window;
  if (ph_delta) base.ph_delta = *ph_delta;
  if (ph_lambda) base.ph_lambda = *ph_lambda;
  if (anomaly_votes_m) base.anomaly_votes_m = *anomaly_votes_m;
  if (recovery_window) base.recovery_window = *recovery_window;
  return base;
}

bool DetectorOverrides::empty() const
{
  return *this == DetectorOverrides{};
}

const ServiceDescriptor* DeviceDescriptor::find_service(std::string_view service_id) const
{
  auto it = std::find_if(services.begin(), services.end(),
                         [&](const ServiceDescriptor& s) { return s.service_id == service_id; });
  return it == services.end() ? nullptr : &*it;
}

const DeviceDescriptor* ScenarioConfig::find_device(std::string_view device_id) const
{
  auto it = std::find_if(devices.begin(), devices.end(),
                         [&](const DeviceDescriptor& d) { return d.device_id == device_id; });
  return it == devices.end() ? nullptr : &*it;
}

bool lifecycle_allows(std::optional<LifecycleState> from, LifecycleAction action)
{
  using S = LifecycleState;
  using A = LifecycleAction;
  if (!from || *from == S::Uninstalled) {
    return action == A::install;
  }
  switch (action) {
    case A::install:
      return false;
    case A::start:
      return *from == S::Installed || *from == S::Stopped;
    case A::stop:
      return *from == S::Running;
    case A::uninstall:
      return *from == S::Installed || *from == S::Stopped;
    case A::update:
      return true;
  }
  return false;
}

LifecycleState lifecycle_apply(std::optional<LifecycleState> from, LifecycleAction action)
{
  if (!lifecycle_allows(from, action)) {
    throw LifecycleError(std::string("illegal transition: ") + std::string(to_string(action)) + " from " +
                         (from ? std::string(to_string(*from)) : std::string("absent")));
  }
  switch (action) {
    case LifecycleAction::install:
      return LifecycleState::Installed;
    case LifecycleAction::start:
      return LifecycleState::Running;
    case LifecycleAction::stop:
      return LifecycleState::Stopped;
    case LifecycleAction::uninstall:
      return LifecycleState::Uninstalled;
    case LifecycleAction::update:
      return *from;
  }
  return *from;
}

}  // namespace iis
