// Copyright 2026 The edge-iis Authors
// SPDX-License-Identifier: Apache-2.0

/// @file model.hpp
/// @brief Domain types shared by the device emulator, control plane and reports.
///
/// Simulated time is carried as integer milliseconds (SimTime) and exposed as
/// seconds at the JSON boundary. Currents are carried as integer microamps so
/// that charge accounting is exact (see energy.hpp).

#pragma once

#include <chrono>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace iis
{

/// Simulated time since scenario start (or a simulated duration).
using SimTime = std::chrono::milliseconds;

/// Integer microamps.
using Microamps = std::int64_t;

double to_seconds(SimTime t);
SimTime from_seconds(double seconds);
Microamps from_milliamps(double mA);
double to_milliamps(Microamps uA);

enum class SensorKind
{
  temperature,
  humidity,
  co2,
  generic
};

enum class LifecycleState
{
  Installed,
  Running,
  Stopped,
  Uninstalled
};

enum class LifecycleAction
{
  install,
  start,
  stop,
  uninstall,
  update
};

enum class VerdictReason
{
  ok,
  missed_reports,
  outlier,
  drift
};

enum class Health
{
  Normal,
  Suspicious
};

enum class FaultKind
{
  dropout,
  stuck,
  offset_outlier,
  drift
};

enum class Policy
{
  manual,
  auto_stop_on_suspicious
};

std::string_view to_string(SensorKind v);
std::string_view to_string(LifecycleState v);
std::string_view to_string(LifecycleAction v);
std::string_view to_string(VerdictReason v);
std::string_view to_string(Health v);
std::string_view to_string(FaultKind v);
std::string_view to_string(Policy v);

std::optional<SensorKind> parse_sensor_kind(std::string_view s);
std::optional<LifecycleState> parse_lifecycle_state(std::string_view s);
std::optional<LifecycleAction> parse_lifecycle_action(std::string_view s);
std::optional<VerdictReason> parse_verdict_reason(std::string_view s);
std::optional<Health> parse_health(std::string_view s);
std::optional<FaultKind> parse_fault_kind(std::string_view s);
std::optional<Policy> parse_policy(std::string_view s);

struct SensorModel
{
  SensorKind kind = SensorKind::generic;
  double baseline = 0.0;
  double diurnal_amplitude = 0.0;
  double noise_sigma = 0.0;
  std::string unit;

  friend bool operator==(const SensorModel&, const SensorModel&) = default;
};

struct ServiceEnergyCost
{
  Microamps sample_current_uA = 0;
  SimTime sample_duration{0};

  friend bool operator==(const ServiceEnergyCost&, const ServiceEnergyCost&) = default;
};

/// Streaming detector thresholds. Every field may be overridden per service.
struct DetectorParams
{
  double availability_grace = 1.5;  ///< multiple of the report interval
  int missed_reports_k = 2;
  double zscore_threshold = 3.5;
  int zscore_window = 30;
  double ph_delta = 0.05;
  double ph_lambda = 5.0;
  int anomaly_votes_m = 3;
  int recovery_window = 3;  ///< clean verdicts needed to leave Suspicious

  friend bool operator==(const DetectorParams&, const DetectorParams&) = default;
};

/// Per-service override of scenario-level DetectorParams; unset fields inherit.
struct DetectorOverrides
{
  std::optional<double> availability_grace;
  std::optional<int> missed_reports_k;
  std::optional<double> zscore_threshold;
  std::optional<int> zscore_window;
  std::optional<double> ph_delta;
  std::optional<double> ph_lambda;
  std::optional<int> anomaly_votes_m;
  std::optional<int> recovery_window;

  DetectorParams apply(DetectorParams base) const;
  bool empty() const;

  friend bool operator==(const DetectorOverrides&, const DetectorOverrides&) = default;
};

/// An isolated IoT service: the unit of isolation and management.
struct ServiceDescriptor
{
  std::string service_id;
  SensorModel sensor;
  SimTime report_interval{600'000};
  std::uint32_t code_version = 1;
  ServiceEnergyCost energy_cost;
  DetectorOverrides detector_params;

  friend bool operator==(const ServiceDescriptor&, const ServiceDescriptor&) = default;
};

struct EnergyProfile
{
  Microamps sleep_current_uA = 0;
  Microamps mcu_active_current_uA = 0;
  Microamps radio_tx_current_uA = 0;
  SimTime radio_tx_duration{0};
  SimTime wake_duration{0};  ///< MCU-active window opened at every wake

  friend bool operator==(const EnergyProfile&, const EnergyProfile&) = default;
};

struct DeviceDescriptor
{
  std::string device_id;
  std::vector<ServiceDescriptor> services;
  EnergyProfile energy_profile;
  std::uint64_t rng_seed = 0;

  const ServiceDescriptor* find_service(std::string_view service_id) const;

  friend bool operator==(const DeviceDescriptor&, const DeviceDescriptor&) = default;
};

struct FaultSpec
{
  std::string device_id;
  std::string service_id;
  SimTime start{0};
  FaultKind kind = FaultKind::dropout;
  double magnitude = 0.0;  ///< sensor units, or units/hour for drift
  double outlier_probability = 1.0;

  friend bool operator==(const FaultSpec&, const FaultSpec&) = default;
};

struct ScenarioConfig
{
  std::vector<DeviceDescriptor> devices;
  std::vector<FaultSpec> faults;
  SimTime duration{0};
  double speedup = 360.0;
  Policy policy = Policy::manual;
  DetectorParams detector_params;

  const DeviceDescriptor* find_device(std::string_view device_id) const;

  friend bool operator==(const ScenarioConfig&, const ScenarioConfig&) = default;
};

struct Measurement
{
  std::string device_id;
  std::string service_id;
  SimTime timestamp{0};
  double value = 0.0;
  std::uint32_t code_version = 0;

  friend bool operator==(const Measurement&, const Measurement&) = default;
};

struct HealthVerdict
{
  bool available = true;
  bool correct = true;
  SimTime evaluated_at{0};
  VerdictReason reason = VerdictReason::ok;

  bool clean() const { return available && correct; }

  friend bool operator==(const HealthVerdict&, const HealthVerdict&) = default;
};

struct HealthState
{
  Health state = Health::Normal;
  SimTime since{0};
  VerdictReason last_reason = VerdictReason::ok;

  friend bool operator==(const HealthState&, const HealthState&) = default;
};

/// Whether the lifecycle graph allows `action` from `from`. Update is a
/// self-loop on Installed/Running/Stopped; install is only legal on a service
/// that is absent or Uninstalled (pass std::nullopt for absent).
bool lifecycle_allows(std::optional<LifecycleState> from, LifecycleAction action);

/// Target state of a legal action. Precondition: lifecycle_allows(from, action).
LifecycleState lifecycle_apply(std::optional<LifecycleState> from, LifecycleAction action);

/// Thrown on an illegal lifecycle transition or a non-monotonic update.
class LifecycleError : public std::logic_error
{
public:
  using std::logic_error::logic_error;
};

}  // namespace iis
