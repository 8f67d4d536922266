// Copyright 2026 The edge-iis Authors
// SPDX-License-Identifier: Apache-2.0

/// @file control_plane.hpp
/// @brief Data monitoring, anomaly detection and service orchestration.
///
/// The control plane is driven by three inputs: telemetry messages (ingest),
/// evaluation ticks aligned with device wakes (evaluate_due), and command
/// acknowledgements. Given the same input sequence it produces the same
/// verdicts, state changes and commands; `replay` relies on that.
///
/// Not internally synchronized; the owner serializes access.

#pragma once

#include <cstdint>
#include <deque>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "iis/detectors.hpp"
#include "iis/energy.hpp"
#include "iis/events.hpp"
#include "iis/model.hpp"
#include "iis/telemetry.hpp"

namespace iis
{

enum class IngestOutcome
{
  accepted,
  out_of_order,
  duplicate,
  non_finite,
  unknown_service
};

std::string_view to_string(IngestOutcome o);

struct RecentValue
{
  SimTime timestamp{0};
  double value = 0.0;
  bool outlier = false;
};

struct ServiceHealthRecord
{
  std::string device_id;
  std::string service_id;
  DetectorParams params;
  SimTime report_interval{600'000};
  std::uint32_t code_version = 0;
  std::optional<LifecycleState> lifecycle;

  // data monitoring
  std::optional<SimTime> last_timestamp;          ///< newest accepted timestamp, ever
  std::optional<SimTime> last_measurement_at;     ///< since the last (re)start
  SimTime availability_reference{0};              ///< start time, used before the first report
  int consecutive_missed = 0;
  std::optional<double> last_value;

  // anomaly detection
  std::deque<double> window;
  std::deque<bool> votes;  ///< one flag per ingested sample, newest last
  PageHinkley page_hinkley;
  bool drift_latched = false;

  // classification
  HealthState health;
  std::deque<HealthVerdict> history;  ///< last recovery_window verdicts
  bool auto_stop_issued = false;

  // for the management API
  std::deque<HealthVerdict> verdict_log;
  std::deque<RecentValue> recent;
  Charge attributed_charge;

  int vote_count() const;
  void reset_detectors(SimTime now);
};

/// true iff the newest report (or the start time, before any report) is at
/// most availability_grace report intervals old.
bool check_availability(const ServiceHealthRecord& record, SimTime now);

struct StateChange
{
  std::string device_id;
  std::string service_id;
  Health from = Health::Normal;
  Health to = Health::Normal;
  VerdictReason reason = VerdictReason::ok;
  SimTime at{0};

  friend bool operator==(const StateChange&, const StateChange&) = default;
};

enum class OrchestrationError
{
  none,
  unknown_target,
  illegal_transition,
  malformed
};

struct OrchestrationResult
{
  OrchestrationError error = OrchestrationError::none;
  std::string command_id;
  std::string message;

  bool accepted() const { return error == OrchestrationError::none; }
};

struct AuditEntry
{
  SimTime at{0};
  std::string command_id;
  std::string device_id;
  std::string service_id;
  LifecycleAction action = LifecycleAction::stop;
  std::string origin;   ///< "operator" or "policy"
  std::string outcome;  ///< dispatched, acked, failed, timeout, rejected
  std::string detail;
};

struct ControlPlaneOptions
{
  Policy policy = Policy::manual;
  /// Follow a policy-issued stop with an uninstall once the stop is acked.
  bool uninstall_after_auto_stop = true;
  /// Pending commands without an ack after this long are audited as timeouts.
  SimTime command_timeout{1'200'000};
};

class ControlPlane
{
public:
  using Publisher = std::function<void(const BusMessage&)>;

  ControlPlane(const ScenarioConfig& scenario, ControlPlaneOptions options, Publisher publish, EventSink events);

  /// Routes one bus message (measurement, event or energy topic).
  void handle(const BusMessage& msg);

  IngestOutcome ingest(const Measurement& m);

  /// One verdict + health transition for a Running service. Returns nullopt
  /// for services that are not Running.
  std::optional<HealthVerdict> evaluate(const std::string& device_id, const std::string& service_id, SimTime now);

  /// Evaluation tick for a device wake at `now`: every Running service whose
  /// report interval divides `now` is evaluated, in service_id order.
  void evaluate_due(const std::string& device_id, SimTime now);

  OrchestrationResult orchestrate(const std::string& device_id, const std::string& service_id,
                                  LifecycleAction action, const std::optional<ServiceDescriptor>& descriptor,
                                  SimTime now, const std::string& origin = "operator");

  void on_ack(const std::string& device_id, const std::string& service_id, const AckPayload& ack, SimTime now);
  void on_energy(const std::string& device_id, const EnergyWindowPayload& window);
  void check_timeouts(SimTime now);

  const ServiceHealthRecord* record(const std::string& device_id, const std::string& service_id) const;
  std::vector<const ServiceHealthRecord*> records() const;
  bool has_device(const std::string& device_id) const;
  const std::vector<StateChange>& state_changes() const { return state_changes_; }
  const std::vector<AuditEntry>& audit() const { return audit_; }
  std::size_t pending_commands() const { return pending_.size(); }
  const ScenarioConfig& scenario() const { return scenario_; }

  /// Management API views.
  nlohmann::json list_devices() const;
  std::optional<nlohmann::json> service_detail(const std::string& device_id, const std::string& service_id) const;

private:
  using Key = std::pair<std::string, std::string>;

  struct Pending
  {
    std::string device_id;
    std::string service_id;
    LifecycleAction action;
    std::optional<ServiceDescriptor> descriptor;
    SimTime dispatched_at;
    std::string origin;
  };

  struct DeviceEnergy
  {
    Charge charge;
    SimTime from{0};
    SimTime to{0};
  };

  ServiceHealthRecord make_record(const std::string& device_id, const ServiceDescriptor& s) const;
  void emit(SimTime at, std::string type, nlohmann::json body);
  void apply_policy(ServiceHealthRecord& rec, const StateChange& change, SimTime now);
  void audit(SimTime at, const std::string& command_id, const Pending& p, std::string outcome, std::string detail);

  ScenarioConfig scenario_;
  ControlPlaneOptions options_;
  Publisher publish_;
  EventSink events_;
  std::map<Key, ServiceHealthRecord> records_;
  std::map<std::string, DeviceEnergy> energy_;
  std::map<std::string, Pending> pending_;
  std::vector<StateChange> state_changes_;
  std::vector<AuditEntry> audit_;
  std::uint64_t next_command_ = 1;
};

}  // namespace iis
