// Copyright 2026 The edge-iis Authors
// SPDX-License-Identifier: Apache-2.0

#include "iis/control_plane.hpp"

#include <algorithm>
#include <cmath>

#include "iis/health.hpp"
#include "iis/scenario.hpp"

namespace iis
{

using nlohmann::json;

namespace
{

constexpr std::size_t kRecentValues = 50;
constexpr std::size_t kVerdictLog = 50;

json nullable(double v)
{
  return std::isfinite(v) ? json(v) : json(nullptr);
}

json verdict_json(const HealthVerdict& v)
{
  return json{{"available", v.available},
              {"correct", v.correct},
              {"evaluated_at_s", to_seconds(v.evaluated_at)},
              {"reason", to_string(v.reason)}};
}

json health_json(const ServiceHealthRecord& r)
{
  // A service that is not running has no health (lifecycle and health are
  // orthogonal).
  if (r.lifecycle != LifecycleState::Running) {
    return nullptr;
  }
  return json{{"state", to_string(r.health.state)},
              {"since_s", to_seconds(r.health.since)},
              {"last_reason", to_string(r.health.last_reason)}};
}

}  // namespace

std::string_view to_string(IngestOutcome o)
{
  switch (o) {
    case IngestOutcome::accepted:
      return "accepted";
    case IngestOutcome::out_of_order:
      return "out_of_order";
    case IngestOutcome::duplicate:
      return "duplicate";
    case IngestOutcome::non_finite:
      return "non_finite";
    case IngestOutcome::unknown_service:
      return "unknown_service";
  }
  return "?";
}

int ServiceHealthRecord::vote_count() const
{
  return static_cast<int>(std::count(votes.begin(), votes.end(), true));
}

void ServiceHealthRecord::reset_detectors(SimTime now)
{
  window.clear();
  votes.clear();
  page_hinkley = PageHinkley(params.ph_delta, params.ph_lambda);
  drift_latched = false;
  consecutive_missed = 0;
  last_measurement_at.reset();
  availability_reference = now;
}

bool check_availability(const ServiceHealthRecord& record, SimTime now)
{
  const SimTime reference = record.last_measurement_at.value_or(record.availability_reference);
  const double age_ms = static_cast<double>((now - reference).count());
  return age_ms <= record.params.availability_grace * static_cast<double>(record.report_interval.count());
}

ControlPlane::ControlPlane(const ScenarioConfig& scenario, ControlPlaneOptions options, Publisher publish,
                           EventSink events)
    : scenario_(scenario), options_(options), publish_(std::move(publish)), events_(std::move(events))
{
  for (const auto& d : scenario_.devices) {
    energy_[d.device_id] = {};
    for (const auto& s : d.services) {
      auto rec = make_record(d.device_id, s);
      rec.lifecycle = LifecycleState::Running;
      records_.emplace(Key{d.device_id, s.service_id}, std::move(rec));
    }
  }
}

ServiceHealthRecord ControlPlane::make_record(const std::string& device_id, const ServiceDescriptor& s) const
{
  ServiceHealthRecord rec;
  rec.device_id = device_id;
  rec.service_id = s.service_id;
  rec.params = s.detector_params.apply(scenario_.detector_params);
  rec.report_interval = s.report_interval;
  rec.code_version = s.code_version;
  rec.reset_detectors(SimTime{0});
  return rec;
}

void ControlPlane::emit(SimTime at, std::string type, json body)
{
  if (events_) {
    events_(at, std::move(type), std::move(body));
  }
}

void ControlPlane::handle(const BusMessage& msg)
{
  const Topic t = parse_topic(msg.topic);
  switch (t.kind) {
    case TopicKind::measurement:
      ingest(measurement_from(msg));
      break;
    case TopicKind::event:
      on_ack(t.device_id, t.service_id, ack_from(msg), msg.publish_time);
      break;
    case TopicKind::energy:
      on_energy(t.device_id, energy_from(msg));
      break;
    case TopicKind::cmd:
      break;  // our own commands
  }
}

IngestOutcome ControlPlane::ingest(const Measurement& m)
{
  auto it = records_.find(Key{m.device_id, m.service_id});
  IngestOutcome outcome = IngestOutcome::accepted;
  bool outlier = false;
  if (it == records_.end()) {
    outcome = IngestOutcome::unknown_service;
  } else {
    auto& rec = it->second;
    if (rec.last_timestamp && m.timestamp < *rec.last_timestamp) {
      outcome = IngestOutcome::out_of_order;
    } else if (rec.last_timestamp && m.timestamp == *rec.last_timestamp) {
      outcome = IngestOutcome::duplicate;
    } else if (!std::isfinite(m.value)) {
      // Arrived but unusable: counts as a correctness vote, not as presence.
      outcome = IngestOutcome::non_finite;
      rec.last_timestamp = m.timestamp;
      rec.votes.push_back(true);
    } else {
      const auto window_size = static_cast<std::size_t>(rec.params.zscore_window);
      const std::vector<double> window(rec.window.begin(), rec.window.end());
      outlier = detect_outlier(window, m.value, rec.params);
      rec.votes.push_back(outlier);
      rec.window.push_back(m.value);
      while (rec.window.size() > window_size) rec.window.pop_front();

      if (rec.page_hinkley.update(m.value)) {
        rec.drift_latched = true;
        rec.page_hinkley.reset();
      }
      rec.last_timestamp = m.timestamp;
      rec.last_measurement_at = m.timestamp;
      rec.last_value = m.value;
      rec.code_version = std::max(rec.code_version, m.code_version);
      rec.recent.push_back({m.timestamp, m.value, outlier});
      while (rec.recent.size() > kRecentValues) rec.recent.pop_front();
    }
    while (rec.votes.size() > static_cast<std::size_t>(rec.params.zscore_window)) rec.votes.pop_front();
  }

  emit(m.timestamp, "measurement",
       json{{"device_id", m.device_id},
            {"service_id", m.service_id},
            {"timestamp_s", to_seconds(m.timestamp)},
            {"value", nullable(m.value)},
            {"code_version", m.code_version},
            {"outcome", to_string(outcome)},
            {"outlier", outlier}});
  return outcome;
}

std::optional<HealthVerdict> ControlPlane::evaluate(const std::string& device_id, const std::string& service_id,
                                                    SimTime now)
{
  auto it = records_.find(Key{device_id, service_id});
  if (it == records_.end() || it->second.lifecycle != LifecycleState::Running) {
    return std::nullopt;
  }
  auto& rec = it->second;

  if (check_availability(rec, now)) {
    rec.consecutive_missed = 0;
  } else {
    ++rec.consecutive_missed;
  }

  HealthVerdict v;
  v.evaluated_at = now;
  v.available = rec.consecutive_missed < rec.params.missed_reports_k;
  const bool outliers = rec.vote_count() >= rec.params.anomaly_votes_m;
  const bool drift = rec.drift_latched;
  rec.drift_latched = false;
  if (!v.available) {
    v.correct = true;  // not assessable without data
    v.reason = VerdictReason::missed_reports;
  } else if (outliers) {
    v.correct = false;
    v.reason = VerdictReason::outlier;
  } else if (drift) {
    v.correct = false;
    v.reason = VerdictReason::drift;
  }

  rec.history.push_back(v);
  while (rec.history.size() > static_cast<std::size_t>(std::max(rec.params.recovery_window, 1))) {
    rec.history.pop_front();
  }
  rec.verdict_log.push_back(v);
  while (rec.verdict_log.size() > kVerdictLog) rec.verdict_log.pop_front();

  const std::vector<HealthVerdict> history(rec.history.begin(), rec.history.end());
  const HealthState before = rec.health;
  rec.health = health_transition(before, v, history, rec.params.recovery_window);

  json body = verdict_json(v);
  body["device_id"] = device_id;
  body["service_id"] = service_id;
  body["state"] = to_string(rec.health.state);
  emit(now, "verdict", std::move(body));

  if (rec.health.state != before.state) {
    StateChange change{device_id, service_id, before.state, rec.health.state, v.reason, now};
    state_changes_.push_back(change);
    emit(now, "state_change",
         json{{"device_id", device_id},
              {"service_id", service_id},
              {"from", to_string(change.from)},
              {"to", to_string(change.to)},
              {"reason", to_string(change.reason)}});
    apply_policy(rec, change, now);
  }
  return v;
}

void ControlPlane::evaluate_due(const std::string& device_id, SimTime now)
{
  emit(now, "eval_tick", json{{"device_id", device_id}});
  std::vector<std::string> due;
  for (const auto& [key, rec] : records_) {
    if (key.first == device_id && rec.lifecycle == LifecycleState::Running &&
        now.count() % rec.report_interval.count() == 0) {
      due.push_back(key.second);
    }
  }
  for (const auto& service_id : due) {
    evaluate(device_id, service_id, now);
  }
}

void ControlPlane::apply_policy(ServiceHealthRecord& rec, const StateChange& change, SimTime now)
{
  if (change.to == Health::Normal) {
    rec.auto_stop_issued = false;
    return;
  }
  if (options_.policy == Policy::manual) {
    emit(now, "recommendation",
         json{{"device_id", rec.device_id},
              {"service_id", rec.service_id},
              {"action", "stop"},
              {"reason", to_string(change.reason)}});
    return;
  }
  if (rec.auto_stop_issued || rec.lifecycle != LifecycleState::Running) {
    return;
  }
  rec.auto_stop_issued = true;
  orchestrate(rec.device_id, rec.service_id, LifecycleAction::stop, std::nullopt, now, "policy");
}

OrchestrationResult ControlPlane::orchestrate(const std::string& device_id, const std::string& service_id,
                                              LifecycleAction action, const std::optional<ServiceDescriptor>& descriptor,
                                              SimTime now, const std::string& origin)
{
  OrchestrationResult result;
  auto reject = [&](OrchestrationError err, std::string message) {
    result.error = err;
    result.message = std::move(message);
    emit(now, "command_rejected",
         json{{"device_id", device_id},
              {"service_id", service_id},
              {"action", to_string(action)},
              {"origin", origin},
              {"error", result.message}});
    audit_.push_back({now, "", device_id, service_id, action, origin, "rejected", result.message});
    return result;
  };

  if (!has_device(device_id)) {
    return reject(OrchestrationError::unknown_target, "unknown device '" + device_id + "'");
  }
  const auto it = records_.find(Key{device_id, service_id});
  const bool known = it != records_.end();
  if (!known && action != LifecycleAction::install) {
    return reject(OrchestrationError::unknown_target, "unknown service '" + service_id + "'");
  }
  const bool needs_descriptor = action == LifecycleAction::install || action == LifecycleAction::update;
  if (needs_descriptor != descriptor.has_value()) {
    return reject(OrchestrationError::malformed, std::string(to_string(action)) +
                                                     (needs_descriptor ? " requires" : " does not take") +
                                                     " a descriptor");
  }
  if (descriptor && descriptor->service_id != service_id) {
    return reject(OrchestrationError::malformed, "descriptor service_id does not match target");
  }
  const std::optional<LifecycleState> state = known ? it->second.lifecycle : std::nullopt;
  if (!lifecycle_allows(state, action)) {
    return reject(OrchestrationError::illegal_transition,
                  std::string("cannot ") + std::string(to_string(action)) + " a service in state " +
                      (state ? std::string(to_string(*state)) : std::string("absent")));
  }
  if (descriptor && known && descriptor->code_version <= it->second.code_version) {
    return reject(OrchestrationError::illegal_transition,
                  "code_version must increase beyond " + std::to_string(it->second.code_version));
  }
  // One command in flight per service keeps the last-known state honest.
  for (const auto& [id, p] : pending_) {
    if (p.device_id == device_id && p.service_id == service_id) {
      return reject(OrchestrationError::illegal_transition, "command " + id + " still pending");
    }
  }

  result.command_id = "cmd-" + std::to_string(next_command_++);
  Pending p{device_id, service_id, action, descriptor, now, origin};
  json body{{"device_id", device_id},
            {"service_id", service_id},
            {"command_id", result.command_id},
            {"action", to_string(action)},
            {"origin", origin}};
  if (descriptor) body["descriptor"] = to_json(*descriptor);
  emit(now, "command", std::move(body));
  audit(now, result.command_id, p, "dispatched", "");
  pending_.emplace(result.command_id, p);
  if (publish_) {
    publish_(make_message(device_id, service_id, CommandPayload{action, result.command_id, descriptor}, now));
  }
  return result;
}

void ControlPlane::audit(SimTime at, const std::string& command_id, const Pending& p, std::string outcome,
                         std::string detail)
{
  audit_.push_back({at, command_id, p.device_id, p.service_id, p.action, p.origin, std::move(outcome),
                    std::move(detail)});
}

void ControlPlane::on_ack(const std::string& device_id, const std::string& service_id, const AckPayload& ack,
                          SimTime now)
{
  json body{{"device_id", device_id},
            {"service_id", service_id},
            {"command_id", ack.command_id},
            {"action", to_string(ack.action)},
            {"ok", ack.ok},
            {"code_version", ack.code_version}};
  if (ack.state) body["state"] = to_string(*ack.state);
  if (!ack.error.empty()) body["error"] = ack.error;
  emit(now, "ack", std::move(body));

  std::optional<Pending> pending;
  if (auto it = pending_.find(ack.command_id); it != pending_.end()) {
    pending = std::move(it->second);
    pending_.erase(it);
  }
  const Pending& p = pending ? *pending : Pending{device_id, service_id, ack.action, std::nullopt, now, "unknown"};
  audit(now, ack.command_id, p, ack.ok ? (pending ? "acked" : "late_ack") : "failed", ack.error);
  if (!ack.ok || !ack.state) {
    return;
  }

  auto it = records_.find(Key{device_id, service_id});
  if (ack.action == LifecycleAction::install) {
    if (!p.descriptor) return;  // cannot build a record without the descriptor
    auto rec = make_record(device_id, *p.descriptor);
    rec.reset_detectors(now);
    if (it != records_.end()) {
      rec.health = it->second.health;
      it->second = std::move(rec);
    } else {
      it = records_.emplace(Key{device_id, service_id}, std::move(rec)).first;
    }
  }
  if (it == records_.end()) return;
  auto& rec = it->second;
  rec.lifecycle = *ack.state;
  rec.code_version = ack.code_version;

  switch (ack.action) {
    case LifecycleAction::update:
      if (p.descriptor) {
        rec.params = p.descriptor->detector_params.apply(scenario_.detector_params);
        rec.report_interval = p.descriptor->report_interval;
      }
      rec.reset_detectors(now);
      break;
    case LifecycleAction::start:
      rec.reset_detectors(now);
      rec.auto_stop_issued = false;
      break;
    case LifecycleAction::stop:
      if (p.origin == "policy" && options_.uninstall_after_auto_stop) {
        orchestrate(device_id, service_id, LifecycleAction::uninstall, std::nullopt, now, "policy");
      }
      break;
    case LifecycleAction::install:
    case LifecycleAction::uninstall:
      break;
  }
}

void ControlPlane::on_energy(const std::string& device_id, const EnergyWindowPayload& window)
{
  auto& e = energy_[device_id];
  if (e.charge.uA_ms == 0 && e.to == SimTime{0}) {
    e.from = window.window_start;
  }
  e.charge += window.charge;
  e.to = std::max(e.to, window.window_end);
  for (const auto& ev : window.events) {
    if (!ev.attributed_service) continue;
    if (auto it = records_.find(Key{device_id, *ev.attributed_service}); it != records_.end()) {
      it->second.attributed_charge += ev.charge();
    }
  }
}

void ControlPlane::check_timeouts(SimTime now)
{
  if (pending_.empty()) return;
  emit(now, "timeout_check", json::object());
  for (auto it = pending_.begin(); it != pending_.end();) {
    if (now - it->second.dispatched_at > options_.command_timeout) {
      emit(now, "command_timeout",
           json{{"device_id", it->second.device_id},
                {"service_id", it->second.service_id},
                {"command_id", it->first},
                {"action", to_string(it->second.action)}});
      audit(now, it->first, it->second, "timeout", "no ack from device");
      it = pending_.erase(it);
    } else {
      ++it;
    }
  }
}

const ServiceHealthRecord* ControlPlane::record(const std::string& device_id, const std::string& service_id) const
{
  auto it = records_.find(Key{device_id, service_id});
  return it == records_.end() ? nullptr : &it->second;
}

std::vector<const ServiceHealthRecord*> ControlPlane::records() const
{
  std::vector<const ServiceHealthRecord*> out;
  for (const auto& [_, rec] : records_) out.push_back(&rec);
  return out;
}

bool ControlPlane::has_device(const std::string& device_id) const
{
  return energy_.count(device_id) != 0;
}

json ControlPlane::list_devices() const
{
  json devices = json::array();
  for (const auto& [device_id, _] : energy_) {
    json services = json::array();
    for (const auto& [key, rec] : records_) {
      if (key.first != device_id) continue;
      services.push_back({{"service_id", rec.service_id},
                          {"lifecycle", rec.lifecycle ? json(to_string(*rec.lifecycle)) : json(nullptr)},
                          {"code_version", rec.code_version},
                          {"health", health_json(rec)},
                          {"last_value", rec.last_value ? json(*rec.last_value) : json(nullptr)},
                          {"last_seen_s", rec.last_timestamp ? json(to_seconds(*rec.last_timestamp)) : json(nullptr)}});
    }
    devices.push_back({{"device_id", device_id}, {"services", std::move(services)}});
  }
  return json{{"devices", std::move(devices)}};
}

std::optional<json> ControlPlane::service_detail(const std::string& device_id, const std::string& service_id) const
{
  const auto* rec = record(device_id, service_id);
  if (!rec) return std::nullopt;
  json verdicts = json::array();
  for (const auto& v : rec->verdict_log) verdicts.push_back(verdict_json(v));
  json recent = json::array();
  for (const auto& r : rec->recent) {
    recent.push_back({{"timestamp_s", to_seconds(r.timestamp)}, {"value", r.value}, {"outlier", r.outlier}});
  }
  const auto& e = energy_.at(device_id);
  const SimTime span = e.to - e.from;
  json energy{{"service_charge_mAs", rec->attributed_charge.milliamp_seconds()},
              {"device_charge_mAs", e.charge.milliamp_seconds()},
              {"device_avg_current_mA", span.count() > 0 ? json(average_current_mA(e.charge, span)) : json(nullptr)}};
  return json{{"device_id", device_id},
              {"service_id", service_id},
              {"lifecycle", rec->lifecycle ? json(to_string(*rec->lifecycle)) : json(nullptr)},
              {"code_version", rec->code_version},
              {"health", health_json(*rec)},
              {"verdicts", std::move(verdicts)},
              {"recent_measurements", std::move(recent)},
              {"energy", std::move(energy)}};
}

}  // namespace iis
