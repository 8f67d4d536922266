// Copyright 2026 The edge-iis Authors
// SPDX-License-Identifier: Apache-2.0

#include "iis/simulation.hpp"

#include <algorithm>
#include <chrono>
#include <thread>

#include "iis/rng.hpp"
#include "iis/scenario.hpp"

namespace iis
{

using nlohmann::json;

std::uint64_t effective_device_seed(const DeviceDescriptor& d, const RunOptions& options)
{
  return options.seed ? mix_seeds(*options.seed, d.rng_seed) : d.rng_seed;
}

Simulation::Simulation(ScenarioConfig scenario, RunOptions options)
    : scenario_(std::move(scenario)),
      options_(std::move(options)),
      policy_(options_.managed ? options_.policy.value_or(scenario_.policy) : Policy::manual),
      bus_(options_.drop_probability, mix_seeds(options_.seed.value_or(0), fnv1a("bus")))
{
  ScenarioConfig effective = scenario_;
  effective.policy = policy_;
  events_.append(SimTime{0}, "run_start",
                 json{{"variant", options_.variant},
                      {"managed", options_.managed},
                      {"seed", options_.seed ? json(*options_.seed) : json(nullptr)},
                      {"policy", to_string(policy_)},
                      {"drop_probability", options_.drop_probability},
                      {"uninstall_after_auto_stop", options_.uninstall_after_auto_stop},
                      {"scenario", to_json(effective)}});

  for (const auto& d : scenario_.devices) {
    auto [it, _] = devices_.try_emplace(d.device_id, d, effective_device_seed(d, options_));
    traces_.try_emplace(d.device_id, d.device_id, d.energy_profile);
    inbox_[d.device_id];
    next_wake_[d.device_id] = it->second.next_wake_after(SimTime{0});
    bus_.subscribe("dev/" + d.device_id + "/svc/+/cmd",
                   [this, id = d.device_id](const BusMessage& msg) { inbox_[id].push_back(msg); });
  }
  for (const auto& f : scenario_.faults) {
    devices_.at(f.device_id).inject_fault(f);
    events_.append(SimTime{0}, "fault_scheduled",
                   json{{"device_id", f.device_id},
                        {"service_id", f.service_id},
                        {"start_s", to_seconds(f.start)},
                        {"kind", to_string(f.kind)},
                        {"magnitude", f.magnitude}});
  }

  ControlPlaneOptions cp_options;
  cp_options.policy = policy_;
  cp_options.uninstall_after_auto_stop = options_.uninstall_after_auto_stop;
  ControlPlane::Publisher publish;
  if (options_.managed) {
    publish = [this](const BusMessage& msg) { bus_.publish(msg); };
  }
  control_plane_.emplace(scenario_, cp_options, std::move(publish), events_.sink());
  bus_.subscribe("dev/+/svc/+/measurement", [this](const BusMessage& m) { control_plane_->handle(m); });
  bus_.subscribe("dev/+/svc/+/event", [this](const BusMessage& m) { control_plane_->handle(m); });
  bus_.subscribe("dev/+/energy", [this](const BusMessage& m) { control_plane_->handle(m); });
}

std::optional<SimTime> Simulation::next_instant() const
{
  std::lock_guard lock(mutex_);
  std::optional<SimTime> next;
  for (const auto& [_, t] : next_wake_) {
    if (t <= scenario_.duration && (!next || t < *next)) next = t;
  }
  return next;
}

SimTime Simulation::now() const
{
  std::lock_guard lock(mutex_);
  return now_;
}

bool Simulation::finished() const
{
  std::lock_guard lock(mutex_);
  return finished_;
}

void Simulation::deliver_commands(const std::string& device_id, SimTime now)
{
  auto& queue = inbox_.at(device_id);
  auto& device = devices_.at(device_id);
  while (!queue.empty()) {
    BusMessage msg = std::move(queue.front());
    queue.pop_front();
    const Topic topic = parse_topic(msg.topic);
    const CommandPayload cmd = command_from(msg);
    AckPayload ack{cmd.command_id, cmd.action, true, std::nullopt, 0, {}};
    try {
      const LifecycleEvent ev = device.apply(cmd.action, topic.service_id, cmd.descriptor, now);
      ack.state = ev.state;
      ack.code_version = ev.code_version;
      events_.append(now, "lifecycle",
                     json{{"device_id", device_id},
                          {"service_id", topic.service_id},
                          {"action", to_string(ev.action)},
                          {"state", to_string(ev.state)},
                          {"code_version", ev.code_version}});
    } catch (const LifecycleError& e) {
      ack.ok = false;
      ack.error = e.what();
      if (auto st = device.status(topic.service_id)) {
        ack.state = st->state;
        ack.code_version = st->code_version;
      }
    }
    traces_.at(device_id).record(device.command_rx_event(topic.service_id, now));
    bus_.publish(make_message(device_id, topic.service_id, ack, now));
  }
}

void Simulation::settle(const std::vector<std::string>& awake, SimTime now)
{
  while (true) {
    const std::size_t delivered = bus_.pump();
    bool pending = false;
    for (const auto& id : awake) {
      if (!inbox_.at(id).empty()) {
        pending = true;
        deliver_commands(id, now);
      }
    }
    if (delivered == 0 && !pending) return;
  }
}

bool Simulation::step()
{
  std::lock_guard lock(mutex_);
  if (finished_) return false;

  std::optional<SimTime> next;
  for (const auto& [_, t] : next_wake_) {
    if (t <= scenario_.duration && (!next || t < *next)) next = t;
  }
  if (!next) {
    finish_locked();
    return false;
  }
  const SimTime t = *next;
  now_ = t;

  std::vector<std::string> awake;
  for (const auto& [id, wake] : next_wake_) {
    if (wake == t) awake.push_back(id);
  }

  // Commands queued since the previous instant.
  bus_.pump();
  for (const auto& id : awake) {
    deliver_commands(id, t);
  }

  for (const auto& id : awake) {
    TickResult tick = devices_.at(id).tick(t);
    for (auto& e : tick.energy) {
      traces_.at(id).record(std::move(e));
    }
    for (auto& m : tick.measurements) {
      bus_.publish(make_message(m, t));
      measurements_.push_back(std::move(m));
    }
  }
  settle(awake, t);

  for (const auto& id : awake) {
    control_plane_->evaluate_due(id, t);
    settle(awake, t);
  }
  control_plane_->check_timeouts(t);
  settle(awake, t);

  for (const auto& id : awake) {
    auto& trace = traces_.at(id);
    std::vector<EnergyEvent> window_events(trace.open_events().begin(), trace.open_events().end());
    const EnergyWindow window = trace.close_window(t);
    events_.append(t, "energy_window",
                   json{{"device_id", id},
                        {"variant", options_.variant},
                        {"window_start_s", to_seconds(window.start)},
                        {"window_end_s", to_seconds(window.end)},
                        {"charge_uAms", window.charge.uA_ms},
                        {"avg_current_mA", window.average_mA()}});
    EnergyWindowPayload payload{window.start, window.end, window.charge, std::move(window_events)};
    try {
      bus_.publish(make_message(id, payload, t));
    } catch (const ProtocolError&) {
      // Too many events for one frame: send the window total only.
      payload.events.clear();
      bus_.publish(make_message(id, payload, t));
    }
    next_wake_[id] = devices_.at(id).next_wake_after(t);
  }
  bus_.pump();
  return true;
}

void Simulation::finish_locked()
{
  if (finished_) return;
  for (auto& [id, trace] : traces_) {
    if (trace.closed_until() < scenario_.duration) {
      const EnergyWindow window = trace.close_window(scenario_.duration);
      events_.append(scenario_.duration, "energy_window",
                     json{{"device_id", id},
                          {"variant", options_.variant},
                          {"window_start_s", to_seconds(window.start)},
                          {"window_end_s", to_seconds(window.end)},
                          {"charge_uAms", window.charge.uA_ms},
                          {"avg_current_mA", window.average_mA()}});
    }
  }
  now_ = scenario_.duration;
  finished_ = true;
  events_.append(scenario_.duration, "run_end", json{{"variant", options_.variant}});
}

void Simulation::run()
{
  while (step()) {
  }
}

void Simulation::run_paced(double speedup, const std::atomic<bool>* cancel, const std::function<void()>& after_step)
{
  using clock = std::chrono::steady_clock;
  const auto start = clock::now();
  while (true) {
    if (cancel && cancel->load()) return;
    if (auto next = next_instant(); next && speedup > 0.0) {
      const auto wall_offset = std::chrono::duration<double>(to_seconds(*next) / speedup);
      std::this_thread::sleep_until(start + std::chrono::duration_cast<clock::duration>(wall_offset));
    }
    if (cancel && cancel->load()) return;
    const bool more = step();
    if (after_step) after_step();
    if (!more) return;
  }
}

OrchestrationResult Simulation::submit(const std::string& device_id, const std::string& service_id,
                                       LifecycleAction action, const std::optional<ServiceDescriptor>& descriptor)
{
  std::lock_guard lock(mutex_);
  if (finished_) {
    return {OrchestrationError::illegal_transition, "", "run has finished"};
  }
  if (!options_.managed) {
    return {OrchestrationError::illegal_transition, "", "unmanaged baseline takes no actions"};
  }
  if (auto wake = next_wake_.find(device_id); wake != next_wake_.end() && wake->second > scenario_.duration) {
    return {OrchestrationError::illegal_transition, "", "device has no further wake before the run ends"};
  }
  return control_plane_->orchestrate(device_id, service_id, action, descriptor, now_, "operator");
}

std::vector<Measurement> Simulation::trace_of(const std::string& device_id, const std::string& service_id) const
{
  std::vector<Measurement> out;
  for (const auto& m : measurements_) {
    if (m.device_id == device_id && m.service_id == service_id) out.push_back(m);
  }
  return out;
}

}  // namespace iis
