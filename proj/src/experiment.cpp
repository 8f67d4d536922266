// Copyright 2026 The edge-iis Authors
// SPDX-License-Identifier: Apache-2.0

#include "iis/experiment.hpp"

#include <algorithm>
#include <set>
#include <thread>

namespace iis
{

using nlohmann::json;

namespace
{

bool is_boundary(const EnergyTrace& trace, SimTime t)
{
  if (t == SimTime{0}) return true;
  const auto w = trace.windows();
  return std::any_of(w.begin(), w.end(), [&](const EnergyWindow& x) { return x.end == t; });
}

/// First instant >= t that is a window boundary in both traces.
SimTime common_boundary(const EnergyTrace& a, const EnergyTrace& b, SimTime t)
{
  for (const auto& w : a.windows()) {
    if (w.end >= t && is_boundary(b, w.end)) return w.end;
  }
  return a.closed_until();
}

WindowComparison compare_window(const std::string& label, const EnergyTrace& managed, const EnergyTrace& unmanaged,
                                 SimTime from, SimTime to)
{
  WindowComparison w;
  w.label = label;
  w.from = from;
  w.to = to;
  w.managed_charge = managed.charge_between(from, to);
  w.unmanaged_charge = unmanaged.charge_between(from, to);
  w.managed_avg_mA = average_current_mA(w.managed_charge, to - from);
  w.unmanaged_avg_mA = average_current_mA(w.unmanaged_charge, to - from);
  w.delta_mA = w.unmanaged_avg_mA - w.managed_avg_mA;
  return w;
}

}  // namespace

const WindowComparison* ComparisonReport::fleet_window(const std::string& label) const
{
  auto it = std::find_if(fleet.begin(), fleet.end(), [&](const WindowComparison& w) { return w.label == label; });
  return it == fleet.end() ? nullptr : &*it;
}

const WindowComparison& ComparisonReport::headline() const
{
  if (const auto* post = fleet_window("post_fault")) return *post;
  return *fleet_window("full");
}

ComparisonReport compare(const Simulation& managed, const Simulation& unmanaged)
{
  ComparisonReport report;
  const auto& scenario = managed.scenario();
  const SimTime duration = scenario.duration;
  for (const auto& f : scenario.faults) {
    if (!report.fault_onset || f.start < *report.fault_onset) report.fault_onset = f.start;
  }

  for (const auto& [device_id, mtrace] : managed.energy()) {
    const auto& utrace = unmanaged.energy().at(device_id);
    DeviceComparison dc{device_id, {}};
    dc.windows.push_back(compare_window("full", mtrace, utrace, SimTime{0}, duration));
    if (report.fault_onset) {
      const SimTime onset = common_boundary(mtrace, utrace, *report.fault_onset);
      if (onset > SimTime{0}) {
        dc.windows.push_back(compare_window("pre_fault", mtrace, utrace, SimTime{0}, onset));
      }
      if (onset < duration) {
        dc.windows.push_back(compare_window("post_fault", mtrace, utrace, onset, duration));
      }
    }
    report.devices.push_back(std::move(dc));
  }

  for (const char* label : {"full", "pre_fault", "post_fault"}) {
    WindowComparison total;
    total.label = label;
    bool any = false;
    for (const auto& dc : report.devices) {
      for (const auto& w : dc.windows) {
        if (w.label != label) continue;
        if (!any) {
          total.from = w.from;
          total.to = w.to;
        }
        any = true;
        total.from = std::min(total.from, w.from);
        total.to = std::max(total.to, w.to);
        total.managed_charge += w.managed_charge;
        total.unmanaged_charge += w.unmanaged_charge;
        total.managed_avg_mA += w.managed_avg_mA;
        total.unmanaged_avg_mA += w.unmanaged_avg_mA;
      }
    }
    if (any) {
      total.delta_mA = total.unmanaged_avg_mA - total.managed_avg_mA;
      report.fleet.push_back(total);
    }
  }
  return report;
}

VariantRuns run_variants(const ScenarioConfig& scenario, RunOptions managed_options,
                         std::optional<double> paced_speedup)
{
  VariantRuns runs;
  managed_options.variant = "managed";
  managed_options.managed = true;
  RunOptions baseline = managed_options;
  baseline.variant = "unmanaged";
  baseline.managed = false;

  runs.managed = std::make_unique<Simulation>(scenario, managed_options);
  runs.unmanaged = std::make_unique<Simulation>(scenario, baseline);

  std::thread baseline_thread([&] { runs.unmanaged->run(); });
  if (paced_speedup) {
    runs.managed->run_paced(*paced_speedup);
  } else {
    runs.managed->run();
  }
  baseline_thread.join();
  runs.report = compare(*runs.managed, *runs.unmanaged);
  return runs;
}

EnergyProfile default_calibrated_profile()
{
  EnergyProfile p;
  p.sleep_current_uA = from_milliamps(0.01);
  p.mcu_active_current_uA = from_milliamps(40.0);
  p.wake_duration = from_seconds(2.0);
  p.radio_tx_current_uA = from_milliamps(120.0);
  p.radio_tx_duration = from_seconds(0.2);
  return p;
}

VariantRuns run_paper_experiment(const EnergyProfile& profile, ScenarioConfig scenario, std::uint64_t seed)
{
  if (scenario.devices.size() != 1) {
    throw ExperimentShapeError("experiment needs exactly one device");
  }
  auto& device = scenario.devices.front();
  if (device.services.size() != 2) {
    throw ExperimentShapeError("experiment needs exactly two services");
  }
  if (device.services[0].report_interval != device.services[1].report_interval) {
    throw ExperimentShapeError("experiment services must share one report interval");
  }
  if (scenario.faults.empty()) {
    throw ExperimentShapeError("experiment needs a fault");
  }
  std::set<std::string> faulted;
  for (const auto& f : scenario.faults) faulted.insert(f.service_id);
  if (faulted.size() != 1) {
    throw ExperimentShapeError("experiment faults must target a single service");
  }
  device.energy_profile = profile;
  for (const auto& s : device.services) {
    if (profile.wake_duration > s.report_interval || profile.radio_tx_duration > s.report_interval) {
      throw ExperimentShapeError("profile windows exceed the report interval");
    }
  }

  RunOptions options;
  options.seed = seed;
  options.policy = Policy::auto_stop_on_suspicious;
  options.uninstall_after_auto_stop = true;
  return run_variants(scenario, options);
}

json to_json(const WindowComparison& w)
{
  return json{{"window_start_s", to_seconds(w.from)},
              {"window_end_s", to_seconds(w.to)},
              {"managed_avg_mA", w.managed_avg_mA},
              {"unmanaged_avg_mA", w.unmanaged_avg_mA},
              {"delta_mA", w.delta_mA},
              {"managed_charge_mAs", w.managed_charge.milliamp_seconds()},
              {"unmanaged_charge_mAs", w.unmanaged_charge.milliamp_seconds()}};
}

json summary_json(const VariantRuns& runs, std::optional<std::uint64_t> seed)
{
  const auto& report = runs.report;
  const auto& headline = report.headline();
  const auto& scenario = runs.managed->scenario();

  json windows = json::object();
  for (const auto& w : report.fleet) windows[w.label] = to_json(w);

  json devices = json::array();
  for (const auto& dc : report.devices) {
    json dw = json::object();
    for (const auto& w : dc.windows) dw[w.label] = to_json(w);
    devices.push_back({{"device_id", dc.device_id}, {"windows", std::move(dw)}});
  }

  const auto& cp = runs.managed->control_plane();
  json timeline = json::array();
  for (const auto& c : cp.state_changes()) {
    timeline.push_back({{"t", to_seconds(c.at)},
                        {"device_id", c.device_id},
                        {"service_id", c.service_id},
                        {"from", to_string(c.from)},
                        {"to", to_string(c.to)},
                        {"reason", to_string(c.reason)}});
  }
  json commands = json::array();
  for (const auto& a : cp.audit()) {
    commands.push_back({{"t", to_seconds(a.at)},
                        {"command_id", a.command_id},
                        {"device_id", a.device_id},
                        {"service_id", a.service_id},
                        {"action", to_string(a.action)},
                        {"origin", a.origin},
                        {"outcome", a.outcome}});
  }

  return json{{"seed", seed ? json(*seed) : json(nullptr)},
              {"policy", to_string(runs.managed->policy())},
              {"duration_s", to_seconds(scenario.duration)},
              {"fault_onset_s", report.fault_onset ? json(to_seconds(*report.fault_onset)) : json(nullptr)},
              {"headline_window", headline.label},
              {"managed_avg_mA", headline.managed_avg_mA},
              {"unmanaged_avg_mA", headline.unmanaged_avg_mA},
              {"delta_mA", headline.delta_mA},
              {"windows", std::move(windows)},
              {"devices", std::move(devices)},
              {"state_changes", std::move(timeline)},
              {"commands", std::move(commands)},
              {"measurement_counts",
               {{"managed", runs.managed->measurements().size()},
                {"unmanaged", runs.unmanaged->measurements().size()}}}};
}

}  // namespace iis
