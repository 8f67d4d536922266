// Copyright 2026 The edge-iis Authors
// SPDX-License-Identifier: Apache-2.0

/// @file experiment.hpp
/// @brief Managed vs. unmanaged comparison runs and their average currents.

#pragma once

#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "iis/simulation.hpp"

namespace iis
{

struct WindowComparison
{
  std::string label;
  SimTime from{0};
  SimTime to{0};
  Charge managed_charge;
  Charge unmanaged_charge;
  double managed_avg_mA = 0.0;
  double unmanaged_avg_mA = 0.0;
  double delta_mA = 0.0;  ///< unmanaged - managed
};

struct DeviceComparison
{
  std::string device_id;
  std::vector<WindowComparison> windows;  ///< full, pre_fault, post_fault (when a fault exists)
};

struct ComparisonReport
{
  std::optional<SimTime> fault_onset;
  std::vector<DeviceComparison> devices;
  /// Fleet totals (sum of device currents) per labelled window.
  std::vector<WindowComparison> fleet;

  const WindowComparison* fleet_window(const std::string& label) const;
  /// Post-fault window when the scenario has faults, otherwise the full run.
  const WindowComparison& headline() const;
};

struct VariantRuns
{
  std::unique_ptr<Simulation> managed;
  std::unique_ptr<Simulation> unmanaged;
  ComparisonReport report;
};

/// Windows [0,D], [0,F] and [F,D] where F is the earliest fault start
/// rounded up to each device's next wake boundary.
ComparisonReport compare(const Simulation& managed, const Simulation& unmanaged);

/// Runs both variants with the same seed. The managed run is paced at
/// `speedup` when given; the baseline always runs unpaced.
VariantRuns run_variants(const ScenarioConfig& scenario, RunOptions managed_options,
                         std::optional<double> paced_speedup = std::nullopt);

class ExperimentShapeError : public std::invalid_argument
{
public:
  using std::invalid_argument::invalid_argument;
};

/// The two-test energy experiment: one device with a climate service and a
/// CO2 service on a shared interval, a single CO2 fault. `profile` replaces
/// the device's energy profile; the managed variant auto-stops (and
/// uninstalls) the Suspicious service. Throws ExperimentShapeError when the
/// scenario does not have that shape.
VariantRuns run_paper_experiment(const EnergyProfile& profile, ScenarioConfig scenario, std::uint64_t seed);

/// Calibrated default device profile (see docs/energy-model.md).
EnergyProfile default_calibrated_profile();

nlohmann::json to_json(const WindowComparison& w);
nlohmann::json summary_json(const VariantRuns& runs, std::optional<std::uint64_t> seed);

}  // namespace iis
