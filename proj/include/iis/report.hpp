// Copyright 2026 The edge-iis Authors
// SPDX-License-Identifier: Apache-2.0

/// @file report.hpp
/// @brief Run output files: measurements.csv, energy.csv, events.log, summary.json.

#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "iis/experiment.hpp"

namespace iis
{

/// Shortest decimal text that parses back to the same double.
std::string format_double(double v);

void write_measurements_csv(std::ostream& out, const std::vector<const Simulation*>& runs);
void write_energy_csv(std::ostream& out, const std::vector<const Simulation*>& runs);
void write_events_log(std::ostream& out, const EventLog& log);

/// Writes the four output files into `dir` (created if missing).
void write_run_outputs(const std::filesystem::path& dir, const VariantRuns& runs, std::optional<std::uint64_t> seed);

}  // namespace iis
