// Copyright 2026 The edge-iis Authors
// SPDX-License-Identifier: Apache-2.0

/// @file replay.hpp
/// @brief Re-derive health state changes from a recorded events.log.
///
/// The control plane is rebuilt from the run_start line and fed the logged
/// inputs in order (ingested measurements, acks, evaluation ticks, operator
/// commands and timeout checks). Its state changes are then compared with the
/// state_change lines of the log.

#pragma once

#include <cstddef>
#include <istream>
#include <optional>
#include <string>
#include <vector>

#include "iis/control_plane.hpp"

namespace iis
{

struct ReplayResult
{
  std::vector<StateChange> logged;
  std::vector<StateChange> recomputed;
  std::size_t lines_read = 0;
  /// 1-based line number of the first unparseable line; replay stops there.
  std::optional<std::size_t> corrupt_line;
  std::string error;

  bool matches() const { return !corrupt_line && error.empty() && logged == recomputed; }
};

ReplayResult replay_events(std::istream& in);
ReplayResult replay_file(const std::string& path);

}  // namespace iis
