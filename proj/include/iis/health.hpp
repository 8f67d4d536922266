// Copyright 2026 The edge-iis Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <span>

#include "iis/model.hpp"

namespace iis
{

/// Normal/Suspicious transition for one service.
///
/// Any verdict that is not available-and-correct yields Suspicious. Leaving
/// Suspicious requires the last `recovery_window` verdicts in `history`
/// (which must already include `verdict` as its final element) to be clean.
/// `since` only moves when the state flips.
HealthState health_transition(const HealthState& current, const HealthVerdict& verdict,
                              std::span<const HealthVerdict> history, int recovery_window);

}  // namespace iis
