// Copyright 2026 The edge-iis Authors
// SPDX-License-Identifier: Apache-2.0

#include "iis/health.hpp"

#include <algorithm>

namespace iis
{

HealthState health_transition(const HealthState& current, const HealthVerdict& verdict,
                              std::span<const HealthVerdict> history, int recovery_window)
{
  HealthState next = current;
  next.last_reason = verdict.reason;

  Health target = Health::Normal;
  if (!verdict.clean()) {
    target = Health::Suspicious;
  } else if (current.state == Health::Suspicious) {
    const auto needed = static_cast<std::size_t>(std::max(recovery_window, 1));
    const bool recovered =
        history.size() >= needed &&
        std::all_of(history.end() - static_cast<std::ptrdiff_t>(needed), history.end(),
                    [](const HealthVerdict& v) { return v.clean(); });
    target = recovered ? Health::Normal : Health::Suspicious;
  }

  if (target != current.state) {
    next.state = target;
    next.since = verdict.evaluated_at;
  }
  return next;
}

}  // namespace iis
