// Copyright 2026 The edge-iis Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <random>
#include <string_view>

namespace iis
{

std::uint64_t splitmix64(std::uint64_t x);

/// FNV-1a over the bytes of `s`.
std::uint64_t fnv1a(std::string_view s);

/// Seed of a service's private stream: hash(device seed, service_id).
std::uint64_t service_stream_seed(std::uint64_t device_seed, std::string_view service_id);

/// Combines a run-level seed with a device's own rng_seed.
std::uint64_t mix_seeds(std::uint64_t a, std::uint64_t b);

/// One independent random stream. Never shared between services.
class SensorRng
{
public:
  explicit SensorRng(std::uint64_t seed) : engine_(seed) {}

  double gaussian() { return normal_(engine_); }
  double uniform() { return uniform_(engine_); }

private:
  std::mt19937_64 engine_;
  std::normal_distribution<double> normal_{0.0, 1.0};
  std::uniform_real_distribution<double> uniform_{0.0, 1.0};
};

}  // namespace iis
