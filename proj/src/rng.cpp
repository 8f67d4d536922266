// Copyright 2026 The edge-iis Authors
// SPDX-License-Identifier: Apache-2.0

#include "iis/rng.hpp"

namespace iis
{

std::uint64_t splitmix64(std::uint64_t x)
{
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

std::uint64_t fnv1a(std::string_view s)
{
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::uint64_t service_stream_seed(std::uint64_t device_seed, std::string_view service_id)
{
  return splitmix64(splitmix64(device_seed) ^ fnv1a(service_id));
}

std::uint64_t mix_seeds(std::uint64_t a, std::uint64_t b)
{
  return splitmix64(a ^ splitmix64(b));
}

}  // namespace iis
