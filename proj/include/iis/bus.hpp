// Copyright 2026 The edge-iis Authors
// SPDX-License-Identifier: Apache-2.0

/// @file bus.hpp
/// @brief In-process publish/subscribe bus and a framed socket transport.

#pragma once

#include <cstdint>
#include <deque>
#include <functional>
#include <mutex>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "iis/telemetry.hpp"

namespace iis
{

/// Multi-producer/multi-consumer bus with MQTT-style topic filters.
///
/// Every published message is encoded to its wire form and decoded again on
/// delivery, so in-process runs exercise the same schema checks as a socket.
/// Delivery is a single global FIFO, which implies per-topic FIFO. In lossy
/// mode each publish is dropped independently with `drop_probability`, drawn
/// from a dedicated seeded stream.
class Bus
{
public:
  using Handler = std::function<void(const BusMessage&)>;
  using SubscriptionId = std::uint64_t;

  explicit Bus(double drop_probability = 0.0, std::uint64_t seed = 0);

  SubscriptionId subscribe(std::string filter, Handler handler);
  void unsubscribe(SubscriptionId id);

  /// Encodes and enqueues. Throws ProtocolError on a schema violation.
  /// Returns false when the message was dropped by the lossy transport.
  bool publish(const BusMessage& msg);

  /// Delivers queued messages, including ones published by handlers while
  /// pumping, until the queue is empty. Returns the number delivered. Call
  /// from a single consumer thread; publishers may be on any thread.
  std::size_t pump();

  std::uint64_t published() const;
  std::uint64_t dropped() const;

private:
  struct Subscription
  {
    SubscriptionId id;
    std::string filter;
    Handler handler;
  };

  mutable std::mutex mutex_;
  std::deque<std::string> queue_;
  std::vector<Subscription> subscriptions_;
  SubscriptionId next_id_ = 1;
  double drop_probability_;
  std::mt19937_64 drop_rng_;
  std::uint64_t published_ = 0;
  std::uint64_t dropped_ = 0;
};

/// Length-prefixed frames over a connected stream socket (or pipe pair).
/// Owns the descriptor.
class FramedSocket
{
public:
  explicit FramedSocket(int fd);
  ~FramedSocket();
  FramedSocket(FramedSocket&& other) noexcept;
  FramedSocket& operator=(FramedSocket&& other) noexcept;
  FramedSocket(const FramedSocket&) = delete;
  FramedSocket& operator=(const FramedSocket&) = delete;

  void send(const BusMessage& msg);

  /// Blocks for the next complete frame; std::nullopt on orderly EOF.
  std::optional<BusMessage> receive();

private:
  int fd_;
  FrameDecoder decoder_;
  std::deque<std::string> ready_;
};

}  // namespace iis
