// Copyright 2026 The edge-iis Authors
// SPDX-License-Identifier: Apache-2.0

#include "iis/bus.hpp"

#include <algorithm>
#include <cerrno>
#include <cstring>
#include <system_error>
#include <utility>

#include <unistd.h>

namespace iis
{

Bus::Bus(double drop_probability, std::uint64_t seed) : drop_probability_(drop_probability), drop_rng_(seed)
{
  if (drop_probability < 0.0 || drop_probability > 1.0) {
    throw std::invalid_argument("drop probability must be within [0, 1]");
  }
}

Bus::SubscriptionId Bus::subscribe(std::string filter, Handler handler)
{
  std::lock_guard lock(mutex_);
  const auto id = next_id_++;
  subscriptions_.push_back({id, std::move(filter), std::move(handler)});
  return id;
}

void Bus::unsubscribe(SubscriptionId id)
{
  std::lock_guard lock(mutex_);
  std::erase_if(subscriptions_, [id](const Subscription& s) { return s.id == id; });
}

bool Bus::publish(const BusMessage& msg)
{
  std::string bytes = encode(msg);
  std::lock_guard lock(mutex_);
  ++published_;
  if (drop_probability_ > 0.0) {
    std::uniform_real_distribution<double> u(0.0, 1.0);
    if (u(drop_rng_) < drop_probability_) {
      ++dropped_;
      return false;
    }
  }
  queue_.push_back(std::move(bytes));
  return true;
}

std::size_t Bus::pump()
{
  std::size_t delivered = 0;
  while (true) {
    std::string bytes;
    std::vector<Handler> targets;
    BusMessage msg;
    {
      std::lock_guard lock(mutex_);
      if (queue_.empty()) break;
      bytes = std::move(queue_.front());
      queue_.pop_front();
      msg = decode(bytes);
      for (const auto& s : subscriptions_) {
        if (topic_matches(s.filter, msg.topic)) targets.push_back(s.handler);
      }
    }
    for (const auto& h : targets) {
      h(msg);
    }
    ++delivered;
  }
  return delivered;
}

std::uint64_t Bus::published() const
{
  std::lock_guard lock(mutex_);
  return published_;
}

std::uint64_t Bus::dropped() const
{
  std::lock_guard lock(mutex_);
  return dropped_;
}

FramedSocket::FramedSocket(int fd) : fd_(fd) {}

FramedSocket::~FramedSocket()
{
  if (fd_ >= 0) ::close(fd_);
}

FramedSocket::FramedSocket(FramedSocket&& other) noexcept
    : fd_(std::exchange(other.fd_, -1)), decoder_(std::move(other.decoder_)), ready_(std::move(other.ready_))
{
}

FramedSocket& FramedSocket::operator=(FramedSocket&& other) noexcept
{
  if (this != &other) {
    if (fd_ >= 0) ::close(fd_);
    fd_ = std::exchange(other.fd_, -1);
    decoder_ = std::move(other.decoder_);
    ready_ = std::move(other.ready_);
  }
  return *this;
}

void FramedSocket::send(const BusMessage& msg)
{
  const std::string bytes = frame(encode(msg));
  std::size_t off = 0;
  while (off < bytes.size()) {
    const ssize_t n = ::write(fd_, bytes.data() + off, bytes.size() - off);
    if (n < 0) {
      if (errno == EINTR) continue;
      throw std::system_error(errno, std::generic_category(), "socket write");
    }
    off += static_cast<std::size_t>(n);
  }
}

std::optional<BusMessage> FramedSocket::receive()
{
  char buf[4096];
  while (ready_.empty()) {
    const ssize_t n = ::read(fd_, buf, sizeof buf);
    if (n < 0) {
      if (errno == EINTR) continue;
      throw std::system_error(errno, std::generic_category(), "socket read");
    }
    if (n == 0) {
      if (decoder_.buffered() != 0) throw ProtocolError("truncated frame at end of stream");
      return std::nullopt;
    }
    for (auto& f : decoder_.feed(std::string_view(buf, static_cast<std::size_t>(n)))) {
      ready_.push_back(std::move(f));
    }
  }
  auto body = std::move(ready_.front());
  ready_.pop_front();
  return decode(body);
}

}  // namespace iis
