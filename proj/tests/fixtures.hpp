// Copyright 2026 The edge-iis Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <random>
#include <string>
#include <vector>

#include "iis/model.hpp"
#include "iis/scenario.hpp"
#include "iis/telemetry.hpp"

namespace fixtures
{

inline iis::ServiceDescriptor service(std::string id, double interval_s = 600, double baseline = 20.0,
                                      double sigma = 0.1)
{
  iis::ServiceDescriptor s;
  s.service_id = std::move(id);
  s.sensor.kind = iis::SensorKind::generic;
  s.sensor.baseline = baseline;
  s.sensor.noise_sigma = sigma;
  s.sensor.unit = "u";
  s.report_interval = iis::from_seconds(interval_s);
  s.code_version = 1;
  s.energy_cost.sample_current_uA = 1000;
  s.energy_cost.sample_duration = iis::SimTime{100};
  return s;
}

inline iis::EnergyProfile calibrated_profile()
{
  iis::EnergyProfile p;
  p.sleep_current_uA = 10;
  p.mcu_active_current_uA = 40'000;
  p.wake_duration = iis::SimTime{2'000};
  p.radio_tx_current_uA = 120'000;
  p.radio_tx_duration = iis::SimTime{200};
  return p;
}

inline iis::DeviceDescriptor device(std::string id, std::vector<iis::ServiceDescriptor> services,
                                    std::uint64_t seed = 1)
{
  iis::DeviceDescriptor d;
  d.device_id = std::move(id);
  d.services = std::move(services);
  d.energy_profile = calibrated_profile();
  d.rng_seed = seed;
  return d;
}

inline iis::ScenarioConfig scenario(std::vector<iis::DeviceDescriptor> devices, double duration_s)
{
  iis::ScenarioConfig c;
  c.devices = std::move(devices);
  c.duration = iis::from_seconds(duration_s);
  return c;
}

inline iis::FaultSpec fault(std::string device, std::string svc, iis::FaultKind kind, double start_s,
                            double magnitude = 0.0)
{
  iis::FaultSpec f;
  f.device_id = std::move(device);
  f.service_id = std::move(svc);
  f.kind = kind;
  f.start = iis::from_seconds(start_s);
  f.magnitude = magnitude;
  return f;
}

/// scenarios/paper_experiment.json, located via the source tree.
inline iis::ScenarioConfig paper_scenario()
{
  return iis::load_scenario_file(std::string(IIS_SOURCE_DIR) + "/scenarios/paper_experiment.json");
}

/// Random multi-device scenario with mixed intervals and optional faults.
inline iis::ScenarioConfig random_scenario(std::mt19937_64& rng)
{
  auto pick = [&](int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(rng); };
  const double intervals[] = {300, 600, 900, 1200};
  const iis::FaultKind kinds[] = {iis::FaultKind::dropout, iis::FaultKind::stuck, iis::FaultKind::offset_outlier,
                                  iis::FaultKind::drift};
  iis::ScenarioConfig c;
  c.duration = iis::from_seconds(3600.0 * pick(2, 8));
  const int n_devices = pick(1, 3);
  for (int d = 0; d < n_devices; ++d) {
    std::vector<iis::ServiceDescriptor> services;
    const int n_services = pick(2, 4);
    for (int s = 0; s < n_services; ++s) {
      auto svc = service("svc" + std::to_string(s), intervals[pick(0, 3)], pick(0, 1000) / 10.0, pick(0, 50) / 10.0);
      svc.sensor.diurnal_amplitude = pick(0, 30) / 10.0;
      svc.energy_cost.sample_current_uA = pick(0, 30'000);
      svc.energy_cost.sample_duration = iis::SimTime{pick(0, 60'000)};
      services.push_back(svc);
    }
    auto dev = device("dev" + std::to_string(d), services, rng());
    c.devices.push_back(dev);
    if (pick(0, 1) == 1) {
      const auto& target = dev.services[static_cast<std::size_t>(pick(0, n_services - 1))];
      auto f = fault(dev.device_id, target.service_id, kinds[pick(0, 3)],
                     pick(1, static_cast<int>(iis::to_seconds(c.duration)) - 1), pick(1, 500));
      if (f.kind == iis::FaultKind::offset_outlier) f.outlier_probability = pick(0, 10) / 10.0;
      c.faults.push_back(f);
    }
  }
  return c;
}

/// Valid bus message of a random kind with random ids, times and values.
inline std::string random_id(std::mt19937_64& rng)
{
  static const std::string alphabet = "abcdefghijklmnopqrstuvwxyz0123456789-_.";
  std::string s;
  const std::size_t n = 1 + rng() % 12;
  for (std::size_t i = 0; i < n; ++i) s += alphabet[rng() % alphabet.size()];
  return s;
}

inline iis::SimTime random_time(std::mt19937_64& rng)
{
  return iis::SimTime{static_cast<std::int64_t>(rng() % 10'000'000'000ULL)};
}

inline iis::BusMessage random_message(std::mt19937_64& rng)
{
  const std::string dev = random_id(rng);
  const std::string svc = random_id(rng);
  const iis::SimTime at = random_time(rng);
  switch (rng() % 4) {
    case 0: {
      std::uniform_real_distribution<double> v(-1e6, 1e6);
      return iis::make_message(iis::Measurement{dev, svc, random_time(rng), v(rng), static_cast<std::uint32_t>(rng() % 50)}, at);
    }
    case 1: {
      iis::CommandPayload c{static_cast<iis::LifecycleAction>(rng() % 5), random_id(rng), std::nullopt};
      if (c.action == iis::LifecycleAction::install || c.action == iis::LifecycleAction::update) {
        c.descriptor = service(svc, 300.0 * static_cast<double>(1 + rng() % 4));
        c.descriptor->code_version = static_cast<std::uint32_t>(1 + rng() % 9);
      }
      return iis::make_message(dev, svc, c, at);
    }
    case 2: {
      iis::AckPayload a{random_id(rng), static_cast<iis::LifecycleAction>(rng() % 5), rng() % 2 == 0, std::nullopt,
                   static_cast<std::uint32_t>(rng() % 9), {}};
      if (a.ok) a.state = static_cast<iis::LifecycleState>(rng() % 4);
      else a.error = "refused " + random_id(rng);
      return iis::make_message(dev, svc, a, at);
    }
    default: {
      iis::EnergyWindowPayload e;
      e.window_start = random_time(rng);
      e.window_end = e.window_start + iis::SimTime{600'000};
      for (int i = 0, n = static_cast<int>(rng() % 4); i < n; ++i) {
        iis::EnergyEvent ev{dev, e.window_end, static_cast<iis::EnergyEventKind>(rng() % 3),
                       iis::SimTime{static_cast<std::int64_t>(rng() % 50'000)},
                       static_cast<iis::Microamps>(rng() % 200'000), std::nullopt};
        if (ev.kind != iis::EnergyEventKind::wake_window) ev.attributed_service = svc;
        e.events.push_back(ev);
        e.charge += ev.charge();
      }
      return iis::make_message(dev, e, at);
    }
  }
}

}  // namespace fixtures
