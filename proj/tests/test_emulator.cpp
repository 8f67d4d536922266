// Copyright 2026 The edge-iis Authors
// SPDX-License-Identifier: Apache-2.0

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <random>

#include "fixtures.hpp"
#include "iis/emulator.hpp"
#include "iis/rng.hpp"
#include "oracles.hpp"

using namespace iis;

namespace
{

SensorModel sensor(double baseline, double amplitude = 0.0, double sigma = 0.0)
{
  return {SensorKind::generic, baseline, amplitude, sigma, "u"};
}

std::vector<Measurement> run_ticks(DeviceRuntime& dev, int wakes)
{
  std::vector<Measurement> out;
  const auto period = dev.wake_period();
  for (int i = 1; i <= wakes; ++i) {
    auto r = dev.tick(period * i);
    out.insert(out.end(), r.measurements.begin(), r.measurements.end());
  }
  return out;
}

}  // namespace

TEST_CASE("generate_reading closed forms")
{
  SensorRng rng(1);
  CHECK(generate_reading(sensor(22.0), from_seconds(600), nullptr, rng) == 22.0);

  for (double t : {0.0, 600.0, 21600.0, 43200.0, 64800.0}) {
    CHECK(generate_reading(sensor(10.0, 2.0), from_seconds(t), nullptr, rng) ==
          doctest::Approx(oracle::clean_reading(10.0, 2.0, t)).epsilon(1e-12));
  }

  auto drift = fixtures::fault("d", "s", FaultKind::drift, 1000, 10.0);
  CHECK(generate_reading(sensor(20.0), from_seconds(1000 + 1800), &drift, rng) == doctest::Approx(25.0));

  auto stuck = fixtures::fault("d", "s", FaultKind::stuck, 100);
  for (double t : {100.0, 700.0, 5000.0}) {
    CHECK(generate_reading(sensor(20.0, 0, 1.0), from_seconds(t), &stuck, rng, 21.7) == 21.7);
  }

  auto outlier = fixtures::fault("d", "s", FaultKind::offset_outlier, 0, 400.0);
  outlier.outlier_probability = 1.0;
  CHECK(generate_reading(sensor(650.0), from_seconds(600), &outlier, rng) == 1050.0);
  outlier.outlier_probability = 0.0;
  CHECK(generate_reading(sensor(650.0), from_seconds(600), &outlier, rng) == 650.0);
}

TEST_CASE("noise is the service's own seeded gaussian stream")
{
  SensorRng a(service_stream_seed(9, "co2"));
  SensorRng b(service_stream_seed(9, "co2"));
  std::mt19937_64 ref(service_stream_seed(9, "co2"));
  std::normal_distribution<double> normal(0.0, 1.0);
  for (int i = 0; i < 100; ++i) {
    const double x = generate_reading(sensor(5.0, 0, 2.0), from_seconds(600.0 * i), nullptr, a);
    CHECK(x == generate_reading(sensor(5.0, 0, 2.0), from_seconds(600.0 * i), nullptr, b));
    CHECK(x == 5.0 + 2.0 * normal(ref));
  }
  CHECK(service_stream_seed(9, "co2") != service_stream_seed(9, "dht11"));
  CHECK(service_stream_seed(9, "co2") != service_stream_seed(10, "co2"));
}

TEST_CASE("lifecycle on a device")
{
  DeviceRuntime dev(fixtures::device("d", {fixtures::service("dht11")}), 1, false);
  CHECK(dev.status("dht11")->state == LifecycleState::Installed);
  CHECK(dev.tick(from_seconds(600)).measurements.empty());

  auto co2 = fixtures::service("co2");
  CHECK(dev.install_service(co2, SimTime{0}).state == LifecycleState::Installed);
  CHECK_THROWS_AS(dev.install_service(co2, SimTime{0}), LifecycleError);
  CHECK_THROWS_AS(dev.uninstall_service("nope", SimTime{0}), LifecycleError);

  dev.start_service("co2", SimTime{0});
  CHECK_THROWS_AS(dev.uninstall_service("co2", SimTime{0}), LifecycleError);  // must stop first
  dev.stop_service("co2", SimTime{0});
  dev.uninstall_service("co2", SimTime{0});
  CHECK_THROWS_AS(dev.start_service("co2", SimTime{0}), LifecycleError);

  auto v1 = co2;
  CHECK_THROWS_AS(dev.install_service(v1, SimTime{0}), LifecycleError);  // version must rise
  auto v2 = co2;
  v2.code_version = 2;
  const auto ev = dev.install_service(v2, SimTime{0});
  CHECK(ev.state == LifecycleState::Installed);
  CHECK(ev.code_version == 2);

  auto same = v2;
  CHECK_THROWS_AS(dev.update_service(same, SimTime{0}), LifecycleError);
  auto v3 = v2;
  v3.code_version = 3;
  dev.start_service("co2", SimTime{0});
  dev.stop_service("co2", SimTime{0});
  const auto up = dev.update_service(v3, SimTime{0});
  CHECK(up.state == LifecycleState::Stopped);
  CHECK(up.code_version == 3);
}

TEST_CASE("apply checks descriptors")
{
  DeviceRuntime dev(fixtures::device("d", {fixtures::service("a")}), 1);
  CHECK_THROWS_AS(dev.apply(LifecycleAction::install, "b", std::nullopt, SimTime{0}), LifecycleError);
  CHECK_THROWS_AS(dev.apply(LifecycleAction::stop, "a", fixtures::service("a"), SimTime{0}), LifecycleError);
  CHECK_THROWS_AS(dev.apply(LifecycleAction::install, "b", fixtures::service("c"), SimTime{0}), LifecycleError);
  CHECK(dev.apply(LifecycleAction::stop, "a", std::nullopt, SimTime{0}).state == LifecycleState::Stopped);
}

TEST_CASE("a new interval may not shrink the wake period below an activity")
{
  auto slow = fixtures::service("slow", 600);
  slow.energy_cost.sample_duration = from_seconds(40);
  DeviceRuntime dev(fixtures::device("d", {slow}), 1);
  auto fast = fixtures::service("fast", 30);
  CHECK_THROWS_AS(dev.install_service(fast, SimTime{0}), LifecycleError);
  auto ok = fixtures::service("ok", 60);
  CHECK_NOTHROW(dev.install_service(ok, SimTime{0}));
  CHECK(dev.wake_period() == from_seconds(60));
}

TEST_CASE("tick emission")
{
  DeviceRuntime dev(fixtures::device("d", {fixtures::service("dht11"), fixtures::service("co2")}), 4);

  SUBCASE("two running services, shared interval")
  {
    const auto r = dev.tick(from_seconds(600));
    REQUIRE(r.measurements.size() == 2);
    CHECK(r.measurements[0].service_id == "co2");  // sorted by service_id
    CHECK(r.measurements[1].service_id == "dht11");
    // wake + (sample + tx) per service
    CHECK(r.energy.size() == 5);
  }
  SUBCASE("stopped service contributes nothing")
  {
    dev.stop_service("co2", SimTime{0});
    const auto r = dev.tick(from_seconds(600));
    REQUIRE(r.measurements.size() == 1);
    CHECK(r.measurements[0].service_id == "dht11");
    for (const auto& e : r.energy) CHECK(e.attributed_service != std::optional<std::string>("co2"));
  }
  SUBCASE("dropout still pays the sensor sample")
  {
    dev.inject_fault(fixtures::fault("d", "co2", FaultKind::dropout, 0));
    const auto r = dev.tick(from_seconds(600));
    REQUIRE(r.measurements.size() == 1);
    int co2_samples = 0, co2_tx = 0;
    for (const auto& e : r.energy) {
      if (e.attributed_service != std::optional<std::string>("co2")) continue;
      co2_samples += e.kind == EnergyEventKind::sensor_sample;
      co2_tx += e.kind == EnergyEventKind::radio_tx;
    }
    CHECK(co2_samples == 1);
    CHECK(co2_tx == 0);
  }
  SUBCASE("misaligned wake is rejected")
  {
    CHECK_THROWS(dev.tick(from_seconds(601)));
    CHECK_THROWS(dev.tick(SimTime{0}));
  }
  SUBCASE("unknown fault target")
  {
    CHECK_THROWS_AS(dev.inject_fault(fixtures::fault("d", "nope", FaultKind::dropout, 0)), std::invalid_argument);
  }
}

TEST_CASE("measurement count per service is floor(D/I)")
{
  std::mt19937_64 rng(5);
  for (int trial = 0; trial < 20; ++trial) {
    const double intervals[] = {300, 600, 900, 1200};
    std::vector<ServiceDescriptor> services;
    for (int s = 0; s < 3; ++s) services.push_back(fixtures::service("s" + std::to_string(s), intervals[rng() % 4]));
    DeviceRuntime dev(fixtures::device("d", services), rng());
    const std::int64_t duration = 3600'000 * static_cast<std::int64_t>(1 + rng() % 10) + 123'000;
    std::map<std::string, int> counts;
    for (SimTime t = dev.next_wake_after(SimTime{0}); t.count() <= duration; t = dev.next_wake_after(t)) {
      for (const auto& m : dev.tick(t).measurements) ++counts[m.service_id];
    }
    for (const auto& s : services) {
      CHECK(counts[s.service_id] == duration / s.report_interval.count());
    }
  }
}

TEST_CASE("stop then start resumes on the next own-interval boundary")
{
  DeviceRuntime dev(fixtures::device("d", {fixtures::service("a", 600), fixtures::service("b", 900)}), 2);
  CHECK(dev.wake_period() == from_seconds(300));
  dev.tick(from_seconds(300));
  dev.tick(from_seconds(600));
  dev.stop_service("b", from_seconds(600));
  CHECK(dev.wake_period() == from_seconds(300));  // stopped services keep their slot
  CHECK(dev.tick(from_seconds(900)).measurements.empty());
  dev.start_service("b", from_seconds(900));
  std::vector<SimTime> b_times;
  for (int k = 4; k <= 12; ++k) {
    for (const auto& m : dev.tick(from_seconds(300.0 * k)).measurements) {
      if (m.service_id == "b") b_times.push_back(m.timestamp);
    }
  }
  CHECK(b_times == std::vector<SimTime>{from_seconds(1800), from_seconds(2700), from_seconds(3600)});
}

TEST_CASE("an uninstall that widens the wake period still completes the current wake")
{
  DeviceRuntime dev(fixtures::device("d", {fixtures::service("a", 900), fixtures::service("b", 600)}), 2);
  dev.stop_service("b", from_seconds(4500));
  dev.uninstall_service("b", from_seconds(4800));
  CHECK(dev.wake_period() == from_seconds(900));
  const auto tick = dev.tick(from_seconds(4800));  // the wake the command arrived in
  CHECK(tick.measurements.empty());
  CHECK(dev.next_wake_after(from_seconds(4800)) == from_seconds(5400));
  CHECK_THROWS_AS(dev.tick(from_seconds(5100)), std::invalid_argument);
  CHECK(dev.tick(from_seconds(5400)).measurements.size() == 1);
}

TEST_CASE("two faults on distinct services act independently")
{
  auto dev_desc = fixtures::device("d", {fixtures::service("a", 600, 20, 0.5), fixtures::service("b", 600, 50, 0.5)});
  auto fa = fixtures::fault("d", "a", FaultKind::drift, 1200, 6.0);
  auto fb = fixtures::fault("d", "b", FaultKind::offset_outlier, 1800, 100.0);

  DeviceRuntime only_a(dev_desc, 3), only_b(dev_desc, 3), both(dev_desc, 3);
  only_a.inject_fault(fa);
  only_b.inject_fault(fb);
  both.inject_fault(fa);
  both.inject_fault(fb);
  const auto ta = run_ticks(only_a, 20), tb = run_ticks(only_b, 20), tboth = run_ticks(both, 20);
  REQUIRE(tboth.size() == ta.size());
  for (std::size_t i = 0; i < tboth.size(); ++i) {
    const auto& expect = tboth[i].service_id == "a" ? ta[i] : tb[i];
    CHECK(tboth[i] == expect);
  }
}

TEST_CASE("lifecycle actions never change a sibling's trace")
{
  std::mt19937_64 rng(8);
  for (int trial = 0; trial < 40; ++trial) {
    auto desc = fixtures::device("d", {fixtures::service("a", 300, 1, 1), fixtures::service("b", 600, 2, 1),
                                       fixtures::service("c", 900, 3, 1)});
    const std::uint64_t seed = rng();
    DeviceRuntime control(desc, seed), acted(desc, seed);
    const int action_at = 1 + static_cast<int>(rng() % 30);
    std::vector<Measurement> mc, ma;
    for (int k = 1; k <= 40; ++k) {
      const SimTime t = from_seconds(300.0 * k);
      if (k == action_at) {
        switch (rng() % 3) {
          case 0:
            acted.stop_service("b", t);
            break;
          case 1: {
            auto up = desc.services[1];
            up.code_version = 2;
            up.sensor.baseline = 99;
            acted.update_service(up, t);
            break;
          }
          default:
            acted.stop_service("b", t);
            acted.uninstall_service("b", t);
        }
      }
      for (auto& m : control.tick(t).measurements) mc.push_back(m);
      for (auto& m : acted.tick(t).measurements) ma.push_back(m);
    }
    auto only = [](const std::vector<Measurement>& v, const std::string& id) {
      std::vector<std::pair<SimTime, double>> out;
      for (const auto& m : v) {
        if (m.service_id == id) out.emplace_back(m.timestamp, m.value);
      }
      return out;
    };
    CHECK(only(mc, "a") == only(ma, "a"));
    CHECK(only(mc, "c") == only(ma, "c"));
  }
}
