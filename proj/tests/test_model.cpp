// Copyright 2026 The edge-iis Authors
// SPDX-License-Identifier: Apache-2.0

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <unistd.h>

#include <filesystem>
#include <fstream>
#include <random>

#include "fixtures.hpp"
#include "iis/health.hpp"
#include "iis/model.hpp"
#include "iis/scenario.hpp"

using namespace iis;
using nlohmann::json;

namespace
{

HealthVerdict verdict(bool available, bool correct, double t, VerdictReason reason = VerdictReason::ok)
{
  return {available, correct, from_seconds(t), reason};
}

HealthState step(const HealthState& s, std::vector<HealthVerdict>& history, const HealthVerdict& v, int r = 3)
{
  history.push_back(v);
  return health_transition(s, v, history, r);
}

json minimal_scenario()
{
  return json::parse(R"({
    "duration_s": 3600,
    "devices": [{
      "device_id": "d1",
      "energy_profile": {"sleep_current_mA": 0.01, "mcu_active_current_mA": 40, "radio_tx_current_mA": 120,
                         "radio_tx_duration_s": 0.2},
      "services": [
        {"service_id": "dht11", "sensor": {"kind": "temperature", "baseline": 22, "diurnal_amplitude": 0,
         "noise_sigma": 0.1, "unit": "C"}, "report_interval_s": 600,
         "energy_cost": {"sample_current_mA": 1, "sample_duration_s": 0.1}},
        {"service_id": "co2", "sensor": {"kind": "co2", "baseline": 650, "diurnal_amplitude": 0,
         "noise_sigma": 5, "unit": "ppm"}, "report_interval_s": 600,
         "energy_cost": {"sample_current_mA": 19, "sample_duration_s": 30}}
      ]
    }]
  })");
}

bool has_issue(const ScenarioValidation& v, const std::string& path, const std::string& fragment)
{
  for (const auto& e : v.errors) {
    if (e.path == path && e.message.find(fragment) != std::string::npos) return true;
  }
  return false;
}

}  // namespace

TEST_CASE("enum names round-trip")
{
  for (auto s : {LifecycleState::Installed, LifecycleState::Running, LifecycleState::Stopped,
                 LifecycleState::Uninstalled}) {
    CHECK(parse_lifecycle_state(to_string(s)) == s);
  }
  for (auto a : {LifecycleAction::install, LifecycleAction::start, LifecycleAction::stop, LifecycleAction::uninstall,
                 LifecycleAction::update}) {
    CHECK(parse_lifecycle_action(to_string(a)) == a);
  }
  for (auto r : {VerdictReason::ok, VerdictReason::missed_reports, VerdictReason::outlier, VerdictReason::drift}) {
    CHECK(parse_verdict_reason(to_string(r)) == r);
  }
  CHECK(parse_policy("auto_stop_on_suspicious") == Policy::auto_stop_on_suspicious);
  CHECK_FALSE(parse_policy("auto").has_value());
  CHECK_FALSE(parse_lifecycle_state("running").has_value());
}

TEST_CASE("unit conversions are exact on the millisecond and microamp grid")
{
  CHECK(from_seconds(0.2) == SimTime{200});
  CHECK(from_seconds(21600) == SimTime{21'600'000});
  CHECK(to_seconds(SimTime{1500}) == 1.5);
  CHECK(from_milliamps(0.01) == 10);
  CHECK(from_milliamps(19.0) == 19'000);
  CHECK(to_milliamps(120'000) == 120.0);
}

TEST_CASE("lifecycle graph")
{
  using S = LifecycleState;
  using A = LifecycleAction;
  const std::optional<S> absent;

  CHECK(lifecycle_allows(absent, A::install));
  CHECK(lifecycle_apply(absent, A::install) == S::Installed);
  CHECK(lifecycle_apply(S::Installed, A::start) == S::Running);
  CHECK(lifecycle_apply(S::Running, A::stop) == S::Stopped);
  CHECK(lifecycle_apply(S::Stopped, A::start) == S::Running);
  CHECK(lifecycle_apply(S::Stopped, A::uninstall) == S::Uninstalled);
  CHECK(lifecycle_apply(S::Installed, A::uninstall) == S::Uninstalled);
  for (auto s : {S::Installed, S::Running, S::Stopped}) {
    CHECK(lifecycle_allows(s, A::update));
    CHECK(lifecycle_apply(s, A::update) == s);
  }

  CHECK_FALSE(lifecycle_allows(S::Running, A::uninstall));
  CHECK_FALSE(lifecycle_allows(S::Running, A::start));
  CHECK_FALSE(lifecycle_allows(S::Installed, A::install));
  CHECK_FALSE(lifecycle_allows(S::Running, A::install));
  CHECK_FALSE(lifecycle_allows(absent, A::start));
  CHECK_THROWS_AS(lifecycle_apply(S::Running, A::uninstall), LifecycleError);

  // Nothing leaves Uninstalled except a fresh install.
  for (auto a : {A::start, A::stop, A::uninstall, A::update}) {
    CHECK_FALSE(lifecycle_allows(S::Uninstalled, a));
  }
  CHECK(lifecycle_allows(S::Uninstalled, A::install));
}

TEST_CASE("health transition examples")
{
  std::vector<HealthVerdict> history;
  HealthState s;
  s = step(s, history, verdict(true, true, 600));
  CHECK(s.state == Health::Normal);
  CHECK(s.since == SimTime{0});

  s = step(s, history, verdict(false, true, 1200, VerdictReason::missed_reports));
  CHECK(s.state == Health::Suspicious);
  CHECK(s.since == from_seconds(1200));
  CHECK(s.last_reason == VerdictReason::missed_reports);

  s = step(s, history, verdict(true, true, 1800));
  s = step(s, history, verdict(true, true, 2400));
  CHECK(s.state == Health::Suspicious);
  s = step(s, history, verdict(true, true, 3000));
  CHECK(s.state == Health::Normal);
  CHECK(s.since == from_seconds(3000));
}

TEST_CASE("any unclean verdict flips to Suspicious in one step from any state")
{
  for (Health start : {Health::Normal, Health::Suspicious}) {
    for (auto [a, c] : {std::pair{false, true}, std::pair{true, false}, std::pair{false, false}}) {
      HealthState s{start, SimTime{0}, VerdictReason::ok};
      const auto v = verdict(a, c, 600, a ? VerdictReason::outlier : VerdictReason::missed_reports);
      const std::vector<HealthVerdict> h{v};
      CHECK(health_transition(s, v, h, 3).state == Health::Suspicious);
    }
  }
}

TEST_CASE("recovery needs the full window of clean verdicts")
{
  std::mt19937_64 rng(3);
  for (int trial = 0; trial < 200; ++trial) {
    const int r = 1 + static_cast<int>(rng() % 5);
    std::vector<HealthVerdict> history;
    HealthState s;
    std::vector<bool> cleans;
    for (int i = 1; i <= 40; ++i) {
      const bool clean = rng() % 3 != 0;
      cleans.push_back(clean);
      s = step(s, history, verdict(clean, true, 600.0 * i, clean ? VerdictReason::ok : VerdictReason::missed_reports),
               r);
      // Oracle: Normal iff never unclean, or the last r verdicts are clean.
      bool expect_normal = std::all_of(cleans.begin(), cleans.end(), [](bool b) { return b; });
      if (!expect_normal && static_cast<int>(cleans.size()) >= r) {
        expect_normal = std::all_of(cleans.end() - r, cleans.end(), [](bool b) { return b; });
      }
      REQUIRE((s.state == Health::Normal) == expect_normal);
    }
  }
}

TEST_CASE("minimal scenario validates with defaults")
{
  const auto v = validate_scenario(minimal_scenario());
  REQUIRE(v.ok());
  const auto& c = *v.config;
  CHECK(c.duration == from_seconds(3600));
  CHECK(c.speedup == 360.0);
  CHECK(c.policy == Policy::manual);
  CHECK(c.detector_params == DetectorParams{});
  REQUIRE(c.devices.size() == 1);
  CHECK(c.devices[0].services[1].energy_cost.sample_duration == from_seconds(30));
  CHECK(c.devices[0].services[0].code_version == 1);
}

TEST_CASE("validation reports every problem with its path")
{
  SUBCASE("duplicate service_id")
  {
    auto j = minimal_scenario();
    j["devices"][0]["services"][1]["service_id"] = "dht11";
    const auto v = validate_scenario(j);
    CHECK_FALSE(v.ok());
    CHECK(has_issue(v, "$.devices[0].services[1].service_id", "duplicate service_id"));
  }
  SUBCASE("dangling fault reference")
  {
    auto j = minimal_scenario();
    j["faults"] = json::array({{{"device_id", "d1"}, {"service_id", "nope"}, {"kind", "dropout"}, {"start_s", 60}}});
    const auto v = validate_scenario(j);
    CHECK(has_issue(v, "$.faults[0].service_id", "unknown service reference"));
  }
  SUBCASE("non-positive durations each reported")
  {
    auto j = minimal_scenario();
    j["duration_s"] = 0;
    j["devices"][0]["services"][0]["report_interval_s"] = -5;
    const auto v = validate_scenario(j);
    CHECK(v.errors.size() >= 2);
    CHECK(has_issue(v, "$.duration_s", ""));
    CHECK(has_issue(v, "$.devices[0].services[0].report_interval_s", ""));
  }
  SUBCASE("unknown keys are rejected")
  {
    auto j = minimal_scenario();
    j["devices"][0]["colour"] = "red";
    CHECK(has_issue(validate_scenario(j), "$.devices[0].colour", "unknown key"));
  }
  SUBCASE("profile invariants")
  {
    auto j = minimal_scenario();
    j["devices"][0]["energy_profile"]["mcu_active_current_mA"] = 0.001;
    CHECK(has_issue(validate_scenario(j), "$.devices[0].energy_profile.mcu_active_current_mA", ">="));
  }
  SUBCASE("fault after the end of the run")
  {
    auto j = minimal_scenario();
    j["faults"] = json::array({{{"device_id", "d1"}, {"service_id", "co2"}, {"kind", "dropout"}, {"start_s", 3600}}});
    CHECK_FALSE(validate_scenario(j).ok());
  }
  SUBCASE("outlier probability only on offset_outlier")
  {
    auto j = minimal_scenario();
    j["faults"] = json::array({{{"device_id", "d1"},
                                {"service_id", "co2"},
                                {"kind", "drift"},
                                {"start_s", 60},
                                {"magnitude", 1},
                                {"outlier_probability", 0.5}}});
    CHECK_FALSE(validate_scenario(j).ok());
  }
  SUBCASE("activity longer than the wake period")
  {
    auto j = minimal_scenario();
    j["devices"][0]["services"][1]["report_interval_s"] = 900;
    j["devices"][0]["services"][1]["energy_cost"]["sample_duration_s"] = 400;
    // gcd(600, 900) = 300 s
    CHECK(has_issue(validate_scenario(j), "$.devices[0].services[1].energy_cost.sample_duration_s", "wake period"));
  }
  SUBCASE("wrong types")
  {
    auto j = minimal_scenario();
    j["devices"][0]["services"][0]["sensor"]["noise_sigma"] = "high";
    j["policy"] = "sometimes";
    const auto v = validate_scenario(j);
    CHECK(has_issue(v, "$.devices[0].services[0].sensor.noise_sigma", ""));
    CHECK(has_issue(v, "$.policy", ""));
  }
  SUBCASE("not an object")
  {
    CHECK_FALSE(validate_scenario(json::array()).ok());
  }
}

TEST_CASE("serialize(validate(x)) re-validates to an equal value")
{
  const auto first = validate_scenario(minimal_scenario());
  REQUIRE(first.ok());
  const auto second = validate_scenario(to_json(*first.config));
  REQUIRE(second.ok());
  CHECK(*second.config == *first.config);

  std::mt19937_64 rng(11);
  for (int i = 0; i < 50; ++i) {
    auto c = fixtures::random_scenario(rng);
    c.policy = i % 2 ? Policy::manual : Policy::auto_stop_on_suspicious;
    c.devices[0].services[0].detector_params.ph_lambda = 12.5;
    const auto v = validate_scenario(to_json(c));
    REQUIRE_MESSAGE(v.ok(), (v.errors.empty() ? "" : v.errors.front().to_string()));
    CHECK(*v.config == c);
  }
}

TEST_CASE("bundled scenario files validate")
{
  const auto paper = fixtures::paper_scenario();
  CHECK(paper.duration == from_seconds(21600));
  REQUIRE(paper.devices.size() == 1);
  CHECK(paper.devices[0].services.size() == 2);
  for (const auto& s : paper.devices[0].services) CHECK(s.report_interval == from_seconds(600));
  REQUIRE(paper.faults.size() == 1);
  CHECK(paper.faults[0].start == from_seconds(10800));

  CHECK_NOTHROW(load_scenario_file(std::string(IIS_SOURCE_DIR) + "/scenarios/smart_warehouse.json"));
}

TEST_CASE("load_scenario_file reports malformed JSON and missing files")
{
  const auto path = std::filesystem::temp_directory_path() / ("bad_scenario_" + std::to_string(::getpid()) + ".json");
  {
    std::ofstream(path) << "{ not json";
  }
  CHECK_THROWS_AS(load_scenario_file(path.string()), ScenarioError);
  std::filesystem::remove(path);
  CHECK_THROWS_AS(load_scenario_file("does/not/exist.json"), ScenarioError);
}
