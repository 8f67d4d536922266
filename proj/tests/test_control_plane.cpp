// Copyright 2026 The edge-iis Authors
// SPDX-License-Identifier: Apache-2.0

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <limits>
#include <random>

#include "fixtures.hpp"
#include "iis/control_plane.hpp"
#include "oracles.hpp"

using namespace iis;
using nlohmann::json;

namespace
{

struct Harness
{
  ScenarioConfig scenario;
  std::vector<BusMessage> sent;
  std::vector<StreamEvent> events;
  ControlPlane cp;

  explicit Harness(Policy policy = Policy::manual, ScenarioConfig s = default_scenario())
      : scenario(std::move(s)),
        cp(scenario, options(policy), [this](const BusMessage& m) { sent.push_back(m); },
           [this](SimTime at, std::string type, json body) {
             events.push_back({events.size() + 1, at, std::move(type), std::move(body)});
           })
  {
  }

  static ScenarioConfig default_scenario()
  {
    return fixtures::scenario({fixtures::device("d", {fixtures::service("co2", 600, 650, 5),
                                                      fixtures::service("dht11", 600, 22, 0.1)})},
                              21600);
  }

  static ControlPlaneOptions options(Policy p)
  {
    ControlPlaneOptions o;
    o.policy = p;
    return o;
  }

  IngestOutcome feed(const std::string& svc, double t, double value)
  {
    return cp.ingest({"d", svc, from_seconds(t), value, 1});
  }

  void ack_all(double t)
  {
    auto pending = std::move(sent);
    sent.clear();
    for (const auto& m : pending) {
      const auto topic = parse_topic(m.topic);
      const auto cmd = command_from(m);
      AckPayload ack{cmd.command_id, cmd.action, true, std::nullopt, 1, {}};
      const auto* rec = cp.record(topic.device_id, topic.service_id);
      ack.state = lifecycle_apply(rec ? rec->lifecycle : std::nullopt, cmd.action);
      if (cmd.descriptor) ack.code_version = cmd.descriptor->code_version;
      cp.on_ack(topic.device_id, topic.service_id, ack, from_seconds(t));
    }
  }

  int count(const std::string& type) const
  {
    return static_cast<int>(std::count_if(events.begin(), events.end(), [&](const auto& e) { return e.type == type; }));
  }
};

}  // namespace

TEST_CASE("ingest cleaning")
{
  Harness h;
  CHECK(h.feed("co2", 600, 650) == IngestOutcome::accepted);
  CHECK(h.feed("co2", 300, 650) == IngestOutcome::out_of_order);
  CHECK(h.feed("co2", 600, 651) == IngestOutcome::duplicate);
  CHECK(h.cp.record("d", "co2")->window.size() == 1);
  CHECK(h.cp.ingest({"d", "ghost", from_seconds(600), 1.0, 1}) == IngestOutcome::unknown_service);

  CHECK(h.feed("co2", 1200, std::numeric_limits<double>::quiet_NaN()) == IngestOutcome::non_finite);
  CHECK(h.cp.record("d", "co2")->vote_count() == 1);
  CHECK(h.cp.record("d", "co2")->window.size() == 1);
  CHECK(h.cp.record("d", "co2")->last_measurement_at == from_seconds(600));  // not presence
  CHECK(h.feed("co2", 1800, std::numeric_limits<double>::infinity()) == IngestOutcome::non_finite);
  CHECK(h.cp.record("d", "co2")->vote_count() == 2);
}

TEST_CASE("availability examples")
{
  Harness h;
  h.feed("co2", 600, 650);
  const auto* rec = h.cp.record("d", "co2");
  CHECK(check_availability(*rec, from_seconds(1100)));  // 500 s old
  CHECK(check_availability(*rec, from_seconds(1500)));  // exactly 1.5 intervals
  CHECK_FALSE(check_availability(*rec, from_seconds(1501)));

  // zero history: available until the first deadline passes
  const auto* fresh = h.cp.record("d", "dht11");
  CHECK(check_availability(*fresh, from_seconds(900)));
  CHECK_FALSE(check_availability(*fresh, from_seconds(901)));

  // no report for 2 intervals with k=2: unavailable at the second miss
  CHECK(h.cp.evaluate("d", "co2", from_seconds(1800))->available);  // age 1200 > 900: miss 1
  const auto v = h.cp.evaluate("d", "co2", from_seconds(2400));      // miss 2
  CHECK_FALSE(v->available);
  CHECK(v->correct);
  CHECK(v->reason == VerdictReason::missed_reports);
  CHECK(h.cp.record("d", "co2")->health.state == Health::Suspicious);
}

TEST_CASE("evaluate examples")
{
  Harness h;
  std::mt19937_64 rng(4);
  std::normal_distribution<double> noise(0.0, 0.1);
  for (int k = 1; k <= 30; ++k) {
    h.feed("dht11", 600.0 * k, 22 + noise(rng));
    const auto v = h.cp.evaluate("d", "dht11", from_seconds(600.0 * k));
    REQUIRE(v);
    CHECK(v->available);
    CHECK(v->correct);
  }
  CHECK(h.cp.record("d", "dht11")->health.state == Health::Normal);

  // persistent +5 offset, fifty sigma
  Health state = Health::Normal;
  VerdictReason reason = VerdictReason::ok;
  for (int k = 31; k <= 34; ++k) {
    h.feed("dht11", 600.0 * k, 27 + noise(rng));
    const auto v = h.cp.evaluate("d", "dht11", from_seconds(600.0 * k));
    state = h.cp.record("d", "dht11")->health.state;
    if (!v->correct) reason = v->reason;
  }
  CHECK(state == Health::Suspicious);
  CHECK(reason == VerdictReason::outlier);
  CHECK(h.count("state_change") == 1);
  CHECK(h.count("recommendation") == 1);
  CHECK(h.sent.empty());  // manual policy never commands
}

TEST_CASE("evaluate_due picks services whose interval divides now")
{
  auto s = fixtures::scenario({fixtures::device("d", {fixtures::service("a", 300), fixtures::service("b", 900)})},
                              3600);
  Harness h(Policy::manual, s);
  h.cp.evaluate_due("d", from_seconds(300));
  CHECK(h.count("verdict") == 1);
  h.cp.evaluate_due("d", from_seconds(900));
  CHECK(h.count("verdict") == 3);
  CHECK(h.count("eval_tick") == 2);
}

TEST_CASE("orchestrate validation")
{
  Harness h;
  CHECK(h.cp.orchestrate("nope", "co2", LifecycleAction::stop, std::nullopt, SimTime{0}).error ==
        OrchestrationError::unknown_target);
  CHECK(h.cp.orchestrate("d", "nope", LifecycleAction::stop, std::nullopt, SimTime{0}).error ==
        OrchestrationError::unknown_target);
  CHECK(h.cp.orchestrate("d", "co2", LifecycleAction::uninstall, std::nullopt, SimTime{0}).error ==
        OrchestrationError::illegal_transition);
  CHECK(h.cp.orchestrate("d", "co2", LifecycleAction::update, std::nullopt, SimTime{0}).error ==
        OrchestrationError::malformed);
  auto same_version = fixtures::service("co2");
  CHECK(h.cp.orchestrate("d", "co2", LifecycleAction::update, same_version, SimTime{0}).error ==
        OrchestrationError::illegal_transition);
  CHECK(h.sent.empty());
  CHECK(h.count("command_rejected") == 5);

  const auto r = h.cp.orchestrate("d", "co2", LifecycleAction::stop, std::nullopt, SimTime{0});
  CHECK(r.accepted());
  CHECK(r.command_id == "cmd-1");
  REQUIRE(h.sent.size() == 1);
  CHECK(h.sent[0].topic == "dev/d/svc/co2/cmd");
  CHECK(h.cp.orchestrate("d", "co2", LifecycleAction::stop, std::nullopt, SimTime{0}).error ==
        OrchestrationError::illegal_transition);  // one in flight
  CHECK(h.cp.orchestrate("d", "dht11", LifecycleAction::stop, std::nullopt, SimTime{0}).accepted());

  h.ack_all(600);
  CHECK(h.cp.record("d", "co2")->lifecycle == LifecycleState::Stopped);
  CHECK(h.cp.orchestrate("d", "co2", LifecycleAction::uninstall, std::nullopt, from_seconds(600)).accepted());
  h.ack_all(1200);
  CHECK(h.cp.orchestrate("d", "co2", LifecycleAction::start, std::nullopt, from_seconds(1200)).error ==
        OrchestrationError::illegal_transition);
}

TEST_CASE("update carries the descriptor and the ack the new version")
{
  Harness h;
  auto v3 = fixtures::service("co2", 600, 650, 5);
  v3.code_version = 3;
  v3.detector_params.ph_lambda = 99.0;
  REQUIRE(h.cp.orchestrate("d", "co2", LifecycleAction::update, v3, SimTime{0}).accepted());
  REQUIRE(command_from(h.sent[0]).descriptor == v3);
  h.ack_all(600);
  const auto* rec = h.cp.record("d", "co2");
  CHECK(rec->code_version == 3);
  CHECK(rec->lifecycle == LifecycleState::Running);
  CHECK(rec->params.ph_lambda == 99.0);
}

TEST_CASE("install of a new service creates its record on ack")
{
  Harness h;
  auto pm = fixtures::service("pm25", 600, 12, 1);
  REQUIRE(h.cp.orchestrate("d", "pm25", LifecycleAction::install, pm, SimTime{0}).accepted());
  CHECK(h.cp.record("d", "pm25") == nullptr);
  h.ack_all(600);
  REQUIRE(h.cp.record("d", "pm25"));
  CHECK(h.cp.record("d", "pm25")->lifecycle == LifecycleState::Installed);
}

TEST_CASE("auto policy stops once, then uninstalls")
{
  Harness h(Policy::auto_stop_on_suspicious);
  h.feed("co2", 600, 650);
  h.cp.evaluate("d", "co2", from_seconds(600));
  // three missed intervals in a row
  h.cp.evaluate("d", "co2", from_seconds(1800));
  h.cp.evaluate("d", "co2", from_seconds(2400));
  REQUIRE(h.sent.size() == 1);
  CHECK(command_from(h.sent[0]).action == LifecycleAction::stop);
  h.cp.evaluate("d", "co2", from_seconds(3000));
  CHECK(h.sent.size() == 1);  // still Running locally until the ack, no second stop

  h.ack_all(3000);
  REQUIRE(h.sent.size() == 1);
  CHECK(command_from(h.sent[0]).action == LifecycleAction::uninstall);
  h.ack_all(3000);
  CHECK(h.sent.empty());
  CHECK(h.cp.record("d", "co2")->lifecycle == LifecycleState::Uninstalled);
  CHECK_FALSE(h.cp.evaluate("d", "co2", from_seconds(3600)).has_value());
  CHECK(h.cp.record("d", "dht11")->lifecycle == LifecycleState::Running);
  for (const auto& a : h.cp.audit()) CHECK(a.service_id == "co2");
}

TEST_CASE("auto policy without uninstall")
{
  auto s = Harness::default_scenario();
  std::vector<BusMessage> sent;
  ControlPlaneOptions o;
  o.policy = Policy::auto_stop_on_suspicious;
  o.uninstall_after_auto_stop = false;
  ControlPlane cp(s, o, [&](const BusMessage& m) { sent.push_back(m); }, nullptr);
  cp.evaluate("d", "co2", from_seconds(1200));
  cp.evaluate("d", "co2", from_seconds(1800));
  REQUIRE(sent.size() == 1);
  const auto cmd = command_from(sent[0]);
  cp.on_ack("d", "co2", {cmd.command_id, cmd.action, true, LifecycleState::Stopped, 1, {}}, from_seconds(1800));
  CHECK(sent.size() == 1);
}

TEST_CASE("unacknowledged commands time out")
{
  Harness h;
  REQUIRE(h.cp.orchestrate("d", "co2", LifecycleAction::stop, std::nullopt, from_seconds(600)).accepted());
  h.cp.check_timeouts(from_seconds(1800));
  CHECK(h.cp.pending_commands() == 1);
  h.cp.check_timeouts(from_seconds(1801));
  CHECK(h.cp.pending_commands() == 0);
  CHECK(h.count("command_timeout") == 1);
  CHECK(h.cp.audit().back().outcome == "timeout");
}

TEST_CASE("management views")
{
  Harness h;
  h.feed("co2", 600, 651.5);
  const auto devices = h.cp.list_devices();
  REQUIRE(devices["devices"].size() == 1);
  const auto& svc = devices["devices"][0]["services"][0];
  CHECK(svc["service_id"] == "co2");
  CHECK(svc["lifecycle"] == "Running");
  CHECK(svc["health"]["state"] == "Normal");
  CHECK(svc["last_value"] == 651.5);

  REQUIRE(h.cp.orchestrate("d", "co2", LifecycleAction::stop, std::nullopt, from_seconds(600)).accepted());
  h.ack_all(600);
  const auto detail = h.cp.service_detail("d", "co2");
  REQUIRE(detail);
  CHECK((*detail)["lifecycle"] == "Stopped");
  CHECK((*detail)["health"].is_null());
  CHECK((*detail)["recent_measurements"].size() == 1);
  CHECK_FALSE(h.cp.service_detail("d", "nope"));

  ControlPlane empty(fixtures::scenario({}, 600), {}, nullptr, nullptr);
  CHECK(empty.list_devices()["devices"].empty());
}

TEST_CASE("verdict sequence matches the reference pipeline")
{
  std::mt19937_64 rng(17);
  int suspicious_evals = 0;
  int recoveries = 0;
  for (int trial = 0; trial < 60; ++trial) {
    Harness h;
    oracle::Pipeline ref{oracle::Params{}};
    std::normal_distribution<double> noise(0.0, 0.1);
    double last_report = 0.0;
    for (int k = 1; k <= 300; ++k) {
      const double t = 600.0 * k;
      const int roll = static_cast<int>(rng() % 100);
      if (roll >= 8) {  // ~8% missing reports
        double x = 22.0 + noise(rng);
        if (roll < 12) x += 5.0;                       // sporadic outliers
        if (k > 200) x += 0.02 * (k - 200);             // slow drift late in the run
        h.feed("dht11", t, x);
        ref.sample(x);
        REQUIRE(h.cp.record("d", "dht11")->page_hinkley.statistic() ==
                doctest::Approx(ref.ph_statistic()).epsilon(1e-9).scale(1.0));
        last_report = t;
      }
      h.cp.evaluate("d", "dht11", from_seconds(t));
      const bool suspicious = ref.evaluate((t - last_report) / 600.0);
      REQUIRE((h.cp.record("d", "dht11")->health.state == Health::Suspicious) == suspicious);
      suspicious_evals += suspicious;
    }
    for (const auto& c : h.cp.state_changes()) recoveries += c.to == Health::Normal;
  }
  CHECK(suspicious_evals > 1000);
  CHECK(recoveries > 100);
}
