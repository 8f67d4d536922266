// Copyright 2026 The edge-iis Authors
// SPDX-License-Identifier: Apache-2.0

// iisctl: run, serve and replay intelligent-sensor scenarios.

#include <CLI11.hpp>

#include <atomic>
#include <csignal>
#include <iostream>
#include <mutex>
#include <thread>

#include "iis/api.hpp"
#include "iis/experiment.hpp"
#include "iis/replay.hpp"
#include "iis/report.hpp"
#include "iis/scenario.hpp"

namespace
{

constexpr int kExitInvalidScenario = 2;
constexpr int kExitRuntime = 3;

std::atomic<bool> g_interrupted{false};

extern "C" void on_signal(int)
{
  g_interrupted = true;
}

struct CommonOptions
{
  std::string scenario;
  std::optional<std::uint64_t> seed;
  std::optional<double> speedup;
  std::string policy;
  double drop_probability = 0.0;
};

void add_common(CLI::App* cmd, CommonOptions& o)
{
  cmd->add_option("--scenario", o.scenario, "Scenario JSON file")->required();
  cmd->add_option("--seed", o.seed, "Run seed mixed into every device's rng_seed");
  cmd->add_option("--speedup", o.speedup, "Simulated seconds per wall-clock second, 0 for unpaced (default: scenario value)")
      ->check(CLI::NonNegativeNumber);
  cmd->add_option("--policy", o.policy, "Override the scenario policy")->check(CLI::IsMember({"manual", "auto"}));
  cmd->add_option("--drop-probability", o.drop_probability, "Bus message loss probability")
      ->check(CLI::Range(0.0, 1.0));
}

iis::RunOptions run_options(const CommonOptions& o)
{
  iis::RunOptions r;
  r.seed = o.seed;
  if (o.policy == "manual") r.policy = iis::Policy::manual;
  if (o.policy == "auto") r.policy = iis::Policy::auto_stop_on_suspicious;
  r.drop_probability = o.drop_probability;
  return r;
}

void print_summary(const iis::VariantRuns& runs)
{
  const auto& h = runs.report.headline();
  std::cout << "window " << h.label << " [" << iis::to_seconds(h.from) << " s, " << iis::to_seconds(h.to) << " s]\n"
            << "  managed   " << h.managed_avg_mA << " mA\n"
            << "  unmanaged " << h.unmanaged_avg_mA << " mA\n"
            << "  delta     " << h.delta_mA << " mA\n";
  for (const auto& c : runs.managed->control_plane().state_changes()) {
    std::cout << "  t=" << iis::to_seconds(c.at) << " s " << c.device_id << "/" << c.service_id << " "
              << iis::to_string(c.from) << " -> " << iis::to_string(c.to) << " (" << iis::to_string(c.reason)
              << ")\n";
  }
}

int cmd_run(const CommonOptions& o, const std::string& out_dir)
{
  const iis::ScenarioConfig scenario = iis::load_scenario_file(o.scenario);
  const double speedup = o.speedup.value_or(scenario.speedup);
  auto runs = iis::run_variants(scenario, run_options(o),
                                speedup > 0.0 ? std::optional<double>(speedup) : std::nullopt);
  iis::write_run_outputs(out_dir, runs, o.seed);
  print_summary(runs);
  std::cout << "outputs written to " << out_dir << "\n";
  return 0;
}

int cmd_serve(const CommonOptions& o, const std::string& host, int port, const std::string& out_dir,
              bool exit_on_complete, const std::string& static_dir)
{
  const iis::ScenarioConfig scenario = iis::load_scenario_file(o.scenario);
  const double speedup = o.speedup.value_or(scenario.speedup);

  iis::RunOptions managed = run_options(o);
  iis::RunOptions baseline = managed;
  baseline.variant = "unmanaged";
  baseline.managed = false;

  iis::VariantRuns runs;
  runs.managed = std::make_unique<iis::Simulation>(scenario, managed);
  runs.unmanaged = std::make_unique<iis::Simulation>(scenario, baseline);
  runs.unmanaged->run();

  std::mutex summary_mutex;
  std::optional<nlohmann::json> summary;
  auto summary_provider = [&]() -> std::optional<nlohmann::json> {
    std::lock_guard lock(summary_mutex);
    return summary;
  };

  iis::ManagementApi api(*runs.managed, summary_provider);
  iis::HttpServer server(api, static_dir);
  const int bound = server.bind(host, port);
  if (bound < 0) {
    std::cerr << "cannot bind " << host << ":" << port << "\n";
    return kExitRuntime;
  }
  std::cout << "serving on http://" << host << ":" << bound << " at speedup " << speedup << std::endl;

  // Baseline windows are published into the stream as simulated time passes.
  std::map<std::string, std::size_t> baseline_cursor;
  auto publish_baseline = [&] {
    const iis::SimTime now = runs.managed->now();
    for (const auto& [device_id, trace] : runs.unmanaged->energy()) {
      auto& i = baseline_cursor[device_id];
      const auto windows = trace.windows();
      while (i < windows.size() && windows[i].end <= now) {
        const auto& w = windows[i++];
        runs.managed->events().append(w.end, "energy_window",
                                      nlohmann::json{{"device_id", device_id},
                                                     {"variant", "unmanaged"},
                                                     {"window_start_s", iis::to_seconds(w.start)},
                                                     {"window_end_s", iis::to_seconds(w.end)},
                                                     {"charge_uAms", w.charge.uA_ms},
                                                     {"avg_current_mA", w.average_mA()}});
      }
    }
  };

  std::atomic<bool> cancel{false};
  std::atomic<bool> done{false};
  std::exception_ptr failure;
  std::thread runner([&] {
    try {
      runs.managed->run_paced(speedup, &cancel, publish_baseline);
      if (runs.managed->finished()) {
        runs.report = iis::compare(*runs.managed, *runs.unmanaged);
        {
          std::lock_guard lock(summary_mutex);
          summary = iis::summary_json(runs, o.seed);
        }
        if (!out_dir.empty()) iis::write_run_outputs(out_dir, runs, o.seed);
        print_summary(runs);
      }
    } catch (...) {
      failure = std::current_exception();
    }
    runs.managed->events().close();
    done = true;
  });

  std::thread watcher([&] {
    while (!g_interrupted && !(exit_on_complete && done)) {
      std::this_thread::sleep_for(std::chrono::milliseconds(100));
    }
    cancel = true;
    server.stop();
  });

  server.serve();
  cancel = true;
  g_interrupted = true;
  runner.join();
  watcher.join();
  if (failure) std::rethrow_exception(failure);
  return 0;
}

int cmd_replay(const std::string& path)
{
  const iis::ReplayResult r = iis::replay_file(path);
  std::cout << "lines read: " << r.lines_read << "\n"
            << "state changes logged: " << r.logged.size() << ", recomputed: " << r.recomputed.size() << "\n";
  if (r.corrupt_line) {
    std::cerr << "corrupt event at line " << *r.corrupt_line << ": " << r.error << "\n";
    return kExitRuntime;
  }
  if (!r.error.empty()) {
    std::cerr << r.error << "\n";
    return kExitRuntime;
  }
  std::cout << (r.matches() ? "replay matches" : "replay MISMATCH") << "\n";
  return r.matches() ? 0 : 1;
}

int cmd_validate(const std::string& path)
{
  const iis::ScenarioConfig s = iis::load_scenario_file(path);
  std::size_t services = 0;
  for (const auto& d : s.devices) services += d.services.size();
  std::cout << "ok: " << s.devices.size() << " devices, " << services << " services, " << s.faults.size()
            << " faults\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv)
{
  CLI::App app{"Intelligent sensor service management for emulated edge devices"};
  app.require_subcommand(1);

  CommonOptions run_opts;
  std::string out_dir = "out";
  auto* run = app.add_subcommand("run", "Run the managed variant and the unmanaged baseline, write outputs");
  add_common(run, run_opts);
  run->add_option("--out", out_dir, "Output directory");

  CommonOptions serve_opts;
  std::string host = "127.0.0.1";
  int port = 8080;
  std::string serve_out;
  std::string static_dir;
  bool exit_on_complete = false;
  auto* serve = app.add_subcommand("serve", "Run paced and expose the management API");
  add_common(serve, serve_opts);
  serve->add_option("--host", host, "Listen address");
  serve->add_option("--port", port, "Listen port (0 picks one)")->check(CLI::Range(0, 65535));
  serve->add_option("--out", serve_out, "Write outputs here when the run completes");
  serve->add_option("--static-dir", static_dir, "Serve dashboard files from this directory")
      ->check(CLI::ExistingDirectory);
  serve->add_flag("--exit-on-complete", exit_on_complete, "Stop serving once the run completes");

  std::string events_path;
  auto* replay = app.add_subcommand("replay", "Recompute state changes from an events.log");
  replay->add_option("events,--events", events_path, "events.log path")->required();

  std::string validate_path;
  auto* validate = app.add_subcommand("validate", "Check a scenario file");
  validate->add_option("scenario", validate_path, "Scenario JSON file")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : 2;
  }

  std::signal(SIGINT, on_signal);
  std::signal(SIGTERM, on_signal);

  try {
    if (*run) return cmd_run(run_opts, out_dir);
    if (*serve) return cmd_serve(serve_opts, host, port, serve_out, exit_on_complete, static_dir);
    if (*replay) return cmd_replay(events_path);
    if (*validate) return cmd_validate(validate_path);
  } catch (const iis::ScenarioError& e) {
    std::cerr << "invalid scenario:\n";
    for (const auto& issue : e.issues()) std::cerr << "  " << issue.to_string() << "\n";
    if (e.issues().empty()) std::cerr << "  " << e.what() << "\n";
    return kExitInvalidScenario;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitRuntime;
  }
  return 0;
}
