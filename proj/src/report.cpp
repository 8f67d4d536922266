// Copyright 2026 The edge-iis Authors
// SPDX-License-Identifier: Apache-2.0

#include "iis/report.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <stdexcept>

namespace iis
{

std::string format_double(double v)
{
  if (!std::isfinite(v)) return "";
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

void write_measurements_csv(std::ostream& out, const std::vector<const Simulation*>& runs)
{
  out << "variant,device_id,service_id,timestamp_s,value,code_version\n";
  for (const auto* run : runs) {
    const auto& variant = run->options().variant;
    for (const auto& m : run->measurements()) {
      out << variant << ',' << m.device_id << ',' << m.service_id << ',' << format_double(to_seconds(m.timestamp))
          << ',' << format_double(m.value) << ',' << m.code_version << '\n';
    }
  }
}

void write_energy_csv(std::ostream& out, const std::vector<const Simulation*>& runs)
{
  out << "device_id,window_start_s,window_end_s,variant,avg_current_mA\n";
  for (const auto* run : runs) {
    const auto& variant = run->options().variant;
    for (const auto& [device_id, trace] : run->energy()) {
      for (const auto& w : trace.windows()) {
        out << device_id << ',' << format_double(to_seconds(w.start)) << ',' << format_double(to_seconds(w.end))
            << ',' << variant << ',' << format_double(w.average_mA()) << '\n';
      }
    }
  }
}

void write_events_log(std::ostream& out, const EventLog& log)
{
  for (const auto& e : log.since(0)) {
    out << e.to_json().dump() << '\n';
  }
}

namespace
{

std::ofstream open_output(const std::filesystem::path& path)
{
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  return out;
}

}  // namespace

void write_run_outputs(const std::filesystem::path& dir, const VariantRuns& runs, std::optional<std::uint64_t> seed)
{
  std::filesystem::create_directories(dir);
  const std::vector<const Simulation*> both{runs.managed.get(), runs.unmanaged.get()};
  {
    auto out = open_output(dir / "measurements.csv");
    write_measurements_csv(out, both);
  }
  {
    auto out = open_output(dir / "energy.csv");
    write_energy_csv(out, both);
  }
  {
    auto out = open_output(dir / "events.log");
    write_events_log(out, runs.managed->events());
  }
  {
    auto out = open_output(dir / "summary.json");
    out << summary_json(runs, seed).dump(2) << '\n';
  }
}

}  // namespace iis
