// Copyright 2026 The edge-iis Authors
// SPDX-License-Identifier: Apache-2.0

#include "iis/scenario.hpp"

#include <cmath>
#include <fstream>
#include <initializer_list>
#include <limits>
#include <numeric>
#include <set>

namespace iis
{

using nlohmann::json;

namespace
{

std::string join_messages(const std::vector<ValidationIssue>& issues)
{
  std::string out = "invalid scenario";
  for (const auto& issue : issues) {
    out += "\n  " + issue.to_string();
  }
  return out;
}

/// Walks one JSON object, recording issues against its path.
class ObjectReader
{
public:
  ObjectReader(const json& node, std::string path, std::vector<ValidationIssue>& errors)
      : node_(node), path_(std::move(path)), errors_(errors)
  {
    valid_ = node_.is_object();
    if (!valid_) {
      fail(path_, "expected an object");
    }
  }

  bool valid() const { return valid_; }

  void allow_only(std::initializer_list<const char*> keys)
  {
    if (!valid_) return;
    std::set<std::string> allowed(keys.begin(), keys.end());
    for (const auto& [key, _] : node_.items()) {
      if (!allowed.count(key)) {
        fail(child(key), "unknown key");
      }
    }
  }

  std::string child(const std::string& key) const { return path_ + "." + key; }

  const json* get(const char* key, bool required)
  {
    if (!valid_) return nullptr;
    auto it = node_.find(key);
    if (it == node_.end()) {
      if (required) fail(child(key), "missing required key");
      return nullptr;
    }
    return &*it;
  }

  std::optional<std::string> string(const char* key, bool required, bool non_empty)
  {
    const json* v = get(key, required);
    if (!v) return std::nullopt;
    if (!v->is_string()) {
      fail(child(key), "expected a string");
      return std::nullopt;
    }
    auto s = v->get<std::string>();
    if (non_empty && s.empty()) {
      fail(child(key), "must be non-empty");
      return std::nullopt;
    }
    return s;
  }

  std::optional<double> number(const char* key, bool required)
  {
    const json* v = get(key, required);
    if (!v) return std::nullopt;
    if (!v->is_number()) {
      fail(child(key), "expected a number");
      return std::nullopt;
    }
    double d = v->get<double>();
    if (!std::isfinite(d)) {
      fail(child(key), "must be finite");
      return std::nullopt;
    }
    return d;
  }

  std::optional<double> non_negative(const char* key, bool required)
  {
    auto d = number(key, required);
    if (d && *d < 0.0) {
      fail(child(key), "must be non-negative");
      return std::nullopt;
    }
    return d;
  }

  std::optional<double> positive(const char* key, bool required)
  {
    auto d = number(key, required);
    if (d && *d <= 0.0) {
      fail(child(key), "must be positive");
      return std::nullopt;
    }
    return d;
  }

  std::optional<std::uint64_t> unsigned_int(const char* key, bool required,
                                            std::uint64_t max = std::numeric_limits<std::uint64_t>::max())
  {
    const json* v = get(key, required);
    if (!v) return std::nullopt;
    if (!v->is_number_unsigned() && !(v->is_number_integer() && v->get<std::int64_t>() >= 0)) {
      fail(child(key), "expected a non-negative integer");
      return std::nullopt;
    }
    auto u = v->get<std::uint64_t>();
    if (u > max) {
      fail(child(key), "out of range");
      return std::nullopt;
    }
    return u;
  }

  std::optional<int> positive_int(const char* key, bool required)
  {
    auto u = unsigned_int(key, required, static_cast<std::uint64_t>(std::numeric_limits<int>::max()));
    if (u && *u == 0) {
      fail(child(key), "must be positive");
      return std::nullopt;
    }
    return u ? std::optional<int>(static_cast<int>(*u)) : std::nullopt;
  }

  const json* array(const char* key, bool required)
  {
    const json* v = get(key, required);
    if (v && !v->is_array()) {
      fail(child(key), "expected an array");
      return nullptr;
    }
    return v;
  }

  void fail(const std::string& path, std::string message)
  {
    errors_.push_back({path, std::move(message)});
  }

private:
  const json& node_;
  std::string path_;
  std::vector<ValidationIssue>& errors_;
  bool valid_ = false;
};

std::string index_path(const std::string& base, std::size_t i)
{
  return base + "[" + std::to_string(i) + "]";
}

/// Seconds -> milliseconds, flagging values that round to zero.
std::optional<SimTime> positive_time(ObjectReader& r, const char* key, bool required)
{
  auto s = r.positive(key, required);
  if (!s) return std::nullopt;
  SimTime t = from_seconds(*s);
  if (t.count() <= 0) {
    r.fail(r.child(key), "must be at least 1 ms");
    return std::nullopt;
  }
  return t;
}

std::optional<SensorModel> parse_sensor(const json& node, const std::string& path, std::vector<ValidationIssue>& errors)
{
  ObjectReader r(node, path, errors);
  if (!r.valid()) return std::nullopt;
  r.allow_only({"kind", "baseline", "diurnal_amplitude", "noise_sigma", "unit"});
  const auto before = errors.size();
  SensorModel s;
  if (auto kind = r.string("kind", true, true)) {
    if (auto k = parse_sensor_kind(*kind)) {
      s.kind = *k;
    } else {
      r.fail(r.child("kind"), "unknown sensor kind '" + *kind + "'");
    }
  }
  if (auto v = r.number("baseline", true)) s.baseline = *v;
  if (auto v = r.non_negative("diurnal_amplitude", false)) s.diurnal_amplitude = *v;
  if (auto v = r.non_negative("noise_sigma", false)) s.noise_sigma = *v;
  if (auto v = r.string("unit", false, false)) s.unit = *v;
  if (errors.size() != before) return std::nullopt;
  return s;
}

std::optional<DetectorOverrides> parse_overrides(const json& node, const std::string& path,
                                                 std::vector<ValidationIssue>& errors)
{
  ObjectReader r(node, path, errors);
  if (!r.valid()) return std::nullopt;
  r.allow_only({"availability_grace", "missed_reports_k", "zscore_threshold", "zscore_window", "ph_delta",
                "ph_lambda", "anomaly_votes_m", "recovery_window"});
  const auto before = errors.size();
  DetectorOverrides o;
  if (auto v = r.number("availability_grace", false)) {
    if (*v <= 1.0) {
      r.fail(r.child("availability_grace"), "must be greater than 1");
    } else {
      o.availability_grace = *v;
    }
  }
  o.missed_reports_k = r.positive_int("missed_reports_k", false);
  o.zscore_threshold = r.positive("zscore_threshold", false);
  if (auto v = r.positive_int("zscore_window", false)) {
    if (*v < 5) {
      r.fail(r.child("zscore_window"), "must be at least 5");
    } else {
      o.zscore_window = *v;
    }
  }
  o.ph_delta = r.non_negative("ph_delta", false);
  o.ph_lambda = r.positive("ph_lambda", false);
  o.anomaly_votes_m = r.positive_int("anomaly_votes_m", false);
  o.recovery_window = r.positive_int("recovery_window", false);
  if (errors.size() != before) return std::nullopt;
  return o;
}

std::optional<EnergyProfile> parse_profile(const json& node, const std::string& path,
                                           std::vector<ValidationIssue>& errors)
{
  ObjectReader r(node, path, errors);
  if (!r.valid()) return std::nullopt;
  r.allow_only({"sleep_current_mA", "mcu_active_current_mA", "radio_tx_current_mA", "radio_tx_duration_s",
                "wake_duration_s"});
  const auto before = errors.size();
  EnergyProfile p;
  if (auto v = r.non_negative("sleep_current_mA", true)) p.sleep_current_uA = from_milliamps(*v);
  if (auto v = r.non_negative("mcu_active_current_mA", true)) p.mcu_active_current_uA = from_milliamps(*v);
  if (auto v = r.non_negative("radio_tx_current_mA", true)) p.radio_tx_current_uA = from_milliamps(*v);
  if (auto v = r.non_negative("radio_tx_duration_s", true)) p.radio_tx_duration = from_seconds(*v);
  if (auto v = r.non_negative("wake_duration_s", false)) p.wake_duration = from_seconds(*v);
  if (errors.size() != before) return std::nullopt;
  if (p.mcu_active_current_uA < p.sleep_current_uA) {
    r.fail(r.child("mcu_active_current_mA"), "must be >= sleep_current_mA");
    return std::nullopt;
  }
  return p;
}

std::optional<ServiceEnergyCost> parse_cost(const json& node, const std::string& path,
                                            std::vector<ValidationIssue>& errors)
{
  ObjectReader r(node, path, errors);
  if (!r.valid()) return std::nullopt;
  r.allow_only({"sample_current_mA", "sample_duration_s"});
  const auto before = errors.size();
  ServiceEnergyCost c;
  if (auto v = r.non_negative("sample_current_mA", true)) c.sample_current_uA = from_milliamps(*v);
  if (auto v = r.non_negative("sample_duration_s", true)) c.sample_duration = from_seconds(*v);
  if (errors.size() != before) return std::nullopt;
  return c;
}

std::optional<DeviceDescriptor> parse_device(const json& node, const std::string& path,
                                             std::vector<ValidationIssue>& errors)
{
  ObjectReader r(node, path, errors);
  if (!r.valid()) return std::nullopt;
  r.allow_only({"device_id", "services", "energy_profile", "rng_seed"});
  const auto before = errors.size();
  DeviceDescriptor d;
  if (auto v = r.string("device_id", true, true)) d.device_id = *v;
  if (auto v = r.unsigned_int("rng_seed", false)) d.rng_seed = *v;
  if (const json* p = r.get("energy_profile", true)) {
    if (auto prof = parse_profile(*p, r.child("energy_profile"), errors)) d.energy_profile = *prof;
  }
  if (const json* arr = r.array("services", true)) {
    std::set<std::string> seen;
    for (std::size_t i = 0; i < arr->size(); ++i) {
      const auto spath = index_path(r.child("services"), i);
      auto svc = parse_service_descriptor((*arr)[i], spath, errors);
      if (!svc) continue;
      if (!seen.insert(svc->service_id).second) {
        r.fail(spath + ".service_id", "duplicate service_id '" + svc->service_id + "'");
        continue;
      }
      d.services.push_back(std::move(*svc));
    }
  }
  if (errors.size() != before) return std::nullopt;

  // Every activity must fit inside one wake period (gcd of the intervals).
  std::int64_t period = 0;
  for (const auto& s : d.services) period = std::gcd(period, s.report_interval.count());
  if (period > 0) {
    const std::string why = "exceeds the device wake period of " + std::to_string(period) + " ms";
    if (d.energy_profile.wake_duration.count() > period) {
      r.fail(r.child("energy_profile") + ".wake_duration_s", why);
    }
    if (d.energy_profile.radio_tx_duration.count() > period) {
      r.fail(r.child("energy_profile") + ".radio_tx_duration_s", why);
    }
    for (std::size_t i = 0; i < d.services.size(); ++i) {
      if (d.services[i].energy_cost.sample_duration.count() > period) {
        r.fail(index_path(r.child("services"), i) + ".energy_cost.sample_duration_s", why);
      }
    }
  }
  if (errors.size() != before) return std::nullopt;
  return d;
}

std::optional<FaultSpec> parse_fault(const json& node, const std::string& path, std::vector<ValidationIssue>& errors)
{
  ObjectReader r(node, path, errors);
  if (!r.valid()) return std::nullopt;
  r.allow_only({"device_id", "service_id", "start_s", "kind", "magnitude", "outlier_probability"});
  const auto before = errors.size();
  FaultSpec f;
  if (auto v = r.string("device_id", true, true)) f.device_id = *v;
  if (auto v = r.string("service_id", true, true)) f.service_id = *v;
  if (auto v = r.non_negative("start_s", true)) f.start = from_seconds(*v);
  if (auto kind = r.string("kind", true, true)) {
    if (auto k = parse_fault_kind(*kind)) {
      f.kind = *k;
    } else {
      r.fail(r.child("kind"), "unknown fault kind '" + *kind + "'");
    }
  }
  if (auto v = r.number("magnitude", f.kind == FaultKind::drift || f.kind == FaultKind::offset_outlier)) f.magnitude = *v;
  if (auto v = r.number("outlier_probability", false)) {
    if (*v < 0.0 || *v > 1.0) {
      r.fail(r.child("outlier_probability"), "must be within [0, 1]");
    } else if (f.kind != FaultKind::offset_outlier) {
      r.fail(r.child("outlier_probability"), "only valid for offset_outlier faults");
    } else {
      f.outlier_probability = *v;
    }
  }
  if (errors.size() != before) return std::nullopt;
  return f;
}

}  // namespace

ScenarioError::ScenarioError(std::vector<ValidationIssue> issues)
    : std::runtime_error(join_messages(issues)), issues_(std::move(issues))
{
}

std::optional<ServiceDescriptor> parse_service_descriptor(const json& raw, const std::string& path,
                                                          std::vector<ValidationIssue>& errors)
{
  ObjectReader r(raw, path, errors);
  if (!r.valid()) return std::nullopt;
  r.allow_only({"service_id", "sensor", "report_interval_s", "code_version", "energy_cost", "detector_params"});
  const auto before = errors.size();
  ServiceDescriptor s;
  if (auto v = r.string("service_id", true, true)) s.service_id = *v;
  if (const json* n = r.get("sensor", true)) {
    if (auto sensor = parse_sensor(*n, r.child("sensor"), errors)) s.sensor = *sensor;
  }
  if (auto t = positive_time(r, "report_interval_s", true)) s.report_interval = *t;
  if (auto v = r.unsigned_int("code_version", false, std::numeric_limits<std::uint32_t>::max())) {
    s.code_version = static_cast<std::uint32_t>(*v);
  }
  if (const json* n = r.get("energy_cost", true)) {
    if (auto cost = parse_cost(*n, r.child("energy_cost"), errors)) s.energy_cost = *cost;
  }
  if (const json* n = r.get("detector_params", false)) {
    if (auto o = parse_overrides(*n, r.child("detector_params"), errors)) s.detector_params = *o;
  }
  if (errors.size() != before) return std::nullopt;
  return s;
}

ScenarioValidation validate_scenario(const json& raw)
{
  ScenarioValidation out;
  auto& errors = out.errors;
  ObjectReader r(raw, "$", errors);
  if (!r.valid()) return out;
  r.allow_only({"devices", "faults", "duration_s", "speedup", "policy", "detector_params"});

  ScenarioConfig cfg;
  if (auto t = positive_time(r, "duration_s", true)) cfg.duration = *t;
  if (auto v = r.positive("speedup", false)) cfg.speedup = *v;
  if (auto v = r.string("policy", false, true)) {
    if (auto p = parse_policy(*v)) {
      cfg.policy = *p;
    } else {
      r.fail(r.child("policy"), "unknown policy '" + *v + "'");
    }
  }
  if (const json* n = r.get("detector_params", false)) {
    if (auto o = parse_overrides(*n, r.child("detector_params"), errors)) cfg.detector_params = o->apply({});
  }
  if (cfg.detector_params.anomaly_votes_m > cfg.detector_params.zscore_window) {
    r.fail(r.child("detector_params") + ".anomaly_votes_m", "must not exceed zscore_window");
  }

  if (const json* arr = r.array("devices", true)) {
    std::set<std::string> seen;
    for (std::size_t i = 0; i < arr->size(); ++i) {
      const auto dpath = index_path(r.child("devices"), i);
      auto dev = parse_device((*arr)[i], dpath, errors);
      if (!dev) continue;
      if (!seen.insert(dev->device_id).second) {
        r.fail(dpath + ".device_id", "duplicate device_id '" + dev->device_id + "'");
        continue;
      }
      cfg.devices.push_back(std::move(*dev));
    }
  }

  if (const json* arr = r.array("faults", false)) {
    for (std::size_t i = 0; i < arr->size(); ++i) {
      const auto fpath = index_path(r.child("faults"), i);
      auto fault = parse_fault((*arr)[i], fpath, errors);
      if (!fault) continue;
      const DeviceDescriptor* dev = cfg.find_device(fault->device_id);
      if (!dev) {
        r.fail(fpath + ".device_id", "unknown device reference '" + fault->device_id + "'");
        continue;
      }
      if (!dev->find_service(fault->service_id)) {
        r.fail(fpath + ".service_id", "unknown service reference '" + fault->service_id + "'");
        continue;
      }
      if (cfg.duration.count() > 0 && fault->start >= cfg.duration) {
        r.fail(fpath + ".start_s", "must be before the end of the scenario");
        continue;
      }
      cfg.faults.push_back(std::move(*fault));
    }
  }

  if (errors.empty()) {
    out.config = std::move(cfg);
  }
  return out;
}

ScenarioConfig load_scenario_file(const std::filesystem::path& path)
{
  std::ifstream in(path);
  if (!in) {
    throw ScenarioError({{path.string(), "cannot open file"}});
  }
  json raw;
  try {
    raw = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ScenarioError({{path.string(), std::string("malformed JSON: ") + e.what()}});
  }
  auto result = validate_scenario(raw);
  if (!result.ok()) {
    throw ScenarioError(std::move(result.errors));
  }
  return std::move(*result.config);
}

json to_json(const DetectorParams& p)
{
  return json{{"availability_grace", p.availability_grace},
              {"missed_reports_k", p.missed_reports_k},
              {"zscore_threshold", p.zscore_threshold},
              {"zscore_window", p.zscore_window},
              {"ph_delta", p.ph_delta},
              {"ph_lambda", p.ph_lambda},
              {"anomaly_votes_m", p.anomaly_votes_m},
              {"recovery_window", p.recovery_window}};
}

namespace
{

json overrides_to_json(const DetectorOverrides& o)
{
  json j = json::object();
  if (o.availability_grace) j["availability_grace"] = *o.availability_grace;
  if (o.missed_reports_k) j["missed_reports_k"] = *o.missed_reports_k;
  if (o.zscore_threshold) j["zscore_threshold"] = *o.zscore_threshold;
  if (o.zscore_window) j["zscore_window"] = *o.zscore_window;
  if (o.ph_delta) j["ph_delta"] = *o.ph_delta;
  if (o.ph_lambda) j["ph_lambda"] = *o.ph_lambda;
  if (o.anomaly_votes_m) j["anomaly_votes_m"] = *o.anomaly_votes_m;
  if (o.recovery_window) j["recovery_window"] = *o.recovery_window;
  return j;
}

}  // namespace

json to_json(const ServiceDescriptor& s)
{
  json j{{"service_id", s.service_id},
         {"sensor",
          {{"kind", to_string(s.sensor.kind)},
           {"baseline", s.sensor.baseline},
           {"diurnal_amplitude", s.sensor.diurnal_amplitude},
           {"noise_sigma", s.sensor.noise_sigma},
           {"unit", s.sensor.unit}}},
         {"report_interval_s", to_seconds(s.report_interval)},
         {"code_version", s.code_version},
         {"energy_cost",
          {{"sample_current_mA", to_milliamps(s.energy_cost.sample_current_uA)},
           {"sample_duration_s", to_seconds(s.energy_cost.sample_duration)}}}};
  if (!s.detector_params.empty()) {
    j["detector_params"] = overrides_to_json(s.detector_params);
  }
  return j;
}

json to_json(const ScenarioConfig& cfg)
{
  json devices = json::array();
  for (const auto& d : cfg.devices) {
    json services = json::array();
    for (const auto& s : d.services) {
      services.push_back(to_json(s));
    }
    const auto& p = d.energy_profile;
    devices.push_back({{"device_id", d.device_id},
                       {"rng_seed", d.rng_seed},
                       {"energy_profile",
                        {{"sleep_current_mA", to_milliamps(p.sleep_current_uA)},
                         {"mcu_active_current_mA", to_milliamps(p.mcu_active_current_uA)},
                         {"radio_tx_current_mA", to_milliamps(p.radio_tx_current_uA)},
                         {"radio_tx_duration_s", to_seconds(p.radio_tx_duration)},
                         {"wake_duration_s", to_seconds(p.wake_duration)}}},
                       {"services", std::move(services)}});
  }
  json faults = json::array();
  for (const auto& f : cfg.faults) {
    json jf{{"device_id", f.device_id},
            {"service_id", f.service_id},
            {"start_s", to_seconds(f.start)},
            {"kind", to_string(f.kind)},
            {"magnitude", f.magnitude}};
    if (f.kind == FaultKind::offset_outlier) {
      jf["outlier_probability"] = f.outlier_probability;
    }
    faults.push_back(std::move(jf));
  }
  return json{{"devices", std::move(devices)},
              {"faults", std::move(faults)},
              {"duration_s", to_seconds(cfg.duration)},
              {"speedup", cfg.speedup},
              {"policy", to_string(cfg.policy)},
              {"detector_params", to_json(cfg.detector_params)}};
}

}  // namespace iis
