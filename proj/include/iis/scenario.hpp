// Copyright 2026 The edge-iis Authors
// SPDX-License-Identifier: Apache-2.0

/// @file scenario.hpp
/// @brief Scenario file schema: JSON <-> ScenarioConfig.
///
/// Keys are snake_case and mirror the ScenarioConfig fields. Unknown keys are
/// rejected. Every problem found is reported with the path of the offending
/// node (e.g. `$.devices[0].services[1].service_id`), and validation keeps
/// going after the first problem so a user sees all of them at once.

#pragma once

#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "iis/model.hpp"

namespace iis
{

struct ValidationIssue
{
  std::string path;
  std::string message;

  std::string to_string() const { return path + ": " + message; }
};

struct ScenarioValidation
{
  std::optional<ScenarioConfig> config;
  std::vector<ValidationIssue> errors;

  bool ok() const { return config.has_value(); }
};

class ScenarioError : public std::runtime_error
{
public:
  explicit ScenarioError(std::vector<ValidationIssue> issues);

  const std::vector<ValidationIssue>& issues() const { return issues_; }

private:
  std::vector<ValidationIssue> issues_;
};

ScenarioValidation validate_scenario(const nlohmann::json& raw);

/// Reads and validates a scenario file. Throws ScenarioError on malformed JSON
/// or any validation problem.
ScenarioConfig load_scenario_file(const std::filesystem::path& path);

nlohmann::json to_json(const ScenarioConfig& config);
nlohmann::json to_json(const ServiceDescriptor& service);
nlohmann::json to_json(const DetectorParams& params);

/// Parses one ServiceDescriptor object (used by install/update commands).
/// Issues are appended to `errors` with paths rooted at `path`.
std::optional<ServiceDescriptor> parse_service_descriptor(const nlohmann::json& raw, const std::string& path,
                                                          std::vector<ValidationIssue>& errors);

}  // namespace iis
