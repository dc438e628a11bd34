#pragma once

#include <rlar/envs/plant.hpp>

#include <json.hpp>

#include <filesystem>
#include <map>
#include <string>

namespace rlar::envs {

/// Parameter tables for the estimated model and the actual environment.
/// `role` is "estimated" or "actual".
PlantParams preset(PlantKind kind, const std::string& role);

/// Copy of `base` with each named parameter multiplied. Unknown names are a
/// configuration error.
PlantParams perturb_params(const PlantParams& base, const std::map<std::string, double>& multipliers);

/// Parameter names every preset of `kind` must define (in table order).
const std::vector<std::string>& required_parameters(PlantKind kind);

/// Schema check: known plant, every required key present, no unknown key,
/// finite values, positivity where physically required.
void validate(const PlantParams& params);

nlohmann::json to_json(const PlantParams& params);
PlantParams params_from_json(const nlohmann::json& j);
PlantParams load_plant_params(const std::filesystem::path& path);

ActionSpace default_action_space(PlantKind kind);
SafetySpec default_safety(PlantKind kind);
ObservationScale default_observation_scale(PlantKind kind);
int default_episode_steps(PlantKind kind);
int default_mpc_horizon(PlantKind kind);

}  // namespace rlar::envs
