#pragma once

#include <rlar/envs/plant.hpp>
#include <rlar/focus/focus_module.hpp>
#include <rlar/regularizer/mpc.hpp>
#include <rlar/sac/sac_agent.hpp>

#include <json.hpp>

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace rlar::trainer {

/// Multiplier grid for discrepancy sweeps: every combination of the listed
/// per-parameter multipliers is applied to the `base` preset.
struct SweepGrid {
  std::string base = "estimated";
  std::map<std::string, std::vector<double>> multipliers;
};

struct Ablation {
  bool scalar_beta = false;
  bool disable_regularizer = false;
  bool disable_learning = false;
};

/// Everything a run needs. Loaded from a JSON file whose unknown keys are
/// rejected; omitted keys take the defaults below.
struct RunConfig {
  std::string name = "run";
  envs::PlantKind plant = envs::PlantKind::glucose;
  /// Parameters of the model the regularizer plans on.
  envs::PlantParams model_params;
  /// Parameters of the plant that is actually stepped.
  envs::PlantParams env_params;
  envs::ActionSpace action_space;
  envs::ObservationScale observation_scale;
  int episodes = 20;
  int full_scale_episodes = 100;
  int episode_steps = 100;
  std::vector<std::uint64_t> seeds{0, 1, 2, 3, 4};
  /// "double" or "float" for the networks.
  std::string precision = "double";
  regularizer::MpcOptions mpc;
  sac::SacOptions sac;
  focus::FocusOptions focus;
  std::size_t replay_capacity = 1'000'000;
  int batch_size = 256;
  int learning_starts = 256;
  Ablation ablation;
  /// Write a checkpoint every this many episodes (0: only at the end).
  int checkpoint_every = 0;
  /// End the run after its first failed episode.
  bool stop_on_failure = false;
  SweepGrid sweep;
};

/// "rlar", "mpc_only", "sac_only", "scalar_beta", or a '+'-joined mix.
std::string mode_name(const Ablation& a);
bool uses_regularizer(const RunConfig& c);
bool uses_learning(const RunConfig& c);
bool uses_focus(const RunConfig& c);
/// The configured focus options with the scalar flag taken from the ablation.
focus::FocusOptions effective_focus_options(const RunConfig& c);

/// Defaults for `plant`: estimated model, actual environment, default
/// bounds, scales, horizons and episode length.
RunConfig default_run_config(envs::PlantKind plant);

/// Parses and validates. Relative parameter-file paths resolve against
/// `base_dir`.
RunConfig run_config_from_json(const nlohmann::json& j, const std::filesystem::path& base_dir = {});
RunConfig load_run_config(const std::filesystem::path& path);

/// Fully expanded form (parameters inlined); round-trips through
/// run_config_from_json.
nlohmann::json to_json(const RunConfig& c);

/// 64-bit FNV-1a of the compact expanded JSON, as 16 hex digits.
std::string config_hash(const RunConfig& c);
std::uint64_t fnv1a(const std::string& bytes);

/// Builds a plant with the run's action box applied.
std::shared_ptr<envs::Plant> build_plant(const RunConfig& c, const envs::PlantParams& params);

}  // namespace rlar::trainer
