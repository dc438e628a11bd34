#pragma once

#include <rlar/trainer/config.hpp>

#include <json.hpp>

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <vector>

namespace rlar::trainer {

/// Per-episode ledger entry.
struct EpisodeRecord {
  int episode = 0;
  int steps = 0;
  double episode_return = 0.0;
  double normalized_return = 0.0;
  bool failed = false;
  /// Episode mean of beta per action dimension (1 without learning, 0
  /// without the regularizer).
  Vecd mean_beta;
  long mpc_iterations = 0;
  int mpc_solves = 0;
  int mpc_nonconverged = 0;
  int mpc_cache_hits = 0;
  double max_mpc_violation = 0.0;
};

/// One executed step. `state` is the plant state after the step.
struct TrajectoryRow {
  int episode = 0;
  int step = 0;
  double t = 0.0;
  Vecd state;
  Vecd obs;
  Vecd action;
  Vecd a_reg;
  Vecd a_rl;
  Vecd beta;
  double reward = 0.0;
  bool done = false;
  bool failed = false;
};

struct TrainOptions {
  /// Episodes to run; the config's `episodes` when unset.
  std::optional<int> episodes;
  bool record_trajectory = true;
  /// Pretrained focus module to start from instead of pretraining.
  std::optional<nlohmann::json> focus_init;
  /// Directory for periodic checkpoints (none when empty).
  std::filesystem::path checkpoint_dir;
  /// Called after every episode.
  std::function<void(const EpisodeRecord&)> on_episode;
  /// Called after every learner update with the current agent state, for
  /// determinism checks: (update index, concatenated parameters).
  std::function<void(long, const Vecd&)> on_update;
};

struct RunResult {
  std::uint64_t seed = 0;
  std::vector<EpisodeRecord> episodes;
  std::vector<TrajectoryRow> trajectory;
  /// Final checkpoint (also valid when the run aborted).
  nlohmann::json checkpoint;
  long total_steps = 0;
  long updates = 0;
  std::optional<double> pretrain_min_beta;
  /// Set when a module aborted the run; records up to the abort are kept.
  std::optional<std::string> error;
  double wall_seconds = 0.0;
};

/// Trains one seed. Learner state, exploration noise and replay sampling
/// all draw from one engine seeded with `seed`.
RunResult train_rlar(const RunConfig& config, std::uint64_t seed, const TrainOptions& options = {});

struct EvalResult {
  EpisodeRecord record;
  std::vector<TrajectoryRow> trajectory;
};

/// One episode with the deterministic policy (squashed mean) blended
/// through the checkpoint's focus weights. The checkpoint must come from a
/// run on the same plant with the same learner shapes.
EvalResult evaluate(const RunConfig& config, const nlohmann::json& checkpoint);

/// Builds and pretrains a focus module for `config`; returns its JSON with a
/// "pretrain" report.
nlohmann::json pretrain_focus(const RunConfig& config, std::uint64_t seed);

}  // namespace rlar::trainer
