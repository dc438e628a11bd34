#pragma once

#include <rlar/harness/csv.hpp>
#include <rlar/trainer/config.hpp>
#include <rlar/trainer/trainer.hpp>

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace rlar::harness {

inline constexpr const char* kVersion = "0.1.0";

/// Settings shared by the subcommands. Unset values fall back to the run
/// config.
struct CommandOptions {
  std::filesystem::path out = "out";
  std::optional<std::uint64_t> seed;
  std::optional<int> episodes;
  bool full_scale = false;
  /// Seeds trained concurrently (each in its own run directory).
  int jobs = 1;
  bool write_trajectory = true;
  /// ".json" or ".cbor" for the final checkpoint of each run.
  std::string checkpoint_extension = ".json";
  /// Deterministic evaluation episode after training.
  bool evaluate_after = true;
  /// Per-run progress lines on stderr.
  bool verbose = false;
};

std::vector<std::uint64_t> seeds_for(const trainer::RunConfig& config, const CommandOptions& options);
int episodes_for(const trainer::RunConfig& config, const CommandOptions& options);

/// "<name>-<mode>-<first 8 hash digits>-s<seed>".
std::string run_id(const trainer::RunConfig& config, std::uint64_t seed);

/// Library, compiler and format versions recorded in every manifest.
nlohmann::json versions();

struct RunSummary {
  std::string id;
  std::filesystem::path dir;
  std::string name;
  std::string plant;
  std::string mode;
  std::uint64_t seed = 0;
  std::string config_hash;
  int episodes = 0;
  int failures = 0;
  /// -1 when no episode failed.
  int first_failure = -1;
  double mean_normalized_return = 0.0;
  double final_normalized_return = 0.0;
  std::optional<double> eval_normalized_return;
  bool eval_failed = false;
  /// Mean focus weight (over action dimensions) of the first and last
  /// quarter of the episodes.
  double beta_first_quarter = 0.0;
  double beta_last_quarter = 0.0;
  long total_steps = 0;
  long updates = 0;
  std::optional<double> pretrain_min_beta;
  std::optional<std::string> error;
  std::vector<trainer::EpisodeRecord> records;
};

/// Columns of summary.csv.
CsvTable summary_table(const std::vector<RunSummary>& runs);

/// Trains one seed into <out>/runs/<id>/: episodes.csv, trajectory.csv,
/// beta.csv, summary.csv, manifest.json and the final checkpoint. A module
/// abort keeps the partial records and marks the manifest with the error.
RunSummary run_one(const trainer::RunConfig& config, std::uint64_t seed, const CommandOptions& options,
                   const std::string& command = "train");

/// run_one for every seed, `options.jobs` at a time; results in seed order.
std::vector<RunSummary> run_seeds(const trainer::RunConfig& config, const CommandOptions& options,
                                  const std::string& command);

std::vector<RunSummary> train_command(const trainer::RunConfig& config, const CommandOptions& options);

/// Deterministic episode from a checkpoint into <out>/eval/<id>/.
RunSummary evaluate_command(const trainer::RunConfig& config, const std::filesystem::path& checkpoint,
                            const CommandOptions& options);

/// Pretrains a focus module and writes <out>/focus_pretrained-s<seed>.json.
std::filesystem::path pretrain_command(const trainer::RunConfig& config, const CommandOptions& options);

/// One point of the discrepancy grid.
using SweepCell = std::map<std::string, double>;
std::vector<SweepCell> sweep_cells(const trainer::SweepGrid& grid);
/// Environment = `grid.base` preset with the cell's multipliers; the
/// regularizer's model is left untouched.
trainer::RunConfig sweep_config(const trainer::RunConfig& config, const SweepCell& cell, std::size_t index);

/// Trains every cell and seed, then writes <out>/sweep.csv (one row per
/// cell and seed) and returns that table.
CsvTable sweep_command(const trainer::RunConfig& config, const CommandOptions& options);

/// Variant names: "rlar", "scalar-beta", "no-regularizer", "no-learning".
trainer::RunConfig ablation_config(const trainer::RunConfig& config, const std::string& variant);
/// First episode whose normalized return reaches `threshold` (-1: never).
int episodes_to_threshold(const std::vector<trainer::EpisodeRecord>& records, double threshold);
/// Trains each variant and writes <out>/ablation.csv.
CsvTable ablate_command(const trainer::RunConfig& config, const std::vector<std::string>& variants,
                        double threshold, const CommandOptions& options);

struct Report {
  /// One row per (name, plant, mode): mean and sample std over seeds.
  CsvTable table;
  /// Per-episode normalized-return mean/std over seeds, with a trailing
  /// moving average of width `smoothing`.
  CsvTable curves;
};
/// Aggregates every runs/*/summary.csv and episodes.csv below `roots`.
Report build_report(const std::vector<std::filesystem::path>& roots, int smoothing = 1);
/// build_report, then writes <out>/report.csv and <out>/curves.csv.
Report report_command(const std::vector<std::filesystem::path>& roots, int smoothing, const CommandOptions& options);

/// "m (s)" with one decimal, the shape of a failure-count table cell.
std::string mean_std_cell(double mean, double stddev, int decimals = 1);

}  // namespace rlar::harness
