#include <rlar/approx/checkpoint.hpp>
#include <rlar/envs/presets.hpp>
#include <rlar/harness/harness.hpp>

#include <Eigen/Core>

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <iostream>
#include <numeric>
#include <set>
#include <thread>

namespace rlar::harness {

using nlohmann::json;
using trainer::RunConfig;
namespace fs = std::filesystem;

std::vector<std::uint64_t> seeds_for(const RunConfig& config, const CommandOptions& options) {
  if (options.seed) return {*options.seed};
  return config.seeds;
}

int episodes_for(const RunConfig& config, const CommandOptions& options) {
  if (options.episodes) {
    if (*options.episodes < 1) throw ConfigError("--episodes must be positive");
    return *options.episodes;
  }
  return options.full_scale ? config.full_scale_episodes : config.episodes;
}

std::string run_id(const RunConfig& config, std::uint64_t seed) {
  return config.name + "-" + trainer::mode_name(config.ablation) + "-" + trainer::config_hash(config).substr(0, 8) +
         "-s" + std::to_string(seed);
}

json versions() {
  return {{"rlar", kVersion},
          {"checkpoint_format", approx::kCheckpointVersion},
          {"eigen", std::to_string(EIGEN_WORLD_VERSION) + "." + std::to_string(EIGEN_MAJOR_VERSION) + "." +
                        std::to_string(EIGEN_MINOR_VERSION)},
          {"nlohmann_json", std::to_string(NLOHMANN_JSON_VERSION_MAJOR) + "." +
                                std::to_string(NLOHMANN_JSON_VERSION_MINOR) + "." +
                                std::to_string(NLOHMANN_JSON_VERSION_PATCH)},
          {"compiler", __VERSION__},
          {"cxx_standard", static_cast<long>(__cplusplus)}};
}

namespace {

double mean_of(const Vecd& v) { return v.size() ? v.mean() : 0.0; }

void summarize_records(RunSummary& s) {
  s.episodes = static_cast<int>(s.records.size());
  s.failures = 0;
  s.first_failure = -1;
  double total = 0.0;
  for (const auto& r : s.records) {
    total += r.normalized_return;
    if (r.failed) {
      ++s.failures;
      if (s.first_failure < 0) s.first_failure = r.episode;
    }
  }
  if (s.records.empty()) return;
  s.mean_normalized_return = total / s.records.size();
  s.final_normalized_return = s.records.back().normalized_return;
  const std::size_t quarter = std::max<std::size_t>(1, s.records.size() / 4);
  double first = 0.0, last = 0.0;
  for (std::size_t i = 0; i < quarter; ++i) {
    first += mean_of(s.records[i].mean_beta);
    last += mean_of(s.records[s.records.size() - 1 - i].mean_beta);
  }
  s.beta_first_quarter = first / quarter;
  s.beta_last_quarter = last / quarter;
}

std::string optional_number(const std::optional<double>& v) { return v ? format_number(*v) : ""; }

json manifest(const RunConfig& config, const RunSummary& s, const std::string& command, int requested,
              double wall_seconds, const std::vector<std::string>& artifacts) {
  json m = {{"run_id", s.id},
            {"command", command},
            {"seed", s.seed},
            {"config_hash", s.config_hash},
            {"config", trainer::to_json(config)},
            {"mode", s.mode},
            {"precision", config.precision},
            {"episodes_requested", requested},
            {"episodes_completed", s.episodes},
            {"failures", s.failures},
            {"status", s.error ? "error" : "ok"},
            {"error", s.error ? json(*s.error) : json(nullptr)},
            {"wall_seconds", wall_seconds},
            {"versions", versions()},
            {"artifacts", artifacts}};
  return m;
}

std::shared_ptr<envs::Plant> plant_for(const RunConfig& config) {
  return trainer::build_plant(config, config.env_params);
}

RunSummary blank_summary(const RunConfig& config, std::uint64_t seed, const fs::path& dir) {
  RunSummary s;
  s.id = run_id(config, seed);
  s.dir = dir;
  s.name = config.name;
  s.plant = envs::to_string(config.plant);
  s.mode = trainer::mode_name(config.ablation);
  s.seed = seed;
  s.config_hash = trainer::config_hash(config);
  return s;
}

}  // namespace

CsvTable summary_table(const std::vector<RunSummary>& runs) {
  CsvTable t;
  t.header = {"seed",
              "config_hash",
              "run_id",
              "name",
              "plant",
              "mode",
              "episodes",
              "failures",
              "first_failure_episode",
              "mean_normalized_return",
              "final_normalized_return",
              "eval_normalized_return",
              "eval_failed",
              "beta_first_quarter",
              "beta_last_quarter",
              "total_steps",
              "updates",
              "pretrain_min_beta",
              "status"};
  for (const auto& s : runs)
    t.add({std::to_string(s.seed), s.config_hash, s.id, s.name, s.plant, s.mode, std::to_string(s.episodes),
           std::to_string(s.failures), std::to_string(s.first_failure), format_number(s.mean_normalized_return),
           format_number(s.final_normalized_return), optional_number(s.eval_normalized_return),
           s.eval_failed ? "1" : "0", format_number(s.beta_first_quarter), format_number(s.beta_last_quarter),
           std::to_string(s.total_steps), std::to_string(s.updates), optional_number(s.pretrain_min_beta),
           s.error ? "error" : "ok"});
  return t;
}

RunSummary run_one(const RunConfig& config, std::uint64_t seed, const CommandOptions& options,
                   const std::string& command) {
  const auto start = std::chrono::steady_clock::now();
  const fs::path dir = options.out / "runs" / run_id(config, seed);
  fs::create_directories(dir);
  RunSummary s = blank_summary(config, seed, dir);
  const RunTag tag{seed, s.config_hash};
  const int requested = episodes_for(config, options);
  std::vector<std::string> artifacts;
  trainer::RunResult result;
  try {
    trainer::TrainOptions topt;
    topt.episodes = requested;
    topt.record_trajectory = options.write_trajectory;
    if (config.checkpoint_every > 0) topt.checkpoint_dir = dir / "checkpoints";
    if (options.verbose)
      topt.on_episode = [&](const trainer::EpisodeRecord& r) {
        std::cerr << s.id << " episode " << r.episode << " steps " << r.steps << " normalized_return "
                  << r.normalized_return << (r.failed ? " FAILED" : "") << '\n';
      };
    result = trainer::train_rlar(config, seed, topt);
    s.error = result.error;
  } catch (const std::exception& e) {
    s.error = e.what();
  }
  s.records = result.episodes;
  s.total_steps = result.total_steps;
  s.updates = result.updates;
  s.pretrain_min_beta = result.pretrain_min_beta;
  summarize_records(s);

  const auto plant = plant_for(config);
  write_csv(dir / "episodes.csv", episodes_table(tag, s.records));
  artifacts.push_back("episodes.csv");
  if (options.write_trajectory) {
    write_csv(dir / "trajectory.csv", trajectory_table(tag, result.trajectory, plant->state_names(), plant->obs_names()));
    write_csv(dir / "beta.csv", beta_table(tag, result.trajectory));
    artifacts.insert(artifacts.end(), {"trajectory.csv", "beta.csv"});
  }
  if (!result.checkpoint.is_null()) {
    const std::string name = "checkpoint" + options.checkpoint_extension;
    approx::write_checkpoint_file(dir / name, result.checkpoint);
    artifacts.push_back(name);
  }
  if (options.evaluate_after && !s.error && !result.checkpoint.is_null()) {
    try {
      const auto eval = trainer::evaluate(config, result.checkpoint);
      s.eval_normalized_return = eval.record.normalized_return;
      s.eval_failed = eval.record.failed;
      if (options.write_trajectory) {
        write_csv(dir / "eval_trajectory.csv",
                  trajectory_table(tag, eval.trajectory, plant->state_names(), plant->obs_names()));
        artifacts.push_back("eval_trajectory.csv");
      }
    } catch (const std::exception& e) {
      s.error = std::string("evaluation: ") + e.what();
    }
  }
  write_csv(dir / "summary.csv", summary_table({s}));
  artifacts.push_back("summary.csv");
  const double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  approx::write_json_file(dir / "manifest.json", manifest(config, s, command, requested, wall, artifacts));
  if (options.verbose)
    std::cerr << s.id << ": " << s.failures << " failures in " << s.episodes << " episodes"
              << (s.error ? " [error: " + *s.error + "]" : "") << '\n';
  return s;
}

std::vector<RunSummary> run_seeds(const RunConfig& config, const CommandOptions& options, const std::string& command) {
  const auto seeds = seeds_for(config, options);
  std::vector<RunSummary> out(seeds.size());
  const int jobs = std::max(1, std::min<int>(options.jobs, static_cast<int>(seeds.size())));
  if (jobs == 1) {
    for (std::size_t i = 0; i < seeds.size(); ++i) out[i] = run_one(config, seeds[i], options, command);
    return out;
  }
  std::atomic<std::size_t> next{0};
  std::vector<std::thread> workers;
  for (int w = 0; w < jobs; ++w)
    workers.emplace_back([&] {
      for (std::size_t i = next++; i < seeds.size(); i = next++) out[i] = run_one(config, seeds[i], options, command);
    });
  for (auto& t : workers) t.join();
  return out;
}

std::vector<RunSummary> train_command(const RunConfig& config, const CommandOptions& options) {
  auto runs = run_seeds(config, options, "train");
  write_csv(options.out / "summary.csv", summary_table(runs));
  return runs;
}

RunSummary evaluate_command(const RunConfig& config, const fs::path& checkpoint, const CommandOptions& options) {
  const auto start = std::chrono::steady_clock::now();
  const json container = approx::read_checkpoint_file(checkpoint);
  const json payload = approx::open_checkpoint(container);
  const std::uint64_t seed = payload.value("seed", std::uint64_t{0});
  const fs::path dir = options.out / "eval" / run_id(config, seed);
  fs::create_directories(dir);
  RunSummary s = blank_summary(config, seed, dir);
  const auto plant = plant_for(config);
  const auto eval = trainer::evaluate(config, container);
  s.records = {eval.record};
  summarize_records(s);
  s.eval_normalized_return = eval.record.normalized_return;
  s.eval_failed = eval.record.failed;
  const RunTag tag{seed, s.config_hash};
  write_csv(dir / "episodes.csv", episodes_table(tag, s.records));
  write_csv(dir / "trajectory.csv", trajectory_table(tag, eval.trajectory, plant->state_names(), plant->obs_names()));
  write_csv(dir / "beta.csv", beta_table(tag, eval.trajectory));
  write_csv(dir / "summary.csv", summary_table({s}));
  const double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  json m = manifest(config, s, "evaluate", 1, wall, {"episodes.csv", "trajectory.csv", "beta.csv", "summary.csv"});
  m["checkpoint"] = fs::absolute(checkpoint).lexically_normal().string();
  approx::write_json_file(dir / "manifest.json", m);
  return s;
}

fs::path pretrain_command(const RunConfig& config, const CommandOptions& options) {
  const std::uint64_t seed = seeds_for(config, options).front();
  json j = trainer::pretrain_focus(config, seed);
  j["config_hash"] = trainer::config_hash(config);
  j["versions"] = versions();
  const fs::path path = options.out / ("focus_pretrained-s" + std::to_string(seed) + ".json");
  approx::write_json_file(path, j);
  return path;
}

std::vector<SweepCell> sweep_cells(const trainer::SweepGrid& grid) {
  std::vector<SweepCell> cells{SweepCell{}};
  for (const auto& [name, values] : grid.multipliers) {
    std::vector<SweepCell> next;
    for (const auto& cell : cells)
      for (double v : values) {
        SweepCell c = cell;
        c[name] = v;
        next.push_back(std::move(c));
      }
    cells = std::move(next);
  }
  return cells;
}

RunConfig sweep_config(const RunConfig& config, const SweepCell& cell, std::size_t index) {
  RunConfig c = config;
  c.env_params = envs::perturb_params(envs::preset(config.plant, config.sweep.base), cell);
  c.name = config.name + "_cell" + std::to_string(index);
  return c;
}

CsvTable sweep_command(const RunConfig& config, const CommandOptions& options) {
  if (config.sweep.multipliers.empty()) throw ConfigError("sweep: the config defines no multiplier grid");
  const auto cells = sweep_cells(config.sweep);
  CsvTable t;
  t.header = {"cell"};
  for (const auto& [name, values] : config.sweep.multipliers) t.header.push_back("mult_" + name);
  for (const char* h : {"seed", "config_hash", "episodes", "failures", "first_failure_episode", "status"})
    t.header.push_back(h);
  for (std::size_t k = 0; k < cells.size(); ++k) {
    const RunConfig c = sweep_config(config, cells[k], k);
    for (const auto& s : run_seeds(c, options, "sweep")) {
      std::vector<std::string> row{std::to_string(k)};
      for (const auto& [name, value] : cells[k]) row.push_back(format_number(value));
      row.insert(row.end(), {std::to_string(s.seed), s.config_hash, std::to_string(s.episodes),
                             std::to_string(s.failures), std::to_string(s.first_failure), s.error ? "error" : "ok"});
      t.add(std::move(row));
    }
  }
  write_csv(options.out / "sweep.csv", t);
  return t;
}

RunConfig ablation_config(const RunConfig& config, const std::string& variant) {
  RunConfig c = config;
  c.ablation = {};
  if (variant == "scalar-beta")
    c.ablation.scalar_beta = true;
  else if (variant == "no-regularizer")
    c.ablation.disable_regularizer = true;
  else if (variant == "no-learning")
    c.ablation.disable_learning = true;
  else if (variant != "rlar")
    throw ConfigError("unknown ablation variant '" + variant +
                      "' (expected rlar, scalar-beta, no-regularizer or no-learning)");
  c.focus.scalar = c.ablation.scalar_beta;
  c.name = config.name + "_" + variant;
  return c;
}

int episodes_to_threshold(const std::vector<trainer::EpisodeRecord>& records, double threshold) {
  for (const auto& r : records)
    if (r.normalized_return >= threshold) return r.episode;
  return -1;
}

CsvTable ablate_command(const RunConfig& config, const std::vector<std::string>& variants, double threshold,
                        const CommandOptions& options) {
  CsvTable t;
  t.header = {"variant", "mode", "seed", "config_hash", "episodes", "failures", "mean_normalized_return",
              "final_normalized_return", "eval_normalized_return", "episodes_to_threshold", "status"};
  for (const auto& v : variants) {
    const RunConfig c = ablation_config(config, v);
    for (const auto& s : run_seeds(c, options, "ablate"))
      t.add({v, s.mode, std::to_string(s.seed), s.config_hash, std::to_string(s.episodes), std::to_string(s.failures),
             format_number(s.mean_normalized_return), format_number(s.final_normalized_return),
             optional_number(s.eval_normalized_return), std::to_string(episodes_to_threshold(s.records, threshold)),
             s.error ? "error" : "ok"});
  }
  write_csv(options.out / "ablation.csv", t);
  return t;
}

std::string mean_std_cell(double mean, double stddev, int decimals) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f (%.*f)", decimals, mean, decimals, stddev);
  return buf;
}

namespace {

struct Moments {
  double mean = 0.0;
  double stddev = 0.0;
};

Moments moments(const std::vector<double>& xs) {
  Moments m;
  if (xs.empty()) return m;
  m.mean = std::accumulate(xs.begin(), xs.end(), 0.0) / xs.size();
  if (xs.size() > 1) {
    double ss = 0.0;
    for (double x : xs) ss += (x - m.mean) * (x - m.mean);
    m.stddev = std::sqrt(ss / (xs.size() - 1));
  }
  return m;
}

double cell_number(const CsvTable& t, const std::vector<std::string>& row, const std::string& col) {
  const auto& cell = row[t.column(col)];
  if (cell.empty()) return std::nan("");
  return std::stod(cell);
}

}  // namespace

Report build_report(const std::vector<fs::path>& roots, int smoothing) {
  if (smoothing < 1) throw ConfigError("report smoothing window must be >= 1");
  using Key = std::tuple<std::string, std::string, std::string>;
  struct Group {
    std::vector<double> failures, final_return, mean_return, eval_return, beta_first, beta_last;
    std::map<int, std::vector<double>> curve;
    std::set<std::string> seeds;
  };
  std::map<Key, Group> groups;
  std::vector<fs::path> summaries;
  for (const auto& root : roots) {
    if (!fs::exists(root)) throw ConfigError("report: no such directory " + root.string());
    for (const auto& entry : fs::recursive_directory_iterator(root))
      if (entry.is_regular_file() && entry.path().filename() == "summary.csv" &&
          entry.path().parent_path().parent_path().filename() == "runs")
        summaries.push_back(entry.path());
  }
  std::sort(summaries.begin(), summaries.end());
  for (const auto& path : summaries) {
    const CsvTable s = read_csv(path);
    for (const auto& row : s.rows) {
      Group& g = groups[{row[s.column("name")], row[s.column("plant")], row[s.column("mode")]}];
      if (!g.seeds.insert(row[s.column("seed")] + "/" + row[s.column("config_hash")]).second) continue;
      g.failures.push_back(cell_number(s, row, "failures"));
      g.final_return.push_back(cell_number(s, row, "final_normalized_return"));
      g.mean_return.push_back(cell_number(s, row, "mean_normalized_return"));
      const double ev = cell_number(s, row, "eval_normalized_return");
      if (!std::isnan(ev)) g.eval_return.push_back(ev);
      g.beta_first.push_back(cell_number(s, row, "beta_first_quarter"));
      g.beta_last.push_back(cell_number(s, row, "beta_last_quarter"));
      const fs::path episodes = path.parent_path() / "episodes.csv";
      if (fs::exists(episodes)) {
        const CsvTable e = read_csv(episodes);
        for (const auto& er : e.rows)
          g.curve[std::stoi(er[e.column("episode")])].push_back(cell_number(e, er, "normalized_return"));
      }
    }
  }
  Report r;
  r.table.header = {"name",
                    "plant",
                    "mode",
                    "seeds",
                    "failures",
                    "failures_mean",
                    "failures_std",
                    "final_normalized_return_mean",
                    "final_normalized_return_std",
                    "mean_normalized_return_mean",
                    "mean_normalized_return_std",
                    "eval_normalized_return_mean",
                    "eval_normalized_return_std",
                    "beta_first_quarter_mean",
                    "beta_last_quarter_mean"};
  r.curves.header = {"name", "plant", "mode", "episode", "seeds", "normalized_return_mean", "normalized_return_std",
                     "smoothed_mean"};
  for (const auto& [key, g] : groups) {
    const auto& [name, plant, mode] = key;
    const auto f = moments(g.failures), fr = moments(g.final_return), mr = moments(g.mean_return),
               ev = moments(g.eval_return);
    r.table.add({name, plant, mode, std::to_string(g.seeds.size()), mean_std_cell(f.mean, f.stddev),
                 format_number(f.mean), format_number(f.stddev), format_number(fr.mean), format_number(fr.stddev),
                 format_number(mr.mean), format_number(mr.stddev),
                 g.eval_return.empty() ? "" : format_number(ev.mean), g.eval_return.empty() ? "" : format_number(ev.stddev),
                 format_number(moments(g.beta_first).mean), format_number(moments(g.beta_last).mean)});
    std::vector<double> means;
    for (const auto& [episode, values] : g.curve) {
      const auto m = moments(values);
      means.push_back(m.mean);
      const std::size_t lo = means.size() > static_cast<std::size_t>(smoothing) ? means.size() - smoothing : 0;
      const double smooth =
          std::accumulate(means.begin() + static_cast<std::ptrdiff_t>(lo), means.end(), 0.0) / (means.size() - lo);
      r.curves.add({name, plant, mode, std::to_string(episode), std::to_string(values.size()), format_number(m.mean),
                    format_number(m.stddev), format_number(smooth)});
    }
  }
  return r;
}

Report report_command(const std::vector<fs::path>& roots, int smoothing, const CommandOptions& options) {
  Report r = build_report(roots, smoothing);
  write_csv(options.out / "report.csv", r.table);
  write_csv(options.out / "curves.csv", r.curves);
  return r;
}

}  // namespace rlar::harness
