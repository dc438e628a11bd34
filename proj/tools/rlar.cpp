#include <rlar/harness/harness.hpp>

#include <CLI11.hpp>

#include <iostream>

namespace {

using rlar::harness::CommandOptions;

struct Common {
  std::string config;
  CommandOptions options;
  std::uint64_t seed = 0;
  int episodes = 0;
  std::string checkpoint_format = "json";
  bool no_trajectory = false;
  bool no_eval = false;
};

void add_run_flags(CLI::App* cmd, Common& c, bool training) {
  cmd->add_option("--config", c.config, "Run config file")->required()->check(CLI::ExistingFile);
  cmd->add_option("--seed", c.seed, "Single seed instead of the config's seed list");
  cmd->add_option("--out", c.options.out, "Output directory")->capture_default_str();
  if (!training) return;
  cmd->add_option("--episodes", c.episodes, "Episodes per run (overrides the config)")->check(CLI::PositiveNumber);
  cmd->add_flag("--full-scale", c.options.full_scale, "Use the config's full-scale episode count");
  cmd->add_option("--jobs", c.options.jobs, "Seeds trained concurrently")->check(CLI::PositiveNumber);
  cmd->add_option("--checkpoint-format", c.checkpoint_format, "Final checkpoint encoding")
      ->check(CLI::IsMember({"json", "cbor"}));
  cmd->add_flag("--no-trajectory", c.no_trajectory, "Skip trajectory.csv and beta.csv");
  cmd->add_flag("--no-eval", c.no_eval, "Skip the deterministic evaluation after training");
  cmd->add_flag("-v,--verbose", c.options.verbose, "Progress on stderr");
}

CommandOptions finish(const Common& c, const CLI::App* cmd) {
  CommandOptions o = c.options;
  if (cmd->count("--seed")) o.seed = c.seed;
  if (c.episodes > 0) o.episodes = c.episodes;
  o.checkpoint_extension = "." + c.checkpoint_format;
  o.write_trajectory = !c.no_trajectory;
  o.evaluate_after = !c.no_eval;
  return o;
}

int status_of(const std::vector<rlar::harness::RunSummary>& runs) {
  for (const auto& r : runs)
    if (r.error) {
      std::cerr << r.id << " aborted: " << *r.error << " (partial artifacts in " << r.dir.string() << ")\n";
      return 3;
    }
  return 0;
}

void print_runs(const std::vector<rlar::harness::RunSummary>& runs) {
  std::cout << rlar::harness::summary_table(runs).to_string();
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"RL with an adaptive MPC safety regularizer: training and experiment harness"};
  app.require_subcommand(1);

  Common train, sweep, ablate, pretrain, eval;
  auto* train_cmd = app.add_subcommand("train", "Train each seed and write runs/<id>/ artifacts");
  add_run_flags(train_cmd, train, true);

  auto* eval_cmd = app.add_subcommand("evaluate", "Deterministic episode from a checkpoint");
  add_run_flags(eval_cmd, eval, false);
  std::string checkpoint;
  eval_cmd->add_option("--checkpoint", checkpoint, "Checkpoint (.json or .cbor)")->required()->check(CLI::ExistingFile);

  auto* pre_cmd = app.add_subcommand("pretrain-focus", "Pretrain the focus module toward the regularizer");
  add_run_flags(pre_cmd, pretrain, false);

  auto* sweep_cmd = app.add_subcommand("sweep", "Parameter-discrepancy grid; tabulates failures per cell");
  add_run_flags(sweep_cmd, sweep, true);

  auto* ablate_cmd = app.add_subcommand("ablate", "Train ablation variants side by side");
  add_run_flags(ablate_cmd, ablate, true);
  std::vector<std::string> variants{"rlar", "scalar-beta", "no-regularizer", "no-learning"};
  double threshold = -1.0;
  ablate_cmd->add_option("--variant", variants, "Variants to run")
      ->check(CLI::IsMember({"rlar", "scalar-beta", "no-regularizer", "no-learning"}))
      ->capture_default_str();
  ablate_cmd->add_option("--threshold", threshold, "Normalized return counted as reached")->capture_default_str();

  auto* report_cmd = app.add_subcommand("report", "Aggregate run summaries into mean (std) tables");
  std::vector<std::string> roots;
  CommandOptions report_opts;
  int smoothing = 1;
  report_cmd->add_option("--runs", roots, "Directories to scan (default: --out)");
  report_cmd->add_option("--out", report_opts.out, "Output directory")->capture_default_str();
  report_cmd->add_option("--smoothing", smoothing, "Moving-average width for curves.csv")->check(CLI::PositiveNumber);

  CLI11_PARSE(app, argc, argv);

  try {
    if (*train_cmd) {
      const auto config = rlar::trainer::load_run_config(train.config);
      const auto runs = rlar::harness::train_command(config, finish(train, train_cmd));
      print_runs(runs);
      return status_of(runs);
    }
    if (*eval_cmd) {
      const auto config = rlar::trainer::load_run_config(eval.config);
      const auto s = rlar::harness::evaluate_command(config, checkpoint, finish(eval, eval_cmd));
      print_runs({s});
      return 0;
    }
    if (*pre_cmd) {
      const auto config = rlar::trainer::load_run_config(pretrain.config);
      std::cout << rlar::harness::pretrain_command(config, finish(pretrain, pre_cmd)).string() << '\n';
      return 0;
    }
    if (*sweep_cmd) {
      const auto config = rlar::trainer::load_run_config(sweep.config);
      const auto table = rlar::harness::sweep_command(config, finish(sweep, sweep_cmd));
      std::cout << table.to_string();
      for (const auto& row : table.rows)
        if (row.back() != "ok") return 3;
      return 0;
    }
    if (*ablate_cmd) {
      const auto config = rlar::trainer::load_run_config(ablate.config);
      const auto table = rlar::harness::ablate_command(config, variants, threshold, finish(ablate, ablate_cmd));
      std::cout << table.to_string();
      for (const auto& row : table.rows)
        if (row.back() != "ok") return 3;
      return 0;
    }
    if (*report_cmd) {
      std::vector<std::filesystem::path> paths(roots.begin(), roots.end());
      if (paths.empty()) paths.push_back(report_opts.out);
      const auto r = rlar::harness::report_command(paths, smoothing, report_opts);
      std::cout << r.table.to_string();
      return 0;
    }
  } catch (const rlar::ConfigError& e) {
    std::cerr << "configuration error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
