#include <rlar/approx/checkpoint.hpp>
#include <rlar/envs/presets.hpp>
#include <rlar/trainer/config.hpp>

#include <cstdio>
#include <set>

namespace rlar::trainer {
namespace {

using nlohmann::json;

void require_known_keys(const json& j, const std::set<std::string>& allowed, const std::string& where) {
  if (!j.is_object()) throw ConfigError(where + " must be a JSON object");
  for (const auto& [key, _] : j.items())
    if (!allowed.count(key)) throw ConfigError(where + ": unknown key '" + key + "'");
}

Vecd vec_from(const json& j, const std::string& what) {
  if (!j.is_array()) throw ConfigError(what + " must be an array of numbers");
  Vecd v(static_cast<Eigen::Index>(j.size()));
  for (std::size_t i = 0; i < j.size(); ++i) {
    if (!j[i].is_number()) throw ConfigError(what + " must be an array of numbers");
    v[static_cast<Eigen::Index>(i)] = j[i].get<double>();
  }
  return v;
}

json vec_to(const Vecd& v) { return std::vector<double>(v.data(), v.data() + v.size()); }

std::map<std::string, double> multipliers_from(const json& j, const std::string& where) {
  std::map<std::string, double> m;
  if (!j.is_object()) throw ConfigError(where + ".multipliers must be an object");
  for (const auto& [k, v] : j.items()) {
    if (!v.is_number() || !(v.get<double>() > 0.0)) throw ConfigError(where + ".multipliers." + k + " must be positive");
    m[k] = v.get<double>();
  }
  return m;
}

// {"preset": role} | {"file": path} | {"parameters": {...}}, each with
// optional "multipliers".
envs::PlantParams params_from_source(const json& j, envs::PlantKind kind, const std::string& default_role,
                                     const std::filesystem::path& base_dir, const std::string& where) {
  if (j.is_null()) return envs::preset(kind, default_role);
  require_known_keys(j, {"preset", "file", "parameters", "role", "multipliers"}, where);
  const int sources = int(j.contains("preset")) + int(j.contains("file")) + int(j.contains("parameters"));
  if (sources > 1) throw ConfigError(where + ": give only one of 'preset', 'file', 'parameters'");
  envs::PlantParams p;
  if (j.contains("file")) {
    std::filesystem::path path = j.at("file").get<std::string>();
    if (path.is_relative()) path = base_dir / path;
    p = envs::load_plant_params(path);
  } else if (j.contains("parameters")) {
    p = envs::params_from_json({{"plant", envs::to_string(kind)},
                                {"role", j.value("role", std::string{"custom"})},
                                {"parameters", j.at("parameters")}});
  } else {
    p = envs::preset(kind, j.value("preset", default_role));
  }
  if (p.kind != kind) throw ConfigError(where + ": parameters are for plant '" + envs::to_string(p.kind) + "'");
  if (j.contains("multipliers")) {
    p = envs::perturb_params(p, multipliers_from(j.at("multipliers"), where));
    envs::validate(p);
  }
  return p;
}

regularizer::MpcOptions mpc_from(const json& j, regularizer::MpcOptions o) {
  require_known_keys(j,
                     {"horizon", "constraint_margin", "constraint_tolerance", "max_outer_iterations",
                      "max_inner_iterations", "gradient_tolerance", "value_tolerance", "initial_penalty",
                      "penalty_growth", "max_penalty", "seam_width", "substeps"},
                     "mpc");
  o.horizon = j.value("horizon", o.horizon);
  o.constraint_margin = j.value("constraint_margin", o.constraint_margin);
  o.constraint_tolerance = j.value("constraint_tolerance", o.constraint_tolerance);
  o.max_outer_iterations = j.value("max_outer_iterations", o.max_outer_iterations);
  o.max_inner_iterations = j.value("max_inner_iterations", o.max_inner_iterations);
  o.gradient_tolerance = j.value("gradient_tolerance", o.gradient_tolerance);
  o.value_tolerance = j.value("value_tolerance", o.value_tolerance);
  o.initial_penalty = j.value("initial_penalty", o.initial_penalty);
  o.penalty_growth = j.value("penalty_growth", o.penalty_growth);
  o.max_penalty = j.value("max_penalty", o.max_penalty);
  o.seam_width = j.value("seam_width", o.seam_width);
  o.substeps = j.value("substeps", o.substeps);
  if (o.horizon < 1 || o.max_outer_iterations < 1 || o.max_inner_iterations < 1 || o.substeps < 1)
    throw ConfigError("mpc: horizon, iteration limits and substeps must be positive");
  if (!(o.constraint_tolerance > 0.0) || !(o.initial_penalty > 0.0) || !(o.penalty_growth >= 1.0))
    throw ConfigError("mpc: tolerances and penalties must be positive (growth >= 1)");
  return o;
}

json mpc_to(const regularizer::MpcOptions& o) {
  return {{"horizon", o.horizon},
          {"constraint_margin", o.constraint_margin},
          {"constraint_tolerance", o.constraint_tolerance},
          {"max_outer_iterations", o.max_outer_iterations},
          {"max_inner_iterations", o.max_inner_iterations},
          {"gradient_tolerance", o.gradient_tolerance},
          {"value_tolerance", o.value_tolerance},
          {"initial_penalty", o.initial_penalty},
          {"penalty_growth", o.penalty_growth},
          {"max_penalty", o.max_penalty},
          {"seam_width", o.seam_width},
          {"substeps", o.substeps}};
}

}  // namespace

std::string mode_name(const Ablation& a) {
  std::vector<std::string> parts;
  if (a.disable_learning) parts.push_back("mpc_only");
  if (a.disable_regularizer) parts.push_back("sac_only");
  if (a.scalar_beta) parts.push_back("scalar_beta");
  if (parts.empty()) return "rlar";
  std::string out = parts.front();
  for (std::size_t i = 1; i < parts.size(); ++i) out += "+" + parts[i];
  return out;
}

bool uses_regularizer(const RunConfig& c) { return !c.ablation.disable_regularizer; }
bool uses_learning(const RunConfig& c) { return !c.ablation.disable_learning; }
bool uses_focus(const RunConfig& c) { return uses_regularizer(c) && uses_learning(c); }

focus::FocusOptions effective_focus_options(const RunConfig& c) {
  focus::FocusOptions o = c.focus;
  o.scalar = c.ablation.scalar_beta;
  return o;
}

RunConfig default_run_config(envs::PlantKind plant) {
  RunConfig c;
  c.name = envs::to_string(plant);
  c.plant = plant;
  c.model_params = envs::preset(plant, "estimated");
  c.env_params = envs::preset(plant, "actual");
  c.action_space = envs::default_action_space(plant);
  c.observation_scale = envs::default_observation_scale(plant);
  c.episode_steps = envs::default_episode_steps(plant);
  c.mpc.horizon = envs::default_mpc_horizon(plant);
  return c;
}

RunConfig run_config_from_json(const json& j, const std::filesystem::path& base_dir) {
  require_known_keys(j,
                     {"name", "plant", "model", "environment", "action_low", "action_high", "observation_center",
                      "observation_half_range", "episodes", "full_scale_episodes", "episode_steps", "seeds",
                      "precision", "mpc", "sac", "focus", "replay_capacity", "batch_size", "learning_starts",
                      "ablation", "checkpoint_every", "stop_on_failure", "sweep"},
                     "run config");
  if (!j.contains("plant")) throw ConfigError("run config: missing 'plant'");
  try {
    RunConfig c = default_run_config(envs::plant_kind_from_string(j.at("plant").get<std::string>()));
    c.name = j.value("name", c.name);
    c.model_params = params_from_source(j.value("model", json()), c.plant, "estimated", base_dir, "model");
    c.env_params = params_from_source(j.value("environment", json()), c.plant, "actual", base_dir, "environment");
    if (j.contains("action_low")) c.action_space.low = vec_from(j["action_low"], "action_low");
    if (j.contains("action_high")) c.action_space.high = vec_from(j["action_high"], "action_high");
    if (j.contains("observation_center"))
      c.observation_scale.center = vec_from(j["observation_center"], "observation_center");
    if (j.contains("observation_half_range"))
      c.observation_scale.half_range = vec_from(j["observation_half_range"], "observation_half_range");
    c.episodes = j.value("episodes", c.episodes);
    c.full_scale_episodes = j.value("full_scale_episodes", c.full_scale_episodes);
    c.episode_steps = j.value("episode_steps", c.episode_steps);
    if (j.contains("seeds")) c.seeds = j["seeds"].get<std::vector<std::uint64_t>>();
    c.precision = j.value("precision", c.precision);
    if (j.contains("mpc")) c.mpc = mpc_from(j["mpc"], c.mpc);
    if (j.contains("sac")) c.sac = sac::sac_options_from_json(j["sac"]);
    if (j.contains("focus")) c.focus = focus::focus_options_from_json(j["focus"]);
    c.replay_capacity = j.value("replay_capacity", c.replay_capacity);
    c.batch_size = j.value("batch_size", c.batch_size);
    c.learning_starts = j.value("learning_starts", c.learning_starts);
    if (j.contains("ablation")) {
      const auto& a = j["ablation"];
      require_known_keys(a, {"scalar_beta", "disable_regularizer", "disable_learning"}, "ablation");
      c.ablation.scalar_beta = a.value("scalar_beta", false);
      c.ablation.disable_regularizer = a.value("disable_regularizer", false);
      c.ablation.disable_learning = a.value("disable_learning", false);
    }
    c.checkpoint_every = j.value("checkpoint_every", c.checkpoint_every);
    c.stop_on_failure = j.value("stop_on_failure", c.stop_on_failure);
    if (j.contains("sweep")) {
      const auto& s = j["sweep"];
      require_known_keys(s, {"base", "multipliers"}, "sweep");
      c.sweep.base = s.value("base", c.sweep.base);
      if (s.contains("multipliers"))
        c.sweep.multipliers = s["multipliers"].get<std::map<std::string, std::vector<double>>>();
    }
    c.focus.scalar = c.ablation.scalar_beta;

    if (c.precision != "double" && c.precision != "float") throw ConfigError("precision must be 'double' or 'float'");
    if (c.episodes < 1 || c.full_scale_episodes < 1 || c.episode_steps < 1)
      throw ConfigError("episodes and episode_steps must be positive");
    if (c.seeds.empty()) throw ConfigError("seeds must not be empty");
    if (c.batch_size < 1 || c.learning_starts < 0 || c.replay_capacity < 1 || c.checkpoint_every < 0)
      throw ConfigError("batch_size/replay_capacity must be positive, learning_starts/checkpoint_every >= 0");
    if (c.ablation.disable_learning && c.ablation.disable_regularizer)
      throw ConfigError("ablation: disabling both learning and the regularizer leaves no controller");
    if (c.sweep.base != "estimated" && c.sweep.base != "actual")
      throw ConfigError("sweep.base must be 'estimated' or 'actual'");
    for (const auto& [name, values] : c.sweep.multipliers) {
      if (!c.model_params.values.count(name)) throw ConfigError("sweep: unknown parameter '" + name + "'");
      if (values.empty()) throw ConfigError("sweep: empty multiplier list for '" + name + "'");
      for (double v : values)
        if (!(v > 0.0)) throw ConfigError("sweep: multipliers must be positive");
    }
    // Validate the box and scale against the plant's dimensions.
    build_plant(c, c.model_params);
    return c;
  } catch (const json::exception& e) {
    throw ConfigError(std::string("run config: ") + e.what());
  }
}

RunConfig load_run_config(const std::filesystem::path& path) {
  return run_config_from_json(approx::read_json_file(path), path.parent_path());
}

json to_json(const RunConfig& c) {
  json sweep_mult = json::object();
  for (const auto& [k, v] : c.sweep.multipliers) sweep_mult[k] = v;
  return {{"name", c.name},
          {"plant", envs::to_string(c.plant)},
          {"model", {{"role", c.model_params.role}, {"parameters", envs::to_json(c.model_params)["parameters"]}}},
          {"environment", {{"role", c.env_params.role}, {"parameters", envs::to_json(c.env_params)["parameters"]}}},
          {"action_low", vec_to(c.action_space.low)},
          {"action_high", vec_to(c.action_space.high)},
          {"observation_center", vec_to(c.observation_scale.center)},
          {"observation_half_range", vec_to(c.observation_scale.half_range)},
          {"episodes", c.episodes},
          {"full_scale_episodes", c.full_scale_episodes},
          {"episode_steps", c.episode_steps},
          {"seeds", c.seeds},
          {"precision", c.precision},
          {"mpc", mpc_to(c.mpc)},
          {"sac", sac::to_json(c.sac)},
          {"focus", focus::to_json(c.focus)},
          {"replay_capacity", c.replay_capacity},
          {"batch_size", c.batch_size},
          {"learning_starts", c.learning_starts},
          {"ablation",
           {{"scalar_beta", c.ablation.scalar_beta},
            {"disable_regularizer", c.ablation.disable_regularizer},
            {"disable_learning", c.ablation.disable_learning}}},
          {"checkpoint_every", c.checkpoint_every},
          {"stop_on_failure", c.stop_on_failure},
          {"sweep", {{"base", c.sweep.base}, {"multipliers", sweep_mult}}}};
}

std::uint64_t fnv1a(const std::string& bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char ch : bytes) {
    h ^= ch;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::string config_hash(const RunConfig& c) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(fnv1a(to_json(c).dump())));
  return buf;
}

std::shared_ptr<envs::Plant> build_plant(const RunConfig& c, const envs::PlantParams& params) {
  auto plant = envs::make_plant(params);
  plant->set_action_space(c.action_space);
  plant->set_observation_scale(c.observation_scale);
  return plant;
}

}  // namespace rlar::trainer
