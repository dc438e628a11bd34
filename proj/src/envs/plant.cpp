#include <rlar/envs/biglucose.hpp>
#include <rlar/envs/cartpole.hpp>
#include <rlar/envs/cstr.hpp>
#include <rlar/envs/glucose.hpp>
#include <rlar/envs/plant.hpp>
#include <rlar/envs/presets.hpp>

namespace rlar::envs {

std::string to_string(PlantKind kind) {
  switch (kind) {
    case PlantKind::glucose: return "glucose";
    case PlantKind::biglucose: return "biglucose";
    case PlantKind::cstr: return "cstr";
    case PlantKind::cartpole: return "cartpole";
  }
  return "glucose";
}

PlantKind plant_kind_from_string(const std::string& name) {
  if (name == "glucose") return PlantKind::glucose;
  if (name == "biglucose") return PlantKind::biglucose;
  if (name == "cstr") return PlantKind::cstr;
  if (name == "cartpole") return PlantKind::cartpole;
  throw ConfigError("unknown plant '" + name + "'");
}

double PlantParams::at(const std::string& name) const {
  auto it = values.find(name);
  if (it == values.end()) throw ConfigError(to_string(kind) + " parameters lack '" + name + "'");
  return it->second;
}

void Plant::set_action_space(ActionSpace box) {
  if (box.low.size() != action_dim() || box.high.size() != action_dim())
    throw ConfigError("action space has the wrong dimension");
  if (!box.low.allFinite() || !box.high.allFinite() || !(box.low.array() < box.high.array()).all())
    throw ConfigError("action bounds must be finite with low < high");
  actions_ = std::move(box);
}

void Plant::set_observation_scale(ObservationScale scale) {
  if (scale.center.size() != obs_dim() || scale.half_range.size() != obs_dim() ||
      !(scale.half_range.array() > 0.0).all())
    throw ConfigError("observation scale needs obs_dim entries and positive half ranges");
  obs_scale_ = std::move(scale);
}

bool Plant::is_safe(const Vecd& s) const {
  if (!s.allFinite()) return false;
  const Vecd q = safety_quantities(s);
  return q.allFinite() && (q.array() >= safety_.lower.array()).all() && (q.array() <= safety_.upper.array()).all();
}

double Plant::reward(const Vecd& s) const {
  const bool safe = is_safe(s);
  if (safe) return -stage_cost(s);
  if (safety_.penalty_replaces_reward || !s.allFinite()) return safety_.penalty;
  const double base = -stage_cost(s);
  return std::isfinite(base) ? base + safety_.penalty : safety_.penalty;
}

std::shared_ptr<Plant> make_plant(const PlantParams& params) {
  validate(params);
  switch (params.kind) {
    case PlantKind::glucose: return std::make_shared<GlucosePlant>(params);
    case PlantKind::biglucose: return std::make_shared<BiGlucosePlant>(params);
    case PlantKind::cstr: return std::make_shared<CstrPlant>(params);
    case PlantKind::cartpole: return std::make_shared<CartPolePlant>(params);
  }
  throw ConfigError("unknown plant kind");
}

}  // namespace rlar::envs
