#include <rlar/approx/checkpoint.hpp>
#include <rlar/envs/presets.hpp>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <set>

namespace rlar::envs {
namespace {

using Table = std::vector<std::pair<std::string, std::pair<double, double>>>;  // name -> (estimated, actual)

const Table& table(PlantKind kind) {
  static const Table glucose{
      {"G_b", {138.0, 138.0}}, {"I_b", {7.0, 7.0}},     {"n", {0.2814, 0.2}}, {"p1", {0.0, 0.0}},
      {"p2", {0.0142, 0.005}}, {"p3", {15e-6, 5e-6}}, {"D0", {4.0, 4.0}},    {"dt", {10.0, 10.0}},
  };
  static const Table biglucose{
      {"D_G", {0.08, 0.08}},        {"V_G", {0.14, 0.18}},         {"k12", {0.0968, 0.0343}},
      {"F01", {0.0199, 0.0121}},    {"EGP0", {0.0213, 0.0148}},    {"A_G", {0.8, 0.8}},
      {"t_max_G", {40.0, 40.0}},    {"t_max_I", {55.0, 55.0}},     {"V_I", {0.12, 0.12}},
      {"k_e", {0.138, 0.138}},      {"k_a1", {0.0088, 0.0031}},    {"k_a2", {0.0302, 0.0752}},
      {"k_a3", {0.0118, 0.0472}},   {"k_b1", {7.58e-5, 9.11e-6}},  {"k_b2", {1.42e-5, 6.77e-6}},
      {"k_b3", {8.5e-4, 1.89e-3}},  {"t_max_N", {20.59, 32.46}},   {"k_N", {0.735, 0.620}},
      {"V_N", {23.46, 16.06}},      {"p", {0.074, 0.016}},         {"S_N", {1.98e-4, 1.96e-4}},
      {"M_g", {180.16, 180.16}},    {"BW", {68.5, 68.5}},          {"N_b", {48.13, 48.13}},
      {"dt", {10.0, 10.0}},
  };
  static const Table cstr{
      {"k0_ab", {1.287e12, 1.287e12}}, {"k0_bc", {1.287e12, 1.287e12}}, {"k0_ad", {9.043e9, 9.043e9}},
      {"R_gas", {8.3144621e-3, 8.3144621e-3}},
      {"E_A_ab", {9758.3, 9758.3}},    {"E_A_bc", {9758.3, 9758.3}},    {"E_A_ad", {8560.0, 8560.0}},
      {"H_R_ab", {4.2, 4.2}},          {"H_R_bc", {-11.0, -11.0}},      {"H_R_ad", {-41.85, -41.85}},
      {"rho", {0.9342, 0.9342}},       {"C_p", {3.01, 3.01}},           {"C_p_k", {2.0, 2.0}},
      {"A_R", {0.215, 0.215}},         {"V_R", {10.01, 10.01}},         {"m_k", {5.0, 5.0}},
      {"T_in", {130.0, 130.0}},        {"K_w", {4032.0, 4032.0}},       {"C_A0", {5.1, 5.1}},
      {"dt", {0.05, 0.05}},            {"alpha", {1.0, 1.05}},          {"beta", {1.0, 1.1}},
  };
  static const Table cartpole{
      {"g", {9.8, 9.8}}, {"m_c", {1.0, 0.8}}, {"m_p", {0.1, 0.3}}, {"l", {0.5, 0.6}}, {"dt", {0.02, 0.02}},
  };
  switch (kind) {
    case PlantKind::glucose: return glucose;
    case PlantKind::biglucose: return biglucose;
    case PlantKind::cstr: return cstr;
    case PlantKind::cartpole: return cartpole;
  }
  return glucose;
}

// Parameters that may legitimately be zero or negative.
const std::set<std::string>& signed_parameters(PlantKind kind) {
  static const std::set<std::string> glucose{"p1"};
  static const std::set<std::string> cstr{"H_R_ab", "H_R_bc", "H_R_ad"};
  static const std::set<std::string> none;
  switch (kind) {
    case PlantKind::glucose: return glucose;
    case PlantKind::cstr: return cstr;
    default: return none;
  }
}

// Meal sizes may be zero (a meal-free scenario) but not negative.
const std::set<std::string>& nonnegative_parameters(PlantKind kind) {
  static const std::set<std::string> glucose{"D0"};
  static const std::set<std::string> biglucose{"D_G"};
  static const std::set<std::string> none;
  switch (kind) {
    case PlantKind::glucose: return glucose;
    case PlantKind::biglucose: return biglucose;
    default: return none;
  }
}

// Optional extras accepted on top of the table rows.
const std::set<std::string>& optional_parameters(PlantKind kind) {
  static const std::set<std::string> biglucose{"c_conv"};
  static const std::set<std::string> none;
  return kind == PlantKind::biglucose ? biglucose : none;
}

}  // namespace

PlantParams preset(PlantKind kind, const std::string& role) {
  if (role != "estimated" && role != "actual") throw ConfigError("preset role must be 'estimated' or 'actual'");
  PlantParams p;
  p.kind = kind;
  p.role = role;
  for (const auto& [name, values] : table(kind)) p.values[name] = role == "estimated" ? values.first : values.second;
  return p;
}

PlantParams perturb_params(const PlantParams& base, const std::map<std::string, double>& multipliers) {
  PlantParams out = base;
  for (const auto& [name, factor] : multipliers) {
    auto it = out.values.find(name);
    if (it == out.values.end()) throw ConfigError("cannot perturb unknown " + to_string(base.kind) + " parameter '" + name + "'");
    it->second *= factor;
  }
  return out;
}

const std::vector<std::string>& required_parameters(PlantKind kind) {
  static const auto names = [] {
    std::map<PlantKind, std::vector<std::string>> m;
    for (auto k : {PlantKind::glucose, PlantKind::biglucose, PlantKind::cstr, PlantKind::cartpole})
      for (const auto& row : table(k)) m[k].push_back(row.first);
    return m;
  }();
  return names.at(kind);
}

void validate(const PlantParams& params) {
  const std::string plant = to_string(params.kind);
  const auto& required = required_parameters(params.kind);
  for (const auto& name : required)
    if (!params.values.count(name)) throw ConfigError(plant + " parameters: missing '" + name + "'");
  const auto& optional = optional_parameters(params.kind);
  const auto& signed_ok = signed_parameters(params.kind);
  const auto& nonnegative = nonnegative_parameters(params.kind);
  for (const auto& [name, value] : params.values) {
    const bool known = std::find(required.begin(), required.end(), name) != required.end() || optional.count(name);
    if (!known) throw ConfigError(plant + " parameters: unknown key '" + name + "'");
    if (!std::isfinite(value)) throw ConfigError(plant + " parameters: '" + name + "' is not finite");
    if (nonnegative.count(name)) {
      if (value < 0.0) throw ConfigError(plant + " parameters: '" + name + "' must not be negative");
    } else if (!signed_ok.count(name) && !(value > 0.0)) {
      throw ConfigError(plant + " parameters: '" + name + "' must be positive");
    }
  }
}

nlohmann::json to_json(const PlantParams& params) {
  nlohmann::json values = nlohmann::json::object();
  for (const auto& [name, value] : params.values) values[name] = value;
  return {{"plant", to_string(params.kind)}, {"role", params.role}, {"parameters", values}};
}

PlantParams params_from_json(const nlohmann::json& j) {
  if (!j.is_object() || !j.contains("plant") || !j.contains("parameters") || !j.at("parameters").is_object())
    throw ConfigError("plant preset needs 'plant' and an object 'parameters'");
  PlantParams p;
  p.kind = plant_kind_from_string(j.at("plant").get<std::string>());
  p.role = j.value("role", std::string{"custom"});
  for (const auto& [name, value] : j.at("parameters").items()) {
    if (!value.is_number()) throw ConfigError("plant preset: '" + name + "' is not a number");
    p.values[name] = value.get<double>();
  }
  validate(p);
  return p;
}

PlantParams load_plant_params(const std::filesystem::path& path) {
  return params_from_json(approx::read_json_file(path));
}

ActionSpace default_action_space(PlantKind kind) {
  switch (kind) {
    case PlantKind::glucose: return {Vecd::Constant(1, 0.0), Vecd::Constant(1, 100.0)};
    case PlantKind::biglucose: return {Eigen::Vector2d(0.0, 0.0), Eigen::Vector2d(100.0, 100.0)};
    case PlantKind::cstr: return {Eigen::Vector2d(5.0, -8500.0), Eigen::Vector2d(100.0, 0.0)};
    case PlantKind::cartpole: return {Vecd::Constant(1, -1.0), Vecd::Constant(1, 1.0)};
  }
  return {};
}

SafetySpec default_safety(PlantKind kind) {
  SafetySpec s;
  switch (kind) {
    case PlantKind::glucose:
    case PlantKind::biglucose:
      s.names = {"G"};
      s.lower = Vecd::Constant(1, 10.0);
      s.upper = Vecd::Constant(1, 1000.0);
      s.penalty = -1e5;
      s.penalty_replaces_reward = true;
      break;
    case PlantKind::cstr:
      s.names = {"C_A", "C_B", "T_R", "T_K"};
      s.lower = Eigen::Vector4d(0.1, 0.1, 50.0, 50.0);
      s.upper = Eigen::Vector4d(2.0, 2.0, 200.0, 150.0);
      s.penalty = -1e4;
      break;
    case PlantKind::cartpole:
      s.names = {"x", "theta"};
      s.lower = Eigen::Vector2d(-2.4, -12.0 * std::numbers::pi / 360.0);
      s.upper = Eigen::Vector2d(2.4, 12.0 * std::numbers::pi / 360.0);
      s.penalty = -1e4;
      break;
  }
  return s;
}

ObservationScale default_observation_scale(PlantKind kind) {
  switch (kind) {
    case PlantKind::glucose:
    case PlantKind::biglucose:
      return {Eigen::Vector3d(200.0, 0.0, 500.0), Eigen::Vector3d(150.0, 30.0, 500.0)};
    case PlantKind::cstr:
      return {Eigen::Vector4d(1.05, 1.05, 125.0, 100.0), Eigen::Vector4d(0.95, 0.95, 75.0, 50.0)};
    case PlantKind::cartpole:
      return {Eigen::Vector4d::Zero(), Eigen::Vector4d(2.4, 2.0, 12.0 * std::numbers::pi / 360.0, 2.0)};
  }
  return {};
}

int default_episode_steps(PlantKind kind) { return kind == PlantKind::cartpole ? 400 : 100; }

int default_mpc_horizon(PlantKind kind) { return kind == PlantKind::glucose ? 100 : 20; }

}  // namespace rlar::envs
