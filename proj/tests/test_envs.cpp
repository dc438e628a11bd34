#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <rlar/approx/checkpoint.hpp>
#include <rlar/envs/biglucose.hpp>
#include <rlar/envs/cartpole.hpp>
#include <rlar/envs/cstr.hpp>
#include <rlar/envs/environment.hpp>
#include <rlar/envs/glucose.hpp>
#include <rlar/envs/presets.hpp>

#include <cmath>
#include <filesystem>
#include <numbers>
#include <set>

using namespace rlar;
using envs::PlantKind;

namespace {

// Parameter rows typed in from the published tables, kept separate from the
// presets so a typo in one shows up as a mismatch.
struct Row {
  const char* name;
  double estimated;
  double actual;
};

const std::vector<Row>& published_rows(PlantKind kind) {
  static const std::vector<Row> glucose{{"G_b", 138, 138}, {"I_b", 7, 7},         {"n", 0.2814, 0.2},
                                        {"p1", 0, 0},      {"p2", 0.0142, 0.005}, {"p3", 15e-6, 5e-6},
                                        {"D0", 4, 4},      {"dt", 10, 10}};
  static const std::vector<Row> biglucose{
      {"D_G", 0.08, 0.08},      {"V_G", 0.14, 0.18},      {"k12", 0.0968, 0.0343},  {"F01", 0.0199, 0.0121},
      {"EGP0", 0.0213, 0.0148}, {"A_G", 0.8, 0.8},        {"t_max_G", 40, 40},      {"t_max_I", 55, 55},
      {"V_I", 0.12, 0.12},      {"k_e", 0.138, 0.138},    {"k_a1", 0.0088, 0.0031}, {"k_a2", 0.0302, 0.0752},
      {"k_a3", 0.0118, 0.0472}, {"k_b1", 7.58e-5, 9.11e-6}, {"k_b2", 1.42e-5, 6.77e-6},
      {"k_b3", 8.5e-4, 1.89e-3}, {"t_max_N", 20.59, 32.46}, {"k_N", 0.735, 0.620},   {"V_N", 23.46, 16.06},
      {"p", 0.074, 0.016},      {"S_N", 1.98e-4, 1.96e-4}, {"M_g", 180.16, 180.16}, {"BW", 68.5, 68.5},
      {"N_b", 48.13, 48.13},    {"dt", 10, 10}};
  static const std::vector<Row> cstr{
      {"k0_ab", 1.287e12, 1.287e12}, {"k0_bc", 1.287e12, 1.287e12}, {"k0_ad", 9.043e9, 9.043e9},
      {"R_gas", 8.3144621e-3, 8.3144621e-3}, {"E_A_ab", 9758.3, 9758.3}, {"E_A_bc", 9758.3, 9758.3},
      {"E_A_ad", 8560.0, 8560.0}, {"H_R_ab", 4.2, 4.2},   {"H_R_bc", -11.0, -11.0}, {"H_R_ad", -41.85, -41.85},
      {"rho", 0.9342, 0.9342},    {"C_p", 3.01, 3.01},   {"C_p_k", 2.0, 2.0},      {"A_R", 0.215, 0.215},
      {"V_R", 10.01, 10.01},      {"m_k", 5.0, 5.0},     {"T_in", 130.0, 130.0},   {"K_w", 4032.0, 4032.0},
      {"C_A0", 5.1, 5.1},         {"dt", 0.05, 0.05},    {"alpha", 1.0, 1.05},     {"beta", 1.0, 1.1}};
  static const std::vector<Row> cartpole{
      {"g", 9.8, 9.8}, {"m_c", 1.0, 0.8}, {"m_p", 0.1, 0.3}, {"l", 0.5, 0.6}, {"dt", 0.02, 0.02}};
  switch (kind) {
    case PlantKind::glucose: return glucose;
    case PlantKind::biglucose: return biglucose;
    case PlantKind::cstr: return cstr;
    case PlantKind::cartpole: return cartpole;
  }
  return glucose;
}

const std::set<std::string>& differing_rows(PlantKind kind) {
  static const std::set<std::string> glucose{"n", "p2", "p3"};
  static const std::set<std::string> biglucose{"V_G",  "k12",  "F01",  "EGP0",    "k_a1", "k_a2", "k_a3", "k_b1",
                                               "k_b2", "k_b3", "t_max_N", "k_N", "V_N",  "p",    "S_N"};
  static const std::set<std::string> cstr{"alpha", "beta"};
  static const std::set<std::string> cartpole{"m_c", "m_p", "l"};
  switch (kind) {
    case PlantKind::glucose: return glucose;
    case PlantKind::biglucose: return biglucose;
    case PlantKind::cstr: return cstr;
    case PlantKind::cartpole: return cartpole;
  }
  return glucose;
}

constexpr PlantKind kAllPlants[] = {PlantKind::glucose, PlantKind::biglucose, PlantKind::cstr, PlantKind::cartpole};

double magni_reference(double g) {
  const double risk = 3.35506 * (std::pow(std::log(g), 0.8353) - 3.7932);
  return -risk * risk;
}

approx::Rk4Stepper stepper_for(const envs::Plant& plant, int substeps = 10) { return {plant.dt(), substeps}; }

// Action that keeps the documented initial state at rest.
Vecd resting_action(const envs::Plant& plant) {
  if (plant.kind() == PlantKind::cstr) return static_cast<const envs::CstrPlant&>(plant).equilibrium().action;
  return Vecd::Zero(plant.action_dim());
}

}  // namespace

TEST_CASE("presets reproduce the published parameter tables") {
  for (PlantKind kind : kAllPlants) {
    CAPTURE(envs::to_string(kind));
    const auto est = envs::preset(kind, "estimated");
    const auto act = envs::preset(kind, "actual");
    const auto& rows = published_rows(kind);
    CHECK(est.values.size() == rows.size());
    CHECK(act.values.size() == rows.size());
    for (const Row& r : rows) {
      CAPTURE(r.name);
      CHECK(est.at(r.name) == r.estimated);
      CHECK(act.at(r.name) == r.actual);
    }
  }
}

TEST_CASE("estimated and actual presets differ exactly in the table rows that differ") {
  for (PlantKind kind : kAllPlants) {
    CAPTURE(envs::to_string(kind));
    const auto est = envs::preset(kind, "estimated");
    const auto act = envs::preset(kind, "actual");
    std::set<std::string> differ;
    for (const auto& [name, value] : est.values)
      if (act.at(name) != value) differ.insert(name);
    CHECK(differ == differing_rows(kind));
  }
}

TEST_CASE("perturb_params") {
  SUBCASE("unit multipliers leave every plant unchanged") {
    for (PlantKind kind : kAllPlants) {
      const auto base = envs::preset(kind, "actual");
      std::map<std::string, double> ones;
      for (const auto& [name, value] : base.values) ones[name] = 1.0;
      CHECK(envs::perturb_params(base, ones) == base);
    }
  }
  SUBCASE("hardest glucose sweep cell") {
    const auto base = envs::preset(PlantKind::glucose, "estimated");
    const auto cell = envs::perturb_params(base, {{"n", 3.0 / 16.0}, {"p2", 0.25}});
    CHECK(cell.at("n") == doctest::Approx(0.2814 * 3.0 / 16.0).epsilon(1e-15));
    CHECK(cell.at("p2") == doctest::Approx(0.0142 / 4.0).epsilon(1e-15));
    for (const char* other : {"G_b", "I_b", "p1", "p3", "D0", "dt"}) CHECK(cell.at(other) == base.at(other));
  }
  SUBCASE("cart pole actual equals scaled estimated") {
    const auto est = envs::preset(PlantKind::cartpole, "estimated");
    const auto act = envs::preset(PlantKind::cartpole, "actual");
    const auto scaled = envs::perturb_params(est, {{"m_c", 0.8}, {"m_p", 3.0}, {"l", 1.2}});
    for (const auto& [name, value] : act.values) CHECK(scaled.at(name) == doctest::Approx(value).epsilon(1e-12));
  }
  SUBCASE("unknown key") {
    CHECK_THROWS_AS(envs::perturb_params(envs::preset(PlantKind::glucose, "actual"), {{"p4", 2.0}}), ConfigError);
  }
}

TEST_CASE("initial states") {
  SUBCASE("glucose rests at (G_b, 0, I_b)") {
    for (const char* role : {"estimated", "actual"}) {
      const auto plant = envs::make_plant(envs::preset(PlantKind::glucose, role));
      const auto [state, obs] = envs::env_reset(*plant);
      CHECK(state.x == Eigen::Vector3d(138.0, 0.0, 7.0));
      CHECK(state.t == 0.0);
      CHECK(obs == Eigen::Vector3d(138.0, 0.0, 0.0));
    }
  }
  SUBCASE("cart pole starts tilted by six degrees") {
    const auto plant = envs::make_plant(envs::preset(PlantKind::cartpole, "actual"));
    const Vecd s = plant->initial_state();
    CHECK(s[2] == doctest::Approx(0.10472).epsilon(1e-5));
    CHECK(s[0] == 0.0);
    CHECK(s[1] == 0.0);
    CHECK(s[3] == 0.0);
  }
  SUBCASE("biglucose steady state solves the right-hand side") {
    for (const char* role : {"estimated", "actual"}) {
      CAPTURE(role);
      const auto plant = envs::make_plant(envs::preset(PlantKind::biglucose, role));
      const Vecd s = plant->initial_state();
      const Vecd f = plant->derivative(s, Vecd::Zero(2), 0.0, {.disturbance = false});
      CHECK(f.norm() < 1e-10);
      const double g = plant->safety_quantities(s)[0];
      CHECK(g > 10.0);
      CHECK(g < 1000.0);
    }
  }
  SUBCASE("cstr starts at C_B = 0.5 at rest under its equilibrium feed") {
    for (const char* role : {"estimated", "actual"}) {
      CAPTURE(role);
      const auto plant = envs::make_plant(envs::preset(PlantKind::cstr, role));
      const auto& cstr = static_cast<const envs::CstrPlant&>(*plant);
      const auto eq = cstr.equilibrium();
      CHECK(eq.state[1] == doctest::Approx(0.5).epsilon(1e-12));
      CHECK(eq.action[1] == 0.0);
      CHECK(plant->action_space().contains(eq.action));
      CHECK(plant->derivative(eq.state, eq.action, 0.0).norm() < 1e-8);
      CHECK(plant->is_safe(eq.state));
    }
  }
}

TEST_CASE("documented equilibria are fixed points of one step") {
  for (PlantKind kind : kAllPlants) {
    for (const char* role : {"estimated", "actual"}) {
      CAPTURE(envs::to_string(kind));
      CAPTURE(role);
      const auto plant = envs::make_plant(envs::preset(kind, role));
      Vecd s = plant->initial_state();
      if (kind == PlantKind::cartpole) s.setZero();  // upright equilibrium
      const Vecd next = plant->step(stepper_for(*plant), s, resting_action(*plant), 0.0, {.disturbance = false});
      CHECK((next - s).norm() <= 1e-8 * std::max(1.0, s.norm()));
    }
  }
}

TEST_CASE("glucose reward") {
  const auto plant = envs::make_plant(envs::preset(PlantKind::glucose, "actual"));
  auto at = [&](double g) { return plant->reward(Eigen::Vector3d(g, 0.0, 7.0)); };
  CHECK(at(138.0) == doctest::Approx(magni_reference(138.0)).epsilon(1e-12));
  CHECK(at(138.0) < 0.0);
  CHECK(at(138.0) > -1e-3);
  // exp(3.7932^(1 / 0.8353)) evaluated independently.
  CHECK(envs::magni_root() == doctest::Approx(138.889733).epsilon(1e-8));
  CHECK(std::abs(at(envs::magni_root())) < 1e-20);
  CHECK(at(10.0) == doctest::Approx(magni_reference(10.0)).epsilon(1e-12));
  CHECK(at(10.0) > -1e5);
  CHECK(at(1000.0) == doctest::Approx(magni_reference(1000.0)).epsilon(1e-12));
  CHECK(at(9.99) == -1e5);
  CHECK(at(1005.0) == -1e5);
  CHECK(envs::magni_risk(9.99) == -1e5);
  CHECK(envs::magni_risk(10.0) == doctest::Approx(magni_reference(10.0)));

  SUBCASE("risk grows monotonically away from the single root") {
    const double root = envs::magni_root();
    double previous = 0.0;
    for (double g = root; g <= 1000.0; g += 0.05) {
      const double v = at(g);
      CHECK(v <= previous);
      previous = v;
    }
    previous = 0.0;
    for (double g = root; g >= 10.0; g -= 0.05) {
      const double v = at(g);
      CHECK(v <= previous);
      previous = v;
    }
    double best = 10.0;
    for (int k = 0; k <= 99000; ++k) {
      const double g = 10.0 + 0.01 * k;
      if (at(g) > at(best)) best = g;
    }
    CHECK(std::abs(best - root) <= 0.01);
  }
}

TEST_CASE("biglucose reward scales the in-range branch by 10") {
  const auto params = envs::preset(PlantKind::biglucose, "actual");
  const auto plant = envs::make_plant(params);
  Vecd s = plant->initial_state();
  for (double g : {50.0, 138.0, 300.0}) {
    s[0] = g * params.at("V_G") / 18.0;
    CHECK(plant->reward(s) == doctest::Approx(10.0 * magni_reference(g)).epsilon(1e-12));
  }
  s[0] = 5.0 * params.at("V_G") / 18.0;
  CHECK(plant->reward(s) == -1e5);
}

TEST_CASE("cart pole reward at the upright center is zero") {
  const auto plant = envs::make_plant(envs::preset(PlantKind::cartpole, "actual"));
  for (double x : {-0.25, 0.0, 0.1, 0.25}) CHECK(plant->reward(Eigen::Vector4d(x, 0.3, 0.0, -0.2)) == 0.0);
  CHECK(plant->reward(Eigen::Vector4d(1.25, 0.0, 0.1, 0.0)) == doctest::Approx(-(1000.0 * 0.01 + 1.0)));
}

TEST_CASE("safety violation, failure flag and penalty branch coincide") {
  SUBCASE("glucose plants") {
    for (PlantKind kind : {PlantKind::glucose, PlantKind::biglucose}) {
      const auto params = envs::preset(kind, "actual");
      const auto plant = envs::make_plant(params);
      Vecd s = plant->initial_state();
      for (double g = 0.5; g < 1500.0; g *= 1.01) {
        if (kind == PlantKind::glucose)
          s[0] = g;
        else
          s[0] = g * params.at("V_G") / 18.0;
        const double measured = plant->safety_quantities(s)[0];
        const bool inside = measured >= 10.0 && measured <= 1000.0;
        CHECK(plant->is_safe(s) == inside);
        CHECK((plant->reward(s) == -1e5) == !inside);
      }
    }
  }
  SUBCASE("cstr") {
    const auto plant = envs::make_plant(envs::preset(PlantKind::cstr, "actual"));
    const Vecd lo = Eigen::Vector4d(0.1, 0.1, 50.0, 50.0), hi = Eigen::Vector4d(2.0, 2.0, 200.0, 150.0);
    const Vecd center = Eigen::Vector4d(1.0, 0.7, 120.0, 100.0);
    for (int dim = 0; dim < 4; ++dim) {
      for (int k = -20; k <= 120; ++k) {
        Vecd s = center;
        s[dim] = lo[dim] + (hi[dim] - lo[dim]) * k / 100.0;
        const bool inside = (s.array() >= lo.array()).all() && (s.array() <= hi.array()).all();
        const double base = -100.0 * (s[1] - 0.6) * (s[1] - 0.6);
        CHECK(plant->is_safe(s) == inside);
        CHECK(plant->reward(s) == doctest::Approx(inside ? base : base - 1e4).epsilon(1e-12));
      }
    }
  }
  SUBCASE("cart pole") {
    const auto plant = envs::make_plant(envs::preset(PlantKind::cartpole, "actual"));
    const double theta_max = 12.0 * std::numbers::pi / 360.0;
    for (int i = -60; i <= 60; ++i) {
      for (int j = -60; j <= 60; ++j) {
        const double x = 3.0 * i / 50.0, theta = 1.2 * theta_max * j / 50.0;
        const Vecd s = Eigen::Vector4d(x, 0.0, theta, 0.0);
        const bool inside = std::abs(x) <= 2.4 && std::abs(theta) <= theta_max;
        const double base = -1000.0 * theta * theta - std::max(0.0, std::abs(x) - 0.25);
        CHECK(plant->is_safe(s) == inside);
        CHECK(plant->reward(s) == doctest::Approx(inside ? base : base - 1e4).epsilon(1e-12));
      }
    }
  }
  SUBCASE("non-finite states are unsafe and penalized") {
    for (PlantKind kind : kAllPlants) {
      const auto plant = envs::make_plant(envs::preset(kind, "actual"));
      Vecd s = plant->initial_state();
      s[0] = std::nan("");
      CHECK_FALSE(plant->is_safe(s));
      CHECK(plant->reward(s) == plant->safety().penalty);
    }
  }
}

TEST_CASE("biglucose piecewise terms") {
  const auto params = envs::preset(PlantKind::biglucose, "actual");
  const auto plant = envs::make_plant(params);
  const double vg = params.at("V_G"), f01 = params.at("F01");
  // With every other term zeroed, dQ1/dt = -F01c(G) - F_R(G).
  auto q1_rate = [&](double g) {
    Vecd s = Vecd::Zero(12);
    s[0] = g * vg / 18.0;
    s[10] = params.at("N_b");
    return plant->derivative(s, Vecd::Zero(2), 0.0, {.disturbance = false})[0] - params.at("EGP0");
  };
  CHECK(q1_rate(81.0) == doctest::Approx(-f01).epsilon(1e-14));
  CHECK(q1_rate(81.0 - 1e-9) == doctest::Approx(-f01).epsilon(1e-9));
  CHECK(q1_rate(81.0 + 1e-9) == doctest::Approx(-f01).epsilon(1e-9));
  CHECK(q1_rate(40.5) == doctest::Approx(-f01 / 2.0).epsilon(1e-12));
  CHECK(q1_rate(150.0) == doctest::Approx(-f01).epsilon(1e-14));
  CHECK(q1_rate(162.0) == doctest::Approx(-f01).epsilon(1e-14));
  CHECK(q1_rate(180.0) == doctest::Approx(-f01 - 0.003 * vg).epsilon(1e-12));
  // Renal clearance never adds glucose.
  for (double g = 100.0; g <= 400.0; g += 1.0) CHECK(q1_rate(g) <= -f01 + 1e-15);
}

TEST_CASE("observed glucose rate is the exact successive difference") {
  for (PlantKind kind : {PlantKind::glucose, PlantKind::biglucose}) {
    const auto plant = envs::make_plant(envs::preset(kind, "actual"));
    envs::Environment env(plant, {plant->dt(), 10}, 30);
    Vecd obs = env.reset();
    CHECK(obs[1] == 0.0);
    double t = 0.0;
    for (int k = 0; k < 30; ++k) {
      const double previous = obs[0];
      const auto r = env.step(Vecd::Constant(plant->action_dim(), 1.0));
      t += plant->dt();
      obs = r.obs;
      CHECK(obs[1] == obs[0] - previous);
      CHECK(obs[2] == doctest::Approx(t).epsilon(1e-14));
      CHECK(obs[0] == plant->safety_quantities(env.state().x)[0]);
      if (r.done) break;
    }
  }
}

TEST_CASE("environment episode bookkeeping") {
  SUBCASE("heavy insulin ends the glucose episode with the penalty") {
    const auto plant = envs::make_plant(envs::preset(PlantKind::glucose, "actual"));
    envs::Environment env(plant, {plant->dt(), 10}, 100);
    env.reset();
    envs::StepResult last;
    int steps = 0;
    do {
      last = env.step(Vecd::Constant(1, 100.0));
      ++steps;
    } while (!last.done);
    CHECK(steps < 100);
    CHECK(last.failed);
    CHECK(last.reward == -1e5);
    CHECK(env.state().x[0] < 10.0);
    CHECK_THROWS_AS(env.step(Vecd::Constant(1, 0.0)), ConfigError);
  }
  SUBCASE("step limit ends without failure") {
    const auto plant = envs::make_plant(envs::preset(PlantKind::glucose, "actual"));
    envs::Environment env(plant, {plant->dt(), 10}, 5);
    env.reset();
    for (int k = 0; k < 5; ++k) {
      const auto r = env.step(Vecd::Zero(1));
      CHECK(r.done == (k == 4));
      CHECK_FALSE(r.failed);
    }
    CHECK(env.state().t == doctest::Approx(50.0));
  }
  SUBCASE("actions outside the box are rejected") {
    const auto plant = envs::make_plant(envs::preset(PlantKind::cartpole, "actual"));
    envs::Environment env(plant, {plant->dt(), 10}, 5);
    env.reset();
    CHECK_THROWS_AS(env.step(Vecd::Constant(1, 1.5)), ConfigError);
    CHECK_THROWS_AS(env.step(Vecd::Zero(2)), ConfigError);
  }
  SUBCASE("an unforced cart pole falls over") {
    const auto plant = envs::make_plant(envs::preset(PlantKind::cartpole, "actual"));
    envs::Environment env(plant, {plant->dt(), 10}, 400);
    env.reset();
    envs::StepResult r;
    do r = env.step(Vecd::Zero(1));
    while (!r.done);
    CHECK(r.failed);
    CHECK(env.state().x[2] > 0.0);
  }
}

TEST_CASE("preset schema") {
  const auto good = envs::to_json(envs::preset(PlantKind::cstr, "actual"));
  CHECK(envs::params_from_json(good) == envs::preset(PlantKind::cstr, "actual"));

  auto broken = good;
  broken["parameters"].erase("alpha");
  CHECK_THROWS_AS(envs::params_from_json(broken), ConfigError);
  broken = good;
  broken["parameters"]["gamma"] = 1.0;
  CHECK_THROWS_AS(envs::params_from_json(broken), ConfigError);
  broken = good;
  broken["parameters"]["rho"] = -1.0;
  CHECK_THROWS_AS(envs::params_from_json(broken), ConfigError);
  broken = good;
  broken["parameters"]["rho"] = "dense";
  CHECK_THROWS_AS(envs::params_from_json(broken), ConfigError);
  broken = good;
  broken["plant"] = "acrobot";
  CHECK_THROWS_AS(envs::params_from_json(broken), ConfigError);
  CHECK_THROWS_AS(envs::params_from_json(nlohmann::json::array()), ConfigError);
  CHECK_THROWS_AS(envs::preset(PlantKind::cstr, "nominal"), ConfigError);

  auto meal = envs::preset(PlantKind::glucose, "actual");
  meal.values["D0"] = 0.0;
  CHECK_NOTHROW(envs::validate(meal));
  meal.values["D0"] = -1.0;
  CHECK_THROWS_AS(envs::validate(meal), ConfigError);

  // Signed enthalpies and a zero p1 are legal.
  CHECK_NOTHROW(envs::validate(envs::preset(PlantKind::glucose, "actual")));
  auto biglucose = envs::preset(PlantKind::biglucose, "actual");
  biglucose.values["c_conv"] = 60.0;
  CHECK_NOTHROW(envs::validate(biglucose));
  CHECK(static_cast<const envs::BiGlucosePlant&>(*envs::make_plant(biglucose)).c_conv() == 60.0);
}

TEST_CASE("shipped preset files match the built-in tables") {
  const std::filesystem::path dir = std::filesystem::path(RLAR_SOURCE_DIR) / "configs" / "plants";
  for (PlantKind kind : kAllPlants) {
    for (const char* role : {"estimated", "actual"}) {
      const auto file = dir / (envs::to_string(kind) + "_" + role + ".json");
      CAPTURE(file.string());
      REQUIRE(std::filesystem::exists(file));
      CHECK(envs::load_plant_params(file) == envs::preset(kind, role));
    }
  }
}

TEST_CASE("plant jacobians agree with finite differences of the step") {
  for (PlantKind kind : kAllPlants) {
    CAPTURE(envs::to_string(kind));
    const auto plant = envs::make_plant(envs::preset(kind, "estimated"));
    const auto stepper = stepper_for(*plant);
    const Vecd s = plant->initial_state();
    const Vecd a = plant->action_space().center();
    const auto lin = plant->linearize_step(stepper, s, a, 0.0);
    for (int j = 0; j < plant->state_dim(); ++j) {
      const double h = 1e-6 * std::max(1.0, std::abs(s[j]));
      Vecd up = s, down = s;
      up[j] += h;
      down[j] -= h;
      const Vecd fd = (plant->step(stepper, up, a, 0.0) - plant->step(stepper, down, a, 0.0)) / (2 * h);
      const Vecd ad = lin.state_jacobian.col(j);
      CHECK((fd - ad).norm() <= 1e-4 * std::max({1.0, fd.norm(), ad.norm()}));
    }
  }
}
