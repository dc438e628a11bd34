#pragma once

// Hand-built networks and the synthetic focus fixture shared by the unit
// tests and the acceptance run.

#include <rlar/focus/focus_module.hpp>
#include <rlar/sac/sac_agent.hpp>
#include <rlar/tabular/tabular_mdp.hpp>

#include "support.hpp"

#include <string>

namespace rlar::testing {

inline void expect(bool condition, const char* what) {
  if (!condition) throw ConfigError(std::string("fixture: ") + what);
}

/// Overwrites layer `l` of `net` (weights out x in, bias out).
inline void set_layer(approx::DenseNet<double>& net, int l, const Matd& weights, const Vecd& bias) {
  const auto& sizes = net.layer_sizes();
  expect(weights.rows() == sizes[l + 1] && weights.cols() == sizes[l] && bias.size() == sizes[l + 1],
         "layer shape mismatch");
  Eigen::Index offset = 0;
  for (int i = 0; i < l; ++i) offset += sizes[i] * sizes[i + 1] + sizes[i + 1];
  auto& p = net.params();
  for (int o = 0; o < sizes[l + 1]; ++o)
    for (int i = 0; i < sizes[l]; ++i) p[offset + o * sizes[l] + i] = weights(o, i);
  p.segment(offset + sizes[l] * sizes[l + 1], sizes[l + 1]) = bias;
}

/// Critic Q(s, a) = -scale * |a - peak| for a one-dimensional action, built
/// from two ReLU units; needs at least two units in each of two hidden layers.
inline void set_v_shaped_critic(approx::DenseNet<double>& net, double peak, double scale) {
  const auto& sizes = net.layer_sizes();
  expect(sizes.size() == 4 && sizes[1] >= 2 && sizes[2] >= 1, "critic needs two hidden layers");
  const int in = sizes[0], h1 = sizes[1], h2 = sizes[2];
  Matd w1 = Matd::Zero(h1, in);
  Vecd b1 = Vecd::Zero(h1);
  w1(0, in - 1) = 1.0;
  b1[0] = -peak;
  w1(1, in - 1) = -1.0;
  b1[1] = peak;
  Matd w2 = Matd::Zero(h2, h1);
  w2(0, 0) = 1.0;
  w2(0, 1) = 1.0;
  Matd w3 = Matd::Zero(1, h2);
  w3(0, 0) = -scale;
  set_layer(net, 0, w1, b1);
  set_layer(net, 1, w2, Vecd::Zero(h2));
  set_layer(net, 2, w3, Vecd::Zero(1));
}

/// Policy whose outputs ignore the observation: pre-squash mean `mean` and
/// raw log-std `raw_log_std` for every action dimension.
inline void set_constant_policy(sac::SacAgent<double>& agent, double mean, double raw_log_std) {
  auto& net = agent.policy();
  const int layers = net.layers();
  const int k = agent.action_dim();
  Vecd bias(2 * k);
  bias.head(k).setConstant(mean);
  bias.tail(k).setConstant(raw_log_std);
  set_layer(net, layers - 1, Matd::Zero(2 * k, net.layer_sizes()[layers - 1]), bias);
}

struct SyntheticFocusResult {
  double pretrained_min_beta = 0.0;
  double final_max_beta = 1.0;
  long updates = 0;
  bool reached = false;
};

/// Pretrained focus module (production options), a_reg = -0.5 and a nearly
/// deterministic RL action tanh(0.7) ~ 0.60 in network coordinates, and a
/// critic maximized uniquely at the RL action. Runs focus updates until
/// every fixture state has beta < `target` or the budget is spent.
inline SyntheticFocusResult run_synthetic_focus(long budget, double target, std::uint64_t seed) {
  Rng rng(seed);
  const int obs_dim = 3;
  sac::SacOptions so;
  so.hidden = {4, 4};
  sac::SacAgent<double> agent(obs_dim, Vecd::Ones(1), so, rng);
  const double rl_action = std::tanh(0.7);
  set_v_shaped_critic(agent.q1(), rl_action, 1.0);
  set_v_shaped_critic(agent.q2(), rl_action, 1.0);
  set_constant_policy(agent, 0.7, -40.0);

  focus::FocusModule<double> module(obs_dim, 1, focus::FocusOptions{}, rng);
  SyntheticFocusResult out;
  out.pretrained_min_beta = module.pretrain(rng).min_validation_beta;

  std::uniform_real_distribution<double> u(-1.0, 1.0);
  Matd obs(obs_dim, 64);
  for (Eigen::Index i = 0; i < obs.size(); ++i) obs.data()[i] = u(rng);
  const Matd a_reg = Matd::Constant(1, obs.cols(), -0.5);
  for (out.updates = 0; out.updates < budget; ++out.updates) {
    if (out.updates % 100 == 0) {
      out.final_max_beta = module.beta(obs).maxCoeff();
      if (out.final_max_beta < target) break;
    }
    module.update(agent, obs, a_reg, rng);
  }
  out.final_max_beta = module.beta(obs).maxCoeff();
  out.reached = out.final_max_beta < target;
  return out;
}

/// Grid distribution per state with roughly 40% of the atoms removed.
inline Matd random_rl_probs(int states, int grid, Rng& rng) {
  std::exponential_distribution<double> expo(1.0);
  std::bernoulli_distribution keep(0.6);
  Matd p(states, grid);
  for (int s = 0; s < states; ++s) {
    for (int g = 0; g < grid; ++g) p(s, g) = keep(rng) ? expo(rng) : 0.0;
    if (p.row(s).sum() == 0.0) p(s, 0) = 1.0;
    p.row(s) /= p.row(s).sum();
  }
  return p;
}

struct TabularInstance {
  tabular::TabularMdp mdp;
  Vecd a_reg;
  Matd rl_probs;
  Vecd beta;
};

/// 2 to 20 states, 21-point action grid on [-1, 1], gamma drawn from
/// [gamma_lo, gamma_hi], random regularizer actions, RL distributions and
/// focus weights.
inline TabularInstance random_instance(Rng& rng, double gamma_lo, double gamma_hi) {
  const int states = std::uniform_int_distribution<int>(2, 20)(rng);
  const double gamma = std::uniform_real_distribution<double>(gamma_lo, gamma_hi)(rng);
  TabularInstance out{tabular::random_mdp(states, tabular::uniform_grid(-1.0, 1.0, 21), gamma, rng), {}, {}, {}};
  out.a_reg = random_vector(states, rng);
  out.rl_probs = random_rl_probs(states, 21, rng);
  out.beta = random_vector(states, rng, 0.0, 1.0);
  return out;
}

}  // namespace rlar::testing
