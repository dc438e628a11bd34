#include <rlar/tabular/tabular_mdp.hpp>

#include <Eigen/LU>

#include <algorithm>
#include <cmath>

namespace rlar::tabular {
namespace {

// Grid cell and interpolation weight of `a`.
std::pair<int, double> locate(const TabularMdp& mdp, double a) {
  const int g = mdp.grid_size();
  const double x = (std::clamp(a, mdp.low(), mdp.high()) - mdp.low()) / (mdp.high() - mdp.low()) * (g - 1);
  const int i = std::min(static_cast<int>(std::floor(x)), g - 2);
  return {i, x - i};
}

}  // namespace

Vecd TabularMdp::transition_row(int s, double a) const {
  const auto [i, w] = locate(*this, a);
  return (1.0 - w) * transitions[i].row(s).transpose() + w * transitions[i + 1].row(s).transpose();
}

double TabularMdp::reward(int s, double a) const {
  const auto [i, w] = locate(*this, a);
  return (1.0 - w) * rewards(s, i) + w * rewards(s, i + 1);
}

void TabularMdp::validate() const {
  if (states < 1 || grid_size() < 2) throw ConfigError("tabular MDP needs states and at least two grid actions");
  if (!(gamma >= 0.0 && gamma < 1.0)) throw ConfigError("tabular MDP: gamma must lie in [0, 1)");
  if (static_cast<int>(transitions.size()) != grid_size() || rewards.rows() != states || rewards.cols() != grid_size())
    throw ConfigError("tabular MDP: tensor shapes disagree with the grid");
  for (const auto& p : transitions) {
    if (p.rows() != states || p.cols() != states) throw ConfigError("tabular MDP: transition matrix shape");
    if ((p.array() < 0.0).any()) throw ConfigError("tabular MDP: negative transition probability");
    if (((p.rowwise().sum().array() - 1.0).abs() > 1e-12).any())
      throw ConfigError("tabular MDP: transition rows must sum to 1");
  }
}

Matd policy_transition(const TabularMdp& mdp, const Policy& pi) {
  Matd p = Matd::Zero(mdp.states, mdp.states);
  for (int s = 0; s < mdp.states; ++s)
    for (const auto& [a, prob] : pi[s]) p.row(s) += prob * mdp.transition_row(s, a).transpose();
  return p;
}

Vecd policy_reward(const TabularMdp& mdp, const Policy& pi) {
  Vecd r = Vecd::Zero(mdp.states);
  for (int s = 0; s < mdp.states; ++s)
    for (const auto& [a, prob] : pi[s]) r[s] += prob * mdp.reward(s, a);
  return r;
}

Vecd exact_value(const TabularMdp& mdp, const Policy& pi) {
  if (!(mdp.gamma < 1.0)) throw ConfigError("exact_value: gamma >= 1 makes the Bellman system singular");
  if (static_cast<int>(pi.size()) != mdp.states) throw ConfigError("exact_value: policy has the wrong state count");
  const Matd a = Matd::Identity(mdp.states, mdp.states) - mdp.gamma * policy_transition(mdp, pi);
  return a.partialPivLu().solve(policy_reward(mdp, pi));
}

Vecd value_iteration(const TabularMdp& mdp, const Policy& pi, int sweeps) {
  const Matd p = policy_transition(mdp, pi);
  const Vecd r = policy_reward(mdp, pi);
  Vecd v = Vecd::Zero(mdp.states);
  for (int k = 0; k < sweeps; ++k) v = r + mdp.gamma * p * v;
  return v;
}

double q_value(const TabularMdp& mdp, const Vecd& v, int s, double a) {
  return mdp.reward(s, a) + mdp.gamma * mdp.transition_row(s, a).dot(v);
}

Policy combined_policy(const TabularMdp& mdp, const Vecd& a_reg, const Matd& rl_probs, const Vecd& beta) {
  Policy pi(mdp.states);
  for (int s = 0; s < mdp.states; ++s)
    for (int g = 0; g < mdp.grid_size(); ++g)
      if (rl_probs(s, g) > 0.0)
        pi[s].emplace_back(beta[s] * a_reg[s] + (1.0 - beta[s]) * mdp.action_grid[g], rl_probs(s, g));
  return pi;
}

Theorem2Result theorem2_check(const TabularMdp& mdp, const Vecd& a_reg, const Matd& rl_probs, const Vecd& beta,
                              int s_t, const Vecd& beta_grid, double slack) {
  Theorem2Result out;
  out.beta_before = beta[s_t];
  out.value_before = exact_value(mdp, combined_policy(mdp, a_reg, rl_probs, beta));

  auto expected_q = [&](double b) {
    double total = 0.0;
    for (int g = 0; g < mdp.grid_size(); ++g)
      if (rl_probs(s_t, g) > 0.0)
        total += rl_probs(s_t, g) * q_value(mdp, out.value_before, s_t, b * a_reg[s_t] + (1.0 - b) * mdp.action_grid[g]);
    return total;
  };
  // Keep the current weight unless a grid point is strictly better.
  double best_beta = beta[s_t];
  double best = expected_q(best_beta);
  for (Eigen::Index i = 0; i < beta_grid.size(); ++i) {
    const double value = expected_q(beta_grid[i]);
    if (value > best) {
      best = value;
      best_beta = beta_grid[i];
    }
  }
  out.beta_after = best_beta;
  Vecd updated = beta;
  updated[s_t] = best_beta;
  out.value_after = exact_value(mdp, combined_policy(mdp, a_reg, rl_probs, updated));
  out.worst_decrease = (out.value_before - out.value_after).maxCoeff();
  out.improved_somewhere = (out.value_after - out.value_before).maxCoeff() > slack;
  out.passed = out.worst_decrease <= slack;
  return out;
}

Vecd occupancy(const TabularMdp& mdp, const Policy& pi, int s) {
  const Matd a = Matd::Identity(mdp.states, mdp.states) - mdp.gamma * policy_transition(mdp, pi);
  const Vecd e = Vecd::Unit(mdp.states, s);
  return (1.0 - mdp.gamma) * a.transpose().partialPivLu().solve(e);
}

PerformanceDifference performance_difference(const TabularMdp& mdp, const Policy& old_pi, const Policy& new_pi, int s) {
  const Vecd v_old = exact_value(mdp, old_pi);
  const Vecd v_new = exact_value(mdp, new_pi);
  const Vecd d = occupancy(mdp, new_pi, s);
  Vecd advantage(mdp.states);
  for (int x = 0; x < mdp.states; ++x) {
    double q = 0.0;
    for (const auto& [a, prob] : new_pi[x]) q += prob * q_value(mdp, v_old, x, a);
    advantage[x] = q - v_old[x];
  }
  return {v_new[s] - v_old[s], d.dot(advantage) / (1.0 - mdp.gamma)};
}

Vecd uniform_grid(double lo, double hi, int count) {
  if (count < 2 || !(lo < hi)) throw ConfigError("uniform_grid needs count >= 2 and lo < hi");
  Vecd g(count);
  for (int i = 0; i < count; ++i) g[i] = lo + (hi - lo) * i / (count - 1);
  g[count - 1] = hi;
  return g;
}

TabularMdp random_mdp(int states, const Vecd& action_grid, double gamma, Rng& rng) {
  std::exponential_distribution<double> expo(1.0);
  std::uniform_real_distribution<double> unit(-1.0, 1.0);
  TabularMdp m;
  m.states = states;
  m.gamma = gamma;
  m.action_grid = action_grid;
  for (int g = 0; g < m.grid_size(); ++g) {
    Matd p(states, states);
    for (int s = 0; s < states; ++s) {
      for (int x = 0; x < states; ++x) p(s, x) = expo(rng);
      p.row(s) /= p.row(s).sum();
    }
    m.transitions.push_back(std::move(p));
  }
  m.rewards.resize(states, m.grid_size());
  for (int s = 0; s < states; ++s)
    for (int g = 0; g < m.grid_size(); ++g) m.rewards(s, g) = unit(rng);
  m.validate();
  return m;
}

}  // namespace rlar::tabular
