#pragma once

#include <rlar/types.hpp>

#include <cmath>
#include <utility>
#include <vector>

namespace rlar::tabular {

/// Finite MDP over a 1-D action box. Transitions and rewards are given on an
/// action grid and interpolated linearly in between, so any action in the
/// box (in particular a blend of two grid actions) is well defined.
struct TabularMdp {
  int states = 0;
  double gamma = 0.9;
  Vecd action_grid;
  /// transitions[g](s, s') for grid action g; every row sums to 1.
  std::vector<Matd> transitions;
  /// rewards(s, g).
  Matd rewards;

  int grid_size() const { return static_cast<int>(action_grid.size()); }
  double low() const { return action_grid[0]; }
  double high() const { return action_grid[action_grid.size() - 1]; }

  /// Row P(. | s, a) and r(s, a) for any a in the box.
  Vecd transition_row(int s, double a) const;
  double reward(int s, double a) const;
  /// Throws ConfigError unless rows are distributions (to 1e-12) and
  /// shapes agree.
  void validate() const;
};

/// Finite mixture over actions: (action, probability) atoms.
using ActionDistribution = std::vector<std::pair<double, double>>;
using Policy = std::vector<ActionDistribution>;

Matd policy_transition(const TabularMdp& mdp, const Policy& pi);
Vecd policy_reward(const TabularMdp& mdp, const Policy& pi);

/// Solves (I - gamma P_pi) v = r_pi.
Vecd exact_value(const TabularMdp& mdp, const Policy& pi);
/// Repeated Bellman backups from v = 0.
Vecd value_iteration(const TabularMdp& mdp, const Policy& pi, int sweeps);
/// Q(s, a) = r(s, a) + gamma P(. | s, a) . v
double q_value(const TabularMdp& mdp, const Vecd& v, int s, double a);

/// Combined policy: with a_rl drawn from the grid distribution rl_probs(s, .),
/// the action is beta(s) a_reg(s) + (1 - beta(s)) a_rl.
Policy combined_policy(const TabularMdp& mdp, const Vecd& a_reg, const Matd& rl_probs, const Vecd& beta);

struct Theorem2Result {
  double beta_before = 0.0;
  double beta_after = 0.0;
  Vecd value_before;
  Vecd value_after;
  /// max over states of (V_before - V_after); <= slack means no violation.
  double worst_decrease = 0.0;
  bool improved_somewhere = false;
  bool passed = false;
};

/// Replaces beta(s_t) by the grid point maximizing the expected Q of the
/// blended action under the current combined policy (exhaustive search),
/// then compares exact values before and after at every state.
Theorem2Result theorem2_check(const TabularMdp& mdp, const Vecd& a_reg, const Matd& rl_probs, const Vecd& beta,
                              int s_t, const Vecd& beta_grid, double slack = 1e-10);

/// Normalized discounted occupancy of `pi` from state s:
/// (1 - gamma) e_s^T (I - gamma P_pi)^-1.
Vecd occupancy(const TabularMdp& mdp, const Policy& pi, int s);

struct PerformanceDifference {
  double lhs = 0.0;  // V^new(s) - V^old(s)
  double rhs = 0.0;  // E_{d^new}[A^old(s', new)] / (1 - gamma)
  double gap() const { return std::abs(lhs - rhs); }
};
PerformanceDifference performance_difference(const TabularMdp& mdp, const Policy& old_pi, const Policy& new_pi, int s);

/// Evenly spaced grid of `count` points on [lo, hi].
Vecd uniform_grid(double lo, double hi, int count);

/// Random instance: Dirichlet-like rows, rewards in [-1, 1].
TabularMdp random_mdp(int states, const Vecd& action_grid, double gamma, Rng& rng);

}  // namespace rlar::tabular
