#pragma once

#include <rlar/envs/plant.hpp>
#include <rlar/regularizer/box_bfgs.hpp>

#include <memory>
#include <optional>

namespace rlar::regularizer {

struct MpcOptions {
  int horizon = 20;
  /// State constraints are tightened by this fraction of each bound's range.
  double constraint_margin = 0.02;
  /// Max violation of the (tightened) constraints accepted as feasible.
  double constraint_tolerance = 1e-4;
  int max_outer_iterations = 12;
  int max_inner_iterations = 200;
  double gradient_tolerance = 1e-6;
  double value_tolerance = 1e-10;
  double initial_penalty = 100.0;
  double penalty_growth = 10.0;
  double max_penalty = 1e10;
  /// Softplus width for the model's piecewise seams.
  double seam_width = 1e-2;
  int substeps = 10;
};

/// Receding-horizon problem over the estimated model: minimize the summed
/// negated reward of states s_0..s_N under s_{k+1} = f(s_k, a_k), box
/// actions, and safety bounds on s_1..s_N.
class MpcProblem {
 public:
  MpcProblem(std::shared_ptr<const envs::Plant> model, MpcOptions options);

  const envs::Plant& model() const { return *model_; }
  std::shared_ptr<const envs::Plant> model_ptr() const { return model_; }
  const MpcOptions& options() const { return options_; }
  int horizon() const { return options_.horizon; }
  int action_dim() const { return model_->action_dim(); }
  const approx::Rk4Stepper& stepper() const { return stepper_; }
  const envs::DynamicsOptions& dynamics() const { return dynamics_; }
  const Vecd& lower() const { return lower_; }
  const Vecd& upper() const { return upper_; }

  /// Box midpoint, or 0 where 0 lies inside the box.
  Vecd cold_start_action() const;

  /// Objective of an action sequence (columns are a_0..a_{N-1}).
  double objective(const Vecd& s0, double t0, const Matd& actions) const;
  /// Largest violation of the tightened constraints along the rollout.
  double violation(const Vecd& s0, double t0, const Matd& actions) const;
  /// States s_0..s_N (columns) under the model.
  Matd rollout(const Vecd& s0, double t0, const Matd& actions) const;

 private:
  std::shared_ptr<const envs::Plant> model_;
  MpcOptions options_;
  approx::Rk4Stepper stepper_;
  envs::DynamicsOptions dynamics_;
  Vecd lower_, upper_;
};

struct MpcSolution {
  Matd actions;  // action_dim x N
  double objective = 0.0;
  double max_violation = 0.0;
  int iterations = 0;
  int outer_iterations = 0;
  bool converged = false;
};

/// Single-shooting augmented-Lagrangian solve from model state s0 at time t0.
/// Without a warm start the initial guess is the cold-start action repeated.
MpcSolution mpc_solve(const MpcProblem& problem, const Vecd& s0, double t0,
                      const std::optional<Matd>& warm_start = std::nullopt);

/// Previous solution advanced one step, last action repeated.
Matd shift_warm_start(const Matd& actions);

/// Value and gradient (w.r.t. actions, same layout) of the augmented
/// Lagrangian with multipliers `mu` (2 * NQ * N) and penalty `rho`.
/// Exposed for gradient checks.
double augmented_lagrangian(const MpcProblem& problem, const Vecd& s0, double t0, const Matd& actions,
                            const Vecd& mu, double rho, Matd* grad);

}  // namespace rlar::regularizer
