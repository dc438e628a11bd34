#include <rlar/regularizer/mpc.hpp>

#include <cmath>
#include <limits>
#include <vector>

namespace rlar::regularizer {
namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// Inequality c >= 0 in the PHR augmented Lagrangian: value and d/dc.
std::pair<double, double> penalty_term(double c, double mu, double rho) {
  if (c - mu / rho < 0.0) return {-mu * c + 0.5 * rho * c * c, -mu + rho * c};
  return {-0.5 * mu * mu / rho, 0.0};
}

}  // namespace

MpcProblem::MpcProblem(std::shared_ptr<const envs::Plant> model, MpcOptions options)
    : model_(std::move(model)), options_(options) {
  if (!model_) throw ConfigError("MpcProblem needs a model");
  if (options_.horizon < 1) throw ConfigError("MPC horizon must be >= 1");
  if (options_.constraint_margin < 0.0 || options_.constraint_margin >= 0.5)
    throw ConfigError("MPC constraint margin must lie in [0, 0.5)");
  stepper_ = {model_->dt(), options_.substeps};
  stepper_.validate();
  dynamics_.smooth_seams = true;
  dynamics_.seam_width = options_.seam_width;
  const auto& safety = model_->safety();
  const Vecd range = safety.upper - safety.lower;
  lower_ = safety.lower + options_.constraint_margin * range;
  upper_ = safety.upper - options_.constraint_margin * range;
}

Vecd MpcProblem::cold_start_action() const {
  const auto& box = model_->action_space();
  Vecd a = box.center();
  for (int j = 0; j < box.dim(); ++j)
    if (box.low[j] <= 0.0 && 0.0 <= box.high[j]) a[j] = 0.0;
  return a;
}

Matd MpcProblem::rollout(const Vecd& s0, double t0, const Matd& actions) const {
  Matd states(s0.size(), actions.cols() + 1);
  states.col(0) = s0;
  for (Eigen::Index i = 0; i < actions.cols(); ++i)
    states.col(i + 1) = model_->step(stepper_, states.col(i), actions.col(i), t0 + i * stepper_.dt, dynamics_);
  return states;
}

double MpcProblem::objective(const Vecd& s0, double t0, const Matd& actions) const {
  try {
    const Matd states = rollout(s0, t0, actions);
    double total = 0.0;
    for (Eigen::Index i = 0; i < states.cols(); ++i) total += model_->stage_cost(states.col(i));
    return std::isfinite(total) ? total : kInf;
  } catch (const EnvironmentFault&) {
    return kInf;
  }
}

double MpcProblem::violation(const Vecd& s0, double t0, const Matd& actions) const {
  try {
    const Matd states = rollout(s0, t0, actions);
    double worst = 0.0;
    for (Eigen::Index i = 1; i < states.cols(); ++i) {
      const Vecd q = model_->safety_quantities(states.col(i));
      if (!q.allFinite()) return kInf;
      worst = std::max({worst, (lower_ - q).maxCoeff(), (q - upper_).maxCoeff()});
    }
    return worst;
  } catch (const EnvironmentFault&) {
    return kInf;
  }
}

double augmented_lagrangian(const MpcProblem& problem, const Vecd& s0, double t0, const Matd& actions,
                            const Vecd& mu, double rho, Matd* grad) {
  const auto& model = problem.model();
  const auto& stepper = problem.stepper();
  const Eigen::Index n = actions.cols();
  const Eigen::Index nq = problem.lower().size();
  const Vecd range = model.safety().upper - model.safety().lower;

  std::vector<Vecd> states(n + 1);
  std::vector<Matd> jac_s, jac_a;
  states[0] = s0;
  try {
    if (grad) {
      jac_s.resize(n);
      jac_a.resize(n);
      for (Eigen::Index i = 0; i < n; ++i) {
        auto lin = model.linearize_step(stepper, states[i], actions.col(i), t0 + i * stepper.dt, problem.dynamics());
        states[i + 1] = std::move(lin.next);
        jac_s[i] = std::move(lin.state_jacobian);
        jac_a[i] = std::move(lin.action_jacobian);
      }
    } else {
      for (Eigen::Index i = 0; i < n; ++i)
        states[i + 1] = model.step(stepper, states[i], actions.col(i), t0 + i * stepper.dt, problem.dynamics());
    }
  } catch (const EnvironmentFault&) {
    return kInf;
  }

  double value = 0.0;
  std::vector<Vecd> state_grad(n + 1);
  for (Eigen::Index i = 0; i <= n; ++i) {
    if (!states[i].allFinite()) return kInf;
    value += model.stage_cost(states[i], grad ? &state_grad[i] : nullptr);
    if (i == 0) continue;
    const Vecd q = model.safety_quantities(states[i]);
    Vecd dq = Vecd::Zero(nq);
    bool any = false;
    for (Eigen::Index j = 0; j < nq; ++j) {
      const Eigen::Index idx = 2 * (j + nq * (i - 1));
      const auto [vl, dl] = penalty_term((q[j] - problem.lower()[j]) / range[j], mu[idx], rho);
      const auto [vu, du] = penalty_term((problem.upper()[j] - q[j]) / range[j], mu[idx + 1], rho);
      value += vl + vu;
      dq[j] = (dl - du) / range[j];
      any = any || dq[j] != 0.0;
    }
    if (grad && any) state_grad[i] += model.safety_jacobian(states[i]).transpose() * dq;
  }
  if (!std::isfinite(value)) return kInf;

  if (grad) {
    grad->resize(actions.rows(), n);
    Vecd lambda = state_grad[n];
    for (Eigen::Index i = n - 1; i >= 0; --i) {
      grad->col(i) = jac_a[i].transpose() * lambda;
      lambda = state_grad[i] + jac_s[i].transpose() * lambda;
    }
  }
  return value;
}

Matd shift_warm_start(const Matd& actions) {
  Matd out(actions.rows(), actions.cols());
  if (actions.cols() == 0) return out;
  out.leftCols(actions.cols() - 1) = actions.rightCols(actions.cols() - 1);
  out.col(actions.cols() - 1) = actions.col(actions.cols() - 1);
  return out;
}

MpcSolution mpc_solve(const MpcProblem& problem, const Vecd& s0, double t0, const std::optional<Matd>& warm_start) {
  const auto& opt = problem.options();
  const auto& box = problem.model().action_space();
  const int k = problem.action_dim();
  const int n = problem.horizon();
  if (!s0.allFinite()) throw ConfigError("mpc_solve: initial state is not finite");
  if (warm_start && (warm_start->rows() != k || warm_start->cols() != n))
    throw ConfigError("mpc_solve: warm start must be action_dim x horizon");

  const Vecd center = box.center();
  const Vecd half = box.half_width();
  auto to_actions = [&](const Vecd& u) -> Matd {
    Matd a = Eigen::Map<const Matd>(u.data(), k, n);
    return (a.array().colwise() * half.array()).colwise() + center.array();
  };

  Matd initial = warm_start ? *warm_start : Matd(problem.cold_start_action().replicate(1, n));
  Matd u0 = ((initial.array().colwise() - center.array()).colwise() / half.array()).cwiseMax(-1.0).cwiseMin(1.0);
  Vecd u = Eigen::Map<const Vecd>(u0.data(), u0.size());
  const Vecd lo = Vecd::Constant(u.size(), -1.0);
  const Vecd hi = Vecd::Constant(u.size(), 1.0);

  const Eigen::Index nq = problem.lower().size();
  Vecd mu = Vecd::Zero(2 * nq * n);
  double rho = opt.initial_penalty;
  const Vecd range = problem.model().safety().upper - problem.model().safety().lower;

  MpcSolution best;
  best.objective = kInf;
  best.max_violation = kInf;
  double previous_violation = kInf;
  int iterations = 0;

  for (int outer = 0; outer < opt.max_outer_iterations; ++outer) {
    auto f = [&](const Vecd& x, Vecd* g) -> double {
      const Matd actions = to_actions(x);
      if (!g) return augmented_lagrangian(problem, s0, t0, actions, mu, rho, nullptr);
      Matd ga;
      const double v = augmented_lagrangian(problem, s0, t0, actions, mu, rho, &ga);
      if (!std::isfinite(v)) {
        g->setZero(x.size());
        return v;
      }
      ga = ga.array().colwise() * half.array();
      *g = Eigen::Map<const Vecd>(ga.data(), ga.size());
      return v;
    };
    BoxBfgsOptions inner;
    inner.max_iterations = opt.max_inner_iterations;
    inner.gradient_tolerance = opt.gradient_tolerance;
    inner.value_tolerance = opt.value_tolerance;
    const BoxBfgsResult res = minimize_in_box(f, u, lo, hi, inner);
    iterations += res.iterations;
    u = res.x;

    const Matd actions = to_actions(u);
    const Matd states = problem.rollout(s0, t0, actions);
    double objective = 0.0;
    double violation = 0.0;
    for (Eigen::Index i = 0; i <= n; ++i) objective += problem.model().stage_cost(states.col(i));
    for (Eigen::Index i = 1; i <= n; ++i) {
      const Vecd q = problem.model().safety_quantities(states.col(i));
      violation = std::max({violation, (problem.lower() - q).maxCoeff(), (q - problem.upper()).maxCoeff()});
      for (Eigen::Index j = 0; j < nq; ++j) {
        const Eigen::Index idx = 2 * (j + nq * (i - 1));
        mu[idx] = std::max(0.0, mu[idx] - rho * (q[j] - problem.lower()[j]) / range[j]);
        mu[idx + 1] = std::max(0.0, mu[idx + 1] - rho * (problem.upper()[j] - q[j]) / range[j]);
      }
    }
    if (!std::isfinite(objective)) violation = kInf;

    const bool feasible = violation <= opt.constraint_tolerance;
    const bool best_feasible = best.max_violation <= opt.constraint_tolerance;
    if ((feasible && (!best_feasible || objective < best.objective)) ||
        (!feasible && !best_feasible && violation < best.max_violation)) {
      best.actions = actions;
      best.objective = objective;
      best.max_violation = violation;
    }
    best.outer_iterations = outer + 1;
    if (feasible) {
      best.converged = res.converged;
      break;
    }
    if (violation > 0.25 * previous_violation) rho = std::min(rho * opt.penalty_growth, opt.max_penalty);
    previous_violation = violation;
  }
  if (best.actions.size() == 0) best.actions = to_actions(u);
  best.iterations = iterations;
  for (Eigen::Index i = 0; i < best.actions.cols(); ++i) best.actions.col(i) = box.clip(best.actions.col(i));
  return best;
}

}  // namespace rlar::regularizer
