#include <rlar/regularizer/regularizer.hpp>

#include <cstring>

namespace rlar::regularizer {

std::string RegularizerCache::key(const Vecd& state, double t) {
  std::string k(sizeof(double) * (state.size() + 1), '\0');
  std::memcpy(k.data(), state.data(), sizeof(double) * state.size());
  std::memcpy(k.data() + sizeof(double) * state.size(), &t, sizeof(double));
  return k;
}

const RegularizerCache::Entry* RegularizerCache::find(const Vecd& state, double t) const {
  const auto it = entries_.find(key(state, t));
  return it == entries_.end() ? nullptr : &it->second;
}

void RegularizerCache::store(const Vecd& state, double t, Entry entry) {
  entries_.insert_or_assign(key(state, t), std::move(entry));
}

RegularizerStep regularizer_action(RegularizerCache& cache, const MpcProblem& problem, const Vecd& state, double t,
                                   const std::optional<Matd>& warm_start, Matd* plan) {
  if (const auto* hit = cache.find(state, t)) {
    if (plan) *plan = hit->plan;
    RegularizerStep step = hit->step;
    step.iterations = 0;
    step.cache_hit = true;
    return step;
  }
  const MpcSolution sol = mpc_solve(problem, state, t, warm_start);
  RegularizerStep step;
  step.action = sol.actions.col(0);
  step.objective = sol.objective;
  step.max_violation = sol.max_violation;
  step.iterations = sol.iterations;
  step.converged = sol.converged;
  cache.store(state, t, {step, sol.actions});
  if (plan) *plan = sol.actions;
  return step;
}

SafetyRegularizer::SafetyRegularizer(MpcProblem problem) : problem_(std::move(problem)) {}

void SafetyRegularizer::begin_episode(const Vecd& obs) {
  estimate_ = problem_.model().initial_state();
  problem_.model().assimilate(estimate_, obs);
  t_ = 0.0;
  warm_.reset();
}

RegularizerStep SafetyRegularizer::act(const Vecd& obs) {
  if (estimate_.size() == 0) begin_episode(obs);
  problem_.model().assimilate(estimate_, obs);
  Matd plan;
  RegularizerStep step = regularizer_action(cache_, problem_, estimate_, t_, warm_, &plan);
  warm_ = shift_warm_start(plan);
  return step;
}

void SafetyRegularizer::advance(const Vecd& executed_action) {
  try {
    estimate_ = problem_.model().step(problem_.stepper(), estimate_, executed_action, t_);
  } catch (const EnvironmentFault&) {
    // The next observation still pins the measured components.
  }
  t_ += problem_.stepper().dt;
}

}  // namespace rlar::regularizer
