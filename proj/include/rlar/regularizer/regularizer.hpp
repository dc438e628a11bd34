#pragma once

#include <rlar/regularizer/mpc.hpp>

#include <string>
#include <unordered_map>

namespace rlar::regularizer {

/// First action of an MPC solve plus its diagnostics.
struct RegularizerStep {
  Vecd action;
  double objective = 0.0;
  double max_violation = 0.0;
  int iterations = 0;
  bool converged = false;
  bool cache_hit = false;
};

/// Solutions memoized by exact (model state, time) bytes, so a visited state
/// is never solved twice within a run.
class RegularizerCache {
 public:
  struct Entry {
    RegularizerStep step;
    Matd plan;
  };

  const Entry* find(const Vecd& state, double t) const;
  void store(const Vecd& state, double t, Entry entry);
  std::size_t size() const { return entries_.size(); }
  void clear() { entries_.clear(); }

 private:
  static std::string key(const Vecd& state, double t);
  std::unordered_map<std::string, Entry> entries_;
};

/// First MPC action at (state, t): cached if seen before, otherwise solved
/// (warm-started when `warm_start` is given) and stored. `plan` receives
/// the full action sequence.
RegularizerStep regularizer_action(RegularizerCache& cache, const MpcProblem& problem, const Vecd& state, double t,
                                   const std::optional<Matd>& warm_start = std::nullopt, Matd* plan = nullptr);

/// Closed-loop safety regularizer for one environment. Tracks a model state
/// estimate: the measured components come from each observation, the rest
/// are propagated through the estimated model with the executed action.
class SafetyRegularizer {
 public:
  explicit SafetyRegularizer(MpcProblem problem);

  void begin_episode(const Vecd& obs);
  RegularizerStep act(const Vecd& obs);
  void advance(const Vecd& executed_action);

  const MpcProblem& problem() const { return problem_; }
  const Vecd& estimate() const { return estimate_; }
  double time() const { return t_; }
  const RegularizerCache& cache() const { return cache_; }

 private:
  MpcProblem problem_;
  RegularizerCache cache_;
  Vecd estimate_;
  double t_ = 0.0;
  std::optional<Matd> warm_;
};

}  // namespace rlar::regularizer
