#pragma once

#include <rlar/types.hpp>

#include <cmath>
#include <string>

namespace rlar::approx {

template <typename Scalar>
struct AdamState {
  Vec<Scalar> first_moment;
  Vec<Scalar> second_moment;
  long step_count = 0;
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;

  AdamState() = default;
  AdamState(Eigen::Index n, double lr)
      : first_moment(Vec<Scalar>::Zero(n)), second_moment(Vec<Scalar>::Zero(n)), learning_rate(lr) {}
};

/// One bias-corrected Adam update of `params` in place. With `ascend` the
/// gradient is negated so the step climbs the objective.
template <typename Scalar>
void adam_step(AdamState<Scalar>& state, Vec<Scalar>& params, const Vec<Scalar>& grad, bool ascend = false) {
  if (params.size() != grad.size() || state.first_moment.size() != params.size())
    throw ConfigError("adam_step: length mismatch (params " + std::to_string(params.size()) +
                      ", grad " + std::to_string(grad.size()) + ", moments " +
                      std::to_string(state.first_moment.size()) + ")");
  if (!grad.allFinite()) {
    Eigen::Index bad = 0;
    for (Eigen::Index i = 0; i < grad.size(); ++i) bad += std::isfinite(static_cast<double>(grad[i])) ? 0 : 1;
    throw NumericalFault("adam_step: " + std::to_string(bad) + " non-finite gradient entries of " +
                         std::to_string(grad.size()) + " at step " + std::to_string(state.step_count));
  }
  const Scalar sign = ascend ? Scalar(-1) : Scalar(1);
  const Scalar b1 = static_cast<Scalar>(state.beta1);
  const Scalar b2 = static_cast<Scalar>(state.beta2);
  ++state.step_count;
  state.first_moment = b1 * state.first_moment + (Scalar(1) - b1) * sign * grad;
  state.second_moment = b2 * state.second_moment + (Scalar(1) - b2) * grad.cwiseAbs2();
  const double c1 = 1.0 - std::pow(state.beta1, static_cast<double>(state.step_count));
  const double c2 = 1.0 - std::pow(state.beta2, static_cast<double>(state.step_count));
  const Scalar step = static_cast<Scalar>(state.learning_rate / c1);
  const Scalar root_c2 = static_cast<Scalar>(std::sqrt(c2));
  params.array() -= step * state.first_moment.array() /
                    (state.second_moment.array().sqrt() / root_c2 + static_cast<Scalar>(state.epsilon));
}

}  // namespace rlar::approx
