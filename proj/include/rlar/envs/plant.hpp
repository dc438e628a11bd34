#pragma once

#include <rlar/approx/ode.hpp>
#include <rlar/types.hpp>

#include <unsupported/Eigen/AutoDiff>

#include <map>
#include <memory>
#include <string>
#include <vector>

namespace rlar::envs {

enum class PlantKind { glucose, biglucose, cstr, cartpole };

std::string to_string(PlantKind kind);
PlantKind plant_kind_from_string(const std::string& name);

/// Named physical parameters of one plant, in the units of the source
/// tables. `role` is "estimated" or "actual" (or a free tag for perturbed
/// copies).
struct PlantParams {
  PlantKind kind = PlantKind::glucose;
  std::string role;
  std::map<std::string, double> values;

  double at(const std::string& name) const;
  bool operator==(const PlantParams&) const = default;
};

/// Box a_low <= a <= a_high, plus the affine map to and from [-1, 1].
struct ActionSpace {
  Vecd low;
  Vecd high;

  int dim() const { return static_cast<int>(low.size()); }
  Vecd center() const { return 0.5 * (low + high); }
  Vecd half_width() const { return 0.5 * (high - low); }
  Vecd clip(const Vecd& a) const { return a.cwiseMax(low).cwiseMin(high); }
  bool contains(const Vecd& a) const {
    return a.size() == low.size() && (a.array() >= low.array()).all() && (a.array() <= high.array()).all();
  }
  Vecd normalize(const Vecd& a) const { return (a - center()).cwiseQuotient(half_width()); }
  Vecd denormalize(const Vecd& u) const { return center() + half_width().cwiseProduct(u); }
};

/// Bounds on the plant's safety quantities. Leaving them ends the episode.
/// The glucose plants replace the reward with `penalty`; the others add it.
struct SafetySpec {
  std::vector<std::string> names;
  Vecd lower;
  Vecd upper;
  double penalty = 0.0;
  bool penalty_replaces_reward = false;
};

/// Switches for the model evaluation. The plant steps with the defaults;
/// the regularizer's model turns on seam smoothing.
struct DynamicsOptions {
  bool disturbance = true;
  bool smooth_seams = false;
  double seam_width = 1e-2;
};

/// Next state of one environment step and its Jacobians.
struct StepLinearization {
  Vecd next;
  Matd state_jacobian;
  Matd action_jacobian;
};

/// Affine observation normalization feeding the networks.
struct ObservationScale {
  Vecd center;
  Vecd half_range;

  Vecd normalize(const Vecd& obs) const { return (obs - center).cwiseQuotient(half_range); }
};

/// One ODE plant. Internal state and time are separate; time is the
/// meal clock for the glucose plants and unused otherwise.
class Plant {
 public:
  virtual ~Plant() = default;

  virtual PlantKind kind() const = 0;
  virtual int state_dim() const = 0;
  virtual int action_dim() const = 0;
  virtual int obs_dim() const = 0;
  virtual std::vector<std::string> state_names() const = 0;
  virtual std::vector<std::string> obs_names() const = 0;

  const PlantParams& params() const { return params_; }
  const ActionSpace& action_space() const { return actions_; }
  const SafetySpec& safety() const { return safety_; }
  const ObservationScale& observation_scale() const { return obs_scale_; }
  double dt() const { return params_.at("dt"); }

  void set_action_space(ActionSpace box);
  void set_observation_scale(ObservationScale scale);

  virtual Vecd derivative(const Vecd& s, const Vecd& a, double t, const DynamicsOptions& opt = {}) const = 0;
  virtual Vecd step(const approx::Rk4Stepper& stepper, const Vecd& s, const Vecd& a, double t,
                    const DynamicsOptions& opt = {}) const = 0;
  virtual StepLinearization linearize_step(const approx::Rk4Stepper& stepper, const Vecd& s, const Vecd& a,
                                           double t, const DynamicsOptions& opt = {}) const = 0;

  virtual Vecd safety_quantities(const Vecd& s) const = 0;
  virtual Matd safety_jacobian(const Vecd& s) const = 0;

  /// Negated in-range reward branch. Smooth enough for the optimizer;
  /// `grad` receives d(cost)/d(state) when given.
  virtual double stage_cost(const Vecd& s, Vecd* grad = nullptr) const = 0;

  /// Piecewise reward on a (new) state, including the penalty branch.
  double reward(const Vecd& s) const;
  bool is_safe(const Vecd& s) const;

  /// State at episode start (steady state or fixed initial condition).
  virtual Vecd initial_state() const = 0;

  /// Agent-visible observation. `previous` is the prior internal state
  /// (null at episode start).
  virtual Vecd observe(const Vecd& s, const Vecd* previous, double t) const = 0;

  /// Overwrites the measured components of a model state estimate.
  virtual void assimilate(Vecd& model_state, const Vecd& obs) const = 0;

 protected:
  explicit Plant(PlantParams params) : params_(std::move(params)) {}

  PlantParams params_;
  ActionSpace actions_;
  SafetySpec safety_;
  ObservationScale obs_scale_;
};

/// Implements the numeric Plant interface for a model whose dynamics, cost,
/// and safety quantities are written once as templates over the scalar
/// type. Jacobians come from forward-mode AutoDiff through the RK4 step.
template <typename Derived, int NX, int NU, int NQ>
class PlantModel : public Plant {
 public:
  using State = Eigen::Matrix<double, NX, 1>;
  using Action = Eigen::Matrix<double, NU, 1>;
  using Dual = Eigen::AutoDiffScalar<Eigen::Matrix<double, NX + NU, 1>>;
  using DualState = Eigen::Matrix<Dual, NX, 1>;
  using DualAction = Eigen::Matrix<Dual, NU, 1>;
  using CostDual = Eigen::AutoDiffScalar<Eigen::Matrix<double, NX, 1>>;

  int state_dim() const override { return NX; }
  int action_dim() const override { return NU; }

  Vecd derivative(const Vecd& s, const Vecd& a, double t, const DynamicsOptions& opt) const override {
    check_dims(s, a);
    return self().rhs(State(s), Action(a), t, opt);
  }

  Vecd step(const approx::Rk4Stepper& stepper, const Vecd& s, const Vecd& a, double t,
            const DynamicsOptions& opt) const override {
    check_dims(s, a);
    auto f = [&](const State& x, const Action& u, double tau) -> State { return self().rhs(x, u, tau, opt); };
    return approx::ode_step(stepper, f, State(s), Action(a), t);
  }

  StepLinearization linearize_step(const approx::Rk4Stepper& stepper, const Vecd& s, const Vecd& a, double t,
                                   const DynamicsOptions& opt) const override {
    check_dims(s, a);
    DualState xs;
    DualAction us;
    for (int i = 0; i < NX; ++i) xs[i] = Dual(s[i], NX + NU, i);
    for (int j = 0; j < NU; ++j) us[j] = Dual(a[j], NX + NU, NX + j);
    auto f = [&](const DualState& x, const DualAction& u, double tau) -> DualState {
      return self().rhs(x, u, tau, opt);
    };
    const DualState next = approx::ode_step(stepper, f, xs, us, t);
    StepLinearization out;
    out.next.resize(NX);
    out.state_jacobian.resize(NX, NX);
    out.action_jacobian.resize(NX, NU);
    for (int i = 0; i < NX; ++i) {
      out.next[i] = next[i].value();
      out.state_jacobian.row(i) = next[i].derivatives().template head<NX>().transpose();
      out.action_jacobian.row(i) = next[i].derivatives().template tail<NU>().transpose();
    }
    return out;
  }

  Vecd safety_quantities(const Vecd& s) const override { return self().safety_q(State(s)); }

  Matd safety_jacobian(const Vecd& s) const override {
    Eigen::Matrix<CostDual, NX, 1> xs;
    for (int i = 0; i < NX; ++i) xs[i] = CostDual(s[i], NX, i);
    const Eigen::Matrix<CostDual, NQ, 1> q = self().safety_q(xs);
    Matd jac(NQ, NX);
    for (int r = 0; r < NQ; ++r) jac.row(r) = q[r].derivatives().transpose();
    return jac;
  }

  double stage_cost(const Vecd& s, Vecd* grad) const override {
    if (!grad) return self().cost(State(s));
    Eigen::Matrix<CostDual, NX, 1> xs;
    for (int i = 0; i < NX; ++i) xs[i] = CostDual(s[i], NX, i);
    const CostDual c = self().cost(xs);
    *grad = c.derivatives();
    if (grad->size() != NX) grad->setZero(NX);
    return c.value();
  }

 protected:
  using Plant::Plant;

  const Derived& self() const { return static_cast<const Derived&>(*this); }

  static void check_dims(const Vecd& s, const Vecd& a) {
    if (s.size() != NX || a.size() != NU)
      throw ConfigError("plant expects state/action of size " + std::to_string(NX) + "/" + std::to_string(NU) +
                        ", got " + std::to_string(s.size()) + "/" + std::to_string(a.size()));
  }
};

/// Smooth approximation of max(0, x) with transition width w; exact for w <= 0.
template <typename T>
T soft_positive(const T& x, double w) {
  using std::exp;
  using std::log;
  if (w <= 0.0) return x > T(0) ? x : T(0);
  const T z = x / w;
  if (z > T(30)) return x;
  if (z < T(-30)) return T(0) * x;
  return w * log(T(1) + exp(z));
}

/// Builds the plant named by `params.kind`.
std::shared_ptr<Plant> make_plant(const PlantParams& params);

}  // namespace rlar::envs
