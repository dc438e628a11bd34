#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "gradient_checks.hpp"
#include "support.hpp"

#include <rlar/sac/sac_agent.hpp>

#include <numbers>

using namespace rlar;
using sac::SacAgent;
using sac::SacBatch;
using sac::SacOptions;
using testing::central_difference;
using testing::random_matrix;
using testing::random_vector;
using testing::relative_error;

namespace {

SacOptions tiny_options() {
  SacOptions o;
  o.hidden = {8, 8};
  return o;
}

SacBatch<double> random_batch(int obs_dim, int action_dim, int n, Rng& rng) {
  SacBatch<double> b;
  b.obs = random_matrix(obs_dim, n, rng);
  b.actions = random_matrix(action_dim, n, rng, -0.95, 0.95);
  b.next_obs = random_matrix(obs_dim, n, rng);
  b.rewards = random_vector(n, rng, -2.0, 0.0);
  b.dones = Vecd::Zero(n);
  for (int i = 0; i < n; i += 3) b.dones[i] = 1.0;
  return b;
}

// Zeroes the last layer's weights and sets its bias, so the net outputs
// `bias` for every input.
void set_constant_output(approx::DenseNet<double>& net, const Vecd& bias) {
  const int in = net.layer_sizes()[net.layer_sizes().size() - 2];
  const int out = net.output_size();
  REQUIRE(bias.size() == out);
  auto& p = net.params();
  p.tail(in * out + out).setZero();
  p.tail(out) = bias;
}

// Raw log-std output that maps onto `log_std` under the agent's tanh rescale.
double raw_for_log_std(const SacOptions& o, double log_std) {
  const double t = 2.0 * (log_std - o.log_std_min) / (o.log_std_max - o.log_std_min) - 1.0;
  return std::atanh(t);
}

// E[tanh(m + s Z)] and Var by composite Simpson quadrature against the
// normal density, independent of the sampler.
std::pair<double, double> squashed_moments(double m, double s) {
  const int n = 20000;
  const double lo = -10.0, hi = 10.0, h = (hi - lo) / n;
  double e1 = 0.0, e2 = 0.0;
  for (int i = 0; i <= n; ++i) {
    const double z = lo + i * h;
    const double w = (i == 0 || i == n) ? 1.0 : (i % 2 ? 4.0 : 2.0);
    const double pdf = std::exp(-0.5 * z * z) / std::sqrt(2.0 * std::numbers::pi);
    const double y = std::tanh(m + s * z);
    e1 += w * pdf * y;
    e2 += w * pdf * y * y;
  }
  e1 *= h / 3.0;
  e2 *= h / 3.0;
  return {e1, e2 - e1 * e1};
}

}  // namespace

TEST_CASE("critic loss gradient matches central differences") {
  const auto sweep = testing::critic_gradient_sweep(100, 21);
  MESSAGE(sweep.name << ": worst relative error " << sweep.worst << " (fixture " << sweep.worst_fixture << " of "
                     << sweep.fixtures << ", " << sweep.redrawn << " redrawn at kinks)");
  CHECK(sweep.fixtures >= 100);
  CHECK(sweep.failures == 0);
}

TEST_CASE("policy objective gradient matches central differences") {
  const auto sweep = testing::policy_gradient_sweep(100, 22);
  MESSAGE(sweep.name << ": worst relative error " << sweep.worst << " (fixture " << sweep.worst_fixture << " of "
                     << sweep.fixtures << ", " << sweep.redrawn << " redrawn at kinks)");
  CHECK(sweep.fixtures >= 100);
  CHECK(sweep.failures == 0);
}

TEST_CASE("log-std gradient through the clamp rescale") {
  // Output-layer bias only: the objective as a function of the log-std bias.
  Rng rng(23);
  SacAgent<double> agent(2, Vecd::Constant(1, 1.0), tiny_options(), rng);
  agent.set_log_alpha(std::log(0.3));
  const Matd obs = random_matrix(2, 4, rng);
  const Matd noise = agent.draw_noise(4, rng);
  for (double log_std : {-4.9, -2.0, 0.0, 1.9}) {
    Vecd bias(2);
    bias << 0.1, raw_for_log_std(agent.options(), log_std);
    set_constant_output(agent.policy(), bias);
    Vecd grad;
    agent.policy_objective(obs, noise, &grad, nullptr);
    const Eigen::Index idx = agent.policy().param_count() - 1;
    const Vecd p0 = agent.policy().params();
    auto f = [&](double b) {
      agent.policy().params()[idx] = b;
      return agent.policy_objective(obs, noise, nullptr, nullptr);
    };
    const double h = 1e-6, b0 = p0[idx];
    const double numeric = (f(b0 + h) - f(b0 - h)) / (2 * h);
    agent.policy().params() = p0;
    CHECK(grad[idx] == doctest::Approx(numeric).epsilon(1e-4));
  }
}

TEST_CASE("clipped double-Q target") {
  Rng rng(31);
  SacAgent<double> agent(3, Vecd::Constant(2, 2.0), tiny_options(), rng);
  // Make the two target critics disagree.
  agent.q2_target().params() += random_vector(agent.q2_target().param_count(), rng, -0.3, 0.3);
  auto batch = random_batch(3, 2, 64, rng);
  const Matd noise = agent.draw_noise(64, rng);

  SUBCASE("terminal transitions target the reward") {
    batch.dones.setOnes();
    CHECK(agent.q_target(batch, noise) == batch.rewards);
  }
  SUBCASE("zero discount targets the reward") {
    SacOptions o = tiny_options();
    o.gamma = 0.0;
    Rng r2(31);
    SacAgent<double> myopic(3, Vecd::Constant(2, 2.0), o, r2);
    CHECK(myopic.q_target(batch, noise) == batch.rewards);
  }
  SUBCASE("target never exceeds either critic's soft estimate") {
    const Vecd y = agent.q_target(batch, noise);
    const auto next = agent.sample(batch.next_obs, noise);
    const Matd in = SacAgent<double>::critic_input(batch.next_obs, next.actions);
    const Vecd q1 = agent.q1_target().forward(in).row(0).transpose();
    const Vecd q2 = agent.q2_target().forward(in).row(0).transpose();
    int strictly_below = 0;
    for (Eigen::Index i = 0; i < y.size(); ++i) {
      const double future = agent.options().gamma * (1.0 - batch.dones[i]);
      const double y1 = batch.rewards[i] + future * (q1[i] - agent.alpha() * next.log_prob[i]);
      const double y2 = batch.rewards[i] + future * (q2[i] - agent.alpha() * next.log_prob[i]);
      CHECK(y[i] <= y1 + 1e-12);
      CHECK(y[i] <= y2 + 1e-12);
      CHECK(y[i] == doctest::Approx(std::min(y1, y2)).epsilon(1e-12));
      if (y[i] < std::max(y1, y2) - 1e-9) ++strictly_below;
    }
    CHECK(strictly_below > 0);
  }
}

TEST_CASE("target tracking") {
  Rng rng(41);
  SacAgent<double> agent(3, Vecd::Constant(1, 1.0), tiny_options(), rng);
  CHECK(agent.q1_target().params() == agent.q1().params());
  CHECK(agent.q2_target().params() == agent.q2().params());

  SUBCASE("online equal to targets is a fixed point") {
    const Vecd before = agent.q1_target().params();
    for (int i = 0; i < 10; ++i) agent.update_targets();
    CHECK((agent.q1_target().params() - before).lpNorm<Eigen::Infinity>() <= 1e-15);
  }
  SUBCASE("one call moves half a percent") {
    agent.q1().params() += random_vector(agent.q1().param_count(), rng);
    const Vecd gap = agent.q1().params() - agent.q1_target().params();
    const Vecd before = agent.q1_target().params();
    agent.update_targets();
    CHECK(relative_error(agent.q1_target().params() - before, 0.005 * gap) < 1e-10);
  }
  SUBCASE("frozen online gives geometric decay") {
    agent.q1().params() += random_vector(agent.q1().param_count(), rng);
    const double gap0 = (agent.q1().params() - agent.q1_target().params()).norm();
    for (int k = 1; k <= 500; ++k) {
      const double prev = (agent.q1().params() - agent.q1_target().params()).norm();
      agent.update_targets();
      const double now = (agent.q1().params() - agent.q1_target().params()).norm();
      CHECK(now / prev == doctest::Approx(0.995).epsilon(1e-9));
    }
    CHECK((agent.q1().params() - agent.q1_target().params()).norm() ==
          doctest::Approx(gap0 * std::pow(0.995, 500)).epsilon(1e-8));
  }
}

TEST_CASE("policy sampling") {
  Rng rng(51);
  const SacOptions o = tiny_options();

  SUBCASE("zero mean gives the box center deterministically") {
    SacAgent<double> agent(3, Vecd::Constant(2, 4.0), o, rng);
    set_constant_output(agent.policy(), Vecd::Zero(4));
    CHECK(agent.deterministic(random_matrix(3, 10, rng)).isZero(0.0));
  }

  SUBCASE("samples match the squashed Gaussian pushforward") {
    SacAgent<double> agent(2, Vecd::Constant(1, 3.0), o, rng);
    const double m = 0.4, log_std = -0.7;
    set_constant_output(agent.policy(), Eigen::Vector2d(m, raw_for_log_std(o, log_std)));
    const int n = 100000;
    const Matd obs = random_matrix(2, n, rng);
    const auto s = agent.sample(obs, rng);
    const double mean = s.actions.mean();
    const double var = (s.actions.array() - mean).square().sum() / (n - 1);
    const double m4 = (s.actions.array() - mean).pow(4).mean();
    const auto [e1, v1] = squashed_moments(m, std::exp(log_std));
    CHECK(std::abs(mean - e1) < 3.0 * std::sqrt(var / n));
    CHECK(std::abs(var - v1) < 3.0 * std::sqrt((m4 - var * var) / n));
    CHECK(s.log_prob.allFinite());
    CHECK((s.actions.array().abs() < 1.0).all());
  }

  SUBCASE("the density integrates to one on the box") {
    for (int slice = 0; slice < 4; ++slice) {
      const double half = 0.5 + slice;
      SacAgent<double> agent(2, Vecd::Constant(1, half), o, rng);
      const double m = -0.6 + 0.4 * slice, log_std = -1.0 + 0.3 * slice;
      set_constant_output(agent.policy(), Eigen::Vector2d(m, raw_for_log_std(o, log_std)));
      // Uniform points in the normalized box, mapped back to the noise that
      // produces them so the agent reports pi(a).
      const int n = 400000;
      std::uniform_real_distribution<double> u(-1.0, 1.0);
      Matd noise(1, n);
      for (int i = 0; i < n; ++i) noise(0, i) = (std::atanh(u(rng)) - m) / std::exp(log_std);
      const auto s = agent.sample(Matd::Zero(2, n), noise);
      const double integral = s.log_prob.array().exp().mean() * 2.0 * half;
      CAPTURE(slice);
      CHECK(integral == doctest::Approx(1.0).epsilon(1e-2));
    }
  }

  SUBCASE("at the log-std floor exploration barely moves the action") {
    SacAgent<double> agent(2, Vecd::Constant(1, 1.0), o, rng);
    set_constant_output(agent.policy(), Eigen::Vector2d(0.3, -40.0));
    const int n = 100000;
    const Matd obs = random_matrix(2, n, rng);
    const auto s = agent.sample(obs, rng);
    CHECK(s.log_std.maxCoeff() == doctest::Approx(-5.0).epsilon(1e-12));
    const Matd det = agent.deterministic(obs);
    int within = 0;
    for (int i = 0; i < n; ++i) within += std::abs(s.actions(0, i) - det(0, i)) < 3.0 * std::exp(-5.0);
    CHECK(static_cast<double>(within) / n >= 0.996);
  }
}

TEST_CASE("policy objective with a zero critic and no entropy") {
  Rng rng(61);
  SacAgent<double> agent(3, Vecd::Constant(2, 1.0), tiny_options(), rng);
  agent.q1().params().setZero();
  agent.q2().params().setZero();
  agent.set_log_alpha(-1000.0);
  REQUIRE(agent.alpha() == 0.0);
  const Matd obs = random_matrix(3, 16, rng);
  Vecd grad;
  CHECK(agent.policy_objective(obs, agent.draw_noise(16, rng), &grad, nullptr) == 0.0);
  CHECK(grad.isZero(0.0));
}

// Entropy of tanh(N(0, s^2)) by quadrature: H(N) + E[log(1 - tanh^2)].
double squashed_entropy(double log_std) {
  const double s = std::exp(log_std);
  const int n = 4000;
  const double lo = -10.0, hi = 10.0, h = (hi - lo) / n;
  double e = 0.0;
  for (int i = 0; i <= n; ++i) {
    const double z = lo + i * h;
    const double w = (i == 0 || i == n) ? 1.0 : (i % 2 ? 4.0 : 2.0);
    const double pdf = std::exp(-0.5 * z * z) / std::sqrt(2.0 * std::numbers::pi);
    const double t = std::tanh(s * z);
    e += w * pdf * std::log1p(-t * t);
  }
  return 0.5 * std::log(2.0 * std::numbers::pi * std::numbers::e) + log_std + e * h / 3.0;
}

TEST_CASE("a dominant entropy bonus drives the policy to the squashed max-entropy spread") {
  // With the tanh log-det correction the entropy is maximal at a finite
  // spread; beyond it mass piles up at the box edges.
  double best = -5.0;
  for (double l = -5.0; l <= 2.0; l += 1e-3)
    if (squashed_entropy(l) > squashed_entropy(best)) best = l;
  CHECK(best > -1.0);
  CHECK(best < 1.0);

  Rng rng(71);
  SacOptions o = tiny_options();
  o.autotune_alpha = false;
  o.policy_learning_rate = 3e-3;
  SacAgent<double> agent(3, Vecd::Constant(1, 1.0), o, rng);
  agent.set_log_alpha(std::log(1e3));
  const Matd obs = random_matrix(3, 64, rng);
  const double start = agent.sample(obs, rng).log_std.mean();
  for (int k = 0; k < 3000; ++k) agent.update_policy(obs, rng);
  const auto s = agent.sample(obs, rng);
  MESSAGE("mean log-std " << start << " -> " << s.log_std.mean() << ", quadrature argmax " << best);
  CHECK(s.log_std.mean() == doctest::Approx(best).epsilon(0.05));
  CHECK(s.mean.cwiseAbs().maxCoeff() < 0.1);
}

TEST_CASE("update cadence and entropy tuning") {
  Rng rng(81);
  SacAgent<double> agent(3, Vecd::Constant(2, 1.0), tiny_options(), rng);
  const auto batch = random_batch(3, 2, 32, rng);
  CHECK(agent.target_entropy() == -2.0);
  for (int k = 1; k <= 6; ++k) {
    agent.train_step(batch, rng);
    CHECK(agent.q_updates() == k);
    CHECK(agent.policy_updates() == k / 2);
  }
  CHECK(agent.log_alpha() != 0.0);
  CHECK(agent.q1_target().params() != agent.q1().params());
}

TEST_CASE("serialization round trip") {
  Rng rng(91);
  SacAgent<double> agent(3, Eigen::Vector2d(1.0, 5.0), tiny_options(), rng);
  const auto batch = random_batch(3, 2, 32, rng);
  for (int k = 0; k < 5; ++k) agent.train_step(batch, rng);
  const auto restored = SacAgent<double>::from_json(nlohmann::json::parse(agent.to_json().dump()));
  CHECK(restored.policy().params() == agent.policy().params());
  CHECK(restored.q1().params() == agent.q1().params());
  CHECK(restored.q2_target().params() == agent.q2_target().params());
  CHECK(restored.log_alpha() == agent.log_alpha());
  CHECK(restored.q_updates() == agent.q_updates());
  CHECK(restored.action_half_width() == agent.action_half_width());
  // Continuing from the restored copy follows the same path.
  Rng r1(5), r2(5);
  SacAgent<double> a = agent, b = restored;
  a.train_step(batch, r1);
  b.train_step(batch, r2);
  CHECK(a.q1().params() == b.q1().params());
  CHECK(a.policy().params() == b.policy().params());

  auto bad = agent.to_json();
  bad["policy"] = 3;
  CHECK_THROWS_AS(SacAgent<double>::from_json(bad), ConfigError);
}

TEST_CASE("single precision agent tracks double precision") {
  Rng r1(101), r2(101);
  SacAgent<double> d(3, Vecd::Constant(1, 1.0), tiny_options(), r1);
  SacAgent<float> f(3, Vecd::Constant(1, 1.0), tiny_options(), r2);
  CHECK(relative_error(d.policy().params(), f.policy().params().cast<double>()) < 1e-6);
  const Matd obs = random_matrix(3, 8, r1);
  const Matd det = d.deterministic(obs);
  const Matd det_f = f.deterministic(obs.cast<float>()).cast<double>();
  CHECK((det - det_f).lpNorm<Eigen::Infinity>() < 1e-5);
}
