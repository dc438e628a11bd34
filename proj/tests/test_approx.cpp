#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "gradient_checks.hpp"
#include "support.hpp"

#include <rlar/approx/adam.hpp>
#include <rlar/approx/checkpoint.hpp>
#include <rlar/approx/dense_net.hpp>
#include <rlar/approx/ode.hpp>
#include <rlar/envs/glucose.hpp>
#include <rlar/envs/presets.hpp>

#include <filesystem>

using namespace rlar;
using approx::Activation;
using approx::DenseNet;
using testing::central_difference;
using testing::random_vector;
using testing::relative_error;

namespace {

// Per-neuron loop over the flat parameter layout, written without Eigen
// products so it is independent of DenseNet::forward.
Vecd hand_rolled_forward(const DenseNet<double>& net, const Vecd& x) {
  const auto& sizes = net.layer_sizes();
  const auto& p = net.params();
  std::vector<double> h(x.data(), x.data() + x.size());
  Eigen::Index offset = 0;
  for (std::size_t l = 0; l + 1 < sizes.size(); ++l) {
    const int in = sizes[l], out = sizes[l + 1];
    std::vector<double> next(out);
    for (int o = 0; o < out; ++o) {
      double z = p[offset + in * out + o];
      for (int i = 0; i < in; ++i) z += p[offset + o * in + i] * h[i];
      switch (net.activations()[l]) {
        case Activation::relu: z = z > 0 ? z : 0; break;
        case Activation::tanh: z = std::tanh(z); break;
        case Activation::identity: break;
      }
      next[o] = z;
    }
    offset += in * out + out;
    h = next;
  }
  return Eigen::Map<Vecd>(h.data(), static_cast<Eigen::Index>(h.size()));
}

DenseNet<double> random_net(Rng& rng, Activation act) {
  std::uniform_int_distribution<int> width(1, 6);
  const int in = width(rng), out = width(rng);
  auto net = DenseNet<double>::mlp(in, {width(rng), width(rng)}, out, act);
  net.init_fan_in(rng);
  return net;
}

}  // namespace

TEST_CASE("zero network maps everything to zero") {
  auto net = DenseNet<double>::mlp(3, {4, 5}, 2, Activation::relu);
  Rng rng(1);
  CHECK(net.eval(random_vector(3, rng)).isZero(0.0));
}

TEST_CASE("single identity layer passes the input through") {
  DenseNet<double> net({3, 3}, {Activation::identity});
  Vecd p = Vecd::Zero(net.param_count());
  for (int i = 0; i < 3; ++i) p[i * 3 + i] = 1.0;
  net.set_params(p);
  const Vecd x(Eigen::Vector3d(0.3, -2.0, 5.0));
  CHECK(net.eval(x) == x);

  SUBCASE("its input gradient returns the upstream vector") {
    const auto g = approx::net_backward(net, x, Vecd(Eigen::Vector3d(1, 0, 0)));
    CHECK(g.input == Vecd(Eigen::Vector3d(1, 0, 0)));
  }
}

TEST_CASE("forward pass agrees with a per-neuron loop") {
  Rng rng(7);
  for (int trial = 0; trial < 50; ++trial) {
    for (auto act : {Activation::relu, Activation::tanh}) {
      const auto net = random_net(rng, act);
      const Vecd x = random_vector(net.input_size(), rng, -2, 2);
      CHECK((net.eval(x) - hand_rolled_forward(net, x)).cwiseAbs().maxCoeff() < 1e-12);
    }
  }
}

TEST_CASE("batched forward equals column-by-column evaluation") {
  Rng rng(8);
  const auto net = random_net(rng, Activation::relu);
  const Matd x = testing::random_matrix(net.input_size(), 9, rng);
  const Matd y = net.forward(x);
  for (int c = 0; c < 9; ++c) CHECK((y.col(c) - net.eval(x.col(c))).norm() < 1e-13);
}

TEST_CASE("reverse-mode gradients match central differences on 200 random fixtures") {
  Rng rng(11);
  int checked = 0;
  for (int trial = 0; trial < 100; ++trial) {
    for (auto act : {Activation::relu, Activation::tanh}) {
      auto net = random_net(rng, act);
      const Vecd x = random_vector(net.input_size(), rng, -2, 2);
      const Vecd up = random_vector(net.output_size(), rng);
      const auto g = approx::net_backward(net, x, up);
      const Vecd p0 = net.params();
      const Vecd fd_p = central_difference(
          [&](const Vecd& p) {
            net.set_params(p);
            return up.dot(net.eval(x));
          },
          p0);
      net.set_params(p0);
      const Vecd fd_x = central_difference([&](const Vecd& xx) { return up.dot(net.eval(xx)); }, x);
      CHECK(relative_error(g.params, fd_p) < 1e-4);
      CHECK(relative_error(g.input, fd_x) < 1e-4);
      ++checked;
    }
  }
  CHECK(checked >= 100);
}

TEST_CASE("relu at an exactly zero pre-activation passes no gradient") {
  DenseNet<double> net({1, 1, 1}, {Activation::relu, Activation::identity});
  // Hidden pre-activation w*x + b = 1*1 - 1 = 0; output weight 1.
  net.set_params(Vecd(Eigen::Vector4d(1.0, -1.0, 1.0, 0.0)));
  const auto g = approx::net_backward(net, Vecd(Vecd::Ones(1)), Vecd(Vecd::Ones(1)));
  CHECK(g.input[0] == 0.0);
  CHECK(g.params[0] == 0.0);
  CHECK(g.params[1] == 0.0);
}

TEST_CASE("float and double networks agree to single precision") {
  Rng rng(3);
  auto net = DenseNet<double>::mlp(4, {16, 16}, 2, Activation::relu);
  net.init_fan_in(rng);
  const auto netf = approx::cast_net<float>(net);
  const Vecd x = random_vector(4, rng);
  const Vecd yf = netf.eval(x.cast<float>()).cast<double>();
  CHECK((yf - net.eval(x)).norm() < 1e-5);
}

TEST_CASE("network shape errors are configuration errors") {
  auto net = DenseNet<double>::mlp(3, {4}, 2, Activation::relu);
  CHECK_THROWS_AS(net.eval(Vecd::Zero(2)), ConfigError);
  CHECK_THROWS_AS(approx::net_backward(net, Vecd(Vecd::Zero(3)), Vecd(Vecd::Zero(3))), ConfigError);
  CHECK_THROWS_AS(net.set_params(Vecd::Zero(3)), ConfigError);
  CHECK_THROWS_AS(DenseNet<double>({3}, {}), ConfigError);
}

TEST_CASE("adam step") {
  approx::AdamState<double> s(3, 1e-3);
  Vecd p(Eigen::Vector3d(1.0, -2.0, 0.5));

  SUBCASE("zero gradient leaves parameters unchanged") {
    Vecd q = p;
    approx::adam_step(s, q, Vecd(Vecd::Zero(3)));
    CHECK(q == p);
  }
  SUBCASE("first step from zero moments is lr * g / (|g| + eps)") {
    const Vecd g(Eigen::Vector3d(0.3, -4.0, 1e-3));
    Vecd q = p;
    approx::adam_step(s, q, g);
    for (int i = 0; i < 3; ++i) CHECK(q[i] == doctest::Approx(p[i] - 1e-3 * g[i] / (std::abs(g[i]) + 1e-8)).epsilon(1e-9));
  }
  SUBCASE("ascending on g equals descending on -g") {
    const Vecd g(Eigen::Vector3d(0.3, -4.0, 2.0));
    approx::AdamState<double> s2 = s;
    Vecd a = p, b = p;
    for (int k = 0; k < 5; ++k) {
      approx::adam_step(s, a, g, true);
      approx::adam_step(s2, b, Vecd(-g));
    }
    CHECK(a == b);
  }
  SUBCASE("non-finite gradient aborts without touching the parameters") {
    Vecd q = p;
    Vecd g = Vecd::Ones(3);
    g[1] = std::nan("");
    CHECK_THROWS_AS(approx::adam_step(s, q, g), NumericalFault);
    CHECK(q == p);
    CHECK(s.step_count == 0);
  }
  SUBCASE("length mismatch is rejected") {
    Vecd q = p;
    CHECK_THROWS_AS(approx::adam_step(s, q, Vecd(Vecd::Zero(2))), ConfigError);
  }
}

TEST_CASE("rk4 step") {
  using V1 = Eigen::Matrix<double, 1, 1>;
  SUBCASE("zero dynamics keep the state") {
    const approx::Rk4Stepper st{0.7, 3};
    const Eigen::Vector2d s(1.5, -2.0);
    const auto next = approx::ode_step(st, [](const Eigen::Vector2d&, const V1&, double) { return Eigen::Vector2d::Zero().eval(); },
                                       s, V1::Zero(), 0.0);
    CHECK(next == s);
  }
  SUBCASE("one substep of x' = -x is the fourth-order Taylor polynomial") {
    for (double h : {0.1, 0.5, 1.0}) {
      const approx::Rk4Stepper st{h, 1};
      const V1 x(2.0);
      const auto next = approx::ode_step(st, [](const V1& y, const V1&, double) { return V1(-y); }, x, V1::Zero(), 0.0);
      CHECK(next[0] == doctest::Approx(2.0 * (1 - h + h * h / 2 - h * h * h / 6 + h * h * h * h / 24)).epsilon(1e-14));
    }
  }
  SUBCASE("non-finite derivative raises an environment fault with the state") {
    const approx::Rk4Stepper st{1.0, 1};
    const V1 x(3.0);
    try {
      approx::ode_step(st, [](const V1& y, const V1&, double) { return V1(y[0] > 2.5 ? std::nan("") : 0.0); }, x,
                       V1::Zero(), 0.0);
      FAIL("expected an EnvironmentFault");
    } catch (const EnvironmentFault& e) {
      CHECK(e.state()[0] == 3.0);
    }
  }
}

TEST_CASE("rk4 global error shrinks about 16x when the step halves") {
  const auto order = testing::rk4_order_estimate();
  CHECK(order.ratios.size() == 3);
  for (double r : order.ratios) {
    CHECK(r >= 8.0);
    CHECK(r <= 32.0);
  }
}

TEST_CASE("glucose step with 10 substeps agrees with 1000 substeps") {
  const auto params = envs::preset(envs::PlantKind::glucose, "actual");
  const envs::GlucosePlant glucose(params);
  const envs::Plant& plant = glucose;
  Vecd s = plant.initial_state();
  s[0] = 180.0;
  s[1] = 0.004;
  s[2] = 30.0;
  Vecd a(1);
  a[0] = 5.0;
  for (double t : {0.0, 50.0, 300.0}) {
    const Vecd coarse = plant.step(approx::Rk4Stepper{plant.dt(), 10}, s, a, t);
    const Vecd fine = plant.step(approx::Rk4Stepper{plant.dt(), 1000}, s, a, t);
    for (Eigen::Index i = 0; i < s.size(); ++i)
      CHECK(std::abs(coarse[i] - fine[i]) <= 1e-5 * std::max(std::abs(fine[i]), 1e-12));
  }
}

TEST_CASE("checkpoint containers round-trip through text and binary files") {
  Rng rng(5);
  auto net = DenseNet<float>::mlp(3, {8}, 2, Activation::tanh);
  net.init_fan_in(rng);
  approx::AdamState<float> opt(net.param_count(), 3e-4);
  opt.first_moment.setConstant(0.25f);
  opt.step_count = 17;
  const auto doc = approx::make_checkpoint({{"net", approx::to_json(net)}, {"opt", approx::to_json(opt)}});
  const auto dir = std::filesystem::temp_directory_path() / "rlar_test_checkpoint";
  std::filesystem::create_directories(dir);
  for (const char* name : {"c.json", "c.cbor"}) {
    approx::write_checkpoint_file(dir / name, doc);
    const auto back = approx::open_checkpoint(approx::read_checkpoint_file(dir / name));
    const auto net2 = approx::net_from_json<float>(back.at("net"));
    const auto opt2 = approx::adam_from_json<float>(back.at("opt"));
    CHECK(net2.params() == net.params());
    CHECK(net2.layer_sizes() == net.layer_sizes());
    CHECK(opt2.first_moment == opt.first_moment);
    CHECK(opt2.step_count == 17);
  }
  auto bad = doc;
  bad["version"] = 99;
  CHECK_THROWS_AS(approx::open_checkpoint(bad), ConfigError);
  CHECK_THROWS_AS(approx::open_checkpoint(nlohmann::json{{"format", "other"}}), ConfigError);
  std::filesystem::remove_all(dir);
}
