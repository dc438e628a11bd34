#pragma once

#include <Eigen/Core>

#include <cstdint>
#include <random>
#include <stdexcept>
#include <string>

namespace rlar {

template <typename Scalar>
using Vec = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;
template <typename Scalar>
using Mat = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
template <typename Scalar>
using RowMajorMat = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

using Vecd = Vec<double>;
using Matd = Mat<double>;

/// Every stochastic component draws from one engine owned by its run.
using Rng = std::mt19937_64;

/// Invalid configuration, preset, or checkpoint.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// NaN/Inf surfaced by a learner update; the run aborts with this message.
class NumericalFault : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Non-finite plant derivative. Carries the offending state.
class EnvironmentFault : public std::runtime_error {
 public:
  EnvironmentFault(const std::string& what, Vecd state)
      : std::runtime_error(what), state_(std::move(state)) {}
  const Vecd& state() const { return state_; }

 private:
  Vecd state_;
};

}  // namespace rlar
