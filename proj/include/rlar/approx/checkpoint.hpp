#pragma once

#include <rlar/approx/adam.hpp>
#include <rlar/approx/dense_net.hpp>

#include <json.hpp>

#include <filesystem>
#include <string>

namespace rlar::approx {

inline constexpr int kCheckpointVersion = 1;
inline constexpr const char* kCheckpointFormat = "rlar-checkpoint";

template <typename Scalar>
constexpr const char* scalar_name() {
  return sizeof(Scalar) == sizeof(float) ? "float32" : "float64";
}

template <typename Scalar>
nlohmann::json vector_to_json(const Vec<Scalar>& v) {
  nlohmann::json out = nlohmann::json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) out.push_back(static_cast<double>(v[i]));
  return out;
}

template <typename Scalar>
Vec<Scalar> vector_from_json(const nlohmann::json& j) {
  if (!j.is_array()) throw ConfigError("checkpoint: expected a numeric array");
  Vec<Scalar> v(static_cast<Eigen::Index>(j.size()));
  for (std::size_t i = 0; i < j.size(); ++i) v[static_cast<Eigen::Index>(i)] = static_cast<Scalar>(j[i].get<double>());
  return v;
}

template <typename Scalar>
nlohmann::json to_json(const DenseNet<Scalar>& net) {
  nlohmann::json acts = nlohmann::json::array();
  for (auto a : net.activations()) acts.push_back(to_string(a));
  return {{"layer_sizes", net.layer_sizes()},
          {"activations", acts},
          {"scalar", scalar_name<Scalar>()},
          {"params", vector_to_json(net.params())}};
}

template <typename Scalar>
DenseNet<Scalar> net_from_json(const nlohmann::json& j) {
  try {
    std::vector<Activation> acts;
    for (const auto& a : j.at("activations")) acts.push_back(activation_from_string(a.get<std::string>()));
    DenseNet<Scalar> net(j.at("layer_sizes").get<std::vector<int>>(), acts);
    net.set_params(vector_from_json<Scalar>(j.at("params")));
    return net;
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("checkpoint: malformed network: ") + e.what());
  }
}

template <typename Scalar>
nlohmann::json to_json(const AdamState<Scalar>& s) {
  return {{"first_moment", vector_to_json(s.first_moment)},
          {"second_moment", vector_to_json(s.second_moment)},
          {"step_count", s.step_count},
          {"learning_rate", s.learning_rate},
          {"beta1", s.beta1},
          {"beta2", s.beta2},
          {"epsilon", s.epsilon}};
}

template <typename Scalar>
AdamState<Scalar> adam_from_json(const nlohmann::json& j) {
  try {
    AdamState<Scalar> s;
    s.first_moment = vector_from_json<Scalar>(j.at("first_moment"));
    s.second_moment = vector_from_json<Scalar>(j.at("second_moment"));
    s.step_count = j.at("step_count").get<long>();
    s.learning_rate = j.at("learning_rate").get<double>();
    s.beta1 = j.at("beta1").get<double>();
    s.beta2 = j.at("beta2").get<double>();
    s.epsilon = j.at("epsilon").get<double>();
    return s;
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("checkpoint: malformed optimizer state: ") + e.what());
  }
}

/// Wraps a payload with the format tag and version.
nlohmann::json make_checkpoint(nlohmann::json payload);

/// Validates the tag and version and returns the payload.
nlohmann::json open_checkpoint(const nlohmann::json& container);

void write_json_file(const std::filesystem::path& path, const nlohmann::json& j);
nlohmann::json read_json_file(const std::filesystem::path& path);

/// CBOR encoding of the same document (exact float round trip).
void write_binary_file(const std::filesystem::path& path, const nlohmann::json& j);
nlohmann::json read_binary_file(const std::filesystem::path& path);

/// Picks the encoding from the extension: ".cbor" or ".bin" is binary,
/// anything else JSON text.
void write_checkpoint_file(const std::filesystem::path& path, const nlohmann::json& j);
nlohmann::json read_checkpoint_file(const std::filesystem::path& path);

}  // namespace rlar::approx
