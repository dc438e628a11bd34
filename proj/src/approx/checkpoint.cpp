#include <rlar/approx/checkpoint.hpp>

#include <cstdint>
#include <fstream>
#include <iterator>
#include <vector>

namespace rlar::approx {

nlohmann::json make_checkpoint(nlohmann::json payload) {
  return {{"format", kCheckpointFormat}, {"version", kCheckpointVersion}, {"payload", std::move(payload)}};
}

nlohmann::json open_checkpoint(const nlohmann::json& container) {
  if (!container.is_object() || container.value("format", std::string{}) != kCheckpointFormat)
    throw ConfigError("not an rlar checkpoint");
  const int version = container.value("version", -1);
  if (version != kCheckpointVersion)
    throw ConfigError("unsupported checkpoint version " + std::to_string(version));
  if (!container.contains("payload")) throw ConfigError("checkpoint has no payload");
  return container.at("payload");
}

void write_json_file(const std::filesystem::path& path, const nlohmann::json& j) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path);
  if (!out) throw ConfigError("cannot write " + path.string());
  out << j.dump(1) << '\n';
}

nlohmann::json read_json_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open " + path.string());
  try {
    return nlohmann::json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw ConfigError(path.string() + ": " + e.what());
  }
}

void write_binary_file(const std::filesystem::path& path, const nlohmann::json& j) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ConfigError("cannot write " + path.string());
  const auto bytes = nlohmann::json::to_cbor(j);
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
}

nlohmann::json read_binary_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open " + path.string());
  const std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  try {
    return nlohmann::json::from_cbor(bytes);
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(path.string() + ": " + e.what());
  }
}

namespace {
bool is_binary_path(const std::filesystem::path& path) {
  const auto ext = path.extension().string();
  return ext == ".cbor" || ext == ".bin";
}
}  // namespace

void write_checkpoint_file(const std::filesystem::path& path, const nlohmann::json& j) {
  if (is_binary_path(path))
    write_binary_file(path, j);
  else
    write_json_file(path, j);
}

nlohmann::json read_checkpoint_file(const std::filesystem::path& path) {
  return is_binary_path(path) ? read_binary_file(path) : read_json_file(path);
}

}  // namespace rlar::approx
