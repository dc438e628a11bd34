#include <rlar/replay/replay_buffer.hpp>

#include <array>
#include <bit>
#include <cstring>
#include <fstream>

namespace rlar::replay {
namespace {

constexpr std::array<char, 8> kMagic{'R', 'L', 'A', 'R', 'R', 'P', 'L', '\0'};

static_assert(std::endian::native == std::endian::little, "replay dumps assume a little-endian host");

template <typename T>
void put(std::ostream& out, const T& v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
T get(std::istream& in) {
  T v{};
  in.read(reinterpret_cast<char*>(&v), sizeof(T));
  if (!in) throw ConfigError("replay dump truncated");
  return v;
}

void put_vec(std::ostream& out, const Vecd& v) {
  out.write(reinterpret_cast<const char*>(v.data()), static_cast<std::streamsize>(sizeof(double) * v.size()));
}

Vecd get_vec(std::istream& in, std::uint64_t n) {
  Vecd v(static_cast<Eigen::Index>(n));
  in.read(reinterpret_cast<char*>(v.data()), static_cast<std::streamsize>(sizeof(double) * n));
  if (!in) throw ConfigError("replay dump truncated");
  return v;
}

}  // namespace

ReplayBuffer::ReplayBuffer(std::size_t capacity) : capacity_(capacity) {
  if (capacity_ == 0) throw ConfigError("replay capacity must be positive");
}

void ReplayBuffer::push(Transition t) {
  if (!data_.empty()) {
    const auto& ref = data_.front();
    if (t.obs.size() != ref.obs.size() || t.next_obs.size() != ref.obs.size() ||
        t.action.size() != ref.action.size() || t.a_reg.size() != ref.action.size())
      throw ConfigError("replay: transition dimensions differ from stored transitions");
  }
  if (data_.size() < capacity_) {
    data_.push_back(std::move(t));
    return;
  }
  data_[head_] = std::move(t);
  head_ = (head_ + 1) % capacity_;
}

const Transition& ReplayBuffer::at(std::size_t i) const {
  if (i >= data_.size()) throw ConfigError("replay index out of range");
  return data_[(head_ + i) % data_.size()];
}

std::vector<std::size_t> ReplayBuffer::sample_indices(std::size_t batch, Rng& rng) const {
  if (data_.empty()) throw ConfigError("cannot sample from an empty replay buffer");
  std::uniform_int_distribution<std::size_t> pick(0, data_.size() - 1);
  std::vector<std::size_t> idx(batch);
  for (auto& i : idx) i = pick(rng);
  return idx;
}

std::vector<Transition> ReplayBuffer::sample(std::size_t batch, Rng& rng) const {
  std::vector<Transition> out;
  out.reserve(batch);
  for (std::size_t i : sample_indices(batch, rng)) out.push_back(data_[i]);
  return out;
}

void ReplayBuffer::dump(const std::filesystem::path& path) const {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ConfigError("cannot write replay dump " + path.string());
  out.write(kMagic.data(), kMagic.size());
  put(out, kDumpVersion);
  const std::uint64_t obs_dim = data_.empty() ? 0 : data_.front().obs.size();
  const std::uint64_t act_dim = data_.empty() ? 0 : data_.front().action.size();
  put(out, static_cast<std::uint64_t>(capacity_));
  put(out, static_cast<std::uint64_t>(data_.size()));
  put(out, obs_dim);
  put(out, act_dim);
  for (std::size_t i = 0; i < data_.size(); ++i) {
    const Transition& t = at(i);
    put_vec(out, t.obs);
    put_vec(out, t.action);
    put_vec(out, t.next_obs);
    put(out, t.reward);
    put(out, static_cast<std::uint8_t>(t.done ? 1 : 0));
    put_vec(out, t.a_reg);
  }
  if (!out) throw ConfigError("failed while writing replay dump " + path.string());
}

ReplayBuffer ReplayBuffer::load(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open replay dump " + path.string());
  std::array<char, 8> magic{};
  in.read(magic.data(), magic.size());
  if (!in || magic != kMagic) throw ConfigError("not a replay dump: " + path.string());
  const auto version = get<std::uint32_t>(in);
  if (version != kDumpVersion) throw ConfigError("unsupported replay dump version " + std::to_string(version));
  const auto capacity = get<std::uint64_t>(in);
  const auto size = get<std::uint64_t>(in);
  const auto obs_dim = get<std::uint64_t>(in);
  const auto act_dim = get<std::uint64_t>(in);
  if (size > capacity) throw ConfigError("replay dump size exceeds its capacity");
  ReplayBuffer buf(capacity);
  for (std::uint64_t i = 0; i < size; ++i) {
    Transition t;
    t.obs = get_vec(in, obs_dim);
    t.action = get_vec(in, act_dim);
    t.next_obs = get_vec(in, obs_dim);
    t.reward = get<double>(in);
    const auto d = get<std::uint8_t>(in);
    if (d > 1) throw ConfigError("replay dump has a malformed done flag");
    t.done = d == 1;
    t.a_reg = get_vec(in, act_dim);
    buf.push(std::move(t));
  }
  return buf;
}

}  // namespace rlar::replay
