#pragma once

#include <rlar/types.hpp>

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <vector>

namespace rlar::replay {

/// One environment step. Observations are normalized; `action` is the
/// executed (blended) action and `a_reg` the regularizer action at `obs`,
/// both in environment units. `done` is set only when the episode ended
/// in a safety failure, never on the step limit.
struct Transition {
  Vecd obs;
  Vecd action;
  Vecd next_obs;
  double reward = 0.0;
  bool done = false;
  Vecd a_reg;

  bool operator==(const Transition&) const = default;
};

/// Fixed-capacity FIFO ring of transitions with uniform sampling.
class ReplayBuffer {
 public:
  static constexpr std::uint32_t kDumpVersion = 1;

  explicit ReplayBuffer(std::size_t capacity);

  void push(Transition t);
  std::size_t size() const { return data_.size(); }
  std::size_t capacity() const { return capacity_; }
  bool empty() const { return data_.empty(); }
  /// i = 0 is the oldest stored transition.
  const Transition& at(std::size_t i) const;

  /// Uniform draws with replacement over the filled region.
  std::vector<std::size_t> sample_indices(std::size_t batch, Rng& rng) const;
  std::vector<Transition> sample(std::size_t batch, Rng& rng) const;

  /// Versioned little-endian binary dump in oldest-to-newest order.
  void dump(const std::filesystem::path& path) const;
  static ReplayBuffer load(const std::filesystem::path& path);

 private:
  std::size_t capacity_;
  std::size_t head_ = 0;  // slot that the next push overwrites once full
  std::vector<Transition> data_;
};

}  // namespace rlar::replay
