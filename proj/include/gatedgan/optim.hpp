#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "gatedgan/tensor.hpp"

namespace gatedgan {

struct AdamSettings {
  double learning_rate = 2e-4;
  double beta1 = 0.5;
  double beta2 = 0.999;
  double eps = 1e-8;
};

template <typename T>
struct AdamSlot {
  Tensor<T> m;
  Tensor<T> v;
  std::uint64_t t = 0;
};

/// One parameter taking part in an update.
template <typename T>
struct ParamUpdate {
  std::string name;
  Tensor<T>* param = nullptr;
  const Tensor<T>* grad = nullptr;  // nullptr is treated as a zero gradient
};

/// Adam with bias correction. Moments are kept per named parameter, so a
/// parameter that sits out an update keeps its state untouched.
template <typename T>
class Adam {
 public:
  Adam() = default;
  explicit Adam(AdamSettings settings) : settings_(settings) {}

  /// Updates every listed parameter once and advances the step counter.
  void step(const std::vector<ParamUpdate<T>>& updates);
  void step(const std::vector<ParamUpdate<T>>& updates, double learning_rate);

  const AdamSettings& settings() const noexcept { return settings_; }
  std::uint64_t steps() const noexcept { return steps_; }
  const std::map<std::string, AdamSlot<T>>& slots() const noexcept { return slots_; }

  // Checkpoint restoration.
  void restore(std::uint64_t steps, std::map<std::string, AdamSlot<T>> slots) {
    steps_ = steps;
    slots_ = std::move(slots);
  }
  /// Drops the moments of a parameter whose shape changed.
  void forget(const std::string& name) { slots_.erase(name); }

 private:
  AdamSettings settings_;
  std::uint64_t steps_ = 0;
  std::map<std::string, AdamSlot<T>> slots_;
};

}  // namespace gatedgan
