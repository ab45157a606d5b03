#pragma once

#include "burgan/autodiff/tape.hpp"

#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace burgan::train {

struct AdamSettings {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

/// First/second moments, one pair per parameter matrix, and the number of steps taken.
struct AdamState {
  std::vector<ad::Matrix> m;
  std::vector<ad::Matrix> v;
  std::uint64_t step = 0;

  /// Zero moments shaped like `params`.
  static AdamState like(std::span<ad::Matrix* const> params);
};

/// One bias-corrected Adam update in place. Throws ConfigError on any shape mismatch.
void adam_step(std::span<ad::Matrix* const> params, std::span<const ad::Matrix> grads, AdamState& state,
               const AdamSettings& settings);

/// sqrt of the sum of squares over every entry.
double global_norm(std::span<const ad::Matrix> grads);

/// Rescales `grads` so their global norm is at most `max_norm`. Returns the norm before clipping.
double clip_global_norm(std::span<ad::Matrix> grads, double max_norm);

/// Binary round trip of an optimizer state (shapes are checked on load).
std::string serialize_adam(const AdamState& state);
AdamState parse_adam(const std::string& data, std::span<ad::Matrix* const> params);

}  // namespace burgan::train
