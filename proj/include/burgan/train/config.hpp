#pragma once

#include "burgan/model/model.hpp"
#include "burgan/train/losses.hpp"

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

namespace burgan::train {

/// Training settings. The JSON file uses the member names below as keys (loss weights as
/// top-level alpha/beta/gamma/delta); missing keys keep these defaults.
struct TrainConfig {
  std::uint64_t iterations = 50000;
  double lr = 1e-3;
  LossWeights weights;
  std::size_t z_dim = kDefaultZDim;
  std::uint64_t seed = 0;
  std::uint64_t checkpoint_every = 1000;
  std::uint64_t validate_every = 1000;
  std::size_t d_steps = 1;
  std::size_t g_steps = 1;
  double clip_norm = 10.0;
  /// Noise draws averaged for the validation rel. l2.
  std::size_t val_z = 8;
  /// Optional dataset indices replacing the train / val splits (toy runs).
  std::vector<std::size_t> train_ics;
  std::vector<std::size_t> val_ics;

  /// Throws ConfigError listing every invalid field.
  void validate() const;
};

/// Parses JSON text. Unknown keys, wrong types and invalid values are all collected and
/// reported together in one ConfigError.
TrainConfig parse_train_config(const std::string& text, const std::string& source = "<config>");
TrainConfig load_train_config(const std::filesystem::path& path);

/// Canonical JSON with every field, in declaration order.
std::string to_json(const TrainConfig& config);

}  // namespace burgan::train
