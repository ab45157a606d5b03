#pragma once

// Checkpoint file layout (little endian):
//   "BRGC", u32 version, u64 z_dim, u32 network count (4)
//   per network (encoder, approximator, reconstructor, discriminator):
//     u32 layer count, then per layer u64 in_dim, u64 out_dim, u32 activation
//   f64 payload: per network, per layer, weight (row-major, out x in) then bias
//   u32 section count, then per section a 4-byte tag, u64 length and raw bytes

#include "burgan/model/model.hpp"

#include <filesystem>
#include <map>
#include <string>

namespace burgan {

inline constexpr std::uint32_t kCheckpointVersion = 1;

struct Checkpoint {
  ModelParams params;
  /// Extra payloads keyed by 4-character tag (optimizer state, training progress).
  std::map<std::string, std::string> sections;
};

std::string serialize_checkpoint(const Checkpoint& ckpt);
/// Throws IoError on a malformed or truncated file, ConfigError when the stored layer layout
/// does not match the architecture implied by its z_dim.
Checkpoint parse_checkpoint(std::string data, const std::string& source = "<memory>");

void write_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt);
Checkpoint read_checkpoint(const std::filesystem::path& path);

}  // namespace burgan
