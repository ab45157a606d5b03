#pragma once

#include "burgan/oracle/ic.hpp"
#include "burgan/oracle/spectral.hpp"

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

namespace burgan {

inline constexpr std::uint32_t kFieldFormatVersion = 1;
inline constexpr std::uint32_t kManifestVersion = 1;

/// Field file: "BRGF", version u32, nx u32, nt u32, a b c d f64, nu f64, then nt*nx f64
/// row-major, all little-endian. The grid extents are the standard [-8, 8) x [0, 10].
void write_field(const std::filesystem::path& path, const SolutionField& field);
SolutionField read_field(const std::filesystem::path& path);

std::string field_file_name(std::size_t index);

enum class Split { train, val, test };
std::string to_string(Split split);

struct SplitIds {
  std::vector<std::size_t> train;
  std::vector<std::size_t> val;
  std::vector<std::size_t> test;
};

/// Fixed test set plus a seeded 85/15 shuffle of the remaining 100 indices.
SplitIds split_dataset(std::uint64_t seed);

struct DatasetOptions {
  std::size_t nt = 196;
  double nu = kViscosity;
  double dt_max = kDefaultInternalDt;
  std::size_t threads = 1;
};

/// Solved fields plus split assignment. Ids index into `fields`.
struct Dataset {
  std::vector<SolutionField> fields;
  SplitIds splits;
  std::uint64_t seed = 0;
  DatasetOptions options;

  [[nodiscard]] const Grid& grid() const { return fields.front().grid; }
  /// Throws ConfigError if the splits overlap, index out of range, or the grids differ.
  void validate() const;
};

/// Solves all 120 ICs and writes the field files and manifest.json into out_dir.
/// Throws IoError or IntegrationDiverged (naming the IC).
Dataset generate_dataset(std::uint64_t seed, const std::filesystem::path& out_dir, const DatasetOptions& options = {});

/// Manifest text: deterministic JSON with field files, ICs, splits, seed and solver settings.
std::string manifest_json(const Dataset& dataset);

/// Loads manifest.json and every field it lists.
Dataset load_dataset(const std::filesystem::path& dir);

}  // namespace burgan
