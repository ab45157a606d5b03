#pragma once

#include <array>
#include <bit>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace burgan {

/// Little-endian binary writer over an in-memory buffer.
class BinaryWriter {
 public:
  void magic(std::string_view tag);
  void u32(std::uint32_t v);
  void u64(std::uint64_t v);
  void f64(double v);
  void f64s(std::span<const double> values);
  void bytes(std::string_view raw);

  [[nodiscard]] const std::string& buffer() const noexcept { return buffer_; }

  /// Writes to `path` via a temporary file and rename, so readers never see a partial file.
  void commit(const std::filesystem::path& path) const;

 private:
  std::string buffer_;
};

/// Little-endian reader over a whole file loaded in memory. Throws IoError on truncation.
class BinaryReader {
 public:
  explicit BinaryReader(const std::filesystem::path& path);
  explicit BinaryReader(std::string data, std::string source = "<memory>");

  /// Throws IoError unless the next bytes equal `tag`.
  void expect_magic(std::string_view tag);
  std::uint32_t u32();
  std::uint64_t u64();
  double f64();
  void f64s(std::span<double> out);
  std::string bytes(std::size_t n);

  [[nodiscard]] bool at_end() const noexcept { return pos_ == data_.size(); }
  [[nodiscard]] std::size_t remaining() const noexcept { return data_.size() - pos_; }
  [[nodiscard]] const std::string& source() const noexcept { return source_; }

 private:
  void need(std::size_t n) const;

  std::string data_;
  std::string source_;
  std::size_t pos_ = 0;
};

/// Reads a whole file; throws IoError when it cannot be opened.
std::string read_file(const std::filesystem::path& path);

/// Writes a whole file atomically (temporary + rename).
void write_file(const std::filesystem::path& path, std::string_view contents);

}  // namespace burgan
