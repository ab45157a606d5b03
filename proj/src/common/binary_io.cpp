#include "burgan/common/binary_io.hpp"

#include "burgan/common/errors.hpp"

#include <algorithm>
#include <cstring>
#include <sstream>

namespace burgan {

namespace {

template <typename T>
T to_little(T v) {
  if constexpr (std::endian::native == std::endian::big) {
    auto raw = std::bit_cast<std::array<unsigned char, sizeof(T)>>(v);
    std::reverse(raw.begin(), raw.end());
    return std::bit_cast<T>(raw);
  } else {
    return v;
  }
}

template <typename T>
void append(std::string& buf, T v) {
  const auto raw = std::bit_cast<std::array<char, sizeof(T)>>(to_little(v));
  buf.append(raw.data(), raw.size());
}

}  // namespace

void BinaryWriter::magic(std::string_view tag) { buffer_.append(tag); }
void BinaryWriter::u32(std::uint32_t v) { append(buffer_, v); }
void BinaryWriter::u64(std::uint64_t v) { append(buffer_, v); }
void BinaryWriter::f64(double v) { append(buffer_, std::bit_cast<std::uint64_t>(v)); }
void BinaryWriter::bytes(std::string_view raw) { buffer_.append(raw); }

void BinaryWriter::f64s(std::span<const double> values) {
  if constexpr (std::endian::native == std::endian::little) {
    buffer_.append(reinterpret_cast<const char*>(values.data()), values.size_bytes());
  } else {
    for (double v : values) f64(v);
  }
}

void BinaryWriter::commit(const std::filesystem::path& path) const { write_file(path, buffer_); }

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  if (in.bad()) throw IoError("read failure on " + path.string());
  return ss.str();
}

void write_file(const std::filesystem::path& path, std::string_view contents) {
  std::filesystem::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot open " + tmp.string() + " for writing");
    out.write(contents.data(), static_cast<std::streamsize>(contents.size()));
    if (!out) throw IoError("write failure on " + tmp.string());
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) throw IoError("cannot move " + tmp.string() + " to " + path.string() + ": " + ec.message());
}

BinaryReader::BinaryReader(const std::filesystem::path& path) : data_(read_file(path)), source_(path.string()) {}

BinaryReader::BinaryReader(std::string data, std::string source) : data_(std::move(data)), source_(std::move(source)) {}

void BinaryReader::need(std::size_t n) const {
  if (data_.size() - pos_ < n) throw IoError(source_ + ": truncated file");
}

void BinaryReader::expect_magic(std::string_view tag) {
  need(tag.size());
  if (std::string_view(data_).substr(pos_, tag.size()) != tag) {
    throw IoError(source_ + ": bad magic, expected \"" + std::string(tag) + "\"");
  }
  pos_ += tag.size();
}

std::uint32_t BinaryReader::u32() {
  need(4);
  std::uint32_t v;
  std::memcpy(&v, data_.data() + pos_, 4);
  pos_ += 4;
  return to_little(v);
}

std::uint64_t BinaryReader::u64() {
  need(8);
  std::uint64_t v;
  std::memcpy(&v, data_.data() + pos_, 8);
  pos_ += 8;
  return to_little(v);
}

double BinaryReader::f64() { return std::bit_cast<double>(u64()); }

void BinaryReader::f64s(std::span<double> out) {
  need(out.size_bytes());
  if constexpr (std::endian::native == std::endian::little) {
    std::memcpy(out.data(), data_.data() + pos_, out.size_bytes());
    pos_ += out.size_bytes();
  } else {
    for (double& v : out) v = f64();
  }
}

std::string BinaryReader::bytes(std::size_t n) {
  need(n);
  std::string out = data_.substr(pos_, n);
  pos_ += n;
  return out;
}

}  // namespace burgan
