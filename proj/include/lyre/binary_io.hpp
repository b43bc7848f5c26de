#pragma once

#include <array>
#include <bit>
#include <cstdint>
#include <cstring>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "lyre/error.hpp"
#include "lyre/tensor.hpp"

namespace lyre {

// Little-endian primitives shared by the checkpoint and embedding formats.

class ByteWriter {
 public:
  void u8(std::uint8_t v) { bytes_.push_back(v); }
  void u32(std::uint32_t v) {
    for (int i = 0; i < 4; ++i) bytes_.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
  }
  void u64(std::uint64_t v) {
    for (int i = 0; i < 8; ++i) bytes_.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
  }
  void f64(double v) { u64(std::bit_cast<std::uint64_t>(v)); }
  void str(std::string_view s) {
    u64(s.size());
    bytes_.insert(bytes_.end(), s.begin(), s.end());
  }
  void raw(std::span<const std::uint8_t> b) { bytes_.insert(bytes_.end(), b.begin(), b.end()); }
  void tensor(const Tensor& t) {
    u64(t.shape.size());
    for (auto d : t.shape) u64(d);
    for (double v : t.values) f64(v);
  }

  const std::vector<std::uint8_t>& bytes() const noexcept { return bytes_; }
  std::vector<std::uint8_t> take() { return std::move(bytes_); }

 private:
  std::vector<std::uint8_t> bytes_;
};

class ByteReader {
 public:
  explicit ByteReader(std::span<const std::uint8_t> bytes) : bytes_(bytes) {}

  std::uint8_t u8() { return take(1)[0]; }
  std::uint32_t u32() {
    auto b = take(4);
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(b[i]) << (8 * i);
    return v;
  }
  std::uint64_t u64() {
    auto b = take(8);
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(b[i]) << (8 * i);
    return v;
  }
  double f64() { return std::bit_cast<double>(u64()); }
  std::string str() {
    const std::uint64_t n = u64();
    if (n > remaining()) throw FormatError("truncated data: string of " + std::to_string(n) + " bytes",
                        FormatError::Fault::truncated);
    auto b = take(n);
    return std::string(b.begin(), b.end());
  }
  Tensor tensor() {
    const std::uint64_t rank = u64();
    if (rank > 8) throw FormatError("implausible tensor rank " + std::to_string(rank));
    Shape shape(rank);
    std::uint64_t count = 1;
    for (auto& d : shape) {
      d = u64();
      if (d == 0 || d > remaining()) throw FormatError("implausible tensor dimension");
      count *= d;
    }
    if (count * 8 > remaining()) throw FormatError("truncated data: tensor payload", FormatError::Fault::truncated);
    std::vector<double> v(count);
    for (auto& x : v) x = f64();
    return Tensor(std::move(shape), std::move(v));
  }
  std::span<const std::uint8_t> take(std::size_t n) {
    if (n > remaining()) throw FormatError("truncated data at offset " + std::to_string(pos_),
                        FormatError::Fault::truncated);
    auto out = bytes_.subspan(pos_, n);
    pos_ += n;
    return out;
  }

  std::size_t remaining() const noexcept { return bytes_.size() - pos_; }
  std::size_t position() const noexcept { return pos_; }

 private:
  std::span<const std::uint8_t> bytes_;
  std::size_t pos_ = 0;
};

std::vector<std::uint8_t> read_file(const std::string& path);
void write_file(const std::string& path, std::span<const std::uint8_t> bytes);

// Sealed container: 8-byte magic | u32 version | u64 payload length | payload
// | SHA-256 of everything before it.

std::vector<std::uint8_t> seal_container(std::string_view magic, std::uint32_t version,
                                         std::span<const std::uint8_t> payload);

struct OpenedContainer {
  std::uint32_t version;
  std::span<const std::uint8_t> payload;
};

/// Verifies magic, length and checksum, then rejects versions newer than
/// max_version. Nothing is decoded before all checks pass.
OpenedContainer open_container(std::span<const std::uint8_t> bytes, std::string_view magic,
                               std::uint32_t max_version);

/// Lowercase hex SHA-256.
std::string sha256_hex(std::span<const std::uint8_t> bytes);
std::array<std::uint8_t, 32> sha256(std::span<const std::uint8_t> bytes);

}  // namespace lyre
