#include "lyre/binary_io.hpp"

#include <openssl/sha.h>

#include <algorithm>
#include <array>
#include <fstream>
#include <iterator>

namespace lyre {

std::vector<std::uint8_t> read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open '" + path + "' for reading");
  return std::vector<std::uint8_t>(std::istreambuf_iterator<char>(in), {});
}

void write_file(const std::string& path, std::span<const std::uint8_t> bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("cannot open '" + path + "' for writing");
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw Error("failed writing '" + path + "'");
}

std::vector<std::uint8_t> seal_container(std::string_view magic, std::uint32_t version,
                                         std::span<const std::uint8_t> payload) {
  if (magic.size() != 8) throw ContractError("container magic must be 8 bytes");
  ByteWriter w;
  w.raw({reinterpret_cast<const std::uint8_t*>(magic.data()), magic.size()});
  w.u32(version);
  w.u64(payload.size());
  w.raw(payload);
  const auto digest = sha256(w.bytes());
  w.raw(digest);
  return w.take();
}

OpenedContainer open_container(std::span<const std::uint8_t> bytes, std::string_view magic,
                               std::uint32_t max_version) {
  using Fault = FormatError::Fault;
  constexpr std::size_t kHeader = 8 + 4 + 8;
  if (bytes.size() < 8) throw FormatError("truncated file: no header", Fault::truncated);
  if (!std::equal(magic.begin(), magic.end(), bytes.begin()))
    throw FormatError("bad magic: not a '" + std::string(magic) + "' file", Fault::bad_magic);
  if (bytes.size() < kHeader + 32) throw FormatError("truncated file: header", Fault::truncated);
  ByteReader header(bytes.subspan(8, 12));
  const std::uint32_t version = header.u32();
  const std::uint64_t length = header.u64();
  if (length > bytes.size() - kHeader - 32)
    throw FormatError("truncated file: expected " + std::to_string(kHeader + length + 32) +
                          " bytes, found " + std::to_string(bytes.size()),
                      Fault::truncated);
  if (bytes.size() != kHeader + length + 32)
    throw FormatError("trailing bytes after payload", Fault::malformed);
  const auto body = bytes.first(kHeader + length);
  const auto digest = sha256(body);
  if (!std::equal(digest.begin(), digest.end(), bytes.begin() + static_cast<std::ptrdiff_t>(body.size())))
    throw FormatError("checksum mismatch", Fault::checksum);
  if (version == 0 || version > max_version)
    throw FormatError("unsupported version " + std::to_string(version) + " (this build reads up to " +
                          std::to_string(max_version) + ")",
                      Fault::unsupported_version);
  return {version, bytes.subspan(kHeader, length)};
}

std::array<std::uint8_t, 32> sha256(std::span<const std::uint8_t> bytes) {
  std::array<std::uint8_t, 32> digest{};
  SHA256(bytes.data(), bytes.size(), digest.data());
  return digest;
}

std::string sha256_hex(std::span<const std::uint8_t> bytes) {
  static constexpr char kHex[] = "0123456789abcdef";
  std::string out;
  for (auto b : sha256(bytes)) {
    out.push_back(kHex[b >> 4]);
    out.push_back(kHex[b & 15]);
  }
  return out;
}

}  // namespace lyre
