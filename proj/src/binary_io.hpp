#pragma once

// Little-endian helpers shared by the OFG1 / ELG1 / VFN1 codecs.

#include <bit>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <string>
#include <string_view>
#include <vector>

#include "hjnav/error.hpp"

namespace hjnav::detail {

class ByteWriter {
 public:
  void magic(std::string_view m) { bytes_.insert(bytes_.end(), m.begin(), m.end()); }
  void u32(std::uint32_t v) { put(v); }
  void f64(double v) { put(std::bit_cast<std::uint64_t>(v)); }
  void f32(float v) { put(std::bit_cast<std::uint32_t>(v)); }

  void save(const std::filesystem::path& path) const {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw Error("cannot open for writing: " + path.string());
    out.write(reinterpret_cast<const char*>(bytes_.data()),
              static_cast<std::streamsize>(bytes_.size()));
    if (!out) throw Error("write failed: " + path.string());
  }

 private:
  template <typename U>
  void put(U v) {
    for (std::size_t b = 0; b < sizeof(U); ++b) {
      bytes_.push_back(static_cast<std::uint8_t>(v >> (8 * b)));
    }
  }
  std::vector<std::uint8_t> bytes_;
};

class ByteReader {
 public:
  explicit ByteReader(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error("cannot open: " + path.string());
    bytes_.assign(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
  }

  void expect_magic(std::string_view m) {
    need(m.size(), "magic");
    if (std::memcmp(bytes_.data() + pos_, m.data(), m.size()) != 0) {
      throw FormatError("bad magic, expected \"" + std::string(m) + "\"", pos_);
    }
    pos_ += m.size();
  }
  std::uint32_t u32(const char* what) { return get<std::uint32_t>(what); }
  double f64(const char* what) {
    const auto at = pos_;
    const double v = std::bit_cast<double>(get<std::uint64_t>(what));
    if (!std::isfinite(v)) throw FormatError(std::string("non-finite ") + what, at);
    return v;
  }
  float f32(const char* what) {
    const auto at = pos_;
    const float v = std::bit_cast<float>(get<std::uint32_t>(what));
    if (!std::isfinite(v)) throw FormatError(std::string("non-finite ") + what, at);
    return v;
  }
  /// Throws a truncation error unless `count` more bytes are available.
  void need(std::uint64_t count, const char* what) const {
    if (bytes_.size() - pos_ < count) {
      throw FormatError(std::string("truncated ") + what + ": need " + std::to_string(count) +
                            " bytes, have " + std::to_string(bytes_.size() - pos_),
                        pos_);
    }
  }
  std::uint64_t offset() const { return pos_; }
  std::uint64_t remaining() const { return bytes_.size() - pos_; }

 private:
  template <typename U>
  U get(const char* what) {
    need(sizeof(U), what);
    U v = 0;
    for (std::size_t b = 0; b < sizeof(U); ++b) {
      v |= static_cast<U>(static_cast<U>(bytes_[pos_ + b]) << (8 * b));
    }
    pos_ += sizeof(U);
    return v;
  }

  std::vector<std::uint8_t> bytes_;
  std::uint64_t pos_ = 0;
};

}  // namespace hjnav::detail
