#pragma once

#include <bit>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>

#include "dina/errors.hpp"

// Little-endian byte buffers shared by the dataset and checkpoint formats.

namespace dina {

static_assert(std::endian::native == std::endian::little, "file formats assume a little-endian host");

class ByteWriter {
 public:
  void u8(std::uint8_t v) { raw(&v, 1); }
  void u16(std::uint16_t v) { raw(&v, 2); }
  void u32(std::uint32_t v) { raw(&v, 4); }
  void u64(std::uint64_t v) { raw(&v, 8); }
  void f64(double v) { raw(&v, 8); }
  void floats(std::span<const float> v) { raw(v.data(), v.size() * sizeof(float)); }
  void bytes(std::string_view s) { buf_.append(s); }
  /// u32 length prefix followed by the bytes.
  void str32(std::string_view s) {
    u32(static_cast<std::uint32_t>(s.size()));
    bytes(s);
  }

  std::size_t size() const { return buf_.size(); }
  const std::string& buffer() const { return buf_; }
  std::string take() { return std::move(buf_); }

  /// Overwrites 8 bytes at `pos`; used to patch section offsets.
  void patch_u64(std::size_t pos, std::uint64_t v) { std::memcpy(buf_.data() + pos, &v, 8); }

 private:
  void raw(const void* p, std::size_t n) { buf_.append(static_cast<const char*>(p), n); }
  std::string buf_;
};

class ByteReader {
 public:
  explicit ByteReader(std::string_view data, std::string what = "file") : data_(data), what_(std::move(what)) {}

  std::uint8_t u8() { return get<std::uint8_t>(); }
  std::uint16_t u16() { return get<std::uint16_t>(); }
  std::uint32_t u32() { return get<std::uint32_t>(); }
  std::uint64_t u64() { return get<std::uint64_t>(); }
  double f64() { return get<double>(); }

  void floats(std::span<float> out) {
    need(out.size() * sizeof(float));
    std::memcpy(out.data(), data_.data() + pos_, out.size() * sizeof(float));
    pos_ += out.size() * sizeof(float);
  }
  std::string_view bytes(std::size_t n) {
    need(n);
    auto s = data_.substr(pos_, n);
    pos_ += n;
    return s;
  }
  std::string str32() { return std::string(bytes(u32())); }

  std::size_t position() const { return pos_; }
  std::size_t remaining() const { return data_.size() - pos_; }
  void seek(std::size_t pos) {
    if (pos > data_.size()) throw FormatError(what_ + ": offset " + std::to_string(pos) + " past end of data");
    pos_ = pos;
  }
  /// A reader over [offset, offset + length) of the same data.
  ByteReader sub(std::uint64_t offset, std::uint64_t length, const std::string& what) const {
    if (offset > data_.size() || length > data_.size() - offset) {
      throw FormatError(what_ + ": section " + what + " extends past end of file (truncated?)");
    }
    return ByteReader(data_.substr(offset, length), what_ + " " + what);
  }

 private:
  template <typename V>
  V get() {
    need(sizeof(V));
    V v;
    std::memcpy(&v, data_.data() + pos_, sizeof(V));
    pos_ += sizeof(V);
    return v;
  }
  void need(std::size_t n) const {
    if (n > data_.size() - pos_) throw FormatError(what_ + ": unexpected end of data (truncated?)");
  }

  std::string_view data_;
  std::string what_;
  std::size_t pos_ = 0;
};

/// Whole-file read; FormatError when the file cannot be opened.
std::string read_file(const std::filesystem::path& path);
/// Writes through a temporary sibling and renames, so readers never see a partial file.
void write_file(const std::filesystem::path& path, std::string_view bytes);

}  // namespace dina
