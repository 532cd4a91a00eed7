#pragma once

#include <bit>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "rna/errors.hpp"

namespace rna {

static_assert(std::endian::native == std::endian::little,
              "on-disk formats are little-endian; big-endian hosts are not supported");

// Append-only little-endian byte writer.
class ByteWriter {
 public:
  void bytes(const void* data, size_t size) {
    auto p = static_cast<const uint8_t*>(data);
    buffer_.insert(buffer_.end(), p, p + size);
  }
  void text(std::string_view s) { bytes(s.data(), s.size()); }
  void u32(uint32_t v) { bytes(&v, 4); }
  void f32(float v) { bytes(&v, 4); }
  void f32s(std::span<const float> v) { bytes(v.data(), v.size() * 4); }
  // Fixed-width ASCII field, NUL padded.
  void fixed_string(std::string_view s, size_t width) {
    if (s.size() > width) throw ContractViolation("string too long for fixed field: " + std::string(s));
    text(s);
    buffer_.insert(buffer_.end(), width - s.size(), 0);
  }
  const std::vector<uint8_t>& buffer() const { return buffer_; }
  std::vector<uint8_t> take() { return std::move(buffer_); }

 private:
  std::vector<uint8_t> buffer_;
};

// Bounds-checked reader; every overrun is reported as a FormatError.
class ByteReader {
 public:
  explicit ByteReader(std::span<const uint8_t> data, std::string what = "file")
      : data_(data), what_(std::move(what)) {}

  void bytes(void* dst, size_t size) {
    if (size > data_.size() - pos_) throw FormatError(what_ + ": truncated");
    std::memcpy(dst, data_.data() + pos_, size);
    pos_ += size;
  }
  std::string text(size_t size) {
    std::string s(size, '\0');
    bytes(s.data(), size);
    return s;
  }
  uint32_t u32() {
    uint32_t v;
    bytes(&v, 4);
    return v;
  }
  void f32s(std::span<float> dst) { bytes(dst.data(), dst.size() * 4); }
  std::string fixed_string(size_t width) {
    auto s = text(width);
    auto end = s.find('\0');
    return end == std::string::npos ? s : s.substr(0, end);
  }
  size_t remaining() const { return data_.size() - pos_; }
  size_t position() const { return pos_; }

 private:
  std::span<const uint8_t> data_;
  size_t pos_ = 0;
  std::string what_;
};

std::vector<uint8_t> read_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path, std::span<const uint8_t> bytes);

}  // namespace rna
