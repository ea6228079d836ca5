#pragma once

// Little-endian binary streams shared by the FMAP / DMAP / FPCL / STFM formats.

#include <bit>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <span>
#include <string>
#include <type_traits>
#include <vector>

#include "splatstyle/error.hpp"

namespace splatstyle::detail {

template <typename T>
T byteswap_if_big(T value) {
  if constexpr (std::endian::native == std::endian::big && sizeof(T) > 1) {
    unsigned char bytes[sizeof(T)];
    std::memcpy(bytes, &value, sizeof(T));
    for (std::size_t i = 0; i < sizeof(T) / 2; ++i) std::swap(bytes[i], bytes[sizeof(T) - 1 - i]);
    std::memcpy(&value, bytes, sizeof(T));
  }
  return value;
}

class BinaryWriter {
 public:
  explicit BinaryWriter(const std::filesystem::path& path)
      : path_(path), out_(path, std::ios::binary | std::ios::trunc) {
    if (!out_) throw IoError("cannot open for writing: " + path.string());
  }

  void magic(const char (&tag)[5]) { out_.write(tag, 4); }

  template <typename T>
  void scalar(T value) {
    static_assert(std::is_arithmetic_v<T>);
    value = byteswap_if_big(value);
    out_.write(reinterpret_cast<const char*>(&value), sizeof(T));
  }

  template <typename T>
  void array(std::span<const T> values) {
    static_assert(std::is_arithmetic_v<T>);
    if constexpr (std::endian::native == std::endian::little) {
      out_.write(reinterpret_cast<const char*>(values.data()),
                 static_cast<std::streamsize>(values.size_bytes()));
    } else {
      for (T v : values) scalar(v);
    }
  }

  void finish() {
    out_.flush();
    if (!out_) throw IoError("write failed: " + path_.string());
  }

 private:
  std::filesystem::path path_;
  std::ofstream out_;
};

class BinaryReader {
 public:
  explicit BinaryReader(const std::filesystem::path& path)
      : path_(path), in_(path, std::ios::binary) {
    if (!in_) throw IoError("cannot open for reading: " + path.string());
  }

  void expect_magic(const char (&tag)[5]) {
    char buf[4] = {};
    in_.read(buf, 4);
    if (in_.gcount() != 4 || std::memcmp(buf, tag, 4) != 0) {
      throw FormatError("bad magic in " + path_.string() + " (expected \"" + tag + "\")");
    }
  }

  template <typename T>
  T scalar() {
    static_assert(std::is_arithmetic_v<T>);
    T value{};
    in_.read(reinterpret_cast<char*>(&value), sizeof(T));
    if (in_.gcount() != static_cast<std::streamsize>(sizeof(T))) truncated();
    return byteswap_if_big(value);
  }

  template <typename T>
  std::vector<T> array(std::size_t count) {
    static_assert(std::is_arithmetic_v<T>);
    // Refuse sizes larger than what is left in the file before allocating.
    if (count > remaining_bytes() / sizeof(T)) truncated();
    std::vector<T> values(count);
    const auto bytes = static_cast<std::streamsize>(count * sizeof(T));
    in_.read(reinterpret_cast<char*>(values.data()), bytes);
    if (in_.gcount() != bytes) truncated();
    if constexpr (std::endian::native == std::endian::big) {
      for (T& v : values) v = byteswap_if_big(v);
    }
    return values;
  }

  void expect_end() {
    if (in_.peek() != std::char_traits<char>::eof()) {
      throw FormatError("trailing bytes in " + path_.string());
    }
  }

  const std::filesystem::path& path() const { return path_; }

 private:
  std::size_t remaining_bytes() {
    const auto here = in_.tellg();
    in_.seekg(0, std::ios::end);
    const auto end = in_.tellg();
    in_.seekg(here);
    return here < 0 || end < here ? 0 : static_cast<std::size_t>(end - here);
  }

  [[noreturn]] void truncated() const { throw FormatError("truncated file: " + path_.string()); }

  std::filesystem::path path_;
  std::ifstream in_;
};

}  // namespace splatstyle::detail
