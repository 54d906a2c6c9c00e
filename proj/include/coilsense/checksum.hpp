#pragma once

#include <array>
#include <cstdint>
#include <cstddef>
#include <span>
#include <string>

namespace coilsense {

namespace detail {
inline const std::array<uint32_t, 256>& crc32_table() {
  static const std::array<uint32_t, 256> table = [] {
    std::array<uint32_t, 256> t{};
    for (uint32_t i = 0; i < 256; ++i) {
      uint32_t c = i;
      for (int k = 0; k < 8; ++k) c = (c & 1) ? 0xEDB88320u ^ (c >> 1) : c >> 1;
      t[i] = c;
    }
    return t;
  }();
  return table;
}
}  // namespace detail

/// Streaming CRC-32 (IEEE polynomial).
class Crc32 {
 public:
  void update(const void* data, size_t len) {
    const auto* p = static_cast<const unsigned char*>(data);
    const auto& table = detail::crc32_table();
    for (size_t i = 0; i < len; ++i) crc_ = table[(crc_ ^ p[i]) & 0xFFu] ^ (crc_ >> 8);
  }
  void update(std::span<const std::byte> data) { update(data.data(), data.size()); }
  void update(const std::string& s) { update(s.data(), s.size()); }
  uint32_t value() const { return crc_ ^ 0xFFFFFFFFu; }

 private:
  uint32_t crc_ = 0xFFFFFFFFu;
};

inline uint32_t crc32_of(const void* data, size_t len) {
  Crc32 c;
  c.update(data, len);
  return c.value();
}

inline uint32_t crc32_of(const std::string& s) { return crc32_of(s.data(), s.size()); }

}  // namespace coilsense
