#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <string_view>

namespace auditflow {

// Lowercase hex SHA-256 of `data`.
std::string sha256_hex(std::string_view data);
std::array<std::uint8_t, 32> sha256(std::string_view data);

// Splits fields with an unambiguous length prefix before hashing, so that
// ("ab","c") and ("a","bc") never collide.
class DigestBuilder {
 public:
  DigestBuilder& add(std::string_view field);
  DigestBuilder& add(double value);
  DigestBuilder& add(std::int64_t value);
  std::string hex() const;

 private:
  std::string buffer_;
};

}  // namespace auditflow
