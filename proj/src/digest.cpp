#include "auditflow/digest.hpp"

#include <cstdio>

#include <openssl/evp.h>

namespace auditflow {

std::array<std::uint8_t, 32> sha256(std::string_view data) {
  std::array<std::uint8_t, 32> out{};
  unsigned int len = 0;
  EVP_Digest(data.data(), data.size(), out.data(), &len, EVP_sha256(), nullptr);
  return out;
}

std::string sha256_hex(std::string_view data) {
  static constexpr char kHex[] = "0123456789abcdef";
  const auto bytes = sha256(data);
  std::string hex;
  hex.reserve(64);
  for (std::uint8_t b : bytes) {
    hex.push_back(kHex[b >> 4]);
    hex.push_back(kHex[b & 0x0f]);
  }
  return hex;
}

DigestBuilder& DigestBuilder::add(std::string_view field) {
  buffer_ += std::to_string(field.size());
  buffer_.push_back(':');
  buffer_.append(field);
  buffer_.push_back(';');
  return *this;
}

DigestBuilder& DigestBuilder::add(double value) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", value);
  return add(std::string_view(buf));
}

DigestBuilder& DigestBuilder::add(std::int64_t value) { return add(std::to_string(value)); }

std::string DigestBuilder::hex() const { return sha256_hex(buffer_); }

}  // namespace auditflow
