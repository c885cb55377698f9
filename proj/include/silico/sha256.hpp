#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <string_view>

namespace silico {

// Minimal SHA-256 (FIPS 180-4). Self-contained so identifiers and cache keys
// do not depend on a crypto library being linked.
class Sha256 {
 public:
  Sha256();
  void update(const void* data, size_t len);
  void update(std::string_view s) { update(s.data(), s.size()); }
  std::array<uint8_t, 32> digest();

 private:
  void process_block(const uint8_t* block);

  uint32_t state_[8];
  uint64_t total_len_ = 0;
  uint8_t buffer_[64];
  size_t buffer_len_ = 0;
};

// Hex digest of a whole string.
std::string sha256_hex(std::string_view data);

// First 64 bits of the digest, for seed derivation.
uint64_t sha256_prefix64(std::string_view data);

}  // namespace silico
