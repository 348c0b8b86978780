#pragma once

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <string>
#include <string_view>

#include "ttsprep/errors.hpp"

namespace ttsprep {

// FNV-1a, 64-bit: cheap, dependency-free content fingerprinting for
// provenance sidecars. Not cryptographic and not meant to be.
class Fnv1a64 {
 public:
  Fnv1a64& update(const void* data, std::size_t size) {
    const auto* bytes = static_cast<const unsigned char*>(data);
    for (std::size_t i = 0; i < size; ++i) {
      state_ ^= bytes[i];
      state_ *= 0x100000001B3ull;
    }
    return *this;
  }
  Fnv1a64& update(std::string_view s) { return update(s.data(), s.size()); }

  std::uint64_t value() const { return state_; }

  std::string hex() const {
    static constexpr char digits[] = "0123456789abcdef";
    std::string out(16, '0');
    std::uint64_t v = state_;
    for (int i = 15; i >= 0; --i, v >>= 4) out[static_cast<std::size_t>(i)] = digits[v & 0xF];
    return out;
  }

 private:
  std::uint64_t state_ = 0xCBF29CE484222325ull;
};

inline std::string hash_bytes_hex(std::string_view bytes) {
  return Fnv1a64().update(bytes).hex();
}

inline std::string hash_file_hex(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoFailure("cannot open " + path.string() + " for hashing");
  Fnv1a64 h;
  char buf[1 << 16];
  while (in.read(buf, sizeof buf) || in.gcount() > 0)
    h.update(buf, static_cast<std::size_t>(in.gcount()));
  return h.hex();
}

}  // namespace ttsprep
