#include "xag/digest.hpp"

#include <openssl/evp.h>

#include "xag/errors.hpp"

namespace xag {

Sha256 sha256(const void* data, std::size_t n) {
  Sha256 out{};
  unsigned int len = 0;
  if (EVP_Digest(data, n, out.data(), &len, EVP_sha256(), nullptr) != 1 || len != out.size()) {
    throw Error("sha256 digest failed");
  }
  return out;
}

Sha256 sha256(std::string_view s) { return sha256(s.data(), s.size()); }

std::string to_hex(const Sha256& digest) {
  static const char* hex = "0123456789abcdef";
  std::string s;
  s.reserve(64);
  for (std::uint8_t b : digest) {
    s.push_back(hex[b >> 4]);
    s.push_back(hex[b & 0xf]);
  }
  return s;
}

}  // namespace xag
