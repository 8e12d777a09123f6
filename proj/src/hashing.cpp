#include "finkg/hashing.hpp"

#include <openssl/evp.h>

#include <array>
#include <stdexcept>

namespace finkg {
namespace {

std::string digest_hex(std::string_view data, std::size_t bytes) {
  std::array<unsigned char, EVP_MAX_MD_SIZE> digest{};
  unsigned int length = 0;
  if (EVP_Digest(data.data(), data.size(), digest.data(), &length, EVP_sha256(), nullptr) != 1) {
    throw std::runtime_error("SHA-256 digest failed");
  }
  static constexpr char kHex[] = "0123456789abcdef";
  std::string out;
  out.reserve(bytes * 2);
  for (std::size_t i = 0; i < bytes && i < length; ++i) {
    out.push_back(kHex[digest[i] >> 4]);
    out.push_back(kHex[digest[i] & 0x0f]);
  }
  return out;
}

}  // namespace

std::string content_hash128(std::string_view data) { return digest_hex(data, 16); }

std::string sha256_hex(std::string_view data) { return digest_hex(data, 32); }

}  // namespace finkg
