#pragma once

#include <string>
#include <string_view>

namespace finkg {

/// Lowercase hex of the first 128 bits of SHA-256(data).
std::string content_hash128(std::string_view data);

/// Full SHA-256 as lowercase hex.
std::string sha256_hex(std::string_view data);

}  // namespace finkg
