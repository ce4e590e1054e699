#pragma once

#include <string>
#include <string_view>

namespace sleepd {

// SHA-256 of the UTF-8 bytes, lowercase hex (64 chars). Context identity is
// content-addressed, so equal bytes always map to the same id.
std::string sha256_hex(std::string_view bytes);

bool looks_like_context_id(std::string_view id);

}  // namespace sleepd
