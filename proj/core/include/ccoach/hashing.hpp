#pragma once

#include <filesystem>
#include <string>
#include <string_view>

namespace ccoach {

std::string sha256_hex(std::string_view data);
std::string sha256_file_hex(const std::filesystem::path& file);

/// HMAC-SHA256 of `message` under `key`, hex encoded and cut to `hex_chars`.
std::string keyed_digest_hex(std::string_view key, std::string_view message,
                             std::size_t hex_chars = 16);

}  // namespace ccoach
