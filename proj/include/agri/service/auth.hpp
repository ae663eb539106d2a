#pragma once

#include <string>
#include <string_view>

namespace agri::service {

inline constexpr std::size_t kMinPasswordLength = 8;

/// Argon2id string hash with a random salt. `fast` selects the minimum
/// cost parameters (tests only).
std::string hash_password(std::string_view password, bool fast = false);
bool verify_password(const std::string& hash, std::string_view password);

/// 256-bit random token, hex encoded.
std::string new_token();
/// Stored form of a token.
std::string token_digest(std::string_view token);

/// Lower-cases and trims; empty result when the address is not plausible.
std::string normalize_email(std::string_view email);

} // namespace agri::service
