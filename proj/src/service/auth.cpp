#include "agri/service/auth.hpp"

#include "agri/engine/artifact.hpp"
#include "agri/error.hpp"

#include <sodium.h>

#include <algorithm>
#include <cctype>

namespace agri::service {

namespace {

void ensure_sodium() {
	static const int ready = sodium_init();
	if (ready < 0) {
		throw Error(ErrorCode::IoError, "libsodium failed to initialize");
	}
}

} // namespace

std::string hash_password(std::string_view password, bool fast) {
	ensure_sodium();
	char out[crypto_pwhash_STRBYTES];
	const auto ops = fast ? crypto_pwhash_OPSLIMIT_MIN : crypto_pwhash_OPSLIMIT_INTERACTIVE;
	const auto mem = fast ? crypto_pwhash_MEMLIMIT_MIN : crypto_pwhash_MEMLIMIT_INTERACTIVE;
	if (crypto_pwhash_str_alg(out, password.data(), password.size(), ops, mem, crypto_pwhash_ALG_ARGON2ID13) != 0) {
		throw Error(ErrorCode::IoError, "password hashing ran out of memory");
	}
	return out;
}

bool verify_password(const std::string& hash, std::string_view password) {
	ensure_sodium();
	return crypto_pwhash_str_verify(hash.c_str(), password.data(), password.size()) == 0;
}

std::string new_token() {
	ensure_sodium();
	unsigned char bytes[32];
	randombytes_buf(bytes, sizeof bytes);
	char hex[2 * sizeof bytes + 1];
	sodium_bin2hex(hex, sizeof hex, bytes, sizeof bytes);
	return hex;
}

std::string token_digest(std::string_view token) {
	return engine::sha256_hex(token);
}

std::string normalize_email(std::string_view email) {
	while (!email.empty() && std::isspace(static_cast<unsigned char>(email.front()))) {
		email.remove_prefix(1);
	}
	while (!email.empty() && std::isspace(static_cast<unsigned char>(email.back()))) {
		email.remove_suffix(1);
	}
	std::string out(email);
	std::transform(out.begin(), out.end(), out.begin(), [](unsigned char c) { return std::tolower(c); });
	const auto at = out.find('@');
	if (at == std::string::npos || at == 0 || out.find('@', at + 1) != std::string::npos || out.size() > 254) {
		return {};
	}
	const auto domain = std::string_view(out).substr(at + 1);
	const auto dot = domain.find('.');
	if (dot == std::string_view::npos || dot == 0 || domain.back() == '.') {
		return {};
	}
	if (std::any_of(out.begin(), out.end(), [](unsigned char c) { return std::isspace(c) || std::iscntrl(c); })) {
		return {};
	}
	return out;
}

} // namespace agri::service
