#pragma once

#include "agri/engine/engine.hpp"
#include "agri/service/store.hpp"

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <memory>
#include <string>

namespace agri::service {

inline constexpr std::size_t kMaxHorizon = 52;

struct Config {
	std::filesystem::path data_dir = "data";
	std::string host = "127.0.0.1";
	int port = 8080;
	std::chrono::seconds token_ttl = std::chrono::hours(24);
	/// Minimum-cost password hashing; for tests.
	bool fast_kdf = false;
	engine::Options engine;

	/// Overrides from AGRI_DATA_DIR, AGRI_BIND (host:port) and
	/// AGRI_TOKEN_TTL_HOURS. Throws ErrorCode::InvalidArgument.
	static Config from_env(Config base);
};

/// JSON-over-HTTP facade under /api/v1 with a single background training
/// worker. Database at <data_dir>/agri.db, artifacts under <data_dir>/artifacts.
class Service {
public:
	explicit Service(Config config);
	~Service();
	Service(const Service&) = delete;
	Service& operator=(const Service&) = delete;

	Store& store();
	const Config& config() const;

	/// Binds and serves on a background thread; port 0 picks a free port.
	/// Returns the bound port. Throws ErrorCode::IoError.
	int start(const std::string& host, int port);
	/// Binds and serves on the calling thread until stop().
	void run(const std::string& host, int port);
	void stop();

	/// Blocks until the training queue is empty and idle.
	void wait_idle();

private:
	struct Impl;
	std::unique_ptr<Impl> impl_;
};

} // namespace agri::service
