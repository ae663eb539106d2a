#pragma once

#include "agri/core/series.hpp"

#include <cstdint>
#include <filesystem>
#include <mutex>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

struct sqlite3;

namespace agri::service {

struct User {
	std::int64_t id = 0;
	std::string email;
	std::string password_hash;
	std::string display_name;
	std::string created_at;
};

struct Enquiry {
	std::int64_t id = 0;
	std::int64_t user_id = 0;
	std::string subject;
	std::string body;
	std::string created_at;
};

struct CachedForecast {
	std::string family;
	std::string generated_at;
	std::string artifact_id;
	std::vector<double> values;
};

enum class JobStatus { Queued, Running, Done, Failed };
std::string_view to_string(JobStatus status);

struct Job {
	std::int64_t id = 0;
	std::string commodity;
	std::string mode;
	std::string fingerprint;
	JobStatus status = JobStatus::Queued;
	std::string error;
	std::string created_at;
	std::string finished_at;
};

/// Thrown by create_user/update_user on a taken email.
struct DuplicateEmail : std::runtime_error {
	using std::runtime_error::runtime_error;
};

/// Embedded relational store. One connection guarded by a mutex; every
/// public call is atomic.
class Store {
public:
	/// Opens (creating if needed) the database file. ":memory:" works too.
	explicit Store(const std::string& path);
	~Store();
	Store(const Store&) = delete;
	Store& operator=(const Store&) = delete;

	std::int64_t create_user(const std::string& email, const std::string& password_hash, const std::string& name);
	std::optional<User> find_user_by_email(const std::string& email);
	std::optional<User> find_user(std::int64_t id);
	void update_user(std::int64_t id, const std::optional<std::string>& email, const std::optional<std::string>& name);

	void insert_token(const std::string& token_hash, std::int64_t user_id, std::int64_t expires_at);
	/// User id of an unrevoked token that expires after `now`.
	std::optional<std::int64_t> token_user(const std::string& token_hash, std::int64_t now);
	void revoke_token(const std::string& token_hash);

	/// Replaces every stored row of the commodity.
	void put_series(const std::string& commodity, const core::FeatureFrame& frame);
	std::optional<core::FeatureFrame> get_series(const std::string& commodity);
	std::vector<std::string> commodities();

	std::int64_t add_enquiry(std::int64_t user_id, const std::string& subject, const std::string& body);
	std::optional<Enquiry> get_enquiry(std::int64_t id);

	void put_forecast(const std::string& commodity, const std::string& mode, const std::string& fingerprint,
	                  const CachedForecast& forecast);
	std::optional<CachedForecast> get_forecast(const std::string& commodity, const std::string& mode,
	                                           const std::string& fingerprint);

	void put_artifact(const std::string& commodity, const std::string& mode, const std::string& fingerprint,
	                  const std::string& family, const std::string& artifact_id);
	std::optional<std::string> get_artifact(const std::string& commodity, const std::string& mode,
	                                        const std::string& fingerprint);

	std::int64_t create_job(const std::string& commodity, const std::string& mode, const std::string& fingerprint);
	void set_job_status(std::int64_t id, JobStatus status, const std::string& error = {});
	std::optional<Job> get_job(std::int64_t id);
	/// A queued or running job for the same inputs, if any.
	std::optional<Job> active_job(const std::string& commodity, const std::string& mode, const std::string& fingerprint);
	/// Marks queued/running jobs failed; used at startup after an unclean stop.
	void abandon_active_jobs();

private:
	void exec(const char* sql);

	sqlite3* db_ = nullptr;
	std::mutex mutex_;
};

/// UTC timestamp in ISO 8601 with a trailing Z.
std::string utc_now();

} // namespace agri::service
