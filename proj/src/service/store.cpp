#include "agri/service/store.hpp"

#include "agri/error.hpp"

#include <sqlite3.h>

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <ctime>
#include <json.hpp>

namespace agri::service {

std::string_view to_string(JobStatus status) {
	switch (status) {
	case JobStatus::Queued:
		return "queued";
	case JobStatus::Running:
		return "running";
	case JobStatus::Done:
		return "done";
	case JobStatus::Failed:
		return "failed";
	}
	return "unknown";
}

namespace {

JobStatus parse_status(std::string_view text) {
	for (const auto s : {JobStatus::Queued, JobStatus::Running, JobStatus::Done, JobStatus::Failed}) {
		if (to_string(s) == text) {
			return s;
		}
	}
	return JobStatus::Failed;
}

/// RAII prepared statement with positional binding helpers.
class Statement {
public:
	Statement(sqlite3* db, const char* sql) : db_(db) {
		if (sqlite3_prepare_v2(db, sql, -1, &stmt_, nullptr) != SQLITE_OK) {
			throw Error(ErrorCode::IoError, std::string("sqlite prepare failed: ") + sqlite3_errmsg(db));
		}
	}
	~Statement() {
		sqlite3_finalize(stmt_);
	}
	Statement(const Statement&) = delete;
	Statement& operator=(const Statement&) = delete;

	Statement& bind(int index, const std::string& value) {
		check(sqlite3_bind_text(stmt_, index, value.c_str(), static_cast<int>(value.size()), SQLITE_TRANSIENT));
		return *this;
	}
	Statement& bind(int index, std::int64_t value) {
		check(sqlite3_bind_int64(stmt_, index, value));
		return *this;
	}
	Statement& bind(int index, const std::optional<double>& value) {
		check(value ? sqlite3_bind_double(stmt_, index, *value) : sqlite3_bind_null(stmt_, index));
		return *this;
	}

	void reset() {
		sqlite3_reset(stmt_);
		sqlite3_clear_bindings(stmt_);
	}

	/// True while a row is available.
	bool step() {
		const int rc = sqlite3_step(stmt_);
		if (rc == SQLITE_ROW) {
			return true;
		}
		if (rc == SQLITE_DONE) {
			return false;
		}
		if (rc == SQLITE_CONSTRAINT) {
			throw DuplicateEmail(sqlite3_errmsg(db_));
		}
		throw Error(ErrorCode::IoError, std::string("sqlite step failed: ") + sqlite3_errmsg(db_));
	}

	std::string text(int col) const {
		const auto* p = sqlite3_column_text(stmt_, col);
		return p ? reinterpret_cast<const char*>(p) : "";
	}
	std::int64_t integer(int col) const {
		return sqlite3_column_int64(stmt_, col);
	}
	std::optional<double> real(int col) const {
		if (sqlite3_column_type(stmt_, col) == SQLITE_NULL) {
			return std::nullopt;
		}
		return sqlite3_column_double(stmt_, col);
	}

private:
	void check(int rc) {
		if (rc != SQLITE_OK) {
			throw Error(ErrorCode::IoError, std::string("sqlite bind failed: ") + sqlite3_errmsg(db_));
		}
	}

	sqlite3* db_;
	sqlite3_stmt* stmt_ = nullptr;
};

User read_user(const Statement& s) {
	return {s.integer(0), s.text(1), s.text(2), s.text(3), s.text(4)};
}

Job read_job(const Statement& s) {
	return {s.integer(0), s.text(1), s.text(2), s.text(3), parse_status(s.text(4)), s.text(5), s.text(6), s.text(7)};
}

constexpr const char* kSchema = R"sql(
PRAGMA journal_mode = WAL;
PRAGMA foreign_keys = ON;
CREATE TABLE IF NOT EXISTS users (
  id INTEGER PRIMARY KEY AUTOINCREMENT,
  email TEXT NOT NULL UNIQUE,
  password_hash TEXT NOT NULL,
  display_name TEXT NOT NULL,
  created_at TEXT NOT NULL
);
CREATE TABLE IF NOT EXISTS tokens (
  token_hash TEXT PRIMARY KEY,
  user_id INTEGER NOT NULL REFERENCES users(id),
  expires_at INTEGER NOT NULL,
  revoked INTEGER NOT NULL DEFAULT 0
);
CREATE TABLE IF NOT EXISTS series (
  commodity TEXT NOT NULL,
  date TEXT NOT NULL,
  price_myr REAL,
  temperature_c REAL,
  humidity_pct REAL,
  precipitation_mm REAL,
  crude_oil_usd REAL,
  PRIMARY KEY (commodity, date)
);
CREATE TABLE IF NOT EXISTS series_columns (
  commodity TEXT NOT NULL,
  name TEXT NOT NULL,
  PRIMARY KEY (commodity, name)
);
CREATE TABLE IF NOT EXISTS artifacts (
  commodity TEXT NOT NULL,
  mode TEXT NOT NULL,
  fingerprint TEXT NOT NULL,
  family TEXT NOT NULL,
  artifact_id TEXT NOT NULL,
  PRIMARY KEY (commodity, mode, fingerprint)
);
CREATE TABLE IF NOT EXISTS enquiries (
  id INTEGER PRIMARY KEY AUTOINCREMENT,
  user_id INTEGER NOT NULL REFERENCES users(id),
  subject TEXT NOT NULL,
  body TEXT NOT NULL,
  created_at TEXT NOT NULL
);
CREATE TABLE IF NOT EXISTS forecast_cache (
  commodity TEXT NOT NULL,
  mode TEXT NOT NULL,
  fingerprint TEXT NOT NULL,
  family TEXT NOT NULL,
  generated_at TEXT NOT NULL,
  artifact_id TEXT NOT NULL,
  forecast_json TEXT NOT NULL,
  PRIMARY KEY (commodity, mode, fingerprint)
);
CREATE TABLE IF NOT EXISTS jobs (
  id INTEGER PRIMARY KEY AUTOINCREMENT,
  commodity TEXT NOT NULL,
  mode TEXT NOT NULL,
  fingerprint TEXT NOT NULL,
  status TEXT NOT NULL,
  error TEXT NOT NULL DEFAULT '',
  created_at TEXT NOT NULL,
  finished_at TEXT NOT NULL DEFAULT ''
);
)sql";

const char* kExogenousSql[] = {"temperature_c", "humidity_pct", "precipitation_mm", "crude_oil_usd"};

} // namespace

std::string utc_now() {
	const auto now = std::chrono::system_clock::now();
	const std::time_t t = std::chrono::system_clock::to_time_t(now);
	std::tm tm{};
	gmtime_r(&t, &tm);
	char buf[32];
	std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
	return buf;
}

Store::Store(const std::string& path) {
	if (sqlite3_open_v2(path.c_str(), &db_, SQLITE_OPEN_READWRITE | SQLITE_OPEN_CREATE | SQLITE_OPEN_FULLMUTEX,
	                    nullptr) != SQLITE_OK) {
		const std::string msg = db_ ? sqlite3_errmsg(db_) : "out of memory";
		sqlite3_close(db_);
		throw Error(ErrorCode::IoError, "cannot open database " + path + ": " + msg);
	}
	sqlite3_busy_timeout(db_, 5000);
	exec(kSchema);
}

Store::~Store() {
	sqlite3_close(db_);
}

void Store::exec(const char* sql) {
	char* err = nullptr;
	if (sqlite3_exec(db_, sql, nullptr, nullptr, &err) != SQLITE_OK) {
		std::string msg = err ? err : "unknown";
		sqlite3_free(err);
		throw Error(ErrorCode::IoError, "sqlite: " + msg);
	}
}

std::int64_t Store::create_user(const std::string& email, const std::string& password_hash, const std::string& name) {
	std::lock_guard lock(mutex_);
	Statement s(db_, "INSERT INTO users (email, password_hash, display_name, created_at) VALUES (?, ?, ?, ?)");
	s.bind(1, email).bind(2, password_hash).bind(3, name).bind(4, utc_now());
	s.step();
	return sqlite3_last_insert_rowid(db_);
}

std::optional<User> Store::find_user_by_email(const std::string& email) {
	std::lock_guard lock(mutex_);
	Statement s(db_, "SELECT id, email, password_hash, display_name, created_at FROM users WHERE email = ?");
	s.bind(1, email);
	if (s.step()) {
		return read_user(s);
	}
	return std::nullopt;
}

std::optional<User> Store::find_user(std::int64_t id) {
	std::lock_guard lock(mutex_);
	Statement s(db_, "SELECT id, email, password_hash, display_name, created_at FROM users WHERE id = ?");
	s.bind(1, id);
	if (s.step()) {
		return read_user(s);
	}
	return std::nullopt;
}

void Store::update_user(std::int64_t id, const std::optional<std::string>& email, const std::optional<std::string>& name) {
	std::lock_guard lock(mutex_);
	if (email) {
		Statement s(db_, "UPDATE users SET email = ? WHERE id = ?");
		s.bind(1, *email).bind(2, id);
		s.step();
	}
	if (name) {
		Statement s(db_, "UPDATE users SET display_name = ? WHERE id = ?");
		s.bind(1, *name).bind(2, id);
		s.step();
	}
}

void Store::insert_token(const std::string& token_hash, std::int64_t user_id, std::int64_t expires_at) {
	std::lock_guard lock(mutex_);
	Statement s(db_, "INSERT INTO tokens (token_hash, user_id, expires_at) VALUES (?, ?, ?)");
	s.bind(1, token_hash).bind(2, user_id).bind(3, expires_at);
	s.step();
}

std::optional<std::int64_t> Store::token_user(const std::string& token_hash, std::int64_t now) {
	std::lock_guard lock(mutex_);
	Statement s(db_, "SELECT user_id FROM tokens WHERE token_hash = ? AND revoked = 0 AND expires_at > ?");
	s.bind(1, token_hash).bind(2, now);
	if (s.step()) {
		return s.integer(0);
	}
	return std::nullopt;
}

void Store::revoke_token(const std::string& token_hash) {
	std::lock_guard lock(mutex_);
	Statement s(db_, "UPDATE tokens SET revoked = 1 WHERE token_hash = ?");
	s.bind(1, token_hash);
	s.step();
}

void Store::put_series(const std::string& commodity, const core::FeatureFrame& frame) {
	std::lock_guard lock(mutex_);
	exec("BEGIN IMMEDIATE");
	try {
		{
			Statement del(db_, "DELETE FROM series WHERE commodity = ?");
			del.bind(1, commodity);
			del.step();
			Statement cols(db_, "DELETE FROM series_columns WHERE commodity = ?");
			cols.bind(1, commodity);
			cols.step();
		}
		std::vector<std::optional<std::size_t>> index;
		for (const auto* name : kExogenousSql) {
			index.push_back(frame.find_column(name));
			if (index.back()) {
				Statement s(db_, "INSERT INTO series_columns (commodity, name) VALUES (?, ?)");
				s.bind(1, commodity).bind(2, std::string(name));
				s.step();
			}
		}
		Statement ins(db_, "INSERT INTO series (commodity, date, price_myr, temperature_c, humidity_pct, "
		                   "precipitation_mm, crude_oil_usd) VALUES (?, ?, ?, ?, ?, ?, ?)");
		for (std::size_t i = 0; i < frame.rows(); ++i) {
			ins.reset();
			ins.bind(1, commodity).bind(2, core::format_date(frame.timestamps()[i])).bind(3, frame.cells(0)[i]);
			for (std::size_t k = 0; k < index.size(); ++k) {
				ins.bind(static_cast<int>(4 + k), index[k] ? frame.cells(*index[k])[i] : std::optional<double>{});
			}
			ins.step();
		}
		exec("COMMIT");
	} catch (...) {
		exec("ROLLBACK");
		throw;
	}
}

std::optional<core::FeatureFrame> Store::get_series(const std::string& commodity) {
	std::lock_guard lock(mutex_);
	std::vector<std::string> present;
	{
		Statement s(db_, "SELECT name FROM series_columns WHERE commodity = ?");
		s.bind(1, commodity);
		while (s.step()) {
			present.push_back(s.text(0));
		}
	}
	Statement s(db_, "SELECT date, price_myr, temperature_c, humidity_pct, precipitation_mm, crude_oil_usd "
	                 "FROM series WHERE commodity = ? ORDER BY date");
	s.bind(1, commodity);
	std::vector<core::Date> dates;
	std::vector<core::Cell> prices;
	std::vector<core::Column> columns;
	std::vector<int> source;
	for (int k = 0; k < 4; ++k) {
		if (std::find(present.begin(), present.end(), kExogenousSql[k]) != present.end()) {
			columns.push_back({kExogenousSql[k], {}});
			source.push_back(k);
		}
	}
	while (s.step()) {
		dates.push_back(core::parse_date(s.text(0)));
		prices.push_back(s.real(1));
		for (std::size_t c = 0; c < columns.size(); ++c) {
			columns[c].cells.push_back(s.real(2 + source[c]));
		}
	}
	if (dates.empty()) {
		return std::nullopt;
	}
	return core::FeatureFrame(core::Series(std::move(dates), std::move(prices)), std::move(columns));
}

std::vector<std::string> Store::commodities() {
	std::lock_guard lock(mutex_);
	Statement s(db_, "SELECT DISTINCT commodity FROM series ORDER BY commodity");
	std::vector<std::string> out;
	while (s.step()) {
		out.push_back(s.text(0));
	}
	return out;
}

std::int64_t Store::add_enquiry(std::int64_t user_id, const std::string& subject, const std::string& body) {
	std::lock_guard lock(mutex_);
	Statement s(db_, "INSERT INTO enquiries (user_id, subject, body, created_at) VALUES (?, ?, ?, ?)");
	s.bind(1, user_id).bind(2, subject).bind(3, body).bind(4, utc_now());
	s.step();
	return sqlite3_last_insert_rowid(db_);
}

std::optional<Enquiry> Store::get_enquiry(std::int64_t id) {
	std::lock_guard lock(mutex_);
	Statement s(db_, "SELECT id, user_id, subject, body, created_at FROM enquiries WHERE id = ?");
	s.bind(1, id);
	if (s.step()) {
		return Enquiry{s.integer(0), s.integer(1), s.text(2), s.text(3), s.text(4)};
	}
	return std::nullopt;
}

void Store::put_forecast(const std::string& commodity, const std::string& mode, const std::string& fingerprint,
                         const CachedForecast& forecast) {
	std::lock_guard lock(mutex_);
	Statement s(db_, "INSERT OR REPLACE INTO forecast_cache (commodity, mode, fingerprint, family, generated_at, "
	                 "artifact_id, forecast_json) VALUES (?, ?, ?, ?, ?, ?, ?)");
	s.bind(1, commodity).bind(2, mode).bind(3, fingerprint).bind(4, forecast.family).bind(5, forecast.generated_at);
	s.bind(6, forecast.artifact_id).bind(7, nlohmann::json(forecast.values).dump());
	s.step();
}

std::optional<CachedForecast> Store::get_forecast(const std::string& commodity, const std::string& mode,
                                                  const std::string& fingerprint) {
	std::lock_guard lock(mutex_);
	Statement s(db_, "SELECT family, generated_at, artifact_id, forecast_json FROM forecast_cache "
	                 "WHERE commodity = ? AND mode = ? AND fingerprint = ?");
	s.bind(1, commodity).bind(2, mode).bind(3, fingerprint);
	if (!s.step()) {
		return std::nullopt;
	}
	return CachedForecast{s.text(0), s.text(1), s.text(2),
	                      nlohmann::json::parse(s.text(3)).get<std::vector<double>>()};
}

void Store::put_artifact(const std::string& commodity, const std::string& mode, const std::string& fingerprint,
                         const std::string& family, const std::string& artifact_id) {
	std::lock_guard lock(mutex_);
	Statement s(db_, "INSERT OR REPLACE INTO artifacts (commodity, mode, fingerprint, family, artifact_id) "
	                 "VALUES (?, ?, ?, ?, ?)");
	s.bind(1, commodity).bind(2, mode).bind(3, fingerprint).bind(4, family).bind(5, artifact_id);
	s.step();
}

std::optional<std::string> Store::get_artifact(const std::string& commodity, const std::string& mode,
                                               const std::string& fingerprint) {
	std::lock_guard lock(mutex_);
	Statement s(db_, "SELECT artifact_id FROM artifacts WHERE commodity = ? AND mode = ? AND fingerprint = ?");
	s.bind(1, commodity).bind(2, mode).bind(3, fingerprint);
	if (s.step()) {
		return s.text(0);
	}
	return std::nullopt;
}

std::int64_t Store::create_job(const std::string& commodity, const std::string& mode, const std::string& fingerprint) {
	std::lock_guard lock(mutex_);
	Statement s(db_, "INSERT INTO jobs (commodity, mode, fingerprint, status, created_at) VALUES (?, ?, ?, ?, ?)");
	s.bind(1, commodity).bind(2, mode).bind(3, fingerprint).bind(4, std::string(to_string(JobStatus::Queued)));
	s.bind(5, utc_now());
	s.step();
	return sqlite3_last_insert_rowid(db_);
}

void Store::set_job_status(std::int64_t id, JobStatus status, const std::string& error) {
	std::lock_guard lock(mutex_);
	const bool final = status == JobStatus::Done || status == JobStatus::Failed;
	Statement s(db_, "UPDATE jobs SET status = ?, error = ?, finished_at = ? WHERE id = ?");
	s.bind(1, std::string(to_string(status))).bind(2, error).bind(3, final ? utc_now() : std::string()).bind(4, id);
	s.step();
}

std::optional<Job> Store::get_job(std::int64_t id) {
	std::lock_guard lock(mutex_);
	Statement s(db_, "SELECT id, commodity, mode, fingerprint, status, error, created_at, finished_at FROM jobs "
	                 "WHERE id = ?");
	s.bind(1, id);
	if (s.step()) {
		return read_job(s);
	}
	return std::nullopt;
}

std::optional<Job> Store::active_job(const std::string& commodity, const std::string& mode,
                                     const std::string& fingerprint) {
	std::lock_guard lock(mutex_);
	Statement s(db_, "SELECT id, commodity, mode, fingerprint, status, error, created_at, finished_at FROM jobs "
	                 "WHERE commodity = ? AND mode = ? AND fingerprint = ? AND status IN ('queued', 'running') "
	                 "ORDER BY id LIMIT 1");
	s.bind(1, commodity).bind(2, mode).bind(3, fingerprint);
	if (s.step()) {
		return read_job(s);
	}
	return std::nullopt;
}

void Store::abandon_active_jobs() {
	std::lock_guard lock(mutex_);
	exec("UPDATE jobs SET status = 'failed', error = 'abandoned at restart' WHERE status IN ('queued', 'running')");
}

} // namespace agri::service
