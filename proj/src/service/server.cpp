#include "agri/service/server.hpp"

#include "agri/engine/artifact.hpp"
#include "agri/error.hpp"
#include "agri/ingest/ingest.hpp"
#include "agri/service/auth.hpp"

#include <httplib.h>
#include <json.hpp>

#include <condition_variable>
#include <cstdlib>
#include <deque>
#include <thread>

namespace agri::service {

using nlohmann::json;

Config Config::from_env(Config base) {
	if (const char* dir = std::getenv("AGRI_DATA_DIR"); dir && *dir) {
		base.data_dir = dir;
	}
	if (const char* bind = std::getenv("AGRI_BIND"); bind && *bind) {
		const std::string text(bind);
		const auto colon = text.rfind(':');
		if (colon == std::string::npos) {
			throw Error(ErrorCode::InvalidArgument, "AGRI_BIND must be host:port");
		}
		base.host = text.substr(0, colon);
		try {
			base.port = std::stoi(text.substr(colon + 1));
		} catch (const std::exception&) {
			throw Error(ErrorCode::InvalidArgument, "AGRI_BIND port is not a number");
		}
	}
	if (const char* ttl = std::getenv("AGRI_TOKEN_TTL_HOURS"); ttl && *ttl) {
		try {
			const double hours = std::stod(ttl);
			if (!(hours >= 0.0)) {
				throw std::invalid_argument("negative");
			}
			base.token_ttl = std::chrono::seconds(static_cast<std::int64_t>(hours * 3600.0));
		} catch (const std::exception&) {
			throw Error(ErrorCode::InvalidArgument, "AGRI_TOKEN_TTL_HOURS must be a non-negative number");
		}
	}
	return base;
}

namespace {

std::int64_t unix_now() {
	return std::chrono::duration_cast<std::chrono::seconds>(std::chrono::system_clock::now().time_since_epoch()).count();
}

void send_json(httplib::Response& res, int status, const json& body) {
	res.status = status;
	res.set_content(body.dump(), "application/json");
}

void send_error(httplib::Response& res, int status, std::string_view code, std::string_view message) {
	send_json(res, status, {{"code", code}, {"message", message}});
}

std::optional<json> parse_body(const httplib::Request& req, httplib::Response& res) {
	try {
		auto doc = json::parse(req.body);
		if (!doc.is_object()) {
			send_error(res, 400, "BadRequest", "request body must be a JSON object");
			return std::nullopt;
		}
		return doc;
	} catch (const json::exception&) {
		send_error(res, 400, "BadRequest", "request body is not valid JSON");
		return std::nullopt;
	}
}

std::optional<std::string> string_field(const json& doc, const char* name) {
	const auto it = doc.find(name);
	if (it == doc.end() || !it->is_string()) {
		return std::nullopt;
	}
	return it->get<std::string>();
}

json cell_json(const core::Cell& cell) {
	return cell ? json(*cell) : json(nullptr);
}

} // namespace

struct Service::Impl {
	Config config;
	Store store;
	engine::ArtifactStore artifacts;
	std::string dummy_hash;
	httplib::Server http;
	std::thread server_thread;

	std::mutex queue_mutex;
	std::condition_variable queue_cv;
	std::deque<std::int64_t> queue;
	bool busy = false;
	bool stopping = false;
	std::thread worker;

	explicit Impl(Config cfg)
	    : config(std::move(cfg)), store(prepare(config.data_dir)), artifacts(config.data_dir),
	      dummy_hash(hash_password("not-a-real-password", config.fast_kdf)) {
		store.abandon_active_jobs();
		install_routes();
		worker = std::thread([this] { work(); });
	}

	~Impl() {
		http.stop();
		if (server_thread.joinable()) {
			server_thread.join();
		}
		{
			std::lock_guard lock(queue_mutex);
			stopping = true;
		}
		queue_cv.notify_all();
		if (worker.joinable()) {
			worker.join();
		}
	}

	static std::string prepare(const std::filesystem::path& dir) {
		std::error_code ec;
		std::filesystem::create_directories(dir, ec);
		if (ec) {
			throw Error(ErrorCode::IoError, "cannot create data directory " + dir.string() + ": " + ec.message());
		}
		return (dir / "agri.db").string();
	}

	std::optional<std::int64_t> authenticate(const httplib::Request& req, httplib::Response& res) {
		const auto header = req.get_header_value("Authorization");
		constexpr std::string_view prefix = "Bearer ";
		if (header.size() > prefix.size() && header.compare(0, prefix.size(), prefix) == 0) {
			if (auto user = store.token_user(token_digest(header.substr(prefix.size())), unix_now())) {
				return user;
			}
		}
		send_error(res, 401, "Unauthorized", "missing, invalid or expired token");
		return std::nullopt;
	}

	void install_routes() {
		http.set_exception_handler([](const httplib::Request&, httplib::Response& res, std::exception_ptr ep) {
			try {
				std::rethrow_exception(ep);
			} catch (const std::exception& e) {
				send_error(res, 500, "Internal", e.what());
			} catch (...) {
				send_error(res, 500, "Internal", "unknown failure");
			}
		});

		http.Get("/api/v1/health", [](const httplib::Request&, httplib::Response& res) {
			send_json(res, 200, {{"status", "ok"}});
		});
		http.Post("/api/v1/auth/register", [this](const auto& req, auto& res) { on_register(req, res); });
		http.Post("/api/v1/auth/login", [this](const auto& req, auto& res) { on_login(req, res); });
		http.Post("/api/v1/auth/logout", [this](const auto& req, auto& res) {
			if (!authenticate(req, res)) {
				return;
			}
			store.revoke_token(token_digest(req.get_header_value("Authorization").substr(7)));
			res.status = 204;
		});
		http.Get("/api/v1/commodities", [this](const auto& req, auto& res) {
			if (authenticate(req, res)) {
				send_json(res, 200, {{"commodities", store.commodities()}});
			}
		});
		http.Get(R"(/api/v1/series/([^/]+))", [this](const auto& req, auto& res) { on_series(req, res); });
		http.Get(R"(/api/v1/download/([^/]+)\.csv)", [this](const auto& req, auto& res) { on_download(req, res); });
		http.Post("/api/v1/forecast", [this](const auto& req, auto& res) { on_forecast(req, res); });
		http.Get(R"(/api/v1/jobs/(\d+))", [this](const auto& req, auto& res) { on_job(req, res); });
		http.Post("/api/v1/enquiries", [this](const auto& req, auto& res) { on_enquiry_post(req, res); });
		http.Get(R"(/api/v1/enquiries/(\d+))", [this](const auto& req, auto& res) { on_enquiry_get(req, res); });
		http.Get("/api/v1/profile", [this](const auto& req, auto& res) { on_profile_get(req, res); });
		http.Patch("/api/v1/profile", [this](const auto& req, auto& res) { on_profile_patch(req, res); });
	}

	void on_register(const httplib::Request& req, httplib::Response& res) {
		const auto body = parse_body(req, res);
		if (!body) {
			return;
		}
		const auto email = normalize_email(string_field(*body, "email").value_or(""));
		const auto password = string_field(*body, "password").value_or("");
		auto name = string_field(*body, "display_name");
		if (!name) {
			name = string_field(*body, "name");
		}
		if (email.empty()) {
			return send_error(res, 422, "InvalidEmail", "email address is not valid");
		}
		if (password.size() < kMinPasswordLength) {
			return send_error(res, 422, "WeakPassword", "password must be at least 8 characters");
		}
		try {
			const auto id = store.create_user(email, hash_password(password, config.fast_kdf), name.value_or(""));
			send_json(res, 201, {{"id", id}, {"email", email}});
		} catch (const DuplicateEmail&) {
			send_error(res, 409, "DuplicateEmail", "an account with this email already exists");
		}
	}

	void on_login(const httplib::Request& req, httplib::Response& res) {
		const auto body = parse_body(req, res);
		if (!body) {
			return;
		}
		const auto email = normalize_email(string_field(*body, "email").value_or(""));
		const auto password = string_field(*body, "password").value_or("");
		const auto user = email.empty() ? std::nullopt : store.find_user_by_email(email);
		// Unknown accounts still pay for one verification so timing matches.
		const bool ok = verify_password(user ? user->password_hash : dummy_hash, password) && user.has_value();
		if (!ok) {
			return send_error(res, 401, "InvalidCredentials", "invalid email or password");
		}
		const auto token = new_token();
		const auto expires = unix_now() + config.token_ttl.count();
		store.insert_token(token_digest(token), user->id, expires);
		send_json(res, 200, {{"token", token}, {"token_type", "Bearer"}, {"expires_in", config.token_ttl.count()}});
	}

	void on_series(const httplib::Request& req, httplib::Response& res) {
		if (!authenticate(req, res)) {
			return;
		}
		const std::string commodity = req.matches[1];
		const auto frame = store.get_series(commodity);
		if (!frame) {
			return send_error(res, 404, "UnknownCommodity", "no data for commodity '" + commodity + "'");
		}
		std::optional<core::Date> from, to;
		try {
			if (req.has_param("from")) {
				from = core::parse_date(req.get_param_value("from"));
			}
			if (req.has_param("to")) {
				to = core::parse_date(req.get_param_value("to"));
			}
		} catch (const Error& e) {
			return send_error(res, 422, "InvalidDate", e.what());
		}
		json points = json::array();
		for (std::size_t i = 0; i < frame->rows(); ++i) {
			const auto date = frame->timestamps()[i];
			if ((from && date < *from) || (to && date > *to)) {
				continue;
			}
			json p{{"date", core::format_date(date)}};
			for (std::size_t c = 0; c < frame->column_count(); ++c) {
				p[frame->column_name(c)] = cell_json(frame->cells(c)[i]);
			}
			points.push_back(std::move(p));
		}
		std::vector<std::string> columns;
		for (std::size_t c = 0; c < frame->column_count(); ++c) {
			columns.push_back(frame->column_name(c));
		}
		send_json(res, 200, {{"commodity", commodity}, {"columns", columns}, {"points", points}});
	}

	void on_download(const httplib::Request& req, httplib::Response& res) {
		if (!authenticate(req, res)) {
			return;
		}
		const std::string commodity = req.matches[1];
		const auto frame = store.get_series(commodity);
		if (!frame) {
			return send_error(res, 404, "UnknownCommodity", "no data for commodity '" + commodity + "'");
		}
		res.status = 200;
		res.set_header("Content-Disposition", "attachment; filename=\"" + commodity + ".csv\"");
		res.set_content(ingest::to_csv(commodity, *frame), "text/csv");
	}

	void on_forecast(const httplib::Request& req, httplib::Response& res) {
		if (!authenticate(req, res)) {
			return;
		}
		const auto body = parse_body(req, res);
		if (!body) {
			return;
		}
		const auto horizon_it = body->find("horizon_weeks");
		if (horizon_it == body->end() || !horizon_it->is_number_integer() || horizon_it->get<std::int64_t>() < 1 ||
		    horizon_it->get<std::int64_t>() > static_cast<std::int64_t>(kMaxHorizon)) {
			return send_error(res, 422, "HorizonOutOfRange", "horizon_weeks must be an integer from 1 to 52");
		}
		const auto horizon = horizon_it->get<std::size_t>();
		engine::Mode mode = engine::Mode::Univariate;
		try {
			mode = engine::parse_mode(string_field(*body, "mode").value_or("univariate"));
		} catch (const Error&) {
			return send_error(res, 422, "InvalidMode", "mode must be univariate or multivariate");
		}
		const auto commodity = string_field(*body, "commodity").value_or("");
		const auto frame = store.get_series(commodity);
		if (!frame) {
			return send_error(res, 404, "UnknownCommodity", "no data for commodity '" + commodity + "'");
		}
		try {
			engine::select_columns(*frame, mode);
		} catch (const Error& e) {
			return send_error(res, 422, "MissingColumns", e.what());
		}
		const std::string mode_name(engine::to_string(mode));
		const auto fp = engine::fingerprint(commodity, *frame);
		if (const auto cached = store.get_forecast(commodity, mode_name, fp)) {
			return send_json(res, 200, forecast_body(commodity, mode_name, horizon, *frame, *cached));
		}
		std::int64_t job_id = 0;
		if (const auto active = store.active_job(commodity, mode_name, fp)) {
			job_id = active->id;
		} else {
			job_id = store.create_job(commodity, mode_name, fp);
			enqueue(job_id);
		}
		send_json(res, 202, {{"code", "ModelNotReady"},
		                     {"message", "training started; poll the job or retry the forecast"},
		                     {"job_id", job_id}});
	}

	static json forecast_body(const std::string& commodity, const std::string& mode, std::size_t horizon,
	                          const core::FeatureFrame& frame, const CachedForecast& cached) {
		json history = json::array();
		for (std::size_t i = 0; i < frame.rows(); ++i) {
			history.push_back({{"date", core::format_date(frame.timestamps()[i])},
			                   {"price", cell_json(frame.cells(0)[i])},
			                   {"forecast", false}});
		}
		json points = json::array();
		const auto last = frame.timestamps().back();
		for (std::size_t k = 0; k < horizon && k < cached.values.size(); ++k) {
			const auto date = last + std::chrono::days(core::kDaysPerWeek * static_cast<int>(k + 1));
			points.push_back({{"date", core::format_date(date)}, {"price", cached.values[k]}, {"forecast", true}});
		}
		return {{"commodity", commodity},
		        {"mode", mode},
		        {"horizon_weeks", horizon},
		        {"model_family", cached.family},
		        {"generated_at", cached.generated_at},
		        {"artifact_id", cached.artifact_id},
		        {"history", history},
		        {"forecast", points}};
	}

	void on_job(const httplib::Request& req, httplib::Response& res) {
		if (!authenticate(req, res)) {
			return;
		}
		const auto job = store.get_job(std::stoll(req.matches[1]));
		if (!job) {
			return send_error(res, 404, "UnknownJob", "no such job");
		}
		send_json(res, 200,
		          {{"id", job->id},
		           {"commodity", job->commodity},
		           {"mode", job->mode},
		           {"status", to_string(job->status)},
		           {"error", job->error},
		           {"created_at", job->created_at},
		           {"finished_at", job->finished_at}});
	}

	void on_enquiry_post(const httplib::Request& req, httplib::Response& res) {
		const auto user = authenticate(req, res);
		if (!user) {
			return;
		}
		const auto body = parse_body(req, res);
		if (!body) {
			return;
		}
		const auto subject = string_field(*body, "subject").value_or("");
		const auto text = string_field(*body, "body").value_or("");
		if (text.find_first_not_of(" \t\r\n") == std::string::npos) {
			return send_error(res, 422, "EmptyBody", "enquiry body must not be empty");
		}
		send_json(res, 201, {{"id", store.add_enquiry(*user, subject, text)}});
	}

	void on_enquiry_get(const httplib::Request& req, httplib::Response& res) {
		const auto user = authenticate(req, res);
		if (!user) {
			return;
		}
		const auto enquiry = store.get_enquiry(std::stoll(req.matches[1]));
		if (!enquiry || enquiry->user_id != *user) {
			return send_error(res, 404, "UnknownEnquiry", "no such enquiry");
		}
		send_json(res, 200,
		          {{"id", enquiry->id},
		           {"subject", enquiry->subject},
		           {"body", enquiry->body},
		           {"created_at", enquiry->created_at}});
	}

	static json profile_json(const User& u) {
		return {{"id", u.id}, {"email", u.email}, {"display_name", u.display_name}, {"created_at", u.created_at}};
	}

	void on_profile_get(const httplib::Request& req, httplib::Response& res) {
		const auto user = authenticate(req, res);
		if (!user) {
			return;
		}
		send_json(res, 200, profile_json(*store.find_user(*user)));
	}

	void on_profile_patch(const httplib::Request& req, httplib::Response& res) {
		const auto user = authenticate(req, res);
		if (!user) {
			return;
		}
		const auto body = parse_body(req, res);
		if (!body) {
			return;
		}
		std::optional<std::string> email;
		if (const auto raw = string_field(*body, "email")) {
			email = normalize_email(*raw);
			if (email->empty()) {
				return send_error(res, 422, "InvalidEmail", "email address is not valid");
			}
		}
		try {
			store.update_user(*user, email, string_field(*body, "display_name"));
		} catch (const DuplicateEmail&) {
			return send_error(res, 409, "DuplicateEmail", "an account with this email already exists");
		}
		send_json(res, 200, profile_json(*store.find_user(*user)));
	}

	void enqueue(std::int64_t job_id) {
		{
			std::lock_guard lock(queue_mutex);
			queue.push_back(job_id);
		}
		queue_cv.notify_all();
	}

	void work() {
		for (;;) {
			std::int64_t job_id = 0;
			{
				std::unique_lock lock(queue_mutex);
				queue_cv.wait(lock, [this] { return stopping || !queue.empty(); });
				if (stopping) {
					return;
				}
				job_id = queue.front();
				queue.pop_front();
				busy = true;
			}
			run_job(job_id);
			{
				std::lock_guard lock(queue_mutex);
				busy = false;
			}
			queue_cv.notify_all();
		}
	}

	void run_job(std::int64_t job_id) {
		const auto job = store.get_job(job_id);
		if (!job) {
			return;
		}
		store.set_job_status(job_id, JobStatus::Running);
		try {
			const auto frame = store.get_series(job->commodity);
			if (!frame) {
				throw Error(ErrorCode::UnknownCommodity, job->commodity);
			}
			const auto mode = engine::parse_mode(job->mode);
			const auto final = engine::train_final({job->commodity, *frame}, mode, config.engine, kMaxHorizon);
			const auto& model = final.model;
			const auto& values = final.forecast;
			const auto& report = final.report;
			const auto fp = engine::fingerprint(job->commodity, *frame);
			engine::Artifact artifact{job->commodity, fp, model, utc_now(), {}};
			const auto id = artifacts.save(artifact);
			store.put_artifact(job->commodity, job->mode, fp, std::string(engine::to_string(report.winner->family)), id);
			store.put_forecast(job->commodity, job->mode, fp,
			                   {std::string(engine::to_string(report.winner->family)), utc_now(), id, values});
			store.set_job_status(job_id, JobStatus::Done);
		} catch (const std::exception& e) {
			store.set_job_status(job_id, JobStatus::Failed, e.what());
		}
	}
};

Service::Service(Config config) : impl_(std::make_unique<Impl>(std::move(config))) {}

Service::~Service() = default;

Store& Service::store() {
	return impl_->store;
}

const Config& Service::config() const {
	return impl_->config;
}

int Service::start(const std::string& host, int port) {
	int bound = port;
	if (port == 0) {
		bound = impl_->http.bind_to_any_port(host);
	} else if (!impl_->http.bind_to_port(host, port)) {
		bound = -1;
	}
	if (bound < 0) {
		throw Error(ErrorCode::IoError, "cannot bind " + host + ":" + std::to_string(port));
	}
	impl_->server_thread = std::thread([this] { impl_->http.listen_after_bind(); });
	impl_->http.wait_until_ready();
	return bound;
}

void Service::run(const std::string& host, int port) {
	if (!impl_->http.bind_to_port(host, port)) {
		throw Error(ErrorCode::IoError, "cannot bind " + host + ":" + std::to_string(port));
	}
	impl_->http.listen_after_bind();
}

void Service::stop() {
	impl_->http.stop();
}

void Service::wait_idle() {
	std::unique_lock lock(impl_->queue_mutex);
	impl_->queue_cv.wait(lock, [this] { return impl_->queue.empty() && !impl_->busy; });
}

} // namespace agri::service
