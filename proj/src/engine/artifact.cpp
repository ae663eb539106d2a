#include "agri/engine/artifact.hpp"

#include "agri/error.hpp"

#include <sodium.h>

#include <fstream>
#include <sstream>

namespace agri::engine {

using nlohmann::json;

std::string sha256_hex(std::string_view bytes) {
	[[maybe_unused]] static const int ready = sodium_init();
	unsigned char digest[crypto_hash_sha256_BYTES];
	crypto_hash_sha256(digest, reinterpret_cast<const unsigned char*>(bytes.data()), bytes.size());
	char hex[2 * crypto_hash_sha256_BYTES + 1];
	sodium_bin2hex(hex, sizeof hex, digest, sizeof digest);
	return hex;
}

std::string fingerprint(std::string_view commodity, const core::FeatureFrame& frame) {
	return sha256_hex(ingest::to_csv(commodity, frame));
}

namespace {

json body(const Artifact& artifact) {
	if (!artifact.model) {
		throw Error(ErrorCode::InvalidArgument, "artifact has no model");
	}
	return {{"format", kArtifactFormat},
	        {"version", kArtifactVersion},
	        {"spec", spec_to_json(artifact.model->spec())},
	        {"commodity", artifact.commodity},
	        {"fingerprint", artifact.fingerprint},
	        {"created_at", artifact.created_at},
	        {"model", artifact.model->to_json()}};
}

} // namespace

json to_document(const Artifact& artifact) {
	json doc = body(artifact);
	doc["content_hash"] = sha256_hex(doc.dump());
	return doc;
}

Artifact from_document(const json& doc) {
	try {
		if (!doc.is_object() || doc.value("format", "") != kArtifactFormat) {
			throw Error(ErrorCode::CorruptArtifact, "not an artifact document");
		}
		const int version = doc.at("version").get<int>();
		if (version != kArtifactVersion) {
			throw Error(ErrorCode::VersionMismatch, "artifact version " + std::to_string(version) + ", expected " +
			                                            std::to_string(kArtifactVersion));
		}
		json stripped = doc;
		const auto stored = stripped.at("content_hash").get<std::string>();
		stripped.erase("content_hash");
		if (sha256_hex(stripped.dump()) != stored) {
			throw Error(ErrorCode::CorruptArtifact, "content hash mismatch");
		}
		Artifact out;
		const auto spec = spec_from_json(doc.at("spec"));
		out.model = model_from_json(spec, doc.at("model"));
		out.commodity = doc.at("commodity").get<std::string>();
		out.fingerprint = doc.at("fingerprint").get<std::string>();
		out.created_at = doc.at("created_at").get<std::string>();
		out.content_hash = stored;
		return out;
	} catch (const json::exception& e) {
		throw Error(ErrorCode::CorruptArtifact, std::string("malformed artifact: ") + e.what());
	}
}

std::string serialize(const Artifact& artifact) {
	return to_document(artifact).dump();
}

Artifact deserialize(std::string_view text) {
	json doc;
	try {
		doc = json::parse(text);
	} catch (const json::exception& e) {
		throw Error(ErrorCode::CorruptArtifact, std::string("unparseable artifact: ") + e.what());
	}
	return from_document(doc);
}

ArtifactStore::ArtifactStore(std::filesystem::path root) : dir_(std::move(root) / "artifacts") {
	std::error_code ec;
	std::filesystem::create_directories(dir_, ec);
	if (ec) {
		throw Error(ErrorCode::IoError, "cannot create " + dir_.string() + ": " + ec.message());
	}
}

std::filesystem::path ArtifactStore::path_of(std::string_view id) const {
	return dir_ / (std::string(id) + ".json");
}

std::string ArtifactStore::save(const Artifact& artifact) const {
	const auto doc = to_document(artifact);
	const auto id = doc.at("content_hash").get<std::string>();
	const auto target = path_of(id);
	const auto temp = dir_ / (id + ".tmp");
	{
		std::ofstream out(temp, std::ios::binary | std::ios::trunc);
		out << doc.dump();
		if (!out) {
			throw Error(ErrorCode::IoError, "cannot write " + temp.string());
		}
	}
	std::error_code ec;
	std::filesystem::rename(temp, target, ec);
	if (ec) {
		throw Error(ErrorCode::IoError, "cannot move artifact into place: " + ec.message());
	}
	return id;
}

Artifact ArtifactStore::load(std::string_view id) const {
	if (id.empty() || id.find_first_not_of("0123456789abcdef") != std::string_view::npos) {
		throw Error(ErrorCode::InvalidArgument, "artifact ids are lower-case hex");
	}
	std::ifstream in(path_of(id), std::ios::binary);
	if (!in) {
		throw Error(ErrorCode::IoError, "no artifact " + std::string(id));
	}
	std::ostringstream text;
	text << in.rdbuf();
	auto artifact = deserialize(text.str());
	if (artifact.content_hash != id) {
		throw Error(ErrorCode::CorruptArtifact, "artifact file name does not match its content hash");
	}
	return artifact;
}

} // namespace agri::engine
