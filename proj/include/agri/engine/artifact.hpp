#pragma once

#include "agri/engine/engine.hpp"

#include <filesystem>
#include <memory>
#include <string>

namespace agri::engine {

inline constexpr std::string_view kArtifactFormat = "agri-artifact";
inline constexpr int kArtifactVersion = 1;

/// Lower-case hex SHA-256.
std::string sha256_hex(std::string_view bytes);
/// Content hash of a commodity's frame in the CSV schema.
std::string fingerprint(std::string_view commodity, const core::FeatureFrame& frame);

struct Artifact {
	std::string commodity;
	std::string fingerprint;
	std::shared_ptr<const TrainedModel> model;
	std::string created_at;
	/// Filled by to_document/load.
	std::string content_hash;
};

/// Self-describing document: format, version, spec, commodity, fingerprint,
/// created_at, model and content_hash (SHA-256 of the document without it).
nlohmann::json to_document(const Artifact& artifact);
/// Throws ErrorCode::VersionMismatch or ErrorCode::CorruptArtifact.
Artifact from_document(const nlohmann::json& doc);

std::string serialize(const Artifact& artifact);
Artifact deserialize(std::string_view text);

/// Content-addressed files under <root>/artifacts, named by content hash.
class ArtifactStore {
public:
	explicit ArtifactStore(std::filesystem::path root);

	/// Returns the artifact id.
	std::string save(const Artifact& artifact) const;
	/// Throws ErrorCode::IoError, ErrorCode::CorruptArtifact or ErrorCode::VersionMismatch.
	Artifact load(std::string_view id) const;
	std::filesystem::path path_of(std::string_view id) const;

private:
	std::filesystem::path dir_;
};

} // namespace agri::engine
