#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace agri {

enum class ErrorCode {
	TooShort,
	ConstantColumn,
	UnknownColumn,
	AnchorMismatch,
	LengthMismatch,
	Empty,
	MissingValue,
	ParseError,
	UnknownCommodity,
	EmptyFile,
	AllMissingColumn,
	InvalidSpec,
	SingularRegression,
	ConstantSeries,
	NumericalBreakdown,
	NoStationaryTransform,
	NonConvergence,
	DegenerateSeries,
	DegenerateInput,
	DimensionMismatch,
	SingularSystem,
	EmptyData,
	NonFiniteLoss,
	ShapeMismatch,
	HorizonTooLarge,
	InvalidArgument,
	GridExhausted,
	EmptyReport,
	CorruptArtifact,
	VersionMismatch,
	IoError,
};

std::string_view to_string(ErrorCode code);

/// Single exception type for the library. The code drives CLI exit statuses
/// and HTTP error mapping; the message is for humans.
class Error : public std::runtime_error {
public:
	Error(ErrorCode code, const std::string& message)
	    : std::runtime_error(std::string(to_string(code)) + ": " + message), code_(code) {}

	ErrorCode code() const noexcept {
		return code_;
	}

private:
	ErrorCode code_;
};

} // namespace agri
