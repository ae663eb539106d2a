#include "agri/error.hpp"

namespace agri {

std::string_view to_string(ErrorCode code) {
	switch (code) {
	case ErrorCode::TooShort: return "TooShort";
	case ErrorCode::ConstantColumn: return "ConstantColumn";
	case ErrorCode::UnknownColumn: return "UnknownColumn";
	case ErrorCode::AnchorMismatch: return "AnchorMismatch";
	case ErrorCode::LengthMismatch: return "LengthMismatch";
	case ErrorCode::Empty: return "Empty";
	case ErrorCode::MissingValue: return "MissingValue";
	case ErrorCode::ParseError: return "ParseError";
	case ErrorCode::UnknownCommodity: return "UnknownCommodity";
	case ErrorCode::EmptyFile: return "EmptyFile";
	case ErrorCode::AllMissingColumn: return "AllMissingColumn";
	case ErrorCode::InvalidSpec: return "InvalidSpec";
	case ErrorCode::SingularRegression: return "SingularRegression";
	case ErrorCode::ConstantSeries: return "ConstantSeries";
	case ErrorCode::NumericalBreakdown: return "NumericalBreakdown";
	case ErrorCode::NoStationaryTransform: return "NoStationaryTransform";
	case ErrorCode::NonConvergence: return "NonConvergence";
	case ErrorCode::DegenerateSeries: return "DegenerateSeries";
	case ErrorCode::DegenerateInput: return "DegenerateInput";
	case ErrorCode::DimensionMismatch: return "DimensionMismatch";
	case ErrorCode::SingularSystem: return "SingularSystem";
	case ErrorCode::EmptyData: return "EmptyData";
	case ErrorCode::NonFiniteLoss: return "NonFiniteLoss";
	case ErrorCode::ShapeMismatch: return "ShapeMismatch";
	case ErrorCode::HorizonTooLarge: return "HorizonTooLarge";
	case ErrorCode::InvalidArgument: return "InvalidArgument";
	case ErrorCode::GridExhausted: return "GridExhausted";
	case ErrorCode::EmptyReport: return "EmptyReport";
	case ErrorCode::CorruptArtifact: return "CorruptArtifact";
	case ErrorCode::VersionMismatch: return "VersionMismatch";
	case ErrorCode::IoError: return "IoError";
	}
	return "Unknown";
}

} // namespace agri
