#include "stdeep/error.hpp"

namespace stdeep {

std::string_view error_kind_name(ErrorKind kind) {
    switch (kind) {
        case ErrorKind::EmptyTrack: return "EmptyTrack";
        case ErrorKind::ZeroMedian: return "ZeroMedian";
        case ErrorKind::MultipleFaces: return "MultipleFaces";
        case ErrorKind::UnknownMethod: return "UnknownMethod";
        case ErrorKind::BadSpec: return "BadSpec";
        case ErrorKind::ShapeMismatch: return "ShapeMismatch";
        case ErrorKind::BadManifest: return "BadManifest";
        case ErrorKind::Diverged: return "Diverged";
        case ErrorKind::NoFrames: return "NoFrames";
        case ErrorKind::MissingScores: return "MissingScores";
        case ErrorKind::BadN: return "BadN";
        case ErrorKind::TooFewRows: return "TooFewRows";
        case ErrorKind::NoConvBlock: return "NoConvBlock";
        case ErrorKind::BadArchive: return "BadArchive";
        case ErrorKind::InvalidArgument: return "InvalidArgument";
        case ErrorKind::Io: return "Io";
    }
    return "Unknown";
}

Error::Error(ErrorKind kind, const std::string& message)
    : std::runtime_error(std::string(error_kind_name(kind)) + ": " + message), kind_(kind) {}

}  // namespace stdeep
