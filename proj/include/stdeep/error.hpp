#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace stdeep {

enum class ErrorKind {
    EmptyTrack,
    ZeroMedian,
    MultipleFaces,
    UnknownMethod,
    BadSpec,
    ShapeMismatch,
    BadManifest,
    Diverged,
    NoFrames,
    MissingScores,
    BadN,
    TooFewRows,
    NoConvBlock,
    BadArchive,
    InvalidArgument,
    Io,
};

std::string_view error_kind_name(ErrorKind kind);

/**
 * Single exception type for the library; the kind distinguishes the
 * contract that was violated so callers (and the python bindings) can
 * dispatch on it.
 */
class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& message);

    ErrorKind kind() const noexcept { return kind_; }

private:
    ErrorKind kind_;
};

}  // namespace stdeep
