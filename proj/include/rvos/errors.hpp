#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace rvos {

/// Base class for every error raised by this library.
struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// geometry
struct EmptyMaskError : Error {
    using Error::Error;
};
struct OutOfBoundsError : Error {
    using Error::Error;
};
struct DimensionMismatchError : Error {
    using Error::Error;
};
struct MaskFormatError : Error {
    using Error::Error;
};

// answer codec
struct ParseError : Error {
    ParseError(const std::string& what, std::size_t offset)
        : Error(what + " (byte " + std::to_string(offset) + ")"), byte_offset(offset) {}
    std::size_t byte_offset;
};
struct LabelError : Error {
    using Error::Error;
};
struct BoxError : Error {
    using Error::Error;
};

// matching
struct NonFiniteCostError : Error {
    using Error::Error;
};

// difficulty
struct ScoreOutOfRangeError : Error {
    using Error::Error;
};
struct MissingDictError : Error {
    using Error::Error;
};
struct MissingKeyError : Error {
    using Error::Error;
};

// sampler
struct EmptyIntervalListError : Error {
    using Error::Error;
};
struct InvalidIntervalError : Error {
    using Error::Error;
};
struct EmptyPercentagesError : Error {
    using Error::Error;
};
struct PercentOutOfRangeError : Error {
    using Error::Error;
};

// metrics
struct LengthMismatchError : Error {
    using Error::Error;
};
struct EmptyListError : Error {
    using Error::Error;
};

// backends
struct BackendError : Error {
    enum class Kind { timeout, malformed, http_status };
    BackendError(Kind k, const std::string& what, int status = 0)
        : Error(what), kind(k), http_status(status) {}
    Kind kind;
    int http_status;
};
struct TraceExhaustedError : Error {
    using Error::Error;
};
struct NoCandidateError : Error {
    using Error::Error;
};
struct OutOfRangeError : Error {
    using Error::Error;
};

// dataset / pipeline
struct ManifestError : Error {
    using Error::Error;
};
struct MissingFrameError : Error {
    using Error::Error;
};
struct ConfigError : Error {
    using Error::Error;
};

}  // namespace rvos
