#pragma once

#include <stdexcept>

namespace melvq {

// Error taxonomy for the whole library. Everything derives from
// std::runtime_error so callers can catch coarsely or finely.
struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct DimensionError : Error { using Error::Error; };          // shape mismatch
struct ConfigError : Error { using Error::Error; };             // invalid configuration
struct UsageError : Error { using Error::Error; };              // caller misuse
struct NumericError : Error { using Error::Error; };            // NaN/Inf in a computation
struct ParseError : Error { using Error::Error; };              // malformed input file
struct UnsupportedFormatError : Error { using Error::Error; };  // known container, unknown encoding
struct EmptySignalError : Error { using Error::Error; };        // recording entirely below silence threshold
struct DegenerateInputError : Error { using Error::Error; };    // constant/singular data where spread is required
struct RangeError : Error { using Error::Error; };              // token or index out of range
struct ContextOverflowError : Error { using Error::Error; };    // sequence longer than model context
struct DependencyError : Error { using Error::Error; };         // missing stage prerequisite
struct StalenessError : Error { using Error::Error; };          // artifact digest mismatch on resume
struct IoError : Error { using Error::Error; };

}  // namespace melvq
