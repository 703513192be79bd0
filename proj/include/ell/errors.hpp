#ifndef ELL_ERRORS_HPP
#define ELL_ERRORS_HPP

#include <stdexcept>
#include <string>

namespace ell {

struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Mismatched truncation windows, bad denominators, etc.
struct ParameterError : Error {
    using Error::Error;
};
struct OutOfWindowError : Error {
    using Error::Error;
};
// Requested coefficient lies past the region where the series is known exactly.
struct PrecisionError : Error {
    using Error::Error;
};
struct InversionError : Error {
    using Error::Error;
};
// A pole of a theta quotient was hit.
struct SingularityError : Error {
    using Error::Error;
};
// Pair coefficient at or past the log-canonical threshold.
struct KawamataError : Error {
    using Error::Error;
};
struct DomainError : Error {
    using Error::Error;
};
struct ParseError : Error {
    using Error::Error;
};
struct ModelError : Error {
    using Error::Error;
};

}  // namespace ell

#endif
