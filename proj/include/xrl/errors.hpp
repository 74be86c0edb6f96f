#pragma once

#include <stdexcept>
#include <string>

namespace xrl {

/// Base class for every error raised by the toolkit. The CLI maps these to
/// exit status 1.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Missing or malformed columns/fields in an input artifact.
class SchemaError : public Error {
public:
    using Error::Error;
};

/// A cell or token that cannot be parsed. `position` is a row index for
/// tabular input and a character offset for query text.
class ParseError : public Error {
public:
    ParseError(const std::string& what, std::size_t position)
        : Error(what), position_(position) {}
    std::size_t position() const noexcept { return position_; }

private:
    std::size_t position_;
};

/// Replay data violating a structural invariant (duplicate keys, gaps).
class IntegrityError : public Error {
public:
    using Error::Error;
};

/// A SQL statement rejected by the whitelist validator.
class ValidationError : public Error {
public:
    using Error::Error;
};

/// A name (action, feature, level) that does not resolve against a schema.
class ResolutionError : public Error {
public:
    using Error::Error;
};

class InvalidActionError : public Error {
public:
    using Error::Error;
};

/// Input beyond a documented resource guard.
class ResourceError : public Error {
public:
    using Error::Error;
};

/// Q-learning produced non-finite values.
class TrainingError : public Error {
public:
    using Error::Error;
};

/// External endpoint unreachable or returned an unusable response.
class UnavailableError : public Error {
public:
    using Error::Error;
};

}  // namespace xrl
