#pragma once

#include <stdexcept>
#include <string>

namespace copsl {

// Base for every error raised by the library. The subclasses map onto the
// error categories that callers (mainly the CLI) distinguish.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Bad architecture, bad config value, unknown names.
class ConfigError : public Error {
public:
    using Error::Error;
};

// Caller handed in data that violates a documented precondition.
class InputError : public Error {
public:
    using Error::Error;
};

// Broken internal invariant (shape mismatch between cooperating modules).
class InternalError : public Error {
public:
    using Error::Error;
};

// Checkpoint / file decoding failures.
class LoadError : public Error {
public:
    using Error::Error;
};

// Operation not available for this problem (e.g. no closed-form front).
class UnsupportedError : public Error {
public:
    using Error::Error;
};

// Training produced a NaN/inf loss.
class TrainingError : public Error {
public:
    using Error::Error;
};

} // namespace copsl
