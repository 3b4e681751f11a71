#pragma once

#include <stdexcept>
#include <string>

namespace btdetect {

// Base class for all errors raised by this library.
class Error : public std::runtime_error {
public:
    explicit Error(const std::string& what) : std::runtime_error(what) {}
};

// Bad arguments, violated preconditions, unknown names, invalid config.
class ConfigError : public Error {
public:
    using Error::Error;
};

// Invalid n-gram / BLEU order (n outside the supported range).
class InvalidOrderError : public ConfigError {
public:
    using ConfigError::ConfigError;
};

// Filesystem and stream failures.
class IoError : public Error {
public:
    using Error::Error;
};

// Malformed, corrupt, or version-mismatched serialized data.
class FormatError : public Error {
public:
    using Error::Error;
};

// Feature schema of the input does not match the model's.
class SchemaError : public FormatError {
public:
    using FormatError::FormatError;
};

// A translation backend call failed. `leg` is "forward" or "backward"
// when raised inside a back-translation round trip, empty otherwise.
class TranslationError : public Error {
public:
    TranslationError(const std::string& what, std::string leg = "")
        : Error(what), leg_(std::move(leg)) {}

    const std::string& leg() const { return leg_; }

private:
    std::string leg_;
};

// Backend kept failing after the configured retries.
class BackendUnreachableError : public TranslationError {
public:
    using TranslationError::TranslationError;
};

// Backend reported an exhausted quota (HTTP 429).
class QuotaExceededError : public TranslationError {
public:
    using TranslationError::TranslationError;
};

// Replay backend was asked for a translation that is not in the cache.
class ReplayMissError : public TranslationError {
public:
    using TranslationError::TranslationError;
};

// Classifier training could not start or did not converge.
class TrainingError : public Error {
public:
    using Error::Error;
};

}  // namespace btdetect
