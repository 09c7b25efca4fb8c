#pragma once

#include <stdexcept>
#include <string>

namespace dendsom {

/// Base class for every error raised by the library. `kind()` is a short
/// machine-readable tag used by the CLI's JSON error output.
class Error : public std::runtime_error {
public:
    Error(std::string kind, const std::string& what)
        : std::runtime_error(what), kind_(std::move(kind)) {}

    const std::string& kind() const noexcept { return kind_; }

private:
    std::string kind_;
};

class DimensionError : public Error {
public:
    explicit DimensionError(const std::string& what) : Error("dimension_mismatch", what) {}
};

class InvalidArgument : public Error {
public:
    explicit InvalidArgument(const std::string& what) : Error("invalid_argument", what) {}
};

class NumericError : public Error {
public:
    explicit NumericError(const std::string& what) : Error("non_finite", what) {}
};

class UntrainedModel : public Error {
public:
    explicit UntrainedModel(const std::string& what) : Error("untrained_model", what) {}
};

class IoError : public Error {
public:
    explicit IoError(const std::string& what) : Error("io_error", what) {}
};

class MagicMismatch : public Error {
public:
    explicit MagicMismatch(const std::string& what) : Error("magic_mismatch", what) {}
};

class TruncatedFile : public Error {
public:
    explicit TruncatedFile(const std::string& what) : Error("truncated_file", what) {}
};

class CountMismatch : public Error {
public:
    explicit CountMismatch(const std::string& what) : Error("count_mismatch", what) {}
};

class BadRecordSize : public Error {
public:
    explicit BadRecordSize(const std::string& what) : Error("bad_record_size", what) {}
};

class ChecksumMismatch : public Error {
public:
    explicit ChecksumMismatch(const std::string& what) : Error("checksum_mismatch", what) {}
};

class ConfigError : public Error {
public:
    explicit ConfigError(const std::string& what) : Error("config_error", what) {}
};

}  // namespace dendsom
