#pragma once

#include <stdexcept>
#include <string>

namespace nevae {

// Base class for everything thrown by this library.
class Error : public std::runtime_error {
public:
    explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

// Operand shapes do not conform (messages name both shapes).
class ShapeError : public Error {
public:
    explicit ShapeError(const std::string& msg) : Error(msg) {}
};

// Domain violations: log of non-positive values, non-finite op results.
class ValueError : public Error {
public:
    explicit ValueError(const std::string& msg) : Error(msg) {}
};

// File ingestion / serialization failures.
class IoError : public Error {
public:
    explicit IoError(const std::string& msg) : Error(msg) {}
};

class BadMagicError : public IoError {
public:
    explicit BadMagicError(const std::string& msg) : IoError(msg) {}
};

class TruncatedFileError : public IoError {
public:
    explicit TruncatedFileError(const std::string& msg) : IoError(msg) {}
};

class DimensionOverflowError : public IoError {
public:
    explicit DimensionOverflowError(const std::string& msg) : IoError(msg) {}
};

// Bad run configuration (CLI maps this to exit code 2).
class ConfigError : public Error {
public:
    explicit ConfigError(const std::string& msg) : Error(msg) {}
};

// Non-finite loss or other mid-run failure, with run position in the message.
class TrainingError : public Error {
public:
    explicit TrainingError(const std::string& msg) : Error(msg) {}
};

}  // namespace nevae
