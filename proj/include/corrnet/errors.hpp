#ifndef CORRNET_ERRORS_HPP_
#define CORRNET_ERRORS_HPP_

#include <stdexcept>
#include <string>

namespace corrnet {

// Base for everything thrown by this library.
class Error : public std::runtime_error {
 public:
    explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

// Domain-side failures (CLI exit code 1).
class DomainError : public Error {
 public:
    using Error::Error;
};

class DimensionError : public DomainError {
 public:
    using DomainError::DomainError;
};

class IndexError : public DomainError {
 public:
    using DomainError::DomainError;
};

class ConfigError : public DomainError {
 public:
    using DomainError::DomainError;
};

class DataError : public DomainError {
 public:
    using DomainError::DomainError;
};

class MetricError : public DomainError {
 public:
    using DomainError::DomainError;
};

// I/O-side failures (CLI exit code 2).
class IoError : public Error {
 public:
    using Error::Error;
};

class ParseError : public IoError {
 public:
    using IoError::IoError;
};

}  // namespace corrnet

#endif  // CORRNET_ERRORS_HPP_
