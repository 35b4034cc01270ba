#pragma once

#include <stdexcept>
#include <string>

namespace mtdg {

// Error classes map one-to-one onto the machine-parsable classes the CLI
// prints on failure (see tools/).

class DomainError : public std::runtime_error {
public:
    explicit DomainError(const std::string& msg) : std::runtime_error(msg) {}
};

class ResourceError : public std::runtime_error {
public:
    explicit ResourceError(const std::string& msg) : std::runtime_error(msg) {}
};

class NumericError : public std::runtime_error {
public:
    explicit NumericError(const std::string& msg) : std::runtime_error(msg) {}
};

class OptimizationError : public std::runtime_error {
public:
    explicit OptimizationError(const std::string& msg) : std::runtime_error(msg) {}
};

class IdentifiabilityError : public std::runtime_error {
public:
    explicit IdentifiabilityError(const std::string& msg) : std::runtime_error(msg) {}
};

class ParseError : public std::runtime_error {
public:
    explicit ParseError(const std::string& msg) : std::runtime_error(msg) {}
};

class IoError : public std::runtime_error {
public:
    explicit IoError(const std::string& msg) : std::runtime_error(msg) {}
};

class ConfigError : public std::runtime_error {
public:
    explicit ConfigError(const std::string& msg) : std::runtime_error(msg) {}
};

}  // namespace mtdg
