#pragma once

#include <stdexcept>
#include <string>

namespace altrade {

// Bad caller input: dimension mismatch, empty lists, non-finite data.
class InputError : public std::invalid_argument {
public:
    explicit InputError(const std::string& what) : std::invalid_argument(what) {}
};

// Factorization failed even after jitter escalation.
class NumericalError : public std::runtime_error {
public:
    explicit NumericalError(const std::string& what) : std::runtime_error(what) {}
};

// Invalid experiment / strategy / committee configuration.
class ConfigError : public std::invalid_argument {
public:
    explicit ConfigError(const std::string& what) : std::invalid_argument(what) {}
};

// Tabular data does not match its declared schema.
class SchemaError : public std::runtime_error {
public:
    explicit SchemaError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace altrade
