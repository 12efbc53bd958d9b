#pragma once

#include <stdexcept>
#include <string>

namespace facepipe {

// Base class for all library errors.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Bad arguments to an operation (wrong image size, dimension mismatch, ...).
class InvalidInputError : public Error {
public:
    using Error::Error;
};

// Model container / execution problems. The parse-time subclasses below are
// deliberately distinct so callers can tell the corruption classes apart.
class ModelError : public Error {
public:
    using Error::Error;
};

class BadMagicError : public ModelError {
public:
    using ModelError::ModelError;
};

class TruncatedModelError : public ModelError {
public:
    using ModelError::ModelError;
};

class UnresolvedWeightError : public ModelError {
public:
    using ModelError::ModelError;
};

class ShapeError : public ModelError {
public:
    using ModelError::ModelError;
};

// All source points coincide, transform cannot be solved.
class DegenerateGeometryError : public Error {
public:
    using Error::Error;
};

// Lookup of an id that is not present (gallery remove, ...).
class NotFoundError : public Error {
public:
    using Error::Error;
};

// Configuration file / value validation failures.
class ConfigError : public Error {
public:
    using Error::Error;
};

} // namespace facepipe
