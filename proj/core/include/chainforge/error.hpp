#pragma once

#include <stdexcept>
#include <string>

namespace chainforge {

// Base for every failure raised by the library. Subclasses let callers
// (and the CLI exit-code mapping) tell validation problems from runtime ones.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Bad input supplied by the user: config, flags, split specs, pack files.
class ValidationError : public Error {
public:
    using Error::Error;
};

// A stage was run before the stage that produces its inputs.
class DependencyError : public ValidationError {
public:
    using ValidationError::ValidationError;
};

class StructureError : public Error {
public:
    using Error::Error;
};

class IntegrityError : public Error {
public:
    using Error::Error;
};

class CapacityError : public ValidationError {
public:
    using ValidationError::ValidationError;
};

class SplitSpecError : public ValidationError {
public:
    using ValidationError::ValidationError;
};

class DomainError : public Error {
public:
    using Error::Error;
};

class DivergenceError : public Error {
public:
    using Error::Error;
};

class UndefinedScoreError : public Error {
public:
    using Error::Error;
};

class DegenerateInputError : public Error {
public:
    using Error::Error;
};

}  // namespace chainforge
