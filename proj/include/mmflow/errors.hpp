#pragma once

#include <stdexcept>
#include <string>

namespace mmflow {

// Base of every error raised by the library. The CLI maps these onto exit codes.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Argument outside an operation's domain: negative flow, size mismatch, empty vector.
class DomainError : public Error {
public:
    using Error::Error;
};

// Malformed or inconsistent input data (unknown ids, wrong vector lengths, bad JSON).
class SchemaError : public Error {
public:
    using Error::Error;
};

class InvalidHyperpath : public Error {
public:
    using Error::Error;
};

class NumericalFailure : public Error {
public:
    NumericalFailure(const std::string& what, int iteration)
        : Error(what + " (iteration " + std::to_string(iteration) + ")"), iteration_(iteration) {}
    int iteration() const noexcept { return iteration_; }

private:
    int iteration_;
};

class Unsupported : public Error {
public:
    using Error::Error;
};

// Bargaining premise violated: cooperation does not produce a surplus.
class NoSurplus : public Error {
public:
    using Error::Error;
};

class Unreachable : public Error {
public:
    using Error::Error;
};

}  // namespace mmflow
