#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace etc {

// Base of every error raised by the library. The CLI maps subclasses onto
// process exit codes.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class InvalidInput : public Error {
public:
    using Error::Error;
};

class DimensionMismatch : public Error {
public:
    using Error::Error;
};

class NumericalFailure : public Error {
public:
    using Error::Error;
};

class SingularMatrix : public NumericalFailure {
public:
    using NumericalFailure::NumericalFailure;
};

class NotPositiveDefinite : public Error {
public:
    NotPositiveDefinite(std::size_t pivot, const std::string& what)
        : Error(what), pivot_(pivot) {}

    /// Zero-based row at which the factorization broke down.
    [[nodiscard]] std::size_t pivot() const noexcept { return pivot_; }

private:
    std::size_t pivot_;
};

class MissingVariable : public Error {
public:
    using Error::Error;
};

class Infeasible : public Error {
public:
    using Error::Error;
};

class SingularFactor : public NumericalFailure {
public:
    using NumericalFailure::NumericalFailure;
};

class VerificationFailed : public Error {
public:
    VerificationFailed(std::string item, const std::string& what)
        : Error(what), item_(std::move(item)) {}

    /// Name of the violated certificate item (e.g. "lmi13", "p_min_eig").
    [[nodiscard]] const std::string& item() const noexcept { return item_; }

private:
    std::string item_;
};

class ConfigMismatch : public Error {
public:
    using Error::Error;
};

class EmptyInput : public Error {
public:
    using Error::Error;
};

} // namespace etc
