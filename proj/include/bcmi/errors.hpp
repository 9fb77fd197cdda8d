#pragma once

#include <stdexcept>
#include <string>

namespace bcmi {

// Base for every error the library raises. The CLI maps subclasses to exit codes.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Invalid input: out-of-range base, non-normalized distribution, rational alpha, ...
class DomainError : public Error {
public:
    using Error::Error;
};

// Fewer usable samples than a computation needs.
class InsufficientDataError : public DomainError {
public:
    using DomainError::DomainError;
};

// The digit budget cannot certify the requested result; rerun with more digits.
class PrecisionError : public Error {
public:
    using Error::Error;
};

// An orbit point or significand lies within the safety margin of a cylinder boundary.
class AmbiguityError : public PrecisionError {
public:
    AmbiguityError(const std::string& what, int candidate)
        : PrecisionError(what), candidate_(candidate) {}

    int candidate() const noexcept { return candidate_; }

private:
    int candidate_;
};

// Iterative numerics failed (eigensolver did not converge, ...).
class NumericError : public Error {
public:
    using Error::Error;
};

// Survey output file is damaged and cannot be resumed without --force.
class CorruptOutputError : public Error {
public:
    using Error::Error;
};

} // namespace bcmi
