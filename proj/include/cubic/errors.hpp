#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace cubic {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class InvalidDimension : public Error {
public:
    using Error::Error;
};

class DimensionMismatch : public Error {
public:
    DimensionMismatch(std::size_t lhs, std::size_t rhs)
        : Error("dimension mismatch: " + std::to_string(lhs) + " vs " + std::to_string(rhs)) {}
};

class OutOfRange : public Error {
public:
    using Error::Error;
};

/// Raised when a vector is too close to zero to be normalized.
class DegenerateState : public Error {
public:
    using Error::Error;
};

/// Raised when an operation's precondition on its input is violated
/// (e.g. a non-Hermitian generator handed to expm_hermitian).
class ContractViolation : public Error {
public:
    using Error::Error;
};

/// The truncated Fock space is too small for the requested state; carries the
/// smallest dimension that would satisfy the tail-mass budget.
class TruncationTooSmall : public Error {
public:
    TruncationTooSmall(const std::string& what, std::size_t required_dim)
        : Error(what + " (minimum adequate dim: " + std::to_string(required_dim) + ")"),
          required_dim_(required_dim) {}

    [[nodiscard]] std::size_t required_dim() const noexcept { return required_dim_; }

private:
    std::size_t required_dim_;
};

class ConfigError : public Error {
public:
    using Error::Error;
};

class SamplingError : public Error {
public:
    using Error::Error;
};

}  // namespace cubic
