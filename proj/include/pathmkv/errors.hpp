#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

namespace pathmkv {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Inconsistent inputs: dimension mismatch, grid mismatch, invalid model spec.
class ConfigError : public Error {
public:
    using Error::Error;
};

/// Argument outside the mathematical domain of an operation.
class DomainError : public Error {
public:
    using Error::Error;
};

/// Problem size exceeds what an exact routine is allowed to handle.
class CapacityError : public Error {
public:
    using Error::Error;
};

/// A contract between caller-supplied callables and the library was broken.
class ContractError : public Error {
public:
    using Error::Error;
};

/// Derivative operation requested on a functional that does not support it.
class UnsupportedFunctional : public Error {
public:
    using Error::Error;
};

/// Non-finite state produced during time stepping.
class BlowupError : public Error {
public:
    BlowupError(const std::string& what, std::size_t step, std::size_t particle)
        : Error(what), step_(step), particle_(particle) {}

    std::size_t step() const noexcept { return step_; }
    std::size_t particle() const noexcept { return particle_; }

private:
    std::size_t step_;
    std::size_t particle_;
};

/// Fixed-point iteration failed to reach tolerance.
class ConvergenceError : public Error {
public:
    ConvergenceError(const std::string& what, std::vector<double> gaps)
        : Error(what), gaps_(std::move(gaps)) {}

    const std::vector<double>& gap_history() const noexcept { return gaps_; }

private:
    std::vector<double> gaps_;
};

} // namespace pathmkv
