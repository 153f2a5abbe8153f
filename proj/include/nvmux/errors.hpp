#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace nvmux {

/// Base class for every recoverable error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class InvalidArgument : public Error {
public:
    using Error::Error;
};

/// A field was requested at a point outside the model's domain (e.g. z <= 0).
class OutOfDomain : public Error {
public:
    using Error::Error;
};

/// The projection of the shared field onto the first sensor axis vanishes.
class DegenerateProjection : public Error {
public:
    using Error::Error;
};

/// Both quadratures of a phase estimate are at the noise floor.
class IndeterminatePhase : public Error {
public:
    using Error::Error;
};

/// A readout matrix lacks a combination the estimator needs.
class IncompleteMatrix : public Error {
public:
    using Error::Error;
};

class InvalidContrast : public Error {
public:
    using Error::Error;
};

class ScheduleSize : public Error {
public:
    using Error::Error;
};

/// Malformed configuration or input file. `line` is 1-based, 0 when unknown.
class ConfigError : public Error {
public:
    ConfigError(const std::string& where, std::size_t line, const std::string& what)
        : Error(line ? where + ":" + std::to_string(line) + ": " + what : where + ": " + what),
          line_(line) {}

    std::size_t line() const noexcept { return line_; }

private:
    std::size_t line_;
};

}  // namespace nvmux
