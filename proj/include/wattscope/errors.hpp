#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace wattscope {

// Base class for everything this library throws on purpose.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Malformed or internally inconsistent input data: bad CSV syntax, wrong
// units, out-of-order timestamps inside a file, counter values outside the
// declared wrap range at parse time. The CLI maps this to exit code 65.
class FormatError : public Error {
public:
    explicit FormatError(const std::string& message, std::string path = {}, std::size_t line = 0)
        : Error(path.empty() ? message
                             : path + (line ? ":" + std::to_string(line) : "") + ": " + message),
          path_(std::move(path)),
          line_(line) {}

    const std::string& path() const noexcept { return path_; }
    // 1-based; 0 means the error is not tied to a specific line.
    std::size_t line() const noexcept { return line_; }

private:
    std::string path_;
    std::size_t line_ = 0;
};

// Well-formed inputs that cannot be processed: empty analysis windows,
// inverted calibration profiles, correlations of constant series. The CLI
// maps this to exit code 2.
class DomainError : public Error {
public:
    using Error::Error;
};

// Requested window is ill-formed (t0 >= t1, or non-finite bounds).
class InvalidWindowError : public DomainError {
public:
    using DomainError::DomainError;
};

// Window is valid but the trace has no usable samples inside it.
class EmptyWindowError : public DomainError {
public:
    using DomainError::DomainError;
};

// Fewer readings than the operation fundamentally needs.
class InsufficientDataError : public DomainError {
public:
    using DomainError::DomainError;
};

// A cumulative counter moved by more than its wrap range between two
// readings, so the energy delta cannot be reconstructed.
class UnreliableCounterError : public DomainError {
public:
    using DomainError::DomainError;
};

// Calibration inputs contradict each other (e.g. busy floor below idle).
class InconsistencyError : public DomainError {
public:
    using DomainError::DomainError;
};

// A correlation statistic is undefined for the given data (constant input,
// or fewer than two pairs).
class UndefinedCorrelationError : public DomainError {
public:
    using DomainError::DomainError;
};

// No synchronization marker found when estimating a clock offset.
class NoMarkerError : public DomainError {
public:
    using DomainError::DomainError;
};

} // namespace wattscope
