#pragma once

#include <stdexcept>
#include <string>

namespace pairlink {

// Bad or inconsistent configuration (CLI exit code 2).
class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Filesystem / stream failures (CLI exit code 3).
class IoError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Malformed tag file. Message carries the byte offset (binary) or line (CSV).
class FormatError : public IoError {
public:
    using IoError::IoError;
};

// Analysis produced a degenerate result, e.g. undefined visibility
// (CLI exit code 4).
class AnalysisError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class UndefinedVisibilityError : public AnalysisError {
public:
    using AnalysisError::AnalysisError;
};

// Temperature outside the calibrated tuning range of the source.
class OutOfCalibrationError : public std::domain_error {
public:
    using std::domain_error::domain_error;
};

// Two link-budget systems whose rate curves never intersect in the bracket.
class NoCrossoverError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

} // namespace pairlink
