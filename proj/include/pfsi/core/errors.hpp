#pragma once

#include <stdexcept>
#include <string>

namespace pfsi {

/// Base class for all solver failures raised by this library.
struct SolverError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct DisplacementExceedsTube : SolverError {
    using SolverError::SolverError;
};

struct NonInvertible : SolverError {
    using SolverError::SolverError;
};

struct OutOfDomain : SolverError {
    using SolverError::SolverError;
};

struct SingularJacobian : SolverError {
    using SolverError::SolverError;
};

/// Raised when the structure displacement reaches the configured safety
/// margin of the tubular neighbourhood. Signals a clean stop, not a bug.
struct TubeBreach : SolverError {
    using SolverError::SolverError;
};

struct LinearSolveFailure : SolverError {
    using SolverError::SolverError;
};

struct CFLViolation : SolverError {
    using SolverError::SolverError;
};

struct ProjectionSolveFailure : SolverError {
    using SolverError::SolverError;
};

struct NegativeDensity : SolverError {
    using SolverError::SolverError;
};

struct SymmetryLoss : SolverError {
    using SolverError::SolverError;
};

struct TruncationTooSmall : SolverError {
    using SolverError::SolverError;
};

struct NoContraction : SolverError {
    using SolverError::SolverError;
};

struct InadmissibleExponents : SolverError {
    using SolverError::SolverError;
};

/// Configuration file syntax error with source location.
struct ParseError : std::runtime_error {
    ParseError(const std::string& msg, int line, int col)
        : std::runtime_error("parse error at line " + std::to_string(line) + ", col "
                             + std::to_string(col) + ": " + msg),
          line(line), col(col) {}
    int line;
    int col;
};

/// Configuration value rejected by validation; names the offending field.
struct ValidationError : std::runtime_error {
    explicit ValidationError(const std::string& field, const std::string& constraint)
        : std::runtime_error("invalid config: field '" + field + "': " + constraint),
          field(field) {}
    std::string field;
};

struct CorruptSnapshot : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct VersionMismatch : std::runtime_error {
    using std::runtime_error::runtime_error;
};

} // namespace pfsi
