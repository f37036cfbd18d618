#pragma once

#include <stdexcept>
#include <string>

namespace kronsolve {

/// Base class for all library errors.
class Error : public std::runtime_error {
public:
    explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

/// Incompatible matrix shapes.
class DimensionError : public Error {
public:
    using Error::Error;
};

/// Invalid argument values (bad rank, empty factor list, ...).
class ArgumentError : public Error {
public:
    using Error::Error;
};

/// File could not be parsed; carries the offending line number.
class ParseError : public Error {
public:
    ParseError(const std::string& msg, long line)
        : Error(msg + " (line " + std::to_string(line) + ")"), line_(line) {}
    long line() const { return line_; }

private:
    long line_;
};

/// Requested dimensions exceed what the format or memory model supports.
class CapacityError : public Error {
public:
    using Error::Error;
};

/// An iterative factorization failed to converge.
class FactorizationError : public Error {
public:
    using Error::Error;
};

/// A coefficient matrix of a direct solve is numerically singular.
class SingularCoefficientError : public Error {
public:
    using Error::Error;
};

/// Sylvester spectra clash: the equation has no unique solution.
class NoUniqueSolutionError : public Error {
public:
    using Error::Error;
};

/// The two-sided reduction is too ill-conditioned to trust.
class ReductionConditioningError : public Error {
public:
    using Error::Error;
};

/// ALS factor matrices became linearly dependent.
class DependentFactorsError : public Error {
public:
    using Error::Error;
};

/// Preconditioner application is not supported for this Kronecker rank.
class UnsupportedRankError : public Error {
public:
    using Error::Error;
};

/// Materialization refused: problem exceeds the size cap.
class SizeGuardError : public Error {
public:
    using Error::Error;
};

/// Diagnostic requires structure (e.g. SPD) the input does not have.
class DiagnosticInapplicableError : public Error {
public:
    using Error::Error;
};

/// Bandwidth audit requires banded sparse data.
class AuditInapplicableError : public Error {
public:
    using Error::Error;
};

/// I/O failure outside parsing (missing file, unwritable directory).
class IoError : public Error {
public:
    using Error::Error;
};

/// Run configuration is invalid.
class ConfigError : public Error {
public:
    using Error::Error;
};

}  // namespace kronsolve
