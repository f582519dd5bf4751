#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace tbreak {

// Base for every error the library raises. Input/validation errors derive from
// ValidationError; numerical failures derive from NumericalError so the CLI
// can map them onto distinct exit codes.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class ValidationError : public Error {
public:
    using Error::Error;
};

class NumericalError : public Error {
public:
    using Error::Error;
};

class DimensionMismatch : public ValidationError {
public:
    using ValidationError::ValidationError;
};

class NonFiniteEntry : public ValidationError {
public:
    using ValidationError::ValidationError;
};

class IndexOutOfRange : public ValidationError {
public:
    using ValidationError::ValidationError;
};

class WrongPerturbationKind : public ValidationError {
public:
    using ValidationError::ValidationError;
};

class InvalidBand : public ValidationError {
public:
    using ValidationError::ValidationError;
};

class ResonanceOutsideBand : public ValidationError {
public:
    using ValidationError::ValidationError;
};

class OrthogonalSelection : public ValidationError {
public:
    using ValidationError::ValidationError;
};

class NonHermitianPerturbation : public ValidationError {
public:
    NonHermitianPerturbation(double max_deviation, std::size_t row, std::size_t col, double time);

    double max_deviation() const noexcept { return max_deviation_; }
    std::size_t row() const noexcept { return row_; }
    std::size_t col() const noexcept { return col_; }
    double time() const noexcept { return time_; }

private:
    double max_deviation_;
    std::size_t row_;
    std::size_t col_;
    double time_;
};

class NonFiniteIntegrand : public NumericalError {
public:
    using NumericalError::NumericalError;
};

class UnitarityLost : public NumericalError {
public:
    UnitarityLost(double drift, double tolerance);
    double drift() const noexcept { return drift_; }

private:
    double drift_;
};

// Raised only when a caller escalates an unconverged quadrature (strict mode).
class ToleranceNotReached : public NumericalError {
public:
    using NumericalError::NumericalError;
};

} // namespace tbreak
