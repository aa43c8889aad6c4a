#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace overlap {

/// Base of every error raised by the toolkit. The CLI maps subclasses to exit codes.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// A required input column is absent. `column()` names it.
class SchemaError : public Error {
public:
    explicit SchemaError(std::string column)
        : Error("missing required column: " + column), column_(std::move(column)) {}

    const std::string& column() const noexcept { return column_; }

private:
    std::string column_;
};

/// A data row could not be parsed or violates a Turn invariant.
/// Row numbers are 1-based record numbers with the header being record 1.
class RowError : public Error {
public:
    RowError(std::size_t row, const std::string& what)
        : Error("row " + std::to_string(row) + ": " + what), row_(row) {}

    std::size_t row() const noexcept { return row_; }

private:
    std::size_t row_;
};

/// end <= start and similar value-level invariant violations.
class ValidationError : public Error {
public:
    using Error::Error;
};

/// Row-level validation failure (end_ms <= start_ms).
class RowValidationError : public RowError {
public:
    using RowError::RowError;
};

/// Caller broke an operation precondition.
class UsageError : public Error {
public:
    using Error::Error;
};

class NotFoundError : public Error {
public:
    using Error::Error;
};

class ConfigError : public Error {
public:
    using Error::Error;
};

class TrainingError : public Error {
public:
    using Error::Error;
};

/// A metric is undefined for the given input (e.g. single-class labels).
class UndefinedMetricError : public Error {
public:
    using Error::Error;
};

/// A trainer response violated the wire contract. `field()` is the first invalid field path.
class ProtocolError : public Error {
public:
    ProtocolError(std::string field, std::string detail, std::string raw_message = {})
        : Error("protocol error at '" + field + "': " + detail),
          field_(std::move(field)),
          detail_(std::move(detail)),
          raw_message_(std::move(raw_message)) {}

    const std::string& field() const noexcept { return field_; }
    const std::string& detail() const noexcept { return detail_; }
    /// The offending message as received, when available.
    const std::string& raw_message() const noexcept { return raw_message_; }

private:
    std::string field_;
    std::string detail_;
    std::string raw_message_;
};

/// Wraps a failure inside one cross-validation fold; the cause is attached as a nested exception.
class FoldError : public Error {
public:
    FoldError(int fold, const std::string& what)
        : Error((fold < 0 ? std::string("test run") : "fold " + std::to_string(fold)) + ": " + what), fold_(fold) {}

    /// Validation fold index, or -1 for the final test-fold run.
    int fold() const noexcept { return fold_; }

private:
    int fold_;
};

/// The trainer backend failed: nonzero exit, timeout, transport failure or an explicit error reply.
class BackendError : public Error {
public:
    BackendError(const std::string& what, std::string diagnostics = {})
        : Error(what), diagnostics_(std::move(diagnostics)) {}

    const std::string& diagnostics() const noexcept { return diagnostics_; }

private:
    std::string diagnostics_;
};

}  // namespace overlap
